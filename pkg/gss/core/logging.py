import sys
from typing import Optional

from loguru import logger


def setup_logging(level: str = "INFO", log_file: Optional[str] = None) -> None:
    """
    Replace loguru's default sink with a stderr sink at the given level,
    plus an optional rotating file sink
    """
    logger.remove()
    logger.add(
        sys.stderr,
        level=level,
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {name}:{function} - {message}",
    )
    if log_file:
        logger.add(log_file, level=level, rotation="10 MB", retention=5)
    logger.debug(f"Logging configured at level {level}")
