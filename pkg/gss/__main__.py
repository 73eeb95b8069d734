import sys

from gss.main import main

sys.exit(main())
