import numpy as np

from gss.core.config import Settings
from gss.core.errors import (
    ConstructionError,
    DesignError,
    EmptySearchError,
    GraphValidationError,
    GSSError,
    NotEnumerableError,
    ReproductionFailure,
)
from gss.core.rng import derive_rng, stable_key


class TestRng:
    def test_same_key_same_stream(self):
        a = derive_rng(2012, "G4|centre-1", 5).random(4)
        b = derive_rng(2012, "G4|centre-1", 5).random(4)
        np.testing.assert_array_equal(a, b)

    def test_keys_separate_streams(self):
        a = derive_rng(2012, "G4|centre-1", 5).random()
        assert a != derive_rng(2012, "G4|centre-1", 6).random()
        assert a != derive_rng(2012, "G1|centre-1", 5).random()
        assert a != derive_rng(2013, "G4|centre-1", 5).random()

    def test_stable_key(self):
        assert stable_key(7) == 7
        assert stable_key("cell") == stable_key("cell")
        assert 0 <= stable_key("cell") < 2 ** 32


class TestErrors:
    def test_exit_codes(self):
        assert GSSError.exit_code == 2
        assert GraphValidationError("bad").exit_code == 2
        assert EmptySearchError("none").exit_code == 3
        assert ReproductionFailure("missed").exit_code == 4

    def test_hierarchy(self):
        assert issubclass(NotEnumerableError, DesignError)
        assert issubclass(DesignError, ValueError)
        assert issubclass(ConstructionError, GSSError)


class TestSettings:
    def test_env_prefix(self, monkeypatch):
        monkeypatch.setenv("GSS_BURN_IN_FACTOR", "7")
        monkeypatch.setenv("GSS_OUTPUT_DIR", "elsewhere")
        s = Settings(_env_file=None)
        assert s.BURN_IN_FACTOR == 7
        assert s.OUTPUT_DIR == "elsewhere"

    def test_defaults(self, monkeypatch):
        monkeypatch.delenv("GSS_EXACT_STATE_CAP", raising=False)
        s = Settings(_env_file=None)
        assert s.EXACT_STATE_CAP == 200_000
        assert s.APP_NAME == "gss"
