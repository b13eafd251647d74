"""Shared fixtures."""

import pytest

from comet_dse.calibration import design_point
from comet_dse.constants import get_constants
from comet_dse.params import DeviceGeometry, MaterialParams, preset_technology


@pytest.fixture
def constants():
    return get_constants("codata")


@pytest.fixture
def printed_constants():
    return get_constants("printed")


@pytest.fixture
def design_material() -> MaterialParams:
    """Ms = 0.3e6 A/m, Ku = 0.5e6 J/m^3, A = 10 pJ/m, alpha = 0.01."""
    point = design_point()
    return MaterialParams(**{k: point[k] for k in ("ms_pma", "ku_pma", "a_ex", "alpha")})


@pytest.fixture
def geometry_15nm() -> DeviceGeometry:
    return preset_technology("15nm")[2]


@pytest.fixture
def geometry_7nm() -> DeviceGeometry:
    return preset_technology("7nm")[2]


@pytest.fixture(autouse=True)
def _isolate_environment(monkeypatch, tmp_path):
    """Keep COMET_* variables and stray .env files from leaking into tests."""
    for name in ("COMET_CONFIG_DIR", "COMET_JOBS", "COMET_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
