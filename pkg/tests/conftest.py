import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

settings.register_profile('default', max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile('thorough', max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.getenv('HYPOTHESIS_PROFILE', 'default'))


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: Monte Carlo runs that take more than a few seconds')


@pytest.fixture(autouse=True)
def _float_faults():
    old = np.seterr(over='warn', invalid='warn', divide='warn')
    yield
    np.seterr(**old)


@pytest.fixture
def settings_manager(tmp_path, monkeypatch):
    from services.settings_manager import SettingsManager
    monkeypatch.delenv('MACDONALD_KIT_SETTINGS', raising=False)
    return SettingsManager(path=str(tmp_path / 'macdonald_kit.json'))
