import warnings

import numpy as np
import pytest
from hypothesis import settings

from fwm_sim.model import ModelConfig, validate_config

settings.register_profile("fwm", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("fwm")


@pytest.fixture
def cfg():
    return validate_config(ModelConfig())


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


@pytest.fixture(autouse=True)
def _quiet_probe_warning():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="rabi_P exceeds rabi_F")
        yield
