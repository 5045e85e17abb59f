"""Shared fixtures: scaled-down configs and session-cached calibrations."""

import pytest

from nvlock import engine
from nvlock.config import load_config


def make_config(preset="sfm", **overrides):
    """Preset config with overrides; defaults to a 10x reduced sample clock."""
    overrides.setdefault("scale_factor", 10.0)
    return load_config(preset, overrides)


@pytest.fixture(scope="session")
def sfm_cal():
    return engine.auto_calibrate(make_config("sfm"))


@pytest.fixture(scope="session")
def tfm_cal():
    return engine.auto_calibrate(make_config("tfm"))
