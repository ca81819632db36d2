import os
import pathlib

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("ci", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(autouse=True)
def clean_sumverify_env():
    """Hide SUMVERIFY_* variables from each test and undo whatever .env loading added"""
    saved = dict(os.environ)
    for name in [n for n in os.environ if n.startswith("SUMVERIFY_")]:
        del os.environ[name]
    yield
    os.environ.clear()
    os.environ.update(saved)


@pytest.fixture
def repo_root():
    return pathlib.Path(__file__).resolve().parent
