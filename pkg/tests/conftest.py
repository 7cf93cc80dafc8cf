import pytest
from hypothesis import HealthCheck, settings

from nof1engine import data

settings.register_profile(
    "ci",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def demo_model():
    return data.demo_prior_model()


@pytest.fixture(scope="session")
def demo_profile():
    return data.demo_profile()


@pytest.fixture(scope="session")
def demo_candidates():
    return data.demo_candidates()
