import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from uplift_sgt.harness import train_models
from uplift_sgt.models import Classifier, TrainConfig
from uplift_sgt.simulate import SimConfig, generate_history, generate_population

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_config():
    return SimConfig(n_individuals=2000, seed=11)


@pytest.fixture(scope="session")
def small_campaign(small_config):
    return generate_population(small_config)


@pytest.fixture(scope="session")
def small_history(small_config):
    return generate_history(small_config)


@pytest.fixture(scope="session")
def trained_models(small_history):
    return train_models(small_history, TrainConfig(max_iters=300))


def constant_model(p: float, dim: int) -> Classifier:
    """Classifier predicting ``p`` everywhere."""
    w = np.zeros(dim + 1)
    w[-1] = np.log(p / (1 - p))
    return Classifier(weights=w)


def linear_model(coef, intercept=0.0) -> Classifier:
    return Classifier(weights=np.append(np.asarray(coef, dtype=float), intercept))


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record one pass/fail line for an acceptance criterion."""

    def record(number: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
