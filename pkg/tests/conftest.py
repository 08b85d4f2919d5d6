import os

import numpy as np
import pytest

import jlopt


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "fullscale: full-scale simulation runs (enable with JLOPT_FULL_SCALE=1)"
    )


def pytest_collection_modifyitems(config, items):
    if os.environ.get("JLOPT_FULL_SCALE", "") in ("", "0"):
        skip = pytest.mark.skip(reason="set JLOPT_FULL_SCALE=1 to run full-scale checks")
        for item in items:
            if "fullscale" in item.keywords:
                item.add_marker(skip)


@pytest.fixture(scope="session")
def small_instance():
    """The (n=5, d=8, k=3) instance used by the gradient-fidelity checks."""
    data = jlopt.make_unit_dataset(5, 8, seed=3)
    return jlopt.ObjectiveContext(data=data, k=3, eps=0.5)


@pytest.fixture(scope="session")
def acceptance_instance():
    """The (n=20, d=30, k=10) instance with its calibrated threshold."""
    data = jlopt.make_unit_dataset(20, 30, seed=7)
    c = jlopt.calibrate_epsilon_constant(20, 10)
    eps = jlopt.jl_epsilon(20, 10, c)
    return jlopt.ObjectiveContext(data=data, k=10, eps=eps)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
