import numpy as np
import pytest

from core import designs, gentle_povm, qmat


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow statistical tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng() -> np.random.Generator:
    return qmat.make_rng(1234)


@pytest.fixture(scope="session")
def qubit_design() -> designs.TwoDesign:
    return designs.build_mub_design(2)


@pytest.fixture(scope="session")
def qubit_povm(qubit_design) -> gentle_povm.GentlePovm:
    return gentle_povm.GentlePovm.from_alpha(qubit_design, 0.2)
