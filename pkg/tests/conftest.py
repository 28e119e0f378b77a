import numpy as np
import pytest

from driftlab.bench import build_meta_corpus
from driftlab.features import WindowSpec
from driftlab.proto import TrainConfig, train_meta_detector


@pytest.fixture(scope="session")
def tiny_spec() -> WindowSpec:
    return WindowSpec(n=5, L=20)


@pytest.fixture(scope="session")
def tiny_corpus(tiny_spec):
    return build_meta_corpus(tiny_spec, per_class=30, seed=11)


@pytest.fixture(scope="session")
def tiny_detector(tiny_spec, tiny_corpus):
    """Small but genuinely trained detector shared across tests."""
    cfg = TrainConfig(episodes=400, n_support=5, n_query=10, seed=11)
    detector, _ = train_meta_detector(tiny_corpus, tiny_spec, config=cfg)
    return detector


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


# One line per acceptance criterion, echoed after the test summary so the
# verdicts survive pytest's output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
