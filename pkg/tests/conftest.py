import numpy as np
import pytest

import metromax as mm

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance scorecard")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session", autouse=True)
def warm_kernel():
    # compile the jitted sweep once so timed tests measure the model, not the JIT
    sys = mm.MaxAffineSystem([[mm.Piece(terms=(mm.Term(0, 1.0, 1),), const=1.0)]])
    sys.trajectory(np.zeros(1), 2)


@pytest.fixture(scope="session")
def paris_model():
    cfg = mm.LineConfig.from_json(mm.bundled_config("paris_line14"))
    return mm.segmentize(cfg)


@pytest.fixture(scope="session")
def paris_config():
    return mm.LineConfig.from_json(mm.bundled_config("paris_line14"))


def toy_model(t_min, s_min, platforms=None):
    """Synthetic circular line with given per-segment times (seconds)."""
    t_min = np.asarray(t_min, dtype=float)
    s_min = np.asarray(s_min, dtype=float)
    n = len(t_min)
    is_platform = np.zeros(n, dtype=bool)
    if platforms is not None:
        is_platform[list(platforms)] = True
    w_min = np.where(is_platform, 10.0, 0.0)
    w_min = np.minimum(w_min, t_min)  # keep running times nonnegative
    return mm.LineModel(
        lengths=np.full(n, 200.0),
        running_times=t_min - w_min,
        w_min=w_min,
        s_min=s_min,
        is_platform=is_platform,
        node_names=["node%d" % j for j in range(n)],
    )


def random_line(rng, n_max=8):
    """Random small line on a 0.25 s grid so cycle-ratio sums stay exact."""
    n = int(rng.integers(3, n_max + 1))
    t_min = rng.integers(40, 400, size=n) * 0.25
    s_min = rng.integers(40, 400, size=n) * 0.25
    m = int(rng.integers(1, n))
    return toy_model(t_min, s_min), m
