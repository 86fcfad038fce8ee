import time

import numpy as np
import pytest

from mcudi.data import Batch, scale_batches
from mcudi.ground_truth import DEFAULT_SEEDS, label_all_batches
from mcudi.synthetic import churn_fixture_config, generate_synthetic_stream

CHURN_STREAM_SEED = 7

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, text = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _criteria[number] = (text, rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        text, outcome = _criteria[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {text}")


@pytest.fixture(scope="session")
def churn_stream():
    return generate_synthetic_stream(churn_fixture_config(), seed=CHURN_STREAM_SEED)


@pytest.fixture(scope="session")
def churn_batches(churn_stream):
    scaled, _ = scale_batches(churn_stream.batches)
    return scaled


@pytest.fixture(scope="session")
def churn_truth(churn_batches):
    """Ground truth for the churn fixture with the default ten seeds.

    Expensive (about 100k trees), so it is shared; the build time is kept for
    the runtime budget of the detection-accuracy criterion.
    """
    start = time.perf_counter()
    truth = label_all_batches(churn_batches, seeds=DEFAULT_SEEDS)
    return truth, time.perf_counter() - start


def make_batch(period_id, X, y=None):
    return Batch(period_id, np.asarray(X, dtype=float), None if y is None else np.asarray(y))


def linear_batches(n_periods=4, n=200, d=4, seed=0, shifts=None):
    """Small labeled batches: label = x0 + x1 > 0, optional per-period shifts."""
    rng = np.random.default_rng(seed)
    out = []
    for p in range(n_periods):
        Z = rng.standard_normal((n, d))
        y = (Z[:, 0] + Z[:, 1] > 0).astype(int)
        X = Z.copy()
        if shifts and p in shifts:
            X = X + shifts[p]
        out.append(Batch(p, X, y))
    return out
