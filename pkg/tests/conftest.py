from pathlib import Path

import numpy as np
import pytest

from somnb.dataset import fixture_path, load_feature_csv

DATA = Path(__file__).parent / "data"

# 4 corners of a square in the first two features, 12 within-blob sds apart
BLOB_CENTERS = np.array(
    [
        [0.0, 0.0, 0.0, 0.0],
        [12.0, 0.0, 0.0, 0.0],
        [0.0, 12.0, 0.0, 0.0],
        [12.0, 12.0, 0.0, 0.0],
    ]
)


def make_blobs(n, seed, sd=1.0):
    """``n`` rows spread round-robin over the four blobs; returns (rows, blob ids)."""
    rng = np.random.default_rng(seed)
    blob = np.arange(n) % 4
    return BLOB_CENTERS[blob] + rng.normal(0.0, sd, size=(n, 4)), blob


@pytest.fixture(scope="session")
def table2_rows():
    return load_feature_csv(fixture_path("table2.csv"))


@pytest.fixture(scope="session")
def central_java_rows():
    return load_feature_csv(fixture_path("central_java_synthetic_features.csv"))


# -- acceptance criteria summary -------------------------------------------

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the terminal summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[label] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: int(s.split()[0][2:])):
        verdict = "PASS" if _CRITERIA[label] == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {label}")
