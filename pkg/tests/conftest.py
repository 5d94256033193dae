import numpy as np
import pytest

from flipkit.index import DescriptorRecord, IndexConfig


def random_records(rng, n, config=IndexConfig(), n_labels=4, duplicates=0.0, coords=True):
    """Random but well-formed records; a ``duplicates`` fraction copy an earlier descriptor."""
    n_bins = config.L - 1
    records = []
    for i in range(n):
        if records and rng.random() < duplicates:
            src = records[rng.integers(len(records))]
            raw = tuple(c.copy() for c in src.raw_counts)
        else:
            raw = tuple(rng.integers(0, 50, n_bins) * (rng.random(n_bins) > 0.5)
                        for _ in config.scales)
        degenerate = tuple(not c.any() for c in raw)
        flat = np.concatenate([c / c.sum() if c.any() else np.zeros(n_bins) for c in raw])
        records.append(DescriptorRecord(
            label=f"class{rng.integers(n_labels)}",
            name=f"img_{i}.png",
            raw_counts=raw,
            degenerate=degenerate,
            flat=flat,
            coords=(int(rng.integers(0, 5000)), int(rng.integers(0, 5000)))
            if coords and rng.random() < 0.5 else None,
        ))
    return records


@pytest.fixture
def rng():
    return np.random.default_rng(2020)


_acceptance = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome))
    elif report.when == "setup" and report.skipped and "test_acceptance.py" in report.nodeid:
        _acceptance.append((report.nodeid.split("::")[-1], "skipped"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance:
        verdict = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{verdict:<8} {name}")
