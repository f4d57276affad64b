import sys
from pathlib import Path

import numpy as np
import pytest

from wembsim.embeddings import EmbeddingTable

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance-criterion line; printed in the terminal summary."""

    def record(name, passed, detail=""):
        _CRITERIA.append((name, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}" + (f"  ({detail})" if detail else ""))


@pytest.fixture
def toy_table():
    return EmbeddingTable.from_vectors(
        {
            "man": [1.0, 0.0, 0.0],
            "riding": [0.0, 1.0, 0.0],
            "horse": [0.0, 0.0, 1.0],
            "dog": [1.0, 1.0, 0.0],
            "cat": [0.5, 1.0, 0.2],
            "grass": [0.1, 0.2, 0.9],
            "a": [0.3, 0.3, 0.3],
        },
        name="toy",
    )


@pytest.fixture
def write(tmp_path):
    def _write(name, content, mode="w"):
        path = tmp_path / name
        if mode == "wb":
            path.write_bytes(content)
        else:
            path.write_text(content, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
