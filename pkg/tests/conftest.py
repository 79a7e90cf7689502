import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: dict[str, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def acceptance():
    """``acceptance(criterion, label, ok, detail)`` records one sub-check."""

    def record(criterion: str, label: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE.setdefault(criterion, []).append((label, bool(ok), detail))
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_ACCEPTANCE, key=lambda c: (len(c), c)):
        checks = _ACCEPTANCE[criterion]
        verdict = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        parts = "; ".join(f"{label} {'ok' if ok else 'FAILED'}{': ' + detail if detail else ''}" for label, ok, detail in checks)
        terminalreporter.write_line(f"criterion {criterion}: {verdict} | {parts}")
