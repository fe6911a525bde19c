from __future__ import annotations

from pathlib import Path

import pytest

from szseq.gf2 import parse_matrix

DATA = Path(__file__).parent / "data"


def load_matrices(name: str):
    """All matrices stored back to back in a dots-format data file."""
    lines = (DATA / name).read_text().splitlines()
    out = []
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        m, used = parse_matrix(lines[i:])
        out.append(m)
        i += used
    return out


@pytest.fixture
def q2_template():
    return load_matrices("q2_template_32.txt")


@pytest.fixture
def sobol_pair():
    return load_matrices("sobol_pair_32.txt")


# acceptance results: criterion number -> list of (part, passed, detail)
ACCEPTANCE: dict[int, list[tuple[str, bool, str]]] = {}
TITLES = {
    1: "template reproduction",
    2: "alphabet counts",
    3: "exhaustive-search counts",
    4: "net validation",
    5: "nesting",
    6: "ensembling",
    7: "compact generator",
    8: "fast path",
    9: "integration benchmark",
    10: "discrepancy",
}


def record(criterion: int, part: str, passed: bool, detail: str = "") -> bool:
    ACCEPTANCE.setdefault(criterion, []).append((part, bool(passed), detail))
    return bool(passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[c]
        ok = all(p for _, p, _ in parts)
        failed = [name for name, p, _ in parts if not p]
        line = f"{'PASS' if ok else 'FAIL'} criterion {c}: {TITLES[c]}"
        if failed:
            line += f" (failed parts: {', '.join(failed)})"
        terminalreporter.write_line(line)
        for name, p, detail in parts:
            terminalreporter.write_line(f"    {'ok ' if p else 'BAD'} {name}: {detail}")
