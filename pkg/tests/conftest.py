"""Shared test configuration: acceptance summary reporting."""

import sys

# one line per acceptance check, printed after the test run
ACCEPTANCE_LINES: list = []


def record(criterion: int, name: str, passed: bool, detail: str = "") -> None:
    mark = "PASS" if passed else "FAIL"
    tail = f"  [{detail}]" if detail else ""
    ACCEPTANCE_LINES.append(f"criterion {criterion:2d}  {mark}  {name}{tail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


def pytest_configure(config):
    # src layout: make the package importable without an install step
    import pathlib

    root = pathlib.Path(__file__).resolve().parents[1]
    src = str(root / "src")
    if src not in sys.path:
        sys.path.insert(0, src)
