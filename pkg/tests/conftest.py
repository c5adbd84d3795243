import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[str, list[str]] = {}


def pytest_runtest_logreport(report):
    match = re.search(r"test_criterion_(\d+)_(\w+)", report.nodeid)
    if not match:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        key = f"{int(match.group(1)):02d} {match.group(2)}"
        _CRITERIA.setdefault(key, []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        outcomes = _CRITERIA[key]
        status = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        number, name = key.split(" ", 1)
        terminalreporter.write_line(f"criterion {number}: {status}  {name.replace('_', ' ')}")
