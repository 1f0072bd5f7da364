import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    1: "functional preservation",
    2: "RZ negligibility",
    3: "run-count reduction",
    4: "amplification trend",
    5: "TVD/Pearson units",
    6: "trajectory vs density oracle",
    7: "mitigation direction",
    8: "analyses worked example",
    9: "parser/emitter round-trip",
    10: "determinism",
}
_outcomes: dict[int, list[bool]] = {}
_details: dict[int, list[str]] = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_c(\d\d)_", report.nodeid)
    if not m:
        return
    if report.when == "call" or report.outcome == "failed":
        n = int(m.group(1))
        _outcomes.setdefault(n, []).append(report.outcome == "passed")
        _details.setdefault(n, []).extend(v for k, v in report.user_properties if k == "detail")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in CRITERIA.items():
        runs = _outcomes.get(n)
        status = "NOT RUN" if runs is None else ("PASS" if all(runs) else "FAIL")
        detail = "; ".join(_details.get(n, []))
        terminalreporter.write_line(f"criterion {n:2d} ({name}): {status}" + (f"  [{detail}]" if detail else ""))
