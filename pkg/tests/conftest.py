"""One PASS/FAIL line per acceptance criterion at the end of the run."""
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

_results: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(cid, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("acceptance")
    if mark is None or call.when not in ("setup", "call"):
        return
    cid, title = mark.args
    failed = call.excinfo is not None
    prev = _results.get(cid, (title, True))
    _results[cid] = (title, prev[1] and not failed)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_results, key=lambda c: int(c[1:])):
        title, ok = _results[cid]
        terminalreporter.write_line(f"ACCEPTANCE {cid} {'PASS' if ok else 'FAIL'}  {title}")
