import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA, key=lambda k: int(k.split(".")[0])):
        ok, detail = CRITERIA[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {key} {detail}")
