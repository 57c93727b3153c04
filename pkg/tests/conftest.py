"""Shared pytest hooks: echo the acceptance report after the run."""

# criterion id (e.g. "8a") -> one-line verdict, filled by test_acceptance.py
REPORT: dict[str, str] = {}


def _order(cid: str):
    digits = "".join(ch for ch in cid if ch.isdigit())
    return int(digits), cid


def pytest_terminal_summary(terminalreporter):
    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(REPORT, key=_order):
        terminalreporter.write_line(REPORT[cid])
