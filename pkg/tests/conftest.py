"""Shared fixtures plus the acceptance-criteria report.

The terminal summary lists one pass/fail line per acceptance test so a
run's compliance is readable at a glance without digging through the
full pytest output.
"""

import pytest

ACCEPTANCE_FILE = "test_acceptance.py"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for outcome in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if ACCEPTANCE_FILE not in nodeid or getattr(report, "when", "call") != "call":
                continue
            name = nodeid.split("::")[-1]
            lines.append((name, outcome.upper()))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(lines):
        mark = "PASS" if outcome == "PASSED" else outcome
        terminalreporter.write_line(f"  [{mark}] {name}")
