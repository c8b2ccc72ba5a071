import re

ACCEPTANCE = {}
_CRITERION = re.compile(r"test_acceptance\.py::test_(A\d+)_")


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m or (report.when != "call" and not report.failed):
        return
    entry = ACCEPTANCE.setdefault(m.group(1), {"ok": True, "measured": []})
    entry["ok"] = entry["ok"] and report.passed
    entry["measured"] += [value for key, value in report.user_properties if key == "measured"]


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda a: int(a[1:])):
        entry = ACCEPTANCE[name]
        status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"{name} {status}: {'; '.join(entry['measured'])}")
