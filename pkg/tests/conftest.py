import os

# identical results for any thread count; keep the default small on shared machines
os.environ.setdefault("BELLSCOPE_THREADS", "2")

ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
