import pytest

# (criterion number, passed, detail) appended by tests/test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record_criterion():
    def record(num, ok, detail=""):
        ACCEPTANCE.append((num, bool(ok), detail))
        print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return record
