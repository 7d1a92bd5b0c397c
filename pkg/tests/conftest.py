import pytest

# criterion id -> (passed, detail); filled by the acceptance suite
ACCEPTANCE = {}


@pytest.fixture
def record():
    def _record(cid, passed, detail):
        ACCEPTANCE[cid] = (bool(passed), detail)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section('acceptance criteria')
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c[1:])):
        passed, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"{cid} {'PASS' if passed else 'FAIL'}: {detail}")
