import pytest

from artifact.quantum_codes import make_poly_code, steane_code


@pytest.fixture(scope="session")
def steane():
    return steane_code()


@pytest.fixture(scope="session")
def poly5():
    return make_poly_code(5, 1)


@pytest.fixture(scope="session")
def poly11():
    return make_poly_code(11, 2)


_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        number = int(report.nodeid.split("test_criterion_")[1][:2])
        detail = dict(report.user_properties).get("detail", "")
        if report.skipped:
            status = "NOT REPRODUCIBLE"
        else:
            status = "PASS" if report.passed else "FAIL"
        if report.failed:
            detail += " | " + report.longrepr.reprcrash.message.splitlines()[0] if hasattr(
                report.longrepr, "reprcrash") else ""
        _ACCEPTANCE.append((number, status, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:2d}: {status:16s} {detail}")
