import pytest

from trimer_poles.basis import BasisSpec, build_basis

CRITERIA = []

# A compact basis for tests that check structure rather than convergence.
SMALL = BasisSpec(n_r=5, r_first=0.3, r_last=6.0, n_R=5, R_first=0.3, R_last=10.0,
                  cr_n_r=3, cr_r_first=0.4, cr_r_last=3.0, cr_n_R=2,
                  cr_R_first=0.3, cr_R_last=2.0)


@pytest.fixture(scope="session")
def small_basis():
    return build_basis(SMALL)


@pytest.fixture(scope="session")
def default_basis():
    return build_basis()


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion."""
    def record(label, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        CRITERIA.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
