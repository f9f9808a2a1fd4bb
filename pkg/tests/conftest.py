import pytest

from mertens_bounds import zeta as Z

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def zero_table_5000():
    """Zeros of zeta up to height 5000 with residues attached."""
    return Z.residues(Z.find_zeros(5000.0))


@pytest.fixture
def record():
    """Store one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def _record(key, ok, detail):
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[key] = line
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split()[0]), k)):
            terminalreporter.write_line(ACCEPTANCE[key])
