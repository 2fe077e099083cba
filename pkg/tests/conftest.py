import pytest

from optreins import ProblemSpec, exponential, identity, var_step

EXAMPLE_LAMBDAS = (0.3, 0.4, 0.3)


@pytest.fixture(scope="session")
def exp_loss():
    return exponential(0.001)


@pytest.fixture(scope="session")
def var05():
    return var_step(0.05)


@pytest.fixture
def example_spec(exp_loss, var05):
    """VaR risk measure, expected-value premium, multipliers (0.3, 0.4, 0.3)."""

    def build(beta, lambdas=EXAMPLE_LAMBDAS, loading=0.2):
        return ProblemSpec(beta, loading, var05, identity(), exp_loss, lambdas)

    return build


ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
