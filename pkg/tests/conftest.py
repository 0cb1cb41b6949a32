import pytest

from sublinlaw.ambiguity import AmbiguitySet, Gaussian, Uniform, point_mass


@pytest.fixture
def two_points():
    return AmbiguitySet((point_mass(0.0), point_mass(1.0)))


@pytest.fixture
def two_uniforms():
    return AmbiguitySet((Uniform(0, 1), Uniform(0, 2)))


@pytest.fixture
def two_gaussians():
    return AmbiguitySet((Gaussian(-1, 1), Gaussian(1, 1)))


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES.append


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
