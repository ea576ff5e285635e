"""Shared pytest fixtures and configuration."""

import tempfile
from pathlib import Path

import pytest

from src.dsl import load_builtin, parse_model

ORIGIN = (0.0, 0.0, 0.0)

EXAMPLE25_TEXT = """\
model "example25"
n = 1
coords = x, y, z
frame E1 = (exp(z), 0, y*exp(z))
frame E2 = (0, exp(z), 0)
frame E3 = (0, 0, 1)
epsilon = (+1, -1, +1)
phi E1 = E2 ; phi E2 = E1 ; phi E3 = 0
xi = E3
"""

PARA_SASAKIAN_TEXT = """\
model "heisenberg3"
n = 1
coords = x, y, z
frame E1 = (1, 0, 2*y)
frame E2 = (0, 1, 0)
frame E3 = (0, 0, 1)
epsilon = (+1, -1, +1)
phi E1 = E2 ; phi E2 = E1 ; phi E3 = 0
xi = E3
alpha_ref = 1
beta_ref = 0
"""


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture(scope="session")
def example25_spec():
    """The embedded three-dimensional model with α = ½e^{2z} and β = 1."""
    return load_builtin("example25")


@pytest.fixture(scope="session")
def flat3_spec():
    """The flat para-cosymplectic comparison model."""
    return load_builtin("flat3")


@pytest.fixture(scope="session")
def para_sasakian_spec():
    """Para-Sasakian model with [E1, E2] = −2ξ, so α = 1 and β = 0."""
    return parse_model(PARA_SASAKIAN_TEXT)


@pytest.fixture
def origin():
    return ORIGIN


@pytest.fixture
def example25_text():
    """Model text of example25 without the reference tables."""
    return EXAMPLE25_TEXT


@pytest.fixture
def write_model(temp_dir):
    """Write model text to a file and return its path."""

    def _write(text: str, name: str = "test.model") -> Path:
        path = temp_dir / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
