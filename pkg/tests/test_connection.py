"""Tests for src.connection module."""

import math

import numpy as np
import pytest

from src.connection import (
    christoffel,
    covariant_derivative,
    extract_alpha_beta,
    frame_connection_christoffel,
    frame_connection_koszul,
)
from src.model import assemble

POINTS = [(0.0, 0.0, 0.0), (0.3, -0.2, 0.4), (-0.9, 0.7, -0.6)]


class TestChristoffel:
    """Test cases for the coordinate Christoffel symbols."""

    def test_flat_model_has_no_christoffel_symbols(self, flat3_spec, origin):
        ch = christoffel(assemble(flat3_spec, origin))

        assert np.all(ch.gamma == 0.0)
        assert np.all(ch.dgamma == 0.0)

    @pytest.mark.parametrize("point", POINTS)
    def test_symmetric_lower_indices(self, example25_spec, point):
        gamma = christoffel(assemble(example25_spec, point)).gamma

        np.testing.assert_allclose(gamma, gamma.transpose(0, 2, 1), atol=1e-14)

    @pytest.mark.parametrize("point", POINTS)
    def test_metric_is_parallel(self, example25_spec, point):
        """∇g = 0 for the Levi-Civita connection."""
        nabla_g = covariant_derivative(example25_spec, point, lambda ps: ps.g, (0, 2))

        assert nabla_g.valence == (0, 3)
        assert nabla_g.max_norm() < 1e-9


class TestFrameConnection:
    """Test cases for the Koszul frame connection."""

    @pytest.mark.parametrize("point", POINTS)
    def test_nabla_e2_e3(self, example25_spec, point):
        """∇_{E2}E3 = -½e^{2z}E1 - E2."""
        z = point[2]
        omega = frame_connection_koszul(example25_spec, point).omega

        np.testing.assert_allclose(omega[:, 1, 2], [-0.5 * math.exp(2 * z), -1.0, 0.0], atol=1e-12)

    @pytest.mark.parametrize("point", POINTS)
    def test_bracket_e1_e2(self, example25_spec, point):
        """[E1, E2] = y e^z E2 - e^{2z} E3."""
        _, y, z = point
        brackets = frame_connection_koszul(example25_spec, point).brackets

        np.testing.assert_allclose(
            brackets[0, 1], [0.0, y * math.exp(z), -math.exp(2 * z)], atol=1e-12
        )
        np.testing.assert_allclose(brackets[1, 0], -brackets[0, 1])

    @pytest.mark.parametrize("point", POINTS)
    def test_koszul_agrees_with_christoffel(self, example25_spec, point):
        ps = assemble(example25_spec, point)
        koszul = frame_connection_koszul(example25_spec, point).omega

        np.testing.assert_allclose(frame_connection_christoffel(ps, christoffel(ps)), koszul, atol=1e-8)


class TestAlphaBeta:
    """Test cases for extract_alpha_beta."""

    def test_example25_at_origin(self, example25_spec, origin):
        ab = extract_alpha_beta(example25_spec, origin)

        assert ab.alpha == pytest.approx(0.5, abs=1e-12)
        assert ab.beta == pytest.approx(1.0, abs=1e-12)
        assert ab.residual < 1e-9

    @pytest.mark.parametrize("point", POINTS)
    def test_example25_derivatives(self, example25_spec, point):
        """α = ½e^{2z} and β = 1, so dα = e^{2z}dz, dβ = 0 and ξ(α) = e^{2z}."""
        z = point[2]
        ab = extract_alpha_beta(example25_spec, point)

        assert ab.alpha == pytest.approx(0.5 * math.exp(2 * z))
        assert ab.beta == pytest.approx(1.0)
        np.testing.assert_allclose(ab.d_alpha, [0.0, 0.0, math.exp(2 * z)], atol=1e-10)
        np.testing.assert_allclose(ab.d_beta, 0.0, atol=1e-10)
        assert ab.xi_alpha == pytest.approx(math.exp(2 * z))
        assert ab.xi_beta == pytest.approx(0.0, abs=1e-10)

    def test_flat3(self, flat3_spec, origin):
        ab = extract_alpha_beta(flat3_spec, origin)

        assert ab.alpha == 0.0
        assert ab.beta == 0.0
        assert ab.residual == 0.0

