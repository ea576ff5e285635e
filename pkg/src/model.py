"""Structure tensors of an almost paracontact metric manifold at a point.

Every tensor is kept as a second-order `JetArray` in coordinate components:

- `frame[i, a]` is E_i^a and `coframe[a, i]` is θ^i_a,
- `g[a, b]` and `g_inv[a, b]` are the metric and its inverse,
- `phi[a, b]` is φ^a_b, so that φ(∂_b) = phi[a, b] ∂_a,
- `xi[a]` and `eta[a]` are the Reeb field and its dual form.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src import constants
from src.dsl import ModelSpec, eval_expr
from src.jets import JetArray, SingularMatrixError, jet_einsum, jet_matrix_inverse

logger = logging.getLogger(__name__)


class SingularFrameError(SingularMatrixError):
    """Raised when the frame fields are not independent at a point."""


@dataclass(frozen=True)
class TensorAtPoint:
    """Components of an (r, s) tensor at one point.

    Contravariant axes come first, followed by the covariant ones.
    """

    valence: tuple[int, int]
    components: np.ndarray
    point: tuple[float, ...]

    def __post_init__(self):
        dim = len(self.point)
        rank = self.valence[0] + self.valence[1]
        if self.components.shape != (dim,) * rank:
            raise ValueError(
                f"valence {self.valence} in dimension {dim} needs shape {(dim,) * rank},"
                f" got {self.components.shape}"
            )

    def max_norm(self) -> float:
        if self.components.size == 0:
            return 0.0
        return float(np.max(np.abs(self.components)))


@dataclass(frozen=True, eq=False)
class PointStructure:
    spec: ModelSpec
    point: tuple[float, ...]
    frame: JetArray
    coframe: JetArray
    g: JetArray
    g_inv: JetArray
    phi: JetArray
    xi: JetArray
    eta: JetArray

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def epsilon(self) -> np.ndarray:
        return np.array(self.spec.epsilon, dtype=float)


def evaluate_frame(spec: ModelSpec, point: Sequence[float]) -> JetArray:
    """Jets of the frame components E_i^a at `point`."""
    return JetArray.from_jets([[eval_expr(e, point) for e in row] for row in spec.frame])


def assemble(spec: ModelSpec, point: Sequence[float]) -> PointStructure:
    """Build every structure tensor of `spec` at `point`.

    Raises:
        SingularFrameError: when the frame matrix cannot be inverted.
    """
    point = tuple(float(x) for x in point)
    frame = evaluate_frame(spec, point)
    try:
        coframe = jet_matrix_inverse(frame, constants.MAX_INVERSE_CONDITION, point)
    except SingularMatrixError as e:
        raise SingularFrameError(e.condition, point) from e

    eps = np.array(spec.epsilon, dtype=float)
    g = jet_einsum("ai,i,bi->ab", coframe, eps, coframe)
    g = (g + g.transpose(1, 0)) * 0.5
    g_inv = jet_matrix_inverse(g, constants.MAX_INVERSE_CONDITION, point)
    g_inv = (g_inv + g_inv.transpose(1, 0)) * 0.5

    phi_frame = np.array(spec.phi_frame, dtype=float)
    phi = jet_einsum("ja,ji,bi->ab", frame, phi_frame, coframe)
    xi = frame[spec.xi_index]
    eta = jet_einsum("ab,b->a", g, xi)

    return PointStructure(spec, point, frame, coframe, g, g_inv, phi, xi, eta)


def metric_signature(g: np.ndarray, threshold: float = constants.SIGNATURE_THRESHOLD) -> tuple[int, int]:
    """Numbers of positive and negative eigenvalues of a symmetric matrix."""
    eigenvalues = np.linalg.eigvalsh(g)
    return int(np.sum(eigenvalues > threshold)), int(np.sum(eigenvalues < -threshold))


@dataclass(frozen=True)
class CompatibilityReport:
    phi_xi: float
    eta_phi: float
    eta_xi: float
    phi_squared: float
    metric: float
    signature: tuple[int, int]

    def residuals(self) -> dict[str, float]:
        return {
            "phi-xi": self.phi_xi,
            "eta-phi": self.eta_phi,
            "eta-xi": self.eta_xi,
            "phi-squared": self.phi_squared,
            "metric-compatibility": self.metric,
        }


def check_compatibility(ps: PointStructure) -> CompatibilityReport:
    """Residuals of the almost paracontact axioms and metric compatibility."""
    g = ps.g.value
    phi = ps.phi.value
    xi = ps.xi.value
    eta = ps.eta.value
    identity = np.eye(ps.dim)
    report = CompatibilityReport(
        phi_xi=max_abs(phi @ xi),
        eta_phi=max_abs(eta @ phi),
        eta_xi=abs(float(eta @ xi) - 1.0),
        phi_squared=max_abs(phi @ phi - identity + np.outer(xi, eta)),
        metric=max_abs(phi.T @ g @ phi + g - np.outer(eta, eta)),
        signature=metric_signature(g),
    )
    logger.debug("Compatibility residuals at %s: %s", ps.point, report.residuals())
    return report


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if np.size(a) else 0.0
