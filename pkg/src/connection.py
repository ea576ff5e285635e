"""Levi-Civita connection, computed from the metric and from the frame.

`christoffel` differentiates the coordinate metric; `frame_connection_koszul`
only differentiates the frame fields and uses the constant frame metric, so
the two routes check each other.
"""

import logging
import string
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from src.dsl import ModelSpec
from src.jets import JetArray, jet_einsum
from src.model import PointStructure, TensorAtPoint, assemble, evaluate_frame, max_abs

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ChristoffelData:
    """Christoffel symbols Γ^c_ab as a first-order jet.

    `jet.value[c, a, b]` is Γ^c_ab and `jet.grad[c, a, b, e]` is ∂_e Γ^c_ab.
    """

    jet: JetArray

    @property
    def gamma(self) -> np.ndarray:
        return self.jet.value

    @property
    def dgamma(self) -> np.ndarray:
        return self.jet.grad


def christoffel(ps: PointStructure) -> ChristoffelData:
    """Γ^c_ab = ½ g^{ce}(∂_a g_eb + ∂_b g_ae − ∂_e g_ab)."""
    dg = ps.g.derivative()
    gamma = (
        jet_einsum("ce,eba->cab", ps.g_inv, dg)
        + jet_einsum("ce,aeb->cab", ps.g_inv, dg)
        - jet_einsum("ce,abe->cab", ps.g_inv, dg)
    ) * 0.5
    gamma = (gamma + gamma.transpose(0, 2, 1)) * 0.5
    return ChristoffelData(gamma)


@dataclass(frozen=True)
class FrameConnection:
    """Frame brackets and connection coefficients at a point.

    `brackets[i, j, k]` is the E_k component of [E_i, E_j] and
    `omega[k, i, j]` the E_k component of ∇_{E_i} E_j.
    """

    brackets: np.ndarray
    omega: np.ndarray


def frame_brackets(frame: JetArray, coframe: np.ndarray) -> np.ndarray:
    dframe = frame.derivative().value
    coordinate = np.einsum("ib,jab->ija", frame.value, dframe) - np.einsum(
        "jb,iab->ija", frame.value, dframe
    )
    return np.einsum("ija,ak->ijk", coordinate, coframe)


def frame_connection_koszul(spec: ModelSpec, point: Sequence[float]) -> FrameConnection:
    """Connection coefficients from the Koszul formula for a constant frame metric.

    2ε_k ω^k_ij = C_ijk − C_jki + C_kij with C_ijk = g([E_i, E_j], E_k).
    """
    frame = evaluate_frame(spec, point)
    coframe = np.linalg.inv(frame.value)
    brackets = frame_brackets(frame, coframe)
    eps = np.array(spec.epsilon, dtype=float)
    c = brackets * eps
    omega = 0.5 * eps[:, None, None] * (
        np.einsum("ijk->kij", c) - np.einsum("jki->kij", c) + np.einsum("kij->kij", c)
    )
    return FrameConnection(brackets, omega)


def frame_connection_christoffel(ps: PointStructure, ch: ChristoffelData) -> np.ndarray:
    """ω^k_ij obtained by contracting the Christoffel symbols with the frame."""
    frame = ps.frame.value
    dframe = ps.frame.derivative().value
    nabla = np.einsum("ib,jab->ija", frame, dframe) + np.einsum(
        "ib,abc,jc->ija", frame, ch.gamma, frame
    )
    return np.einsum("ija,ak->kij", nabla, ps.coframe.value)


def covariant_derivative_jet(
    ch: ChristoffelData, field: JetArray, valence: tuple[int, int]
) -> JetArray:
    """∇T for a tensor field given as a jet of its components.

    The derivative slot is inserted as the first covariant index, so for
    T of valence (1, 1) the result `r[a, x, b]` is ((∇_x T) ∂_b)^a.
    """
    r, s = valence
    rank = r + s
    if field.ndim != rank:
        raise ValueError(f"valence {valence} does not match a rank {field.ndim} array")
    letters = string.ascii_lowercase
    slots = letters[:rank]
    x, c = letters[rank], letters[rank + 1]
    out = slots[:r] + x + slots[r:]

    result = field.derivative().transpose(
        *range(r), rank, *range(r, rank)
    )
    gamma = ch.jet
    for p in range(r):
        sub = slots[:p] + c + slots[p + 1 :]
        result = result + jet_einsum(f"{slots[p]}{x}{c},{sub}->{out}", gamma, field)
    for q in range(r, rank):
        sub = slots[:q] + c + slots[q + 1 :]
        result = result - jet_einsum(f"{c}{x}{slots[q]},{sub}->{out}", gamma, field)
    return result


def covariant_derivative(
    spec: ModelSpec,
    point: Sequence[float],
    evaluator: Callable[[PointStructure], JetArray],
    valence: tuple[int, int],
    structure: PointStructure | None = None,
    connection: ChristoffelData | None = None,
) -> TensorAtPoint:
    """Covariant derivative of the tensor field produced by `evaluator`.

    `evaluator` receives the assembled structure at `point` and returns the
    components of the field there as a jet of order at least one.
    """
    ps = structure if structure is not None else assemble(spec, point)
    ch = connection if connection is not None else christoffel(ps)
    result = covariant_derivative_jet(ch, evaluator(ps), valence)
    return TensorAtPoint((valence[0], valence[1] + 1), result.value, ps.point)


@dataclass(frozen=True)
class AlphaBeta:
    """The functions α and β at a point, with their first derivatives.

    `d_alpha` and `d_beta` are differentials; `grad_alpha` and `grad_beta`
    are their metric raises. `residual` is the max-norm defect of
    ∇_X ξ = −αφX − β(X − η(X)ξ).
    """

    alpha: float
    beta: float
    d_alpha: np.ndarray
    d_beta: np.ndarray
    grad_alpha: np.ndarray
    grad_beta: np.ndarray
    xi_alpha: float
    xi_beta: float
    residual: float


def nabla_xi(ps: PointStructure, ch: ChristoffelData) -> JetArray:
    """Jet of ∇ξ with `[a, x]` the a-component of ∇_x ξ."""
    return covariant_derivative_jet(ch, ps.xi, (1, 0))


def extract_alpha_beta(
    spec: ModelSpec,
    point: Sequence[float],
    structure: PointStructure | None = None,
    connection: ChristoffelData | None = None,
) -> AlphaBeta:
    """Recover α and β from traces of ∇ξ.

    β = −tr(∇ξ)/2n and α = Σ_i ε_i g(∇_{E_i}ξ, φE_i)/2n. Both are evaluated
    as first-order jets, which yields their differentials as well.
    """
    ps = structure if structure is not None else assemble(spec, point)
    ch = connection if connection is not None else christoffel(ps)
    n = ps.n
    nxi = nabla_xi(ps, ch)

    alpha = jet_einsum("ab,ac,cd,db->", nxi, ps.g, ps.phi, ps.g_inv) * (1.0 / (2 * n))
    beta = jet_einsum("aa->", nxi) * (-1.0 / (2 * n))

    g_inv = ps.g_inv.value
    xi = ps.xi.value
    a, b = float(alpha.value), float(beta.value)
    expected = -a * ps.phi.value - b * (np.eye(ps.dim) - np.outer(xi, ps.eta.value))
    residual = max_abs(nxi.value - expected)

    result = AlphaBeta(
        alpha=a,
        beta=b,
        d_alpha=alpha.grad,
        d_beta=beta.grad,
        grad_alpha=g_inv @ alpha.grad,
        grad_beta=g_inv @ beta.grad,
        xi_alpha=float(xi @ alpha.grad),
        xi_beta=float(xi @ beta.grad),
        residual=residual,
    )
    logger.debug("alpha=%.12g beta=%.12g at %s (residual %.3e)", a, b, ps.point, residual)
    return result
