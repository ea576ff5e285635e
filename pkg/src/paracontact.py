"""Paracontact invariants: Nijenhuis torsion, dη, Lie derivatives along ξ and
the residuals of the trans-para-Sasakian equations."""

import logging
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from src import constants
from src.connection import (
    AlphaBeta,
    ChristoffelData,
    christoffel,
    covariant_derivative_jet,
)
from src.dsl import ModelSpec
from src.jets import jet_einsum
from src.model import PointStructure, TensorAtPoint, assemble, max_abs

logger = logging.getLogger(__name__)

StructureType = Literal[
    "para-cosymplectic", "para-kenmotsu-like", "para-sasakian-like", "general"
]


@dataclass(frozen=True)
class StructureInvariants:
    nijenhuis: TensorAtPoint
    deta: TensorAtPoint
    deta_bracket: TensorAtPoint
    lie_g: TensorAtPoint
    lie_phi: TensorAtPoint
    lie_eta: TensorAtPoint
    normality_defect: TensorAtPoint


def _structure(spec: ModelSpec, point: Sequence[float], structure: PointStructure | None) -> PointStructure:
    return structure if structure is not None else assemble(spec, point)


def nijenhuis_tensor(ps: PointStructure) -> np.ndarray:
    """N[c, a, b], the c-component of N(∂_a, ∂_b).

    Coordinate fields commute, so only derivatives of φ appear.
    """
    phi = ps.phi.value
    dphi = ps.phi.derivative().value
    return (
        np.einsum("ea,cbe->cab", phi, dphi)
        - np.einsum("eb,cae->cab", phi, dphi)
        + np.einsum("ce,eab->cab", phi, dphi)
        - np.einsum("ce,eba->cab", phi, dphi)
    )


def deta_coordinate(ps: PointStructure) -> np.ndarray:
    """dη(∂_a, ∂_b) = ½(∂_a η_b − ∂_b η_a)."""
    deta = ps.eta.derivative().value
    return 0.5 * (deta.T - deta)


def deta_bracket(ps: PointStructure) -> np.ndarray:
    """dη(X, Y) = ½(Xη(Y) − Yη(X) − η([X, Y])) on the frame, returned in coordinates."""
    frame = ps.frame.value
    dframe = ps.frame.derivative().value
    eta_frame = jet_einsum("a,ja->j", ps.eta, ps.frame)
    directional = frame @ eta_frame.grad.T
    brackets = np.einsum("ib,jab->ija", frame, dframe) - np.einsum("jb,iab->ija", frame, dframe)
    on_frame = 0.5 * (directional - directional.T - brackets @ ps.eta.value)
    coframe = ps.coframe.value
    return coframe @ on_frame @ coframe.T


def nijenhuis_normality(
    spec: ModelSpec, point: Sequence[float], structure: PointStructure | None = None
) -> tuple[TensorAtPoint, TensorAtPoint]:
    """Nijenhuis torsion of φ and the normality defect N − 2dη⊗ξ."""
    ps = _structure(spec, point, structure)
    n_tensor = nijenhuis_tensor(ps)
    defect = n_tensor - 2.0 * np.einsum("ab,c->cab", deta_coordinate(ps), ps.xi.value)
    return TensorAtPoint((1, 2), n_tensor, ps.point), TensorAtPoint((1, 2), defect, ps.point)


def exterior_deta(
    spec: ModelSpec, point: Sequence[float], structure: PointStructure | None = None
) -> tuple[TensorAtPoint, TensorAtPoint]:
    """dη from the coordinate curl and from the frame bracket formula."""
    ps = _structure(spec, point, structure)
    return (
        TensorAtPoint((0, 2), deta_coordinate(ps), ps.point),
        TensorAtPoint((0, 2), deta_bracket(ps), ps.point),
    )


def lie_derivatives(
    spec: ModelSpec, point: Sequence[float], structure: PointStructure | None = None
) -> tuple[TensorAtPoint, TensorAtPoint, TensorAtPoint]:
    """ℒ_ξ g, ℒ_ξ φ and ℒ_ξ η."""
    ps = _structure(spec, point, structure)
    xi = ps.xi.value
    dxi = ps.xi.derivative().value
    g = ps.g.value
    phi = ps.phi.value
    eta = ps.eta.value
    lie_g = (
        np.einsum("c,abc->ab", xi, ps.g.derivative().value)
        + np.einsum("cb,ca->ab", g, dxi)
        + np.einsum("ac,cb->ab", g, dxi)
    )
    lie_phi = (
        np.einsum("c,abc->ab", xi, ps.phi.derivative().value)
        - np.einsum("cb,ac->ab", phi, dxi)
        + np.einsum("ac,cb->ab", phi, dxi)
    )
    lie_eta = np.einsum("c,ac->a", xi, ps.eta.derivative().value) + np.einsum(
        "c,ca->a", eta, dxi
    )
    return (
        TensorAtPoint((0, 2), lie_g, ps.point),
        TensorAtPoint((1, 1), lie_phi, ps.point),
        TensorAtPoint((0, 1), lie_eta, ps.point),
    )


def structure_invariants(ps: PointStructure) -> StructureInvariants:
    nijenhuis, defect = nijenhuis_normality(ps.spec, ps.point, ps)
    deta, bracket = exterior_deta(ps.spec, ps.point, ps)
    lie_g, lie_phi, lie_eta = lie_derivatives(ps.spec, ps.point, ps)
    return StructureInvariants(nijenhuis, deta, bracket, lie_g, lie_phi, lie_eta, defect)


def nabla_phi(ps: PointStructure, ch: ChristoffelData) -> np.ndarray:
    """`[a, x, b]` is the a-component of (∇_x φ)∂_b."""
    return covariant_derivative_jet(ch, ps.phi, (1, 1)).value


def nabla_eta(ps: PointStructure, ch: ChristoffelData) -> np.ndarray:
    """`[x, b]` is (∇_x η)∂_b."""
    return covariant_derivative_jet(ch, ps.eta, (0, 1)).value


def tps_defect(ps: PointStructure, ch: ChristoffelData, alpha: float, beta: float) -> np.ndarray:
    """(∇_Xφ)Y − α(−g(X, Y)ξ + η(Y)X) − β(g(X, φY)ξ + η(Y)φX) on the coordinate basis."""
    g = ps.g.value
    phi = ps.phi.value
    xi = ps.xi.value
    eta = ps.eta.value
    identity = np.eye(ps.dim)
    expected = alpha * (
        -np.einsum("xb,a->axb", g, xi) + np.einsum("b,ax->axb", eta, identity)
    ) + beta * (
        np.einsum("xb,a->axb", g @ phi, xi) + np.einsum("b,ax->axb", eta, phi)
    )
    return nabla_phi(ps, ch) - expected


def tps_residual(
    spec: ModelSpec,
    point: Sequence[float],
    ab: AlphaBeta,
    structure: PointStructure | None = None,
    connection: ChristoffelData | None = None,
) -> float:
    """Max-norm of the trans-para-Sasakian defect with the given (α, β)."""
    ps = _structure(spec, point, structure)
    ch = connection if connection is not None else christoffel(ps)
    return max_abs(tps_defect(ps, ch, ab.alpha, ab.beta))


def nabla_eta_defect(ps: PointStructure, ch: ChristoffelData, ab: AlphaBeta) -> np.ndarray:
    """(∇_Xη)Y − αg(X, φY) + β(g(X, Y) − η(X)η(Y))."""
    g = ps.g.value
    eta = ps.eta.value
    return nabla_eta(ps, ch) - ab.alpha * (g @ ps.phi.value) + ab.beta * (g - np.outer(eta, eta))


def deta_defect(ps: PointStructure, ab: AlphaBeta) -> np.ndarray:
    """dη(X, Y) − αg(X, φY)."""
    return deta_coordinate(ps) - ab.alpha * (ps.g.value @ ps.phi.value)


def lie_g_defect(ps: PointStructure, lie_g: TensorAtPoint, ab: AlphaBeta) -> np.ndarray:
    """(ℒ_ξ g)(X, Y) + 2β(g(X, Y) − η(X)η(Y))."""
    eta = ps.eta.value
    return lie_g.components + 2.0 * ab.beta * (ps.g.value - np.outer(eta, eta))


@dataclass(frozen=True)
class AlphaBetaCalculus:
    xi_alpha: float
    xi_beta: float
    two_alpha_beta: float
    xi_alpha_residual: float
    standing_vector: np.ndarray
    standing_residual: float
    standing_assumption_met: bool


def alpha_beta_calculus(
    spec: ModelSpec,
    point: Sequence[float],
    ab: AlphaBeta,
    structure: PointStructure | None = None,
    tol: float = constants.TOL_STANDING_ASSUMPTION,
) -> AlphaBetaCalculus:
    """Scalars derived from α and β, including φ(grad α) + (2n − 1) grad β."""
    ps = _structure(spec, point, structure)
    n = ps.n
    standing = ps.phi.value @ ab.grad_alpha + (2 * n - 1) * ab.grad_beta
    residual = max_abs(standing)
    return AlphaBetaCalculus(
        xi_alpha=ab.xi_alpha,
        xi_beta=ab.xi_beta,
        two_alpha_beta=2.0 * ab.alpha * ab.beta,
        xi_alpha_residual=abs(2.0 * ab.alpha * ab.beta - ab.xi_alpha),
        standing_vector=standing,
        standing_residual=residual,
        standing_assumption_met=residual <= tol,
    )


@dataclass(frozen=True)
class StructurePredicates:
    """Residuals of the special structure classes at one point."""

    paracontact_metric: float
    k_paracontact: float
    para_sasakian: float
    normal: float
    structure_type: StructureType


def classify_type(alpha: float, beta: float, tol: float) -> StructureType:
    if abs(alpha) <= tol and abs(beta) <= tol:
        return "para-cosymplectic"
    if abs(alpha) <= tol:
        return "para-kenmotsu-like"
    if abs(beta) <= tol:
        return "para-sasakian-like"
    return "general"


def structure_predicates(
    ps: PointStructure,
    ch: ChristoffelData,
    invariants: StructureInvariants,
    ab: AlphaBeta,
    tol: float = constants.TOL_FIRST_ORDER,
) -> StructurePredicates:
    g = ps.g.value
    identity = np.eye(ps.dim)
    para_sasakian = (
        nabla_phi(ps, ch)
        + np.einsum("xb,a->axb", g, ps.xi.value)
        - np.einsum("b,ax->axb", ps.eta.value, identity)
    )
    return StructurePredicates(
        paracontact_metric=max_abs(invariants.deta.components - g @ ps.phi.value),
        k_paracontact=invariants.lie_g.max_norm(),
        para_sasakian=max_abs(para_sasakian),
        normal=invariants.normality_defect.max_norm(),
        structure_type=classify_type(ab.alpha, ab.beta, tol),
    )
