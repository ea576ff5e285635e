"""Claim harness.

Every identity is evaluated as a residual tensor on the coordinate basis at
each sample point; every theorem is evaluated as hypothesis ⇒ conclusion,
with the conclusion only asserted when the hypothesis holds.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src import constants
from src.connection import (
    AlphaBeta,
    ChristoffelData,
    FrameConnection,
    christoffel,
    covariant_derivative_jet,
    extract_alpha_beta,
    frame_connection_christoffel,
    frame_connection_koszul,
)
from src.curvature import (
    CurvatureData,
    FiniteDifferenceCurvature,
    curvature,
    fd_oracle,
    within_fd_margin,
    xi_sectional,
)
from src.curvfamily import (
    FamilyTensor,
    bochner_operator,
    concircular,
    conformal,
    derivation_action,
    pc_bochner,
    projective,
    projective_ricci,
    pseudo_projective,
)
from src.dsl import ModelSpec, eval_expr
from src.errors import GeometryError
from src.jets import RankDeficientError, least_squares
from src.model import PointStructure, assemble, check_compatibility, max_abs
from src.paracontact import (
    AlphaBetaCalculus,
    StructureInvariants,
    StructureType,
    alpha_beta_calculus,
    deta_defect,
    lie_g_defect,
    nabla_eta_defect,
    structure_invariants,
    structure_predicates,
    tps_defect,
)
from src.settings import Tolerances

logger = logging.getLogger(__name__)


class UnknownClaimError(GeometryError):
    def __init__(self, claim_id: str):
        self.claim_id = claim_id
        super().__init__(f"unknown claim {claim_id!r}; known claims: {', '.join(CLAIMS)}")


class UnknownTheoremError(GeometryError):
    def __init__(self, theorem_id: str):
        self.theorem_id = theorem_id
        super().__init__(f"unknown theorem {theorem_id!r}; known theorems: {', '.join(THEOREMS)}")


class ClaimSkippedError(GeometryError):
    """Raised when a claim does not apply to the model or the sample points."""

    def __init__(self, claim_id: str, reason: str):
        self.claim_id = claim_id
        self.reason = reason
        super().__init__(reason)


class DegenerateFitError(GeometryError):
    """Raised when Ric cannot be fitted against g and η⊗η."""


def format_number(value: float) -> str:
    """Twelve significant digits, keeping a decimal point on whole numbers."""
    if value == 0.0:
        value = 0.0
    text = f"{value:.{constants.SIGNIFICANT_DIGITS}g}"
    if text.lstrip("-").isdigit():
        text += ".0"
    return text


class PointAnalysis:
    """All per-point quantities the claims and theorems draw on."""

    def __init__(self, spec: ModelSpec, point: Sequence[float]):
        self.spec = spec
        self.ps: PointStructure = assemble(spec, point)
        self.ch: ChristoffelData = christoffel(self.ps)
        self.cd: CurvatureData = curvature(self.ps, self.ch)
        self.ab: AlphaBeta = extract_alpha_beta(spec, point, self.ps, self.ch)

    @property
    def point(self) -> tuple[float, ...]:
        return self.ps.point

    @property
    def squared_sum(self) -> float:
        """α² + β²."""
        return self.ab.alpha**2 + self.ab.beta**2

    @cached_property
    def invariants(self) -> StructureInvariants:
        return structure_invariants(self.ps)

    @cached_property
    def calculus(self) -> AlphaBetaCalculus:
        return alpha_beta_calculus(self.spec, self.point, self.ab, self.ps)

    @cached_property
    def koszul(self) -> FrameConnection:
        return frame_connection_koszul(self.spec, self.point)

    @cached_property
    def finite_differences(self) -> FiniteDifferenceCurvature:
        return fd_oracle(self.spec, self.point)

    @cached_property
    def projective(self) -> FamilyTensor:
        return projective(self.cd)

    @cached_property
    def conformal(self) -> FamilyTensor:
        return conformal(self.cd)

    @cached_property
    def concircular(self) -> FamilyTensor:
        return concircular(self.cd)

    @cached_property
    def projective_ricci(self) -> FamilyTensor:
        return projective_ricci(self.cd)

    @cached_property
    def pseudo_projective(self) -> FamilyTensor:
        a, b = self.spec.pp_params
        return pseudo_projective(self.cd, a, b)

    @cached_property
    def pc_bochner(self) -> FamilyTensor:
        return pc_bochner(self.ps, self.cd)


# Claims


def _almost_paracontact(a: PointAnalysis) -> float:
    residuals = check_compatibility(a.ps).residuals()
    return max(residuals[name] for name in ("phi-xi", "eta-phi", "eta-xi", "phi-squared"))


def _metric_compatibility(a: PointAnalysis) -> float:
    return check_compatibility(a.ps).residuals()["metric-compatibility"]


def _phi_skew(a: PointAnalysis) -> float:
    g_phi = a.cd.g @ a.cd.phi
    return max_abs(g_phi + g_phi.T)


def _trans_para_sasakian(a: PointAnalysis) -> float:
    return max_abs(tps_defect(a.ps, a.ch, a.ab.alpha, a.ab.beta))


def _para_sasakian(a: PointAnalysis) -> float:
    return max_abs(tps_defect(a.ps, a.ch, 1.0, 0.0))


def _d_eta_routes(a: PointAnalysis) -> float:
    return max_abs(a.invariants.deta.components - a.invariants.deta_bracket.components)


def _curvature_xi(a: PointAnalysis) -> float:
    cd, ab = a.cd, a.ab
    identity = np.eye(cd.dim)
    phi, eta = cd.phi, cd.eta
    phi2 = phi @ phi
    da, db = ab.d_alpha, ab.d_beta
    e = np.einsum
    residual = (
        e("ocxy,c->oxy", cd.riem, cd.xi)
        + a.squared_sum * (e("y,ox->oxy", eta, identity) - e("x,oy->oxy", eta, identity))
        + 2 * ab.alpha * ab.beta * (e("y,ox->oxy", eta, phi) - e("x,oy->oxy", eta, phi))
        + e("x,oy->oxy", da, phi)
        - e("y,ox->oxy", da, phi)
        - e("y,ox->oxy", db, phi2)
        + e("x,oy->oxy", db, phi2)
    )
    return max_abs(residual)


def _xi_sectional(a: PointAnalysis) -> float:
    spec = a.spec
    expected = a.squared_sum - a.ab.xi_beta
    worst = 0.0
    for i in range(spec.dim):
        if i == spec.xi_index:
            continue
        value = xi_sectional(a.ps, a.cd, a.ps.frame.value[i])
        worst = max(worst, abs(value + spec.epsilon[i] * expected))
    return worst


def _xi_curvature_xi(a: PointAnalysis) -> float:
    cd = a.cd
    lhs = np.einsum("ocax,c,a->ox", cd.riem, cd.xi, cd.xi)
    rhs = (a.squared_sum - a.ab.xi_beta) * (np.eye(cd.dim) - np.outer(cd.xi, cd.eta))
    return max_abs(lhs - rhs)


def _xi_alpha(a: PointAnalysis) -> float:
    return a.calculus.xi_alpha_residual


def _curvature_xi_z(a: PointAnalysis) -> float:
    """R(ξ, Z)X, read off R(X, Y)ξ through g(R(ξ, Z)X, Y) = g(R(X, Y)ξ, Z).

    The first term carries ξ: −(α² + β²)(g(X, Z)ξ − η(X)Z).
    """
    cd, ab = a.cd, a.ab
    phi, eta, xi = cd.phi, cd.eta, cd.xi
    phi2 = phi @ phi
    g_phi = cd.g @ phi
    g_phi2 = cd.g @ phi2
    e = np.einsum
    lhs = e("oxaz,a->ozx", cd.riem, xi)
    rhs = (
        -a.squared_sum * (e("zx,o->ozx", cd.g, xi) - e("x,oz->ozx", eta, np.eye(cd.dim)))
        - 2 * ab.alpha * ab.beta * (e("zx,o->ozx", g_phi, xi) + e("x,oz->ozx", eta, phi))
        + e("x,oz->ozx", ab.d_alpha, phi)
        + e("zx,o->ozx", g_phi, ab.grad_alpha)
        + e("zx,o->ozx", g_phi2, ab.grad_beta)
        - e("x,oz->ozx", ab.d_beta, phi2)
    )
    return max_abs(lhs - rhs)


def _ricci_xi(a: PointAnalysis) -> float:
    cd, ab = a.cd, a.ab
    n = cd.n
    scale = 2 * n * a.squared_sum - ab.xi_beta
    residual = cd.ric @ cd.xi + scale * cd.eta - (2 * n - 1) * ab.d_beta + cd.phi.T @ ab.d_alpha
    return max_abs(residual)


def _ricci_operator_xi(a: PointAnalysis) -> float:
    cd, ab = a.cd, a.ab
    n = cd.n
    scale = 2 * n * a.squared_sum - ab.xi_beta
    expected = -scale * cd.xi + (2 * n - 1) * ab.grad_beta + cd.phi @ ab.grad_alpha
    return max_abs(cd.q @ cd.xi - expected)


def _ricci_operator(a: PointAnalysis) -> float:
    cd = a.cd
    return max_abs(cd.ric - (cd.g @ cd.q).T)


def _reduced_ricci_xi(a: PointAnalysis) -> float:
    cd = a.cd
    return max_abs(cd.ric @ cd.xi + 2 * cd.n * a.squared_sum * cd.eta)


def _reduced_ricci_operator_xi(a: PointAnalysis) -> float:
    cd = a.cd
    return max_abs(cd.q @ cd.xi + 2 * cd.n * a.squared_sum * cd.xi)


def _metric_parallel(a: PointAnalysis) -> float:
    return max_abs(covariant_derivative_jet(a.ch, a.ps.g, (0, 2)).value)


def _riemann_symmetries(a: PointAnalysis) -> float:
    r = a.cd.riem_dn
    e = np.einsum
    return max(
        max_abs(r + e("yxzw->xyzw", r)),
        max_abs(r + e("xywz->xyzw", r)),
        max_abs(r - e("zwxy->xyzw", r)),
        max_abs(r + e("yzxw->xyzw", r) + e("zxyw->xyzw", r)),
    )


def _koszul_agreement(a: PointAnalysis) -> float:
    return max_abs(a.koszul.omega - frame_connection_christoffel(a.ps, a.ch))


def _fd_christoffel(a: PointAnalysis) -> float:
    return max_abs(a.finite_differences.gamma - a.ch.gamma)


def _fd_riemann(a: PointAnalysis) -> float:
    return max_abs(a.finite_differences.riem - a.cd.riem)


def _weyl_dimension_three(a: PointAnalysis) -> float:
    return a.conformal.components.max_norm()


def _alpha_beta_reference(a: PointAnalysis) -> float:
    worst = 0.0
    if a.spec.alpha_ref is not None:
        worst = max(worst, abs(a.ab.alpha - eval_expr(a.spec.alpha_ref, a.point).value))
    if a.spec.beta_ref is not None:
        worst = max(worst, abs(a.ab.beta - eval_expr(a.spec.beta_ref, a.point).value))
    return worst


# Gates: each returns the reason a claim does not apply, or None


def _skip_unless_dimension_three(v: "Verifier") -> str | None:
    if v.spec.dim != 3:
        return f"weyl-dimension-three skipped: dimension is {v.spec.dim}"
    return None


def _skip_without_references(v: "Verifier") -> str | None:
    if v.spec.alpha_ref is None and v.spec.beta_ref is None:
        return "alpha-beta-reference skipped: model has no alpha_ref or beta_ref"
    return None


def _skip_unless_para_sasakian(v: "Verifier") -> str | None:
    offset = max(max(abs(a.ab.alpha - 1.0), abs(a.ab.beta)) for a in v.analyses)
    if offset > v.tolerances.first_order:
        return (
            "eq-2.3 skipped: structure is not para-Sasakian"
            f" ((α, β) differs from (1, 0) by {format_number(offset)})"
        )
    return None


def _skip_without_standing_assumption(claim_id: str) -> Callable[["Verifier"], str | None]:
    def skip(v: "Verifier") -> str | None:
        if not v.standing_assumption.met:
            return f"{claim_id} skipped: standing assumption φ(grad α) = −(2n − 1) grad β fails"
        return None

    return skip


def _skip_without_interior_points(claim_id: str) -> Callable[["Verifier"], str | None]:
    def skip(v: "Verifier") -> str | None:
        if not v.finite_difference_analyses:
            return (
                f"{claim_id} skipped: no sample point lies {format_number(2 * constants.FD_STEP)}"
                " inside the sample box"
            )
        return None

    return skip


@dataclass(frozen=True)
class Claim:
    description: str
    tier: str
    residual: Callable[[PointAnalysis], float]
    finite_difference: bool = False
    skip: Callable[["Verifier"], str | None] | None = None


CLAIMS: dict[str, Claim] = {
    "eq-2.1": Claim("φξ = 0, η∘φ = 0, η(ξ) = 1, φ² = id − η⊗ξ", "compatibility", _almost_paracontact),
    "eq-2.2": Claim("g(φX, φY) = −g(X, Y) + η(X)η(Y)", "compatibility", _metric_compatibility),
    "phi-skew": Claim("g(X, φY) + g(φX, Y) = 0", "compatibility", _phi_skew),
    "trans-para-sasakian": Claim(
        "(∇_Xφ)Y = α(−g(X, Y)ξ + η(Y)X) + β(g(X, φY)ξ + η(Y)φX)", "first_order", _trans_para_sasakian
    ),
    "eq-2.3": Claim(
        "(∇_Xφ)Y = −g(X, Y)ξ + η(Y)X when (α, β) = (1, 0)",
        "first_order",
        _para_sasakian,
        skip=_skip_unless_para_sasakian,
    ),
    "eq-2.4": Claim("∇_Xξ = −αφX − β(X − η(X)ξ)", "first_order", lambda a: a.ab.residual),
    "eq-2.5": Claim(
        "(∇_Xη)Y = αg(X, φY) − β(g(X, Y) − η(X)η(Y))",
        "first_order",
        lambda a: max_abs(nabla_eta_defect(a.ps, a.ch, a.ab)),
    ),
    "eq-2.6": Claim("dη(X, Y) = αg(X, φY)", "first_order", lambda a: max_abs(deta_defect(a.ps, a.ab))),
    "d-eta-routes": Claim("bracket and coordinate dη agree", "exact", _d_eta_routes),
    "eq-2.7": Claim(
        "(ℒ_ξ g)(X, Y) = −2β(g(X, Y) − η(X)η(Y))",
        "first_order",
        lambda a: max_abs(lie_g_defect(a.ps, a.invariants.lie_g, a.ab)),
    ),
    "eq-2.8": Claim("ℒ_ξ φ = 0", "first_order", lambda a: a.invariants.lie_phi.max_norm()),
    "eq-2.9": Claim("ℒ_ξ η = 0", "first_order", lambda a: a.invariants.lie_eta.max_norm()),
    "normality": Claim(
        "N(X, Y) − 2dη(X, Y)ξ = 0", "curvature", lambda a: a.invariants.normality_defect.max_norm()
    ),
    "eq-3.10": Claim("R(X, Y)ξ in terms of α, β and their derivatives", "curvature", _curvature_xi),
    "prop-3.2": Claim("K(ξ, X) = −ε_X(α² + β² − ξ(β))", "curvature", _xi_sectional),
    "eq-3.11": Claim("R(ξ, X)ξ = (α² + β² − ξ(β))(X − η(X)ξ)", "curvature", _xi_curvature_xi),
    "eq-3.12": Claim("2αβ − ξ(α) = 0", "exact", _xi_alpha),
    "eq-3.13": Claim("R(ξ, Z)X in terms of α, β and their gradients", "curvature", _curvature_xi_z),
    "eq-3.14": Claim(
        "Ric(X, ξ) = −(2n(α² + β²) − ξ(β))η(X) + (2n − 1)X(β) − (φX)(α)", "curvature", _ricci_xi
    ),
    "eq-3.15": Claim(
        "Qξ = −(2n(α² + β²) − ξ(β))ξ + (2n − 1)grad β + φ(grad α)", "curvature", _ricci_operator_xi
    ),
    "eq-3.16": Claim("Ric(X, Y) = g(QX, Y)", "curvature", _ricci_operator),
    "eq-3.17": Claim(
        "Ric(X, ξ) = −2n(α² + β²)η(X)",
        "curvature",
        _reduced_ricci_xi,
        skip=_skip_without_standing_assumption("eq-3.17"),
    ),
    "eq-3.18": Claim(
        "Qξ = −2n(α² + β²)ξ",
        "curvature",
        _reduced_ricci_operator_xi,
        skip=_skip_without_standing_assumption("eq-3.18"),
    ),
    "metric-parallel": Claim("∇g = 0", "exact", _metric_parallel),
    "riemann-symmetries": Claim(
        "R(X, Y, Z, W) skew pairs, pair symmetry and first Bianchi", "first_order", _riemann_symmetries
    ),
    "koszul-agreement": Claim("Koszul frame connection equals Christoffel route", "koszul", _koszul_agreement),
    "fd-christoffel": Claim(
        "finite-difference Christoffel symbols",
        "fd_christoffel",
        _fd_christoffel,
        finite_difference=True,
        skip=_skip_without_interior_points("fd-christoffel"),
    ),
    "fd-riemann": Claim(
        "finite-difference curvature",
        "fd_riemann",
        _fd_riemann,
        finite_difference=True,
        skip=_skip_without_interior_points("fd-riemann"),
    ),
    "weyl-dimension-three": Claim(
        "Weyl conformal tensor vanishes in dimension three",
        "curvature",
        _weyl_dimension_three,
        skip=_skip_unless_dimension_three,
    ),
    "alpha-beta-reference": Claim(
        "α and β match the model's reference expressions",
        "reference",
        _alpha_beta_reference,
        skip=_skip_without_references,
    ),
}


class ClaimResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    claim_id: str
    points_tested: int
    max_residual: float
    mean_residual: float
    tolerance: float
    status: Literal["pass", "fail"]


def _aggregate_claim(claim_id: str, residuals: Sequence[float], tolerance: float) -> ClaimResult:
    worst = max(residuals) if residuals else 0.0
    passed = math.isfinite(worst) and worst <= tolerance
    return ClaimResult(
        claim_id=claim_id,
        points_tested=len(residuals),
        max_residual=float(worst),
        mean_residual=float(np.mean(residuals)) if residuals else 0.0,
        tolerance=tolerance,
        status="pass" if passed else "fail",
    )


# Theorems


def _einstein_defect(a: PointAnalysis) -> float:
    cd = a.cd
    return max_abs(cd.ric + 2 * cd.n * a.squared_sum * cd.g)


def _einstein_with_scal(factor: Callable[[int], int]) -> Callable[[PointAnalysis], float]:
    """Einstein defect together with |scal − factor(n)(α² + β²)|."""

    def conclusion(a: PointAnalysis) -> float:
        scal_defect = abs(a.cd.scal - factor(a.cd.n) * a.squared_sum)
        return max(_einstein_defect(a), scal_defect)

    return conclusion


def _eta_einstein_defect(a: PointAnalysis) -> float:
    cd = a.cd
    n = cd.n
    s = a.squared_sum
    lam = s + cd.scal / (2 * n)
    mu = -((2 * n + 1) * s + cd.scal / (2 * n))
    return max_abs(cd.ric - lam * cd.g - mu * np.outer(cd.eta, cd.eta))


def _bochner_ricci_hypothesis(a: PointAnalysis) -> float:
    cd = a.cd
    b_op = np.einsum("ozxy,x->ozy", bochner_operator(a.pc_bochner, cd), cd.xi)
    tensor = np.einsum("azy,av->yzv", b_op, cd.ric) + np.einsum("za,avy->yzv", cd.ric, b_op)
    return max_abs(tensor)


def _bochner_ricci_conclusion(a: PointAnalysis) -> float:
    cd = a.cd
    s = a.squared_sum
    return max_abs((s - 1.0) * (cd.ric + 2 * cd.n * s * cd.g))


def _paracontact_conformal_conclusion(a: PointAnalysis) -> float:
    cd = a.cd
    return max_abs((a.squared_sum - 1.0) * (np.eye(cd.dim) - np.outer(cd.xi, cd.eta)))


def _acting(tensor: Callable[[PointAnalysis], FamilyTensor]) -> Callable[[PointAnalysis], float]:
    def hypothesis(a: PointAnalysis) -> float:
        return derivation_action(a.cd, tensor(a).components).max_norm()

    return hypothesis


def _vanishing(tensor: Callable[[PointAnalysis], FamilyTensor]) -> Callable[[PointAnalysis], float]:
    def hypothesis(a: PointAnalysis) -> float:
        return tensor(a).components.max_norm()

    return hypothesis


def _minus_2n_2n_plus_1(n: int) -> int:
    return -2 * n * (2 * n + 1)


def _minus_2n_2n_minus_1(n: int) -> int:
    return -2 * n * (2 * n - 1)


def _plus_2n_2n_minus_1(n: int) -> int:
    return 2 * n * (2 * n - 1)


@dataclass(frozen=True)
class Theorem:
    hypothesis_text: str
    conclusion_text: str
    hypothesis: Callable[[PointAnalysis], float]
    conclusion: Callable[[PointAnalysis], float]
    alternate: Callable[[PointAnalysis], float] | None = None
    alternate_text: str | None = None


_EINSTEIN = "Ric = −2n(α² + β²)g"
_EINSTEIN_SCAL = _EINSTEIN + " and scal = −2n(2n + 1)(α² + β²)"
_ETA_EINSTEIN = "Ric = (α² + β² + scal/2n)g − ((2n + 1)(α² + β²) + scal/2n)η⊗η"

THEOREMS: dict[str, Theorem] = {
    "thm-3.6": Theorem(
        "P = 0", _EINSTEIN, _vanishing(lambda a: a.projective), _einstein_defect
    ),
    "thm-3.7": Theorem(
        "R(X, Y)·P = 0",
        _EINSTEIN_SCAL,
        _acting(lambda a: a.projective),
        _einstein_with_scal(_minus_2n_2n_plus_1),
    ),
    "thm-3.8": Theorem(
        "C = 0", _ETA_EINSTEIN, _vanishing(lambda a: a.conformal), _eta_einstein_defect
    ),
    "thm-3.9": Theorem(
        "R(X, Y)·C = 0", _ETA_EINSTEIN, _acting(lambda a: a.conformal), _eta_einstein_defect
    ),
    "thm-3.10": Theorem(
        "R(X, Y)·C̄ = 0",
        _EINSTEIN + " and scal = −2n(2n − 1)(α² + β²)",
        _acting(lambda a: a.concircular),
        _einstein_with_scal(_minus_2n_2n_minus_1),
    ),
    "thm-3.11": Theorem(
        "R(X, Y)·P̃ = 0",
        _EINSTEIN_SCAL,
        _acting(lambda a: a.projective_ricci),
        _einstein_with_scal(_minus_2n_2n_plus_1),
        alternate=_einstein_with_scal(_plus_2n_2n_minus_1),
        alternate_text="scal = 2n(2n − 1)(α² + β²)",
    ),
    "thm-3.12": Theorem(
        "P̄ = 0",
        _EINSTEIN_SCAL,
        _vanishing(lambda a: a.pseudo_projective),
        _einstein_with_scal(_minus_2n_2n_plus_1),
    ),
    "thm-3.13": Theorem(
        "R(X, Y)·P̄ = 0",
        _EINSTEIN_SCAL,
        _acting(lambda a: a.pseudo_projective),
        _einstein_with_scal(_minus_2n_2n_plus_1),
    ),
    "thm-3.14": Theorem(
        "B = 0",
        "(α² + β² − 1)(Y − η(Y)ξ) = 0",
        _vanishing(lambda a: a.pc_bochner),
        _paracontact_conformal_conclusion,
    ),
    "thm-3.15": Theorem(
        "Ric(B(ξ, Y)Z, V) + Ric(Z, B(ξ, Y)V) = 0",
        "(α² + β² − 1)(Ric + 2n(α² + β²)g) = 0",
        _bochner_ricci_hypothesis,
        _bochner_ricci_conclusion,
    ),
}


class TheoremResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    theorem_id: str
    points_tested: int
    hypothesis_residual: float
    hypothesis_met: bool
    conclusion_residual: float
    alternate_residual: float | None = None
    tolerance: float
    standing_assumption_met: bool
    status: Literal["verified", "vacuous", "refuted-at-tolerance"]


class StandingAssumption(BaseModel):
    model_config = ConfigDict(frozen=True)

    met: bool
    residual: float


class EinsteinFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    lambda_: float = Field(serialization_alias="lambda")
    mu: float
    fit_residual: float
    verdict: Literal["einstein", "eta-einstein", "neither"]


def classify_einstein(samples: Sequence[CurvatureData], tol: float = constants.TOL_EINSTEIN) -> EinsteinFit:
    """Fit Ric = λg + μη⊗η over all samples and independent index pairs.

    Raises:
        DegenerateFitError: when g and η⊗η are linearly dependent on the samples.
    """
    if not samples:
        raise DegenerateFitError("no samples to fit")
    rows, target = [], []
    for cd in samples:
        upper = np.triu_indices(cd.dim)
        rows.append(np.column_stack([cd.g[upper], np.outer(cd.eta, cd.eta)[upper]]))
        target.append(cd.ric[upper])
    try:
        fit = least_squares(np.vstack(rows), np.concatenate(target))
    except RankDeficientError as e:
        raise DegenerateFitError(f"Einstein fit is degenerate in column {e.column}") from e
    lam, mu = (float(c) for c in fit.coefficients)
    if fit.residual <= tol:
        verdict = "einstein" if abs(mu) <= tol else "eta-einstein"
    else:
        verdict = "neither"
    return EinsteinFit(lambda_=lam, mu=mu, fit_residual=fit.residual, verdict=verdict)


class AlphaBetaSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    point: list[float]
    alpha: float
    beta: float
    xi_alpha: float
    xi_beta: float
    structure_type: StructureType
    paracontact_metric_residual: float
    k_paracontact_residual: float
    para_sasakian_residual: float
    normality_residual: float


class Report(BaseModel):
    model_config = ConfigDict(frozen=True)

    model: str
    seed: int
    points: int
    tolerances: Tolerances
    claims: list[ClaimResult]
    theorems: list[TheoremResult]
    einstein_fit: EinsteinFit
    alpha_beta_summary: AlphaBetaSummary
    notes: list[str]

    @property
    def passed(self) -> bool:
        """True when no claim fails and no unconditional theorem is refuted."""
        if any(c.status == "fail" for c in self.claims):
            return False
        return not any(
            t.status == "refuted-at-tolerance" and t.standing_assumption_met for t in self.theorems
        )


class Verifier:
    """Runs claims and theorems for one model over a fixed set of points.

    Points are analysed once, in parallel when `workers > 1`; results keep
    the order of `points`.
    """

    def __init__(
        self,
        spec: ModelSpec,
        points: Sequence[Sequence[float]],
        tolerances: Tolerances | None = None,
        workers: int = 1,
    ):
        if not points:
            raise ValueError("at least one sample point is required")
        self.spec = spec
        self.points = [tuple(float(x) for x in p) for p in points]
        self.tolerances = tolerances if tolerances is not None else Tolerances()
        self.workers = workers

    @cached_property
    def analyses(self) -> list[PointAnalysis]:
        logger.info("Analysing %d points of model %r", len(self.points), self.spec.name)
        if self.workers == 1:
            return [PointAnalysis(self.spec, p) for p in self.points]
        with ThreadPoolExecutor(max_workers=self.workers) as executor:
            return list(executor.map(lambda p: PointAnalysis(self.spec, p), self.points))

    def _tolerance(self, tier: str) -> float:
        return getattr(self.tolerances, tier)

    @cached_property
    def finite_difference_analyses(self) -> list[PointAnalysis]:
        """The first points whose finite-difference stencil stays inside the box."""
        inside = [a for a in self.analyses if within_fd_margin(self.spec, a.point)]
        return inside[: constants.FD_ORACLE_POINTS]

    def skipped_claims(self) -> dict[str, str]:
        skipped = {}
        for claim_id, claim in CLAIMS.items():
            reason = claim.skip(self) if claim.skip is not None else None
            if reason is not None:
                skipped[claim_id] = reason
        return skipped

    def run_claim(self, claim_id: str) -> ClaimResult:
        """Evaluate one claim over the sample points.

        Raises:
            UnknownClaimError: `claim_id` is not in the catalog.
            ClaimSkippedError: the claim does not apply here, e.g. a gated
                identity whose hypothesis fails on the sample points.
        """
        if claim_id not in CLAIMS:
            raise UnknownClaimError(claim_id)
        claim = CLAIMS[claim_id]
        reason = claim.skip(self) if claim.skip is not None else None
        if reason is not None:
            raise ClaimSkippedError(claim_id, reason)
        analyses = self.finite_difference_analyses if claim.finite_difference else self.analyses
        residuals = [float(claim.residual(a)) for a in analyses]
        result = _aggregate_claim(claim_id, residuals, self._tolerance(claim.tier))
        logger.debug("Claim %s: max residual %.3e (%s)", claim_id, result.max_residual, result.status)
        return result

    @cached_property
    def standing_assumption(self) -> StandingAssumption:
        residual = max(a.calculus.standing_residual for a in self.analyses)
        return StandingAssumption(
            met=bool(residual <= self.tolerances.standing_assumption), residual=float(residual)
        )

    def run_theorem(self, theorem_id: str) -> TheoremResult:
        if theorem_id not in THEOREMS:
            raise UnknownTheoremError(theorem_id)
        theorem = THEOREMS[theorem_id]
        tol = self.tolerances.curvature
        hypothesis = max(theorem.hypothesis(a) for a in self.analyses)
        hypothesis_met = bool(hypothesis <= tol)
        conclusion = max(theorem.conclusion(a) for a in self.analyses)
        alternate = None
        if theorem.alternate is not None:
            alternate = float(max(theorem.alternate(a) for a in self.analyses))
        if not hypothesis_met:
            status = "vacuous"
        elif conclusion <= tol:
            status = "verified"
        else:
            status = "refuted-at-tolerance"
        logger.debug("Theorem %s: hypothesis %.3e, conclusion %.3e (%s)", theorem_id, hypothesis, conclusion, status)
        return TheoremResult(
            theorem_id=theorem_id,
            points_tested=len(self.analyses),
            hypothesis_residual=float(hypothesis),
            hypothesis_met=hypothesis_met,
            conclusion_residual=float(conclusion),
            alternate_residual=alternate,
            tolerance=tol,
            standing_assumption_met=self.standing_assumption.met,
            status=status,
        )

    def einstein_fit(self) -> EinsteinFit:
        return classify_einstein([a.cd for a in self.analyses], self.tolerances.einstein)

    def alpha_beta_summary(self) -> AlphaBetaSummary:
        center = PointAnalysis(self.spec, self.spec.box_center)
        predicates = structure_predicates(
            center.ps, center.ch, center.invariants, center.ab, self.tolerances.first_order
        )
        return AlphaBetaSummary(
            point=list(center.point),
            alpha=center.ab.alpha,
            beta=center.ab.beta,
            xi_alpha=center.ab.xi_alpha,
            xi_beta=center.ab.xi_beta,
            structure_type=predicates.structure_type,
            paracontact_metric_residual=predicates.paracontact_metric,
            k_paracontact_residual=predicates.k_paracontact,
            para_sasakian_residual=predicates.para_sasakian,
            normality_residual=predicates.normal,
        )

    def reference_notes(self) -> list[str]:
        """One note per reference entry of the model that disagrees with the recomputed value."""
        if not self.spec.references:
            return []
        center = self.spec.box_center
        connection = frame_connection_koszul(self.spec, center)
        notes = []
        agreeing = 0
        for ref in self.spec.references:
            expected = np.array([eval_expr(c, center).value for c in ref.components])
            if ref.kind == "bracket":
                actual = connection.brackets[ref.i, ref.j]
                label = f"[E{ref.i + 1}, E{ref.j + 1}]"
            else:
                actual = connection.omega[:, ref.i, ref.j]
                label = f"nabla_E{ref.i + 1} E{ref.j + 1}"
            if max_abs(actual - expected) <= self.tolerances.reference:
                agreeing += 1
                continue
            notes.append(
                f"discrepancy: {label} recomputed from the frame is {_frame_vector(actual)},"
                f" model line {ref.line} gives {_frame_vector(expected)}"
            )
        notes.insert(
            0,
            f"reference tables: {agreeing} of {len(self.spec.references)} entries agree at the box centre",
        )
        return notes

    def report(self, seed: int) -> Report:
        skipped = self.skipped_claims()
        claims = [self.run_claim(c) for c in CLAIMS if c not in skipped]
        logger.info("Ran %d claims, skipped %d", len(claims), len(skipped))
        theorems = [self.run_theorem(t) for t in THEOREMS]

        notes = list(skipped.values())
        notes.extend(self.reference_notes())
        standing = self.standing_assumption
        if not standing.met:
            notes.append(
                "standing assumption φ(grad α) = −(2n − 1) grad β fails"
                f" (residual {format_number(standing.residual)}); theorem results are conditional"
            )
        for result in theorems:
            if result.alternate_residual is not None:
                notes.append(
                    f"{result.theorem_id}: alternate conclusion {THEOREMS[result.theorem_id].alternate_text}"
                    f" has residual {format_number(result.alternate_residual)}"
                )
        return Report(
            model=self.spec.name,
            seed=seed,
            points=len(self.points),
            tolerances=self.tolerances,
            claims=claims,
            theorems=theorems,
            einstein_fit=self.einstein_fit(),
            alpha_beta_summary=self.alpha_beta_summary(),
            notes=notes,
        )


def _frame_vector(components: np.ndarray) -> str:
    return "(" + ", ".join(format_number(float(c)) for c in components) + ")"


def run_claim(
    claim_id: str,
    spec: ModelSpec,
    points: Sequence[Sequence[float]],
    tolerances: Tolerances | None = None,
) -> ClaimResult:
    return Verifier(spec, points, tolerances).run_claim(claim_id)


def run_theorem(
    theorem_id: str,
    spec: ModelSpec,
    points: Sequence[Sequence[float]],
    tolerances: Tolerances | None = None,
) -> TheoremResult:
    return Verifier(spec, points, tolerances).run_theorem(theorem_id)


def standing_assumption_check(
    spec: ModelSpec,
    points: Sequence[Sequence[float]],
    tol: float = constants.TOL_STANDING_ASSUMPTION,
) -> StandingAssumption:
    return Verifier(spec, points, Tolerances(standing_assumption=tol)).standing_assumption
