"""Riemann, Ricci and scalar curvature, and a finite-difference cross-check.

Conventions: R(X, Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z, with components
`riem[d, c, a, b]` = R^d_cab for R(∂_a, ∂_b)∂_c = R^d_cab ∂_d, and
Ric(X, Y) = Σ_i ε_i g(R(E_i, X)Y, E_i).
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src import constants
from src.connection import ChristoffelData
from src.dsl import ModelSpec, eval_expr
from src.errors import GeometryError
from src.model import PointStructure

logger = logging.getLogger(__name__)


class IsotropicVectorError(GeometryError):
    def __init__(self, norm: float):
        self.norm = norm
        super().__init__(f"vector is isotropic (g(X, X) = {norm:.3e})")


class NonOrthogonalError(GeometryError):
    def __init__(self, product: float):
        self.product = product
        super().__init__(f"vector is not orthogonal to xi (g(X, xi) = {product:.3e})")


class NotNormalizedError(GeometryError):
    def __init__(self, norm: float):
        self.norm = norm
        super().__init__(f"vector is not a unit vector (g(X, X) = {norm:.12g})")


class FiniteDifferenceDomainError(GeometryError):
    def __init__(self, point: Sequence[float], h: float):
        self.point = tuple(float(p) for p in point)
        self.h = h
        super().__init__(
            f"point {self.point} is closer than {2 * h:g} to the sample-box boundary;"
            f" central differences with step {h:g} would leave the box"
        )


@dataclass(frozen=True)
class CurvatureData:
    """Curvature at one point together with the metric data it was built from.

    `ric`, `scal` and `q` stay None until `ricci_scalar_q` fills them in.
    """

    n: int
    point: tuple[float, ...]
    g: np.ndarray
    g_inv: np.ndarray
    phi: np.ndarray
    xi: np.ndarray
    eta: np.ndarray
    riem: np.ndarray
    riem_dn: np.ndarray
    ric: np.ndarray | None = None
    scal: float | None = None
    q: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return 2 * self.n + 1


def riemann_from_christoffel(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    return (
        np.einsum("dbca->dcab", dgamma)
        - np.einsum("dacb->dcab", dgamma)
        + np.einsum("dae,ebc->dcab", gamma, gamma)
        - np.einsum("dbe,eac->dcab", gamma, gamma)
    )


def riemann(ps: PointStructure, ch: ChristoffelData) -> CurvatureData:
    """Curvature tensor from Christoffel symbols and their first derivatives."""
    if ch.dgamma is None:
        raise ValueError("Christoffel symbols carry no derivatives")
    g = ps.g.value
    riem = riemann_from_christoffel(ch.gamma, ch.dgamma)
    return CurvatureData(
        n=ps.n,
        point=ps.point,
        g=g,
        g_inv=ps.g_inv.value,
        phi=ps.phi.value,
        xi=ps.xi.value,
        eta=ps.eta.value,
        riem=riem,
        riem_dn=np.einsum("ecab,ed->abcd", riem, g),
    )


def ricci_scalar_q(ps: PointStructure, cd: CurvatureData) -> CurvatureData:
    """Fill in the Ricci tensor, scalar curvature and Ricci operator."""
    ric = np.einsum("acab->bc", cd.riem)
    g_inv = ps.g_inv.value
    return dataclasses.replace(
        cd,
        ric=ric,
        scal=float(np.einsum("bc,bc->", g_inv, ric)),
        q=g_inv @ ric,
    )


def curvature(ps: PointStructure, ch: ChristoffelData) -> CurvatureData:
    return ricci_scalar_q(ps, riemann(ps, ch))


def xi_sectional(
    ps: PointStructure,
    cd: CurvatureData,
    x: Sequence[float],
    tol: float = constants.SIGNATURE_THRESHOLD,
) -> float:
    """R(X, ξ, ξ, X) = g(R(X, ξ)ξ, X) for a unit vector X orthogonal to ξ.

    This is not the normalised ξ-sectional curvature. With ε_X = g(X, X) = ±1
    and g(ξ, ξ) = 1, K(ξ, X) = R(X, ξ, ξ, X) / (g(ξ, ξ)g(X, X) − g(ξ, X)²)
    = ε_X · R(X, ξ, ξ, X). On a trans-para-Sasakian manifold the returned
    value is −ε_X(α² + β² − ξ(β)), so K(ξ, X) = −(α² + β² − ξ(β)) for
    either sign of ε_X.

    Raises:
        NonOrthogonalError: g(X, ξ) is not zero.
        IsotropicVectorError: g(X, X) is zero.
        NotNormalizedError: |g(X, X)| is not one.
    """
    x = np.asarray(x, dtype=float)
    g = cd.g
    product = float(x @ g @ cd.xi)
    if abs(product) > tol:
        raise NonOrthogonalError(product)
    norm = float(x @ g @ x)
    if abs(norm) <= tol:
        raise IsotropicVectorError(norm)
    if abs(abs(norm) - 1.0) > tol:
        raise NotNormalizedError(norm)
    return float(np.einsum("abcd,a,b,c,d->", cd.riem_dn, x, cd.xi, cd.xi, x))


@dataclass(frozen=True)
class FiniteDifferenceCurvature:
    gamma: np.ndarray
    dgamma: np.ndarray
    riem: np.ndarray


def metric_values(spec: ModelSpec, point: Sequence[float]) -> np.ndarray:
    """The coordinate metric at `point`, from frame values only."""
    frame = np.array([[eval_expr(e, point).value for e in row] for row in spec.frame])
    coframe = np.linalg.inv(frame)
    return np.einsum("ai,i,bi->ab", coframe, np.array(spec.epsilon, dtype=float), coframe)


def _gamma_fd(spec: ModelSpec, point: np.ndarray, h: float) -> np.ndarray:
    d = spec.dim
    dg = np.zeros((d, d, d))
    for e in range(d):
        step = np.zeros(d)
        step[e] = h
        dg[:, :, e] = (metric_values(spec, point + step) - metric_values(spec, point - step)) / (2 * h)
    g_inv = np.linalg.inv(metric_values(spec, point))
    return 0.5 * (
        np.einsum("ce,eba->cab", g_inv, dg)
        + np.einsum("ce,aeb->cab", g_inv, dg)
        - np.einsum("ce,abe->cab", g_inv, dg)
    )


def within_fd_margin(spec: ModelSpec, point: Sequence[float], h: float = constants.FD_STEP) -> bool:
    """True when the nested central differences of `fd_oracle` stay inside the box."""
    return all(lo + 2 * h <= p <= hi - 2 * h for p, (lo, hi) in zip(point, spec.box))


def fd_oracle(
    spec: ModelSpec, point: Sequence[float], h: float = constants.FD_STEP
) -> FiniteDifferenceCurvature:
    """Christoffel symbols and curvature from central differences of the metric.

    Only frame values are used, so no jet derivative enters the result.
    Metric values are taken up to 2h away from `point` along each axis.

    Raises:
        FiniteDifferenceDomainError: `point` is closer than 2h to the box boundary.
    """
    if not within_fd_margin(spec, point, h):
        raise FiniteDifferenceDomainError(point, h)
    p = np.asarray(point, dtype=float)
    d = spec.dim
    gamma = _gamma_fd(spec, p, h)
    dgamma = np.zeros((d, d, d, d))
    for e in range(d):
        step = np.zeros(d)
        step[e] = h
        dgamma[..., e] = (_gamma_fd(spec, p + step, h) - _gamma_fd(spec, p - step, h)) / (2 * h)
    logger.debug("Finite-difference curvature at %s with step %g", tuple(p), h)
    return FiniteDifferenceCurvature(gamma, dgamma, riemann_from_christoffel(gamma, dgamma))
