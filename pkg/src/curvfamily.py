"""Curvature tensors derived from R, Ric and the structure tensors.

(1, 3) tensors share the layout of the Riemann tensor: `T[o, z, x, y]` is the
o-component of T(X, Y)Z. The PC-Bochner tensor is kept fully lowered,
`B[x, y, z, w]` = B(X, Y, Z, W).
"""

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from src.curvature import CurvatureData
from src.errors import GeometryError
from src.model import PointStructure, TensorAtPoint

logger = logging.getLogger(__name__)

FamilyKind = Literal[
    "projective",
    "conformal",
    "concircular",
    "projectiveRicci",
    "pseudoProjective",
    "pcBochner",
]


class ValenceMismatchError(GeometryError):
    def __init__(self, valence: tuple[int, int]):
        self.valence = valence
        super().__init__(
            f"curvature acts on tensors of valence (1, 3), (0, 2) or (0, 4), not {valence}"
        )


class ZeroParameterError(GeometryError):
    def __init__(self, a: float, b: float):
        self.a = a
        self.b = b
        super().__init__(f"pseudo-projective constants must be nonzero, got a={a}, b={b}")


@dataclass(frozen=True)
class FamilyTensor:
    kind: FamilyKind
    components: TensorAtPoint
    params: dict[str, float] = field(default_factory=dict)


def _wedge(s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """s(Y, Z)V(X) − s(X, Z)V(Y) in the (1, 3) layout, for a (0, 2) s and (1, 1) V."""
    return np.einsum("yz,ox->ozxy", s, v) - np.einsum("xz,oy->ozxy", s, v)


def g_wedge(cd: CurvatureData) -> np.ndarray:
    """g(Y, Z)X − g(X, Z)Y."""
    return _wedge(cd.g, np.eye(cd.dim))


def ric_wedge(cd: CurvatureData) -> np.ndarray:
    """Ric(Y, Z)X − Ric(X, Z)Y."""
    return _wedge(cd.ric, np.eye(cd.dim))


def _tensor(kind: FamilyKind, valence: tuple[int, int], components: np.ndarray, cd: CurvatureData, **params) -> FamilyTensor:
    return FamilyTensor(kind, TensorAtPoint(valence, components, cd.point), params)


def projective(cd: CurvatureData) -> FamilyTensor:
    """P(X, Y)Z = R(X, Y)Z − (Ric(Y, Z)X − Ric(X, Z)Y)/2n."""
    return _tensor("projective", (1, 3), cd.riem - ric_wedge(cd) / (2 * cd.n), cd)


def conformal(cd: CurvatureData) -> FamilyTensor:
    """The Weyl conformal tensor.

    C(X, Y)Z = R(X, Y)Z − (g(Y, Z)QX − g(X, Z)QY + Ric(Y, Z)X − Ric(X, Z)Y)/(2n − 1)
    + scal (g(Y, Z)X − g(X, Z)Y)/(2n(2n − 1)).
    """
    n = cd.n
    components = (
        cd.riem
        - (_wedge(cd.g, cd.q) + ric_wedge(cd)) / (2 * n - 1)
        + cd.scal / (2 * n * (2 * n - 1)) * g_wedge(cd)
    )
    return _tensor("conformal", (1, 3), components, cd)


def concircular(cd: CurvatureData) -> FamilyTensor:
    n = cd.n
    components = cd.riem - cd.scal / (2 * n * (2 * n + 1)) * g_wedge(cd)
    return _tensor("concircular", (1, 3), components, cd)


def projective_ricci(cd: CurvatureData) -> FamilyTensor:
    n = cd.n
    components = (2 * n + 1) / (2 * n) * cd.ric - cd.scal / (2 * n) * cd.g
    return _tensor("projectiveRicci", (0, 2), components, cd)


def pseudo_projective(cd: CurvatureData, a: float, b: float) -> FamilyTensor:
    """aR + b(Ric(Y, Z)X − Ric(X, Z)Y) − (a + 2nb) scal (g(Y, Z)X − g(X, Z)Y)/(2n(2n + 1)).

    Raises:
        ZeroParameterError: when a or b is zero.
    """
    if a == 0.0 or b == 0.0:
        raise ZeroParameterError(a, b)
    n = cd.n
    components = (
        a * cd.riem
        + b * ric_wedge(cd)
        - (a + 2 * n * b) * cd.scal / (2 * n * (2 * n + 1)) * g_wedge(cd)
    )
    return _tensor("pseudoProjective", (1, 3), components, cd, a=a, b=b)


def bochner_k(cd: CurvatureData) -> float:
    return -(cd.scal - 2 * cd.n) / (2 * cd.n + 2)


def pc_bochner(ps: PointStructure, cd: CurvatureData) -> FamilyTensor:
    """The PC-Bochner tensor B(X, Y, Z, W), with k = −(scal − 2n)/(2n + 2)."""
    n = cd.n
    k = bochner_k(cd)
    g, ric, eta = cd.g, cd.ric, cd.eta
    g_phi = g @ cd.phi  # g(X, φZ)
    ric_phi = cd.phi.T @ ric  # Ric(φX, Z)
    ee = np.outer(eta, eta)
    e = np.einsum

    ricci_terms = (
        e("xz,yw->xyzw", ric, g)
        - e("yz,xw->xyzw", ric, g)
        + e("yw,xz->xyzw", ric, g)
        - e("xw,yz->xyzw", ric, g)
        + e("xz,yw->xyzw", ric_phi, g_phi)
        - e("yz,xw->xyzw", ric_phi, g_phi)
        + e("yw,xz->xyzw", ric_phi, g_phi)
        - e("xw,yz->xyzw", ric_phi, g_phi)
        + 2 * e("xy,zw->xyzw", ric_phi, g_phi)
        + 2 * e("zw,xy->xyzw", ric_phi, g_phi)
        - e("xz,yw->xyzw", ric, ee)
        + e("yz,xw->xyzw", ric, ee)
        - e("yw,xz->xyzw", ric, ee)
        + e("xw,yz->xyzw", ric, ee)
    )
    metric_terms = e("xz,yw->xyzw", g, g) - e("yz,xw->xyzw", g, g)
    phi_terms = (
        e("yw,xz->xyzw", g_phi, g_phi)
        - e("xw,yz->xyzw", g_phi, g_phi)
        + 2 * e("xy,zw->xyzw", g_phi, g_phi)
    )
    eta_terms = (
        e("xz,yw->xyzw", g, ee)
        - e("yz,xw->xyzw", g, ee)
        + e("yw,xz->xyzw", g, ee)
        - e("xw,yz->xyzw", g, ee)
    )
    scale = 2 * n + 4
    components = (
        cd.riem_dn
        + ricci_terms / scale
        + (k - 4) / scale * metric_terms
        - (k + 2 * n) / scale * phi_terms
        - k / scale * eta_terms
    )
    return _tensor("pcBochner", (0, 4), components, cd, k=k)


def bochner_operator(b: FamilyTensor, cd: CurvatureData) -> np.ndarray:
    """B(X, Y)Z in the (1, 3) layout, from B(X, Y, Z, W) = g(B(X, Y)Z, W)."""
    return np.einsum("ow,xyzw->ozxy", cd.g_inv, b.components.components)


def derivation_action(cd: CurvatureData, t: TensorAtPoint) -> TensorAtPoint:
    """R(X, Y)·T for every X, Y, appended as the last two covariant slots.

    Raises:
        ValenceMismatchError: T is not of valence (1, 3), (0, 2) or (0, 4).
    """
    riem = cd.riem
    c = t.components
    match t.valence:
        case (1, 3):
            result = (
                np.einsum("oaxy,azuv->ozuvxy", riem, c)
                - np.einsum("ozav,auxy->ozuvxy", c, riem)
                - np.einsum("ozua,avxy->ozuvxy", c, riem)
                - np.einsum("oauv,azxy->ozuvxy", c, riem)
            )
            valence = (1, 5)
        case (0, 2):
            result = -np.einsum("av,auxy->uvxy", c, riem) - np.einsum("ua,avxy->uvxy", c, riem)
            valence = (0, 4)
        case (0, 4):
            result = -(
                np.einsum("aqrs,apxy->pqrsxy", c, riem)
                + np.einsum("pars,aqxy->pqrsxy", c, riem)
                + np.einsum("pqas,arxy->pqrsxy", c, riem)
                + np.einsum("pqra,asxy->pqrsxy", c, riem)
            )
            valence = (0, 6)
        case _:
            raise ValenceMismatchError(t.valence)
    return TensorAtPoint(valence, result, t.point)
