"""Second-order forward-mode differentiation.

Two carriers live here:

- `Jet2`, a scalar with its gradient and Hessian in the manifold
  coordinates. The expression evaluator produces these.
- `JetArray`, a dense array of jets stored as three numpy arrays (values,
  gradients, Hessians) with the derivative axes trailing. Frames, coframes,
  metrics and Christoffel symbols are `JetArray`s; products between them go
  through `jet_einsum`, which applies the Leibniz rule to any multilinear
  contraction.

Differentiating a `JetArray` lowers its order by one, so a metric known to
second order yields Christoffel symbols known to first order and curvature
known at value level.
"""

import functools
import logging
import math
import string
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from src.constants import MAX_INVERSE_CONDITION
from src.errors import GeometryError

logger = logging.getLogger(__name__)

JetOp = Literal[
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "exp",
    "log",
    "sin",
    "cos",
    "sinh",
    "cosh",
    "powi",
]


class JetDomainError(GeometryError):
    """Raised when an operation is evaluated outside its domain."""

    def __init__(self, op: str, value: float):
        self.op = op
        self.value = value
        super().__init__(f"{op} is undefined at value {value!r}")


class DimensionMismatchError(GeometryError):
    """Raised when jets over different coordinate dimensions are mixed."""


class SingularMatrixError(GeometryError):
    """Raised when a matrix is too badly conditioned to invert."""

    def __init__(self, condition: float, point: Sequence[float] | None = None):
        self.condition = condition
        self.point = None if point is None else tuple(float(x) for x in point)
        where = "" if self.point is None else f" at point {self.point}"
        super().__init__(f"matrix is singular (condition {condition:.3e}){where}")


class RankDeficientError(GeometryError):
    """Raised when a least-squares design has a dependent column."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(f"design column {column} is linearly dependent")


@functools.lru_cache(maxsize=None)
def _tril(dim: int) -> tuple[np.ndarray, np.ndarray]:
    return np.tril_indices(dim)


def pack_symmetric(full: np.ndarray) -> np.ndarray:
    """Pack the lower triangle of a symmetric matrix row by row."""
    rows, cols = _tril(full.shape[0])
    return full[rows, cols].copy()


def unpack_symmetric(tri: np.ndarray, dim: int) -> np.ndarray:
    rows, cols = _tril(dim)
    full = np.zeros((dim, dim))
    full[rows, cols] = tri
    full[cols, rows] = tri
    return full


def _sym_outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Packed a⊗b + b⊗a."""
    rows, cols = _tril(a.shape[0])
    return a[rows] * b[cols] + b[rows] * a[cols]


@dataclass(frozen=True, eq=False)
class Jet2:
    """Value, gradient and Hessian of a scalar field at one point.

    The Hessian is stored as its packed lower triangle, so it is symmetric
    by construction. Use `hessian` for the full matrix.
    """

    value: float
    grad: np.ndarray
    hess: np.ndarray

    @classmethod
    def constant(cls, value: float, dim: int) -> "Jet2":
        return cls(float(value), np.zeros(dim), np.zeros(dim * (dim + 1) // 2))

    @classmethod
    def variable(cls, value: float, index: int, dim: int) -> "Jet2":
        """The coordinate function x^index, evaluated where x^index = value."""
        grad = np.zeros(dim)
        grad[index] = 1.0
        return cls(float(value), grad, np.zeros(dim * (dim + 1) // 2))

    @classmethod
    def from_full(cls, value: float, grad: np.ndarray, hessian: np.ndarray) -> "Jet2":
        return cls(float(value), np.asarray(grad, dtype=float), pack_symmetric(hessian))

    @property
    def dim(self) -> int:
        return self.grad.shape[0]

    @property
    def hessian(self) -> np.ndarray:
        return unpack_symmetric(self.hess, self.dim)

    def _coerce(self, other: "Jet2 | float") -> "Jet2":
        if isinstance(other, Jet2):
            if other.dim != self.dim:
                raise DimensionMismatchError(
                    f"cannot combine jets of dimension {self.dim} and {other.dim}"
                )
            return other
        return Jet2.constant(float(other), self.dim)

    def __add__(self, other: "Jet2 | float") -> "Jet2":
        return jet_apply("add", [self, self._coerce(other)])

    def __radd__(self, other: float) -> "Jet2":
        return jet_apply("add", [self._coerce(other), self])

    def __sub__(self, other: "Jet2 | float") -> "Jet2":
        return jet_apply("sub", [self, self._coerce(other)])

    def __rsub__(self, other: float) -> "Jet2":
        return jet_apply("sub", [self._coerce(other), self])

    def __mul__(self, other: "Jet2 | float") -> "Jet2":
        return jet_apply("mul", [self, self._coerce(other)])

    def __rmul__(self, other: float) -> "Jet2":
        return jet_apply("mul", [self._coerce(other), self])

    def __truediv__(self, other: "Jet2 | float") -> "Jet2":
        return jet_apply("div", [self, self._coerce(other)])

    def __rtruediv__(self, other: float) -> "Jet2":
        return jet_apply("div", [self._coerce(other), self])

    def __neg__(self) -> "Jet2":
        return jet_apply("neg", [self])

    def __pow__(self, exponent: int) -> "Jet2":
        return powi(self, exponent)

    def __repr__(self) -> str:
        return f"Jet2(value={self.value!r}, grad={self.grad.tolist()!r})"


def _chain(x: Jet2, f0: float, f1: float, f2: float) -> Jet2:
    """Compose a scalar function with value f0, f' = f1, f'' = f2 at x.value."""
    return Jet2(f0, f1 * x.grad, f1 * x.hess + 0.5 * f2 * _sym_outer(x.grad, x.grad))


def _add(a: Jet2, b: Jet2) -> Jet2:
    return Jet2(a.value + b.value, a.grad + b.grad, a.hess + b.hess)


def _sub(a: Jet2, b: Jet2) -> Jet2:
    return Jet2(a.value - b.value, a.grad - b.grad, a.hess - b.hess)


def _neg(a: Jet2) -> Jet2:
    return Jet2(-a.value, -a.grad, -a.hess)


def _mul(a: Jet2, b: Jet2) -> Jet2:
    return Jet2(
        a.value * b.value,
        a.value * b.grad + b.value * a.grad,
        a.value * b.hess + b.value * a.hess + _sym_outer(a.grad, b.grad),
    )


def _reciprocal(b: Jet2) -> Jet2:
    v = b.value
    if v == 0.0:
        raise JetDomainError("div", v)
    return _chain(b, 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))


def _div(a: Jet2, b: Jet2) -> Jet2:
    return _mul(a, _reciprocal(b))


def _exp(a: Jet2) -> Jet2:
    e = math.exp(a.value) if a.value < 709.0 else math.inf
    return _chain(a, e, e, e)


def _log(a: Jet2) -> Jet2:
    v = a.value
    if v <= 0.0:
        raise JetDomainError("log", v)
    return _chain(a, math.log(v), 1.0 / v, -1.0 / (v * v))


def _sin(a: Jet2) -> Jet2:
    s, c = math.sin(a.value), math.cos(a.value)
    return _chain(a, s, c, -s)


def _cos(a: Jet2) -> Jet2:
    s, c = math.sin(a.value), math.cos(a.value)
    return _chain(a, c, -s, -c)


def _hyperbolic(v: float) -> tuple[float, float]:
    if abs(v) >= 710.0:
        return math.copysign(math.inf, v), math.inf
    return math.sinh(v), math.cosh(v)


def _sinh(a: Jet2) -> Jet2:
    s, c = _hyperbolic(a.value)
    return _chain(a, s, c, s)


def _cosh(a: Jet2) -> Jet2:
    s, c = _hyperbolic(a.value)
    return _chain(a, c, s, c)


def powi(base: Jet2, exponent: int) -> Jet2:
    """base**exponent for an integer exponent."""
    if not isinstance(exponent, int) or isinstance(exponent, bool):
        raise TypeError(f"powi takes an integer exponent, got {exponent!r}")
    v = base.value
    if exponent == 0:
        return Jet2.constant(1.0, base.dim)
    if v == 0.0 and exponent < 0:
        raise JetDomainError("powi", v)
    try:
        f0 = v**exponent
        f1 = exponent * v ** (exponent - 1)
        f2 = 0.0 if exponent == 1 else exponent * (exponent - 1) * v ** (exponent - 2)
    except OverflowError as e:
        raise JetDomainError("powi", v) from e
    return _checked("powi", _chain(base, f0, f1, f2))


_UNARY: dict[str, Callable[[Jet2], Jet2]] = {
    "neg": _neg,
    "exp": _exp,
    "log": _log,
    "sin": _sin,
    "cos": _cos,
    "sinh": _sinh,
    "cosh": _cosh,
}

_BINARY: dict[str, Callable[[Jet2, Jet2], Jet2]] = {
    "add": _add,
    "sub": _sub,
    "mul": _mul,
    "div": _div,
}


def _checked(op: str, result: Jet2) -> Jet2:
    if not (
        math.isfinite(result.value)
        and np.all(np.isfinite(result.grad))
        and np.all(np.isfinite(result.hess))
    ):
        raise JetDomainError(op, result.value)
    return result


def jet_apply(op: JetOp, args: Sequence[Jet2 | int]) -> Jet2:
    """Apply one elementary operation to jets.

    `powi` takes `[base, exponent]` with an integer exponent; the binary
    arithmetic operations take two jets of the same dimension and every
    other operation takes one jet.

    Raises:
        JetDomainError: division by zero, log of a non-positive value, a
            negative power of zero, or a non-finite result.
    """
    if op == "powi":
        base, exponent = args
        return powi(base, exponent)
    if op in _BINARY:
        a, b = args
        if a.dim != b.dim:
            raise DimensionMismatchError(
                f"cannot combine jets of dimension {a.dim} and {b.dim}"
            )
        return _checked(op, _BINARY[op](a, b))
    if op in _UNARY:
        (a,) = args
        return _checked(op, _UNARY[op](a))
    raise ValueError(f"unknown jet operation {op!r}")


@dataclass(frozen=True, eq=False)
class JetArray:
    """A dense array of jets over `dim` coordinates.

    `grad` has shape `value.shape + (dim,)` and `hess` has shape
    `value.shape + (dim, dim)`. Either may be None, which lowers the order of
    the array: order 2 carries both, order 1 only the gradient and order 0
    only values. Two-dimensional instances play the role of jet matrices
    (frame, coframe, metric).
    """

    value: np.ndarray
    dim: int
    grad: np.ndarray | None = None
    hess: np.ndarray | None = None

    @property
    def order(self) -> int:
        if self.hess is not None:
            return 2
        if self.grad is not None:
            return 1
        return 0

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @classmethod
    def constant(cls, value: np.ndarray, dim: int, order: int = 2) -> "JetArray":
        value = np.asarray(value, dtype=float)
        grad = np.zeros(value.shape + (dim,)) if order >= 1 else None
        hess = np.zeros(value.shape + (dim, dim)) if order >= 2 else None
        return cls(value, dim, grad, hess)

    @classmethod
    def from_jets(cls, entries: Sequence) -> "JetArray":
        """Stack a vector or a list of rows of `Jet2` into a second-order array."""
        if _is_nested(entries):
            shape = (len(entries), len(entries[0]))
            flat = [jet for row in entries for jet in row]
            if len(flat) != shape[0] * shape[1]:
                raise ValueError("rows of a jet matrix must have equal length")
        else:
            shape = (len(entries),)
            flat = list(entries)
        dims = {jet.dim for jet in flat}
        if len(dims) != 1:
            raise DimensionMismatchError(f"mixed jet dimensions {sorted(dims)}")
        (dim,) = dims
        value = np.array([jet.value for jet in flat]).reshape(shape)
        grad = np.array([jet.grad for jet in flat]).reshape(shape + (dim,))
        hess = np.array([jet.hessian for jet in flat]).reshape(shape + (dim, dim))
        return cls(value, dim, grad, hess)

    def entry(self, *idx: int) -> Jet2:
        if self.order < 2:
            raise ValueError("entry() needs a second-order array")
        return Jet2.from_full(self.value[idx], self.grad[idx], self.hess[idx])

    def truncate(self, order: int) -> "JetArray":
        return JetArray(
            self.value,
            self.dim,
            self.grad if order >= 1 else None,
            self.hess if order >= 2 else None,
        )

    def derivative(self) -> "JetArray":
        """Partial derivatives, with the new coordinate index as the last axis."""
        if self.grad is None:
            raise ValueError("array carries no derivatives")
        return JetArray(self.grad, self.dim, self.hess, None)

    def transpose(self, *axes: int) -> "JetArray":
        n = self.ndim
        return JetArray(
            self.value.transpose(axes),
            self.dim,
            None if self.grad is None else self.grad.transpose(axes + (n,)),
            None if self.hess is None else self.hess.transpose(axes + (n, n + 1)),
        )

    def __getitem__(self, idx) -> "JetArray":
        return JetArray(
            np.asarray(self.value[idx]),
            self.dim,
            None if self.grad is None else self.grad[idx],
            None if self.hess is None else self.hess[idx],
        )

    def _combine(self, other: "JetArray | np.ndarray | float", sign: float) -> "JetArray":
        if not isinstance(other, JetArray):
            return JetArray(self.value + sign * np.asarray(other), self.dim, self.grad, self.hess)
        if other.dim != self.dim:
            raise DimensionMismatchError(
                f"cannot combine jet arrays of dimension {self.dim} and {other.dim}"
            )
        order = min(self.order, other.order)
        return JetArray(
            self.value + sign * other.value,
            self.dim,
            self.grad + sign * other.grad if order >= 1 else None,
            self.hess + sign * other.hess if order >= 2 else None,
        )

    def __add__(self, other: "JetArray | np.ndarray | float") -> "JetArray":
        return self._combine(other, 1.0)

    def __radd__(self, other: "np.ndarray | float") -> "JetArray":
        return self._combine(other, 1.0)

    def __sub__(self, other: "JetArray | np.ndarray | float") -> "JetArray":
        return self._combine(other, -1.0)

    def __mul__(self, scale: float) -> "JetArray":
        scale = float(scale)
        return JetArray(
            self.value * scale,
            self.dim,
            None if self.grad is None else self.grad * scale,
            None if self.hess is None else self.hess * scale,
        )

    __rmul__ = __mul__

    def __neg__(self) -> "JetArray":
        return self * -1.0


def _is_nested(entries: Sequence) -> bool:
    return len(entries) > 0 and not isinstance(entries[0], Jet2)


def _spare_letters(subscripts: str, count: int) -> list[str]:
    used = set(subscripts)
    return [c for c in string.ascii_letters if c not in used][:count]


def jet_einsum(subscripts: str, *operands: "JetArray | np.ndarray") -> JetArray:
    """`numpy.einsum` over jet arrays, differentiated by the Leibniz rule.

    Plain numpy operands are treated as constants. The result has the lowest
    order among the jet operands.
    """
    inputs, output = subscripts.replace(" ", "").split("->")
    terms = inputs.split(",")
    if len(terms) != len(operands):
        raise ValueError(f"{subscripts!r} expects {len(terms)} operands, got {len(operands)}")
    varying = [k for k, op in enumerate(operands) if isinstance(op, JetArray)]
    if not varying:
        raise ValueError("jet_einsum needs at least one JetArray operand")
    dims = {operands[k].dim for k in varying}
    if len(dims) != 1:
        raise DimensionMismatchError(f"mixed jet dimensions {sorted(dims)}")
    (dim,) = dims
    order = min(operands[k].order for k in varying)
    p, q = _spare_letters(subscripts, 2)
    values = [op.value if isinstance(op, JetArray) else np.asarray(op, dtype=float) for op in operands]

    value = np.asarray(np.einsum(subscripts, *values))
    grad = hess = None

    if order >= 1:
        grad = np.zeros(value.shape + (dim,))
        for k in varying:
            sub = list(terms)
            ops = list(values)
            sub[k] += p
            ops[k] = operands[k].grad
            grad += np.einsum(",".join(sub) + "->" + output + p, *ops)

    if order >= 2:
        hess = np.zeros(value.shape + (dim, dim))
        for k in varying:
            sub = list(terms)
            ops = list(values)
            sub[k] += p + q
            ops[k] = operands[k].hess
            hess += np.einsum(",".join(sub) + "->" + output + p + q, *ops)
            for l in varying:
                if l == k:
                    continue
                sub = list(terms)
                ops = list(values)
                sub[k] += p
                sub[l] += q
                ops[k] = operands[k].grad
                ops[l] = operands[l].grad
                hess += np.einsum(",".join(sub) + "->" + output + p + q, *ops)
        hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))

    return JetArray(value, dim, grad, hess)


def jet_matrix_inverse(
    m: JetArray,
    max_condition: float = MAX_INVERSE_CONDITION,
    point: Sequence[float] | None = None,
) -> JetArray:
    """Invert a square jet matrix, propagating derivatives to the same order.

    Raises:
        SingularMatrixError: when the value part has a condition number
            above `max_condition`.
    """
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    condition = float(np.linalg.cond(m.value))
    if not math.isfinite(condition) or condition > max_condition:
        raise SingularMatrixError(condition, point)

    inv = np.linalg.inv(m.value)
    grad = hess = None
    if m.order >= 1:
        grad = -np.einsum("ij,jkp,kl->ilp", inv, m.grad, inv)
    if m.order >= 2:
        cross = np.einsum("jkp,kl,lmq->jmpq", m.grad, inv, m.grad)
        inner = cross + np.swapaxes(cross, -1, -2) - m.hess
        hess = np.einsum("ij,jmpq,mn->inpq", inv, inner, inv)
        hess = 0.5 * (hess + np.swapaxes(hess, -1, -2))
    return JetArray(inv, m.dim, grad, hess)


@dataclass(frozen=True)
class LeastSquaresFit:
    coefficients: np.ndarray
    residual: float


def least_squares(design: np.ndarray, target: np.ndarray, rtol: float = 1e-10) -> LeastSquaresFit:
    """Solve min |design @ c - target| through a QR factorisation.

    The residual is the max-norm of the defect.

    Raises:
        RankDeficientError: naming the first column that depends on the
            ones before it.
    """
    a = np.asarray(design, dtype=float)
    b = np.asarray(target, dtype=float).reshape(-1)
    if a.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ValueError(f"design {a.shape} does not match target {b.shape}")
    rows, cols = a.shape
    if rows < cols:
        raise RankDeficientError(rows)

    q, r = np.linalg.qr(a)
    scale = float(np.max(np.linalg.norm(a, axis=0))) if cols else 0.0
    diag = np.abs(np.diag(r))
    for j in range(cols):
        if diag[j] <= rtol * scale or scale == 0.0:
            raise RankDeficientError(j)

    coefficients = np.linalg.solve(r, q.T @ b)
    defect = a @ coefficients - b
    residual = float(np.max(np.abs(defect))) if rows else 0.0
    logger.debug("Least-squares fit over %d rows: residual %.3e", rows, residual)
    return LeastSquaresFit(coefficients, residual)
