"""Scalar-field expressions and manifold model files.

Expressions are parsed by a small recursive-descent parser into an immutable
tree, printed back fully parenthesised, and evaluated to `Jet2` at a point.
Model files describe a manifold by its frame fields; `parse_model` turns one
into a validated `ModelSpec`.
"""

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)

from src import constants
from src.errors import GeometryError
from src.jets import Jet2, JetDomainError, jet_apply

logger = logging.getLogger(__name__)

FUNCTIONS = ("exp", "log", "sin", "cos", "sinh", "cosh")
MODELS_DIR = Path(__file__).parent / "models"


class ExprSyntaxError(GeometryError):
    """Raised on malformed expression text.

    `offset` is a byte offset into the UTF-8 encoded source.
    """

    def __init__(self, source: str, offset: int, expected: Sequence[str]):
        self.source = source
        self.offset = offset
        self.expected = tuple(expected)
        super().__init__(
            f"syntax error at offset {offset}: expected {' or '.join(self.expected)}"
        )


class UnknownIdentifierError(GeometryError):
    def __init__(self, name: str, coordinates: Sequence[str]):
        self.name = name
        self.coordinates = tuple(coordinates)
        super().__init__(
            f"unknown identifier {name!r}; coordinates are {', '.join(self.coordinates) or '(none)'}"
            f" and functions are {', '.join(FUNCTIONS)}"
        )


class ExpressionDomainError(GeometryError):
    """Raised when an expression is evaluated outside its domain.

    `path` lists the node kinds from the root down to the failing node.
    """

    def __init__(self, path: Sequence[str], value: float, op: str):
        self.path = tuple(path)
        self.value = value
        self.op = op
        super().__init__(
            f"{op} is undefined at value {value!r} (in {' > '.join(self.path)})"
        )


class ModelSyntaxError(GeometryError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ModelValidationError(GeometryError):
    """Raised when a model violates a structural rule.

    `errors` holds one `(field, rule)` pair per violation.
    """

    def __init__(self, errors: Sequence[tuple[str, str]]):
        self.errors = list(errors)
        super().__init__(
            "invalid model: " + "; ".join(f"{field}: {rule}" for field, rule in self.errors)
        )


class UnknownModelError(GeometryError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(
            f"unknown built-in model {name!r}; available: {', '.join(constants.BUILTIN_MODELS)}"
        )


# Expression tree


class Expr:
    """Base class of expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Coord(Expr):
    index: int
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: Literal["neg", "exp", "log", "sin", "cos", "sinh", "cosh"]
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: Literal["add", "sub", "mul", "div"]
    left: Expr
    right: Expr


@dataclass(frozen=True)
class PowI(Expr):
    base: Expr
    exponent: int


_BINARY_SYMBOLS = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def print_expr(e: Expr) -> str:
    """Render an expression fully parenthesised so that it parses back unchanged."""
    match e:
        case Const(value):
            return repr(float(value))
        case Coord(_, name):
            return name
        case Unary("neg", arg):
            return f"(-{print_expr(arg)})"
        case Unary(op, arg):
            return f"{op}({print_expr(arg)})"
        case Binary(op, left, right):
            return f"({print_expr(left)} {_BINARY_SYMBOLS[op]} {print_expr(right)})"
        case PowI(base, exponent):
            return f"({print_expr(base)}^{exponent})"
    raise TypeError(f"not an expression node: {e!r}")


# Tokenizer and parser

_TOKEN = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Token:
    kind: Literal["number", "ident", "op", "end"]
    text: str
    offset: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    byte_offset = 0
    while True:
        while pos < len(source) and source[pos].isspace():
            byte_offset += len(source[pos].encode("utf-8"))
            pos += 1
        if pos == len(source):
            tokens.append(_Token("end", "", byte_offset))
            return tokens
        match = _TOKEN.match(source, pos)
        if match is None:
            raise ExprSyntaxError(source, byte_offset, ("number", "identifier", "operator"))
        kind = match.lastgroup
        text = match.group(kind)
        tokens.append(_Token(kind, text, byte_offset))
        byte_offset += len(source[pos : match.end()].lstrip().encode("utf-8"))
        pos = match.end()


class _Parser:
    def __init__(self, source: str, coordinates: Sequence[str]):
        self.source = source
        self.coordinates = tuple(coordinates)
        self.tokens = _tokenize(source)
        self.pos = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.pos]

    def _advance(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def _fail(self, *expected: str):
        raise ExprSyntaxError(self.source, self.current.offset, expected)

    def _is_op(self, *symbols: str) -> bool:
        return self.current.kind == "op" and self.current.text in symbols

    def _expect_op(self, symbol: str) -> None:
        if not self._is_op(symbol):
            self._fail(repr(symbol))
        self._advance()

    def parse(self) -> Expr:
        tree = self._sum()
        if self.current.kind != "end":
            self._fail("operator", "end of input")
        return tree

    def _sum(self) -> Expr:
        left = self._product()
        while self._is_op("+", "-"):
            op = "add" if self._advance().text == "+" else "sub"
            left = Binary(op, left, self._product())
        return left

    def _product(self) -> Expr:
        left = self._power()
        while self._is_op("*", "/"):
            op = "mul" if self._advance().text == "*" else "div"
            left = Binary(op, left, self._power())
        return left

    def _power(self) -> Expr:
        base = self._unary()
        while self._is_op("^"):
            self._advance()
            base = PowI(base, self._integer())
        return base

    def _integer(self) -> int:
        sign = 1
        if self._is_op("-"):
            self._advance()
            sign = -1
        token = self.current
        if token.kind != "number" or not token.text.isdigit():
            self._fail("integer exponent")
        self._advance()
        return sign * int(token.text)

    def _unary(self) -> Expr:
        if self._is_op("-"):
            self._advance()
            return Unary("neg", self._unary())
        return self._atom()

    def _atom(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self._advance()
            return Const(float(token.text))
        if token.kind == "ident":
            self._advance()
            if token.text in FUNCTIONS:
                self._expect_op("(")
                arg = self._sum()
                self._expect_op(")")
                return Unary(token.text, arg)
            if token.text in self.coordinates:
                return Coord(self.coordinates.index(token.text), token.text)
            raise UnknownIdentifierError(token.text, self.coordinates)
        if self._is_op("("):
            self._advance()
            inner = self._sum()
            self._expect_op(")")
            return inner
        self._fail("expression")


def parse_expr(source: str, coordinates: Sequence[str]) -> Expr:
    """Parse expression text over the given coordinate names.

    Raises:
        ExprSyntaxError: on malformed input, with the byte offset and the
            set of tokens that would have been accepted.
        UnknownIdentifierError: on a name that is neither a coordinate nor
            a function.
    """
    return _Parser(source, coordinates).parse()


def eval_expr(e: Expr, point: Sequence[float]) -> Jet2:
    """Evaluate an expression to a second-order jet at `point`.

    Raises:
        ExpressionDomainError: when any node leaves its domain.
    """
    dim = len(point)
    return _eval(e, [float(x) for x in point], dim, [])


def _eval(e: Expr, point: list[float], dim: int, path: list[str]) -> Jet2:
    match e:
        case Const(value):
            return Jet2.constant(value, dim)
        case Coord(index, _):
            return Jet2.variable(point[index], index, dim)
        case Unary(op, arg):
            args = [_eval(arg, point, dim, path + [op])]
        case Binary(op, left, right):
            args = [
                _eval(left, point, dim, path + [op]),
                _eval(right, point, dim, path + [op]),
            ]
        case PowI(base, exponent):
            op = "powi"
            args = [_eval(base, point, dim, path + [op]), exponent]
        case _:
            raise TypeError(f"not an expression node: {e!r}")
    try:
        return jet_apply(op, args)
    except JetDomainError as err:
        raise ExpressionDomainError(path + [op], err.value, err.op) from err


def constant_value(source: str) -> float:
    """Evaluate an expression that mentions no coordinates."""
    return eval_expr(parse_expr(source, ()), ()).value


# Model files


class FrameReference(BaseModel):
    """A transcribed bracket or connection entry, in frame components.

    For `kind == "bracket"` the entry is [E_i, E_j]; for `kind == "nabla"`
    it is the covariant derivative of E_j along E_i.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["bracket", "nabla"]
    i: int
    j: int
    components: tuple[Expr, ...]
    line: int


class ModelSpec(BaseModel):
    """A validated manifold model.

    Frame indices are zero-based here; model files count from one.
    `phi_frame[j][i]` is the coefficient of E_j in φE_i.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    n: int = Field(ge=1)
    coords: tuple[str, ...]
    frame: tuple[tuple[Expr, ...], ...]
    xi_index: int
    epsilon: tuple[int, ...]
    phi_frame: tuple[tuple[int, ...], ...]
    pp_params: tuple[float, float] = constants.DEFAULT_PP_PARAMS
    box: tuple[tuple[float, float], ...]
    alpha_ref: Expr | None = None
    beta_ref: Expr | None = None
    references: tuple[FrameReference, ...] = ()

    @property
    def dim(self) -> int:
        return 2 * self.n + 1

    @property
    def box_center(self) -> tuple[float, ...]:
        return tuple(0.5 * (lo + hi) for lo, hi in self.box)

    @field_validator("coords")
    @classmethod
    def _check_coords(cls, coords: tuple[str, ...], info: ValidationInfo):
        n = info.data.get("n")
        if n is not None and len(coords) != 2 * n + 1:
            raise ValueError(f"expected {2 * n + 1} coordinates, got {len(coords)}")
        if len(set(coords)) != len(coords):
            raise ValueError("coordinate names must be distinct")
        clashes = sorted(set(coords) & set(FUNCTIONS))
        if clashes:
            raise ValueError(f"coordinate names clash with functions: {', '.join(clashes)}")
        return coords

    @field_validator("frame")
    @classmethod
    def _check_frame(cls, frame, info: ValidationInfo):
        d = _dimension(info)
        if d is not None and (len(frame) != d or any(len(row) != d for row in frame)):
            raise ValueError(f"frame must have {d} fields with {d} components each")
        return frame

    @field_validator("xi_index")
    @classmethod
    def _check_xi_index(cls, xi_index: int, info: ValidationInfo):
        d = _dimension(info)
        if d is not None and not 0 <= xi_index < d:
            raise ValueError(f"xi must name one of E1..E{d}")
        return xi_index

    @field_validator("epsilon")
    @classmethod
    def _check_epsilon(cls, epsilon: tuple[int, ...], info: ValidationInfo):
        n = info.data.get("n")
        if n is None:
            return epsilon
        if len(epsilon) != 2 * n + 1 or any(e not in (1, -1) for e in epsilon):
            raise ValueError(f"epsilon must hold {2 * n + 1} signs +1 or -1")
        if epsilon.count(1) != n + 1:
            raise ValueError(f"signature must be ({n + 1}, {n})")
        xi_index = info.data.get("xi_index")
        if xi_index is not None and epsilon[xi_index] != 1:
            raise ValueError("xi must be spacelike: epsilon of xi must be +1")
        return epsilon

    @field_validator("phi_frame")
    @classmethod
    def _check_phi(cls, phi_frame, info: ValidationInfo):
        d = _dimension(info)
        xi = info.data.get("xi_index")
        if d is None or xi is None:
            return phi_frame
        if len(phi_frame) != d or any(len(row) != d for row in phi_frame):
            raise ValueError(f"phi must act on {d} frame fields")
        p = np.array(phi_frame, dtype=float)
        if np.any(p[:, xi] != 0):
            raise ValueError("φξ = 0 violated")
        if np.any(p[xi, :] != 0):
            raise ValueError("η∘φ = 0 violated")
        projector = np.eye(d)
        projector[xi, xi] = 0.0
        if np.any(p @ p != projector):
            raise ValueError("φ² = id − η⊗ξ violated")
        eps = info.data.get("epsilon")
        if eps is not None:
            g = np.diag(np.array(eps, dtype=float))
            eta = np.zeros(d)
            eta[xi] = 1.0
            if np.any(p.T @ g @ p != -g + np.outer(eta, eta)):
                raise ValueError("g(φX, φY) = −g(X, Y) + η(X)η(Y) violated")
        return phi_frame

    @field_validator("pp_params")
    @classmethod
    def _check_pp_params(cls, pp_params: tuple[float, float]):
        if pp_params[0] == 0.0 or pp_params[1] == 0.0:
            raise ValueError("pseudo-projective constants a and b must be nonzero")
        return pp_params

    @field_validator("box")
    @classmethod
    def _check_box(cls, box, info: ValidationInfo):
        d = _dimension(info)
        if d is not None and len(box) != d:
            raise ValueError(f"box needs {d} intervals")
        for lo, hi in box:
            if not lo < hi:
                raise ValueError(f"empty interval [{lo}, {hi}]")
        return box

    @field_validator("references")
    @classmethod
    def _check_references(cls, references, info: ValidationInfo):
        d = _dimension(info)
        if d is None:
            return references
        for ref in references:
            if not (0 <= ref.i < d and 0 <= ref.j < d):
                raise ValueError(f"line {ref.line}: frame index out of range")
            if len(ref.components) != d:
                raise ValueError(f"line {ref.line}: expected {d} components")
        return references

    @model_validator(mode="after")
    def _check_frame_invertible(self):
        center = self.box_center
        try:
            values = np.array(
                [[eval_expr(e, center).value for e in row] for row in self.frame]
            )
        except ExpressionDomainError as e:
            raise ValueError(f"frame is undefined at the sample-box centre: {e}") from e
        condition = float(np.linalg.cond(values))
        if not np.isfinite(condition) or condition > constants.MAX_FRAME_CONDITION:
            raise ValueError(
                f"frame is not invertible at the sample-box centre (condition {condition:.3e})"
            )
        return self


def _dimension(info: ValidationInfo) -> int | None:
    n = info.data.get("n")
    return None if n is None else 2 * n + 1


# Model file parser

_FRAME_NAME = re.compile(r"E(\d+)$")


def _split_top_level(text: str) -> list[str]:
    parts = []
    depth = 0
    current = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    parts.append("".join(current).strip())
    return parts


def _tuple_body(text: str, line: int) -> list[str]:
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise ModelSyntaxError(line, f"expected a parenthesised list, got {text!r}")
    return _split_top_level(text[1:-1])


class _ModelReader:
    def __init__(self):
        self.fields: dict = {}
        self.frame: dict[int, tuple[Expr, ...]] = {}
        self.phi: dict[int, dict[int, int]] = {}
        self.box: dict[str, tuple[float, float]] = {}
        self.references: list[FrameReference] = []

    def _coords(self, line: int) -> tuple[str, ...]:
        coords = self.fields.get("coords")
        if coords is None:
            raise ModelSyntaxError(line, "coords must be declared before this statement")
        return coords

    def _frame_index(self, name: str, line: int) -> int:
        if name == "xi":
            if "xi_index" not in self.fields:
                raise ModelSyntaxError(line, "xi must be declared before it is referenced")
            return self.fields["xi_index"]
        match = _FRAME_NAME.match(name)
        if match is None or int(match.group(1)) < 1:
            raise ModelSyntaxError(line, f"expected a frame field name like E1, got {name!r}")
        return int(match.group(1)) - 1

    def _exprs(self, body: str, line: int) -> tuple[Expr, ...]:
        coords = self._coords(line)
        try:
            return tuple(parse_expr(part, coords) for part in _tuple_body(body, line))
        except (ExprSyntaxError, UnknownIdentifierError) as e:
            raise ModelSyntaxError(line, str(e)) from e

    def _expr(self, body: str, line: int) -> Expr:
        try:
            return parse_expr(body, self._coords(line))
        except (ExprSyntaxError, UnknownIdentifierError) as e:
            raise ModelSyntaxError(line, str(e)) from e

    def _number(self, text: str, line: int) -> float:
        try:
            return constant_value(text)
        except GeometryError as e:
            raise ModelSyntaxError(line, f"expected a constant, got {text!r}") from e

    def _phi_action(self, body: str, line: int) -> dict[int, int]:
        body = body.replace(" ", "")
        if body == "0":
            return {}
        action: dict[int, int] = {}
        for match in re.finditer(r"([+-]?)(\d*)\*?(E\d+|xi)|(.)", body):
            if match.group(4) is not None:
                raise ModelSyntaxError(line, f"cannot read phi action {body!r}")
            sign = -1 if match.group(1) == "-" else 1
            scale = int(match.group(2)) if match.group(2) else 1
            target = self._frame_index(match.group(3), line)
            action[target] = action.get(target, 0) + sign * scale
        return action

    def statement(self, text: str, line: int) -> None:
        head, _, rest = text.partition("=")
        words = head.split()
        if not words:
            raise ModelSyntaxError(line, f"cannot read statement {text!r}")
        keyword = words[0]

        if keyword == "model":
            match = re.fullmatch(r'model\s+"([^"]*)"', text.strip())
            if match is None:
                raise ModelSyntaxError(line, 'expected model "<name>"')
            self.fields["name"] = match.group(1)
            return
        if keyword == "box":
            match = re.fullmatch(r"box\s+(\w+)\s+in\s+\[(.*),(.*)\]", text.strip())
            if match is None:
                raise ModelSyntaxError(line, "expected box <coord> in [<lo>, <hi>]")
            self.box[match.group(1)] = (
                self._number(match.group(2), line),
                self._number(match.group(3), line),
            )
            return
        if not rest:
            raise ModelSyntaxError(line, f"expected '=' in statement {text!r}")

        if keyword == "n" and len(words) == 1:
            try:
                self.fields["n"] = int(rest.strip())
            except ValueError as e:
                raise ModelSyntaxError(line, f"n must be an integer, got {rest.strip()!r}") from e
        elif keyword == "coords" and len(words) == 1:
            self.fields["coords"] = tuple(c.strip() for c in rest.split(","))
        elif keyword == "frame" and len(words) == 2:
            self.frame[self._frame_index(words[1], line)] = self._exprs(rest, line)
        elif keyword == "epsilon" and len(words) == 1:
            signs = []
            for part in _tuple_body(rest, line):
                try:
                    signs.append(int(part.replace(" ", "")))
                except ValueError as e:
                    raise ModelSyntaxError(line, f"epsilon entries must be +1 or -1, got {part!r}") from e
            self.fields["epsilon"] = tuple(signs)
        elif keyword == "phi" and len(words) == 2:
            self.phi[self._frame_index(words[1], line)] = self._phi_action(rest, line)
        elif keyword == "xi" and len(words) == 1:
            self.fields["xi_index"] = self._frame_index(rest.strip(), line)
        elif keyword == "pp_params" and len(words) == 1:
            values = [self._number(part, line) for part in _tuple_body(rest, line)]
            if len(values) != 2:
                raise ModelSyntaxError(line, "pp_params takes two constants (a, b)")
            self.fields["pp_params"] = tuple(values)
        elif keyword in ("alpha_ref", "beta_ref") and len(words) == 1:
            self.fields[keyword] = self._expr(rest, line)
        elif keyword == "ref" and len(words) == 4 and words[1] in ("bracket", "nabla"):
            self.references.append(
                FrameReference(
                    kind=words[1],
                    i=self._frame_index(words[2], line),
                    j=self._frame_index(words[3], line),
                    components=self._exprs(rest, line),
                    line=line,
                )
            )
        else:
            raise ModelSyntaxError(line, f"unknown statement {head.strip()!r}")

    def build(self) -> ModelSpec:
        fields = dict(self.fields)
        if "name" not in fields:
            raise ModelSyntaxError(1, 'missing model "<name>" statement')
        for required in ("n", "coords", "epsilon", "xi_index"):
            if required not in fields:
                raise ModelSyntaxError(1, f"missing {required.replace('_index', '')} statement")
        coords = fields["coords"]
        d = len(coords)
        missing = [f"E{i + 1}" for i in range(d) if i not in self.frame]
        if missing or len(self.frame) != d:
            raise ModelSyntaxError(1, f"frame must define exactly E1..E{d}")
        fields["frame"] = tuple(self.frame[i] for i in range(d))

        phi = [[0] * d for _ in range(d)]
        for i, action in self.phi.items():
            for j, coefficient in action.items():
                if not (0 <= i < d and 0 <= j < d):
                    raise ModelSyntaxError(1, "phi refers to a frame field that does not exist")
                phi[j][i] = coefficient
        fields["phi_frame"] = tuple(tuple(row) for row in phi)

        unknown = sorted(set(self.box) - set(coords))
        if unknown:
            raise ModelSyntaxError(1, f"box refers to unknown coordinates {', '.join(unknown)}")
        fields["box"] = tuple(self.box.get(c, constants.DEFAULT_BOX) for c in coords)
        fields["references"] = tuple(self.references)

        try:
            return ModelSpec(**fields)
        except ValidationError as e:
            raise ModelValidationError(_validation_errors(e)) from e


def _validation_errors(e: ValidationError) -> list[tuple[str, str]]:
    errors = []
    for err in e.errors():
        field = ".".join(str(loc) for loc in err["loc"]) or "model"
        ctx = err.get("ctx") or {}
        rule = str(ctx["error"]) if "error" in ctx else err["msg"]
        errors.append((field, rule))
    return errors


def parse_model(source: str) -> ModelSpec:
    """Parse model-file text into a validated `ModelSpec`.

    Statements are separated by newlines or ';' and '#' starts a comment.

    Raises:
        ModelSyntaxError: when a statement cannot be read.
        ModelValidationError: when the model breaks a structural rule.
    """
    reader = _ModelReader()
    for number, raw in enumerate(source.splitlines(), start=1):
        code = raw.split("#", 1)[0]
        for statement in code.split(";"):
            if statement.strip():
                reader.statement(statement.strip(), number)
    spec = reader.build()
    logger.debug("Parsed model %r (dimension %d)", spec.name, spec.dim)
    return spec


def load_model(path: Path) -> ModelSpec:
    logger.info("Loading model from %s", path)
    return parse_model(Path(path).read_text(encoding="utf-8"))


def load_builtin(name: str) -> ModelSpec:
    if name not in constants.BUILTIN_MODELS:
        raise UnknownModelError(name)
    return parse_model((MODELS_DIR / f"{name}.model").read_text(encoding="utf-8"))
