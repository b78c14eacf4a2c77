"""Pointwise evaluation on the slashed tangent bundle.

Provides the reference AST evaluator (precise domain errors), batched
tape evaluation through the compiled core or its NumPy fallback, the
seeded sample-point generator, and the tri-state zero test that backs
every "= 0" verdict downstream.

Backend selection happens at import: the Cython extension is used when
present unless SPRAYLAB_PURE_PYTHON=1 is set.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _tape
from .expression import Const, Expression, Power, Unary, Var, simplify

try:  # compiled core is optional
    from . import _evalcore
except ImportError:  # pragma: no cover - depends on the build environment
    _evalcore = None

_FORCE_PYTHON = os.environ.get("SPRAYLAB_PURE_PYTHON") == "1"

FIBER_FLOOR = 1e-6


def active_backend() -> str:
    """Name of the evaluation backend selected at import."""
    return "compiled" if (_evalcore is not None and not _FORCE_PYTHON) else "python"


def backend_available(name: str) -> bool:
    return name == "python" or _evalcore is not None


class EvalDomainError(ArithmeticError):
    """Evaluation left the domain (division by zero, sqrt of a negative...)."""

    def __init__(self, reason: str, subexpression: Expression, point: "Point"):
        super().__init__(f"{reason} in '{subexpression}' at {point}")
        self.reason = reason
        self.subexpression = subexpression
        self.point = point


@dataclass(frozen=True)
class Point:
    """A point of TM minus the zero section: y must stay off the origin."""

    x: tuple
    y: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have the same dimension")
        if math.sqrt(sum(v * v for v in self.y)) < FIBER_FLOOR:
            raise ValueError(f"|y| below the fiber floor {FIBER_FLOOR}")

    @property
    def n(self) -> int:
        return len(self.x)

    def __str__(self):
        xs = ", ".join(f"{v:.6g}" for v in self.x)
        ys = ", ".join(f"{v:.6g}" for v in self.y)
        return f"(x=({xs}), y=({ys}))"

    def scale_fiber(self, c: float) -> "Point":
        return Point(self.x, tuple(c * v for v in self.y))


def sample_points(n: int, count: int, seed: int = 42) -> list[Point]:
    """Deterministic sample set: x uniform in [-1,1]^n, y on the annulus
    0.5 <= |y| <= 2 (uniform direction, uniform radius)."""
    rng = np.random.default_rng(seed)
    points = []
    for _ in range(count):
        x = rng.uniform(-1.0, 1.0, size=n)
        direction = rng.normal(size=n)
        direction /= np.linalg.norm(direction)
        r = rng.uniform(0.5, 2.0)
        points.append(Point(tuple(x), tuple(r * direction)))
    return points


def points_to_arrays(points) -> tuple[np.ndarray, np.ndarray]:
    xs = np.array([p.x for p in points], dtype=np.float64)
    ys = np.array([p.y for p in points], dtype=np.float64)
    return np.ascontiguousarray(xs), np.ascontiguousarray(ys)


# ---------------------------------------------------------------------------
# reference evaluator


def eval_expr(e: Expression, point: Point) -> float:
    """Evaluate e at point, raising EvalDomainError with the offending
    subexpression when the point leaves the domain."""

    def rec(node) -> float:
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Var):
            coords = point.x if node.kind == "x" else point.y
            if node.index > len(coords):
                raise EvalDomainError("variable index beyond point dimension", node, point)
            return coords[node.index - 1]
        if isinstance(node, Unary):
            v = rec(node.arg)
            if node.op == "neg":
                return -v
            if node.op == "sqrt":
                if v < 0:
                    raise EvalDomainError("sqrt of a negative value", node, point)
                return math.sqrt(v)
            if node.op == "sin":
                return math.sin(v)
            if node.op == "cos":
                return math.cos(v)
            if node.op == "exp":
                try:
                    return math.exp(v)
                except OverflowError:
                    raise EvalDomainError("exp overflow", node, point) from None
            if node.op == "log":
                if v <= 0:
                    raise EvalDomainError("log of a non-positive value", node, point)
                return math.log(v)
            return abs(v)
        if isinstance(node, Power):
            v = rec(node.base)
            if v == 0.0 and node.exponent < 0:
                raise EvalDomainError("zero raised to a negative power", node, point)
            try:
                return v ** node.exponent
            except OverflowError:
                raise EvalDomainError("pow overflow", node, point) from None
        v = rec(node.left)
        w = rec(node.right)
        if node.op == "add":
            return v + w
        if node.op == "sub":
            return v - w
        if node.op == "mul":
            return v * w
        if w == 0.0:
            raise EvalDomainError("division by zero", node, point)
        return v / w

    return rec(e)


# ---------------------------------------------------------------------------
# batched evaluation

_TAPE_CACHE: dict[Expression, _tape.Tape] = {}


def _tape_for(e: Expression) -> _tape.Tape:
    tape = _TAPE_CACHE.get(e)
    if tape is None:
        tape = _tape.compile_expression(e)
        _TAPE_CACHE[e] = tape
    return tape


def eval_batch(e: Expression, xs: np.ndarray, ys: np.ndarray, backend: str | None = None) -> np.ndarray:
    """Evaluate e at a batch of points; non-finite entries mark points
    outside the domain of e."""
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    tape = _tape_for(e)
    if backend is None:
        backend = active_backend()
    if backend == "compiled":
        if _evalcore is None:
            raise RuntimeError("compiled evaluator requested but not built")
        out = np.empty(xs.shape[0], dtype=np.float64)
        stack = np.empty(max(tape.stack_size, 1), dtype=np.float64)
        _evalcore.run_batch(tape.code, tape.iarg, tape.farg, xs, ys, out, stack)
        return out
    return _tape.run_batch_python(tape, xs, ys)


def eval_at_points(e: Expression, points, backend: str | None = None) -> np.ndarray:
    xs, ys = points_to_arrays(points)
    return eval_batch(e, xs, ys, backend)


class BatchEvaluator:
    """Evaluates a fixed tuple of expressions at points.

    Compiles every expression once; `at_point` is the hot single-point
    path used by the geodesic integrator.  Instances reuse scratch
    buffers, so share expressions across threads but give each thread its
    own evaluator.
    """

    def __init__(self, exprs, backend: str | None = None):
        self.exprs = tuple(exprs)
        self.backend = backend or active_backend()
        tapes = [_tape_for(e) for e in self.exprs]
        code, iarg, farg, bounds, stack_size = _tape.concat_tapes(tapes)
        self._code, self._iarg, self._farg, self._bounds = code, iarg, farg, bounds
        self._stack = np.empty(max(stack_size, 1), dtype=np.float64)
        self._out_one = np.empty(len(self.exprs), dtype=np.float64)
        self._tapes = tapes

    def at_point(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Values of all expressions at one point (returns a reused buffer)."""
        if self.backend == "compiled":
            _evalcore.run_many_one(self._code, self._iarg, self._farg, self._bounds,
                                   x, y, self._out_one, self._stack)
            return self._out_one
        xs = x.reshape(1, -1)
        ys = y.reshape(1, -1)
        for t, tape in enumerate(self._tapes):
            self._out_one[t] = _tape.run_batch_python(tape, xs, ys)[0]
        return self._out_one

    def at_points(self, points) -> np.ndarray:
        xs, ys = points_to_arrays(points)
        return self.at_arrays(xs, ys)

    def at_arrays(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        xs = np.ascontiguousarray(xs, dtype=np.float64)
        ys = np.ascontiguousarray(ys, dtype=np.float64)
        out = np.empty((xs.shape[0], len(self.exprs)), dtype=np.float64)
        if self.backend == "compiled":
            _evalcore.run_many_batch(self._code, self._iarg, self._farg, self._bounds,
                                     xs, ys, out, self._stack)
        else:
            for t, tape in enumerate(self._tapes):
                out[:, t] = _tape.run_batch_python(tape, xs, ys)
        return out


# ---------------------------------------------------------------------------
# tri-state zero test


class AllSamplesSkippedError(ArithmeticError):
    """Every sample point fell outside the expression's domain."""


@dataclass(frozen=True)
class ZeroVerdict:
    """Outcome of an "is this expression zero" decision.

    level is "symbolic" (the simplifier reduced it to the zero constant),
    "numeric" (max |value| over the samples stayed below tol), or
    "nonzero" (a witness point with the worst value is recorded).
    """

    level: str
    residual: float = 0.0
    witness: Point | None = None
    value: float | None = None
    skipped: int = 0

    @property
    def is_zero(self) -> bool:
        return self.level != "nonzero"

    def describe(self) -> str:
        if self.level == "symbolic":
            return "zero (symbolic)"
        if self.level == "numeric":
            return f"zero (numeric, residual {self.residual:.3e})"
        where = f" at {self.witness}" if self.witness is not None else ""
        return f"nonzero (value {self.value:.6g}{where})"


def worst_verdict(verdicts) -> ZeroVerdict:
    """Aggregate componentwise verdicts: any nonzero wins, then numeric."""
    verdicts = list(verdicts)
    if not verdicts:
        return ZeroVerdict("symbolic")
    nonzero = [v for v in verdicts if v.level == "nonzero"]
    if nonzero:
        return max(nonzero, key=lambda v: abs(v.value or 0.0))
    numeric = [v for v in verdicts if v.level == "numeric"]
    if numeric:
        worst = max(numeric, key=lambda v: v.residual)
        skipped = sum(v.skipped for v in verdicts)
        return ZeroVerdict("numeric", residual=worst.residual, skipped=skipped)
    return ZeroVerdict("symbolic")


def is_zero(e: Expression, samples, tol: float = 1e-9) -> ZeroVerdict:
    """Decide whether e vanishes: symbolically if possible, else numerically
    over the samples.  Samples outside the domain of e are skipped; if all
    are skipped an AllSamplesSkippedError is raised."""
    if not samples:
        raise ValueError("is_zero needs a non-empty sample list")
    s = simplify(e)
    if isinstance(s, Const):
        if s.value == 0.0:
            return ZeroVerdict("symbolic")
        if abs(s.value) < tol:
            return ZeroVerdict("numeric", residual=abs(s.value))
        return ZeroVerdict("nonzero", value=s.value, witness=None)
    values = eval_at_points(s, samples)
    finite = np.isfinite(values)
    skipped = int((~finite).sum())
    if skipped == len(samples):
        raise AllSamplesSkippedError(f"no valid samples for '{s}'")
    magnitudes = np.where(finite, np.abs(values), -np.inf)
    worst = int(np.argmax(magnitudes))
    residual = float(magnitudes[worst])
    if residual < tol:
        return ZeroVerdict("numeric", residual=residual, skipped=skipped)
    return ZeroVerdict(
        "nonzero", residual=residual, witness=samples[worst],
        value=float(values[worst]), skipped=skipped,
    )
