"""Geodesic integration and projective-equivalence testing.

Geodesics solve x'' + 2G(x, x') = 0, integrated as the first-order system
(x' = y, y' = -2G) with fixed-step classical RK4.  Fixed steps keep the
convergence-order measurement clean; trajectories that approach the zero
section halt with a partial trace.

Projective equivalence of two sprays is decided pointwise: the vertical
difference 2(G2 - G1) must stay parallel to y, the recovered factor
P = (G2 - G1).y / |y|^2 must be 1-homogeneous, and traces must coincide
after arclength reparametrization.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .evaluate import (
    BatchEvaluator,
    FIBER_FLOOR,
    Point,
    eval_expr,
    sample_points,
)
from .spray import Spray


@dataclass(frozen=True)
class GeodesicTrace:
    """Time grid plus states (x(t), y(t)) with y = dx/dt."""

    t: np.ndarray
    states: np.ndarray  # shape (len(t), 2n)
    n: int
    step: float
    method: str = "rk4"
    halted: bool = False
    halt_reason: str = ""

    @property
    def x(self) -> np.ndarray:
        return self.states[:, : self.n]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, self.n:]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = ["t"] + [f"x{i+1}" for i in range(self.n)] + [f"y{i+1}" for i in range(self.n)]
        writer.writerow(header)
        for k in range(len(self.t)):
            writer.writerow([repr(float(self.t[k]))] +
                            [repr(float(v)) for v in self.states[k]])
        return buf.getvalue()

    def to_json(self) -> str:
        import json

        payload = {
            "method": self.method,
            "step": self.step,
            "halted": self.halted,
            "halt_reason": self.halt_reason,
            "t": [float(v) for v in self.t],
            "x": [[float(v) for v in row] for row in self.x],
            "y": [[float(v) for v in row] for row in self.y],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def arclength(self) -> np.ndarray:
        deltas = np.linalg.norm(np.diff(self.x, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(deltas)])


class FiberCollapseError(RuntimeError):
    pass


def integrate(spray: Spray, x0, y0, T: float, steps: int,
              fiber_floor: float = FIBER_FLOOR) -> GeodesicTrace:
    """Classical RK4 on (x' = y, y' = -2G) from (x0, y0) over [0, T].

    Halts with a partial trace if |y| drops below the fiber floor; domain
    errors in the coefficients propagate as EvalDomainError.
    """
    n = spray.n
    x0 = np.asarray(x0, dtype=np.float64)
    y0 = np.asarray(y0, dtype=np.float64)
    if x0.shape != (n,) or y0.shape != (n,):
        raise ValueError(f"initial state must have dimension {n}")
    if np.linalg.norm(y0) < fiber_floor:
        raise ValueError("initial fiber velocity below the floor")
    if steps < 1:
        raise ValueError("steps must be positive")
    evaluator = BatchEvaluator(spray.G)
    h = T / steps

    def rhs(state):
        x = np.ascontiguousarray(state[:n])
        y = np.ascontiguousarray(state[n:])
        g = evaluator.at_point(x, y)
        if not np.all(np.isfinite(g)):
            # rerun through the reference evaluator for a precise error
            p = Point(tuple(x), tuple(y))
            for e in spray.G:
                eval_expr(e, p)
            raise ArithmeticError("non-finite spray coefficients")  # pragma: no cover
        out = np.empty(2 * n)
        out[:n] = y
        out[n:] = -2.0 * g
        return out

    states = np.empty((steps + 1, 2 * n))
    ts = np.empty(steps + 1)
    state = np.concatenate([x0, y0])
    states[0] = state
    ts[0] = 0.0
    halted = False
    reason = ""
    count = 1
    for k in range(steps):
        k1 = rhs(state)
        k2 = rhs(state + 0.5 * h * k1)
        k3 = rhs(state + 0.5 * h * k2)
        k4 = rhs(state + h * k3)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if np.linalg.norm(state[n:]) < fiber_floor:
            halted = True
            reason = f"fiber collapse at t={ts[count-1] + h:.6g}"
            break
        states[count] = state
        ts[count] = (k + 1) * h
        count += 1
    return GeodesicTrace(
        t=ts[:count].copy(), states=states[:count].copy(), n=n, step=h,
        halted=halted, halt_reason=reason,
    )


def ode_residual(trace: GeodesicTrace, spray: Spray) -> float:
    """Max norm of x'' + 2G(x, x') over interior grid points, using
    fourth-order central stencils so an exact solution scales as step^4."""
    x = trace.x
    m = len(trace.t)
    if m < 5:
        raise ValueError("trace too short for the residual stencil")
    h = trace.step
    xpp = (-x[4:] + 16 * x[3:-1] - 30 * x[2:-2] + 16 * x[1:-3] - x[:-4]) / (12 * h * h)
    xp = (-x[4:] + 8 * x[3:-1] - 8 * x[1:-3] + x[:-4]) / (12 * h)
    evaluator = BatchEvaluator(spray.G)
    g = evaluator.at_arrays(np.ascontiguousarray(x[2:-2]), np.ascontiguousarray(xp))
    return float(np.max(np.abs(xpp + 2.0 * g)))


def convergence_order(spray: Spray, x0, y0, T: float, base_steps: int = 50,
                      levels: int = 3) -> list[float]:
    """Measured RK4 orders from endpoint errors against a fine reference."""
    step_counts = [base_steps * 2 ** k for k in range(levels + 1)]
    ref = integrate(spray, x0, y0, T, step_counts[-1] * 8)
    errors = []
    for s in step_counts:
        tr = integrate(spray, x0, y0, T, s)
        if tr.halted or ref.halted:
            raise FiberCollapseError("trace halted during convergence measurement")
        errors.append(float(np.linalg.norm(tr.states[-1] - ref.states[-1])))
    return [math.log2(errors[k] / errors[k + 1]) for k in range(levels)]


@dataclass(frozen=True)
class EquivalenceReport:
    """Projective-equivalence verdicts between two sprays."""

    vertical_parallel: bool
    worst_defect: float
    witness: Point | None
    p_values: tuple
    p_homogeneous: bool
    homogeneity_error: float
    trace_distance: float | None = None
    trace_tol: float | None = None

    @property
    def passed(self) -> bool:
        ok = self.vertical_parallel and self.p_homogeneous
        if self.trace_distance is not None and self.trace_tol is not None:
            ok = ok and self.trace_distance < self.trace_tol
        return ok


def projective_factor(s1: Spray, s2: Spray, samples=None,
                      tol: float = 1e-8) -> EquivalenceReport:
    """Recover P with s2 = s1 - 2P C, or report the witness where the
    vertical difference 2(G2 - G1) fails to be parallel to y."""
    if s1.n != s2.n:
        raise ValueError("sprays must share a dimension")
    n = s1.n
    samples = samples or sample_points(n, 50)
    d_exprs = [2.0 * (s2.G[i] - s1.G[i]) for i in range(n)]
    values = BatchEvaluator(d_exprs).at_points(samples)
    worst = 0.0
    witness = None
    p_vals = []
    for s, p in enumerate(samples):
        y = np.array(p.y)
        D = values[s]
        coeff = float(D @ y / (y @ y))
        defect = float(np.max(np.abs(D - coeff * y)))
        scale = max(1.0, float(np.max(np.abs(D))))
        rel = defect / scale
        if rel > worst:
            worst = rel
            witness = p
        p_vals.append(coeff / 2.0)
    parallel = worst < tol
    if not parallel:
        return EquivalenceReport(False, worst, witness, tuple(p_vals), False, math.inf)

    # P(x, cy) = c P(x, y) at c in {0.5, 2}
    hom_err = 0.0
    for c in (0.5, 2.0):
        scaled = [p.scale_fiber(c) for p in samples]
        sv = BatchEvaluator(d_exprs).at_points(scaled)
        for s, p in enumerate(scaled):
            y = np.array(p.y)
            pc = float(sv[s] @ y / (2.0 * y @ y))
            expected = c * p_vals[s]
            hom_err = max(hom_err, abs(pc - expected) / max(1.0, abs(expected)))
    return EquivalenceReport(True, worst, None, tuple(p_vals),
                             hom_err < tol, hom_err)


def trace_compare(t1: GeodesicTrace, t2: GeodesicTrace,
                  grid: int = 512) -> float:
    """Max base-curve distance after arclength reparametrization.

    Both traces must start at the same point with parallel, equally
    oriented initial velocities; the comparison covers the shorter
    arclength range with linear interpolation.
    """
    if t1.n != t2.n:
        raise ValueError("traces must share a dimension")
    if np.max(np.abs(t1.x[0] - t2.x[0])) > 1e-12:
        raise ValueError("traces must share the initial point")
    y1, y2 = t1.y[0], t2.y[0]
    cosangle = float(y1 @ y2 / (np.linalg.norm(y1) * np.linalg.norm(y2)))
    if cosangle < 1.0 - 1e-9:
        raise ValueError("initial directions are not parallel with equal orientation")
    s1 = t1.arclength()
    s2 = t2.arclength()
    L = min(s1[-1], s2[-1])
    if L <= 0.0:
        raise ValueError("zero-length trace")
    grid_s = np.linspace(0.0, L, grid)
    d = 0.0
    for dim in range(t1.n):
        a = np.interp(grid_s, s1, t1.x[:, dim])
        b = np.interp(grid_s, s2, t2.x[:, dim])
        d = max(d, float(np.max(np.abs(a - b))))
    return d


def collinearity_residual(trace: GeodesicTrace) -> float:
    """Largest distance of trace points from the straight line through the
    first point along the initial direction."""
    x = trace.x - trace.x[0]
    direction = trace.y[0] / np.linalg.norm(trace.y[0])
    along = x @ direction
    perp = x - np.outer(along, direction)
    return float(np.max(np.linalg.norm(perp, axis=1)))
