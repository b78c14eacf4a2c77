"""Spray geometry: connection, projectors, Jacobi endomorphism, curvature.

A spray is the second-order field y^i d/dx^i - 2 G^i(x,y) d/dy^i with the
G^i positively 2-homogeneous in y.  Everything downstream is built from
the nonlinear connection N^i_j = dG^i/dy^j: the horizontal/vertical
projectors, the Jacobi endomorphism

    R^i_j = 2 dG^i/dx^j|_h - S(N^i_j) + N^i_k N^k_j,

(with d/dx|_h the horizontal derivative d/dx^j - N^k_j d/dy^k) and the
curvature R^i_{jk} = d(N^i_j)/dx^k|_h - d(N^i_k)/dx^j|_h.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluate import BatchEvaluator, ZeroVerdict, is_zero, sample_points
from .expression import Const, Expression, ZERO, diff, parse, simplify, var_y
from .forms import (
    VectorValuedForm,
    fn_bracket,
    identity_endomorphism,
    tangent_structure,
)


class Spray:
    """Dimension n plus the n coefficient expressions G^i."""

    __slots__ = ("n", "G")

    def __init__(self, n: int, G):
        G = tuple(G)
        if len(G) != n:
            raise ValueError(f"expected {n} coefficients, got {len(G)}")
        from .expression import max_var_index

        for g in G:
            if max_var_index(g) > n:
                raise ValueError(f"coefficient '{g}' uses variables beyond dimension {n}")
        self.n = n
        self.G = tuple(simplify(g) for g in G)

    @classmethod
    def from_strings(cls, n: int, strings) -> "Spray":
        return cls(n, [parse(s, n) for s in strings])

    def field(self) -> VectorValuedForm:
        """The spray as a vector field: y^i d/dx^i - 2G^i d/dy^i."""
        coeffs = {}
        for i in range(self.n):
            coeffs[(i, ())] = var_y(i + 1)
            coeffs[(self.n + i, ())] = simplify(Const(-2.0) * self.G[i])
        return VectorValuedForm(self.n, 0, coeffs)

    def apply(self, e: Expression) -> Expression:
        """S(f) = y^j df/dx^j - 2G^j df/dy^j."""
        from .expression import var_x

        total = ZERO
        for j in range(self.n):
            total = total + var_y(j + 1) * diff(e, var_x(j + 1))
            total = total - Const(2.0) * self.G[j] * diff(e, var_y(j + 1))
        return simplify(total)

    def __repr__(self):
        gs = ", ".join(str(g) for g in self.G)
        return f"Spray(n={self.n}, G=[{gs}])"


def liouville_apply(e: Expression, n: int) -> Expression:
    """C(f) = y^j df/dy^j, the fiber homogeneity degree operator."""
    total = ZERO
    for j in range(n):
        total = total + var_y(j + 1) * diff(e, var_y(j + 1))
    return simplify(total)


def validate(spray: Spray, samples=None, tol: float = 1e-9) -> list[ZeroVerdict]:
    """Per-coefficient 2-homogeneity verdicts: C(G^i) - 2G^i must vanish."""
    samples = samples or sample_points(spray.n, 50)
    out = []
    for g in spray.G:
        residual = liouville_apply(g, spray.n) - Const(2.0) * g
        out.append(is_zero(residual, samples, tol))
    return out


@dataclass(frozen=True)
class Connection:
    """Nonlinear connection coefficients N^i_j and the horizontal derivative."""

    n: int
    N: tuple  # N[i][j]

    def delta_x(self, e: Expression, j: int) -> Expression:
        """Horizontal derivative d/dx^j - N^k_j d/dy^k (j is 0-based)."""
        from .expression import var_x

        total = diff(e, var_x(j + 1))
        for k in range(self.n):
            total = total - self.N[k][j] * diff(e, var_y(k + 1))
        return simplify(total)

    def horizontal_projector(self) -> VectorValuedForm:
        """Closed-form h: d/dx^i (x) dx^i - N^j_i d/dy^j (x) dx^i."""
        coeffs = {}
        one = Const(1.0)
        for i in range(self.n):
            coeffs[(i, (i,))] = one
            for j in range(self.n):
                coeffs[(self.n + j, (i,))] = simplify(Const(-1.0) * self.N[j][i])
        return VectorValuedForm(self.n, 1, coeffs)


def connection(spray: Spray) -> Connection:
    n = spray.n
    N = tuple(
        tuple(diff(spray.G[i], var_y(j + 1)) for j in range(n))
        for i in range(n)
    )
    return Connection(n, N)


def projectors(spray: Spray) -> tuple[VectorValuedForm, VectorValuedForm]:
    """(h, v) from h = (Id - [S, J])/2, v = (Id + [S, J])/2."""
    n = spray.n
    Id = identity_endomorphism(n)
    LsJ = fn_bracket(spray.field(), tangent_structure(n))
    h = (Id - LsJ).scale(0.5)
    v = (Id + LsJ).scale(0.5)
    return h, v


@dataclass(frozen=True)
class JacobiEndomorphism:
    n: int
    R: tuple  # R[i][j]

    def as_form(self) -> VectorValuedForm:
        coeffs = {}
        for i in range(self.n):
            for j in range(self.n):
                coeffs[(self.n + i, (j,))] = self.R[i][j]
        return VectorValuedForm(self.n, 1, coeffs)

    def trace(self) -> Expression:
        total = ZERO
        for i in range(self.n):
            total = total + self.R[i][i]
        return simplify(total)


def jacobi(spray: Spray, conn: Connection | None = None) -> JacobiEndomorphism:
    """Closed-form Jacobi endomorphism (first derivatives of N only)."""
    n = spray.n
    conn = conn or connection(spray)
    R = []
    for i in range(n):
        row = []
        for j in range(n):
            expr = Const(2.0) * conn.delta_x(spray.G[i], j) - spray.apply(conn.N[i][j])
            for k in range(n):
                expr = expr + conn.N[i][k] * conn.N[k][j]
            row.append(simplify(expr))
        R.append(tuple(row))
    return JacobiEndomorphism(n, tuple(R))


@dataclass(frozen=True)
class CurvatureTensor:
    """Components R^i_{jk}, antisymmetric in (j,k); stored for j < k."""

    n: int
    R: dict  # (i, j, k) with j < k -> Expression

    def component(self, i: int, j: int, k: int) -> Expression:
        if j == k:
            return ZERO
        if j < k:
            return self.R.get((i, j, k), ZERO)
        e = self.R.get((i, k, j), ZERO)
        return simplify(Const(-1.0) * e)

    def as_form(self) -> VectorValuedForm:
        coeffs = {
            (self.n + i, (j, k)): e for (i, j, k), e in self.R.items()
        }
        return VectorValuedForm(self.n, 2, coeffs)


def curvature(spray: Spray, conn: Connection | None = None) -> CurvatureTensor:
    n = spray.n
    conn = conn or connection(spray)
    R = {}
    for i in range(n):
        for j in range(n):
            for k in range(j + 1, n):
                e = simplify(conn.delta_x(conn.N[i][j], k) - conn.delta_x(conn.N[i][k], j))
                if not (isinstance(e, Const) and e.value == 0.0):
                    R[(i, j, k)] = e
    return CurvatureTensor(n, R)


@dataclass(frozen=True)
class Classification:
    """Outcome of the flat/isotropic/general test."""

    kind: str  # "flat" | "isotropic" | "general"
    flat_verdict: ZeroVerdict | None = None
    lambda_values: tuple = ()
    eta_values: tuple = ()
    residual: float = 0.0
    witness_index: int | None = None
    note: str = ""


def classify(spray: Spray, samples=None, tol: float = 1e-8) -> Classification:
    """Flat when R vanishes; else the pointwise rank-1-plus-scalar test on
    the Jacobi endomorphism (trace recovers the scalar part, contraction
    with y recovers the 1-form part).  Any 2-dimensional spray lands in
    Flat or Isotropic."""
    n = spray.n
    samples = samples or sample_points(n, 50)
    R = curvature(spray)
    flat = R.as_form().zero_verdict(samples, tol)
    if flat.is_zero:
        return Classification(kind="flat", flat_verdict=flat)
    if n == 1:
        return Classification(kind="flat", flat_verdict=flat,
                              note="dimension 1: Jacobi endomorphism is trivial")
    Phi = jacobi(spray)
    exprs = [Phi.R[i][j] for i in range(n) for j in range(n)]
    values = BatchEvaluator(exprs).at_points(samples)
    lams, etas = [], []
    worst = 0.0
    witness = None
    for s, p in enumerate(samples):
        M = values[s].reshape(n, n)
        y = np.array(p.y)
        lam = np.trace(M) / (n - 1)
        eta = (y @ M - lam * y) / (y @ y)
        resid = np.max(np.abs(M - lam * np.eye(n) - np.outer(y, eta)))
        scale = max(1.0, np.max(np.abs(M)))
        rel = resid / scale
        if rel > worst:
            worst = rel
            witness = s
        lams.append(float(lam))
        etas.append(tuple(float(v) for v in eta))
    if worst < tol:
        return Classification(kind="isotropic", flat_verdict=flat,
                              lambda_values=tuple(lams), eta_values=tuple(etas),
                              residual=worst)
    return Classification(kind="general", flat_verdict=flat, residual=worst,
                          witness_index=witness)


class HomogeneityError(ValueError):
    def __init__(self, message: str, verdict: ZeroVerdict):
        super().__init__(f"{message}: {verdict.describe()}")
        self.verdict = verdict


def projective_transform(spray: Spray, P: Expression, samples=None,
                         tol: float = 1e-9) -> Spray:
    """The spray with G^i replaced by G^i + P*y^i (same oriented geodesics);
    P must be 1-homogeneous in y."""
    samples = samples or sample_points(spray.n, 50)
    verdict = is_zero(liouville_apply(P, spray.n) - P, samples, tol)
    if not verdict.is_zero:
        raise HomogeneityError("projective factor is not 1-homogeneous", verdict)
    return Spray(spray.n, [g + P * var_y(i + 1) for i, g in enumerate(spray.G)])


def identity_suite(spray: Spray, samples=None, tol: float = 1e-9) -> dict:
    """Structural identity checks tying the closed-form objects to the
    generic bracket engine; every value is a ZeroVerdict."""
    from .forms import compose_endomorphisms, contract_vector, liouville_field

    n = spray.n
    samples = samples or sample_points(n, 50)
    J = tangent_structure(n)
    C = liouville_field(n)
    S = spray.field()
    h, v = projectors(spray)
    Phi = jacobi(spray).as_form()
    R = curvature(spray).as_form()

    checks = {}
    checks["phi_is_iSR"] = (Phi - contract_vector(S, R)).zero_verdict(samples, tol)
    checks["bracket_J_phi_is_3R"] = (fn_bracket(J, Phi) - R.scale(3.0)).zero_verdict(samples, tol)
    checks["bracket_J_J"] = fn_bracket(J, J).zero_verdict(samples, tol)
    checks["bracket_J_h"] = fn_bracket(J, h).zero_verdict(samples, tol)
    checks["bracket_C_h"] = fn_bracket(C, h).zero_verdict(samples, tol)
    checks["h_idempotent"] = (compose_endomorphisms(h, h) - h).zero_verdict(samples, tol)
    checks["half_bracket_h_h_is_R"] = (fn_bracket(h, h).scale(0.5) - R).zero_verdict(samples, tol)
    return checks
