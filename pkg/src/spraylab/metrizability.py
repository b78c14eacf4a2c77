"""Projective-metrizability conditions and the curvature obstruction.

For a spray S and a candidate semi-basic 1-form theta (or a Finsler
candidate F, from which theta_i = dF/dy^i), the checker reports the two
algebraic conditions

    rank(d theta) = 2n - 2,      theta(S) > 0,

and the three differential conditions

    L_C theta = 0,   d_J theta = 0,   d_h theta = 0,

together with the curvature obstruction d_R theta = 0 and its algebraic
Bianchi form  h_ik R^k_jl + h_lk R^k_ij + h_jk R^k_li = 0.

The checker decides conditions for a SUPPLIED candidate; it does not
solve the underlying PDE system for an unknown theta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluate import (
    BatchEvaluator,
    Point,
    ZeroVerdict,
    is_zero,
    sample_points,
    worst_verdict,
)
from .expression import Const, Expression, ZERO, diff, simplify, var_y
from .forms import (
    ScalarForm,
    exterior_d,
    lie_type_derivative,
    semi_basic_one_form,
)
from .spray import (
    Connection,
    HomogeneityError,
    Spray,
    connection,
    curvature,
    liouville_apply,
    projective_transform,
)

RANK_SV_THRESHOLD = 1e-9
POSITIVITY_MARGIN = 1e-8


def euler_poincare(F: Expression, n: int, samples=None, tol: float = 1e-9) -> ScalarForm:
    """theta = d_J F, the semi-basic 1-form with components dF/dy^i.

    F must be 1-homogeneous in y; the resulting components are then
    0-homogeneous, so L_C theta vanishes automatically.
    """
    samples = samples or sample_points(n, 50)
    verdict = is_zero(liouville_apply(F, n) - F, samples, tol)
    if not verdict.is_zero:
        raise HomogeneityError("Finsler candidate is not 1-homogeneous", verdict)
    return semi_basic_one_form(n, [diff(F, var_y(i + 1)) for i in range(n)])


def closed_form_operators(spray: Spray, theta: ScalarForm,
                          conn: Connection | None = None):
    """(L_C theta, d_J theta, d_h theta) from the coordinate formulas.

    The generic derivation engine must agree with these; the closed forms
    are the cheap primary path.
    """
    n = spray.n
    if theta.degree != 1 or not theta.is_semi_basic():
        raise ValueError("theta must be a semi-basic 1-form")
    conn = conn or connection(spray)
    comp = [theta.component((i,)) for i in range(n)]

    lc = {}
    for i in range(n):
        e = simplify(liouville_apply(comp[i], n))
        lc[(i,)] = e
    dj = {}
    dh = {}
    for a in range(n):
        for b in range(a + 1, n):
            dj[(a, b)] = simplify(
                diff(comp[b], var_y(a + 1)) - diff(comp[a], var_y(b + 1))
            )
            dh[(a, b)] = simplify(conn.delta_x(comp[b], a) - conn.delta_x(comp[a], b))
    return (
        ScalarForm(n, 1, lc),
        ScalarForm(n, 2, dj),
        ScalarForm(n, 2, dh),
    )


@dataclass(frozen=True)
class AngularMetric:
    """h_ij = F d^2F/dy^i dy^j; rank n-1 exactly for regular candidates."""

    n: int
    h: tuple  # h[i][j]

    def rank_at(self, points, threshold: float = RANK_SV_THRESHOLD) -> list[int]:
        n = self.n
        exprs = [self.h[i][j] for i in range(n) for j in range(n)]
        values = BatchEvaluator(exprs).at_points(points)
        ranks = []
        for row in values:
            M = row.reshape(n, n)
            ranks.append(_matrix_rank(M, threshold))
        return ranks


def _matrix_rank(M: np.ndarray, threshold: float = RANK_SV_THRESHOLD) -> int:
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    # the floor keeps numerically-zero matrices at rank 0 (a purely
    # relative cut would promote round-off to full rank)
    return int((sv > threshold * max(sv[0], 1.0)).sum())


def angular_metric(F: Expression, n: int, samples=None, tol: float = 1e-9) -> AngularMetric:
    theta = euler_poincare(F, n, samples, tol)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            if j < i:
                row.append(rows[j][i])
            else:
                row.append(simplify(F * diff(theta.component((i,)), var_y(j + 1))))
        rows.append(row)
    return AngularMetric(n, tuple(tuple(r) for r in rows))


@dataclass(frozen=True)
class PositivityVerdict:
    status: str  # "pass" | "fail" | "inconclusive"
    minimum: float
    witness: Point | None = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def describe(self) -> str:
        return f"{self.status} (min {self.minimum:.6g})"


@dataclass(frozen=True)
class RankVerdict:
    expected: int
    ranks: tuple
    passed: bool

    def describe(self) -> str:
        seen = sorted(set(self.ranks))
        return f"{'pass' if self.passed else 'fail'} (expected {self.expected}, saw {seen})"


@dataclass(frozen=True)
class ObstructionResult:
    """d_R theta computed generically, plus the independent Bianchi sum."""

    d_r_theta: ScalarForm
    bianchi: dict
    d_r_verdict: ZeroVerdict
    bianchi_verdict: ZeroVerdict
    consistent: bool


@dataclass(frozen=True)
class ConditionReport:
    lie_liouville: ZeroVerdict
    d_j: ZeroVerdict
    d_h: ZeroVerdict
    positivity: PositivityVerdict
    rank: RankVerdict
    obstruction: ObstructionResult

    @property
    def passed(self) -> bool:
        return (
            self.lie_liouville.is_zero
            and self.d_j.is_zero
            and self.d_h.is_zero
            and self.positivity.passed
            and self.rank.passed
            and self.obstruction.d_r_verdict.is_zero
        )

    def lines(self) -> list[str]:
        return [
            f"L_C theta = 0: {self.lie_liouville.describe()}",
            f"d_J theta = 0: {self.d_j.describe()}",
            f"d_h theta = 0: {self.d_h.describe()}",
            f"theta(S) > 0: {self.positivity.describe()}",
            f"rank(d theta) = 2n-2: {self.rank.describe()}",
            f"d_R theta = 0: {self.obstruction.d_r_verdict.describe()}",
        ]


def obstruction(spray: Spray, theta: ScalarForm, samples=None,
                tol: float = 1e-9) -> ObstructionResult:
    """Evaluate d_R theta (generic derivation path, sign +1 since R has
    even degree) and the cyclic Bianchi sum built from h_ij and R^k_jl."""
    n = spray.n
    samples = samples or sample_points(n, 50)
    R = curvature(spray)
    dr = lie_type_derivative(R.as_form(), theta)
    dr_verdict = dr.zero_verdict(samples, tol)

    F = simplify(sum_i_s_theta(theta))
    comp = [theta.component((i,)) for i in range(n)]
    h = [[simplify(F * diff(comp[i], var_y(j + 1))) for j in range(n)] for i in range(n)]
    bianchi = {}
    for i in range(n):
        for j in range(i + 1, n):
            for l in range(j + 1, n):
                total = ZERO
                for k in range(n):
                    total = total + h[i][k] * R.component(k, j, l)
                    total = total + h[l][k] * R.component(k, i, j)
                    total = total + h[j][k] * R.component(k, l, i)
                bianchi[(i, j, l)] = simplify(total)
    if bianchi:
        b_verdict = worst_verdict(is_zero(e, samples, tol) for e in bianchi.values())
    else:
        b_verdict = ZeroVerdict("symbolic")
    return ObstructionResult(
        d_r_theta=dr,
        bianchi=bianchi,
        d_r_verdict=dr_verdict,
        bianchi_verdict=b_verdict,
        consistent=dr_verdict.is_zero == b_verdict.is_zero,
    )


def sum_i_s_theta(theta: ScalarForm) -> Expression:
    """theta(S) = theta_i y^i (only the horizontal part of S survives)."""
    total = ZERO
    for i in range(theta.n):
        total = total + theta.component((i,)) * var_y(i + 1)
    return simplify(total)


def check_conditions(spray: Spray, theta: ScalarForm | None = None,
                     finsler: Expression | None = None, samples=None,
                     tol: float = 1e-9,
                     positivity_margin: float = POSITIVITY_MARGIN) -> ConditionReport:
    """Full condition report for a candidate.  When both a Finsler
    candidate and a theta are supplied, F wins and theta = d_J F."""
    n = spray.n
    samples = samples or sample_points(n, 50)
    if finsler is not None:
        theta = euler_poincare(finsler, n, samples, tol)
    if theta is None:
        raise ValueError("check_conditions needs a theta or a Finsler candidate")
    if theta.degree != 1 or not theta.is_semi_basic():
        raise ValueError("theta must be a semi-basic 1-form")

    lc, dj, dh = closed_form_operators(spray, theta)
    lc_verdict = lc.zero_verdict(samples, tol)
    dj_verdict = dj.zero_verdict(samples, tol)
    dh_verdict = dh.zero_verdict(samples, tol)

    values = BatchEvaluator([sum_i_s_theta(theta)]).at_points(samples)[:, 0]
    finite = np.isfinite(values)
    if not finite.any():
        raise ValueError("theta(S) undefined at every sample")
    minimum = float(np.min(values[finite]))
    argmin = int(np.argmin(np.where(finite, values, np.inf)))
    if minimum > positivity_margin:
        positivity = PositivityVerdict("pass", minimum)
    elif minimum > 0:
        positivity = PositivityVerdict("inconclusive", minimum, samples[argmin])
    else:
        positivity = PositivityVerdict("fail", minimum, samples[argmin])

    dtheta = exterior_d(theta)
    rank_exprs = []
    keys = []
    for a in range(2 * n):
        for b in range(a + 1, 2 * n):
            rank_exprs.append(dtheta.component((a, b)))
            keys.append((a, b))
    rank_values = BatchEvaluator(rank_exprs).at_points(samples)
    ranks = []
    for row in rank_values:
        M = np.zeros((2 * n, 2 * n))
        for (a, b), v in zip(keys, row):
            M[a, b] = v
            M[b, a] = -v
        ranks.append(_matrix_rank(M))
    expected = 2 * n - 2
    rank_verdict = RankVerdict(expected, tuple(ranks),
                               all(r == expected for r in ranks))

    obs = obstruction(spray, theta, samples, tol)
    return ConditionReport(lc_verdict, dj_verdict, dh_verdict,
                           positivity, rank_verdict, obs)


class ConditionsNotMetError(ValueError):
    def __init__(self, report: ConditionReport):
        super().__init__("candidate fails the metrizability conditions:\n  "
                         + "\n  ".join(report.lines()))
        self.report = report


@dataclass(frozen=True)
class Recovery:
    """Finsler function and projective factor recovered from a passing theta.

    F = theta(S); P is the 1-homogeneous factor with S = S_F - 2P*C, so the
    geodesic spray of F is S_F = S + 2P*C; S_F(F) vanishes.
    """

    F: Expression
    P: Expression
    geodesic_spray: Spray
    sf_annihilates_f: ZeroVerdict
    report: ConditionReport


def recover_finsler(spray: Spray, theta: ScalarForm, samples=None,
                    tol: float = 1e-9) -> Recovery:
    """Recover (F, P, S_F) from a condition-satisfying theta; refuses when
    the report fails."""
    n = spray.n
    samples = samples or sample_points(n, 50)
    report = check_conditions(spray, theta=theta, samples=samples, tol=tol)
    if not report.passed:
        raise ConditionsNotMetError(report)
    F = sum_i_s_theta(theta)
    sF = spray.apply(F)
    P = simplify(Const(-0.5) * sF / F)
    geodesic = projective_transform(spray, simplify(Const(-1.0) * P), samples, tol)
    check = is_zero(geodesic.apply(F), samples, tol)
    return Recovery(F=F, P=P, geodesic_spray=geodesic,
                    sf_annihilates_f=check, report=report)
