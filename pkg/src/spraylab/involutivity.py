"""Symbol matrices and the Cartan quasi-regular basis test.

The first-order operator (L_C, d_J, d_h) acting on semi-basic 1-forms has
a pointwise symbol whose kernel dimensions are universal:

    dim g1 = n^2,        dim g2 = n^2 (n + 1) / 2,

and the shifted basis e_1 = h_1, e_2 = h_2 + v_1, ..., e_n = S + v_{n-1}
(with v_n the dilation generator and J h_i = v_i) is quasi-regular:
contracting by e_1..e_j cuts the kernel to n(n-j) and the Cartan sum

    dim g2 = dim g1 + sum_j dim g1_{e_1..e_j}

holds, which is the involutivity certificate.

Everything here is pointwise linear algebra in the adapted frame
{dx^i, dy^i + N^i_j dx^j} at a chosen point, so matrix entries involve
only the fiber coordinates of the point; ranks come from SVD with a
relative threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluate import Point, sample_points
from .spray import Spray, connection

RANK_REL_THRESHOLD = 1e-9
ILL_CONDITION_BAND = (1e-12, 1e-6)
DEFAULT_MAX_DIM = 6


@dataclass(frozen=True)
class SymbolMatrix:
    """Dense symbol matrix at a point, with its SVD rank diagnostics."""

    matrix: np.ndarray
    point: Point
    domain_dim: int
    codomain_dim: int
    order: int  # 1 for the symbol, 2 for its prolongation

    @property
    def nullity(self) -> int:
        return self.domain_dim - matrix_rank(self.matrix)


def matrix_rank(M: np.ndarray, rel_threshold: float = RANK_REL_THRESHOLD) -> int:
    if M.size == 0 or M.shape[0] == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int((sv > rel_threshold * sv[0]).sum())


def rank_conditioning(M: np.ndarray) -> tuple[bool, float]:
    """(well_conditioned, worst ratio): flags singular values falling into
    the ambiguous relative band where the rank decision is unreliable."""
    if M.size == 0 or M.shape[0] == 0:
        return True, 0.0
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return True, 0.0
    rel = sv / sv[0]
    lo, hi = ILL_CONDITION_BAND
    bad = rel[(rel > lo) & (rel < hi)]
    if bad.size:
        return False, float(bad.max())
    return True, 0.0


def _check_dimension(n: int):
    if n > DEFAULT_MAX_DIM:
        import warnings

        warnings.warn(
            f"symbol matrices grow as O(n^3); n={n} beyond the tested range "
            f"{DEFAULT_MAX_DIM}", stacklevel=3,
        )


# ---------------------------------------------------------------------------
# first-order symbol

# Domain layout for A in T* (x) T*_v, adapted components:
#   A[i, j]      horizontal (x) dx  -> column i*n + j
#   A[i_, j]     vertical   (x) dx  -> column n^2 + i*n + j


def _col_a(n: int, i: int, j: int) -> int:
    return i * n + j


def _col_au(n: int, i: int, j: int) -> int:
    return n * n + i * n + j


def sigma1_matrix(spray: Spray, point: Point) -> SymbolMatrix:
    """Symbol of (L_C, d_J, d_h) at a point.

    Rows: contraction with the dilation generator (n), the d_J
    antisymmetrization (n(n-1)/2), the d_h antisymmetrization (n(n-1)/2).
    The kernel is cut out by A_ij = A_ji, A_i_j = A_j_i, A_i_j y^i = 0,
    so its dimension is n^2.
    """
    n = spray.n
    _check_dimension(n)
    if point.n != n:
        raise ValueError("point dimension mismatch")
    y = np.array(point.y)
    rows = []
    # i_C A = 0 rows
    for j in range(n):
        row = np.zeros(2 * n * n)
        for i in range(n):
            row[_col_au(n, i, j)] = y[i]
        rows.append(row)
    # tau_J rows
    for i in range(n):
        for j in range(i + 1, n):
            row = np.zeros(2 * n * n)
            row[_col_au(n, i, j)] = 1.0
            row[_col_au(n, j, i)] = -1.0
            rows.append(row)
    # tau_h rows
    for i in range(n):
        for j in range(i + 1, n):
            row = np.zeros(2 * n * n)
            row[_col_a(n, i, j)] = 1.0
            row[_col_a(n, j, i)] = -1.0
            rows.append(row)
    M = np.array(rows)
    return SymbolMatrix(M, point, 2 * n * n, n + n * (n - 1), order=1)


# ---------------------------------------------------------------------------
# prolonged symbol

# Domain layout for B in S^2 T* (x) T*_v with the symmetry conventions
#   B_hh[(i<=j), k], B_vh[i, j, k] (= value on (v_i, h_j) and (h_j, v_i)),
#   B_vv[(i<=j), k].


def _sym_pairs(n: int) -> list:
    return [(i, j) for i in range(n) for j in range(i, n)]


def _sigma2_layout(n: int):
    pairs = _sym_pairs(n)
    pair_index = {p: t for t, p in enumerate(pairs)}
    n_pairs = len(pairs)
    dim_hh = n_pairs * n
    dim_vh = n * n * n
    dim_vv = n_pairs * n

    def col_hh(i, j, k):
        p = pair_index[(i, j) if i <= j else (j, i)]
        return p * n + k

    def col_vh(i, j, k):
        return dim_hh + (i * n + j) * n + k

    def col_vv(i, j, k):
        p = pair_index[(i, j) if i <= j else (j, i)]
        return dim_hh + dim_vh + p * n + k

    return dim_hh + dim_vh + dim_vv, col_hh, col_vh, col_vv


def sigma2_matrix(spray: Spray, point: Point) -> SymbolMatrix:
    """Prolonged symbol at a point; its kernel has dimension n^2(n+1)/2."""
    n = spray.n
    _check_dimension(n)
    if point.n != n:
        raise ValueError("point dimension mismatch")
    y = np.array(point.y)
    dim, col_hh, col_vh, col_vv = _sigma2_layout(n)
    rows = []

    def new_row():
        return np.zeros(dim)

    # sigma^2(L_C): B(a, C, k) = 0 for every frame vector a and dx^k
    for i in range(n):  # a = h_i
        for k in range(n):
            row = new_row()
            for j in range(n):
                row[col_vh(j, i, k)] += y[j]
            rows.append(row)
    for i in range(n):  # a = v_i
        for k in range(n):
            row = new_row()
            for j in range(n):
                row[col_vv(i, j, k)] += y[j]
            rows.append(row)
    # sigma^2(d_J): B(a, J., .) antisymmetrized over horizontal pairs
    for i in range(n):  # a = h_i
        for j in range(n):
            for k in range(j + 1, n):
                row = new_row()
                row[col_vh(j, i, k)] += 1.0
                row[col_vh(k, i, j)] -= 1.0
                rows.append(row)
    for i in range(n):  # a = v_i
        for j in range(n):
            for k in range(j + 1, n):
                row = new_row()
                row[col_vv(i, j, k)] += 1.0
                row[col_vv(i, k, j)] -= 1.0
                rows.append(row)
    # sigma^2(d_h): B(a, h., .) antisymmetrized over horizontal pairs
    for i in range(n):  # a = h_i
        for j in range(n):
            for k in range(j + 1, n):
                row = new_row()
                row[col_hh(i, j, k)] += 1.0
                row[col_hh(i, k, j)] -= 1.0
                rows.append(row)
    for i in range(n):  # a = v_i
        for j in range(n):
            for k in range(j + 1, n):
                row = new_row()
                row[col_vh(i, j, k)] += 1.0
                row[col_vh(i, k, j)] -= 1.0
                rows.append(row)
    M = np.array(rows)
    return SymbolMatrix(M, point, dim, len(rows), order=2)


# ---------------------------------------------------------------------------
# quasi-regular basis and the Cartan test


def _basis_completion(y: np.ndarray) -> np.ndarray:
    """Columns Q[:, a] of vertical-frame coefficients with Q[:, -1] = y.

    Standard basis vectors (skipping the dominant y component) fill the
    first n-1 columns, keeping the frame deterministic and well
    conditioned on the sampling annulus.
    """
    n = y.shape[0]
    skip = int(np.argmax(np.abs(y)))
    Q = np.zeros((n, n))
    cols = [i for i in range(n) if i != skip]
    for a, i in enumerate(cols):
        Q[i, a] = 1.0
    Q[:, n - 1] = y
    return Q


def _contraction_rows(n: int, horiz: np.ndarray | None, vert: np.ndarray | None):
    """Rows expressing i_e A = 0 for e with the given horizontal/vertical
    coefficient vectors in the adapted frame."""
    rows = []
    for j in range(n):
        row = np.zeros(2 * n * n)
        if horiz is not None:
            for i in range(n):
                row[_col_a(n, i, j)] = horiz[i]
        if vert is not None:
            for i in range(n):
                row[_col_au(n, i, j)] += vert[i]
        rows.append(row)
    return rows


@dataclass(frozen=True)
class DimensionReport:
    """Kernel dimensions and the Cartan equality at one point."""

    n: int
    point: Point
    dim_g1: int
    dim_g2: int
    prefix_dims: tuple  # dim g1_{e1..ej} for j = 1..2n (v-block appended)
    cartan_sum: int
    involutive: bool
    expected_g1: int
    expected_g2: int
    expected_prefix: tuple
    matches_expected: bool
    well_conditioned: bool
    shifted_basis: bool

    def lines(self) -> list[str]:
        ok = "pass" if self.involutive else "fail"
        return [
            f"dim g1 = {self.dim_g1} (expected {self.expected_g1})",
            f"dim g2 = {self.dim_g2} (expected {self.expected_g2})",
            f"prefix dims = {self.prefix_dims[:self.n]} (expected {self.expected_prefix})",
            f"cartan: {self.dim_g1} + {self.cartan_sum - self.dim_g1} = "
            f"{self.cartan_sum} vs dim g2 = {self.dim_g2} -> {ok}",
        ]


def cartan_test(spray: Spray, point: Point, shifted: bool = True) -> DimensionReport:
    """Run the quasi-regular basis test at a point.

    With shifted=True the basis is e_1 = h'_1, e_m = h'_m + v'_{m-1},
    e_n = S + v'_{n-1} (primes: the frame with v'_n the dilation field and
    J h'_a = v'_a).  shifted=False keeps the plain frame e_m = h'_m, which
    is not quasi-regular; the report then shows the failing sum.
    """
    n = spray.n
    y = np.array(point.y)
    s1 = sigma1_matrix(spray, point)
    s2 = sigma2_matrix(spray, point)
    dim_g1 = s1.domain_dim - matrix_rank(s1.matrix)
    dim_g2 = s2.domain_dim - matrix_rank(s2.matrix)

    Q = _basis_completion(y)
    conditioned = rank_conditioning(s1.matrix)[0] and rank_conditioning(s2.matrix)[0]
    prefix_dims = []
    rows = [s1.matrix]
    for m in range(n):  # e_1 .. e_n
        horiz = Q[:, m]
        vert = Q[:, m - 1] if (shifted and m >= 1) else None
        rows.extend(_contraction_rows(n, horiz, vert))
        M = np.vstack(rows)
        ok, _ = rank_conditioning(M)
        conditioned = conditioned and ok
        prefix_dims.append(s1.domain_dim - matrix_rank(M))
    for a in range(n):  # then v_1 .. v_n
        rows.extend(_contraction_rows(n, None, Q[:, a]))
        M = np.vstack(rows)
        prefix_dims.append(s1.domain_dim - matrix_rank(M))

    cartan_sum = dim_g1 + sum(prefix_dims)
    expected_prefix = tuple(n * (n - j) for j in range(1, n + 1))
    matches = (
        dim_g1 == n * n
        and dim_g2 == n * n * (n + 1) // 2
        and tuple(prefix_dims[:n]) == expected_prefix
        and all(d == 0 for d in prefix_dims[n:])
    )
    return DimensionReport(
        n=n,
        point=point,
        dim_g1=dim_g1,
        dim_g2=dim_g2,
        prefix_dims=tuple(prefix_dims),
        cartan_sum=cartan_sum,
        involutive=cartan_sum == dim_g2,
        expected_g1=n * n,
        expected_g2=n * n * (n + 1) // 2,
        expected_prefix=expected_prefix,
        matches_expected=matches,
        well_conditioned=conditioned,
        shifted_basis=shifted,
    )


def run_cartan_suite(spray: Spray, n_points: int = 10, seed: int = 42) -> list[DimensionReport]:
    """Cartan test at seeded random points on the annulus."""
    # the connection is evaluated only through the adapted frame, but
    # computing it validates the spray coefficients early
    connection(spray)
    points = sample_points(spray.n, n_points, seed)
    return [cartan_test(spray, p) for p in points]
