"""Exterior and Frölicher-Nijenhuis calculus in natural coordinates.

Scalar and vector-valued differential forms on the slashed tangent bundle
carry Expression coefficients over the natural coframe
{dx1..dxn, dy1..dyn}; frame/coframe axes are indexed 0..2n-1, with axis a
meaning dx^(a+1) for a < n and dy^(a-n+1) otherwise.  Only strictly
increasing multi-indices are stored, and a stored coefficient is the value
of the form on the corresponding frame vectors.

The engine provides the exterior derivative, the inner product i_L of a
vector-valued form (the alternating-sum restriction to forms), the
derivations d_L = i_L d + (-1)^deg(L) d i_L, Lie derivatives along vector
fields, and the Frölicher-Nijenhuis bracket computed through the
commutator of derivations acting on the coordinate functions.
"""

from __future__ import annotations

from itertools import combinations

from .evaluate import is_zero, worst_verdict
from .expression import (
    Const,
    Expression,
    ZERO,
    simplify,
    uses_fiber,
    var_x,
    var_y,
)


def axis_var(n: int, a: int):
    """Coordinate variable for frame axis a (0..2n-1)."""
    return var_x(a + 1) if a < n else var_y(a - n + 1)


def _is_zero_const(e: Expression) -> bool:
    return isinstance(e, Const) and e.value == 0.0


def _clean(coeffs: dict) -> dict:
    out = {}
    for key, expr in coeffs.items():
        s = simplify(expr)
        if not _is_zero_const(s):
            out[key] = s
    return out


def _sorted_with_sign(indices: tuple) -> tuple:
    """(sorted tuple, permutation sign); sign 0 when an index repeats."""
    if len(set(indices)) != len(indices):
        return indices, 0
    order = sorted(range(len(indices)), key=lambda i: indices[i])
    sign = 1
    seen = list(indices)
    # count inversions
    for i in range(len(indices)):
        for j in range(i + 1, len(indices)):
            if seen[i] > seen[j]:
                sign = -sign
    return tuple(sorted(indices)), sign


class ScalarForm:
    """Differential k-form with Expression coefficients."""

    __slots__ = ("n", "degree", "coeffs")

    def __init__(self, n: int, degree: int, coeffs: dict | None = None, *, clean: bool = True):
        if not 0 <= degree <= 2 * n:
            raise ValueError(f"degree {degree} out of range for dimension {n}")
        self.n = n
        self.degree = degree
        coeffs = dict(coeffs or {})
        for key in coeffs:
            if len(key) != degree or any(not 0 <= a < 2 * n for a in key):
                raise ValueError(f"bad multi-index {key} for degree {degree}, n={n}")
            if any(key[i] >= key[i + 1] for i in range(len(key) - 1)):
                raise ValueError(f"multi-index {key} is not strictly increasing")
        self.coeffs = _clean(coeffs) if clean else coeffs

    def component(self, key: tuple) -> Expression:
        return self.coeffs.get(tuple(key), ZERO)

    def component_signed(self, key: tuple) -> tuple:
        """(coefficient, sign) for a possibly unsorted multi-index."""
        skey, sign = _sorted_with_sign(tuple(key))
        if sign == 0:
            return ZERO, 0
        return self.coeffs.get(skey, ZERO), sign

    def is_semi_basic(self) -> bool:
        return all(a < self.n for key in self.coeffs for a in key)

    def is_zero_form(self) -> bool:
        return not self.coeffs

    def map_coeffs(self, fn) -> "ScalarForm":
        return ScalarForm(self.n, self.degree, {k: fn(e) for k, e in self.coeffs.items()})

    def __add__(self, other: "ScalarForm") -> "ScalarForm":
        if (self.n, self.degree) != (other.n, other.degree):
            raise ValueError("degree/dimension mismatch")
        out = dict(self.coeffs)
        for key, e in other.coeffs.items():
            out[key] = out[key] + e if key in out else e
        return ScalarForm(self.n, self.degree, out)

    def __sub__(self, other: "ScalarForm") -> "ScalarForm":
        return self + other.scale(Const(-1.0))

    def scale(self, factor) -> "ScalarForm":
        if isinstance(factor, (int, float)):
            factor = Const(factor)
        return ScalarForm(self.n, self.degree,
                          {k: factor * e for k, e in self.coeffs.items()})

    def zero_verdict(self, samples, tol: float = 1e-9):
        if not self.coeffs:
            from .evaluate import ZeroVerdict
            return ZeroVerdict("symbolic")
        return worst_verdict(is_zero(e, samples, tol) for e in self.coeffs.values())

    def __repr__(self):
        if not self.coeffs:
            return f"<0-form deg {self.degree}>"
        parts = ", ".join(f"{key}: {e}" for key, e in sorted(self.coeffs.items()))
        return f"<{self.degree}-form {parts}>"


class VectorValuedForm:
    """Vector-valued l-form: frame-vector component plus multi-index."""

    __slots__ = ("n", "degree", "coeffs")

    def __init__(self, n: int, degree: int, coeffs: dict | None = None, *, clean: bool = True):
        if not 0 <= degree <= 2 * n:
            raise ValueError(f"degree {degree} out of range for dimension {n}")
        self.n = n
        self.degree = degree
        coeffs = dict(coeffs or {})
        for vec, key in coeffs:
            if not 0 <= vec < 2 * n:
                raise ValueError(f"bad frame vector index {vec}")
            if len(key) != degree:
                raise ValueError(f"bad multi-index {key} for degree {degree}")
        self.coeffs = _clean(coeffs) if clean else coeffs

    def component(self, vec: int, key: tuple) -> Expression:
        return self.coeffs.get((vec, tuple(key)), ZERO)

    def is_semi_basic(self) -> bool:
        """Vertical values, dx-only arguments."""
        return all(vec >= self.n and all(a < self.n for a in key)
                   for vec, key in self.coeffs)

    def is_almost_semi_basic(self) -> bool:
        """dx-only arguments; base-vector coefficients depend on x alone."""
        for (vec, key), expr in self.coeffs.items():
            if any(a >= self.n for a in key):
                return False
            if vec < self.n and uses_fiber(expr):
                return False
        return True

    def __add__(self, other: "VectorValuedForm") -> "VectorValuedForm":
        if (self.n, self.degree) != (other.n, other.degree):
            raise ValueError("degree/dimension mismatch")
        out = dict(self.coeffs)
        for key, e in other.coeffs.items():
            out[key] = out[key] + e if key in out else e
        return VectorValuedForm(self.n, self.degree, out)

    def __sub__(self, other: "VectorValuedForm") -> "VectorValuedForm":
        return self + other.scale(Const(-1.0))

    def scale(self, factor) -> "VectorValuedForm":
        if isinstance(factor, (int, float)):
            factor = Const(factor)
        return VectorValuedForm(self.n, self.degree,
                                {k: factor * e for k, e in self.coeffs.items()})

    def zero_verdict(self, samples, tol: float = 1e-9):
        if not self.coeffs:
            from .evaluate import ZeroVerdict
            return ZeroVerdict("symbolic")
        return worst_verdict(is_zero(e, samples, tol) for e in self.coeffs.values())

    def __repr__(self):
        parts = ", ".join(f"{vk}: {e}" for vk, e in sorted(self.coeffs.items()))
        return f"<vv {self.degree}-form {parts}>"


# ---------------------------------------------------------------------------
# canonical fields and forms


def coordinate_function(n: int, axis: int) -> ScalarForm:
    """The coordinate x^i or y^i as a 0-form."""
    return ScalarForm(n, 0, {(): axis_var(n, axis)})


def function_form(n: int, e: Expression) -> ScalarForm:
    return ScalarForm(n, 0, {(): e})


def identity_endomorphism(n: int) -> VectorValuedForm:
    one = Const(1.0)
    return VectorValuedForm(n, 1, {(a, (a,)): one for a in range(2 * n)})


def tangent_structure(n: int) -> VectorValuedForm:
    """J = d/dy^i (x) dx^i."""
    one = Const(1.0)
    return VectorValuedForm(n, 1, {(n + i, (i,)): one for i in range(n)})


def liouville_field(n: int) -> VectorValuedForm:
    """The dilation generator y^i d/dy^i as a vector-valued 0-form."""
    return VectorValuedForm(n, 0, {(n + i, ()): var_y(i + 1) for i in range(n)})


def semi_basic_one_form(n: int, components) -> ScalarForm:
    comps = list(components)
    if len(comps) != n:
        raise ValueError(f"expected {n} components, got {len(comps)}")
    return ScalarForm(n, 1, {(i,): comps[i] for i in range(n)})


# ---------------------------------------------------------------------------
# operations


def exterior_d(omega: ScalarForm) -> ScalarForm:
    """Exterior derivative; d(d(.)) vanishes after simplification."""
    n = omega.n
    if omega.degree == 2 * n:
        return ScalarForm(n, 2 * n, {})
    from .expression import diff

    out: dict = {}
    for key, coeff in omega.coeffs.items():
        for a in range(2 * n):
            if a in key:
                continue
            dc = diff(coeff, axis_var(n, a))
            if _is_zero_const(dc):
                continue
            pos = sum(1 for b in key if b < a)
            sign = -1.0 if pos % 2 else 1.0
            newkey = tuple(sorted(key + (a,)))
            term = dc if sign > 0 else Const(-1.0) * dc
            out[newkey] = out[newkey] + term if newkey in out else term
    return ScalarForm(n, omega.degree + 1, out)


def _vector_index(L: VectorValuedForm) -> dict:
    """multi-index -> [(frame vector, coefficient)] lookup."""
    idx: dict = {}
    for (vec, key), e in L.coeffs.items():
        idx.setdefault(key, []).append((vec, e))
    return idx


def inner_product(L: VectorValuedForm, omega: ScalarForm) -> ScalarForm:
    """i_L omega: alternating insertion of L into the first slots.

    Trivial on 0-forms.  For a 1-form it reduces to omega o L; for
    L = Id it multiplies a k-form by k.
    """
    n = omega.n
    l = L.degree
    k = omega.degree
    if k == 0:
        return ScalarForm(n, max(l - 1, 0), {})
    m = k + l - 1
    if m > 2 * n:
        return ScalarForm(n, 2 * n, {})
    idx = _vector_index(L)
    out: dict = {}
    for bkey in combinations(range(2 * n), m):
        total = None
        for positions in combinations(range(m), l):
            akey = tuple(bkey[p] for p in positions)
            entries = idx.get(akey)
            if not entries:
                continue
            rest = tuple(bkey[p] for p in range(m) if p not in positions)
            shuffle_sign = 1
            for depth, p in enumerate(positions):
                if (p - depth) % 2:
                    shuffle_sign = -shuffle_sign
            for vec, lcoeff in entries:
                wcoeff, wsign = omega.component_signed((vec,) + rest)
                if wsign == 0 or _is_zero_const(wcoeff):
                    continue
                sign = shuffle_sign * wsign
                term = lcoeff * wcoeff
                if sign < 0:
                    term = Const(-1.0) * term
                total = term if total is None else total + term
        if total is not None:
            out[bkey] = total
    return ScalarForm(n, m, out)


def lie_type_derivative(L: VectorValuedForm, omega: ScalarForm) -> ScalarForm:
    """d_L omega = i_L(d omega) + (-1)^deg(L) d(i_L omega)."""
    first = inner_product(L, exterior_d(omega))
    if omega.degree == 0:
        return first
    second = exterior_d(inner_product(L, omega))
    if L.degree % 2:
        return first - second
    return first + second


def lie_derivative(X: VectorValuedForm, omega: ScalarForm) -> ScalarForm:
    """Lie derivative along a vector field via the Cartan formula."""
    if X.degree != 0:
        raise ValueError("lie_derivative expects a vector field (degree 0)")
    return lie_type_derivative(X, omega)


def fn_bracket(L: VectorValuedForm, K: VectorValuedForm) -> VectorValuedForm:
    """Frölicher-Nijenhuis bracket [L, K].

    Components are read off by applying d_L d_K - (-1)^{kl} d_K d_L to the
    2n coordinate functions; the coefficient forms of a vector-valued form
    W are exactly d_W(coordinate).
    """
    n = L.n
    k, l = K.degree, L.degree
    if k + l > 2 * n:
        raise ValueError("bracket degree exceeds the manifold dimension")
    sign = -1.0 if (k * l) % 2 else 1.0
    coeffs: dict = {}
    for w in range(2 * n):
        f = coordinate_function(n, w)
        first = lie_type_derivative(L, lie_type_derivative(K, f))
        second = lie_type_derivative(K, lie_type_derivative(L, f))
        comp = first - second.scale(sign)
        for key, e in comp.coeffs.items():
            coeffs[(w, key)] = e
    return VectorValuedForm(n, k + l, coeffs)


def contract_vector(X: VectorValuedForm, W: VectorValuedForm) -> VectorValuedForm:
    """i_X W for a vector field X and vector-valued form W (degree >= 1)."""
    if X.degree != 0:
        raise ValueError("contract_vector expects a vector field")
    if W.degree < 1:
        raise ValueError("cannot contract a vector-valued 0-form")
    n = W.n
    out: dict = {}
    xcomps = {a: e for (a, _), e in X.coeffs.items()}
    for (vec, key), wcoeff in W.coeffs.items():
        for pos, a in enumerate(key):
            xcoeff = xcomps.get(a)
            if xcoeff is None:
                continue
            rest = key[:pos] + key[pos + 1:]
            sign = -1.0 if pos % 2 else 1.0
            term = xcoeff * wcoeff
            if sign < 0:
                term = Const(-1.0) * term
            okey = (vec, rest)
            out[okey] = out[okey] + term if okey in out else term
    return VectorValuedForm(n, W.degree - 1, out)


def compose_endomorphisms(A: VectorValuedForm, B: VectorValuedForm) -> VectorValuedForm:
    """(A o B)(X) = A(B(X)) for vector-valued 1-forms."""
    if A.degree != 1 or B.degree != 1:
        raise ValueError("composition is defined for vector-valued 1-forms")
    n = A.n
    out: dict = {}
    for (b, ckey), bcoeff in B.coeffs.items():
        for a in range(2 * n):
            acoeff = A.coeffs.get((a, (b,)))
            if acoeff is None:
                continue
            okey = (a, ckey)
            term = acoeff * bcoeff
            out[okey] = out[okey] + term if okey in out else term
    return VectorValuedForm(n, 1, out)


def apply_to_function(X: VectorValuedForm, e: Expression) -> Expression:
    """Directional derivative X(f) for a vector field X."""
    from .expression import diff

    if X.degree != 0:
        raise ValueError("expected a vector field")
    n = X.n
    total = ZERO
    for (a, _), coeff in X.coeffs.items():
        total = total + coeff * diff(e, axis_var(n, a))
    return simplify(total)


def wedge_scalar_vector(alpha: ScalarForm, L: VectorValuedForm) -> VectorValuedForm:
    """alpha wedge L, wedging the form parts and keeping L's values."""
    n = alpha.n
    a_deg, l_deg = alpha.degree, L.degree
    m = a_deg + l_deg
    if m > 2 * n:
        raise ValueError("wedge degree exceeds the manifold dimension")
    out: dict = {}
    lidx = _vector_index(L)
    for bkey in combinations(range(2 * n), m):
        for positions in combinations(range(m), a_deg):
            akey = tuple(bkey[p] for p in positions)
            acoeff = alpha.coeffs.get(akey)
            if acoeff is None:
                continue
            rest = tuple(bkey[p] for p in range(m) if p not in positions)
            entries = lidx.get(rest)
            if not entries:
                continue
            sign = 1
            for depth, p in enumerate(positions):
                if (p - depth) % 2:
                    sign = -sign
            for vec, lcoeff in entries:
                term = acoeff * lcoeff
                if sign < 0:
                    term = Const(-1.0) * term
                okey = (vec, bkey)
                out[okey] = out[okey] + term if okey in out else term
    return VectorValuedForm(n, m, out)


def tensor_with_vector(beta: ScalarForm, X: VectorValuedForm) -> VectorValuedForm:
    """beta (x) X for a vector field X."""
    if X.degree != 0:
        raise ValueError("tensor_with_vector expects a vector field")
    n = beta.n
    out: dict = {}
    for key, bcoeff in beta.coeffs.items():
        for (vec, _), xcoeff in X.coeffs.items():
            okey = (vec, key)
            term = bcoeff * xcoeff
            out[okey] = out[okey] + term if okey in out else term
    return VectorValuedForm(n, beta.degree, out)


def build_combination(pattern: str, n: int, *, alpha: ScalarForm | None = None,
                      beta: ScalarForm | None = None,
                      lam: Expression | None = None,
                      eta: ScalarForm | None = None) -> VectorValuedForm:
    """Assemble the standard wedge/tensor combinations used by the isotropy
    structure results: 'alpha^J', 'beta(x)C', or 'lamJ+eta(x)C'."""
    J = tangent_structure(n)
    C = liouville_field(n)
    if pattern == "alpha^J":
        if alpha is None:
            raise ValueError("pattern alpha^J needs alpha")
        return wedge_scalar_vector(alpha, J)
    if pattern == "beta(x)C":
        if beta is None:
            raise ValueError("pattern beta(x)C needs beta")
        return tensor_with_vector(beta, C)
    if pattern == "lamJ+eta(x)C":
        if lam is None or eta is None:
            raise ValueError("pattern lamJ+eta(x)C needs lam and eta")
        if eta.degree != 1:
            raise ValueError("eta must be a 1-form")
        return J.scale(lam) + tensor_with_vector(eta, C)
    raise ValueError(f"unknown pattern {pattern!r}")
