import random

from spraylab.evaluate import is_zero
from spraylab.expression import Const, ZERO, parse, simplify, var_y
from spraylab.forms import (
    ScalarForm,
    VectorValuedForm,
    build_combination,
    coordinate_function,
    exterior_d,
    fn_bracket,
    function_form,
    identity_endomorphism,
    inner_product,
    lie_derivative,
    lie_type_derivative,
    liouville_field,
    semi_basic_one_form,
    tangent_structure,
    wedge_scalar_vector,
)
from spraylab.metrizability import closed_form_operators, euler_poincare
from spraylab.spray import connection, curvature, projectors

from gen import random_expression, random_polynomial


def random_semibasic_theta(rng, n):
    comps = [random_expression(rng, n, 3) for _ in range(n)]
    return semi_basic_one_form(n, comps)


def random_polynomial_theta(rng, n):
    comps = [random_polynomial(rng, n, 3) for _ in range(n)]
    return semi_basic_one_form(n, comps)


def random_scalar_form(rng, n, degree):
    from itertools import combinations

    coeffs = {}
    for key in combinations(range(2 * n), degree):
        if rng.random() < 0.6:
            coeffs[key] = random_expression(rng, n, 2)
    return ScalarForm(n, degree, coeffs)


class TestExteriorD:
    def test_basic_example(self):
        w = ScalarForm(2, 1, {(1,): parse("x1", 2)})
        dw = exterior_d(w)
        assert dw.coeffs == {(0, 1): Const(1.0)}

    def test_dd_zero_polynomial(self):
        f = function_form(2, parse("x1*y2^2+sin(x2)", 2))
        assert exterior_d(exterior_d(f)).coeffs == {}

    def test_dd_zero_random(self, samples2):
        rng = random.Random(17)
        for _ in range(10):
            w = random_scalar_form(rng, 2, 1)
            ddw = exterior_d(exterior_d(w))
            assert ddw.zero_verdict(samples2, 1e-8).is_zero

    def test_euclidean_dtheta_has_angular_structure(self, samples2):
        # with the flat connection, F*dtheta(dy^i, dx^j) recovers the
        # angular metric h_ij = F d^2F/dy^i dy^j
        n = 2
        F = parse("sqrt(y1^2+y2^2)", n)
        theta = euler_poincare(F, n, samples2)
        dtheta = exterior_d(theta)
        from spraylab.expression import diff

        for i in range(n):
            for j in range(n):
                h_ij = simplify(F * diff(theta.component((j,)), var_y(i + 1)))
                got, sign = dtheta.component_signed((n + i, j))
                residual = simplify(F * (Const(float(sign)) * got) - h_ij)
                assert is_zero(residual, samples2, 1e-9).is_zero


class TestInnerProduct:
    def test_identity_multiplies_by_degree(self, samples2):
        rng = random.Random(4)
        Id = identity_endomorphism(2)
        for degree in (1, 2, 3):
            w = random_scalar_form(rng, 2, degree)
            diffr = inner_product(Id, w) - w.scale(float(degree))
            assert diffr.zero_verdict(samples2, 1e-9).is_zero

    def test_i_J_df_is_dJf(self, samples2):
        # the dx-components of i_J(dF) are dF/dy^i
        n = 2
        J = tangent_structure(n)
        F = parse("sqrt(y1^2+y2^2)", n)
        w = inner_product(J, exterior_d(function_form(n, F)))
        assert w.is_semi_basic()
        from spraylab.expression import diff

        for i in range(n):
            residual = w.component((i,)) - diff(F, var_y(i + 1))
            assert is_zero(residual, samples2, 1e-12).is_zero

    def test_linear_over_functions(self, samples2):
        rng = random.Random(8)
        J = tangent_structure(2)
        f = random_expression(rng, 2, 3)
        w = random_scalar_form(rng, 2, 2)
        left = inner_product(J, w.scale(f))
        right = inner_product(J, w).scale(f)
        assert (left - right).zero_verdict(samples2, 1e-9).is_zero

    def test_trivial_on_functions(self):
        J = tangent_structure(2)
        f = function_form(2, parse("x1*y1", 2))
        assert inner_product(J, f).coeffs == {}

    def test_on_one_forms_equals_composition(self, samples2):
        # (i_L w)(X) = w(L(X)) for a 1-form w and degree-1 L
        rng = random.Random(11)
        n = 2
        L = VectorValuedForm(n, 1, {
            (v, (a,)): random_expression(rng, n, 2)
            for v in range(2 * n) for a in range(2 * n) if rng.random() < 0.5
        })
        w = random_scalar_form(rng, n, 1)
        got = inner_product(L, w)
        for a in range(2 * n):
            expected = ZERO
            for v in range(2 * n):
                expected = expected + L.component(v, (a,)) * w.component((v,))
            assert is_zero(got.component((a,)) - expected, samples2, 1e-9).is_zero


class TestLieTypeDerivative:
    def test_dJ_closed_form(self, samples2, anderson_thompson):
        rng = random.Random(23)
        J = tangent_structure(2)
        for _ in range(5):
            theta = random_semibasic_theta(rng, 2)
            lc, dj, dh = closed_form_operators(anderson_thompson, theta)
            generic = lie_type_derivative(J, theta)
            assert (generic - dj).zero_verdict(samples2, 1e-9).is_zero

    def test_dh_closed_form(self, samples2, anderson_thompson, yang_05):
        rng = random.Random(29)
        for spray in (anderson_thompson, yang_05):
            h, _ = projectors(spray)
            for _ in range(3):
                theta = random_semibasic_theta(rng, 2)
                _, _, dh = closed_form_operators(spray, theta)
                generic = lie_type_derivative(h, theta)
                assert (generic - dh).zero_verdict(samples2, 1e-8).is_zero

    def test_lie_liouville_closed_form(self, samples2, flat2):
        rng = random.Random(31)
        C = liouville_field(2)
        for _ in range(5):
            theta = random_semibasic_theta(rng, 2)
            lc, _, _ = closed_form_operators(flat2, theta)
            generic = lie_derivative(C, theta)
            assert (generic - lc).zero_verdict(samples2, 1e-9).is_zero

    def test_dJ_squared_zero(self, samples2):
        rng = random.Random(37)
        J = tangent_structure(2)
        theta = random_semibasic_theta(rng, 2)
        ddtheta = lie_type_derivative(J, lie_type_derivative(J, theta))
        assert ddtheta.zero_verdict(samples2, 1e-9).is_zero

    def test_dh_flat_is_x_antisymmetrization(self, samples2, flat2):
        rng = random.Random(41)
        h, _ = projectors(flat2)
        theta = random_semibasic_theta(rng, 2)
        from spraylab.expression import diff, var_x

        got = lie_type_derivative(h, theta)
        expected = simplify(
            diff(theta.component((1,)), var_x(1)) - diff(theta.component((0,)), var_x(2))
        )
        assert is_zero(got.component((0, 1)) - expected, samples2, 1e-9).is_zero

    def test_d_commutes_with_dL_graded(self, samples2, anderson_thompson):
        # d o d_L = (-1)^l d_L o d: odd sign for J (l = 1), even sign for
        # the degree-2 curvature form
        rng = random.Random(43)
        J = tangent_structure(2)
        for degree in (0, 1):
            w = random_scalar_form(rng, 2, degree)
            left = exterior_d(lie_type_derivative(J, w))
            right = lie_type_derivative(J, exterior_d(w))
            assert (left + right).zero_verdict(samples2, 1e-8).is_zero
        R = curvature(anderson_thompson).as_form()
        for degree in (0, 1):
            w = random_scalar_form(rng, 2, degree)
            left = exterior_d(lie_type_derivative(R, w))
            right = lie_type_derivative(R, exterior_d(w))
            assert (left - right).zero_verdict(samples2, 1e-8).is_zero

    def test_semi_basic_closure(self, samples2, anderson_thompson):
        # d_L keeps semi-basic forms semi-basic for L in {J, h}; exact
        # cancellation needs a polynomial corpus
        rng = random.Random(47)
        J = tangent_structure(2)
        h, _ = projectors(anderson_thompson)
        assert h.is_almost_semi_basic()
        for _ in range(5):
            theta = random_polynomial_theta(rng, 2)
            for L in (J, h):
                out = lie_type_derivative(L, theta)
                assert out.is_semi_basic()
                out2 = lie_type_derivative(L, lie_type_derivative(J, theta))
                assert out2.is_semi_basic()

    def test_liouville_homogeneity_degrees(self, samples2):
        C = liouville_field(2)
        # 0-homogeneous components: L_C theta = 0
        F = parse("sqrt(y1^2+y2^2)", 2)
        theta = euler_poincare(F, 2, samples2)
        assert lie_derivative(C, theta).zero_verdict(samples2, 1e-9).is_zero
        # fiber-linear components: L_C theta = theta
        theta1 = semi_basic_one_form(2, [parse("y1", 2), ZERO])
        got = lie_derivative(C, theta1)
        assert (got - theta1).zero_verdict(samples2, 1e-12).is_zero

    def test_geodesic_spray_characterization(self, samples2, flat2, riemannian):
        # L_S d_J F^2 = d F^2 for a Finsler function and its geodesic spray
        cases = [
            (flat2, parse("sqrt(y1^2+y2^2)", 2)),
            (riemannian, parse("sqrt((1+x2^2)*y1^2+(1+x1^2)*y2^2)", 2)),
        ]
        J = tangent_structure(2)
        for spray, F in cases:
            F2 = simplify(F * F)
            lhs = lie_derivative(spray.field(), lie_type_derivative(J, function_form(2, F2)))
            rhs = exterior_d(function_form(2, F2))
            assert (lhs - rhs).zero_verdict(samples2, 1e-9).is_zero


class TestFnBracket:
    def test_JJ_vanishes(self):
        J = tangent_structure(2)
        assert fn_bracket(J, J).coeffs == {}

    def test_graded_antisymmetry(self, samples2):
        rng = random.Random(53)
        n = 2
        J = tangent_structure(n)
        X = VectorValuedForm(n, 0, {
            (v, ()): random_expression(rng, n, 2) for v in range(2 * n)
        })
        # [X, J] + (-1)^0 [J, X] = 0
        lhs = fn_bracket(X, J) + fn_bracket(J, X)
        assert lhs.zero_verdict(samples2, 1e-8).is_zero

    def test_half_hh_is_curvature(self, samples2, anderson_thompson):
        h, _ = projectors(anderson_thompson)
        R = curvature(anderson_thompson).as_form()
        assert (fn_bracket(h, h).scale(0.5) - R).zero_verdict(samples2, 1e-9).is_zero

    def test_J_phi_is_3R(self, samples2, anderson_thompson):
        from spraylab.spray import jacobi

        J = tangent_structure(2)
        Phi = jacobi(anderson_thompson).as_form()
        R = curvature(anderson_thompson).as_form()
        got = fn_bracket(J, Phi)
        assert (got - R.scale(3.0)).zero_verdict(samples2, 1e-9).is_zero


class TestCombinations:
    def test_zero_combination(self, samples2):
        out = build_combination("lamJ+eta(x)C", 2, lam=ZERO,
                                eta=semi_basic_one_form(2, [ZERO, ZERO]))
        assert out.coeffs == {}

    def test_wedge_antisymmetry(self):
        # (dx1 ^ J) components are antisymmetric in the two covector slots
        n = 2
        alpha = ScalarForm(n, 1, {(0,): Const(1.0)})
        J = tangent_structure(n)
        out = wedge_scalar_vector(alpha, J)
        # value on (E_0, E_1): alpha_0 J^v_1 - alpha_1 J^v_0 = J^v_1
        assert out.component(n + 1, (0, 1)) == Const(1.0)
        assert out.component(n + 0, (0, 1)) == ZERO

    def test_flag_curvature_jacobi_shape(self, samples2):
        # kappa (F^2 J - F d_J F (x) C) has fiber-frame matrix
        # kappa (|y|^2 delta_ij - y_i y_j) for the Euclidean norm
        import numpy as np

        from spraylab.evaluate import BatchEvaluator, points_to_arrays

        n = 2
        F = parse("sqrt(y1^2+y2^2)", n)
        theta = euler_poincare(F, n, samples2)
        J = tangent_structure(n)
        C = liouville_field(n)
        from spraylab.forms import tensor_with_vector

        FdJF = theta.scale(F)
        combo = J.scale(simplify(F * F)) - tensor_with_vector(FdJF, C)
        exprs = [combo.component(n + i, (j,)) for i in range(n) for j in range(n)]
        vals = BatchEvaluator(exprs).at_points(samples2)
        xs, ys = points_to_arrays(samples2)
        for s in range(len(samples2)):
            y = ys[s]
            M = vals[s].reshape(n, n)
            expected = (y @ y) * np.eye(n) - np.outer(y, y)
            assert np.allclose(M, expected, atol=1e-10)

    def test_isotropic_curvature_matches_bracket_expansion(self, samples2, yang_05):
        # R = alpha ^ J + beta (x) C reproduces the Yang curvature with
        # alpha = lambda^2 F d_J F and beta = 0
        n = 2
        lam = 0.5
        F = parse("sqrt(y1^2+y2^2)", n)
        theta = euler_poincare(F, n, samples2)
        alpha = theta.scale(simplify(Const(lam * lam) * F))
        built = build_combination("alpha^J", n, alpha=alpha)
        R = curvature(yang_05).as_form()
        assert (built - R).zero_verdict(samples2, 1e-9).is_zero


class TestPredicates:
    def test_semi_basic_scalar(self):
        w = ScalarForm(2, 1, {(0,): parse("y1", 2)})
        assert w.is_semi_basic()
        w2 = ScalarForm(2, 1, {(2,): parse("y1", 2)})
        assert not w2.is_semi_basic()

    def test_vector_valued_predicates(self, anderson_thompson):
        J = tangent_structure(2)
        assert J.is_semi_basic() and J.is_almost_semi_basic()
        h, v = projectors(anderson_thompson)
        assert not h.is_semi_basic()
        assert h.is_almost_semi_basic()
        S = anderson_thompson.field()
        assert not VectorValuedForm(2, 1, {(0, (0,)): parse("y1", 2)}).is_almost_semi_basic()

    def test_coordinate_function(self):
        f = coordinate_function(2, 3)
        assert f.component(()) == var_y(2)
