"""spraylab: geometry of sprays and the projective metrizability conditions.

Given a homogeneous second-order ODE system (a spray), the package builds
its nonlinear connection, Jacobi endomorphism, and curvature; checks the
algebraic/differential conditions a semi-basic 1-form must satisfy for the
spray to be projectively metrizable; evaluates the curvature obstruction;
counts the symbol kernel dimensions behind the involutivity certificate;
and integrates geodesics for projective-equivalence tests.
"""

__version__ = "0.1.0"

from .evaluate import (
    BatchEvaluator,
    EvalDomainError,
    Point,
    ZeroVerdict,
    active_backend,
    eval_expr,
    is_zero,
    sample_points,
)
from .expression import (
    Expression,
    ExpressionError,
    ParseError,
    diff,
    parse,
    simplify,
    to_string,
)
from .forms import (
    ScalarForm,
    VectorValuedForm,
    build_combination,
    exterior_d,
    fn_bracket,
    inner_product,
    lie_derivative,
    lie_type_derivative,
    semi_basic_one_form,
)
from .geodesics import (
    EquivalenceReport,
    GeodesicTrace,
    convergence_order,
    integrate,
    ode_residual,
    projective_factor,
    trace_compare,
)
from .involutivity import DimensionReport, cartan_test, run_cartan_suite, sigma1_matrix, sigma2_matrix
from .metrizability import (
    ConditionReport,
    ConditionsNotMetError,
    angular_metric,
    check_conditions,
    euler_poincare,
    obstruction,
    recover_finsler,
)
from .presets import SprayDefinition, get_preset
from .spray import (
    Classification,
    Connection,
    CurvatureTensor,
    JacobiEndomorphism,
    Spray,
    classify,
    connection,
    curvature,
    identity_suite,
    jacobi,
    projective_transform,
    projectors,
    validate,
)
