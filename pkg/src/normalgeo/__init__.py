"""normalgeo: numerical pseudo-Riemannian geometry in normal coordinates.

Metric catalog and config loader, pointwise curvature with interchangeable
differentiation strategies, geodesic normal charts with exp/log maps and
conjugate-point monitoring, normal-tensor metric expansions, conformal
factors and stereographic standard forms, flat-space embeddings, and the
so(p, q) generator algebra.  Every construction ships with an independent
oracle exercised by the test suite and the ``normalgeo verify`` CLI.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ConjugatePointError,
    ConvergenceError,
    DomainError,
    GeometryError,
    SingularMetricError,
    StepUnderflowError,
)
from .metrics import (
    CATALOG,
    Domain,
    MetricField,
    Signature,
    catalog_construct,
    evaluate_metric,
    load_metric,
    product_metric,
)
from .differentiation import DifferentiationStrategy, ScalarField, default_strategy
from .curvature import (
    CurvatureBundle,
    christoffel,
    conformal_laplacians,
    curvature_bundle,
    frame_at_point,
    nabla_riemann,
    ricci_scalar,
    riemann,
    weyl,
)
from .geodesics import (
    GeodesicSettings,
    GeodesicSolution,
    NormalChart,
    detect_conjugate,
    exp_map,
    integrate_geodesic,
    log_map,
    normal_chart,
    pullback_metric_normal,
)
from .expansion import (
    ExpansionReport,
    FrameODESolution,
    NormalTensorD,
    b_tensor_checks,
    expansion_report,
    integrate_frame_ode,
    metric_expansion,
    normal_tensor_d,
)
from .conformal import (
    AngularMomentumFunctional,
    ConformalFactorReport,
    angular_momentum,
    cartan_coefficient,
    conformal_factor,
    conformal_factor_general,
    conformal_identity_residual,
    conformal_relation_check,
    constant_curvature_normal_metric,
    stereographic_transform,
)
from .embedding import (
    ConeEmbedding,
    HypersurfaceModel,
    cone_embed,
    cone_pullback_check,
    flow_commutator_fd,
    lie_derivative_check,
    projected_commutator,
    surface_model,
    surface_project,
)
from .algebra import (
    GeneratorSet,
    casimir,
    commutation_check,
    curvature_generator_identity,
    jacobi_residual,
    so_generators,
)
from .scenarios import Report, convergence_csv, convergence_study, run_scenario
