import numpy as np
import pytest

from normalgeo.conformal import cartan_coefficient
from normalgeo.curvature import (
    CurvatureBundle,
    constant_curvature_frame_riemann,
    curvature_bundle,
)
from normalgeo.errors import ConfigError
from normalgeo.expansion import (
    FrameODESolution,
    b_tensor_checks,
    expansion_report,
    integrate_frame_ode,
    metric_expansion,
    normal_tensor_d,
)
from normalgeo.geodesics import normal_chart
from normalgeo.metrics import catalog_construct

SPHERE = catalog_construct("sphere_polar", R=1.0, n=2)
EQUATOR = np.array([np.pi / 2, 0.0])


def synthetic_constant_curvature_bundle(K, n):
    """Bundle with the exact constant-curvature frame tensor (flat-frame point)."""
    eta = np.eye(n)
    r_low = constant_curvature_frame_riemann(K, np.ones(n))
    r_up = r_low.copy()  # eta = identity raises trivially
    ricci = np.einsum("rmrn->mn", r_up)
    return CurvatureBundle(
        point=np.zeros(n),
        metric=eta,
        inverse=eta,
        christoffel=np.zeros((n, n, n)),
        riemann_up=r_up,
        riemann_lower=r_low,
        ricci=ricci,
        scalar=float(np.trace(ricci)),
        nabla_riemann=np.zeros((n,) * 5),
        frame=np.eye(n),
    )


def test_normal_tensor_flat_is_zero():
    b = curvature_bundle(catalog_construct("euclidean", n=3), np.zeros(3))
    d = normal_tensor_d(b)
    assert np.abs(d.components).max() == 0.0


def test_normal_tensor_sphere_identities():
    b = curvature_bundle(SPHERE, EQUATOR)
    d = normal_tensor_d(b)
    assert d.reconstruction_residual(b.riemann_up) < 1e-9
    assert d.pair_symmetry_residual() < 1e-12
    assert d.cyclic_residual() < 1e-12


def test_normal_tensor_synthetic_constant_curvature():
    b = synthetic_constant_curvature_bundle(2.0, 3)
    d = normal_tensor_d(b)
    assert d.cyclic_residual() < 1e-12
    assert d.reconstruction_residual(b.riemann_up) < 1e-12


def test_normal_tensor_identity_across_random_bundles():
    rng = np.random.default_rng(21)
    for _ in range(5):
        amp = round(float(0.1 + 0.3 * rng.random()), 3)
        m = catalog_construct("conformal_flat_generic", n=3, amplitude=amp)
        b = curvature_bundle(m, rng.uniform(-1, 1, size=3), with_nabla=False)
        d = normal_tensor_d(b)
        assert d.reconstruction_residual(b.riemann_up) < 1e-10
        assert d.cyclic_residual() < 1e-12


def test_expansion_flat_is_eta():
    b = curvature_bundle(catalog_construct("minkowski", n=3), np.zeros(3))
    eta = np.diag([-1.0, 1.0, 1.0])
    for v in ([0.2, 0.0, -0.4], [1.0, 1.0, 1.0]):
        assert np.abs(metric_expansion(b, np.array(v), 2) - eta).max() < 1e-12
        assert np.abs(metric_expansion(b, np.array(v), 3) - eta).max() < 1e-12


def test_expansion_sphere_transverse_value():
    """Second-order prediction vs the closed form at r = 0.1."""
    b = curvature_bundle(SPHERE, EQUATOR)
    v = np.array([0.0, 0.1])
    pred = metric_expansion(b, v, 2)
    assert pred[0, 0] == pytest.approx(1 - 0.01 / 3, abs=1e-12)
    exact = np.sin(0.1) ** 2 / 0.01
    assert pred[0, 0] == pytest.approx(exact, abs=7e-6)


def test_expansion_forms_agree():
    rng = np.random.default_rng(17)
    m = catalog_construct("conformal_flat_generic", n=3)
    b = curvature_bundle(m, rng.uniform(-1, 1, size=3))
    for _ in range(5):
        v = rng.normal(size=3) * 0.3
        for order in (2, 3):
            a = metric_expansion(b, v, order, form="contracted")
            c = metric_expansion(b, v, order, form="antisymmetrized")
            assert np.abs(a - c).max() < 1e-12


def test_expansion_invalid_order_and_form():
    b = curvature_bundle(SPHERE, EQUATOR)
    with pytest.raises(ConfigError):
        metric_expansion(b, np.zeros(2), 4)
    with pytest.raises(ConfigError):
        metric_expansion(b, np.zeros(2), 2, form="weird")


def test_order2_residual_shrinks_16x_on_halving():
    chart = normal_chart(SPHERE, EQUATOR)
    b = curvature_bundle(SPHERE, EQUATOR)
    rep = expansion_report(chart, b, np.array([0.0, 1.0]), np.array([0.4, 0.2]), 2)
    ratio = rep.residuals[0] / rep.residuals[1]
    assert 12.0 < ratio < 20.0


def test_expansion_slopes():
    """Order-2 slope ~4 on sphere and generic; order-3 slope ~5 on generic."""
    radii = np.array([0.4, 0.2, 0.1, 0.05])
    chart = normal_chart(SPHERE, EQUATOR)
    b = curvature_bundle(SPHERE, EQUATOR)
    rep = expansion_report(chart, b, np.array([0.0, 1.0]), radii, 2)
    assert 3.7 <= rep.observed_slope <= 4.3

    m = catalog_construct("conformal_flat_generic", n=3, amplitude=0.3)
    rng = np.random.default_rng(2)
    origin = rng.uniform(-0.5, 0.5, size=3)
    chart2 = normal_chart(m, origin)
    b2 = curvature_bundle(m, origin)
    direction = np.array([0.6, -0.64, 0.48])
    direction /= np.linalg.norm(direction)
    rep2 = expansion_report(chart2, b2, direction, radii, 2)
    assert 3.7 <= rep2.observed_slope <= 4.3
    rep3 = expansion_report(chart2, b2, direction, radii, 3)
    assert 4.6 <= rep3.observed_slope <= 5.4


def test_order3_term_vanishes_constant_curvature():
    st = catalog_construct("constant_curvature_stereographic", K=1.0, n=2)
    b = curvature_bundle(st, np.array([0.2, -0.1]))
    v = np.array([0.2, 0.25])
    gap = np.abs(metric_expansion(b, v, 3) - metric_expansion(b, v, 2)).max()
    assert gap < 1e-10


def test_frame_ode_zero_curvature_is_zero():
    sol = integrate_frame_ode(0.0, 2, 1.0, steps=200)
    assert np.abs(sol.A).max() == 0.0


@pytest.mark.parametrize("K", [1.0, -1.0, 0.5, -0.5])
def test_frame_ode_matches_cartan_coefficient(K):
    for r in (0.25, 0.5, 1.0):
        sol = integrate_frame_ode(K, 2, r, steps=10000)
        assert abs(sol.measured_coefficient() - cartan_coefficient(K, r)) < 1e-6


def test_frame_ode_higher_dimension_and_direction():
    rng = np.random.default_rng(12)
    direction = rng.normal(size=3)
    sol = integrate_frame_ode(1.0, 3, 0.7, steps=8000, direction=direction)
    assert abs(sol.measured_coefficient() - cartan_coefficient(1.0, 0.7)) < 1e-6
    assert sol.antisymmetry_residual() < 1e-12


def test_frame_ode_intermediate_grid_matches_scaled_radius():
    """At grid time t the coefficient equals the closed form at radius r t."""
    sol = integrate_frame_ode(1.0, 2, 0.8, steps=8000, records=16)
    for k in range(4, len(sol.t)):
        t = sol.t[k]
        assert sol.measured_coefficient(k) == pytest.approx(
            cartan_coefficient(1.0, 0.8 * t), abs=1e-6
        )


def test_frame_ode_validation():
    with pytest.raises(ConfigError):
        integrate_frame_ode(1.0, 2, 1.0, steps=5)
    with pytest.raises(ConfigError):
        integrate_frame_ode(float("nan"), 2, 1.0)


def test_b_tensor_checks_clean_and_corrupted():
    sol = integrate_frame_ode(1.0, 2, 1.0, steps=4000, with_b=True)
    rep = b_tensor_checks(sol)
    assert rep.first_pair_residual < 1e-8
    assert rep.last_pair_residual < 1e-8
    assert rep.contraction_residual < 1e-10

    solk0 = integrate_frame_ode(0.0, 2, 1.0, steps=200, with_b=True)
    rep0 = b_tensor_checks(solk0)
    assert rep0.first_pair_residual == 0.0 and rep0.last_pair_residual == 0.0

    # injected fault: symmetrize part of B and watch the detector fire
    corrupted = FrameODESolution(
        t=sol.t,
        A=sol.A,
        B=sol.B + 1e-3,
        z=sol.z,
        K=sol.K,
        eta_diag=sol.eta_diag,
    )
    repc = b_tensor_checks(corrupted)
    assert repc.first_pair_residual == pytest.approx(2e-3, rel=1e-6)


def test_b_check_requires_companion():
    sol = integrate_frame_ode(1.0, 2, 1.0, steps=200)
    with pytest.raises(ConfigError):
        b_tensor_checks(sol)
