import numpy as np
import pytest

from normalgeo.differentiation import DifferentiationStrategy, ScalarField
from normalgeo.embedding import (
    ConeEmbedding,
    HypersurfaceModel,
    cone_embed,
    cone_pullback_check,
    flow_commutator_fd,
    lie_derivative_check,
    lie_derivative_of_metric,
    projected_commutator,
    projection_field,
    surface_model,
    surface_project,
)
from normalgeo.errors import ConfigError, DomainError
from normalgeo.metrics import Signature

S2 = HypersurfaceModel(n=2, R=1.0, eps=1)
H2 = HypersurfaceModel(n=2, R=1.0, eps=-1)


def test_cone_embed_euclidean_example():
    y = cone_embed("0", np.array([1.0, 0.0]), Signature(0, 2))
    assert np.allclose(y, [1.0, 0.0, 0.75, 1.25])
    # null identity: 1 + 0.75^2 - 1.25^2 = 0
    assert 1.0 + 0.75**2 - 1.25**2 == 0.0


def test_cone_embed_zero_point():
    for sigma in ("0", "0.5"):
        s = np.exp(float(sigma))
        y = cone_embed(sigma, np.zeros(3), Signature(0, 3))
        assert np.allclose(y, [0, 0, 0, -s / 4, s / 4])


def test_cone_null_residual_sweep():
    """1e4 random (sigma, z) samples across both base signatures."""
    rng = np.random.default_rng(1)
    for n_minus in (0, 1):
        sig = Signature(n_minus, 3 - n_minus)
        emb = ConeEmbedding(ScalarField("0.3*sin(x1)", 3), sig)
        pts = rng.normal(size=(5000, 3)) * 1.5
        y = emb.map(pts)
        res = np.abs(np.einsum("ki,i,ki->k", y, emb.eta_bold_diagonal, y))
        assert res.max() < 1e-12


def test_cone_pullback_trivial_and_constant():
    sig = Signature(0, 2)
    z = np.array([0.4, -0.9])
    assert cone_pullback_check("0", z, sig) < 1e-12
    assert cone_pullback_check("0.7", z, sig) < 1e-10


def test_cone_pullback_wavy_fields():
    rng = np.random.default_rng(2)
    for n_minus in (0, 1):
        sig = Signature(n_minus, 3 - n_minus)
        for src in ("0.3*sin(x1)", "0.25*sin(x1+0.7*x2)"):
            for _ in range(4):
                z = rng.normal(size=3)
                assert cone_pullback_check(src, z, sig) < 1e-7
                assert (
                    cone_pullback_check(
                        src, z, sig, DifferentiationStrategy(kind="central_fd", order=2, step=1e-4)
                    )
                    < 1e-5
                )


def test_surface_model_validation_and_k_label():
    assert surface_model(4.0, 2).R == 0.5
    assert surface_model(-0.25, 2).curvature == -0.25
    with pytest.raises(ConfigError):
        surface_model(0.0, 2)
    with pytest.raises(ConfigError):
        HypersurfaceModel(n=2, R=-1.0, eps=1)
    with pytest.raises(DomainError):
        S2.require_on_surface(np.array([2.0, 0.0, 0.0]))


def test_surface_project_examples():
    x = np.array([0.0, 0.0, 1.0])
    tangent = np.array([1.0, 0.0, 0.0])
    assert np.array_equal(surface_project(S2, tangent, x), tangent)
    assert np.allclose(surface_project(S2, x, x), 0.0)  # pure normal
    out = surface_project(S2, np.array([1.0, 0.0, 1.0]), x)
    assert np.allclose(out, [1.0, 0.0, 0.0])


def test_surface_project_orthogonality_both_signatures():
    rng = np.random.default_rng(3)
    for model in (S2, H2):
        for _ in range(25):
            x = model.random_point(rng)
            c = rng.normal(size=3)
            cbar = surface_project(model, c, x)
            assert abs(model.inner(cbar, model.normal(x))) < 1e-12


def test_lie_derivative_zero_field():
    x = np.array([0.0, 0.0, 1.0])
    rep = lie_derivative_check(S2, np.zeros(3), x)
    assert np.abs(rep.lie_matrix).max() < 1e-14
    assert rep.lambda_fitted == pytest.approx(0.0, abs=1e-14)


def test_lie_derivative_north_pole_example():
    x = np.array([0.0, 0.0, 1.0])
    rep = lie_derivative_check(S2, np.array([0.0, 0.0, 1.0]), x)
    assert rep.lambda_expected == -1.0
    assert rep.lambda_fitted == pytest.approx(-1.0, abs=1e-7)


def test_lie_derivative_tangent_field_is_killing():
    x = np.array([0.0, 0.0, 1.0])
    rep = lie_derivative_check(S2, np.array([0.3, -0.8, 0.0]), x)
    assert np.abs(rep.lie_matrix).max() < 1e-7
    assert rep.killing


def test_lambda_fit_sweep_both_surfaces():
    rng = np.random.default_rng(4)
    for model in (S2, H2):
        for _ in range(20):
            x = model.random_point(rng)
            u = rng.normal(size=3)
            rep = lie_derivative_check(model, u, x)
            assert abs(rep.lambda_fitted - rep.lambda_expected) < 1e-6
            assert rep.conformal_residual < 1e-6


def test_projected_commutator_antisymmetry_and_scaling():
    rng = np.random.default_rng(5)
    x = S2.random_point(rng)
    u = rng.normal(size=3)
    assert np.abs(projected_commutator(S2, u, u, x).vector).max() == 0.0
    v = rng.normal(size=3)
    big = HypersurfaceModel(n=2, R=10.0, eps=1)
    small = projected_commutator(S2, u, v, x)
    scaled = projected_commutator(big, u, v, 10.0 * x)
    # explicit 1/R^2 prefactor: at corresponding points the value of the
    # generator contracted with x picks up 10/100
    assert np.allclose(scaled.vector, small.vector / 10.0, atol=1e-12)
    assert np.allclose(scaled.generator_matrix, small.generator_matrix / 100.0)


def test_commutator_matches_flow_oracle():
    rng = np.random.default_rng(6)
    for model in (S2, H2):
        for _ in range(8):
            x = model.random_point(rng)
            u = rng.normal(size=3)
            v = rng.normal(size=3)
            res = projected_commutator(model, u, v, x)
            oracle = flow_commutator_fd(model, u, v, x)
            assert np.abs(res.vector - oracle).max() < 1e-6
            assert abs(res.tangency) < 1e-12


def test_commutator_is_killing_even_when_inputs_are_not():
    rng = np.random.default_rng(7)
    for model in (S2, H2):
        for _ in range(5):
            x = model.random_point(rng)
            u = rng.normal(size=3)
            v = rng.normal(size=3)
            # the inputs are generically conformal-Killing only
            assert abs(lie_derivative_check(model, u, x).lambda_expected) > 1e-3
            res = projected_commutator(model, u, v, x)
            lie = lie_derivative_of_metric(model, lambda p: res.generator_matrix @ p, x)
            assert np.abs(lie).max() < 1e-6


def test_projection_field_restricts_correctly():
    rng = np.random.default_rng(8)
    u = rng.normal(size=3)
    f = projection_field(S2, u)
    x = S2.random_point(rng)
    assert np.allclose(f(x), surface_project(S2, u, x))


def test_chart_point_stays_on_surface():
    rng = np.random.default_rng(9)
    for model in (S2, H2):
        x = model.random_point(rng)
        basis = model.tangent_basis(x)
        for _ in range(5):
            w = rng.normal(size=2) * 0.2
            p = model.chart_point(x, basis, w)
            assert model.constraint_residual(p) < 1e-12
        g0 = model.chart_metric(x, basis, np.zeros(2))
        assert np.allclose(g0, np.eye(2), atol=1e-12)
