import numpy as np
import pytest

from normalgeo.algebra import (
    GeneratorSet,
    casimir,
    casimir_commutes_residual,
    commutation_check,
    curvature_generator_identity,
    eta_antisymmetry_residual,
    jacobi_residual,
    so_generators,
)
from normalgeo.embedding import HypersurfaceModel, projected_commutator
from normalgeo.errors import ConfigError


def test_so2_single_generator_entries():
    g = so_generators(0, 2)
    L = g.matrix(0, 1)
    assert L[0, 1] == 1j and L[1, 0] == -1j
    assert L[0, 0] == 0 and L[1, 1] == 0


def test_repeated_plane_index_is_zero():
    g = so_generators(0, 3)
    for a in range(3):
        assert np.abs(g.generators[a, a]).max() == 0.0
    assert g.plane_antisymmetry_residual() == 0.0


def test_so3_explicit_commutator():
    """[L_12, L_23] from matrix multiplication equals the displayed algebra."""
    g = so_generators(0, 3)
    eta = g.eta_diagonal
    lhs = g.matrix(0, 1) @ g.matrix(1, 2) - g.matrix(1, 2) @ g.matrix(0, 1)
    rhs = -1j * eta[1] * g.matrix(2, 0)  # only eta_BC = eta_22 survives
    assert np.abs(lhs - rhs).max() == 0.0


@pytest.mark.parametrize("p,q", [(0, 3), (0, 4), (1, 3)])
def test_commutation_relations_exact(p, q):
    assert commutation_check(so_generators(p, q)) == 0.0


def test_commutation_detector_fires_on_corruption():
    g = so_generators(0, 3)
    gens = g.generators.copy()
    gens[0, 1, 0, 0] += 1e-3
    corrupted = GeneratorSet(p=0, q=3, generators=gens)
    assert commutation_check(corrupted) >= 1e-3


@pytest.mark.parametrize(
    "p,q", [(0, 2), (0, 3), (1, 2), (0, 4), (1, 3), (2, 2), (0, 5), (1, 4), (2, 3)]
)
def test_jacobi_identity_all_signatures_up_to_five(p, q):
    assert jacobi_residual(so_generators(p, q)) == 0.0


@pytest.mark.parametrize("p,q", [(0, 3), (1, 3), (2, 2)])
def test_eta_antisymmetry(p, q):
    assert eta_antisymmetry_residual(so_generators(p, q)) == 0.0


def test_casimir_trivial_representation():
    zeros = GeneratorSet(p=0, q=2, generators=np.zeros((2, 2, 2, 2), dtype=complex))
    c2, lam = casimir(zeros)
    assert np.abs(c2).max() == 0.0 and lam == 0.0


def test_casimir_so3_is_two():
    g = so_generators(0, 3)
    c2, lam = casimir(g)
    assert lam == 2.0  # matches l (l + 1) with l = 1
    assert np.abs(c2 - 2.0 * np.eye(3)).max() == 0.0
    assert casimir_commutes_residual(g) == 0.0


def test_casimir_so2_is_identity():
    c2, lam = casimir(so_generators(0, 2))
    assert lam == 1.0
    assert np.abs(c2 - np.eye(2)).max() == 0.0


def test_casimir_lorentz_scalar_and_commuting():
    g = so_generators(1, 3)
    c2, lam = casimir(g)
    assert lam is not None
    assert casimir_commutes_residual(g) == 0.0


def test_curvature_generator_identity_zero_and_scaling():
    g = so_generators(0, 3)
    assert curvature_generator_identity(1.0, g) == 0.0
    assert curvature_generator_identity(2.0, g) == 0.0  # R^2 cancels
    g13 = so_generators(1, 3)
    assert curvature_generator_identity(1.5, g13) == 0.0


def test_curvature_generator_identity_detects_perturbation():
    g = so_generators(0, 3)
    e = np.eye(3)
    curv = np.einsum("ad,bc->abcd", e, e) - np.einsum("ac,bd->abcd", e, e)
    curv[0, 1, 0, 1] += 1e-3
    resid = curvature_generator_identity(1.0, g, curv)
    assert resid == pytest.approx(1e-3, rel=1e-9)


def test_curvature_generator_identity_validates_radius():
    with pytest.raises(ConfigError):
        curvature_generator_identity(0.0, so_generators(0, 3))


def test_so_generators_validation():
    with pytest.raises(ConfigError):
        so_generators(0, 1)
    with pytest.raises(ConfigError):
        so_generators(-1, 3)


def test_bridge_field_commutators_match_matrix_generators():
    """Ambient matrices of projected-field commutators reproduce the
    generator matrices after the (i, R^2, eps) normalization."""
    rng = np.random.default_rng(11)
    for eps, (p, q) in (((1), (0, 3)), ((-1), (1, 2))):
        model = HypersurfaceModel(n=2, R=1.3, eps=eps)
        g = so_generators(p, q)
        for a in range(3):
            for b in range(a + 1, 3):
                x = model.random_point(rng)
                res = projected_commutator(model, np.eye(3)[a], np.eye(3)[b], x)
                rebuilt = -1j * (model.R**2 / model.eps) * res.generator_matrix
                assert np.abs(rebuilt - g.matrix(a, b)).max() < 1e-12
