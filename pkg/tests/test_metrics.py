import json

import numpy as np
import pytest

from normalgeo.errors import ConfigError, DomainError, SingularMetricError
from normalgeo.metrics import (
    CATALOG,
    Signature,
    catalog_construct,
    evaluate_metric,
    load_metric,
    product_metric,
)


def embedded_sphere_pullback(R, theta, phi, h=1e-6):
    """Independent oracle: induced metric of the embedded sphere in 3-space."""

    def emb(t, p):
        return R * np.array(
            [np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)]
        )

    jt = (emb(theta + h, phi) - emb(theta - h, phi)) / (2 * h)
    jp = (emb(theta, phi + h) - emb(theta, phi - h)) / (2 * h)
    jac = np.stack([jt, jp], axis=1)
    return jac.T @ jac


def test_euclidean_identity_everywhere():
    m = catalog_construct("euclidean", n=3)
    for p in ([0.0, 0.0, 0.0], [5.0, -2.0, 11.0]):
        assert np.array_equal(m(np.asarray(p)), np.eye(3))


def test_stereographic_at_origin_is_identity():
    m = catalog_construct("constant_curvature_stereographic", K=1.0, n=2)
    assert np.allclose(m(np.zeros(2)), np.eye(2))


def test_sphere_polar_matches_embedded_oracle():
    m = catalog_construct("sphere_polar", R=1.0, n=2)
    g = m(np.array([np.pi / 2, 0.0]))
    assert np.allclose(g, np.diag([1.0, 1.0]), atol=1e-13)
    # (R=2, theta=pi/6): frozen from the embedded-sphere pullback oracle
    m2 = catalog_construct("sphere_polar", R=2.0, n=2)
    g2 = evaluate_metric(m2, np.array([np.pi / 6, 0.0]))
    oracle = embedded_sphere_pullback(2.0, np.pi / 6, 0.0)
    assert np.allclose(g2.matrix, oracle, atol=1e-8)
    assert np.allclose(g2.matrix, np.diag([4.0, 1.0]), atol=1e-12)


def test_evaluate_metric_euclidean():
    m = catalog_construct("euclidean", n=2)
    ev = evaluate_metric(m, np.array([5.0, 7.0]))
    assert np.array_equal(ev.matrix, np.eye(2))
    assert np.array_equal(ev.inverse, np.eye(2))
    assert ev.det == 1.0


def test_evaluate_metric_inverse_and_det_sign():
    m = catalog_construct("minkowski", n=4)
    ev = evaluate_metric(m, np.zeros(4))
    assert np.allclose(ev.matrix @ ev.inverse, np.eye(4), atol=1e-10)
    assert ev.det < 0  # one minus eigenvalue


def test_sphere_polar_axis_is_singular_not_domain():
    m = catalog_construct("sphere_polar", R=1.0, n=2)
    with pytest.raises(SingularMetricError):
        evaluate_metric(m, np.array([0.0, 0.3]))


def test_outside_box_is_domain_error():
    m = catalog_construct("sphere_polar", R=1.0, n=2)
    with pytest.raises(DomainError):
        evaluate_metric(m, np.array([4.0, 0.0]))


def test_unknown_catalog_name_and_bad_params():
    with pytest.raises(ConfigError):
        catalog_construct("torus")
    with pytest.raises(ConfigError):
        catalog_construct("sphere_polar", R=-1.0)
    with pytest.raises(ConfigError):
        catalog_construct("sphere_polar", n=1)
    with pytest.raises(ConfigError):
        catalog_construct("hyperbolic_polar", K=0.5)
    with pytest.raises(ConfigError):
        catalog_construct("euclidean", bogus=3)


def test_stereographic_zero_curvature_equals_euclidean():
    st = catalog_construct("constant_curvature_stereographic", K=0.0, n=3)
    eu = catalog_construct("euclidean", n=3)
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(50, 3))
    assert np.array_equal(st(pts), eu(pts))


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_symmetry_and_signature_sweep(name):
    """Random-domain sweep: symmetry < 1e-13 and declared eigenvalue signs."""
    m = catalog_construct(name)
    rng = np.random.default_rng(11)
    lo = np.where(np.isfinite(m.domain.lo), m.domain.lo, -1.5)
    hi = np.where(np.isfinite(m.domain.hi), m.domain.hi, 1.5)
    pad = 0.1 * (hi - lo)
    count = 0
    while count < 1000:
        p = lo + pad + rng.random(m.dim) * (hi - lo - 2 * pad)
        if not m.domain.contains(p, pad=m.domain.margin):
            continue
        g = m(p)
        assert np.abs(g - g.swapaxes(-1, -2)).max() < 1e-13 * max(1, np.abs(g).max())
        eig = np.linalg.eigvalsh(g)
        assert int(np.sum(eig < 0)) == m.signature.n_minus
        count += 1


def test_load_metric_catalog_passthrough():
    doc = {
        "dim": 2,
        "signature": [1, 1],
        "catalog": {"name": "euclidean", "params": {"n": 2}},
    }
    m = load_metric(doc)
    assert np.array_equal(m(np.array([0.3, 0.4])), np.eye(2))


def test_load_metric_expression_components():
    doc = {
        "dim": 2,
        "signature": [1, 1],
        "components": {"G_11": "exp(2*x)", "G_22": "exp(2*x)", "G_12": "0"},
    }
    m = load_metric(doc)
    g = m(np.array([1.0, 0.0]))
    assert np.allclose(g, np.diag([np.e**2, np.e**2]))
    assert m.expression_backed


def test_load_metric_rejects_asymmetry():
    doc = {
        "dim": 2,
        "signature": [1, 1],
        "components": {"G_11": "1", "G_22": "1", "G_12": "1", "G_21": "0"},
    }
    with pytest.raises(ConfigError, match="asymmetric"):
        load_metric(doc)


def test_load_metric_rejects_unknown_keys_and_bad_signature():
    with pytest.raises(ConfigError, match="unknown config key"):
        load_metric({"dim": 2, "signature": [1, 1], "catalog": {"name": "euclidean"}, "extra": 1})
    with pytest.raises(ConfigError, match="minus-first"):
        load_metric({"dim": 2, "signature": [1, -1], "components": {"G_11": "1", "G_22": "1"}})
    with pytest.raises(ConfigError, match="exactly one"):
        load_metric({"dim": 2, "signature": [1, 1]})


def test_load_metric_parse_error_has_position():
    doc = {"dim": 2, "signature": [1, 1], "components": {"G_11": "sin(x", "G_22": "1"}}
    with pytest.raises(ConfigError, match="column"):
        load_metric(doc)


def test_load_metric_signature_mismatch_detected():
    doc = {
        "dim": 2,
        "signature": [-1, 1],
        "components": {"G_11": "1", "G_22": "1"},
    }
    with pytest.raises(ConfigError, match="signature mismatch"):
        load_metric(doc)


def test_serialized_catalog_round_trip_is_bitwise():
    m = catalog_construct("sphere_polar", R=1.7, n=3)
    m2 = load_metric(json.dumps(m.to_config()))
    rng = np.random.default_rng(3)
    for _ in range(20):
        p = np.array([rng.uniform(0.3, 2.8), rng.uniform(0.3, 2.8), rng.uniform(-3, 3)])
        a = m(p)
        b = m2(p)
        assert np.array_equal(a, b)  # bitwise


def test_product_metric_blocks():
    s = catalog_construct("sphere_polar", R=1.0, n=2)
    prod = product_metric(s, catalog_construct("euclidean", n=2))
    p = np.array([1.1, 0.2, 5.0, -3.0])
    g = prod(p)
    assert np.allclose(g[:2, :2], s(p[:2]))
    assert np.allclose(g[2:, 2:], np.eye(2))
    assert np.allclose(g[:2, 2:], 0)
    assert prod.expression_backed
    # expression table evaluates identically to the block function
    coords = tuple(p)
    for i in range(4):
        for j in range(4):
            assert float(np.asarray(prod.components[i][j](coords))) == pytest.approx(
                g[i, j], abs=1e-14
            )


def test_signature_helpers():
    sig = Signature.from_list([-1, 1, 1])
    assert sig.n_minus == 1 and sig.n_plus == 2
    assert np.array_equal(sig.eta_diagonal(), [-1.0, 1.0, 1.0])
    with pytest.raises(ConfigError):
        Signature.from_list([2, 1])
    with pytest.raises(ConfigError):
        Signature.from_list([])
