"""Scenario runner: named verification suites over a configured metric,
deterministic seeded sampling, machine-readable reports, and convergence
studies.

Reports are canonical JSON: fixed key order, no timestamps (timing is
opt-in and excluded from the canonical byte stream), counter-based Philox
randomness keyed by (seed, check index).  The same scenario and seed give
byte-identical reports for any worker count.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import __version__
from .algebra import (
    casimir,
    casimir_commutes_residual,
    commutation_check,
    curvature_generator_identity,
    jacobi_residual,
    so_generators,
)
from .conformal import (
    angular_momentum,
    cartan_coefficient,
    conformal_identity_residual,
    stereographic_transform,
)
from .curvature import christoffel, curvature_bundle, frame_at_point, ricci_scalar, weyl
from .differentiation import DifferentiationStrategy, default_strategy, metric_partials
from .embedding import (
    HypersurfaceModel,
    ConeEmbedding,
    cone_pullback_check,
    lie_derivative_check,
    lie_derivative_of_metric,
    projected_commutator,
)
from .differentiation import ScalarField
from .errors import ConfigError
from .expansion import (
    expansion_report,
    integrate_frame_ode,
    metric_expansion,
    normal_tensor_d,
)
from .geodesics import (
    GeodesicSettings,
    exp_map,
    integrate_geodesic,
    log_map,
    normal_chart,
    pullback_metric_normal,
)
from .metrics import MetricField, Signature, evaluate_metric, load_metric

SUITES = ("curvature", "normal-chart", "expansion", "conformal", "embed", "algebra", "all")

#: stable check-anchor vocabulary; every report record uses one of these
ANCHORS = frozenset(
    {
        "riemann-symmetry",
        "bianchi-first",
        "metric-compatibility",
        "frame-reconstruction",
        "weyl-traceless",
        "nabla-riemann-constant-curvature",
        "constant-curvature-form",
        "energy-conservation",
        "gauss-lemma",
        "log-exp-roundtrip",
        "normal-form-closed-form",
        "normal-tensor-reconstruction",
        "normal-tensor-cyclic",
        "expansion-order-2",
        "expansion-order-3",
        "expansion-constant-curvature-order-3",
        "frame-ode-coefficient",
        "frame-ode-antisymmetry",
        "cartan-coefficient-branch",
        "conformal-factor-identity",
        "angular-momentum-invariance",
        "stereographic-pullback",
        "hypercone-null",
        "hypercone-pullback",
        "killing-lambda",
        "commutator-tangent",
        "commutator-killing",
        "so-commutation",
        "jacobi-identity",
        "casimir-scalar",
        "curvature-generator-identity",
        "generator-bridge",
    }
)

_SCENARIO_KEYS = {
    "metric",
    "suite",
    "seed",
    "points",
    "radii",
    "tolerance",
    "workers",
    "label",
}
_METRIC_KEYS = {"dim", "signature", "catalog", "components", "domain", "label"}


@dataclass
class Scenario:
    metric: MetricField
    suite: str
    seed: int
    points: Optional[list]
    radii: Optional[list]
    tolerance: Optional[float]
    workers: int
    echo: dict


@dataclass
class CheckRecord:
    name: str
    anchor: str
    computed: float
    expected: float
    tolerance: float
    passed: bool

    def to_dict(self):
        return {
            "name": self.name,
            "anchor": self.anchor,
            "computed": self.computed,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass
class Report:
    scenario_echo: dict
    checks: list
    timing: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_document(self, include_timing: bool = False) -> dict:
        doc = {
            "tool": {"name": "normalgeo", "version": __version__},
            "scenario": self.scenario_echo,
            "checks": [c.to_dict() for c in self.checks],
            "summary": {
                "total": len(self.checks),
                "failed": sum(1 for c in self.checks if not c.passed),
                "pass": self.passed,
            },
        }
        if include_timing and self.timing is not None:
            doc["timing"] = self.timing
        return doc

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_document(include_timing), indent=2) + "\n"


def parse_scenario(doc) -> Scenario:
    """Validate a scenario document (dict or JSON text) against the schema.

    The metric lives either under the ``metric`` key or inline as the
    metric-config keys at top level; unknown keys are rejected.
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scenario is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a JSON object")
    keys = set(doc)
    if "metric" in doc:
        unknown = keys - _SCENARIO_KEYS
        if unknown:
            raise ConfigError(f"unknown scenario key(s): {sorted(unknown)}")
        metric_doc = doc["metric"]
        if isinstance(metric_doc, str):
            with open(metric_doc, "r", encoding="utf-8") as fh:
                metric_doc = json.load(fh)
        metric = load_metric(metric_doc)
    else:
        unknown = keys - _SCENARIO_KEYS - _METRIC_KEYS
        if unknown:
            raise ConfigError(f"unknown scenario key(s): {sorted(unknown)}")
        metric = load_metric({k: doc[k] for k in keys & _METRIC_KEYS})
    suite = doc.get("suite", "all")
    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {SUITES}")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("'seed' must be a nonnegative integer")
    points = doc.get("points")
    if points is not None:
        points = [list(map(float, p)) for p in points]
        for p in points:
            if len(p) != metric.dim:
                raise ConfigError("scenario point dimension mismatch")
    radii = doc.get("radii")
    if radii is not None:
        radii = [float(r) for r in radii]
        if any(r <= 0 for r in radii):
            raise ConfigError("'radii' must be positive")
    tolerance = doc.get("tolerance")
    if tolerance is not None:
        tolerance = float(tolerance)
    workers = int(doc.get("workers", 1))
    if workers < 1:
        raise ConfigError("'workers' must be >= 1")
    echo = json.loads(json.dumps(doc))
    return Scenario(metric, suite, seed, points, radii, tolerance, workers, echo)


def _rng_for(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream: documented Philox keyed by (seed, check index)."""
    return np.random.Generator(np.random.Philox(key=[seed, index]))


def sample_points(m: MetricField, rng, count: int) -> np.ndarray:
    """Deterministic in-domain samples away from box edges and degeneracies."""
    lo = np.asarray(m.domain.lo, dtype=float)
    hi = np.asarray(m.domain.hi, dtype=float)
    lo = np.where(np.isfinite(lo), lo, -1.5)
    hi = np.where(np.isfinite(hi), hi, 1.5)
    pad = np.maximum(10 * m.domain.margin, 0.08 * (hi - lo))
    lo, hi = lo + pad, hi - pad
    out = []
    attempts = 0
    while len(out) < count and attempts < 50 * count:
        attempts += 1
        p = lo + rng.random(m.dim) * (hi - lo)
        if not m.domain.contains(p, pad=m.domain.margin):
            continue
        try:
            evaluate_metric(m, p)
        except Exception:
            continue
        out.append(p)
    if len(out) < count:
        raise ConfigError(f"could not sample {count} valid points in {m.label!r}")
    return np.array(out)


def _catalog_name(m: MetricField) -> Optional[str]:
    if m.config and "catalog" in m.config:
        return m.config["catalog"]["name"]
    return None


def _constant_curvature_k(m: MetricField) -> Optional[float]:
    name = _catalog_name(m)
    params = (m.config or {}).get("catalog", {}).get("params", {})
    if name == "sphere_polar":
        return 1.0 / float(params.get("R", 1.0)) ** 2
    if name == "hyperbolic_polar":
        return float(params.get("K", -1.0))
    if name == "constant_curvature_stereographic":
        return float(params.get("K", 1.0))
    if name in ("euclidean", "minkowski"):
        return 0.0
    return None


def _safe_chart_origin(m: MetricField, rng) -> np.ndarray:
    name = _catalog_name(m)
    if name == "sphere_polar":
        p = np.zeros(m.dim)
        p[:-1] = np.pi / 2
        return p
    if name == "hyperbolic_polar":
        p = np.zeros(m.dim)
        p[0] = 1.0
        p[1:-1] = np.pi / 2
        return p
    return sample_points(m, rng, 1)[0]


# ---------------------------------------------------------------------------
# suite construction
# ---------------------------------------------------------------------------


@dataclass
class _Check:
    name: str
    anchor: str
    run: Callable[[np.random.Generator], tuple]  # -> (computed, expected, tol)


def _cmp_record(check: _Check, rng, override_tol) -> CheckRecord:
    computed, expected, tol = check.run(rng)
    tol = override_tol if override_tol is not None else tol
    passed = abs(computed - expected) <= tol
    return CheckRecord(
        name=check.name,
        anchor=check.anchor,
        computed=float(computed),
        expected=float(expected),
        tolerance=float(tol),
        passed=bool(passed),
    )


def _curvature_checks(sc: Scenario) -> list:
    m = sc.metric
    d = default_strategy(m)
    base_tol = 1e-6 if (d.kind == "dual_forward" or d.order == 4) else 1e-3

    def points_for(rng, count=6):
        if sc.points:
            return np.asarray(sc.points, dtype=float)
        return sample_points(m, rng, count)

    def riemann_sym(rng):
        # residuals are relative to the curvature scale so charts with
        # huge metric components (hyperbolic at large radius) behave
        worst = 0.0
        for p in points_for(rng):
            b = curvature_bundle(m, p, d, with_nabla=False)
            r = b.riemann_lower
            scale = max(1.0, float(np.abs(r).max()))
            worst = max(
                worst,
                float(np.abs(r + np.einsum("mrln->rmln", r)).max()) / scale,
                float(np.abs(r + np.einsum("rmnl->rmln", r)).max()) / scale,
                float(np.abs(r - np.einsum("lnrm->rmln", r)).max()) / scale,
            )
        return worst, 0.0, 10 * base_tol

    def bianchi(rng):
        worst = 0.0
        for p in points_for(rng):
            b = curvature_bundle(m, p, d, with_nabla=False)
            r = b.riemann_lower
            s = r + np.einsum("rlnm->rmln", r) + np.einsum("rnml->rmln", r)
            worst = max(worst, float(np.abs(s).max()) / max(1.0, float(np.abs(r).max())))
        return worst, 0.0, 10 * base_tol

    def compat(rng):
        worst = 0.0
        for p in points_for(rng):
            gamma = christoffel(m, p, d)
            g, dg = metric_partials(m, p, d, 1)[:2]
            rebuilt = np.einsum("rml,rp->mlp", gamma, g) + np.einsum(
                "rmp,lr->mlp", gamma, g
            )
            scale = max(1.0, float(np.abs(dg).max()))
            worst = max(worst, float(np.abs(rebuilt - dg).max()) / scale)
        return worst, 0.0, 10 * base_tol

    def frame_rec(rng):
        worst = 0.0
        eta = m.signature.eta()
        for p in points_for(rng):
            e = frame_at_point(m, p)
            g = evaluate_metric(m, p).matrix
            scale = max(1.0, float(np.abs(g).max()))
            worst = max(worst, float(np.abs(e @ eta @ e.T - g).max()) / scale)
        return worst, 0.0, 1e-12

    checks = [
        _Check("riemann index symmetries", "riemann-symmetry", riemann_sym),
        _Check("first cyclic curvature identity", "bianchi-first", bianchi),
        _Check("metric compatibility of the connection", "metric-compatibility", compat),
        _Check("frame reconstructs the metric", "frame-reconstruction", frame_rec),
    ]

    if m.dim >= 3:

        def weyl_traceless(rng):
            worst = 0.0
            for p in points_for(rng, count=3):
                c = weyl(m, p, d)
                ginv = evaluate_metric(m, p).inverse
                tr = np.einsum("ac,abcd->bd", ginv, c)
                scale = max(1.0, float(np.abs(c).max()))
                worst = max(worst, float(np.abs(tr).max()) / scale)
            return worst, 0.0, 10 * base_tol

        checks.append(_Check("weyl tensor is traceless", "weyl-traceless", weyl_traceless))

    K = _constant_curvature_k(m)
    if K is not None:

        def cc_form(rng):
            worst = 0.0
            for p in points_for(rng, count=3):
                _, _, _, cc = ricci_scalar(m, p, d)
                worst = max(worst, 0.0 if cc else 1.0)
            return worst, 0.0, 0.5

        def nabla_small(rng):
            worst = 0.0
            for p in points_for(rng, count=3):
                b = curvature_bundle(m, p, d, with_nabla=True)
                scale = max(1.0, float(np.abs(b.riemann_lower).max()))
                worst = max(worst, float(np.abs(b.nabla_riemann).max()) / scale)
            return worst, 0.0, 1e-5

        checks.append(_Check("constant-curvature form of the tensor", "constant-curvature-form", cc_form))
        checks.append(
            _Check("covariant curvature derivative vanishes", "nabla-riemann-constant-curvature", nabla_small)
        )
    return checks


def _normal_chart_checks(sc: Scenario) -> list:
    m = sc.metric
    checks = []

    def chart_for(rng):
        return normal_chart(m, _safe_chart_origin(m, rng))

    def safe_direction(chart, rng):
        # unit frame direction biased along the last axis (periodic angle
        # for the polar catalog charts), avoiding pole-bound geodesics
        name = _catalog_name(m)
        n = m.dim
        if name in ("sphere_polar", "hyperbolic_polar"):
            v = np.zeros(n)
            v[-1] = 1.0
            return v
        v = rng.normal(size=n)
        eta = chart.eta
        q = float(v @ eta @ v)
        if abs(q) < 1e-6:
            v[0] += 1.0
            q = float(v @ eta @ v)
        return v / math.sqrt(abs(q))

    def energy(rng):
        chart = chart_for(rng)
        v = safe_direction(chart, rng)
        sol = integrate_geodesic(m, chart.origin, chart.vectors @ v, 2.0)
        return sol.energy_drift, 0.0, 1e-8

    def gauss(rng):
        chart = chart_for(rng)
        worst = 0.0
        eta = chart.eta
        for _ in range(4):
            v = 0.4 * safe_direction(chart, rng) * (0.5 + rng.random())
            g = pullback_metric_normal(chart, v)
            worst = max(worst, float(np.abs(g @ v - eta @ v).max()))
        return worst, 0.0, 1e-6

    def logexp(rng):
        chart = chart_for(rng)
        worst = 0.0
        for _ in range(3):
            v = 0.35 * safe_direction(chart, rng) * (0.4 + rng.random())
            q = exp_map(chart, v)
            w = log_map(chart, q)
            worst = max(worst, float(np.abs(exp_map(chart, w) - q).max()))
        return worst, 0.0, 1e-9

    checks.append(_Check("geodesic energy conservation", "energy-conservation", energy))
    checks.append(_Check("radial rows of the pullback metric", "gauss-lemma", gauss))
    checks.append(_Check("log then exp returns the point", "log-exp-roundtrip", logexp))

    K = _constant_curvature_k(m)
    if K is not None and K != 0.0:

        def closed_form(rng):
            chart = chart_for(rng)
            v_dir = safe_direction(chart, rng)
            radii = sc.radii or [0.1, 0.5, 1.0]
            worst = 0.0
            for r in radii:
                g = pullback_metric_normal(chart, r * v_dir)
                c = cartan_coefficient(K, r)
                expected = (1.0 - c * r * r) * np.eye(m.dim) + c * np.outer(
                    r * v_dir, r * v_dir
                )
                worst = max(worst, float(np.abs(g - expected).max()))
            return worst, 0.0, 1e-6

        checks.append(
            _Check("pullback matches the constant-curvature closed form", "normal-form-closed-form", closed_form)
        )
    return checks


def _expansion_checks(sc: Scenario) -> list:
    m = sc.metric
    d = default_strategy(m)
    checks = []

    def bundle_for(rng):
        origin = _safe_chart_origin(m, rng)
        return normal_chart(m, origin), curvature_bundle(m, origin, d)

    def d_reconstruction(rng):
        _, b = bundle_for(rng)
        dt = normal_tensor_d(b)
        return dt.reconstruction_residual(b.riemann_up), 0.0, 1e-10

    def d_cyclic(rng):
        _, b = bundle_for(rng)
        dt = normal_tensor_d(b)
        return max(dt.cyclic_residual(), dt.pair_symmetry_residual()), 0.0, 1e-12

    def order2_slope(rng):
        chart, b = bundle_for(rng)
        direction = _expansion_direction(m, chart, rng)
        radii = np.array(sc.radii or [0.4, 0.2, 0.1, 0.05])
        rep = expansion_report(chart, b, direction, radii, 2)
        if rep.observed_slope is None:
            # residuals at the floating-point floor (flat input): the order
            # is indeterminate and there is nothing to fail
            ok = float(np.max(rep.residuals)) < 1e-10
            return (4.0 if ok else 0.0), 4.0, 0.3
        return rep.observed_slope, 4.0, 0.3

    checks.append(_Check("normal tensor rebuilds curvature", "normal-tensor-reconstruction", d_reconstruction))
    checks.append(_Check("normal tensor cyclic sum vanishes", "normal-tensor-cyclic", d_cyclic))
    checks.append(_Check("order-2 truncation error scales as r^4", "expansion-order-2", order2_slope))

    K = _constant_curvature_k(m)
    if K is not None:

        def order3_vanishes(rng):
            chart, b = bundle_for(rng)
            direction = _expansion_direction(m, chart, rng)
            v = 0.3 * direction
            gap = np.abs(metric_expansion(b, v, 3) - metric_expansion(b, v, 2)).max()
            return float(gap), 0.0, 1e-10

        checks.append(
            _Check("third-order term vanishes at constant curvature", "expansion-constant-curvature-order-3", order3_vanishes)
        )
    else:

        def order3_slope(rng):
            chart, b = bundle_for(rng)
            direction = _expansion_direction(m, chart, rng)
            radii = np.array(sc.radii or [0.4, 0.2, 0.1, 0.05])
            rep = expansion_report(chart, b, direction, radii, 3)
            if rep.observed_slope is None:
                ok = float(np.max(rep.residuals)) < 1e-10
                return (5.0 if ok else 0.0), 5.0, 0.4
            return rep.observed_slope, 5.0, 0.4

        checks.append(_Check("order-3 truncation error scales as r^5", "expansion-order-3", order3_slope))

    def frame_ode_check(rng):
        k_val = K if (K is not None and K != 0.0) else 1.0
        worst = 0.0
        for r in (0.25, 0.5, 1.0):
            sol = integrate_frame_ode(k_val, max(2, min(m.dim, 3)), r, steps=10000)
            worst = max(worst, abs(sol.measured_coefficient() - cartan_coefficient(k_val, r)))
        return worst, 0.0, 1e-6

    def frame_ode_antisym(rng):
        k_val = K if (K is not None and K != 0.0) else -1.0
        sol = integrate_frame_ode(k_val, max(2, min(m.dim, 3)), 0.8, steps=4000)
        return sol.antisymmetry_residual(), 0.0, 1e-10

    checks.append(_Check("frame system reproduces the closed coefficient", "frame-ode-coefficient", frame_ode_check))
    checks.append(_Check("frame coefficients stay antisymmetric", "frame-ode-antisymmetry", frame_ode_antisym))
    return checks


def _expansion_direction(m, chart, rng):
    name = _catalog_name(m)
    n = m.dim
    if name in ("sphere_polar", "hyperbolic_polar"):
        v = np.zeros(n)
        v[-1] = 1.0
        return v
    if m.signature.n_minus > 0:
        v = np.zeros(n)
        v[-1] = 1.0
        return v
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)


def _conformal_checks(sc: Scenario) -> list:
    m = sc.metric
    K = _constant_curvature_k(m)
    k_val = K if (K is not None and K != 0.0) else 1.0
    checks = []

    def branch(rng):
        worst = 0.0
        for k in (k_val, -k_val):
            cut = 5e-2 / math.sqrt(abs(k))
            worst = max(
                worst,
                abs(
                    cartan_coefficient(k, cut * (1 - 1e-9))
                    - cartan_coefficient(k, cut * (1 + 1e-9))
                ),
            )
        return worst, 0.0, 1e-12

    def factor_identity(rng):
        worst = 0.0
        n = max(2, min(m.dim, 4))
        for _ in range(10):
            z = rng.normal(size=n)
            z *= rng.uniform(0.1, 0.9) / np.linalg.norm(z)
            zd = rng.normal(size=n)
            worst = max(worst, conformal_identity_residual(k_val, z, zd))
        return worst, 0.0, 1e-8

    def stereo(rng):
        worst = 0.0
        n = max(2, min(m.dim, 4))
        for k in (abs(k_val), -abs(k_val)):
            for r in np.linspace(0.1, 1.2, 6):
                for _ in range(3):
                    v = rng.normal(size=n)
                    res = stereographic_transform(k, float(r), v)
                    worst = max(worst, res.pullback_residual)
        return worst, 0.0, 1e-8

    def rotation_invariance(rng):
        n = max(2, min(m.dim, 4))
        z = rng.normal(size=n)
        zd = rng.normal(size=n)
        base = angular_momentum(z, zd).sum_squares()
        worst = 0.0
        for _ in range(10):
            a = rng.normal(size=(n, n))
            qmat, _ = np.linalg.qr(a)
            rotated = angular_momentum(qmat @ z, qmat @ zd).sum_squares()
            worst = max(worst, abs(rotated - base))
        return worst, 0.0, 1e-12

    checks.append(_Check("series and direct coefficient branches meet", "cartan-coefficient-branch", branch))
    checks.append(_Check("flattening factor matches the line element", "conformal-factor-identity", factor_identity))
    checks.append(_Check("stereographic map reproduces the normal form", "stereographic-pullback", stereo))
    checks.append(_Check("plane momentum square is rotation invariant", "angular-momentum-invariance", rotation_invariance))
    return checks


def _embed_checks(sc: Scenario) -> list:
    m = sc.metric
    checks = []
    sigma_fields = [
        ("0.2", "constant exponent"),
        ("0.3*sin(x1)", "single wave"),
        ("0.25*sin(x1+0.7*x2)", "mixed wave"),
    ]

    def null_check(rng):
        worst = 0.0
        for n_minus in (0, 1):
            sig = Signature(n_minus, max(2, m.dim) - n_minus)
            emb = ConeEmbedding(ScalarField("0.3*sin(x1)", sig.dim), sig)
            pts = rng.normal(size=(2500, sig.dim))
            y = emb.map(pts)
            res = np.abs(
                np.einsum("ki,i,ki->k", y, emb.eta_bold_diagonal, y)
            ).max()
            worst = max(worst, float(res))
        return worst, 0.0, 1e-12

    def pullback(rng):
        worst = 0.0
        for n_minus in (0, 1):
            sig = Signature(n_minus, max(2, m.dim) - n_minus)
            for src, _ in sigma_fields:
                f = ScalarField(src, sig.dim)
                for _ in range(3):
                    z = rng.normal(size=sig.dim)
                    worst = max(worst, cone_pullback_check(f, z, sig))
        return worst, 0.0, 1e-7

    def killing_lambda(rng):
        worst = 0.0
        for eps in (1, -1):
            model = HypersurfaceModel(n=2, R=1.0, eps=eps)
            for _ in range(12):
                x = model.random_point(rng)
                u = rng.normal(size=model.ambient_dim)
                rep = lie_derivative_check(model, u, x)
                worst = max(worst, abs(rep.lambda_fitted - rep.lambda_expected))
        return worst, 0.0, 1e-6

    def commutator_tangent(rng):
        worst = 0.0
        for eps in (1, -1):
            model = HypersurfaceModel(n=2, R=1.0, eps=eps)
            for _ in range(12):
                x = model.random_point(rng)
                u = rng.normal(size=model.ambient_dim)
                v = rng.normal(size=model.ambient_dim)
                res = projected_commutator(model, u, v, x)
                worst = max(worst, abs(res.tangency))
        return worst, 0.0, 1e-12

    def commutator_killing(rng):
        worst = 0.0
        for eps in (1, -1):
            model = HypersurfaceModel(n=2, R=1.0, eps=eps)
            for _ in range(6):
                x = model.random_point(rng)
                u = rng.normal(size=model.ambient_dim)
                v = rng.normal(size=model.ambient_dim)
                res = projected_commutator(model, u, v, x)
                lie = lie_derivative_of_metric(
                    model, lambda p: res.generator_matrix @ p, x
                )
                worst = max(worst, float(np.abs(lie).max()))
        return worst, 0.0, 1e-6

    checks.append(_Check("cone image sits on the null quadric", "hypercone-null", null_check))
    checks.append(_Check("cone pullback equals the conformal metric", "hypercone-pullback", pullback))
    checks.append(_Check("characteristic function of projections", "killing-lambda", killing_lambda))
    checks.append(_Check("projected commutators stay tangent", "commutator-tangent", commutator_tangent))
    checks.append(_Check("projected commutators are isometries", "commutator-killing", commutator_killing))
    return checks


def _algebra_checks(sc: Scenario) -> list:
    checks = []
    reps = [(0, 3), (0, 4), (1, 3)]

    def commutation(rng):
        worst = 0.0
        for p, q in reps:
            worst = max(worst, commutation_check(so_generators(p, q)))
        return worst, 0.0, 0.0

    def jacobi(rng):
        worst = 0.0
        for p, q in reps:
            worst = max(worst, jacobi_residual(so_generators(p, q)))
        return worst, 0.0, 0.0

    def casimir_check(rng):
        g = so_generators(0, 3)
        c2, lam = casimir(g)
        resid = float(np.abs(c2 - 2.0 * np.eye(3)).max())
        resid = max(resid, casimir_commutes_residual(g))
        return resid, 0.0, 1e-12

    def curv_identity(rng):
        worst = 0.0
        for p, q in reps:
            for radius in (1.0, 2.0):
                worst = max(worst, curvature_generator_identity(radius, so_generators(p, q)))
        return worst, 0.0, 0.0

    def bridge(rng):
        worst = 0.0
        model = HypersurfaceModel(n=2, R=1.0, eps=1)
        g = so_generators(0, 3)
        for a in range(3):
            for b in range(a + 1, 3):
                res = projected_commutator(model, np.eye(3)[a], np.eye(3)[b], model.random_point(rng))
                rebuilt = -1j * model.R**2 / model.eps * res.generator_matrix
                worst = max(worst, float(np.abs(rebuilt - g.matrix(a, b)).max()))
        return worst, 0.0, 1e-6

    checks.append(_Check("rotation algebra commutation relations", "so-commutation", commutation))
    checks.append(_Check("jacobi identity of the generators", "jacobi-identity", jacobi))
    checks.append(_Check("quadratic invariant is twice the identity", "casimir-scalar", casimir_check))
    checks.append(_Check("curvature-built generators match the pattern", "curvature-generator-identity", curv_identity))
    checks.append(_Check("field commutators match the matrix algebra", "generator-bridge", bridge))
    return checks


_SUITE_BUILDERS = {
    "curvature": _curvature_checks,
    "normal-chart": _normal_chart_checks,
    "expansion": _expansion_checks,
    "conformal": _conformal_checks,
    "embed": _embed_checks,
    "algebra": _algebra_checks,
}


def build_checks(sc: Scenario) -> list:
    if sc.suite == "all":
        out = []
        for name in ("curvature", "normal-chart", "expansion", "conformal", "embed", "algebra"):
            out.extend(_SUITE_BUILDERS[name](sc))
        return out
    return _SUITE_BUILDERS[sc.suite](sc)


def run_scenario(doc, workers: Optional[int] = None) -> Report:
    """Execute the scenario's suite; deterministic for a fixed seed.

    ``workers`` overrides the scenario's worker count.  Records are merged
    in declaration order, and each check draws from its own counter-based
    stream, so the report bytes do not depend on the worker count.
    """
    sc = parse_scenario(doc)
    if workers is not None:
        sc.workers = max(1, int(workers))
    checks = build_checks(sc)
    t0 = time.perf_counter()

    def run_one(idx_check):
        idx, check = idx_check
        if check.anchor not in ANCHORS:
            raise ConfigError(f"check anchor {check.anchor!r} not in the vocabulary")
        return _cmp_record(check, _rng_for(sc.seed, idx), sc.tolerance)

    items = list(enumerate(checks))
    if sc.workers == 1:
        records = [run_one(it) for it in items]
    else:
        with ThreadPoolExecutor(max_workers=sc.workers) as pool:
            records = list(pool.map(run_one, items))
    timing = {"seconds": time.perf_counter() - t0}
    return Report(scenario_echo=sc.echo, checks=records, timing=timing)


# ---------------------------------------------------------------------------
# convergence studies
# ---------------------------------------------------------------------------

STUDY_PARAMETERS = ("fd_step", "ode_steps", "radius")


@dataclass
class ConvergenceRow:
    level: int
    value: float
    residual: float
    observed_order: Optional[float]


def convergence_study(doc, parameter: str, levels: int) -> list:
    """Halving/doubling study of one numerical control parameter.

    Residual underflow (< 1e-14) marks the order as indeterminate for that
    transition.  Returns ConvergenceRow entries, one per level.
    """
    if parameter not in STUDY_PARAMETERS:
        raise ConfigError(f"parameter must be one of {STUDY_PARAMETERS}")
    if levels < 3:
        raise ConfigError("a convergence study needs at least 3 levels")
    sc = parse_scenario(doc)
    rng = _rng_for(sc.seed, 9999)
    residuals = []
    values = []
    if parameter == "ode_steps":
        sphere = _study_metric(sc)
        chart = normal_chart(sphere, _safe_chart_origin(sphere, rng))
        # tilted direction: the geodesic must curve in coordinates, else
        # the stepping error sits at the floating-point floor
        direction = np.zeros(sphere.dim)
        direction[0] = math.sin(0.7)
        direction[-1] = math.cos(0.7)
        t_end = 1.2
        exact = None
        for lvl in range(levels):
            steps = 100 * 2**lvl
            sol = integrate_geodesic(
                sphere,
                chart.origin,
                chart.vectors @ direction,
                t_end,
                GeodesicSettings(steps_per_unit=max(1, round(steps / t_end))),
            )
            values.append(float(steps))
            residuals.append(sol.endpoint.copy())
        ref = integrate_geodesic(
            sphere,
            chart.origin,
            chart.vectors @ direction,
            t_end,
            GeodesicSettings(steps_per_unit=max(1, round(100 * 2 ** (levels + 1) / t_end))),
        ).endpoint
        residuals = [float(np.abs(e - ref).max()) for e in residuals]
    elif parameter == "radius":
        m = sc.metric
        chart = normal_chart(m, _safe_chart_origin(m, rng))
        bundle = curvature_bundle(m, chart.origin, default_strategy(m))
        direction = _expansion_direction(m, chart, rng)
        r0 = (sc.radii or [0.4])[0]
        for lvl in range(levels):
            r = r0 / 2**lvl
            rep = expansion_report(chart, bundle, direction, np.array([r]), 2)
            values.append(r)
            residuals.append(float(rep.residuals[0]))
    else:  # fd_step
        m = sc.metric
        if sc.points:
            p = np.asarray(sc.points[0], dtype=float)
        else:
            # deterministic offset from the safe origin; symmetry points
            # (equators) have vanishing odd derivatives and hide the order
            p = _safe_chart_origin(m, rng)
            trial = p + 0.45 * np.cos(np.arange(m.dim) + 1.0)
            if m.domain.contains(trial, pad=10 * m.domain.margin):
                p = trial
        if m.expression_backed:
            ref = christoffel(m, p, DifferentiationStrategy(kind="dual_forward"))
        else:
            ref = christoffel(
                m, p, DifferentiationStrategy(kind="central_fd", order=4, step=1e-4)
            )
        h0 = 0.04
        for lvl in range(levels):
            h = h0 / 2**lvl
            gamma = christoffel(
                m, p, DifferentiationStrategy(kind="central_fd", order=4, step=h)
            )
            values.append(h)
            residuals.append(float(np.abs(gamma - ref).max()))
    rows = []
    for lvl in range(levels):
        order = None
        if lvl > 0 and residuals[lvl] > 1e-14 and residuals[lvl - 1] > 1e-14:
            order = math.log2(residuals[lvl - 1] / residuals[lvl])
        rows.append(ConvergenceRow(lvl, values[lvl], residuals[lvl], order))
    return rows


def _study_metric(sc: Scenario) -> MetricField:
    if _catalog_name(sc.metric) in ("sphere_polar", "hyperbolic_polar"):
        return sc.metric
    from .metrics import catalog_construct

    return catalog_construct("sphere_polar", R=1.0, n=2)


def convergence_csv(rows) -> str:
    lines = ["level,value,residual,observed_order"]
    for r in rows:
        order = "" if r.observed_order is None else repr(r.observed_order)
        lines.append(f"{r.level},{r.value!r},{r.residual!r},{order}")
    return "\n".join(lines) + "\n"
