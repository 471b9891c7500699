"""Metric fields: built-in catalog, config loader, pointwise evaluation.

A :class:`MetricField` is a smooth map from chart coordinates to a
symmetric matrix of fixed signature.  Catalog entries double as expression
tables so that the forward-AD differentiation strategy and config
round-trips work for them, and carry a kernel id so the compiled geodesic
integrators can evaluate them without Python callbacks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DomainError, SingularMetricError
from .expressions import Expression, ExpressionError

#: chart-degeneracy margin used by stencil/geodesic operations (see CONVENTIONS.md)
DEGENERACY_MARGIN = 1e-6

# kernel ids understood by _kernels.metric_eval
KIND_EUCLIDEAN = 0
KIND_MINKOWSKI = 1
KIND_SPHERE_POLAR = 2
KIND_HYPERBOLIC_POLAR = 3
KIND_STEREOGRAPHIC = 4
KIND_CONFORMAL_GENERIC = 5


@dataclass(frozen=True)
class Signature:
    """Counts of -1/+1 metric eigenvalues; minus entries always come first."""

    n_minus: int
    n_plus: int

    def __post_init__(self):
        if self.n_minus < 0 or self.n_plus < 0 or self.dim < 1:
            raise ConfigError("signature needs n_minus + n_plus >= 1, both nonnegative")

    @property
    def dim(self) -> int:
        return self.n_minus + self.n_plus

    def eta_diagonal(self) -> np.ndarray:
        return np.concatenate([-np.ones(self.n_minus), np.ones(self.n_plus)])

    def eta(self) -> np.ndarray:
        return np.diag(self.eta_diagonal())

    @staticmethod
    def from_list(entries) -> "Signature":
        entries = list(entries)
        if not entries or any(e not in (-1, 1) for e in entries):
            raise ConfigError("signature must be a nonempty list of -1/+1 entries")
        n_minus = sum(1 for e in entries if e == -1)
        if entries != [-1] * n_minus + [1] * (len(entries) - n_minus):
            raise ConfigError("signature ordering is minus-first, e.g. [-1, 1, 1]")
        return Signature(n_minus, len(entries) - n_minus)

    def to_list(self):
        return [-1] * self.n_minus + [1] * self.n_plus


@dataclass(frozen=True)
class Domain:
    """Box with optional predicate; margin pads chart-degenerate edges."""

    lo: tuple
    hi: tuple
    margin: float = DEGENERACY_MARGIN
    predicate: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def contains(self, p, pad=0.0) -> bool:
        p = np.asarray(p, dtype=float)
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        if np.any(p < lo + pad) or np.any(p > hi - pad):
            return False
        if self.predicate is not None:
            return bool(np.all(self.predicate(p)))
        return True

    @staticmethod
    def unbounded(dim) -> "Domain":
        return Domain(lo=(-np.inf,) * dim, hi=(np.inf,) * dim, margin=0.0)


@dataclass
class MetricField:
    """Map point -> symmetric matrix with fixed signature on a chart domain.

    ``func`` is vectorized: it accepts arrays of shape (..., dim) and
    returns (..., dim, dim).  Evaluation is pure; instances may be shared
    across threads.
    """

    dim: int
    signature: Signature
    func: Callable[[np.ndarray], np.ndarray]
    domain: Domain
    label: str = ""
    components: Optional[list] = None  # dim x dim nested list of Expression or None
    kind: Optional[int] = None
    params: Optional[np.ndarray] = None
    config: Optional[dict] = field(default=None, repr=False)

    def __call__(self, points):
        return self.func(np.asarray(points, dtype=float))

    @property
    def expression_backed(self) -> bool:
        return self.components is not None

    def component_jets(self, point, degree):
        """Evaluate every component as a jet at ``point`` (expression-backed only)."""
        from .jets import Jet

        if not self.expression_backed:
            raise ConfigError(f"metric {self.label!r} is not expression-backed")
        coords = Jet.variables(np.asarray(point, dtype=float), degree)
        out = np.empty((self.dim, self.dim), dtype=object)
        for i in range(self.dim):
            for j in range(self.dim):
                expr = self.components[i][j]
                if expr is None:
                    out[i, j] = Jet.constant(0.0, self.dim, degree)
                else:
                    value = expr(coords)
                    if not isinstance(value, Jet):
                        value = Jet.constant(float(value), self.dim, degree)
                    out[i, j] = value
        return out

    def to_config(self) -> dict:
        if self.config is None:
            raise ConfigError(f"metric {self.label!r} has no serialized form")
        return json.loads(json.dumps(self.config))


@dataclass(frozen=True)
class EvaluatedMetric:
    matrix: np.ndarray
    inverse: np.ndarray
    det: float


def evaluate_metric(m: MetricField, p) -> EvaluatedMetric:
    """Evaluate metric, inverse and determinant with degeneracy guards.

    The closed domain box is enforced here; the chart-degeneracy margin is
    a concern of stencil/geodesic code, so a point sitting exactly on a
    polar axis reports a singular matrix rather than a domain error.
    """
    p = np.asarray(p, dtype=float)
    if p.shape != (m.dim,):
        raise DomainError(f"point shape {p.shape} does not match dim {m.dim}")
    if not np.all(np.isfinite(p)) or not m.domain.contains(p):
        raise DomainError(f"point {p.tolist()} outside domain of {m.label!r}")
    g = np.asarray(m.func(p), dtype=float)
    if not np.all(np.isfinite(g)):
        raise SingularMetricError(f"metric {m.label!r} non-finite at {p.tolist()}")
    g = 0.5 * (g + g.T)
    det = float(np.linalg.det(g))
    scale = max(1.0, float(np.abs(g).max())) ** m.dim
    if abs(det) < 1e-14 * scale:
        raise SingularMetricError(
            f"metric {m.label!r} singular at {p.tolist()} (|det|={abs(det):.3e})"
        )
    expected_sign = (-1.0) ** m.signature.n_minus
    if math.copysign(1.0, det) != expected_sign:
        raise SingularMetricError(
            f"metric {m.label!r} determinant sign {math.copysign(1.0, det)} "
            f"contradicts signature at {p.tolist()}"
        )
    return EvaluatedMetric(matrix=g, inverse=np.linalg.inv(g), det=det)


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    parameters: dict  # name -> (default, description)
    constructor: Callable[..., MetricField]
    description: str


def _float_expr(x: float) -> str:
    return repr(float(x))


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _euclidean(n=3):
    n = int(n)
    _require(n >= 1, "euclidean needs n >= 1")
    eye = np.eye(n)

    def func(pts):
        pts = np.asarray(pts, dtype=float)
        return np.broadcast_to(eye, pts.shape[:-1] + (n, n)).copy()

    comps = [[Expression("1" if i == j else "0", n) for j in range(n)] for i in range(n)]
    return MetricField(
        dim=n,
        signature=Signature(0, n),
        func=func,
        domain=Domain.unbounded(n),
        label=f"euclidean(n={n})",
        components=comps,
        kind=KIND_EUCLIDEAN,
        params=np.zeros(1),
    )


def _minkowski(n=4):
    n = int(n)
    _require(n >= 2, "minkowski needs n >= 2")
    eta = np.diag([-1.0] + [1.0] * (n - 1))

    def func(pts):
        pts = np.asarray(pts, dtype=float)
        return np.broadcast_to(eta, pts.shape[:-1] + (n, n)).copy()

    comps = [
        [Expression("-1" if (i == j == 0) else ("1" if i == j else "0"), n) for j in range(n)]
        for i in range(n)
    ]
    return MetricField(
        dim=n,
        signature=Signature(1, n - 1),
        func=func,
        domain=Domain.unbounded(n),
        label=f"minkowski(n={n})",
        components=comps,
        kind=KIND_MINKOWSKI,
        params=np.zeros(1),
    )


def _polar_factors(n, radial_hyperbolic):
    """Diagonal entries of R^2 * diag(1, F(x1)^2, F(x1)^2 sin(x2)^2, ...)."""
    first = "sinh" if radial_hyperbolic else "sin"
    exprs = ["1"]
    for k in range(1, n):
        terms = [f"{first}(x1)^2"] + [f"sin(x{j})^2" for j in range(2, k + 1)]
        exprs.append("*".join(terms))
    return exprs


def _sphere_polar(R=1.0, n=2):
    R, n = float(R), int(n)
    _require(R > 0, "sphere_polar needs R > 0")
    _require(n >= 2, "sphere_polar needs n >= 2")

    def func(pts):
        pts = np.asarray(pts, dtype=float)
        diag = np.empty(pts.shape[:-1] + (n,))
        diag[..., 0] = R * R
        acc = np.ones(pts.shape[:-1])
        for k in range(1, n):
            acc = acc * np.sin(pts[..., k - 1]) ** 2
            diag[..., k] = R * R * acc
        out = np.zeros(pts.shape[:-1] + (n, n))
        idx = np.arange(n)
        out[..., idx, idx] = diag
        return out

    r2 = _float_expr(R * R)
    comps = [[None] * n for _ in range(n)]
    for k, expr in enumerate(_polar_factors(n, radial_hyperbolic=False)):
        comps[k][k] = Expression(f"{r2}*{expr}" if expr != "1" else r2, n)
    for i in range(n):
        for j in range(n):
            if comps[i][j] is None:
                comps[i][j] = Expression("0", n)
    lo = [0.0] * n
    hi = [np.pi] * n
    lo[-1], hi[-1] = -4 * np.pi, 4 * np.pi
    return MetricField(
        dim=n,
        signature=Signature(0, n),
        func=func,
        domain=Domain(tuple(lo), tuple(hi)),
        label=f"sphere_polar(R={R}, n={n})",
        components=comps,
        kind=KIND_SPHERE_POLAR,
        params=np.array([R]),
    )


def _hyperbolic_polar(K=-1.0, n=2):
    K, n = float(K), int(n)
    _require(K < 0, "hyperbolic_polar needs K < 0")
    _require(n >= 2, "hyperbolic_polar needs n >= 2")
    R = 1.0 / math.sqrt(-K)

    def func(pts):
        pts = np.asarray(pts, dtype=float)
        diag = np.empty(pts.shape[:-1] + (n,))
        diag[..., 0] = R * R
        acc = np.sinh(pts[..., 0]) ** 2
        for k in range(1, n):
            if k >= 2:
                acc = acc * np.sin(pts[..., k - 1]) ** 2
            diag[..., k] = R * R * acc
        out = np.zeros(pts.shape[:-1] + (n, n))
        idx = np.arange(n)
        out[..., idx, idx] = diag
        return out

    r2 = _float_expr(R * R)
    comps = [[None] * n for _ in range(n)]
    for k, expr in enumerate(_polar_factors(n, radial_hyperbolic=True)):
        comps[k][k] = Expression(f"{r2}*{expr}" if expr != "1" else r2, n)
    for i in range(n):
        for j in range(n):
            if comps[i][j] is None:
                comps[i][j] = Expression("0", n)
    lo = [0.0] + [0.0] * (n - 2) + [-4 * np.pi]
    hi = [12.0] + [np.pi] * (n - 2) + [4 * np.pi]
    return MetricField(
        dim=n,
        signature=Signature(0, n),
        func=func,
        domain=Domain(tuple(lo), tuple(hi)),
        label=f"hyperbolic_polar(K={K}, n={n})",
        components=comps,
        kind=KIND_HYPERBOLIC_POLAR,
        params=np.array([R]),
    )


def _stereographic(K=1.0, n=3, n_minus=0):
    K, n, n_minus = float(K), int(n), int(n_minus)
    _require(n >= 1, "constant_curvature_stereographic needs n >= 1")
    _require(0 <= n_minus <= n, "n_minus must lie in [0, n]")
    sig = Signature(n_minus, n - n_minus)
    eta_d = sig.eta_diagonal()

    def func(pts):
        pts = np.asarray(pts, dtype=float)
        q = np.einsum("...i,i,...i->...", pts, eta_d, pts)
        f = (1.0 + K * q / 4.0) ** -2.0
        out = np.zeros(pts.shape[:-1] + (n, n))
        idx = np.arange(n)
        out[..., idx, idx] = f[..., None] * eta_d
        return out

    quad = "+".join(
        f"({_float_expr(eta_d[j])})*x{j + 1}^2" for j in range(n)
    )
    factor = f"(1+{_float_expr(K)}*({quad})/4)^(-2)"
    comps = [
        [
            Expression(f"({_float_expr(eta_d[i])})*{factor}" if i == j else "0", n)
            for j in range(n)
        ]
        for i in range(n)
    ]
    if K < 0 and n_minus == 0:
        bound = 2.0 / math.sqrt(-K)
        lo, hi = (-bound,) * n, (bound,) * n

        def predicate(p):
            q = np.einsum("...i,i,...i->...", p, eta_d, p)
            return 1.0 + K * q / 4.0 > DEGENERACY_MARGIN

        domain = Domain(lo, hi, predicate=predicate)
    elif K != 0.0:
        def predicate(p):
            q = np.einsum("...i,i,...i->...", p, eta_d, p)
            return np.abs(1.0 + K * q / 4.0) > DEGENERACY_MARGIN

        domain = Domain((-np.inf,) * n, (np.inf,) * n, predicate=predicate)
    else:
        domain = Domain.unbounded(n)
    return MetricField(
        dim=n,
        signature=sig,
        func=func,
        domain=domain,
        label=f"constant_curvature_stereographic(K={K}, n={n}, n_minus={n_minus})",
        components=comps,
        kind=KIND_STEREOGRAPHIC,
        params=np.array([K, float(n_minus)]),
    )


# fixed wave pattern of the generic conformally-flat entry; deterministic
_CONF_W1 = (1.0, 0.7, 0.4, 0.9, 0.6, 0.3, 0.8, 0.5)
_CONF_W2 = (0.5, -0.8, 0.9, -0.4, 0.7, -0.6, 0.2, -0.9)


def _conformal_generic(n=2, amplitude=0.3, n_minus=0, amplitude2=None, phase=0.3, phase2=1.1):
    n, n_minus = int(n), int(n_minus)
    amplitude = float(amplitude)
    amplitude2 = 0.5 * amplitude if amplitude2 is None else float(amplitude2)
    phase, phase2 = float(phase), float(phase2)
    _require(n >= 1, "conformal_flat_generic needs n >= 1")
    _require(0 <= n_minus <= n, "n_minus must lie in [0, n]")
    sig = Signature(n_minus, n - n_minus)
    eta_d = sig.eta_diagonal()
    w1 = np.array(_CONF_W1[:n])
    w2 = np.array(_CONF_W2[:n])

    def sigma(pts):
        pts = np.asarray(pts, dtype=float)
        return amplitude * np.sin(pts @ w1 + phase) + amplitude2 * np.cos(pts @ w2 + phase2)

    def func(pts):
        pts = np.asarray(pts, dtype=float)
        f = np.exp(2.0 * sigma(pts))
        out = np.zeros(pts.shape[:-1] + (n, n))
        idx = np.arange(n)
        out[..., idx, idx] = f[..., None] * eta_d
        return out

    lin1 = "+".join(f"{_float_expr(w1[j])}*x{j + 1}" for j in range(n))
    lin2 = "+".join(f"{_float_expr(w2[j])}*x{j + 1}" for j in range(n))
    sig_expr = (
        f"({_float_expr(amplitude)}*sin({lin1}+{_float_expr(phase)})"
        f"+{_float_expr(amplitude2)}*cos({lin2}+{_float_expr(phase2)}))"
    )
    comps = [
        [
            Expression(
                f"({_float_expr(eta_d[i])})*exp(2*{sig_expr})" if i == j else "0", n
            )
            for j in range(n)
        ]
        for i in range(n)
    ]
    m = MetricField(
        dim=n,
        signature=sig,
        func=func,
        domain=Domain.unbounded(n),
        label=f"conformal_flat_generic(n={n}, amplitude={amplitude}, n_minus={n_minus})",
        components=comps,
        kind=KIND_CONFORMAL_GENERIC,
        params=np.concatenate(
            [[float(n_minus), amplitude, phase, amplitude2, phase2], w1, w2]
        ),
    )
    m.conformal_exponent = sigma  # handy for conformal-flatness tests
    return m


CATALOG = {
    "euclidean": CatalogEntry(
        "euclidean",
        {"n": (3, "dimension")},
        _euclidean,
        "flat metric, identity matrix everywhere",
    ),
    "minkowski": CatalogEntry(
        "minkowski",
        {"n": (4, "dimension")},
        _minkowski,
        "flat metric diag(-1, 1, ..., 1), minus first",
    ),
    "sphere_polar": CatalogEntry(
        "sphere_polar",
        {"R": (1.0, "radius, > 0"), "n": (2, "dimension >= 2")},
        _sphere_polar,
        "round sphere of radius R in hyperspherical angles",
    ),
    "hyperbolic_polar": CatalogEntry(
        "hyperbolic_polar",
        {"K": (-1.0, "curvature, < 0"), "n": (2, "dimension >= 2")},
        _hyperbolic_polar,
        "hyperbolic space of curvature K in polar coordinates",
    ),
    "constant_curvature_stereographic": CatalogEntry(
        "constant_curvature_stereographic",
        {
            "K": (1.0, "curvature, any sign"),
            "n": (3, "dimension"),
            "n_minus": (0, "negative signature entries"),
        },
        _stereographic,
        "constant-curvature metric (1 + K x.x/4)^-2 eta in stereographic chart",
    ),
    "conformal_flat_generic": CatalogEntry(
        "conformal_flat_generic",
        {
            "n": (2, "dimension"),
            "amplitude": (0.3, "wave amplitude of the conformal exponent"),
            "n_minus": (0, "negative signature entries"),
        },
        _conformal_generic,
        "exp(2*sigma) eta with a fixed smooth two-wave exponent sigma",
    ),
}


def catalog_construct(name: str, **params) -> MetricField:
    """Build a catalog metric; unknown names or out-of-range params raise."""
    if name not in CATALOG:
        raise ConfigError(
            f"unknown catalog metric {name!r}; available: {sorted(CATALOG)}"
        )
    entry = CATALOG[name]
    unknown = set(params) - set(_constructor_params(entry))
    if unknown:
        raise ConfigError(f"unknown parameter(s) {sorted(unknown)} for {name!r}")
    m = entry.constructor(**params)
    m.config = {
        "dim": m.dim,
        "signature": m.signature.to_list(),
        "catalog": {"name": name, "params": {k: params[k] for k in sorted(params)}},
    }
    return m


def _constructor_params(entry):
    import inspect

    return inspect.signature(entry.constructor).parameters


def product_metric(m1: MetricField, m2: MetricField, label=None) -> MetricField:
    """Block-diagonal product of two metric fields."""
    n1, n2 = m1.dim, m2.dim
    n = n1 + n2

    def func(pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1] + (n, n))
        out[..., :n1, :n1] = m1.func(pts[..., :n1])
        out[..., n1:, n1:] = m2.func(pts[..., n1:])
        return out

    comps = None
    if m1.expression_backed and m2.expression_backed:
        comps = [[Expression("0", n) for _ in range(n)] for _ in range(n)]
        for i in range(n1):
            for j in range(n1):
                comps[i][j] = Expression(m1.components[i][j].source, n)
        for i in range(n2):
            for j in range(n2):
                src = _shift_variables(m2.components[i][j].source, n1, n2)
                comps[n1 + i][n1 + j] = Expression(src, n)
    sig = Signature(m1.signature.n_minus + m2.signature.n_minus,
                    m1.signature.n_plus + m2.signature.n_plus)
    if sig.to_list() != m1.signature.to_list() + m2.signature.to_list():
        raise ConfigError("product blocks must keep the minus-first ordering")
    lo = tuple(m1.domain.lo) + tuple(m2.domain.lo)
    hi = tuple(m1.domain.hi) + tuple(m2.domain.hi)
    pred = None
    if m1.domain.predicate or m2.domain.predicate:
        def pred(p):
            ok = True
            if m1.domain.predicate is not None:
                ok = ok and np.all(m1.domain.predicate(p[..., :n1]))
            if m2.domain.predicate is not None:
                ok = ok and np.all(m2.domain.predicate(p[..., n1:]))
            return ok

    return MetricField(
        dim=n,
        signature=sig,
        func=func,
        domain=Domain(lo, hi, margin=max(m1.domain.margin, m2.domain.margin), predicate=pred),
        label=label or f"product({m1.label}, {m2.label})",
        components=comps,
    )


def _shift_variables(src, shift, dim2):
    """Rewrite x1..x_dim2 (and aliases) to x{1+shift}.., for product blocks."""
    out = []
    i = 0
    n = len(src)
    while i < n:
        ch = src[i]
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            name = src[i:j]
            idx = _Parser_var_index(name)
            if idx is not None and idx < dim2:
                out.append(f"x{idx + 1 + shift}")
            else:
                out.append(name)
            i = j
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _Parser_var_index(name):
    aliases = {"x": 0, "y": 1, "z": 2, "w": 3}
    if name in aliases:
        return aliases[name]
    if len(name) >= 2 and name[0] == "x" and name[1:].isdigit():
        return int(name[1:]) - 1
    return None


# ---------------------------------------------------------------------------
# config documents
# ---------------------------------------------------------------------------

_ALLOWED_KEYS = {"dim", "signature", "catalog", "components", "domain", "label"}
_ALLOWED_DOMAIN_KEYS = {"lo", "hi", "margin"}
_SYMMETRY_TOL = 1e-10


def _probe_points(dim, domain):
    """Deterministic sample points inside the (possibly unbounded) box."""
    lo = np.asarray(domain.lo, dtype=float)
    hi = np.asarray(domain.hi, dtype=float)
    lo = np.where(np.isfinite(lo), lo, -1.0)
    hi = np.where(np.isfinite(hi), hi, 1.0)
    pad = 0.125 * (hi - lo) + domain.margin
    lo2, hi2 = lo + pad, hi - pad
    center = 0.5 * (lo2 + hi2)
    pts = [center]
    # fixed low-discrepancy-ish lattice, no randomness in the loader
    frac = np.array([0.21, 0.47, 0.68, 0.83, 0.33, 0.59, 0.76, 0.12])
    for s in range(8):
        f = np.array([frac[(s + 3 * k) % len(frac)] for k in range(dim)])
        pts.append(lo2 + f * (hi2 - lo2))
    return np.array(pts)


def load_metric(doc) -> MetricField:
    """Build a MetricField from a config document (dict or JSON text).

    The document declares ``dim`` and ``signature`` plus either a
    ``catalog`` reference or a ``components`` expression table.  Unknown
    keys are rejected; component asymmetry beyond 1e-10 at the probe
    points is an error, smaller asymmetry is symmetrized away.
    """
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(doc) - _ALLOWED_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    if "dim" not in doc or "signature" not in doc:
        raise ConfigError("config needs 'dim' and 'signature'")
    dim = doc["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise ConfigError("'dim' must be a positive integer")
    sig = Signature.from_list(doc["signature"])
    if sig.dim != dim:
        raise ConfigError(f"signature length {sig.dim} does not match dim {dim}")

    has_catalog = "catalog" in doc
    has_components = "components" in doc
    if has_catalog == has_components:
        raise ConfigError("config needs exactly one of 'catalog' or 'components'")

    if has_catalog:
        ref = doc["catalog"]
        if not isinstance(ref, dict) or "name" not in ref:
            raise ConfigError("'catalog' must be {'name': ..., 'params': {...}}")
        bad = set(ref) - {"name", "params"}
        if bad:
            raise ConfigError(f"unknown catalog key(s): {sorted(bad)}")
        m = catalog_construct(ref["name"], **ref.get("params", {}))
        if m.dim != dim or m.signature != sig:
            raise ConfigError(
                f"catalog entry {ref['name']!r} has dim {m.dim} / signature "
                f"{m.signature.to_list()}, config declares {dim} / {sig.to_list()}"
            )
        if "domain" in doc:
            m.domain = _parse_domain(doc["domain"], dim, m.domain)
        if "label" in doc:
            m.label = str(doc["label"])
        m.config = {k: doc[k] for k in doc}
        return m

    comp_doc = doc["components"]
    if not isinstance(comp_doc, dict):
        raise ConfigError("'components' must be an object of G_ij expressions")
    exprs = [[None] * dim for _ in range(dim)]
    declared = [[False] * dim for _ in range(dim)]
    for key, src in comp_doc.items():
        i, j = _parse_component_key(key, dim)
        try:
            exprs[i][j] = Expression(str(src), dim)
        except ExpressionError as exc:
            raise ConfigError(f"component {key}: {exc}") from exc
        declared[i][j] = True

    domain = _parse_domain(doc.get("domain"), dim, Domain.unbounded(dim))
    probes = _probe_points(dim, domain)

    # symmetry: both triangles declared must agree; single triangle is mirrored
    for i in range(dim):
        for j in range(i + 1, dim):
            if declared[i][j] and declared[j][i]:
                coords = tuple(probes[:, k] for k in range(dim))
                a = np.asarray(exprs[i][j](coords), dtype=float)
                b = np.asarray(exprs[j][i](coords), dtype=float)
                a, b = np.broadcast_arrays(a, b)
                scale = max(1.0, float(np.abs(a).max()), float(np.abs(b).max()))
                if np.max(np.abs(a - b)) > _SYMMETRY_TOL * scale:
                    raise ConfigError(
                        f"asymmetric components G_{i + 1}{j + 1} vs G_{j + 1}{i + 1}"
                    )
            elif declared[i][j]:
                exprs[j][i] = exprs[i][j]
            elif declared[j][i]:
                exprs[i][j] = exprs[j][i]
    for i in range(dim):
        for j in range(dim):
            if exprs[i][j] is None:
                exprs[i][j] = Expression("0", dim)

    def func(pts):
        pts = np.asarray(pts, dtype=float)
        coords = tuple(pts[..., k] for k in range(dim))
        out = np.zeros(pts.shape[:-1] + (dim, dim))
        for i in range(dim):
            for j in range(i, dim):
                v = exprs[i][j](coords)
                w = exprs[j][i](coords)
                val = 0.5 * (np.asarray(v, dtype=float) + np.asarray(w, dtype=float))
                out[..., i, j] = val
                out[..., j, i] = val
        return out

    m = MetricField(
        dim=dim,
        signature=sig,
        func=func,
        domain=domain,
        label=str(doc.get("label", "user metric")),
        components=exprs,
        config={k: doc[k] for k in doc},
    )
    _check_signature_at(m, probes)
    return m


def _parse_component_key(key, dim):
    if not key.startswith("G_"):
        raise ConfigError(f"component key {key!r} must look like G_11 or G_1_2")
    body = key[2:]
    if "_" in body:
        parts = body.split("_")
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise ConfigError(f"bad component key {key!r}")
        i, j = int(parts[0]), int(parts[1])
    elif len(body) == 2 and body.isdigit():
        i, j = int(body[0]), int(body[1])
    else:
        raise ConfigError(f"bad component key {key!r}")
    if not (1 <= i <= dim and 1 <= j <= dim):
        raise ConfigError(f"component key {key!r} out of range for dim {dim}")
    return i - 1, j - 1


def _parse_domain(dom_doc, dim, default):
    if dom_doc is None:
        return default
    if not isinstance(dom_doc, dict):
        raise ConfigError("'domain' must be an object")
    bad = set(dom_doc) - _ALLOWED_DOMAIN_KEYS
    if bad:
        raise ConfigError(f"unknown domain key(s): {sorted(bad)}")
    lo = dom_doc.get("lo", list(default.lo))
    hi = dom_doc.get("hi", list(default.hi))
    if len(lo) != dim or len(hi) != dim:
        raise ConfigError("'domain' lo/hi must have length dim")
    margin = float(dom_doc.get("margin", default.margin))
    return Domain(tuple(float(v) for v in lo), tuple(float(v) for v in hi),
                  margin=margin, predicate=default.predicate)


def _check_signature_at(m, probes):
    for p in probes:
        if not m.domain.contains(p):
            continue
        g = 0.5 * (m.func(p) + m.func(p).T)
        eig = np.sort(np.linalg.eigvalsh(g))
        n_neg = int(np.sum(eig < 0))
        if np.any(np.abs(eig) < 1e-12):
            raise ConfigError(f"metric degenerate at probe point {p.tolist()}")
        if n_neg != m.signature.n_minus:
            raise ConfigError(
                f"signature mismatch at probe {p.tolist()}: found {n_neg} negative "
                f"eigenvalue(s), declared {m.signature.n_minus}"
            )
