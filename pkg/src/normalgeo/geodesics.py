"""Geodesic integration and normal-coordinate charts.

exp/log maps are realized by fixed-step RK4 integration of the geodesic
equation; the variational (Jacobi) matrix system is integrated alongside,
which yields the exact differential of the exponential map (used for the
normal-coordinate pullback and for Newton shooting in ``log_map``) and a
determinant monitor for conjugate points.  Catalog metrics run in the
compiled kernels; expression/user metrics use a vectorized numpy path
with identical stencils and stepping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from . import _kernels
from ._env import USE_NUMBA
from .curvature import _gamma_terms, frame_at_point, frame_vectors
from .errors import (
    ConjugatePointError,
    ConvergenceError,
    DomainError,
    SingularMetricError,
    StepUnderflowError,
)
from .metrics import MetricField, evaluate_metric


@dataclass(frozen=True)
class GeodesicSettings:
    """Integrator configuration; fixed-step RK4 is the deterministic default."""

    method: str = "rk4"  # "rk4" or "adaptive"
    steps_per_unit: int = 1000
    h_rel: float = 2e-3  # relative stencil step for connection coefficients
    rtol: float = 1e-10
    atol: float = 1e-12


@dataclass
class GeodesicSolution:
    """Sampled geodesic with its affine-parameter energy drift."""

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    energy_drift: float

    @property
    def endpoint(self):
        return self.x[-1]

    @property
    def end_velocity(self):
        return self.v[-1]


_O4 = ((-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0))
_O4_SECOND = ((-2, -1.0 / 12.0), (-1, 16.0 / 12.0), (0, -30.0 / 12.0), (1, 16.0 / 12.0), (2, -1.0 / 12.0))


@lru_cache(maxsize=None)
def _stencil_plan(n, with_der):
    offsets = {}

    def idx(off):
        t = tuple(off)
        if t not in offsets:
            offsets[t] = len(offsets)
        return offsets[t]

    idx((0,) * n)
    d1 = []
    for a in range(n):
        ii, ww = [], []
        for o, w in _O4:
            off = [0] * n
            off[a] = o
            ii.append(idx(off))
            ww.append(w)
        d1.append((np.array(ii), np.array(ww)))
    d2 = {}
    if with_der:
        for a in range(n):
            ii, ww = [], []
            for o, w in _O4_SECOND:
                off = [0] * n
                off[a] = o
                ii.append(idx(off))
                ww.append(w)
            d2[(a, a)] = (np.array(ii), np.array(ww))
            for b in range(a + 1, n):
                ii, ww = [], []
                for oa, wa in _O4:
                    for ob, wb in _O4:
                        off = [0] * n
                        off[a] = oa
                        off[b] = ob
                        ii.append(idx(off))
                        ww.append(wa * wb)
                d2[(a, b)] = (np.array(ii), np.array(ww))
    offs = np.empty((len(offsets), n))
    for t, i in offsets.items():
        offs[i] = t
    return offs, tuple(d1), d2


def _connection_generic(m, x, h_rel, with_der):
    """(Gamma, dGamma or None) at x via one batched metric evaluation."""
    n = m.dim
    offs, d1, d2 = _stencil_plan(n, with_der)
    h = h_rel * max(1.0, float(np.max(np.abs(x))))
    vals = np.asarray(m.func(x[None, :] + h * offs), dtype=float)
    g = 0.5 * (vals[0] + vals[0].T)
    det = np.linalg.det(g)
    if abs(det) < 1e-14 * max(1.0, float(np.abs(g).max())) ** n:
        raise SingularMetricError(f"metric {m.label!r} singular along geodesic")
    ginv = np.linalg.inv(g)
    dG = np.empty((n, n, n))
    for a in range(n):
        ii, ww = d1[a]
        dG[a] = np.einsum("k,kij->ij", ww, vals[ii]) / h
    if not with_der:
        gamma, _, _, _ = _gamma_terms(ginv, dG)
        return gamma, None
    d2G = np.empty((n, n, n, n))
    for (a, b), (ii, ww) in d2.items():
        d2G[a, b] = np.einsum("k,kij->ij", ww, vals[ii]) / h**2
        d2G[b, a] = d2G[a, b]
    gamma, _, dgamma, _ = _gamma_terms(ginv, dG, d2G)
    return gamma, dgamma


def _rk4_generic(m, x0, v0, t_end, nsteps, h_rel, pad, with_var, yd0):
    """Numpy mirror of the compiled geodesic kernel (any callable metric)."""
    n = m.dim
    ts = np.empty(nsteps + 1)
    xs = np.empty((nsteps + 1, n))
    vs = np.empty((nsteps + 1, n))
    dets = np.zeros(nsteps + 1)
    x, v = x0.copy(), v0.copy()
    Y = np.zeros((n, n))
    Yd = yd0.copy()
    ts[0], xs[0], vs[0] = 0.0, x, v
    dt = t_end / nsteps
    status = _kernels.STATUS_OK
    last = 0

    def rhs(xi, vi, Yi, Ydi):
        if not m.domain.contains(xi, pad=pad):
            raise DomainError("geodesic exits the chart domain")
        gamma, dgamma = _connection_generic(m, xi, h_rel, with_var)
        acc = -np.einsum("rml,m,l->r", gamma, vi, vi)
        if not with_var:
            return vi, acc, None, None
        P = np.einsum("rml,m->rl", gamma, vi)
        Q = np.einsum("srml,m,l->rs", dgamma, vi, vi)
        Ydd = -2.0 * P @ Ydi - Q @ Yi
        return vi, acc, Ydi, Ydd

    for step in range(nsteps):
        try:
            k1 = rhs(x, v, Y, Yd)
            k2 = rhs(
                x + 0.5 * dt * k1[0], v + 0.5 * dt * k1[1],
                Y + (0.5 * dt * k1[2] if with_var else 0), Yd + (0.5 * dt * k1[3] if with_var else 0),
            )
            k3 = rhs(
                x + 0.5 * dt * k2[0], v + 0.5 * dt * k2[1],
                Y + (0.5 * dt * k2[2] if with_var else 0), Yd + (0.5 * dt * k2[3] if with_var else 0),
            )
            k4 = rhs(
                x + dt * k3[0], v + dt * k3[1],
                Y + (dt * k3[2] if with_var else 0), Yd + (dt * k3[3] if with_var else 0),
            )
        except DomainError:
            status = _kernels.STATUS_DOMAIN
            break
        except SingularMetricError:
            status = _kernels.STATUS_SINGULAR
            break
        x = x + (dt / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        v = v + (dt / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if with_var:
            Y = Y + (dt / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            Yd = Yd + (dt / 6.0) * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
        last = step + 1
        ts[last] = (step + 1) * dt
        xs[last] = x
        vs[last] = v
        if with_var:
            dets[last] = np.linalg.det(Y)
        if not m.domain.contains(x, pad=pad):
            status = _kernels.STATUS_DOMAIN
            break
    return status, ts[: last + 1], xs[: last + 1], vs[: last + 1], dets[: last + 1], Y, Yd


def _kernel_bounds(m, pad):
    lo = np.asarray(m.domain.lo, dtype=float).copy()
    hi = np.asarray(m.domain.hi, dtype=float).copy()
    lo[np.isfinite(lo)] += pad
    hi[np.isfinite(hi)] -= pad
    return lo, hi


def _use_kernel(m: MetricField) -> bool:
    return m.kind is not None and USE_NUMBA


def _integrate(m, x0, v0, t_end, nsteps, h_rel, with_var, yd0, force_generic=False):
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    pad = m.domain.margin + 3.0 * h_rel * max(
        1.0, float(np.max(np.abs(x0))) if x0.size else 1.0
    )
    if yd0 is None:
        yd0 = np.eye(m.dim)
    if _use_kernel(m) and not force_generic:
        lo, hi = _kernel_bounds(m, pad)
        return _kernels.geodesic_rk4(
            m.kind, m.params, x0, v0, float(t_end), int(nsteps), h_rel, lo, hi,
            with_var, np.asarray(yd0, dtype=float),
        )
    return _rk4_generic(m, x0, v0, float(t_end), int(nsteps), h_rel, pad, with_var, yd0)


def _raise_status(status, label):
    if status == _kernels.STATUS_DOMAIN:
        raise DomainError(f"geodesic exits the domain of {label!r}")
    if status == _kernels.STATUS_SINGULAR:
        raise SingularMetricError(f"metric {label!r} singular along geodesic")


def integrate_geodesic(
    m: MetricField,
    p0,
    v0,
    t_end: float,
    settings: Optional[GeodesicSettings] = None,
) -> GeodesicSolution:
    """Integrate the geodesic from (p0, v0) over affine parameter [0, t_end]."""
    settings = settings or GeodesicSettings()
    p0 = np.asarray(p0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if not m.domain.contains(p0):
        raise DomainError(f"start point outside domain of {m.label!r}")
    if not np.all(np.isfinite(v0)):
        raise DomainError("initial velocity must be finite")
    if t_end < 0:
        raise DomainError("t_end must be nonnegative")
    if t_end == 0 or not np.any(v0):
        t_cap = max(t_end, 0.0)
        ts = np.array([0.0, t_cap]) if t_cap > 0 else np.array([0.0])
        xs = np.tile(p0, (ts.size, 1))
        vs = np.tile(v0, (ts.size, 1))
        return GeodesicSolution(ts, xs, vs, 0.0)
    if settings.method == "adaptive":
        ts, xs, vs = _adaptive_rk45(m, p0, v0, t_end, settings)
    else:
        nsteps = max(1, int(round(settings.steps_per_unit * t_end)))
        status, ts, xs, vs, _, _, _ = _integrate(
            m, p0, v0, t_end, nsteps, settings.h_rel, False, None
        )
        _raise_status(status, m.label)
    energies = np.einsum("kij,ki,kj->k", m.func(xs), vs, vs)
    drift = float(np.max(np.abs(energies - energies[0])))
    return GeodesicSolution(ts, xs, vs, drift)


# Dormand-Prince 5(4) coefficients for the optional adaptive integrator.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def _adaptive_rk45(m, p0, v0, t_end, settings):
    n = m.dim
    pad = m.domain.margin

    def rhs(y):
        x, v = y[:n], y[n:]
        if not m.domain.contains(x, pad=pad):
            raise DomainError("geodesic exits the chart domain")
        gamma, _ = _connection_generic(m, x, settings.h_rel, False)
        return np.concatenate([v, -np.einsum("rml,m,l->r", gamma, v, v)])

    y = np.concatenate([p0, v0])
    t = 0.0
    dt = t_end / 100.0
    ts, ys = [0.0], [y.copy()]
    while t < t_end:
        dt = min(dt, t_end - t)
        if dt < 1e-14 * max(1.0, t_end):
            raise StepUnderflowError("adaptive step size underflow")
        k = np.empty((7, y.size))
        try:
            k[0] = rhs(y)
            for s in range(1, 7):
                acc = y + dt * sum(a * k[j] for j, a in enumerate(_DP_A[s]))
                k[s] = rhs(acc)
        except DomainError:
            raise DomainError(f"geodesic exits the domain of {m.label!r}")
        y5 = y + dt * np.einsum("s,sj->j", _DP_B5, k)
        y4 = y + dt * np.einsum("s,sj->j", _DP_B4, k)
        err = np.max(np.abs(y5 - y4))
        tol = settings.atol + settings.rtol * max(1.0, float(np.max(np.abs(y5))))
        if err <= tol:
            t += dt
            y = y5
            ts.append(t)
            ys.append(y.copy())
        ratio = (tol / err) ** 0.2 if err > 0 else 5.0
        dt *= min(5.0, max(0.2, 0.9 * ratio))
    ys = np.array(ys)
    return np.array(ts), ys[:, :n], ys[:, n:]


@dataclass
class NormalChart:
    """Normal-coordinate chart: origin, orthonormal frame, exp/log machinery.

    ``frame`` is the vielbein at the origin (G = E eta E^T); chart inputs
    are frame components, so the pulled-back metric at v = 0 is eta by
    construction.
    """

    metric: MetricField
    origin: np.ndarray
    frame: np.ndarray
    vectors: np.ndarray
    settings: GeodesicSettings = field(default_factory=GeodesicSettings)

    @property
    def dim(self):
        return self.metric.dim

    @property
    def eta(self):
        return self.metric.signature.eta()


def normal_chart(m: MetricField, origin, settings: Optional[GeodesicSettings] = None) -> NormalChart:
    origin = np.asarray(origin, dtype=float)
    evaluate_metric(m, origin)  # domain + nondegeneracy
    frame = frame_at_point(m, origin)
    return NormalChart(
        metric=m,
        origin=origin,
        frame=frame,
        vectors=frame_vectors(frame),
        settings=settings or GeodesicSettings(),
    )


def _check_conjugate(ts, dets):
    """Raise when the Jacobi determinant crosses zero or ends at ~zero.

    A sign change inside (0, t_end] is a crossed conjugate point; a
    terminal determinant below 1e-8 of the grid maximum means the endpoint
    sits at one (the determinant may touch zero without changing sign).
    """
    t_c = _first_det_crossing(ts, dets)
    if t_c is not None:
        raise ConjugatePointError(
            f"conjugate point at t={t_c:.6f} before the requested endpoint"
        )
    peak = float(np.max(np.abs(dets))) if len(dets) else 0.0
    if peak > 0.0 and abs(dets[-1]) < 1e-8 * peak:
        raise ConjugatePointError("endpoint lies at a conjugate point")


def _first_det_crossing(ts, dets):
    """First sign change of det Y after the t^n startup regime, or None."""
    k0 = max(1, min(5, len(ts) - 1))
    ref = 0.0
    for k in range(k0, len(ts)):
        if dets[k] != 0.0:
            ref = math.copysign(1.0, dets[k])
            k0 = k
            break
    if ref == 0.0:
        return None
    for k in range(k0 + 1, len(ts)):
        s = math.copysign(1.0, dets[k]) if dets[k] != 0.0 else 0.0
        if s != 0.0 and s != ref:
            d0, d1 = dets[k - 1], dets[k]
            frac = d0 / (d0 - d1) if d0 != d1 else 0.5
            return ts[k - 1] + frac * (ts[k] - ts[k - 1])
    return None


def _shoot(chart: NormalChart, v, t_end=1.0, force_generic=False):
    """Integrate geodesic + Jacobi system for frame-velocity v up to t_end."""
    v = np.asarray(v, dtype=float)
    v0 = chart.vectors @ v
    nsteps = max(1, int(round(chart.settings.steps_per_unit * t_end)))
    status, ts, xs, vs, dets, Y, Yd = _integrate(
        chart.metric, chart.origin, v0, t_end, nsteps,
        chart.settings.h_rel, True, chart.vectors, force_generic=force_generic,
    )
    _raise_status(status, chart.metric.label)
    return ts, xs, vs, dets, Y, Yd


def exp_map(chart: NormalChart, v, force_generic=False) -> np.ndarray:
    """Chart point reached by the geodesic with frame-velocity v at t = 1.

    Refuses (raises ConjugatePointError) if the Jacobi determinant crosses
    zero before t = 1; the chart is only used inside its injectivity
    region, never extrapolated past it.
    """
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return chart.origin.copy()
    ts, xs, vs, dets, Y, Yd = _shoot(chart, v, force_generic=force_generic)
    _check_conjugate(ts, dets)
    return xs[-1]


def exp_map_with_jacobian(chart: NormalChart, v, force_generic=False):
    """(endpoint, d exp/d v); the Jacobian comes from the integrated Jacobi system."""
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return chart.origin.copy(), chart.vectors.copy()
    ts, xs, vs, dets, Y, Yd = _shoot(chart, v, force_generic=force_generic)
    _check_conjugate(ts, dets)
    return xs[-1], Y


def pullback_metric_normal(chart: NormalChart, v, force_generic=False) -> np.ndarray:
    """Metric in normal coordinates at frame point v: J^T G(exp v) J.

    J is the exact differential of exp from the integrated Jacobi system,
    so the only error sources are the RK4 step and the connection stencil.
    """
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return chart.eta.copy()
    ts, xs, vs, dets, Y, Yd = _shoot(chart, v, force_generic=force_generic)
    _check_conjugate(ts, dets)
    g_end = evaluate_metric(chart.metric, xs[-1]).matrix
    return Y.T @ g_end @ Y


def log_map(chart: NormalChart, q, max_iter=50, tol=1e-10) -> np.ndarray:
    """Frame-velocity v with exp(v) = q, by damped Newton shooting.

    Initialized with 0.9 times the straight-line chart difference; the
    Newton correction uses the exact exp Jacobian.  Non-convergence and
    crossing the first conjugate point raise distinct errors.
    """
    q = np.asarray(q, dtype=float)
    if not chart.metric.domain.contains(q):
        raise DomainError(f"target point outside domain of {chart.metric.label!r}")
    v = 0.9 * (chart.frame.T @ (q - chart.origin))
    if not np.any(v):
        return np.zeros(chart.dim)
    res_prev = np.inf
    for _ in range(max_iter):
        try:
            end, J = exp_map_with_jacobian(chart, v)
        except ConjugatePointError as exc:
            raise ConjugatePointError(
                f"log target beyond the first conjugate point: {exc}"
            ) from exc
        r = end - q
        res = float(np.max(np.abs(r)))
        if res < tol:
            return v
        try:
            step = np.linalg.solve(J, r)
        except np.linalg.LinAlgError as exc:
            raise ConjugatePointError(
                "exp Jacobian singular; target at or beyond a conjugate point"
            ) from exc
        # deterministic damping: halve the step while the residual grows
        scale = 1.0
        for _ in range(30):
            v_try = v - scale * step
            try:
                end_try = exp_map(chart, v_try)
                res_try = float(np.max(np.abs(end_try - q)))
            except (ConjugatePointError, DomainError):
                scale *= 0.5
                continue
            if res_try <= res or res_try < res_prev:
                break
            scale *= 0.5
        else:
            _classify_log_failure(chart, v, "damping failed to reduce the residual")
        v = v - scale * step
        res_prev = res
    _classify_log_failure(chart, v, f"no convergence in {max_iter} iterations")


def _classify_log_failure(chart, v, message):
    """Report targets at/beyond the first conjugate point distinctly."""
    norm = float(np.linalg.norm(v))
    t_c = None
    if norm > 0:
        try:
            t_c = detect_conjugate(chart, v / norm, t_max=1.1 * norm + 0.1)
        except (ConjugatePointError, DomainError):
            t_c = None
    if t_c is not None and t_c <= norm * (1.0 + 1e-6) + 1e-9:
        raise ConjugatePointError(
            f"log target at or beyond the first conjugate point (t={t_c:.6f})"
        )
    raise ConvergenceError(f"log_map: {message}")


def detect_conjugate(chart: NormalChart, direction, t_max: float, refine_tol=1e-6):
    """First parameter where det(d exp) vanishes along ``direction``.

    The variational system runs on a grid up to t_max; a sign change is
    bracketed and then bisected (each probe re-integrates) down to
    ``refine_tol``.  Returns None when no conjugate point is found.
    """
    direction = np.asarray(direction, dtype=float)
    eta = chart.eta
    norm2 = float(direction @ eta @ direction)
    if abs(abs(norm2) - 1.0) > 1e-8:
        scale = math.sqrt(abs(norm2))
        if scale == 0.0:
            raise DomainError("null directions have no frame normalization")
        direction = direction / scale

    def det_at(t):
        ts, xs, vs, dets, Y, Yd = _shoot(chart, direction * t, t_end=1.0)
        return dets[-1]

    ts, xs, vs, dets, Y, Yd = _shoot(chart, direction, t_end=t_max)
    t_c = _first_det_crossing(ts, dets)
    if t_c is None:
        return None
    dt = ts[1] - ts[0]
    a = max(dt, t_c - dt)
    b = min(t_max, t_c + dt)
    fa, fb = det_at(a), det_at(b)
    if fa * fb > 0:
        return float(t_c)
    for _ in range(80):
        if b - a < refine_tol:
            break
        mid = 0.5 * (a + b)
        fm = det_at(mid)
        if fm == 0.0:
            return float(mid)
        if fa * fm < 0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return float(0.5 * (a + b))
