"""Normal tensors, Taylor expansion of the metric in normal coordinates,
and the frame ODE for the connection one-form coefficients along a ray.

The second/third order expansion predicts the pulled-back metric from the
curvature bundle at the chart origin; ``integrate_frame_ode`` solves the
second-order linear system for the frame coefficients A (and optionally
the rank-4 companion B) on a constant-curvature background and is checked
against the classical closed-form coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .curvature import CurvatureBundle, frame_vectors
from .errors import ConfigError
from .geodesics import NormalChart, pullback_metric_normal

_REQUIRED_ORDERS = (2, 3)


@dataclass(frozen=True)
class NormalTensorD:
    """Third-order normal tensor D[r, m, l, n], symmetric in (m, l)."""

    components: np.ndarray

    @property
    def dim(self):
        return self.components.shape[0]

    def pair_symmetry_residual(self) -> float:
        d = self.components
        return float(np.abs(d - np.einsum("rmln->rlmn", d)).max())

    def cyclic_residual(self) -> float:
        """Residual of the vanishing cyclic sum over the lower indices."""
        d = self.components
        s = d + np.einsum("rlnm->rmln", d) + np.einsum("rnml->rmln", d)
        return float(np.abs(s).max())

    def reconstruction_residual(self, riemann_up: np.ndarray) -> float:
        """How well D[r,m,l,n] - D[r,m,n,l] rebuilds the curvature tensor."""
        d = self.components
        rebuilt = d - np.einsum("rmnl->rmln", d)
        return float(np.abs(rebuilt - riemann_up).max())


def normal_tensor_d(curv: CurvatureBundle) -> NormalTensorD:
    """D[r,m,l,n] = (R^r_mln + R^r_lmn) / 3 from the origin bundle."""
    r = curv.riemann_up
    return NormalTensorD((r + np.einsum("rlmn->rmln", r)) / 3.0)


def _frame_riemann(curv: CurvatureBundle):
    """Riemann (and its covariant derivative) in frame components."""
    f = frame_vectors(curv.frame)
    rf = np.einsum("aA,bB,cC,dD,abcd->ABCD", f, f, f, f, curv.riemann_lower)
    nrf = None
    if curv.nabla_riemann is not None:
        nrf = np.einsum(
            "aA,bB,cC,dD,sS,abcds->ABCDS", f, f, f, f, f, curv.nabla_riemann
        )
    return rf, nrf


def _bracket_quadratic_form(T: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Symmetric matrix Q with Q[dv,dv] = T_agbd (v dv - v dv)(v dv - v dv)."""
    m1 = np.einsum("agbd,g,b->ad", T, v, v)
    m2 = np.einsum("agbd,g,d->ab", T, v, v)
    m3 = np.einsum("agbd,a,b->gd", T, v, v)
    m4 = np.einsum("agbd,a,d->gb", T, v, v)
    q = m1 - m2 - m3 + m4
    return 0.5 * (q + q.T)


def metric_expansion(curv: CurvatureBundle, v, order: int, form: str = "contracted"):
    """Predicted normal-coordinate metric at frame point v.

    ``contracted`` uses eta + (1/3) R_agbd v^g v^d + (1/6) R_agbd;s v^g v^d v^s;
    ``antisymmetrized`` uses the equivalent -(1/12)[R + (1/2) v.grad R]
    bilinear-bracket form (the sign follows the frozen curvature
    convention, see CONVENTIONS.md).  Both agree to roundoff.
    """
    if order not in _REQUIRED_ORDERS:
        raise ConfigError(f"expansion order must be one of {_REQUIRED_ORDERS}")
    if form not in ("contracted", "antisymmetrized"):
        raise ConfigError(f"unknown expansion form {form!r}")
    v = np.asarray(v, dtype=float)
    eta = np.diag(np.sort(np.sign(np.linalg.eigvalsh(curv.metric))))
    rf, nrf = _frame_riemann(curv)
    if order >= 3 and nrf is None:
        raise ConfigError("order-3 expansion needs the covariant curvature derivative")
    if form == "contracted":
        pred = eta + np.einsum("agbd,g,d->ab", rf, v, v) / 3.0
        if order >= 3:
            pred = pred + np.einsum("agbds,g,d,s->ab", nrf, v, v, v) / 6.0
        return pred
    T = rf.copy()
    if order >= 3:
        T = T + 0.5 * np.einsum("agbds,s->agbd", nrf, v)
    return eta - _bracket_quadratic_form(T, v) / 12.0


@dataclass
class ExpansionReport:
    """Truncation-order study of the expansion against the exact pullback.

    Residuals are parity-resolved: the order-2 truncation is compared on
    the even-in-v part of the discrepancy (its leading error term), the
    order-3 truncation on the odd part.  ``observed_slope`` is the
    least-squares log2 slope of residual vs radius.
    """

    order: int
    radii: np.ndarray
    residuals: np.ndarray
    predicted: list
    measured: list
    observed_slope: Optional[float]


def expansion_report(
    chart: NormalChart,
    curv: CurvatureBundle,
    direction,
    radii,
    order: int,
    form: str = "contracted",
) -> ExpansionReport:
    direction = np.asarray(direction, dtype=float)
    radii = np.asarray(radii, dtype=float)
    residuals = []
    preds = []
    meas = []
    for r in radii:
        v = r * direction
        g_plus = pullback_metric_normal(chart, v)
        g_minus = pullback_metric_normal(chart, -v)
        p_plus = metric_expansion(curv, v, order, form)
        p_minus = metric_expansion(curv, -v, order, form)
        delta_plus = g_plus - p_plus
        delta_minus = g_minus - p_minus
        if order == 2:
            resid = 0.5 * (delta_plus + delta_minus)
        else:
            resid = 0.5 * (delta_plus - delta_minus)
        residuals.append(float(np.abs(resid).max()))
        preds.append(p_plus)
        meas.append(g_plus)
    residuals = np.array(residuals)
    slope = None
    good = residuals > 1e-13
    if np.sum(good) >= 2:
        slope = float(
            np.polyfit(np.log2(radii[good]), np.log2(residuals[good]), 1)[0]
        )
    return ExpansionReport(order, radii, residuals, preds, meas, slope)


# ---------------------------------------------------------------------------
# frame ODE along a ray on a constant-curvature background
# ---------------------------------------------------------------------------


@dataclass
class FrameODESolution:
    """Grid solution of the frame coefficient system along one ray.

    A[k] has index layout [first, second, third] with z contracted on the
    second slot in the hypersurface one-forms; B[k] (optional) carries the
    rank-4 layout [(a, b), (c, d)] flattened on both pairs.
    """

    t: np.ndarray
    A: np.ndarray  # (nrec, n, n, n)
    B: Optional[np.ndarray]  # (nrec, n, n, n, n)
    z: np.ndarray
    K: float
    eta_diag: np.ndarray

    @property
    def dim(self):
        return self.z.size

    def antisymmetry_residual(self) -> float:
        """max_t |A[a,b,c] + A[a,c,b]| (holds for all t)."""
        return float(np.abs(self.A + np.einsum("kacb->kabc", self.A)).max())

    def induced_metric(self, k: int) -> np.ndarray:
        """Hypersurface metric at grid index k from the one-form matrix."""
        n = self.dim
        t = self.t[k]
        eta = np.diag(self.eta_diag)
        a_up = np.einsum("a,abc->abc", 1.0 / self.eta_diag, self.A[k])
        m = t * np.eye(n) + np.einsum("abc,b->ac", a_up, self.z)
        return m.T @ eta @ m

    def measured_coefficient(self, k: int = -1) -> float:
        """Transverse-coefficient extraction matching the closed form.

        Returns c with G_trans = t^2 - c r^2 t^4, which equals the
        constant-curvature coefficient at scaled radius r*t.
        """
        k = range(len(self.t))[k]
        if self.t[k] == 0.0:
            raise ConfigError("coefficient undefined at t = 0")
        n = self.dim
        g = self.induced_metric(k)
        r = float(np.linalg.norm(self.z))
        zhat = self.z / r
        # any transverse unit direction; all equivalent by isotropy
        trial = np.eye(n)[int(np.argmin(np.abs(zhat)))]
        e = trial - (trial @ zhat) * zhat
        e /= np.linalg.norm(e)
        g_trans = float(e @ g @ e)
        t = self.t[k]
        return (t * t - g_trans) / (r * r * t**4)


def integrate_frame_ode(
    K: float,
    n: int,
    r: float,
    t_end: float = 1.0,
    steps: int = 10000,
    direction=None,
    with_b: bool = False,
    records: int = 64,
) -> FrameODESolution:
    """Integrate the ray frame system A'' = t z.R + z z R eta A (plus the
    rank-4 companion when ``with_b``) from zero initial value and velocity.

    The curvature entering this system is the constant-curvature frame
    tensor in the sign that reproduces the classical sin/sinh closed form,
    which is the negative of the frozen-convention tensor (determined
    once numerically; see CONVENTIONS.md).  Euclidean frame metric.
    """
    if steps < 10:
        raise ConfigError("frame ODE needs at least 10 steps")
    if not np.isfinite(K):
        raise ConfigError("curvature must be finite")
    n = int(n)
    if n < 2:
        raise ConfigError("frame ODE needs n >= 2")
    if direction is None:
        direction = np.eye(n)[0]
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    z = float(r) * direction
    eta_diag = np.ones(n)
    eta = np.diag(eta_diag)
    # ODE-side curvature: K (eta_ac eta_bd - eta_ad eta_bc)
    r_ode = K * (
        np.einsum("ac,bd->abcd", eta, eta) - np.einsum("ad,bc->abcd", eta, eta)
    )
    s1 = np.einsum("b,abcd->acd", z, r_ode)
    m_mat = np.einsum("l,m,almn,np->ap", z, z, r_ode, np.linalg.inv(eta))
    qf = np.einsum("l,abln,np->abp", z, r_ode, np.linalg.inv(eta))
    n2 = n * n
    rec_stride = max(1, steps // max(1, records))
    t_rec, a_rec, b_rec = _kernels.frame_ode_rk4(
        np.ascontiguousarray(s1.reshape(n, n2)),
        np.ascontiguousarray(m_mat),
        np.ascontiguousarray(r_ode.reshape(n2, n2)),
        np.ascontiguousarray(qf.reshape(n2, n)),
        np.ascontiguousarray(z),
        float(t_end),
        int(steps),
        int(rec_stride),
        bool(with_b),
    )
    a_out = a_rec.reshape(len(t_rec), n, n, n)
    b_out = b_rec.reshape(len(t_rec), n, n, n, n) if with_b else None
    return FrameODESolution(t=t_rec, A=a_out, B=b_out, z=z, K=float(K), eta_diag=eta_diag)


@dataclass(frozen=True)
class BTensorReport:
    first_pair_residual: float
    last_pair_residual: float
    contraction_residual: float


def b_tensor_checks(sol: FrameODESolution) -> BTensorReport:
    """Antisymmetry residuals of the rank-4 companion over the whole grid,
    plus the consistency of its z-contraction with A."""
    if sol.B is None:
        raise ConfigError("solution was integrated without the rank-4 companion")
    b = sol.B
    first = float(np.abs(b + np.einsum("kbacd->kabcd", b)).max())
    last = float(np.abs(b + np.einsum("kabdc->kabcd", b)).max())
    contr = np.einsum("b,kabcd->kacd", sol.z, b)
    contraction = float(np.abs(contr - sol.A).max())
    return BTensorReport(first, last, contraction)
