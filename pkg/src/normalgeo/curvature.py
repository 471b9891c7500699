"""Pointwise curvature: connection coefficients, Riemann/Ricci/scalar,
covariant derivative of Riemann, Weyl tensor, frames, conformal operators.

Sign convention (frozen; see CONVENTIONS.md): with connection coefficients
``C^r_ml``,

    R^r_mln = d_n C^r_ml - d_l C^r_mn + C^s_ml C^r_sn - C^s_mn C^r_sl

Under this convention a constant-curvature space satisfies
``R_abcd = K (g_ad g_bc - g_ac g_bd)`` and the unit 2-sphere has scalar
curvature -2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .differentiation import (
    DifferentiationStrategy,
    ScalarField,
    default_strategy,
    fd_tolerance,
    metric_partials,
    scalar_partials,
)
from .errors import ConfigError, SingularMetricError
from .metrics import MetricField, evaluate_metric


def _partial_bundle(m, p, strategy, upto):
    parts = metric_partials(m, p, strategy, upto)
    g = 0.5 * (parts[0] + parts[0].T)
    det = np.linalg.det(g)
    if abs(det) < 1e-14 * max(1.0, float(np.abs(g).max())) ** m.dim:
        raise SingularMetricError(f"metric {m.label!r} singular at {np.asarray(p).tolist()}")
    ginv = np.linalg.inv(g)
    return (g, ginv) + parts[1:]


def _gamma_terms(ginv, dG, d2G=None):
    S = np.einsum("msl->sml", dG) + np.einsum("lsm->sml", dG) - dG
    gamma = 0.5 * np.einsum("rs,sml->rml", ginv, S)
    if d2G is None:
        return gamma, S, None, None
    dginv = -np.einsum("ab,nbc,cd->nad", ginv, dG, ginv)
    dS = (
        np.einsum("nmsl->nsml", d2G)
        + np.einsum("nlsm->nsml", d2G)
        - np.einsum("nsml->nsml", d2G)
    )
    dgamma = 0.5 * (
        np.einsum("nrs,sml->nrml", dginv, S) + np.einsum("rs,nsml->nrml", ginv, dS)
    )
    return gamma, S, dgamma, (dginv, dS)


def christoffel(m: MetricField, p, d: Optional[DifferentiationStrategy] = None):
    """Connection coefficients Gamma[r, m, l] = Gamma^r_ml at ``p``."""
    d = d or default_strategy(m)
    g, ginv, dG = _partial_bundle(m, p, d, 1)
    gamma, _, _, _ = _gamma_terms(ginv, dG)
    return gamma


def riemann(m: MetricField, p, d: Optional[DifferentiationStrategy] = None):
    """(R_up, R_low) with R_up[r, m, l, n] = R^r_mln in the frozen convention."""
    d = d or default_strategy(m)
    g, ginv, dG, d2G = _partial_bundle(m, p, d, 2)
    gamma, _, dgamma, _ = _gamma_terms(ginv, dG, d2G)
    r_up = (
        np.einsum("nrml->rmln", dgamma)
        - np.einsum("lrmn->rmln", dgamma)
        + np.einsum("sml,rsn->rmln", gamma, gamma)
        - np.einsum("smn,rsl->rmln", gamma, gamma)
    )
    r_low = np.einsum("ar,rmln->amln", g, r_up)
    return r_up, r_low


def ricci_scalar(m: MetricField, p, d: Optional[DifferentiationStrategy] = None):
    """(ricci, scalar, einstein_flag, constant_curvature_flag) at ``p``.

    ``einstein_flag`` tests Ric = (R/n) g; ``constant_curvature_flag``
    tests the full Riemann tensor against K (g_ad g_bc - g_ac g_bd) with
    K = -R / (n (n-1)).
    """
    d = d or default_strategy(m)
    g = evaluate_metric(m, p)
    r_up, r_low = riemann(m, p, d)
    ricci = np.einsum("rmrn->mn", r_up)
    scalar = float(np.einsum("mn,mn->", g.inverse, ricci))
    n = m.dim
    tol = 10.0 * fd_tolerance(d, 2)
    einstein = float(np.abs(ricci - (scalar / n) * g.matrix).max()) <= tol * max(
        1.0, float(np.abs(ricci).max())
    )
    if n >= 2:
        K = -scalar / (n * (n - 1))
        model = K * (
            np.einsum("ad,bc->abcd", g.matrix, g.matrix)
            - np.einsum("ac,bd->abcd", g.matrix, g.matrix)
        )
        cc = float(np.abs(r_low - model).max()) <= tol * max(
            1.0, float(np.abs(r_low).max())
        )
    else:
        cc = True
    return ricci, scalar, einstein, cc


def nabla_riemann(m: MetricField, p, d: Optional[DifferentiationStrategy] = None):
    """Covariant derivative nabla[a, g, b, dd, s] = R_{a g b dd ; s}."""
    d = d or default_strategy(m)
    g, ginv, dG, d2G, d3G = _partial_bundle(m, p, d, 3)
    gamma, S, dgamma, (dginv, dS) = _gamma_terms(ginv, dG, d2G)
    d2ginv = -(
        np.einsum("tab,nbc,cd->tnad", dginv, dG, ginv)
        + np.einsum("ab,tnbc,cd->tnad", ginv, d2G, ginv)
        + np.einsum("ab,nbc,tcd->tnad", ginv, dG, dginv)
    )
    d2S = (
        np.einsum("tnmsl->tnsml", d3G)
        + np.einsum("tnlsm->tnsml", d3G)
        - np.einsum("tnsml->tnsml", d3G)
    )
    d2gamma = 0.5 * (
        np.einsum("tnrs,sml->tnrml", d2ginv, S)
        + np.einsum("nrs,tsml->tnrml", dginv, dS)
        + np.einsum("trs,nsml->tnrml", dginv, dS)
        + np.einsum("rs,tnsml->tnrml", ginv, d2S)
    )
    r_up = (
        np.einsum("nrml->rmln", dgamma)
        - np.einsum("lrmn->rmln", dgamma)
        + np.einsum("sml,rsn->rmln", gamma, gamma)
        - np.einsum("smn,rsl->rmln", gamma, gamma)
    )
    dr_up = (
        np.einsum("tnrml->trmln", d2gamma)
        - np.einsum("tlrmn->trmln", d2gamma)
        + np.einsum("tsml,rsn->trmln", dgamma, gamma)
        + np.einsum("sml,trsn->trmln", gamma, dgamma)
        - np.einsum("tsmn,rsl->trmln", dgamma, gamma)
        - np.einsum("smn,trsl->trmln", gamma, dgamma)
    )
    r_low = np.einsum("ar,rmln->amln", g, r_up)
    dr_low = np.einsum("tar,rmln->tamln", dG, r_up) + np.einsum(
        "ar,trmln->tamln", g, dr_up
    )
    nabla = (
        np.einsum("sagbd->agbds", dr_low)
        - np.einsum("rsa,rgbd->agbds", gamma, r_low)
        - np.einsum("rsg,arbd->agbds", gamma, r_low)
        - np.einsum("rsb,agrd->agbds", gamma, r_low)
        - np.einsum("rsd,agbr->agbds", gamma, r_low)
    )
    return nabla


def weyl(m: MetricField, p, d: Optional[DifferentiationStrategy] = None):
    """Fully lowered Weyl tensor C[a, b, c, dd]; requires dim >= 3."""
    n = m.dim
    if n < 3:
        raise ConfigError(f"Weyl tensor needs dim >= 3, got {n}")
    d = d or default_strategy(m)
    g = evaluate_metric(m, p)
    r_up, r_low = riemann(m, p, d)
    ricci = np.einsum("rmrn->mn", r_up)
    scalar = float(np.einsum("mn,mn->", g.inverse, ricci))
    gm = g.matrix
    mid = (
        np.einsum("ac,bd->abcd", gm, ricci)
        - np.einsum("ad,bc->abcd", gm, ricci)
        + np.einsum("bd,ac->abcd", gm, ricci)
        - np.einsum("bc,ad->abcd", gm, ricci)
    )
    last = np.einsum("ac,bd->abcd", gm, gm) - np.einsum("ad,bc->abcd", gm, gm)
    return r_low - mid / (n - 2) + scalar * last / ((n - 1) * (n - 2))


def conformal_laplacians(
    m: MetricField,
    psi,
    p,
    d: Optional[DifferentiationStrategy] = None,
):
    """First/second Beltrami-type operators and the conformal Hessian.

    Returns (delta1, delta2, psi_mn) with

        delta1 = g^mn psi_,m psi_,n
        psi_mn = psi_;mn - psi_,m psi_,n
        delta2 = g^mn psi_;mn
    """
    if not isinstance(psi, ScalarField):
        psi = ScalarField(psi, m.dim)
    d = d or default_strategy(m)
    scalar_d = d if (d.kind == "central_fd" or psi.expression_backed) else (
        DifferentiationStrategy(kind="central_fd", order=4, step=d.step)
    )
    g, ginv, dG = _partial_bundle(m, p, d, 1)
    gamma, _, _, _ = _gamma_terms(ginv, dG)
    _, dpsi, d2psi = scalar_partials(psi, p, scalar_d, 2)
    hess = d2psi - np.einsum("smn,s->mn", gamma, dpsi)
    delta1 = float(np.einsum("mn,m,n->", ginv, dpsi, dpsi))
    delta2 = float(np.einsum("mn,mn->", ginv, hess))
    psi_mn = hess - np.outer(dpsi, dpsi)
    return delta1, delta2, psi_mn


def frame_at_point(m: MetricField, p) -> np.ndarray:
    """Vielbein E with G = E eta E^T, eta the minus-first flat metric.

    Columns are sqrt(|lambda|)-scaled eigenvectors of G(p): negative
    eigenvalues first, |lambda| descending inside each sign block,
    eigenvector signs fixed by making the first non-negligible component
    positive.  Deterministic for the tie cases that matter here.
    """
    g = evaluate_metric(m, p)
    return _frame_from_matrix(g.matrix, m.signature.n_minus, m.label)


def _frame_from_matrix(gm, n_minus, label=""):
    vals, vecs = np.linalg.eigh(gm)
    neg = vals < 0
    if int(neg.sum()) != n_minus:
        raise SingularMetricError(
            f"eigenvalue signs of {label!r} disagree with its signature"
        )
    order = sorted(
        range(len(vals)),
        key=lambda i: (0 if vals[i] < 0 else 1, -abs(vals[i])),
    )
    vals = vals[order]
    vecs = vecs[:, order]
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        if nz.size and col[nz[0]] < 0:
            vecs[:, k] = -col
    return vecs * np.sqrt(np.abs(vals))[None, :]


def frame_vectors(frame: np.ndarray) -> np.ndarray:
    """Columns are the frame vectors e_A dual to the vielbein columns.

    With E the frame_at_point output, F = E^{-T} satisfies F^T G F = eta,
    so chart velocity of frame-direction v is F @ v.
    """
    return np.linalg.inv(frame).T


@dataclass(frozen=True)
class CurvatureBundle:
    """Curvature data of one metric at one point (immutable value object)."""

    point: np.ndarray
    metric: np.ndarray
    inverse: np.ndarray
    christoffel: np.ndarray
    riemann_up: np.ndarray
    riemann_lower: np.ndarray
    ricci: np.ndarray
    scalar: float
    nabla_riemann: Optional[np.ndarray]
    frame: np.ndarray

    @property
    def dim(self) -> int:
        return self.metric.shape[0]


def curvature_bundle(
    m: MetricField,
    p,
    d: Optional[DifferentiationStrategy] = None,
    with_nabla: bool = True,
) -> CurvatureBundle:
    """Assemble the full curvature record at ``p``."""
    d = d or default_strategy(m)
    g = evaluate_metric(m, p)
    gamma = christoffel(m, p, d)
    r_up, r_low = riemann(m, p, d)
    ricci = np.einsum("rmrn->mn", r_up)
    scalar = float(np.einsum("mn,mn->", g.inverse, ricci))
    nabla = nabla_riemann(m, p, d) if with_nabla else None
    frame = frame_at_point(m, p)
    return CurvatureBundle(
        point=np.asarray(p, dtype=float).copy(),
        metric=g.matrix,
        inverse=g.inverse,
        christoffel=gamma,
        riemann_up=r_up,
        riemann_lower=r_low,
        ricci=ricci,
        scalar=scalar,
        nabla_riemann=nabla,
        frame=frame,
    )


def constant_curvature_frame_riemann(K: float, eta_diag: np.ndarray) -> np.ndarray:
    """Frame components K (eta_ad eta_bc - eta_ac eta_bd) of the frozen convention."""
    eta = np.diag(eta_diag)
    return K * (np.einsum("ad,bc->abcd", eta, eta) - np.einsum("ac,bd->abcd", eta, eta))
