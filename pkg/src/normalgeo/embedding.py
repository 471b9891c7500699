"""Flat-space embeddings.

Two constructions: (1) the null-cone embedding of a conformally flat
n-metric into an (n+2)-dimensional flat space whose extra block carries
one +1 and one -1; (2) constant-curvature hypersurfaces {eta x x = eps R^2}
in (n+1)-flat space, with projections of constant ambient vectors,
Lie-derivative (Killing / conformal-Killing) checks in a local
orthographic chart, and the closed-form commutator of projected fields.

For Lorentzian normals the inner product against N is normalized by
<N, N> = eps so that projections and characteristic functions keep their
sphere form on both signatures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .differentiation import DifferentiationStrategy, ScalarField
from .errors import ConfigError, DomainError
from .metrics import Signature

_O4_FIRST = ((-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0))
_O2_FIRST = ((-1, -0.5), (1, 0.5))


# ---------------------------------------------------------------------------
# null-cone embedding
# ---------------------------------------------------------------------------


@dataclass
class ConeEmbedding:
    """Coordinate map into the (n+2)-flat space and its extended metric."""

    sigma: ScalarField
    signature: Signature

    @property
    def dim(self):
        return self.signature.dim

    @property
    def eta_bold_diagonal(self) -> np.ndarray:
        return np.concatenate([self.signature.eta_diagonal(), [1.0, -1.0]])

    def map(self, z) -> np.ndarray:
        return cone_embed(self.sigma, z, self.signature)

    def null_residual(self, z) -> float:
        y = self.map(z)
        return float(abs(np.sum(self.eta_bold_diagonal * y * y)))


def cone_embed(sigma, z, signature: Signature) -> np.ndarray:
    """y = e^sigma (z, z.z - 1/4, z.z + 1/4); eta_bold(y, y) = 0 identically."""
    if not isinstance(sigma, ScalarField):
        sigma = ScalarField(sigma, signature.dim)
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != signature.dim:
        raise ConfigError("point dimension does not match the signature")
    s = np.exp(np.asarray(sigma(z), dtype=float))
    q = np.einsum("...i,i,...i->...", z, signature.eta_diagonal(), z)
    y = np.empty(z.shape[:-1] + (signature.dim + 2,))
    y[..., : signature.dim] = s[..., None] * z
    y[..., signature.dim] = s * (q - 0.25)
    y[..., signature.dim + 1] = s * (q + 0.25)
    return y


def cone_pullback_check(
    sigma,
    z,
    signature: Signature,
    d: Optional[DifferentiationStrategy] = None,
) -> float:
    """Residual of J^T eta_bold J = exp(2 sigma) eta at z (J by stencils)."""
    if not isinstance(sigma, ScalarField):
        sigma = ScalarField(sigma, signature.dim)
    d = d or DifferentiationStrategy(kind="central_fd", order=4, step=1e-3)
    z = np.asarray(z, dtype=float)
    n = signature.dim
    h = d.step * max(1.0, float(np.max(np.abs(z))))
    stencil = _O4_FIRST if d.order == 4 else _O2_FIRST
    jac = np.zeros((n + 2, n))
    emb = ConeEmbedding(sigma, signature)
    for a in range(n):
        for off, w in stencil:
            q = z.copy()
            q[a] += off * h
            jac[:, a] += w * emb.map(q)
        jac[:, a] /= h
    eta_bold = emb.eta_bold_diagonal
    pulled = jac.T @ (eta_bold[:, None] * jac)
    target = math.exp(2.0 * float(sigma(z))) * signature.eta()
    return float(np.abs(pulled - target).max())


# ---------------------------------------------------------------------------
# constant-curvature hypersurfaces in (n+1)-flat space
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HypersurfaceModel:
    """Quadric {eta x x = eps R^2} in flat (n+1)-space, curvature K = eps/R^2.

    eps = +1 is the round sphere (Euclidean ambient), eps = -1 the
    hyperbolic sheet (ambient minus-first Lorentzian); the unit normal is
    N = x/R with <N, N> = eps.
    """

    n: int
    R: float
    eps: int

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError("hypersurface dimension must be >= 2")
        if self.R <= 0:
            raise ConfigError("radius must be positive")
        if self.eps not in (-1, 1):
            raise ConfigError("eps must be +1 or -1")

    @property
    def ambient_dim(self):
        return self.n + 1

    @property
    def curvature(self) -> float:
        return self.eps / self.R**2

    @property
    def eta_diagonal(self) -> np.ndarray:
        if self.eps == 1:
            return np.ones(self.ambient_dim)
        return np.concatenate([[-1.0], np.ones(self.n)])

    def inner(self, a, b) -> float:
        return float(np.sum(self.eta_diagonal * np.asarray(a) * np.asarray(b)))

    def constraint_residual(self, x) -> float:
        return abs(self.inner(x, x) - self.eps * self.R**2)

    def require_on_surface(self, x, tol=1e-10):
        if self.constraint_residual(x) > tol * self.R**2:
            raise DomainError(
                f"point not on the hypersurface (residual {self.constraint_residual(x):.3e})"
            )

    def normal(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) / self.R

    def normal_coefficient(self, C, x) -> float:
        """Decomposition coefficient of C along N: eps * <C, N>."""
        return self.eps * self.inner(C, self.normal(x))

    def random_point(self, rng) -> np.ndarray:
        if self.eps == 1:
            v = rng.normal(size=self.ambient_dim)
            return self.R * v / np.linalg.norm(v)
        rho = rng.uniform(0.1, 1.2)
        w = rng.normal(size=self.n)
        w /= np.linalg.norm(w)
        return self.R * np.concatenate([[math.cosh(rho)], math.sinh(rho) * w])

    def tangent_basis(self, x) -> np.ndarray:
        """Columns form an eta-orthonormal basis of the tangent space at x."""
        x = np.asarray(x, dtype=float)
        self.require_on_surface(x)
        nvec = self.normal(x)
        eta = self.eta_diagonal
        cols = []
        for k in range(self.ambient_dim):
            c = np.zeros(self.ambient_dim)
            c[k] = 1.0
            c = c - self.eps * self.inner(c, nvec) * nvec
            for b in cols:
                c = c - self.inner(c, b) * b
            nrm2 = self.inner(c, c)
            if nrm2 > 1e-12:
                cols.append(c / math.sqrt(nrm2))
            if len(cols) == self.n:
                break
        if len(cols) != self.n:
            raise ConfigError("failed to build a tangent basis")
        del eta
        return np.stack(cols, axis=1)

    # -- orthographic chart ------------------------------------------------
    def chart_point(self, x, basis, w) -> np.ndarray:
        """x + basis w + h(w) N with h = -R + sqrt(R^2 - eps |w|^2)."""
        w = np.asarray(w, dtype=float)
        arg = self.R**2 - self.eps * float(w @ w)
        if arg <= 0.0:
            raise DomainError("orthographic chart leaves its validity disk")
        h = -self.R + math.sqrt(arg)
        return np.asarray(x, dtype=float) + basis @ w + h * self.normal(x)

    def chart_metric(self, x, basis, w) -> np.ndarray:
        """Induced metric at chart coordinates w."""
        w = np.asarray(w, dtype=float)
        arg = self.R**2 - self.eps * float(w @ w)
        if arg <= 0.0:
            raise DomainError("orthographic chart leaves its validity disk")
        dh = -self.eps * w / math.sqrt(arg)
        jac = basis + np.outer(self.normal(x), dh)
        return jac.T @ (self.eta_diagonal[:, None] * jac)

    def field_in_chart(self, field, x, basis, w) -> np.ndarray:
        """Chart components of a tangent vector field at chart point w."""
        p = self.chart_point(x, basis, w)
        v = np.asarray(field(p), dtype=float)
        warg = self.R**2 - self.eps * float(np.asarray(w) @ np.asarray(w))
        dh = -self.eps * np.asarray(w, dtype=float) / math.sqrt(warg)
        jac = basis + np.outer(self.normal(x), dh)
        gram = jac.T @ (self.eta_diagonal[:, None] * jac)
        rhs = jac.T @ (self.eta_diagonal * v)
        return np.linalg.solve(gram, rhs)


def surface_model(K: float, n: int) -> HypersurfaceModel:
    """Model from curvature label K = eps/R^2."""
    if K == 0.0:
        raise ConfigError("flat limit has no quadric model")
    eps = 1 if K > 0 else -1
    return HypersurfaceModel(n=n, R=1.0 / math.sqrt(abs(K)), eps=eps)


def surface_project(model: HypersurfaceModel, C, x) -> np.ndarray:
    """Tangential part of a constant ambient vector at x on the surface."""
    model.require_on_surface(x)
    C = np.asarray(C, dtype=float)
    return C - model.normal_coefficient(C, x) * model.normal(x)


def projection_field(model: HypersurfaceModel, U) -> Callable[[np.ndarray], np.ndarray]:
    """The projected field p -> U - eps <U, p> p / R^2 (smooth ambient extension)."""
    U = np.asarray(U, dtype=float)

    def field(p):
        p = np.asarray(p, dtype=float)
        return U - model.eps * model.inner(U, p) / model.R**2 * p

    return field


def lie_derivative_of_metric(
    model: HypersurfaceModel,
    field,
    x,
    h: float = 1e-2,
    order: int = 4,
) -> np.ndarray:
    """(L_field g')_ij at x in an orthographic chart, by stencils.

    Standard formula u^k d_k g_ij + g_kj d_i u^k + g_ik d_j u^k evaluated
    at the chart origin, where u are the chart components of the field.
    """
    x = np.asarray(x, dtype=float)
    model.require_on_surface(x)
    basis = model.tangent_basis(x)
    n = model.n
    h = h * model.R
    stencil = _O4_FIRST if order == 4 else _O2_FIRST
    g0 = model.chart_metric(x, basis, np.zeros(n))
    u0 = model.field_in_chart(field, x, basis, np.zeros(n))
    dg = np.zeros((n, n, n))
    du = np.zeros((n, n))
    for a in range(n):
        for off, wgt in stencil:
            w = np.zeros(n)
            w[a] = off * h
            dg[a] += wgt * model.chart_metric(x, basis, w)
            du[a] += wgt * model.field_in_chart(field, x, basis, w)
        dg[a] /= h
        du[a] /= h
    lie = np.einsum("k,kij->ij", u0, dg)
    lie += np.einsum("kj,ik->ij", g0, du) + np.einsum("ik,jk->ij", g0, du)
    return lie


@dataclass
class LieDerivativeReport:
    lie_matrix: np.ndarray
    chart_metric: np.ndarray
    lambda_fitted: float
    lambda_expected: float
    conformal_residual: float  # max |L g' - 2 lambda_fit g'|
    killing: bool


def lie_derivative_check(
    model: HypersurfaceModel,
    U,
    x,
    h: float = 1e-2,
    tol: float = 1e-6,
) -> LieDerivativeReport:
    """Conformal-Killing verification for the projection of a constant vector.

    The fitted characteristic function must equal -<U, N>/R (with the
    eps-normalized inner product); it vanishes exactly when the projected
    field is Killing at x.
    """
    x = np.asarray(x, dtype=float)
    field = projection_field(model, U)
    lie = lie_derivative_of_metric(model, field, x, h=h)
    g0 = model.chart_metric(x, model.tangent_basis(x), np.zeros(model.n))
    ginv = np.linalg.inv(g0)
    lam = float(np.einsum("ij,ij->", ginv, lie)) / (2.0 * model.n)
    residual = float(np.abs(lie - 2.0 * lam * g0).max())
    lam_expected = -model.normal_coefficient(U, x) / model.R
    return LieDerivativeReport(
        lie_matrix=lie,
        chart_metric=g0,
        lambda_fitted=lam,
        lambda_expected=lam_expected,
        conformal_residual=residual,
        killing=abs(lam) < tol and float(np.abs(lie).max()) < tol,
    )


@dataclass
class CommutatorResult:
    vector: np.ndarray  # value at x
    generator_matrix: np.ndarray  # W(p) = matrix @ p, ambient rotation generator
    tangency: float  # <W(x), N(x)> with the eps-normalized product


def projected_commutator(model: HypersurfaceModel, U, V, x) -> CommutatorResult:
    """Closed form of [U_bar, V_bar] at x: (eps/R^2) ((U.x) V - (V.x) U).

    The result is the value of a linear ambient rotation field (generator
    of the eta-orthogonal group), always tangent to the surface; for the
    sphere (eps = +1) the prefactor reduces to 1/R^2.
    """
    x = np.asarray(x, dtype=float)
    model.require_on_surface(x)
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    pref = model.eps / model.R**2
    eta = model.eta_diagonal
    mat = pref * (np.outer(V, eta * U) - np.outer(U, eta * V))
    w = mat @ x
    tangency = model.eps * model.inner(w, model.normal(x))
    return CommutatorResult(vector=w, generator_matrix=mat, tangency=tangency)


def flow_commutator_fd(model: HypersurfaceModel, U, V, x, h: float = 1e-4) -> np.ndarray:
    """Finite-difference oracle for [U_bar, V_bar](x) from the field flows."""
    x = np.asarray(x, dtype=float)
    fu = projection_field(model, U)
    fv = projection_field(model, V)
    n1 = model.ambient_dim
    h = h * model.R

    def dfield(f, p):
        jac = np.zeros((n1, n1))
        for a in range(n1):
            for off, wgt in _O4_FIRST:
                q = p.copy()
                q[a] += off * h
                jac[:, a] += wgt * f(q)
            jac[:, a] /= h
        return jac

    ju = dfield(fu, x)
    jv = dfield(fv, x)
    return jv @ fu(x) - ju @ fv(x)
