"""Matrix realization of the rotation generators of so(p, q).

Generators carry Gaussian-integer entries (0, +-1 times i), so the
algebra checks (commutation relations, Jacobi identity, quadratic
Casimir) are exact in complex double precision: every intermediate value
is an integer or half-integer well inside the exactly representable
range.

The matrix commutation relations are

    [L_AB, L_CD] = -i (eta_AC L_BD + eta_AD L_CB + eta_BC L_DA + eta_BD L_AC)

with defining matrices (L_AB)^C_D = i (eta_BD delta^C_A - eta_AD
delta^C_B).  A differential-operator realization of the same algebra has
coefficient matrices of the opposite global sign (matrix and operator
realizations are anti-isomorphic); see CONVENTIONS.md.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class GeneratorSet:
    """Defining-representation generators L[A, B] of so(p, q), n = p + q.

    ``generators`` has shape (n, n, n, n): the first two indices label the
    plane (antisymmetric in them), the last two are matrix (row, column).
    Normalization: unit action scale, factor i kept explicit.
    """

    p: int
    q: int
    generators: np.ndarray

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def eta_diagonal(self) -> np.ndarray:
        return np.concatenate([-np.ones(self.p), np.ones(self.q)])

    def matrix(self, a: int, b: int) -> np.ndarray:
        return self.generators[a, b]

    def planes(self):
        return combinations(range(self.n), 2)

    def plane_antisymmetry_residual(self) -> float:
        return float(
            np.abs(self.generators + np.einsum("abij->baij", self.generators)).max()
        )


def so_generators(p: int, q: int) -> GeneratorSet:
    """Defining representation of so(p, q); needs p + q >= 2.

    The global sign is fixed so the displayed commutation relations hold
    with exactly zero residual; the opposite sign realizes the
    anti-isomorphic differential-operator algebra.
    """
    if p < 0 or q < 0 or p + q < 2:
        raise ConfigError("so(p, q) needs p, q >= 0 and p + q >= 2")
    n = p + q
    eta = np.concatenate([-np.ones(p), np.ones(q)])
    gens = np.zeros((n, n, n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            m = np.zeros((n, n), dtype=complex)
            m[a, b] += 1j * eta[b]  # (L_AB)^C_D = i eta_BD delta^C_A ...
            m[b, a] -= 1j * eta[a]  # ... - i eta_AD delta^C_B
            gens[a, b] = m
    return GeneratorSet(p=p, q=q, generators=gens)


def commutation_check(g: GeneratorSet) -> float:
    """Max residual of the commutation relations over all index quadruples."""
    eta = g.eta_diagonal
    L = g.generators
    worst = 0.0
    n = g.n
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    lhs = L[a, b] @ L[c, d] - L[c, d] @ L[a, b]
                    rhs = -1j * (
                        (eta[a] if a == c else 0.0) * L[b, d]
                        + (eta[a] if a == d else 0.0) * L[c, b]
                        + (eta[b] if b == c else 0.0) * L[d, a]
                        + (eta[b] if b == d else 0.0) * L[a, c]
                    )
                    worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def jacobi_residual(g: GeneratorSet) -> float:
    """Max residual of [[La, Lb], Lc] + cyclic over generator triples."""
    mats = [g.matrix(a, b) for a, b in g.planes()]

    def brk(x, y):
        return x @ y - y @ x

    worst = 0.0
    for i in range(len(mats)):
        for j in range(len(mats)):
            for k in range(len(mats)):
                s = (
                    brk(brk(mats[i], mats[j]), mats[k])
                    + brk(brk(mats[j], mats[k]), mats[i])
                    + brk(brk(mats[k], mats[i]), mats[j])
                )
                worst = max(worst, float(np.abs(s).max()))
    return worst


def eta_antisymmetry_residual(g: GeneratorSet) -> float:
    """Max residual of (eta L)^T = -(eta L) over all generators."""
    eta = np.diag(g.eta_diagonal)
    worst = 0.0
    for a, b in g.planes():
        m = eta @ g.matrix(a, b)
        worst = max(worst, float(np.abs(m + m.T).max()))
    return worst


def casimir(g: GeneratorSet):
    """(C2, lambda): C2 = (1/2) eta^AC eta^BD L_AB L_CD; lambda when scalar.

    lambda = trace(C2)/n is returned when ||C2 - lambda I|| < 1e-10,
    otherwise None.
    """
    eta = g.eta_diagonal
    n = g.n
    c2 = np.zeros((n, n), dtype=complex)
    for a in range(n):
        for b in range(n):
            c2 += 0.5 * eta[a] * eta[b] * (g.generators[a, b] @ g.generators[a, b])
    lam = complex(np.trace(c2)) / n
    if float(np.abs(c2 - lam * np.eye(n)).max()) < 1e-10:
        return c2, lam.real
    return c2, None


def casimir_commutes_residual(g: GeneratorSet) -> float:
    c2, _ = casimir(g)
    worst = 0.0
    for a, b in g.planes():
        m = g.matrix(a, b)
        worst = max(worst, float(np.abs(c2 @ m - m @ c2).max()))
    return worst


def curvature_generator_identity(
    R: float,
    g: GeneratorSet,
    curvature: np.ndarray = None,
) -> float:
    """Residual between curvature-built generators and the eta pattern.

    The coordinate action i R^2 R_ABCD eta^CM x^D with the constant-
    curvature frame tensor of radius R reproduces the flat eta-product
    pattern exactly (R^2 cancels the 1/R^2 inside the curvature); a
    perturbed curvature input reports its deviation instead of erroring.
    """
    if R <= 0:
        raise ConfigError("radius must be positive")
    eta = g.eta_diagonal
    n = g.n
    if curvature is None:
        e = np.diag(eta)
        curvature = (
            np.einsum("ad,bc->abcd", e, e) - np.einsum("ac,bd->abcd", e, e)
        ) / R**2
    eta_inv = 1.0 / eta
    worst = 0.0
    onehot = np.eye(n)
    for a in range(n):
        for b in range(n):
            built = 1j * R**2 * np.einsum("md,m->md", curvature[a, b], eta_inv)
            pattern = np.zeros((n, n), dtype=complex)
            pattern[b] += 1j * eta * onehot[a]
            pattern[a] -= 1j * eta * onehot[b]
            worst = max(worst, float(np.abs(built - pattern).max()))
    return worst
