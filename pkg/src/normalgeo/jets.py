"""Truncated multivariate Taylor arithmetic (forward-mode derivatives).

A :class:`Jet` stores the coefficients of a polynomial in ``nvars``
variables truncated at total degree ``degree``.  Propagating jets through
an expression yields the exact value and all mixed partial derivatives up
to that degree in one evaluation, which is what the ``dual_forward``
differentiation strategy uses for expression-backed metrics.  Coefficient
``c_alpha`` holds ``d^alpha f / alpha!``; partial derivatives are recovered
by multiplying with ``alpha!``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def _algebra(nvars: int, degree: int):
    """Monomial table and multiplication plan for (nvars, degree)."""
    monomials = []

    def rec(prefix, remaining, budget):
        if remaining == 0:
            monomials.append(tuple(prefix))
            return
        for k in range(budget + 1):
            rec(prefix + [k], remaining - 1, budget - k)

    for total in range(degree + 1):
        start = len(monomials)
        rec([], nvars, total)
        # rec enumerates all degrees <= total; keep only the new ones
        monomials[start:] = [m for m in monomials[start:] if sum(m) == total]

    index = {m: i for i, m in enumerate(monomials)}
    pairs = []
    for i, a in enumerate(monomials):
        for j, b in enumerate(monomials):
            if sum(a) + sum(b) <= degree:
                target = tuple(x + y for x, y in zip(a, b))
                pairs.append((i, j, index[target]))
    mul_i = np.array([p[0] for p in pairs], dtype=np.intp)
    mul_j = np.array([p[1] for p in pairs], dtype=np.intp)
    mul_k = np.array([p[2] for p in pairs], dtype=np.intp)
    factorials = np.array(
        [math.prod(math.factorial(k) for k in m) for m in monomials], dtype=float
    )
    return monomials, index, (mul_i, mul_j, mul_k), factorials


class Jet:
    """Scalar of a truncated polynomial algebra; supports numpy-style math."""

    __slots__ = ("nvars", "degree", "c")

    def __init__(self, nvars, degree, coeffs):
        self.nvars = nvars
        self.degree = degree
        self.c = coeffs

    # -- construction -------------------------------------------------
    @staticmethod
    def constant(value, nvars, degree):
        mono, _, _, _ = _algebra(nvars, degree)
        c = np.zeros(len(mono))
        c[0] = value
        return Jet(nvars, degree, c)

    @staticmethod
    def variable(value, which, nvars, degree):
        mono, index, _, _ = _algebra(nvars, degree)
        c = np.zeros(len(mono))
        c[0] = value
        if degree >= 1:
            unit = tuple(1 if k == which else 0 for k in range(nvars))
            c[index[unit]] = 1.0
        return Jet(nvars, degree, c)

    @staticmethod
    def variables(point, degree):
        point = np.asarray(point, dtype=float)
        n = point.size
        return [Jet.variable(point[k], k, n, degree) for k in range(n)]

    # -- extraction ----------------------------------------------------
    @property
    def value(self):
        return self.c[0]

    def derivative(self, alpha):
        """Partial derivative d^alpha f for a multi-index tuple."""
        mono, index, _, fact = _algebra(self.nvars, self.degree)
        i = index[tuple(alpha)]
        return self.c[i] * fact[i]

    def gradient(self):
        n = self.nvars
        return np.array(
            [self.derivative(tuple(1 if k == j else 0 for k in range(n))) for j in range(n)]
        )

    # -- ring operations -------------------------------------------------
    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(float(other), self.nvars, self.degree)

    def __add__(self, other):
        other = self._lift(other)
        return Jet(self.nvars, self.degree, self.c + other.c)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        return Jet(self.nvars, self.degree, self.c - other.c)

    def __rsub__(self, other):
        other = self._lift(other)
        return Jet(self.nvars, self.degree, other.c - self.c)

    def __neg__(self):
        return Jet(self.nvars, self.degree, -self.c)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.nvars, self.degree, self.c * float(other))
        _, _, (mi, mj, mk), _ = _algebra(self.nvars, self.degree)
        out = np.zeros_like(self.c)
        np.add.at(out, mk, self.c[mi] * other.c[mj])
        return Jet(self.nvars, self.degree, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.nvars, self.degree, self.c / float(other))
        return self * other._reciprocal()

    def __rtruediv__(self, other):
        return self._lift(other) * self._reciprocal()

    def __pow__(self, expo):
        if isinstance(expo, Jet):
            return (expo * self.log()).exp()
        if isinstance(expo, int) or (isinstance(expo, float) and expo.is_integer()):
            k = int(expo)
            if k < 0:
                return self._reciprocal() ** (-k)
            result = Jet.constant(1.0, self.nvars, self.degree)
            base = self
            while k:
                if k & 1:
                    result = result * base
                base = base * base
                k >>= 1
            return result
        u0 = self.value
        derivs = [u0 ** expo]
        fac = 1.0
        for k in range(1, self.degree + 1):
            fac *= expo - (k - 1)
            derivs.append(fac * u0 ** (expo - k))
        return self._compose(derivs)

    # -- analytic functions ----------------------------------------------
    def _nilpotent(self):
        c = self.c.copy()
        c[0] = 0.0
        return Jet(self.nvars, self.degree, c)

    def _compose(self, derivs):
        """sum_k derivs[k]/k! * (self - value)^k, truncated."""
        u = self._nilpotent()
        result = Jet.constant(derivs[0], self.nvars, self.degree)
        term = Jet.constant(1.0, self.nvars, self.degree)
        fact = 1.0
        for k in range(1, self.degree + 1):
            term = term * u
            fact *= k
            result = result + term * (derivs[k] / fact)
        return result

    def _reciprocal(self):
        u0 = self.value
        if u0 == 0.0:
            raise ZeroDivisionError("jet with zero value part")
        derivs = [(-1.0) ** k * math.factorial(k) / u0 ** (k + 1) for k in range(self.degree + 1)]
        return self._compose(derivs)

    def exp(self):
        e = math.exp(self.value)
        return self._compose([e] * (self.degree + 1))

    def log(self):
        u0 = self.value
        if u0 <= 0.0:
            raise ValueError("log of non-positive jet value")
        derivs = [math.log(u0)]
        for k in range(1, self.degree + 1):
            derivs.append((-1.0) ** (k - 1) * math.factorial(k - 1) / u0 ** k)
        return self._compose(derivs)

    def sqrt(self):
        return self ** 0.5

    def _cycle(self, f0, f1):
        # derivative cycle for sin/cos families: f'' = -f
        seq = [f0, f1]
        for _ in range(2, self.degree + 1):
            seq.append(-seq[-2])
        return self._compose(seq)

    def sin(self):
        return self._cycle(math.sin(self.value), math.cos(self.value))

    def cos(self):
        return self._cycle(math.cos(self.value), -math.sin(self.value))

    def sinh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        seq = [s, c]
        for _ in range(2, self.degree + 1):
            seq.append(seq[-2])
        return self._compose(seq)

    def cosh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        seq = [c, s]
        for _ in range(2, self.degree + 1):
            seq.append(seq[-2])
        return self._compose(seq)

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"Jet(value={self.value!r}, nvars={self.nvars}, degree={self.degree})"


def jet_partials(jet, upto):
    """Unpack a jet into (value, grad, hess, third) tensors up to ``upto``.

    Returned arrays are true partial-derivative tensors, symmetric in their
    derivative indices.
    """
    n = jet.nvars
    out = [jet.value]
    if upto >= 1:
        out.append(jet.gradient())
    if upto >= 2:
        h = np.zeros((n, n))
        for a in range(n):
            for b in range(a, n):
                alpha = [0] * n
                alpha[a] += 1
                alpha[b] += 1
                h[a, b] = h[b, a] = jet.derivative(tuple(alpha))
        out.append(h)
    if upto >= 3:
        t = np.zeros((n, n, n))
        for a in range(n):
            for b in range(a, n):
                for c in range(b, n):
                    alpha = [0] * n
                    alpha[a] += 1
                    alpha[b] += 1
                    alpha[c] += 1
                    v = jet.derivative(tuple(alpha))
                    for perm in {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}:
                        t[perm] = v
        out.append(t)
    return tuple(out)
