"""Differentiation strategies for metric and scalar fields.

Two interchangeable backends provide partial derivatives up to third
order at a point:

* ``central_fd``: composed central-difference stencils of order 2 or 4,
  relative step ``h * max(1, |p|_inf)``.  Works for any callable field.
* ``dual_forward``: truncated-Taylor (jet) propagation through the
  component expressions; exact to roundoff.  Available only for
  expression-backed fields.

Indicative accuracy for the default order-4 stencils on smooth O(1)
fields: ~1e-9 on first derivatives, ~1e-8 on second, ~1e-6 on third.
The documented test tolerances (1e-6 on first-derivative quantities,
1e-4 on third) leave headroom over these floors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .jets import jet_partials
from .metrics import MetricField

# order -> offsets/weights of the first-derivative central stencil (unit step)
_STENCILS = {
    2: ((-1, 1), (-0.5, 0.5)),
    4: ((-2, -1, 1, 2), (1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0)),
}


@dataclass(frozen=True)
class DifferentiationStrategy:
    """How to differentiate a field: stencil kind, accuracy order, step."""

    kind: str = "central_fd"  # or "dual_forward"
    order: int = 4
    step: float = 2e-3

    def __post_init__(self):
        if self.kind not in ("central_fd", "dual_forward"):
            raise ConfigError(f"unknown differentiation kind {self.kind!r}")
        if self.kind == "central_fd" and self.order not in _STENCILS:
            raise ConfigError("central_fd order must be 2 or 4")
        if self.step <= 0:
            raise ConfigError("step must be positive")


def default_strategy(m: MetricField) -> DifferentiationStrategy:
    """Dual-forward for expression-backed metrics, order-4 stencils otherwise."""
    if m.expression_backed:
        return DifferentiationStrategy(kind="dual_forward")
    return DifferentiationStrategy(kind="central_fd", order=4, step=2e-3)


def fd_tolerance(strategy: DifferentiationStrategy, derivative_order: int) -> float:
    """Residual tolerance matched to the strategy (used by identity checks)."""
    if strategy.kind == "dual_forward":
        return 1e-10
    if derivative_order <= 1:
        return 1e-6 if strategy.order == 4 else 1e-3
    if derivative_order == 2:
        return 1e-5 if strategy.order == 4 else 1e-2
    return 1e-4 if strategy.order == 4 else 5e-2


def _compose_offsets(axes, offsets, weights, dim):
    """Tensor-compose 1D stencils along ``axes`` into offset/weight pairs."""
    table = {(0,) * dim: 1.0}
    for ax in axes:
        new = {}
        for off, w in table.items():
            for o, ws in zip(offsets, weights):
                shifted = list(off)
                shifted[ax] += o
                key = tuple(shifted)
                new[key] = new.get(key, 0.0) + w * ws
        table = new
    return table


class _PointCache:
    """Batch-evaluates a vectorized field at integer stencil offsets."""

    def __init__(self, func, p, h, domain=None):
        self.func = func
        self.p = np.asarray(p, dtype=float)
        self.h = h
        self.domain = domain
        self.values = {}

    def gather(self, needed):
        missing = [off for off in needed if off not in self.values]
        if not missing:
            return
        pts = self.p + self.h * np.array(missing, dtype=float)
        if self.domain is not None:
            for off, q in zip(missing, pts):
                if not self.domain.contains(q, pad=self.domain.margin):
                    raise DomainError(
                        f"stencil point {q.tolist()} exits the chart domain"
                    )
        vals = np.asarray(self.func(pts), dtype=float)
        for off, v in zip(missing, vals):
            self.values[off] = v

    def combine(self, table):
        self.gather(table.keys())
        out = None
        for off, w in table.items():
            term = w * self.values[off]
            out = term if out is None else out + term
        return out


def _fd_partials(func, p, dim, strategy, upto, domain, value_shape):
    offsets, weights = _STENCILS[strategy.order]
    p = np.asarray(p, dtype=float)
    h = strategy.step * max(1.0, float(np.max(np.abs(p))))
    cache = _PointCache(func, p, h, domain)
    out = [cache.combine({(0,) * dim: 1.0})]
    if upto >= 1:
        first = np.empty((dim,) + value_shape)
        for a in range(dim):
            first[a] = cache.combine(_compose_offsets([a], offsets, weights, dim)) / h
        out.append(first)
    if upto >= 2:
        second = np.empty((dim, dim) + value_shape)
        for a in range(dim):
            for b in range(a, dim):
                t = _compose_offsets([a, b], offsets, weights, dim)
                second[a, b] = second[b, a] = cache.combine(t) / h**2
        out.append(second)
    if upto >= 3:
        third = np.empty((dim, dim, dim) + value_shape)
        for a in range(dim):
            for b in range(a, dim):
                for c in range(b, dim):
                    t = _compose_offsets([a, b, c], offsets, weights, dim)
                    val = cache.combine(t) / h**3
                    for perm in {(a, b, c), (a, c, b), (b, a, c),
                                 (b, c, a), (c, a, b), (c, b, a)}:
                        third[perm] = val
        out.append(third)
    return tuple(out)


def metric_partials(m: MetricField, p, strategy: DifferentiationStrategy, upto: int):
    """(G, dG, d2G, d3G)[:upto+1] at ``p``; dG[a, i, j] = d_a G_ij, etc."""
    p = np.asarray(p, dtype=float)
    if strategy.kind == "dual_forward":
        if not m.expression_backed:
            raise ConfigError(
                "dual_forward requires an expression-backed metric; "
                f"{m.label!r} has no component table"
            )
        jets = m.component_jets(p, upto)
        n = m.dim
        out = [np.empty((n, n)) if k == 0 else np.empty((n,) * k + (n, n))
               for k in range(upto + 1)]
        for i in range(n):
            for j in range(n):
                parts = jet_partials(jets[i, j], upto)
                out[0][i, j] = parts[0]
                if upto >= 1:
                    out[1][:, i, j] = parts[1]
                if upto >= 2:
                    out[2][:, :, i, j] = parts[2]
                if upto >= 3:
                    out[3][:, :, :, i, j] = parts[3]
        return tuple(out)
    return _fd_partials(m.func, p, m.dim, strategy, upto, m.domain, (m.dim, m.dim))


class ScalarField:
    """Scalar function on a chart, optionally expression-backed."""

    def __init__(self, func_or_expr, dim, label="scalar"):
        from .expressions import Expression

        self.dim = dim
        self.label = label
        if isinstance(func_or_expr, ScalarField):
            self.expr = func_or_expr.expr
            self.func = func_or_expr.func
        elif isinstance(func_or_expr, str):
            self.expr = Expression(func_or_expr, dim)

            def func(pts):
                pts = np.asarray(pts, dtype=float)
                coords = tuple(pts[..., k] for k in range(dim))
                return np.asarray(self.expr(coords), dtype=float) + np.zeros(pts.shape[:-1])

            self.func = func
        elif isinstance(func_or_expr, Expression):
            self.expr = func_or_expr

            def func(pts):
                pts = np.asarray(pts, dtype=float)
                coords = tuple(pts[..., k] for k in range(dim))
                return np.asarray(self.expr(coords), dtype=float) + np.zeros(pts.shape[:-1])

            self.func = func
        else:
            self.expr = None
            self.func = func_or_expr

    def __call__(self, pts):
        return self.func(np.asarray(pts, dtype=float))

    @property
    def expression_backed(self):
        return self.expr is not None


def scalar_partials(f: ScalarField, p, strategy: DifferentiationStrategy, upto: int):
    """(f, df, d2f, d3f)[:upto+1] at ``p`` for a scalar field."""
    p = np.asarray(p, dtype=float)
    if strategy.kind == "dual_forward" and f.expression_backed:
        from .jets import Jet

        jet = f.expr.jet(p, upto)
        if not isinstance(jet, Jet):
            jet = Jet.constant(float(jet), f.dim, upto)
        return jet_partials(jet, upto)
    return _fd_partials(f.func, p, f.dim, strategy, upto, None, ())
