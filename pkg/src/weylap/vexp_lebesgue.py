"""Variable-exponent Lebesgue machinery.

Everything here integrates with a tensor midpoint rule.  Each axis of the
region is first split at the integrand's declared discontinuities and the
nodes are spread over the pieces in proportion to their length, so for
piecewise-constant integrands the rule is exact and no refinement is done.
For other integrands the node count is doubled until the relative change
drops below ``refine_tol``.
"""
from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .function_model import Box, FunctionHandle, as_points


class BracketError(ValueError):
    """No scaling brings the modular below one at this resolution."""


class DegenerateRegionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class QuadratureConfig:
    """Midpoint-rule settings.

    ``points_per_unit`` raises the per-axis node count on long cells so that
    oscillatory integrands keep a fixed sampling density.
    """

    points_per_axis: int = 32
    refine_tol: float = 1e-9
    max_refinements: int = 10
    points_per_unit: float = 0.0
    max_nodes: int = 4_000_000
    rule: str = "midpoint"

    def __post_init__(self):
        if self.points_per_axis < 2:
            raise ValueError("points_per_axis must be at least 2")
        if self.refine_tol <= 0:
            raise ValueError("refine_tol must be positive")
        if self.rule != "midpoint":
            raise ValueError("only the midpoint rule is supported")

    def axis_count(self, width: float) -> int:
        return max(self.points_per_axis, math.ceil(self.points_per_unit * width))

    def fingerprint(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Exponent ``p(x)`` with values in ``[1, inf]`` and its essential bounds."""

    func: Callable[[np.ndarray], np.ndarray] | None
    p_minus: float
    p_plus: float
    label: str = "p"

    def __post_init__(self):
        if self.p_minus < 1 or self.p_plus < self.p_minus:
            raise ValueError(f"invalid exponent bounds [{self.p_minus}, {self.p_plus}]")

    @classmethod
    def constant(cls, p: float) -> "ExponentField":
        p = float(p)
        return cls(None, p, p, label=f"{p:g}")

    @classmethod
    def from_callable(cls, func, p_minus: float, p_plus: float, label: str = "p(x)"):
        return cls(func, float(p_minus), float(p_plus), label)

    @classmethod
    def from_handle(cls, handle: FunctionHandle, sample_box: Box, per_axis: int = 64):
        """Exponent read off a real-valued handle (e.g. an ingested grid)."""
        from .function_model import lattice_points

        step = float(np.max(sample_box.widths)) / per_axis
        pts = lattice_points(sample_box.lo, sample_box.hi, step)
        vals = np.real(handle(pts))
        return cls(
            lambda x: np.real(handle(x)),
            float(vals.min()),
            float(vals.max()),
            label=handle.label,
        )

    @property
    def is_constant(self) -> bool:
        return self.func is None

    def __call__(self, points) -> np.ndarray:
        if self.func is None:
            return np.full(len(points), self.p_minus)
        vals = np.asarray(self.func(points), dtype=float).reshape(-1)
        slack = 1e-12 * max(1.0, abs(self.p_minus))
        if np.any(vals < 1) or np.any(vals < self.p_minus - slack) or np.any(vals > self.p_plus + slack):
            raise ValueError(f"exponent {self.label} leaves [{self.p_minus}, {self.p_plus}]")
        return vals


def as_exponent(p) -> ExponentField:
    return p if isinstance(p, ExponentField) else ExponentField.constant(p)


def _conj(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


def conjugate_exponent(p) -> ExponentField:
    """Pointwise conjugate ``q`` with ``1/p + 1/q = 1``."""
    p = as_exponent(p)
    if p.is_constant:
        return ExponentField.constant(_conj(p.p_minus))

    def q(x):
        pv = p(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(pv == 1, np.inf, np.where(np.isinf(pv), 1.0, pv / (pv - 1)))
        return out

    return ExponentField(q, _conj(p.p_plus), _conj(p.p_minus), label=f"conj({p.label})")


def phi_p(p_value, t):
    """``t**p`` for finite ``p``; the 0/inf step at ``t = 1`` for ``p = inf``."""
    t_arr = np.asarray(t, dtype=float)
    p_arr = np.asarray(p_value, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("phi_p is defined for t >= 0 only")
    with np.errstate(over="ignore"):
        out = np.where(
            np.isinf(p_arr),
            np.where(t_arr <= 1, 0.0, np.inf),
            np.power(t_arr, np.where(np.isinf(p_arr), 1.0, p_arr)),
        )
    return float(out) if out.ndim == 0 else out


# quadrature ----------------------------------------------------------------


def _axis_nodes(a: float, b: float, count: int, breaks: np.ndarray):
    if b <= a:
        return np.array([a]), np.array([0.0])
    edges = np.concatenate([[a], breaks, [b]])
    lengths = np.diff(edges)
    keep = lengths > 0
    edges_lo, lengths = edges[:-1][keep], lengths[keep]
    width = b - a
    nodes, weights = [], []
    for lo, ln in zip(edges_lo, lengths):
        k = max(1, int(round(count * ln / width)))
        h = ln / k
        nodes.append(lo + h * (np.arange(k) + 0.5))
        weights.append(np.full(k, h))
    return np.concatenate(nodes), np.concatenate(weights)


def _axis_rule(i, a, b, count, breaks_fn):
    br = np.empty(0) if breaks_fn is None else np.asarray(breaks_fn(i, a, b), dtype=float)
    br = np.unique(br[(br > a) & (br < b)])
    return _axis_nodes(a, b, count, br)


def cube_rule(box: Box, counts, breaks_fn=None, cache: dict | None = None):
    """Tensor midpoint nodes and weights on ``box``.

    ``breaks_fn(axis, a, b)`` gives the discontinuities to respect along
    each axis.  ``cache`` memoises the one-dimensional rules, which lattice
    cells share.  Returns ``(nodes (m, n), weights (m,))``.
    """
    n = box.n
    counts = [int(c) for c in counts] if np.ndim(counts) else [int(counts)] * n
    nodes = weights = None
    for i, (a, b) in enumerate(zip(box.lo, box.hi)):
        if cache is None:
            x, w = _axis_rule(i, a, b, counts[i], breaks_fn)
        else:
            key = (i, a, b, counts[i])
            if key not in cache:
                cache[key] = _axis_rule(i, a, b, counts[i], breaks_fn)
            x, w = cache[key]
        if nodes is None:
            nodes, weights = x.reshape(-1, 1), w
            continue
        # first axis slowest, as in an 'ij' meshgrid
        m, k = len(weights), len(w)
        nodes = np.hstack([np.repeat(nodes, k, axis=0), np.tile(x, m).reshape(-1, 1)])
        weights = np.repeat(weights, k) * np.tile(w, m)
    return nodes, weights


def _counts(box: Box, quad: QuadratureConfig, level: int) -> np.ndarray:
    base = np.array([quad.axis_count(w) for w in box.widths])
    counts = base * (2**level)
    total = float(np.prod(counts.astype(float)))
    if total > quad.max_nodes:
        shrink = (quad.max_nodes / total) ** (1.0 / box.n)
        counts = np.maximum(2, np.floor(counts * shrink)).astype(int)
    return counts


def _level_counts(region: Box, quad: QuadratureConfig, level: int, exact: bool):
    # piecewise-constant data: one node per piece is already exact
    return 2 if exact else _counts(region, quad, level)


def sample_region(f: FunctionHandle, region: Box, quad: QuadratureConfig, level: int, x=None,
                  exact: bool = False):
    """Nodes, weights and ``|f|`` samples at refinement ``level``."""
    nodes, weights = cube_rule(region, _level_counts(region, quad, level, exact), f.breakpoints)
    return nodes, weights, f.norms(nodes, x)


def refine(evaluate, quad: QuadratureConfig, exact: bool = False):
    """Run ``evaluate(level)`` with grid doubling.

    Returns ``(value, trace)`` where ``trace`` lists ``(level, value)``.
    """
    value = evaluate(0)
    trace = [(0, value)]
    if exact:
        return value, trace
    for level in range(1, quad.max_refinements + 1):
        new = evaluate(level)
        trace.append((level, new))
        scale = max(abs(new), 1e-300)
        done = abs(new - value) <= quad.refine_tol * scale or (
            math.isinf(new) and math.isinf(value)
        )
        value = new
        if done:
            break
    return value, trace


def integrate(f: FunctionHandle, region: Box, quad: QuadratureConfig = DEFAULT_QUAD, x=None):
    """Midpoint integral of ``f`` (complex or vector valued) over ``region``."""

    def evaluate(level):
        nodes, weights = cube_rule(region, _counts(region, quad, level), f.breakpoints)
        vals = f(nodes, x)
        if vals.ndim == 1:
            # compensated sums keep long oscillatory means accurate to rounding
            terms = weights * vals
            if np.iscomplexobj(terms):
                return complex(math.fsum(terms.real), math.fsum(terms.imag))
            return math.fsum(terms)
        return np.tensordot(weights, vals, axes=(0, 0))

    def scalarised(level):
        return complex(np.sum(evaluate(level)))

    if f.piecewise_constant:
        return evaluate(0)
    # refine on a scalar summary, then return the full value at that level
    _, trace = refine(lambda lv: abs(scalarised(lv)), quad)
    return evaluate(trace[-1][0])


# modular and norm ------------------------------------------------------------


def _modular_from_samples(a, w, pv) -> float:
    finite = ~np.isinf(pv)
    if np.any(~finite & (a > 1) & (w > 0)):
        return math.inf
    with np.errstate(over="ignore"):
        return float(math.fsum(w[finite] * np.power(a[finite], pv[finite])))


def _is_exact(f: FunctionHandle, p: ExponentField) -> bool:
    return f.piecewise_constant and p.is_constant


def modular(f: FunctionHandle, p, region: Box, quad: QuadratureConfig = DEFAULT_QUAD,
            x=None, full_output: bool = False):
    """Midpoint approximation of ``integral of phi_p(x)(|f(x)|) dx``."""
    p = as_exponent(p)
    if not region.bounded:
        raise ValueError("modular needs a bounded region")

    def evaluate(level):
        nodes, w, a = sample_region(f, region, quad, level, x, exact)
        return _modular_from_samples(a, w, p(nodes))

    exact = _is_exact(f, p)
    value, trace = refine(evaluate, quad, exact=exact)
    if full_output:
        return value, {"trace": trace, "quadrature": quad.fingerprint()}
    return value


def lp_norm_samples(a: np.ndarray, w: np.ndarray, p: float) -> float:
    """Classical ``L^p`` norm from midpoint samples (constant ``p``)."""
    if math.isinf(p):
        return float(np.max(a[w > 0])) if np.any(w > 0) else 0.0
    if p == 1:
        return float(math.fsum(w * a))
    amax = float(np.max(a)) if a.size else 0.0
    if amax == 0:
        return 0.0
    # scale first so large p does not overflow
    return amax * float(math.fsum(w * (a / amax) ** p)) ** (1.0 / p)


def luxemburg_from_samples(a: np.ndarray, w: np.ndarray, pv: np.ndarray,
                           tol: float = 1e-12, p_minus: float | None = None) -> float:
    """``inf{lam > 0 : rho(f / lam) <= 1}`` for sampled data."""
    pos = w > 0
    a, w, pv = a[pos], w[pos], pv[pos]
    if a.size == 0:
        return 0.0
    inf_part = np.isinf(pv)
    sup_inf = float(np.max(a[inf_part])) if np.any(inf_part) else 0.0
    a_f, w_f, p_f = a[~inf_part], w[~inf_part], pv[~inf_part]
    if a_f.size == 0 or not np.any(a_f > 0):
        return sup_inf
    if np.all(p_f == p_f[0]):
        return max(sup_inf, lp_norm_samples(a_f, w_f, float(p_f[0])))

    amax = float(np.max(a_f))

    def excess(lam):
        with np.errstate(over="ignore"):
            return math.fsum(w_f * np.power(a_f / lam, p_f)) - 1.0

    pmin = float(np.min(p_f)) if p_minus is None else p_minus
    hi = amax * max(1.0, float(np.sum(w_f))) ** (1.0 / pmin)
    grow = 0
    while excess(hi) > 0:
        hi *= 2.0
        grow += 1
        if grow > 200:
            raise BracketError("modular stays above 1 for every probed scaling")
    lo = hi
    shrink = 0
    while excess(lo) <= 0:
        lo /= 2.0
        shrink += 1
        if shrink > 2000:
            return sup_inf
    lam = brentq(excess, lo, hi, xtol=tol * lo, rtol=max(tol, 4 * np.finfo(float).eps))
    return max(sup_inf, float(lam))


def luxemburg_norm(f: FunctionHandle, p, region: Box, quad: QuadratureConfig = DEFAULT_QUAD,
                   tol: float = 1e-12, x=None, full_output: bool = False):
    """Luxemburg norm of ``f`` on ``region``.

    Parameters
    ----------
    f : FunctionHandle
    p : ExponentField or float
    region : Box
        Bounded box; a zero-volume box gives 0 with a warning.
    quad : QuadratureConfig
    tol : float
        Relative tolerance of the root solve for the scaling ``lam``.

    Returns
    -------
    float, or ``(float, info)`` when ``full_output`` is set.
    """
    p = as_exponent(p)
    if not region.bounded:
        raise ValueError("norm needs a bounded region")
    if region.volume == 0:
        warnings.warn("zero-volume region, norm set to 0", DegenerateRegionWarning, stacklevel=2)
        return (0.0, {"trace": [], "degenerate": True}) if full_output else 0.0

    def evaluate(level):
        nodes, w, a = sample_region(f, region, quad, level, x, exact)
        if p.is_constant:
            return lp_norm_samples(a, w, p.p_minus)
        return luxemburg_from_samples(a, w, p(nodes), tol, p.p_minus)

    exact = _is_exact(f, p)
    value, trace = refine(evaluate, quad, exact=exact)
    if full_output:
        return value, {"trace": trace, "quadrature": quad.fingerprint(), "degenerate": False}
    return value


def cell_norms(f: FunctionHandle, p, cells, quad: QuadratureConfig = DEFAULT_QUAD,
               x=None, tol: float = 1e-12) -> np.ndarray:
    """Luxemburg norms of ``f`` on many cells, sampled in one batch.

    Grid doubling is applied to the whole batch until the largest relative
    change falls below ``refine_tol``.
    """
    p = as_exponent(p)
    cells = list(cells)
    if not cells:
        return np.empty(0)
    exact = _is_exact(f, p)

    def evaluate(level):
        cache: dict = {}
        parts = [cube_rule(c, _level_counts(c, quad, level, exact), f.breakpoints, cache)
                 for c in cells]
        sizes = np.array([len(w) for _, w in parts])
        nodes = np.concatenate([nd for nd, _ in parts])
        w = np.concatenate([wt for _, wt in parts])
        a = f.norms(nodes, x)
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        if p.is_constant:
            pc = p.p_minus
            if math.isinf(pc):
                return np.maximum.reduceat(np.where(w > 0, a, 0.0), starts)
            if pc == 1:
                return np.add.reduceat(w * a, starts)
            amax = np.maximum.reduceat(a, starts)
            scale = np.repeat(np.where(amax > 0, amax, 1.0), sizes)
            s = np.add.reduceat(w * (a / scale) ** pc, starts)
            return amax * s ** (1.0 / pc)
        pv = p(nodes)
        return np.array([
            luxemburg_from_samples(a[s0:s0 + k], w[s0:s0 + k], pv[s0:s0 + k], tol, p.p_minus)
            for s0, k in zip(starts, sizes)
        ])

    value = evaluate(0)
    if exact:
        return value
    for level in range(1, quad.max_refinements + 1):
        new = evaluate(level)
        change = np.max(np.abs(new - value) / np.maximum(np.abs(new), 1e-300))
        value = new
        if change <= quad.refine_tol:
            break
    return value


def cell_seminorm(f_diff: FunctionHandle, p, t, l: float, omega: Box,
                  quad: QuadratureConfig = DEFAULT_QUAD, x=None) -> float:
    """Luxemburg norm of ``f_diff`` on the cell ``t + l * omega``."""
    if l <= 0:
        raise ValueError("cell scale must be positive")
    return luxemburg_norm(f_diff, p, omega.cell(t, l), quad, x=x)


def holder_product_norm_check(u: FunctionHandle, v: FunctionHandle, p, r, region: Box,
                              quad: QuadratureConfig = DEFAULT_QUAD, s=None, slack: float = 1e-9):
    """Compare ``|uv|_s`` with ``2 |u|_p |v|_r`` where ``1/s = 1/p + 1/r``.

    Returns ``(lhs, rhs, passed)``.
    """
    p, r = as_exponent(p), as_exponent(r)

    def s_of(points):
        inv = 1.0 / p(points) + 1.0 / r(points)
        if np.any(inv > 1 + 1e-12):
            raise ValueError("exponent mismatch: 1/p + 1/r exceeds 1")
        with np.errstate(divide="ignore"):
            return np.where(inv == 0, np.inf, 1.0 / np.minimum(inv, 1.0))

    if p.is_constant and r.is_constant:
        inv = 1.0 / p.p_minus + 1.0 / r.p_minus
        if inv > 1 + 1e-12:
            raise ValueError("exponent mismatch: 1/p + 1/r exceeds 1")
        derived = ExponentField.constant(math.inf if inv == 0 else 1.0 / min(inv, 1.0))
    else:
        derived = ExponentField(s_of, 1.0, math.inf, label="s(x)")
    if s is not None:
        s = as_exponent(s)
        nodes, _ = cube_rule(region, 8)
        if not np.allclose(s(nodes), derived(nodes), rtol=1e-9):
            raise ValueError("exponent mismatch: s is not the harmonic combination of p and r")
        derived = s

    uv = _product(u, v)
    lhs = luxemburg_norm(uv, derived, region, quad)
    rhs = 2.0 * luxemburg_norm(u, p, region, quad) * luxemburg_norm(v, r, region, quad)
    return lhs, rhs, bool(lhs <= rhs * (1 + slack) + slack)


def _product(u: FunctionHandle, v: FunctionHandle) -> FunctionHandle:
    """Pointwise product of the norms (enough for norm inequalities)."""

    def func(t, x):
        return u.norms(t, x) * v.norms(t, x)

    breaks = None
    if u.breaks is not None or v.breaks is not None:
        def breaks(axis, a, b):
            return np.concatenate([u.breakpoints(axis, a, b), v.breakpoints(axis, a, b)])

    return FunctionHandle(
        func=func, n=u.n, label=f"|{u.label}||{v.label}|", breaks=breaks,
        piecewise_constant=u.piecewise_constant and v.piecewise_constant,
    )


def grid_points(region: Box, quad: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    return as_points(cube_rule(region, _counts(region, quad, 0))[0], region.n)
