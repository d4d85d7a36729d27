"""Convolution operators and the heat, evolution and wave applications."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad as scalar_quad
from scipy.optimize import brentq
from scipy.special import erf, erfc

from .ap_certifier import Certificate, ClassSpec, WeightSpec, Variant, sup_quantity, verify_period
from .function_model import Box, FunctionHandle, as_points, as_vector, lattice_points
from .vexp_lebesgue import (
    QuadratureConfig,
    as_exponent,
    conjugate_exponent,
    cube_rule,
    luxemburg_from_samples,
    phi_p,
)

CONV_QUAD = QuadratureConfig(points_per_axis=64, points_per_unit=40.0, max_refinements=0)


class TruncationError(ValueError):
    """The truncated lattice sum leaves too little slack."""


class MissingBoundError(ValueError):
    """The operation needs a declared uniform bound."""


@dataclass(frozen=True, eq=False)
class Kernel:
    """Integrable kernel ``h`` on ``R^n``.

    ``tail_mass(R)`` is the mass of ``|h|`` outside the cube ``[-R, R]^n``;
    ``block_sup(box)`` optionally gives the exact sup of ``|h|`` on a box;
    ``support`` is the half width of a compact support, when there is one.
    """

    func: Callable[[np.ndarray], np.ndarray]
    n: int
    l1_mass: float
    tail_mass: Callable[[float], float]
    label: str = "h"
    breaks: Callable | None = None
    block_sup: Callable[[Box], float] | None = None
    support: float | None = None

    def __call__(self, y) -> np.ndarray:
        return np.asarray(self.func(as_points(y, self.n)), dtype=float)

    def default_radius(self, rel: float = 1e-8) -> float:
        """Smallest ``R`` with tail mass below ``rel * |h|_1``.

        Compactly supported kernels use the whole support instead, which
        loses no mass at all.
        """
        if self.support is not None:
            return float(self.support)
        target = rel * self.l1_mass
        if self.l1_mass == 0 or self.tail_mass(0.0) <= target:
            return 0.0
        hi = 1.0
        while self.tail_mass(hi) > target:
            hi *= 2.0
        return brentq(lambda R: self.tail_mass(R) - target, 0.0, hi, xtol=1e-12)


def heat_kernel(t0: float, n: int) -> Kernel:
    """``(4 pi t0)^(-n/2) exp(-|y|^2 / (4 t0))``."""
    if t0 <= 0:
        raise ValueError("heat time must be positive")
    c = (4 * math.pi * t0) ** (-n / 2)
    s = 2 * math.sqrt(t0)

    def func(y):
        return c * np.exp(-np.sum(y * y, axis=1) / (4 * t0))

    def tail(R):
        return float(-np.expm1(n * np.log1p(-erfc(R / s)))) if R > 0 else 1.0

    def block_sup(box: Box) -> float:
        nearest = np.clip(0.0, box.lo, box.hi)
        return float(c * math.exp(-float(nearest @ nearest) / (4 * t0)))

    return Kernel(func, n, 1.0, tail, label=f"heat({t0:g})", block_sup=block_sup)


def box_kernel(width: float, n: int) -> Kernel:
    """Normalised indicator of ``[-width/2, width/2]^n``."""
    half = width / 2

    def func(y):
        return np.all(np.abs(y) <= half, axis=1) / width**n

    def breaks(axis, a, b):
        pts = np.array([-half, half])
        return pts[(pts > a) & (pts < b)]

    return Kernel(func, n, 1.0, lambda R: 0.0 if R >= half else 1.0 - (R / half) ** n,
                  label=f"box({width:g})", breaks=breaks, support=half)


def zero_kernel(n: int) -> Kernel:
    return Kernel(lambda y: np.zeros(len(y)), n, 0.0, lambda R: 0.0, label="0")


@dataclass
class ConvolutionResult:
    handle: FunctionHandle
    truncation_radius: float
    est_truncation_error: float
    notes: dict = field(default_factory=dict)


def _convolution_handle(kernel_values, F: FunctionHandle, R: float, quad: QuadratureConfig,
                        label: str, kernel_breaks=None, scale: float = 1.0) -> FunctionHandle:
    """``x -> scale * int_{[-R,R]^n} k(y) F(x - y) dy`` by the midpoint rule."""
    n = F.n
    box = Box((-R,) * n, (R,) * n)
    counts = [quad.axis_count(2 * R)] * n
    nodes, w = cube_rule(box, counts, kernel_breaks)
    kw = kernel_values(nodes) * w

    def func(t, x):
        if F.breaks is None:
            out = []
            for chunk in np.array_split(t, max(1, len(t) * len(nodes) // 2_000_000 + 1)):
                pts = (chunk[:, None, :] - nodes[None, :, :]).reshape(-1, n)
                vals = np.asarray(F.func(pts, x))
                vals = vals.reshape(len(chunk), len(nodes), *vals.shape[1:])
                out.append(np.tensordot(vals, kw, axes=([1], [0])) if vals.ndim == 2
                           else np.einsum("mk...,k->m...", vals, kw))
            return scale * np.concatenate(out)
        # jumps of F(x - .) sit at x - breaks: split there for every point
        res = []
        for ti in t:
            def br(axis, a, b, ti=ti):
                pts = ti[axis] - F.breakpoints(axis, ti[axis] - b, ti[axis] - a)
                extra = kernel_breaks(axis, a, b) if kernel_breaks is not None else []
                return np.concatenate([pts, extra])
            nd, ww = cube_rule(box, counts, br)
            vals = np.asarray(F.func(ti - nd, x))
            res.append(np.tensordot(kernel_values(nd) * ww, vals, axes=(0, 0)))
        return scale * np.asarray(res)

    sb = None if F.sup_bound is None else scale * float(np.sum(np.abs(kw))) * F.sup_bound
    return FunctionHandle(func=func, n=n, label=label, params=F.params, sup_bound=sb,
                          bandwidth=F.bandwidth)


def convolve(h: Kernel, F: FunctionHandle, radius: float | None = None,
             quad: QuadratureConfig = CONV_QUAD) -> ConvolutionResult:
    """Truncated convolution ``h * F`` with its truncation error bound."""
    if F.sup_bound is None:
        raise MissingBoundError(f"{F.label} has no declared uniform bound")
    if h.n != F.n:
        raise ValueError("dimension mismatch")
    R = h.default_radius() if radius is None else float(radius)
    R = max(R, 1e-12)
    handle = _convolution_handle(h.func, F, R, quad, f"{h.label}*{F.label}", h.breaks)
    err = F.sup_bound * h.tail_mass(R)
    return ConvolutionResult(handle, R, err, {"quadrature": quad.fingerprint()})


def gaussian_semigroup_apply(F: FunctionHandle, t0: float, radius: float | None = None,
                             quad: QuadratureConfig = CONV_QUAD,
                             mass_tol: float = 1e-6) -> ConvolutionResult:
    """Heat flow at time ``t0``; the discrete kernel mass must be 1 within ``mass_tol``."""
    h = heat_kernel(t0, F.n)
    R = h.default_radius() if radius is None else float(radius)
    nodes, w = cube_rule(Box((-R,) * F.n, (R,) * F.n), [quad.axis_count(2 * R)] * F.n)
    mass = float(np.sum(h.func(nodes) * w))
    if abs(mass - 1.0) > mass_tol + h.tail_mass(R):
        raise ValueError(f"heat kernel mass {mass} differs from 1 at radius {R}")
    res = convolve(h, F, R, quad)
    res.notes["kernel_mass"] = mass
    return res


# convolution invariance --------------------------------------------------------


def _block_lq_norm(h: Kernel, box: Box, q: float, phi_tilde, scale: float,
                   quad: QuadratureConfig) -> float:
    """``|phi_tilde(scale * h)|_{L^q(box)}``."""
    if math.isinf(q) and h.block_sup is not None:
        return float(phi_tilde(np.array([scale * h.block_sup(box)]))[0])
    nodes, w = cube_rule(box, [quad.points_per_axis] * h.n, h.breaks)
    vals = phi_tilde(scale * np.abs(h.func(nodes)))
    if math.isinf(q):
        return float(np.max(vals))
    return float(math.fsum(w * vals**q)) ** (1 / q)


def shokiran_condition(h: Kernel, phi_tilde, weight, weight1, p, p1, l: float, t,
                       a_scheme: str | Callable = "mass", radius: float | None = None,
                       quad: QuadratureConfig = QuadratureConfig(points_per_axis=16),
                       slack_frac: float = 0.5) -> tuple[float, bool]:
    """Left side of the convolution-invariance condition at ``(l, t)``.

    Evaluates the integral over ``t + l[0,1]^n`` of
    ``phi_{p1(u)}( 2 sum_k a_k l^-n |phi_tilde(l^n h(u - v) / a_k)|_{L^q(v in u-k+l Omega)}
    * F1(l, t) / F(l, u - k) )``
    over the lattice ``k in l Z^n`` truncated at the kernel's default
    radius.  ``a_k`` is proportional to the kernel's ``L^q`` mass on the
    block ``k - l Omega`` unless a callable ``a_scheme(blocks)`` is given.
    Returns ``(lhs, lhs <= 1)``.
    """
    n = h.n
    t = as_vector(t, n)
    p = as_exponent(p)
    p1 = as_exponent(p1)
    if not p.is_constant:
        raise ValueError("kernel block norms implemented for constant p")
    q = conjugate_exponent(p).p_minus
    if h.l1_mass == 0:
        return 0.0, True
    R = h.default_radius() if radius is None else radius
    reach = R + l
    ks = lattice_points(np.full(n, -reach), np.full(n, reach + l), l)
    blocks = [Box(tuple(k - l), tuple(k)) for k in ks]          # k - l*[0,1]^n
    base = np.array([_block_lq_norm(h, b, q, lambda x: x, 1.0, quad) for b in blocks])
    if callable(a_scheme):
        a = np.asarray(a_scheme(blocks), dtype=float)
    else:
        keep = base > 0
        ks, blocks, base = ks[keep], [b for b, k in zip(blocks, keep) if k], base[keep]
        a = base / math.fsum(base)
    if abs(math.fsum(a) - 1) > 1e-9:
        raise ValueError("weights a_k must sum to 1")
    inner = np.array([_block_lq_norm(h, b, q, phi_tilde, l**n / ak, quad)
                      for b, ak in zip(blocks, a)])
    coef = 2 * a * l ** (-n) * inner
    u_nodes, u_w = cube_rule(Box(tuple(t), tuple(t + l)), [quad.points_per_axis] * n)
    w1 = float(weight1(l, t))
    S = np.array([math.fsum(coef * w1 / np.array([weight(l, u - k) for k in ks]))
                  for u in u_nodes])
    lhs = float(math.fsum(u_w * phi_p(p1(u_nodes), S)))
    # outermost shell as a tail estimate for the dropped blocks
    shell = np.max(np.abs(ks), axis=1) >= np.max(np.abs(ks)) - l * (1 - 1e-9)
    tail_est = float(lhs * math.fsum(coef[shell]) / max(math.fsum(coef), 1e-300))
    passed = lhs <= 1
    if passed and lhs + tail_est > 1 and tail_est > slack_frac * (1 - lhs):
        raise TruncationError(f"lattice tail {tail_est:g} exceeds the slack {1 - lhs:g}")
    return lhs, bool(passed)


def gaussian_sufficient_condition(t0: float, l: float, p: float, weight, weight1, n: int,
                                  cutoff: float = 50.0) -> tuple[float, bool]:
    """``2 l^(-n/p) (4 pi t0)^(-n/2) sum_k exp(-(|k| - 3 l sqrt n)^2 / (4 t0)) F1(l)/F(l)``.

    The sum over ``k in l Z^n`` keeps every term whose exponent is below
    ``cutoff``; the rest is below ``exp(-cutoff)`` per term.
    """
    shift = 3 * l * math.sqrt(n)
    kmax = shift + math.sqrt(4 * t0 * cutoff)
    ks = lattice_points(np.full(n, -kmax), np.full(n, kmax), l)
    r = np.linalg.norm(ks, axis=1)
    ks_terms = np.exp(-((r - shift) ** 2) / (4 * t0))
    total = math.fsum(ks_terms[(r - shift) ** 2 / (4 * t0) <= cutoff])
    value = 2 * l ** (-n / p) * (4 * math.pi * t0) ** (-n / 2) * total * weight1(l) / weight(l)
    return value, bool(value <= 1)


def convolution_preserves_period_check(h: Kernel, F: FunctionHandle, tau, spec: ClassSpec,
                                       eps: float, l: float, t_grid=None, radius=None,
                                       quad: QuadratureConfig = QuadratureConfig(
                                           points_per_axis=32, refine_tol=1e-6,
                                           max_refinements=3),
                                       conv_quad: QuadratureConfig = CONV_QUAD,
                                       shokiran_args: dict | None = None) -> dict:
    """Compare the class quantity of ``h * F`` at ``tau`` with ``|h|_1`` times that of ``F``.

    This is the Young-type transfer for identity ``phi``, constant exponent
    and ``t``-independent weight.  Other settings fall back on
    :func:`shokiran_condition`.
    """
    w = spec.weights
    simple = w.phi_is_identity and spec.exponent.is_constant and w.t_independent and \
        spec.variant in (Variant.PAREN, Variant.CONSTANT_P)
    passed_F, worst_F = verify_period(F, spec, tau, eps, l, t_grid, quad)
    if not simple:
        if shokiran_args is None:
            raise ValueError("general case needs the convolution-invariance condition inputs")
        lhs, ok = shokiran_condition(h, **shokiran_args)
        return {"mode": "condition", "lhs": lhs, "passed": bool(ok), "F_quantity": worst_F}
    conv = convolve(h, F, radius, conv_quad)
    grid = spec.domain.t_grid(l) if t_grid is None else t_grid
    worst_conv = sup_quantity(conv.handle, spec, tau, l, grid, quad)
    # F's side must be a sup over all translates: refine the grid fourfold
    fine = spec.domain.t_grid(l, step=spec.domain.grid_step / 4) if t_grid is None else t_grid
    worst_F_all = sup_quantity(F, spec, tau, l, fine, quad)
    p = spec.exponent.p_minus
    trunc = float(w.weight(l, None)) * 2 * conv.est_truncation_error * (l**spec.n) ** (1 / p)
    rhs = h.l1_mass * worst_F_all["value"] + trunc
    return {
        "mode": "young",
        "conv_quantity": worst_conv["value"],
        "F_quantity": worst_F_all["value"],
        "bound": rhs,
        "passed": bool(worst_conv["value"] <= rhs * (1 + 1e-6) + 1e-12),
        "tau_passes_for_F": bool(passed_F),
    }


# wave equation -----------------------------------------------------------------


def antiderivative(g: FunctionHandle, lo: float, hi: float, step: float = 1e-3) -> FunctionHandle:
    """``x -> int_0^x g`` by cumulative midpoint sums on a grid, linearly interpolated."""
    lo, hi = min(lo, 0.0), max(hi, 0.0)
    m_neg = max(1, math.ceil(-lo / step))
    m_pos = max(1, math.ceil(hi / step))
    xs = np.concatenate([-step * np.arange(m_neg, 0, -1), [0.0], step * np.arange(1, m_pos + 1)])
    mids = (xs[:-1] + xs[1:]) / 2
    gv = np.real(g(mids.reshape(-1, 1)))
    cum = np.concatenate([[0.0], np.cumsum(gv * step)])
    cum -= cum[m_neg]

    def func(t, x):
        pts = t[:, 0]
        if np.any(pts < xs[0] - 1e-12) or np.any(pts > xs[-1] + 1e-12):
            raise ValueError("point outside the tabulated antiderivative range")
        return np.interp(pts, xs, cum)

    return FunctionHandle(func=func, n=1, label=f"int {g.label}")


def _scalar(f: FunctionHandle, x: np.ndarray) -> np.ndarray:
    return np.asarray(f(x.reshape(-1, 1)))


def dalembert_solution(f: FunctionHandle, g: FunctionHandle, a: float, x, t,
                       g_antiderivative: FunctionHandle | None = None) -> np.ndarray:
    """``u = (f(x - a t) + f(x + a t)) / 2 + (G(x + a t) - G(x - a t)) / (2 a)``.

    ``G`` is the declared antiderivative of ``g`` from 0, or the tabulated
    cumulative midpoint sum when none is given.  ``t`` may be negative.
    """
    if a <= 0:
        raise ValueError("wave speed must be positive")
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    lo, hi = x - a * t, x + a * t
    G = g_antiderivative
    if G is None:
        span = float(np.max(np.abs(np.concatenate([lo.ravel(), hi.ravel()])))) + 1.0
        G = antiderivative(g, -span, span)
    flat_lo, flat_hi = lo.ravel(), hi.ravel()
    u = 0.5 * (_scalar(f, flat_lo) + _scalar(f, flat_hi)) + \
        (_scalar(G, flat_hi) - _scalar(G, flat_lo)) / (2 * a)
    return u.reshape(x.shape)


def wave_residual(f, g, a: float, x, t, step: float, g_antiderivative=None) -> np.ndarray:
    """Central-difference ``u_tt - a^2 u_xx`` at the given points."""
    def u(xx, tt):
        return dalembert_solution(f, g, a, xx, tt, g_antiderivative)

    x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
    utt = (u(x, t + step) - 2 * u(x, t) + u(x, t - step)) / step**2
    uxx = (u(x + step, t) - 2 * u(x, t) + u(x - step, t)) / step**2
    return utt - a * a * uxx


def _cell_integral(fun, box: Box, count: int) -> float:
    nodes, w = cube_rule(box, count)
    return float(math.fsum(w * fun(nodes)))


def dalembert_period_transfer_check(f: FunctionHandle, g: FunctionHandle, a: float, tau_pair,
                                    l: float, t_grid, weight=None, weight1=None,
                                    g_antiderivative: FunctionHandle | None = None,
                                    count: int = 64, rtol: float = 1e-9) -> dict:
    """Four-term bound for translates of the d'Alembert solution.

    On each cell ``(t1, t2) + (l/a)[0,1]^2`` of the ``(x, t)`` plane this
    compares

    * ``lhs``: the integral of ``|u(x + tau1, t + tau2) - u(x, t)|``;
    * ``pointwise``: the integral of the four-term pointwise bound;
    * ``transfer``: the same bound after the change of variables
      ``z = x -+ a t``, written through one-dimensional cell integrals of
      the translate-differences of ``f`` and ``G = int_0 g`` (with the
      ``1/a`` Jacobian kept).

    ``lhs <= pointwise <= transfer`` must hold on every cell.
    """
    tau1, tau2 = map(float, tau_pair)
    G = g_antiderivative
    grid = as_points(t_grid, 2)
    side = l / a
    if G is None:
        span = float(np.max(np.abs(grid))) * (1 + a) + abs(tau1) + a * abs(tau2) + \
            (1 + a) * side + l + 2
        G = antiderivative(g, -span, span)
    s_minus, s_plus = tau1 - a * tau2, tau1 + a * tau2

    def df(h, z, s):
        return np.abs(_scalar(h, z + s) - _scalar(h, z))

    def u(x, t):
        return dalembert_solution(f, g, a, x, t, G)

    def diff_u(P):
        return np.abs(u(P[:, 0] + tau1, P[:, 1] + tau2) - u(P[:, 0], P[:, 1]))

    def bound(P):
        xm, xp = P[:, 0] - a * P[:, 1], P[:, 0] + a * P[:, 1]
        return 0.5 * (df(f, xm, s_minus) + df(f, xp, s_plus)) + \
            (df(G, xm, s_minus) + df(G, xp, s_plus)) / (2 * a)

    def q1(h, s, lo):
        # int_lo^{lo+l} |h(z + s) - h(z)| dz, vectorised over lo
        nodes, w = cube_rule(Box((0.0,), (l,)), count)
        z = lo[:, None] + nodes[None, :, 0]
        vals = df(h, z.ravel(), s).reshape(z.shape)
        return vals @ w

    rows, ok = [], True
    xs_nodes, xs_w = cube_rule(Box((0.0,), (side,)), count)
    for t1, t2 in grid:
        cell = Box((t1, t2), (t1 + side, t2 + side))
        lhs = _cell_integral(diff_u, cell, count)
        pw = _cell_integral(bound, cell, count)
        xo = t1 + xs_nodes[:, 0]
        tr = (0.5 * (q1(f, s_minus, xo - a * t2 - l) + q1(f, s_plus, xo + a * t2)) +
              (q1(G, s_minus, xo - a * t2 - l) + q1(G, s_plus, xo + a * t2)) / (2 * a)) / a
        transfer = float(tr @ xs_w)
        holds = lhs <= pw * (1 + rtol) + 1e-12 and pw <= transfer * (1 + 1e-6) + 1e-9
        ok &= holds
        row = {"t": [float(t1), float(t2)], "lhs": lhs, "pointwise": pw, "transfer": transfer,
               "holds": bool(holds)}
        if weight is not None and weight1 is not None:
            row["weighted_lhs"] = float(weight1(l, (t1, t2))) * lhs
        rows.append(row)
    return {"passed": bool(ok), "rows": rows}


def ratio_condition(weight, weight1, a: float, l_values, t_boxes, per_axis: int = 9,
                    count: int = 64, rtol: float = 0.05) -> dict:
    """Finiteness of ``sup_{l, t} int_{t1}^{t1+l/a} F1/F(l, x - a t2 - l) + F1/F(l, x + a t2) dx``.

    The sup is taken over nested boxes of ``(t1, t2)``; finiteness is
    accepted when the sups stop growing (relative gap below ``rtol``).
    """
    sups = []
    for R in t_boxes:
        best = 0.0
        for l in l_values:
            for t1, t2 in lattice_points([-R, -R], [R, R], 2 * R / (per_axis - 1)):
                nodes, w = cube_rule(Box((t1,), (t1 + l / a,)), count)
                x = nodes[:, 0]
                w1 = float(weight1(l, (t1, t2)))
                v = math.fsum(w * (w1 / weight(l, x - a * t2 - l) + w1 / weight(l, x + a * t2)))
                best = max(best, v)
        sups.append(best)
    finite = all(np.isfinite(sups)) and (sups[-1] - sups[-2]) <= rtol * max(sups[-2], 1e-300)
    return {"sups": sups, "finite": bool(finite)}


# evolution system ----------------------------------------------------------------


def integrate_profile(a_profile, s: float, t: float) -> float:
    """``int_s^t a``."""
    val, _ = scalar_quad(a_profile, s, t, limit=200, epsabs=1e-13, epsrel=1e-13)
    return float(val)


def evolution_kernel(t: float, s: float, u, v, a_profile) -> np.ndarray:
    """``K(t, s, u, v) = (4 pi (t-s))^(-n/2) e^{int_s^t a} exp(-|u-v|^2 / (4 (t-s)))``."""
    if t <= s:
        raise ValueError("need t > s")
    u, v = np.atleast_2d(u), np.atleast_2d(v)
    n = u.shape[1]
    d = t - s
    r2 = np.sum((u - v) ** 2, axis=1)
    return (4 * math.pi * d) ** (-n / 2) * math.exp(integrate_profile(a_profile, s, t)) * \
        np.exp(-r2 / (4 * d))


def evolution_kernel_apply(F: FunctionHandle, t: float, s: float, a_profile,
                           radius: float | None = None,
                           quad: QuadratureConfig = CONV_QUAD) -> ConvolutionResult:
    """``u -> int K(t, s, u, v) F(v) dv`` over ``v in u + [-R, R]^n``."""
    if t <= s:
        raise ValueError("need t > s")
    if F.sup_bound is None:
        raise MissingBoundError(f"{F.label} has no declared uniform bound")
    n = F.n
    growth = math.exp(integrate_profile(a_profile, s, t))
    h = heat_kernel(t - s, n)
    R = h.default_radius() if radius is None else float(radius)

    def k_of_offset(y):
        # K(t, s, u, u - y) depends on y only
        return evolution_kernel(t, s, np.zeros((1, n)), -y, a_profile) / growth

    handle = _convolution_handle(k_of_offset, F, R, quad, f"U({t:g},{s:g}){F.label}",
                                 None, scale=growth)
    return ConvolutionResult(handle, R, growth * F.sup_bound * h.tail_mass(R),
                             {"growth": growth})


def gaussian_lq_block(u: np.ndarray, block: Box, t: float, q: float, count: int = 32) -> float:
    """``|exp(-|u - .|^2 / 4t)|_{L^q(block)}``; closed form for ``q = inf``."""
    if math.isinf(q):
        nearest = np.clip(u, block.lo, block.hi)
        return math.exp(-float(np.sum((u - nearest) ** 2)) / (4 * t))
    nodes, w = cube_rule(block, count)
    vals = np.exp(-np.sum((nodes - u) ** 2, axis=1) / (4 * t))
    return float(math.fsum(w * vals**q)) ** (1 / q)


def lattice_gaussian_sum(l: float, u, t: float, q: float, R: float | None = None):
    """``G(l, u) = sum_{k in l Z^n} |exp(-|u - .|^2/4t)|_{L^q(k + l[0,1]^n)}``.

    Blocks farther than ``R`` from ``u`` are dropped.  Returns
    ``(value, tail_bound)``; the bound dominates every dropped block's
    norm times the number of dropped blocks in the next shells.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    n = u.size
    if R is None:
        R = math.sqrt(4 * t * math.log(1e12)) + l
    ks = lattice_points(u - R - l, u + R, l)
    total = math.fsum(gaussian_lq_block(u, Box(tuple(k), tuple(k + l)), t, q) for k in ks)
    # dropped blocks are at distance >= R - l*sqrt(n); bound the shells geometrically
    d0 = max(R - l * math.sqrt(n), 0.0)
    vol = l**n if math.isinf(q) else 1.0
    tail = 0.0
    for j in range(0, 200):
        d = d0 + j * l
        shell_count = 2 * n * (2 * (R / l + j) + 3) ** (n - 1)
        tail += shell_count * math.exp(-d * d / (4 * t)) * (1 if math.isinf(q) else vol ** (1 / q))
    return total, tail


def evolution_weight_transfer(F: FunctionHandle, certificate: Certificate, spec: ClassSpec,
                              t: float, p_prime: float, a_profile=lambda s: 0.0,
                              radius: float | None = None,
                              quad: QuadratureConfig = QuadratureConfig(
                                  points_per_axis=32, refine_tol=1e-6, max_refinements=3),
                              conv_quad: QuadratureConfig = CONV_QUAD) -> dict:
    """Build the transferred weight for ``u(t) = U(t, 0) F`` and check it.

    With ``q`` conjugate to the exponent of ``spec`` and ``G(l, u)`` the
    lattice sum of Gaussian block norms,
    ``F1(l, t) = F(l) / (int_{t + l[0,1]^n} G^p')^(1/p')``.  Every witness
    of ``F`` must then be a ``c_t * eps`` almost period of ``u(t)`` in the
    class with exponent ``p'`` and weight ``F1``, where
    ``c_t = (4 pi t)^(-n/2) e^{int_0^t a}``.
    """
    if not isinstance(certificate, Certificate) or certificate.l is None:
        raise ValueError("needs an equi certificate of F")
    if not (spec.exponent.is_constant and spec.weights.t_independent):
        raise ValueError("needs constant exponent and a t-independent weight")
    n, l = spec.n, certificate.l
    q = conjugate_exponent(spec.exponent).p_minus
    c_t = (4 * math.pi * t) ** (-n / 2) * math.exp(integrate_profile(a_profile, 0.0, t))
    tails = []

    def G_at(points):
        vals = []
        for u in np.atleast_2d(points):
            v, tail = lattice_gaussian_sum(l, u, t, q)
            tails.append(tail)
            vals.append(v)
        return np.array(vals)

    base = spec.weights.weight

    def weight1(ll, tt):
        tt = as_vector(tt, n)
        nodes, w = cube_rule(Box(tuple(tt), tuple(tt + ll)), 16)
        integral = math.fsum(w * G_at(nodes) ** p_prime)
        return base(ll, None) / integral ** (1 / p_prime)

    w1 = WeightSpec(weight=weight1, t_independent=False, label="F1")
    target = ClassSpec(Variant.PAREN, p_prime, w1, True, spec.domain)
    evolved = evolution_kernel_apply(F, t, 0.0, a_profile, radius, conv_quad)
    level = c_t * certificate.epsilon
    rows, ok = [], True
    for i, tau in sorted(certificate.witnesses.items()):
        passed, worst = verify_period(evolved.handle, target, tau, level, l, quad=quad)
        ok &= passed
        rows.append({"probe": i, "tau": tau, "value": worst["value"], "passed": bool(passed)})
    return {
        "c_t": c_t,
        "level": level,
        "rows": rows,
        "passed": bool(ok),
        "max_G_tail": max(tails) if tails else 0.0,
    }
