"""Stepanov and Weyl distances over translated cubes.

``D_{S_l}(F, G) = sup_t l^(-n/p) |F - G|_{L^p(t + l Omega)}`` is computed
as a max over a probe grid; the Weyl distance is its limit as ``l`` grows,
observed along an :class:`~weylap.schedules.LSchedule`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np

from .ap_certifier import (
    Certificate,
    SearchConfig,
    certify,
    constant_p_spec,
    verify_period,
)
from .function_model import Box, Domain, FunctionHandle, as_points, lattice_points
from .schedules import ConvergenceReport, LSchedule
from .vexp_lebesgue import DEFAULT_QUAD, QuadratureConfig, cell_norms


class VerdictMismatchError(AssertionError):
    """Weyl and Stepanov boundedness verdicts disagree at this resolution."""


def _grid(domain: Domain, l: float, t_grid) -> np.ndarray:
    grid = domain.t_grid(l) if t_grid is None else as_points(t_grid, domain.n)
    if len(grid) == 0:
        raise ValueError("empty probe grid")
    return grid


def stepanov_profile(F: FunctionHandle, G: FunctionHandle | None, p: float, l: float,
                     domain: Domain, t_grid=None, x=None,
                     quad: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """Scaled cell norms ``l^(-n/p) |F - G|`` at every grid point."""
    H = F if G is None else F - G
    grid = _grid(domain, l, t_grid)
    cells = [domain.omega.cell(t, l) for t in grid]
    return l ** (-domain.n / p) * cell_norms(H, p, cells, quad, x)


def stepanov_distance(F: FunctionHandle, G: FunctionHandle | None, p: float, l: float,
                      domain: Domain, t_grid=None, params=None,
                      quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Max over the probe grid and parameters of the scaled cell distance."""
    if l <= 0:
        raise ValueError("scale must be positive")
    params = F.params if params is None else params
    return max(float(np.max(stepanov_profile(F, G, p, l, domain, t_grid, x, quad)))
               for x in params)


def weyl_distance(F: FunctionHandle, G: FunctionHandle | None, p: float, schedule: LSchedule,
                  domain: Domain, t_grid=None, params=None, tol: float = 1e-2,
                  quad: QuadratureConfig = DEFAULT_QUAD):
    """Stepanov distances along ``schedule``; returns ``(tail value, report)``.

    The report notes whether the estimate stays below every sampled
    Stepanov distance, and carries the sup-then-limit diagnostic
    (the max over the tail, which can only be larger).
    """
    values = [stepanov_distance(F, G, p, l, domain, t_grid, params, quad)
              for l in schedule.scales]
    report = ConvergenceReport.from_samples(schedule.scales, values, tol, schedule.tail)
    est = report.limit_estimate
    report.notes["dominated_by_every_stepanov"] = bool(all(est <= v + 1e-12 * max(1, v)
                                                         for v in values))
    report.notes["sup_over_tail"] = float(max(values[-schedule.tail:]))
    report.notes["schedule"] = schedule.to_dict()
    report.notes["quadrature"] = quad.fingerprint()
    return est, report


def stepanov_bounded_sup(F: FunctionHandle, p: float, domain: Domain, t_grid=None,
                         quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Probe-grid sup of unscaled unit-cell norms ``|F|_{L^p(t + Omega)}``."""
    return stepanov_distance(F, None, p, 1.0, domain, t_grid, quad=quad)


def _radius_sups(F, p, domain, l, radii, quad, scaled):
    # grids coarsen as the box grows; the running max keeps the sups nested
    out, best = [], 0.0
    for R in radii:
        box = Box((-R,) * domain.n, (R,) * domain.n)
        d = replace(domain, probe_box=box, probes=())
        v = stepanov_distance(F, None, p, l, d, quad=quad)
        best = max(best, v if scaled else v * l ** (domain.n / p))
        out.append(best)
    return out


def weyl_bounded_check(F: FunctionHandle, p: float, schedule: LSchedule, domain: Domain,
                       radii=(8.0, 32.0, 128.0, 512.0), rtol: float = 1e-2,
                       quad: QuadratureConfig = DEFAULT_QUAD):
    """Weyl boundedness at desk scale, cross-checked against Stepanov boundedness.

    For each scale in the schedule the sup of scaled cell norms is taken
    over probe boxes of growing radius; the function counts as bounded when
    every such sequence has a relative Cauchy gap below ``rtol``.  The same
    test on unit cells gives the Stepanov verdict, and the two must agree.
    Returns ``(bounded, witnesses)``.
    """
    weyl, stepanov = {}, None
    for l in schedule.scales[:3]:
        sups = _radius_sups(F, p, domain, l, radii, quad, scaled=True)
        weyl[l] = ConvergenceReport.from_samples(radii, sups, rtol, tail=3, relative=True)
    unit = _radius_sups(F, p, domain, 1.0, radii, quad, scaled=False)
    stepanov = ConvergenceReport.from_samples(radii, unit, rtol, tail=3, relative=True)
    weyl_ok = all(r.converged or r.limit_estimate == 0 for r in weyl.values())
    step_ok = stepanov.converged or stepanov.limit_estimate == 0
    if weyl_ok != step_ok:
        raise VerdictMismatchError(
            f"Weyl verdict {weyl_ok} but Stepanov verdict {step_ok} for {F.label}")
    return weyl_ok, {"weyl": {l: r.to_dict() for l, r in weyl.items()},
                     "stepanov": stepanov.to_dict()}


def triangle_check(F, G, H, p: float, scales, domain: Domain, t_grid=None,
                   rtol: float = 1e-6, quad: QuadratureConfig = DEFAULT_QUAD) -> dict:
    """``D(F, G) <= D(F, H) + D(H, G)`` at each scale and at the tail."""
    scales = scales.scales if isinstance(scales, LSchedule) else list(np.atleast_1d(scales))
    rows, ok = [], True
    for l in scales:
        fg = stepanov_distance(F, G, p, l, domain, t_grid, quad=quad)
        fh = stepanov_distance(F, H, p, l, domain, t_grid, quad=quad)
        hg = stepanov_distance(H, G, p, l, domain, t_grid, quad=quad)
        holds = fg <= (fh + hg) * (1 + rtol) + 1e-15
        ok &= holds
        rows.append({"l": float(l), "lhs": fg, "rhs": fh + hg, "holds": bool(holds)})
    return {"passed": bool(ok), "rows": rows, "limit": rows[-1]}


def scaling_property_check(F, G, p: float, l1: float, l2: float, domain: Domain,
                           t_grid=None, rtol: float = 1e-6,
                           quad: QuadratureConfig = DEFAULT_QUAD) -> dict:
    """Check both comparison inequalities between scales ``l1 < l2``.

    ``D_{l1} <= (l2/l1)^(n/p) D_{l2}`` uses one grid for both scales.  For
    ``l2 = k l1 + theta l1`` the bound ``D_{l2} <= ((k+1)/k)^(n/p) D_{l1}``
    covers each ``l2``-cell by ``(k+1)^n`` cells of size ``l1``, so the
    ``l1`` side is evaluated on the grid shifted by ``l1 * {0..k}^n``.
    """
    if not l2 > l1 > 0:
        raise ValueError("need l2 > l1 > 0")
    n = domain.n
    grid = _grid(domain, l2, t_grid)
    d1 = stepanov_distance(F, G, p, l1, domain, grid, quad=quad)
    d2 = stepanov_distance(F, G, p, l2, domain, grid, quad=quad)
    first = d1 <= (l2 / l1) ** (n / p) * d2 * (1 + rtol) + 1e-15
    k = int(math.floor(l2 / l1))
    offsets = lattice_points(np.zeros(n), np.full(n, k * l1), l1)
    fine = (grid[:, None, :] + offsets[None, :, :]).reshape(-1, n)
    fine = np.unique(np.round(fine, 12), axis=0)
    d1_fine = stepanov_distance(F, G, p, l1, domain, fine, quad=quad)
    second = d2 <= ((k + 1) / k) ** (n / p) * d1_fine * (1 + rtol) + 1e-15
    return {
        "passed": bool(first and second),
        "property1": {"lhs": d1, "rhs": (l2 / l1) ** (n / p) * d2, "holds": bool(first)},
        "property2": {"lhs": d2, "rhs": ((k + 1) / k) ** (n / p) * d1_fine, "k": k,
                      "holds": bool(second)},
    }


def translation_monotonicity_check(F, G, tau, p: float, l: float, domain: Domain,
                                   t_grid=None, quad: QuadratureConfig = DEFAULT_QUAD) -> dict:
    """Shifted pair evaluated on a grid contained in both translation sets."""
    grid = _grid(domain, l, t_grid)
    lhs = stepanov_distance(F.translate(tau), G.translate(tau), p, l, domain, grid, quad=quad)
    rhs = stepanov_distance(F, G, p, l, domain, grid + np.asarray(tau), quad=quad)
    return {"lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs * (1 + 1e-9) + 1e-15)}


@dataclass
class ClosureReport:
    distances: list
    decreasing: bool
    below_schedule: bool
    K: int | None
    approximant_certificate: object
    certificate: object
    passed: bool
    notes: dict = field(default_factory=dict)


def weyl_limit_closure_check(F_seq, F: FunctionHandle, p: float, eps: float, domain: Domain,
                             schedule: LSchedule, search: SearchConfig,
                             eps_schedule=None, prefilters=None, split: str = "triangle",
                             quad: QuadratureConfig = DEFAULT_QUAD) -> ClosureReport:
    """Approximants close in the Weyl distance pass their periods to the limit.

    Picks the first ``F_K`` whose Stepanov distance ``d`` to ``F`` at the
    certification scale is below ``eps/3`` and certifies ``F_K``; the same
    witnesses are then re-verified for ``F`` at ``eps``.  ``F_K`` is
    certified at ``eps - 2 d`` (``split="triangle"``), the largest level
    the triangle inequality allows, or at ``eps/3`` (``split="thirds"``).
    ``prefilters[k](taus, level)`` optionally screens candidate
    translations for ``F_k`` before quadrature.
    """
    distances = [weyl_distance(Fk, F, p, schedule, domain, quad=quad)[0] for Fk in F_seq]
    decreasing = all(b <= a * (1 + 1e-9) + 1e-12 for a, b in zip(distances, distances[1:]))
    below = True if eps_schedule is None else all(
        d < e for d, e in zip(distances, eps_schedule))
    l_star = float(search.scales[0])
    if split not in ("triangle", "thirds"):
        raise ValueError(f"unknown split {split!r}")
    K, d_K = None, None
    for k, Fk in enumerate(F_seq):
        d = stepanov_distance(Fk, F, p, l_star, domain, quad=quad)
        if d < eps / 3:
            K, d_K = k, d
            break
    if K is None:
        return ClosureReport(distances, decreasing, below, None, None, None, False,
                             {"reason": "no approximant within eps/3"})
    level = eps - 2 * d_K if split == "triangle" else eps / 3
    spec = constant_p_spec(domain, p, equi=True)
    pre = None if prefilters is None or prefilters[K] is None else \
        partial(prefilters[K], level=level)
    sub = replace(search, scales=(l_star,), prefilter=pre, quad=quad)
    cert_K = certify(F_seq[K], spec, level, sub)
    notes = {"l": l_star, "level": level, "split": split, "stepanov_distance": d_K}
    if not isinstance(cert_K, Certificate):
        return ClosureReport(distances, decreasing, below, K, cert_K, None, False,
                             dict(notes, reason="approximant not certified"))
    measured, ok = {}, True
    for i, tau in cert_K.witnesses.items():
        passed, worst = verify_period(F, spec, tau, eps, l_star, quad=quad)
        measured[i] = worst["value"]
        ok &= passed
    cert = Certificate(eps, l_star, None, cert_K.L, cert_K.probes, dict(cert_K.witnesses),
                       measured, cert_K.grids, spec.summary()) if ok else None
    return ClosureReport(distances, decreasing, below, K, cert_K, cert,
                         bool(ok and decreasing and below), notes)


@dataclass
class NormalityResult:
    found: bool
    subsequence: list
    blocking_pair: tuple | None
    distances: dict


def normality_check(F: FunctionHandle, translates, p: float, schedule: LSchedule,
                    domain: Domain, eps: float, m_min: int = 3,
                    quad: QuadratureConfig = DEFAULT_QUAD) -> NormalityResult:
    """Greedy search for a subsequence of translates that is ``eps``-Cauchy.

    Chains translates in the given order, keeping each one that is within
    ``eps`` of every member kept so far.  Since ``D(F(.+a), F(.+b))`` only
    depends on ``a - b`` when the probe grid is translation invariant, the
    distances are computed as ``D_W(F(. + a - b), F)``.
    """
    translates = [np.atleast_1d(np.asarray(v, dtype=float)) for v in translates]
    cache: dict = {}

    def dist(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            shift = translates[key[0]] - translates[key[1]]
            cache[key] = weyl_distance(F.translate(shift), F, p, schedule, domain, quad=quad)[0]
        return cache[key]

    best: list = []
    blocking = None
    for start in range(len(translates)):
        chain = [start]
        for j in range(start + 1, len(translates)):
            far = [i for i in chain if dist(i, j) >= eps]
            if far:
                blocking = blocking or (far[0], j)
            else:
                chain.append(j)
        if len(chain) > len(best):
            best = chain
        if len(best) >= m_min:
            break
    found = len(best) >= m_min
    return NormalityResult(found, best, None if found else blocking,
                           {f"{i},{j}": v for (i, j), v in sorted(cache.items())})
