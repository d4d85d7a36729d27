"""Certification of membership in Weyl almost-periodic classes.

A class is fixed by a :class:`ClassSpec`: which of the weighted quantities
is measured, the exponent field, the weight pair ``(phi, F)`` and whether
the scale ``l`` is fixed (equi classes) or sent to infinity (limsup
classes).  :func:`certify` searches, for every probe ``t0``, a translation
``tau`` in the ball ``B(t0, L)`` whose quantity is below ``eps``.

Suprema over the translation set are taken over the domain's probe grid;
limsup over ``l`` is approximated by the max over the tail of a geometric
schedule.  A failure is evidence at that resolution, never a disproof.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .function_model import Box, Domain, FunctionHandle, as_points, as_vector, lattice_points
from .schedules import LSchedule
from .vexp_lebesgue import (
    DEFAULT_QUAD,
    ExponentField,
    QuadratureConfig,
    as_exponent,
    cell_norms,
    luxemburg_norm,
)


class Variant(str, enum.Enum):
    PAREN = "paren"
    PAREN_1 = "paren1"
    PAREN_2 = "paren2"
    BRACKET = "bracket"
    BRACKET_1 = "bracket1"
    BRACKET_2 = "bracket2"
    CONSTANT_P = "constant"
    TRIPLE_LAMBDA = "triple"


SIX_VARIANTS = (
    Variant.PAREN, Variant.PAREN_1, Variant.PAREN_2,
    Variant.BRACKET, Variant.BRACKET_1, Variant.BRACKET_2,
)


class PreconditionError(ValueError):
    """An operation was called on input that does not meet its hypothesis."""


def _identity(x):
    return np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class WeightSpec:
    """Weight pair ``(phi, F)``.

    ``weight(l, t)`` must be positive; when ``t_independent`` is set it is
    called with ``t=None``.  ``phi_tilde`` is the companion with
    ``phi(x*y) <= phi_tilde(y) * phi(x)``.
    """

    weight: Callable[[float, np.ndarray | None], float]
    phi: Callable[[np.ndarray], np.ndarray] = _identity
    phi_tilde: Callable[[np.ndarray], np.ndarray] | None = _identity
    phi_is_identity: bool = True
    monotone: bool = True
    convex: bool = True
    t_independent: bool = True
    kind: str = "custom"
    sigma: float | None = None
    label: str = "F"

    @classmethod
    def power(cls, sigma: float) -> "WeightSpec":
        """``F(l, t) = l**(-sigma)`` with ``phi`` the identity."""
        return cls(weight=lambda l, t: l ** (-sigma), kind="power", sigma=float(sigma),
                   label=f"l^-{sigma:g}")

    @classmethod
    def weyl(cls, n: int, p: float) -> "WeightSpec":
        """The constant-exponent normalisation ``l**(-n/p)``."""
        s = n / p
        return cls(weight=lambda l, t: l ** (-s), kind="weyl", sigma=s, label=f"l^-{n}/{p:g}")

    def values(self, l: float, t_grid: np.ndarray) -> np.ndarray:
        if self.t_independent:
            return np.full(len(t_grid), float(self.weight(l, None)))
        return np.array([float(self.weight(l, t)) for t in t_grid])

    def rescaled(self, factor: Callable[[float], float], label: str) -> "WeightSpec":
        """Same phi, weight multiplied by ``factor(l)``."""
        base = self.weight
        return WeightSpec(
            weight=lambda l, t: factor(l) * base(l, t),
            phi=self.phi, phi_tilde=self.phi_tilde, phi_is_identity=self.phi_is_identity,
            monotone=self.monotone, convex=self.convex, t_independent=self.t_independent,
            kind="custom", sigma=None, label=label,
        )

    def bracket_equivalent(self, n: int, p: float) -> "WeightSpec":
        """Weight that makes a bracket quantity equal the parenthesised one.

        For constant ``p`` the change of variables ``u -> t + l u`` gives
        ``[.] = l**(n - n/p) * (.)``; dividing the weight by that factor
        removes the Jacobian.
        """
        e = n - n / p
        return self.rescaled(lambda l: l ** (-e), f"{self.label}*l^-{e:g}")

    def spot_check(self, seed: int = 0, samples: int = 200) -> dict:
        """Check the declared phi flags on random samples."""
        rng = np.random.default_rng(seed)
        x = np.sort(rng.uniform(0, 10, samples))
        y = rng.uniform(0, 10, samples)
        phi = self.phi
        out = {"phi0_nonneg": bool(phi(np.zeros(1))[0] >= 0)}
        if self.monotone:
            out["monotone"] = bool(np.all(np.diff(phi(x)) >= -1e-12))
        if self.convex:
            a, b = rng.uniform(0, 10, samples), rng.uniform(0, 10, samples)
            out["convex"] = bool(np.all(phi((a + b) / 2) <= (phi(a) + phi(b)) / 2 + 1e-9))
        if self.phi_tilde is not None:
            out["submultiplicative"] = bool(
                np.all(phi(x * y) <= self.phi_tilde(y) * phi(x) * (1 + 1e-12) + 1e-12)
            )
        ls = np.geomspace(1e-3, 1e3, 13)
        out["weight_positive"] = bool(all(self.weight(l, None if self.t_independent else
                                                      np.zeros(1)) > 0 for l in ls))
        return out


@dataclass(frozen=True, eq=False)
class ClassSpec:
    variant: Variant
    exponent: ExponentField
    weights: WeightSpec
    equi: bool
    domain: Domain

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "exponent", as_exponent(self.exponent))
        if self.variant is Variant.CONSTANT_P:
            if not self.exponent.is_constant:
                raise ValueError("constant-exponent class needs a constant exponent")
            if not (self.weights.phi_is_identity and self.weights.kind == "weyl"):
                raise ValueError("constant-exponent class needs phi = id and F = l^(-n/p)")
            if not math.isclose(self.weights.sigma, self.domain.n / self.exponent.p_minus):
                raise ValueError("weight exponent must equal n/p")
        if self.variant is Variant.TRIPLE_LAMBDA and not self.domain.has_double_prime:
            raise ValueError("triple-set class needs a second translation set")

    @property
    def n(self) -> int:
        return self.domain.n

    def summary(self) -> dict:
        return {
            "variant": self.variant.value,
            "exponent": self.exponent.label,
            "weight": self.weights.label,
            "equi": self.equi,
        }


def constant_p_spec(domain: Domain, p: float, equi: bool = True) -> ClassSpec:
    return ClassSpec(Variant.CONSTANT_P, ExponentField.constant(p),
                     WeightSpec.weyl(domain.n, p), equi, domain)


# quantities ----------------------------------------------------------------


def _phi_of(h: FunctionHandle, phi) -> FunctionHandle:
    def func(t, x):
        return phi(h.norms(t, x))

    return FunctionHandle(func=func, n=h.n, label=f"phi|{h.label}|", params=h.params,
                          breaks=h.breaks, piecewise_constant=h.piecewise_constant)


def _difference(F: FunctionHandle, tau) -> FunctionHandle:
    return F.translate(tau) - F


def quantities_on_grid(F: FunctionHandle, spec: ClassSpec, tau, l: float, t_grid,
                       x=None, quad: QuadratureConfig = DEFAULT_QUAD) -> np.ndarray:
    """The class quantity at every point of ``t_grid`` (one parameter)."""
    if l <= 0:
        raise ValueError("scale must be positive")
    t_grid = as_points(t_grid, spec.n)
    D = _difference(F, tau)
    w = spec.weights
    phi, p, omega = w.phi, spec.exponent, spec.domain.omega
    v = spec.variant
    if v in (Variant.PAREN, Variant.TRIPLE_LAMBDA, Variant.PAREN_1, Variant.PAREN_2, Variant.CONSTANT_P):
        cells = [omega.cell(t, l) for t in t_grid]
        weights = w.values(l, t_grid)
        if v in (Variant.PAREN, Variant.TRIPLE_LAMBDA):
            inner = D if w.phi_is_identity else _phi_of(D, phi)
            return weights * cell_norms(inner, p, cells, quad, x)
        norms = cell_norms(D, p, cells, quad, x)
        if v is Variant.CONSTANT_P:
            return weights * norms
        if v is Variant.PAREN_1:
            return weights * phi(norms)
        return phi(weights * norms)
    # bracketed forms: rescaled translate F(t + tau + l u) on the reference cube
    scale = l**spec.n * w.values(l, t_grid)
    out = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        Dt = D.dilate(l, shift=t)
        if v is Variant.BRACKET:
            inner = Dt if w.phi_is_identity else _phi_of(Dt, phi)
            out[i] = scale[i] * luxemburg_norm(inner, p, omega, quad, x=x)
        else:
            nrm = luxemburg_norm(Dt, p, omega, quad, x=x)
            out[i] = scale[i] * float(phi(np.array([nrm]))[0]) if v is Variant.BRACKET_1 \
                else float(phi(np.array([scale[i] * nrm]))[0])
    return out


def class_quantity(F: FunctionHandle, spec: ClassSpec, tau, l: float, t, x=None,
                   quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """One weighted quantity for translation ``tau`` on the cell at ``t``."""
    return float(quantities_on_grid(F, spec, tau, l, as_points(t, spec.n), x, quad)[0])


def _scales(spec: ClassSpec, l_or_schedule) -> list[float]:
    if spec.equi:
        if isinstance(l_or_schedule, (LSchedule, list, tuple)):
            raise ValueError("equi classes take a single scale")
        return [float(l_or_schedule)]
    if isinstance(l_or_schedule, LSchedule):
        return l_or_schedule.tail_scales
    return [float(v) for v in l_or_schedule]


def sup_quantity(F: FunctionHandle, spec: ClassSpec, tau, l_or_schedule, t_grid=None,
                 quad: QuadratureConfig = DEFAULT_QUAD) -> dict:
    """Max of the class quantity over scales, probe grid and parameters."""
    worst = {"value": -math.inf, "t": None, "x": None, "l": None}
    for l in _scales(spec, l_or_schedule):
        grid = spec.domain.t_grid(l) if t_grid is None else as_points(t_grid, spec.n)
        if len(grid) == 0:
            raise ValueError("empty probe grid")
        for xi, x in enumerate(F.params):
            vals = quantities_on_grid(F, spec, tau, l, grid, x, quad)
            k = int(np.argmax(vals))
            if vals[k] > worst["value"]:
                worst = {"value": float(vals[k]), "t": [float(c) for c in grid[k]],
                         "x": xi, "l": l}
    return worst


def verify_period(F: FunctionHandle, spec: ClassSpec, tau, eps: float, l_or_schedule,
                  t_grid=None, quad: QuadratureConfig = DEFAULT_QUAD):
    """Is ``tau`` an ``eps``-almost period of ``F`` for the class?

    For equi classes ``l_or_schedule`` is one scale; otherwise it is an
    :class:`LSchedule` (or explicit list of scales) whose tail stands in for
    the limsup.  Returns ``(passed, worst_case)``.
    """
    worst = sup_quantity(F, spec, tau, l_or_schedule, t_grid, quad)
    return worst["value"] < eps, worst


# search ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SearchConfig:
    """Schedules and budget for :func:`certify`.

    ``scales`` lists the fixed scales tried in order for equi classes;
    ``schedule`` supplies the tail for limsup classes.  ``prefilter`` maps an
    ``(m, n)`` array of candidate translations to a boolean mask and is
    applied before any quadrature.
    """

    L_schedule: tuple = (1.0, 2.0, 4.0)
    scales: tuple = (1.0, 2.0, 4.0, 8.0)
    schedule: LSchedule = LSchedule(1.0, 2.0, 12)
    tau_step: float = 0.1
    max_evaluations: int = 200_000
    prefilter: Callable[[np.ndarray], np.ndarray] | None = None
    quad: QuadratureConfig = DEFAULT_QUAD

    def to_dict(self) -> dict:
        return {
            "L_schedule": list(self.L_schedule),
            "scales": list(self.scales),
            "schedule": self.schedule.to_dict(),
            "tau_step": self.tau_step,
            "max_evaluations": self.max_evaluations,
            "prefilter": self.prefilter is not None,
            "quadrature": self.quad.fingerprint(),
        }


@dataclass
class Certificate:
    epsilon: float
    l: float | None
    l_tail: list | None
    L: float
    probes: list
    witnesses: dict
    measured: dict
    grids: dict
    spec: dict
    certified: bool = True

    def to_dict(self) -> dict:
        return {
            "kind": "certificate",
            "epsilon": self.epsilon,
            "l": self.l,
            "l_tail": self.l_tail,
            "L": self.L,
            "probes": self.probes,
            "witnesses": {str(k): v for k, v in sorted(self.witnesses.items())},
            "measured": {str(k): v for k, v in sorted(self.measured.items())},
            "grids": self.grids,
            "spec": self.spec,
        }


@dataclass
class FailureTrace:
    epsilon: float
    l: float | None
    l_tail: list | None
    L: float
    probes: list
    unwitnessed: list
    budget_exhausted: bool
    evaluations: int
    grids: dict
    spec: dict
    witnesses: dict = field(default_factory=dict)
    certified: bool = False

    def to_dict(self) -> dict:
        return {
            "kind": "failure",
            "label": "not certified at resolution" + (" (search budget exhausted)"
                                                      if self.budget_exhausted else ""),
            "epsilon": self.epsilon,
            "l": self.l,
            "l_tail": self.l_tail,
            "L": self.L,
            "probes": self.probes,
            "unwitnessed": self.unwitnessed,
            "budget_exhausted": self.budget_exhausted,
            "evaluations": self.evaluations,
            "witnesses": {str(k): v for k, v in sorted(self.witnesses.items())},
            "grids": self.grids,
            "spec": self.spec,
        }


class _Budget(Exception):
    pass


def candidate_taus(spec: ClassSpec, t0, L: float, step: float) -> np.ndarray:
    """Lattice points of ``step * Z^n`` in ``B(t0, L)`` and the allowed set.

    Ordered lexicographically.
    """
    t0 = as_vector(t0, spec.n)
    pts = lattice_points(t0 - L, t0 + L, step)
    pts = pts[np.linalg.norm(pts - t0, axis=1) <= L * (1 + 1e-12)]
    pred = (spec.domain.in_lambda_double_prime if spec.variant is Variant.TRIPLE_LAMBDA
            else spec.domain.in_lambda_prime)
    if pred is not None and len(pts):
        pts = pts[np.asarray(pred(pts), dtype=bool)]
    return pts


def _grid_record(spec: ClassSpec, search: SearchConfig) -> dict:
    return {"domain": spec.domain.fingerprint(), "search": search.to_dict()}


def certify(F: FunctionHandle, spec: ClassSpec, eps: float, search: SearchConfig = SearchConfig()):
    """Search witnesses ``tau`` for every probe.

    Returns a :class:`Certificate` when every probe is witnessed at some
    ``(l, L)`` and a :class:`FailureTrace` for the last ``(l, L)`` tried
    otherwise.
    """
    probes = [list(p) for p in spec.domain.probes]
    if not probes:
        raise ValueError("probe list is empty")
    memo: dict = {}
    counter = {"n": 0}
    prefilter = search.prefilter

    def check(tau, level):
        key = (tuple(tau), level)
        if key not in memo:
            if counter["n"] >= search.max_evaluations:
                raise _Budget
            counter["n"] += 1
            memo[key] = verify_period(F, spec, tau, eps, level, quad=search.quad)[1]["value"]
        return memo[key]

    levels = list(search.scales) if spec.equi else [search.schedule]
    tail = None if spec.equi else search.schedule.tail_scales
    grids = _grid_record(spec, search)
    last = None
    for level in levels:
        for L in search.L_schedule:
            witnesses, measured, unwitnessed = {}, {}, []
            try:
                for i, t0 in enumerate(probes):
                    cands = candidate_taus(spec, t0, L, search.tau_step)
                    if prefilter is not None and len(cands):
                        cands = cands[np.asarray(prefilter(cands), dtype=bool)]
                    best = (math.inf, None)
                    for tau in cands:
                        q = check(tau, level)
                        if q < eps:
                            witnesses[i] = [float(c) for c in tau]
                            measured[i] = q
                            break
                        if q < best[0]:
                            best = (q, [float(c) for c in tau])
                    else:
                        unwitnessed.append({"probe": t0, "min_quantity": best[0],
                                            "argmin_tau": best[1], "scanned": int(len(cands))})
            except _Budget:
                return FailureTrace(eps, None if not spec.equi else float(level), tail, L,
                                    probes, unwitnessed, True, counter["n"], grids,
                                    spec.summary(), witnesses)
            l_value = float(level) if spec.equi else None
            if not unwitnessed:
                return Certificate(eps, l_value, tail, L, probes, witnesses, measured,
                                   grids, spec.summary())
            last = FailureTrace(eps, l_value, tail, L, probes, unwitnessed, False,
                                counter["n"], grids, spec.summary(), witnesses)
    return last


def replay_certificate(F: FunctionHandle, spec: ClassSpec, cert: Certificate,
                       search: SearchConfig = SearchConfig()) -> dict:
    """Re-run every stored witness and compare measured values exactly."""
    level = cert.l if spec.equi else search.schedule
    remeasured, identical = {}, True
    for k, tau in cert.witnesses.items():
        ok, worst = verify_period(F, spec, tau, cert.epsilon, level, quad=search.quad)
        remeasured[k] = worst["value"]
        identical &= ok and worst["value"] == cert.measured[k]
    return {"identical": bool(identical), "measured": remeasured}


# consequences of membership ----------------------------------------------------


@dataclass
class ContinuityResult:
    found: bool
    delta: float | None
    l: float | None
    value: float | None
    trace: list


def equi_uniform_continuity_check(F: FunctionHandle, p: float, eps: float, delta_schedule,
                                  domain: Domain, scales=(1.0, 2.0, 4.0, 8.0, 16.0, 32.0),
                                  shifts_per_axis: int = 4,
                                  quad: QuadratureConfig = DEFAULT_QUAD) -> ContinuityResult:
    """Find ``(delta, l)`` making all small shifts ``eps``-close on every cell.

    Shifts ``v`` run over a lattice in the ball of radius ``delta``.
    """
    spec = constant_p_spec(domain, p, equi=True)
    trace = []
    for l in scales:
        for delta in delta_schedule:
            vs = lattice_points(-delta * np.ones(domain.n), delta * np.ones(domain.n),
                                delta / shifts_per_axis)
            vs = vs[np.linalg.norm(vs, axis=1) <= delta * (1 + 1e-12)]
            worst = max(sup_quantity(F, spec, v, l, quad=quad)["value"] for v in vs)
            trace.append({"l": l, "delta": delta, "value": worst})
            if worst < eps:
                return ContinuityResult(True, delta, l, worst, trace)
    return ContinuityResult(False, None, None, None, trace)


def stepanov_bound_from_ap(F: FunctionHandle, certificate, spec: ClassSpec, M_reach: float,
                           quad: QuadratureConfig = DEFAULT_QUAD) -> dict:
    """Bound the scaled cell norms of an equi-certified ``F``.

    Each grid translate ``t`` is moved by the witness of the probe ``t0``
    closest to ``-t``; the triangle inequality then gives
    ``|F|_{t+l.Omega} <= eps * l^(n/p) + sup_{|v| <= M + L} |F|_{v+l.Omega}``.
    Returns the bound in raw and ``l^(-n/p)``-scaled form and checks it on
    the probe grid.
    """
    if not isinstance(certificate, Certificate):
        raise PreconditionError("no equi certificate: the function was not certified")
    if not spec.equi or spec.variant is not Variant.CONSTANT_P or certificate.l is None:
        raise PreconditionError("needs an equi constant-exponent certificate")
    n, p, l = spec.n, spec.exponent.p_minus, certificate.l
    omega = spec.domain.omega
    grid = spec.domain.t_grid(l)
    probes = np.asarray(certificate.probes)
    taus = np.asarray([certificate.witnesses[i] for i in range(len(probes))])
    reach = M_reach + certificate.L
    v_box = Box((-reach,) * n, (reach,) * n)
    vs = lattice_points(v_box.lo, v_box.hi, spec.domain.grid_step)
    vs = vs[np.linalg.norm(vs, axis=1) <= reach]
    sup_v = max(float(np.max(cell_norms(F, p, [omega.cell(v, l) for v in vs], quad, x)))
                for x in F.params)
    raw = certificate.epsilon * l ** (n / p) + sup_v
    scaled = l ** (-n / p) * raw
    measured, unreachable, chain_ok = 0.0, 0, True
    for x in F.params:
        norms = cell_norms(F, p, [omega.cell(t, l) for t in grid], quad, x)
        measured = max(measured, float(np.max(norms)) * l ** (-n / p))
        for t, nt in zip(grid, norms):
            d = np.linalg.norm(probes + t, axis=1)
            j = int(np.argmin(d))
            if d[j] > M_reach:
                unreachable += 1
                continue
            moved = luxemburg_norm(F, p, omega.cell(t + taus[j], l), quad, x=x)
            chain_ok &= nt <= certificate.epsilon * l ** (n / p) + moved + 1e-9
    return {
        "l": l,
        "bound_raw": raw,
        "bound_scaled": scaled,
        "measured_scaled_sup": measured,
        "holds": bool(chain_ok and measured <= scaled + 1e-9),
        "unreachable_grid_points": unreachable,
    }


def dilated_setting(spec: ClassSpec, c: float) -> ClassSpec:
    """Class in which ``u -> F(c u)`` lives when ``F`` lives in ``spec``.

    Constant exponent only: the cube, probe set and probe box are divided by
    ``c`` and the weight becomes ``|c|^(n/p) F(l, c t)``.
    """
    if not spec.exponent.is_constant:
        raise ValueError("dilation transfer implemented for constant exponents")
    d, n, p = spec.domain, spec.n, spec.exponent.p_minus

    def div(box: Box) -> Box:
        a, b = np.asarray(box.lo) / c, np.asarray(box.hi) / c
        return Box(tuple(np.minimum(a, b)), tuple(np.maximum(a, b)))

    def pred(base):
        return None if base is None else (lambda pts: base(c * np.asarray(pts)))

    domain = Domain(
        n=n, probe_box=div(d.probe_box), probes=tuple(tuple(np.asarray(q) / c) for q in d.probes),
        omega=div(d.omega), in_lambda_prime=pred(d.in_lambda_prime),
        in_lambda_double_prime=pred(d.in_lambda_double_prime),
        grid_step=d.grid_step / abs(c), max_per_axis=d.max_per_axis,
    )
    w = spec.weights
    base = w.weight
    factor = abs(c) ** (n / p)
    weights = WeightSpec(
        weight=lambda l, t: factor * base(l, None if t is None else c * np.asarray(t)),
        phi=w.phi, phi_tilde=w.phi_tilde, phi_is_identity=w.phi_is_identity,
        t_independent=w.t_independent, label=f"{factor:g}*{w.label}(c.)",
    )
    variant = Variant.PAREN if spec.variant is Variant.CONSTANT_P else spec.variant
    return ClassSpec(variant, spec.exponent, weights, spec.equi, domain)
