"""Bohr-Fourier coefficients, spectra and trigonometric approximation."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .function_model import Box, Domain, FunctionHandle, as_points, as_vector
from .schedules import ConvergenceReport, LSchedule
from .vexp_lebesgue import QuadratureConfig, integrate


@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    """``P(t) = sum_j c_j exp(i <lambda_j, t>)``.

    ``frequencies`` has shape ``(k, n)``; ``coefficients`` has shape ``(k,)``
    or ``(k, d)`` for vector values.
    """

    frequencies: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        lam = np.atleast_2d(np.asarray(self.frequencies, dtype=float))
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape[0] != lam.shape[0]:
            raise ValueError("one coefficient per frequency")
        object.__setattr__(self, "frequencies", lam)
        object.__setattr__(self, "coefficients", c)

    @property
    def n(self) -> int:
        return self.frequencies.shape[1]

    def __len__(self) -> int:
        return self.frequencies.shape[0]

    def __call__(self, t) -> np.ndarray:
        pts = as_points(t, self.n)
        return np.exp(1j * pts @ self.frequencies.T) @ self.coefficients

    @property
    def sup_bound(self) -> float:
        c = self.coefficients
        return float(np.sum(np.abs(c) if c.ndim == 1 else np.linalg.norm(c, axis=1)))

    def handle(self, label: str = "P") -> FunctionHandle:
        bw = float(np.max(np.linalg.norm(self.frequencies, axis=1))) if len(self) else 0.0
        return FunctionHandle(func=lambda t, x: self(t), n=self.n, label=label,
                              sup_bound=self.sup_bound, bandwidth=bw)

    def truncated(self, m: int) -> "TrigPolynomial":
        return TrigPolynomial(self.frequencies[:m], self.coefficients[:m])

    def coefficient_at(self, lam, atol: float = 1e-12) -> complex:
        lam = as_vector(lam, self.n)
        hit = np.all(np.abs(self.frequencies - lam) <= atol, axis=1)
        return complex(np.sum(self.coefficients[hit])) if hit.any() else 0j

    def near_period_bound(self, taus) -> np.ndarray:
        """Upper bound ``sum_j |c_j| |exp(i <lambda_j, tau>) - 1|`` on ``sup |P(.+tau) - P|``."""
        taus = as_points(taus, self.n)
        c = np.abs(self.coefficients) if self.coefficients.ndim == 1 else \
            np.linalg.norm(self.coefficients, axis=1)
        return np.abs(np.exp(1j * taus @ self.frequencies.T) - 1.0) @ c

    def mean_square_period_bound(self, taus) -> np.ndarray:
        """``(sum_j |c_j|^2 |exp(i <lambda_j, tau>) - 1|^2)^(1/2)``.

        The large-cell limit of the scaled ``L^2`` norm of ``P(. + tau) - P``;
        a screen for candidate translations, not a bound at finite scale.
        """
        taus = as_points(taus, self.n)
        c2 = np.abs(self.coefficients) ** 2
        if c2.ndim > 1:
            c2 = c2.sum(axis=1)
        return np.sqrt(np.abs(np.exp(1j * taus @ self.frequencies.T) - 1.0) ** 2 @ c2)


def oscillation_quad(F: FunctionHandle, lam, T: float, base: QuadratureConfig | None = None,
                     per_oscillation: int = 8) -> QuadratureConfig:
    """Midpoint settings keeping ``per_oscillation`` nodes per period of the integrand."""
    base = base or QuadratureConfig(points_per_axis=32, max_refinements=0)
    omega = float(np.max(np.abs(np.atleast_1d(lam)))) + (F.bandwidth or 0.0)
    ppu = per_oscillation * omega / (2 * math.pi)
    return replace(base, points_per_unit=max(base.points_per_unit, ppu))


def _modulated(F: FunctionHandle, lam) -> FunctionHandle:
    lam = as_vector(lam, F.n)

    def func(t, x):
        v = np.asarray(F.func(t, x))
        ph = np.exp(-1j * (t @ lam))
        return ph * v if v.ndim == 1 else ph[:, None] * v

    return FunctionHandle(func=func, n=F.n, label=f"e(-{lam}){F.label}", params=F.params,
                          breaks=F.breaks,
                          piecewise_constant=F.piecewise_constant and not np.any(lam),
                          bandwidth=None)


def _mean(F, lam, box: Box, quad, x=None):
    return integrate(_modulated(F, lam), box, quad, x) / box.volume


def _as_scales(T_schedule) -> list[float]:
    return T_schedule.scales if isinstance(T_schedule, LSchedule) else [float(T) for T in T_schedule]


def _tail(T_schedule) -> int:
    return T_schedule.tail if isinstance(T_schedule, LSchedule) else 3


def bohr_fourier_coefficient(F: FunctionHandle, lam, T_schedule, s=None, tol: float = 1e-2,
                             quad: QuadratureConfig | None = None, x=None):
    """Mean of ``exp(-i <lam, t>) F(t)`` over ``s + [0, T]^n`` along ``T_schedule``.

    Returns ``(tail value, report)``; a non-converged report is flagged but
    the value is still returned.
    """
    s = np.zeros(F.n) if s is None else as_vector(s, F.n)
    scales = _as_scales(T_schedule)
    values = []
    for T in scales:
        q = oscillation_quad(F, lam, T, quad)
        values.append(complex(np.sum(_mean(F, lam, Box(tuple(s), tuple(s + T)), q, x))))
    report = ConvergenceReport.from_samples(scales, values, tol, _tail(T_schedule))
    return report.limit_estimate, report


def symmetric_cube_coefficient(F: FunctionHandle, lam, T_schedule, s=None, tol: float = 1e-2,
                               quad: QuadratureConfig | None = None, x=None):
    """Mean over ``s + [-T, T]^n``, cross-checked against the one-sided cube."""
    s = np.zeros(F.n) if s is None else as_vector(s, F.n)
    scales = _as_scales(T_schedule)
    values = []
    for T in scales:
        q = oscillation_quad(F, lam, 2 * T, quad)
        values.append(complex(np.sum(_mean(F, lam, Box(tuple(s - T), tuple(s + T)), q, x))))
    report = ConvergenceReport.from_samples(scales, values, tol, _tail(T_schedule))
    asym, _ = bohr_fourier_coefficient(F, lam, [scales[-1]], s, tol, quad, x)
    report.notes["one_sided"] = [asym.real, asym.imag]
    report.notes["difference"] = abs(asym - report.limit_estimate)
    return report.limit_estimate, report


def shift_independence_check(F: FunctionHandle, lam, T: float, s_list, eps: float,
                             quad: QuadratureConfig | None = None) -> dict:
    """Max deviation of shifted-cube means from the mean over ``[0, T]^n``."""
    q = oscillation_quad(F, lam, T, quad)
    base = complex(np.sum(_mean(F, lam, Box((0.0,) * F.n, (T,) * F.n), q)))
    devs = []
    for s in s_list:
        s = as_vector(s, F.n)
        v = complex(np.sum(_mean(F, lam, Box(tuple(s), tuple(s + T)), q)))
        devs.append(abs(v - base))
    dev = max(devs)
    return {"passed": bool(dev < eps), "max_deviation": dev, "deviations": devs}


@dataclass
class SpectrumEstimate:
    entries: list
    threshold: float

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "entries": [{"lambda": list(map(float, lam)), "value": [v.real, v.imag],
                         "report": r.to_dict()} for lam, v, r in self.entries],
        }


def spectrum_scan(F: FunctionHandle, lam_grid, threshold: float, T_schedule,
                  quad: QuadratureConfig | None = None) -> SpectrumEstimate:
    """Frequencies on ``lam_grid`` whose tail coefficient exceeds ``threshold``."""
    entries = []
    for lam in as_points(lam_grid, F.n):
        v, rep = bohr_fourier_coefficient(F, lam, T_schedule, quad=quad)
        if abs(v) > threshold:
            entries.append((lam, v, rep))
    entries.sort(key=lambda e: -abs(e[1]))
    return SpectrumEstimate(entries, threshold)


def weyl_approx_error(F: FunctionHandle, P: TrigPolynomial | FunctionHandle, p: float,
                      schedule: LSchedule, domain: Domain, quad: QuadratureConfig | None = None):
    """Weyl distance between ``F`` and a trigonometric polynomial."""
    from .weyl_metrics import weyl_distance

    Ph = P.handle() if isinstance(P, TrigPolynomial) else P
    kw = {} if quad is None else {"quad": quad}
    return weyl_distance(F, Ph, p, schedule, domain, **kw)


def trig_approx_implies_ap_check(F: FunctionHandle, P_seq, p: float, eps: float, domain: Domain,
                                 schedule: LSchedule, search, quad: QuadratureConfig | None = None,
                                 growth_tol: float = 0.5) -> dict:
    """Certify ``F`` using near-periods of a close trigonometric approximant.

    Precondition: some ``P_k`` is within ``eps/3`` of ``F`` in the Weyl
    distance with a converged report.  The first such ``P_k`` screens the
    candidate translations (bound below ``eps/3``) before ``F`` itself is
    certified at ``eps``.
    """
    from .ap_certifier import Certificate, certify, constant_p_spec

    errors, reports = [], []
    for P in P_seq:
        e, rep = weyl_approx_error(F, P, p, schedule, domain, quad)
        errors.append(e)
        reports.append(rep)
    K = next((k for k, (e, r) in enumerate(zip(errors, reports))
              if e < eps / 3 and r.converged), None)
    out = {"errors": errors, "converged": [r.converged for r in reports], "K": K}
    if K is None:
        out.update(precondition=False, certified=False)
        return out
    PK = P_seq[K]

    def prefilter(taus):
        return PK.near_period_bound(taus) < eps / 3

    sub = replace(search, prefilter=prefilter, **({} if quad is None else {"quad": quad}))
    result = certify(F, constant_p_spec(domain, p, equi=True), eps, sub)
    out.update(precondition=True, certified=isinstance(result, Certificate), result=result)
    return out
