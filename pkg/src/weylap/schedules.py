"""Geometric scale schedules and tail-window convergence reports."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LSchedule:
    """Scales ``l0 * ratio**k`` for ``k = 0..K``."""

    l0: float = 1.0
    ratio: float = 2.0
    K: int = 10
    tail: int = 3

    def __post_init__(self):
        if self.l0 <= 0 or self.ratio <= 1 or self.K < 2:
            raise ValueError("schedule needs l0 > 0, ratio > 1 and K >= 2")
        if not 1 <= self.tail <= self.K + 1:
            raise ValueError("tail window must fit inside the schedule")

    @property
    def scales(self) -> list[float]:
        return [self.l0 * self.ratio**k for k in range(self.K + 1)]

    @property
    def tail_scales(self) -> list[float]:
        return self.scales[-self.tail:]

    def to_dict(self) -> dict:
        return {"l0": self.l0, "ratio": self.ratio, "K": self.K, "tail": self.tail}


@dataclass
class ConvergenceReport:
    """Values along increasing scales with a Cauchy test on the tail.

    ``limit_estimate`` is the last sampled value; ``cauchy_gap`` is the
    spread of the last ``tail`` values.
    """

    samples: list[tuple[float, float]]
    cauchy_gap: float
    limit_estimate: float
    converged: bool
    tol: float
    notes: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, scales, values, tol: float = 1e-2, tail: int = 3, relative=False):
        scales = [float(s) for s in scales]
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise ValueError("scales must be strictly increasing")
        values = list(values)
        if not values:
            return cls([], 0.0, float("nan"), False, tol)
        window = np.asarray(values[-tail:], dtype=complex)
        gap = float(np.max(np.abs(window[:, None] - window[None, :])))
        last = values[-1]
        bound = tol * max(abs(last), 1e-300) if relative else tol
        return cls(
            samples=list(zip(scales, values)),
            cauchy_gap=gap,
            limit_estimate=last,
            converged=bool(gap < bound) and bool(np.all(np.isfinite(window))),
            tol=tol,
        )

    @property
    def scales(self) -> list[float]:
        return [s for s, _ in self.samples]

    @property
    def values(self) -> list:
        return [v for _, v in self.samples]

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, complex):
                return [v.real, v.imag]
            return float(v)

        return {
            "samples": [[s, enc(v)] for s, v in self.samples],
            "cauchy_gap": self.cauchy_gap,
            "limit_estimate": enc(self.limit_estimate),
            "converged": self.converged,
            "tol": self.tol,
            "notes": self.notes,
        }
