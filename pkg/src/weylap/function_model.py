"""Function and domain data model.

A :class:`FunctionHandle` is a vectorised map ``F(t; x)`` from points of
``R^n`` (rows of an ``(m, n)`` array) and a parameter point ``x`` into
complex scalars or vectors.  Handles carry the metadata the numerical
layers need: a uniform bound when one is known, the axis-aligned
discontinuity locations (so quadrature never straddles a jump), and a flag
for piecewise-constant data (for which the midpoint rule is exact).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

BreaksFn = Callable[[int, float, float], np.ndarray]


def as_points(t, n: int) -> np.ndarray:
    """Coerce ``t`` to a float array of shape ``(m, n)``."""
    arr = np.asarray(t, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, n) if arr.size == n and n > 1 else arr.reshape(-1, n)
    if arr.ndim != 2 or arr.shape[1] != n:
        raise ValueError(f"expected points of dimension {n}, got shape {np.shape(t)}")
    return arr


def as_vector(v, n: int) -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.size == 1 and n > 1:
        arr = np.full(n, float(arr[0]))
    if arr.size != n:
        raise ValueError(f"expected a vector of dimension {n}, got {np.shape(v)}")
    return arr


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``[lo_1, hi_1] x ... x [lo_n, hi_n]``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi):
            raise ValueError("box corners have different dimensions")
        if any(b < a for a, b in zip(lo, hi)):
            raise ValueError(f"inverted box {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def unit(cls, n: int) -> "Box":
        return cls((0.0,) * n, (1.0,) * n)

    @classmethod
    def cube(cls, center, half_width: float, n: int) -> "Box":
        c = as_vector(center, n)
        return cls(tuple(c - half_width), tuple(c + half_width))

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def bounded(self) -> bool:
        return all(map(math.isfinite, self.lo + self.hi))

    def cell(self, t, l: float) -> "Box":
        """The translated, scaled copy ``t + l * self``."""
        t = as_vector(t, self.n)
        a = t + l * np.asarray(self.lo)
        b = t + l * np.asarray(self.hi)
        return Box(tuple(np.minimum(a, b)), tuple(np.maximum(a, b)))

    def contains(self, points, atol: float = 0.0) -> np.ndarray:
        pts = as_points(points, self.n)
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return np.all((pts >= lo - atol) & (pts <= hi + atol), axis=1)

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}


def lattice_points(lo, hi, step: float) -> np.ndarray:
    """Points of ``step * Z^n`` inside ``[lo, hi]``, lexicographic order."""
    lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
    axes = []
    for a, b in zip(lo, hi):
        k0, k1 = math.ceil(a / step - 1e-9), math.floor(b / step + 1e-9)
        axes.append(step * np.arange(k0, k1 + 1, dtype=float))
    if any(ax.size == 0 for ax in axes):
        return np.empty((0, lo.size))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


@dataclass(frozen=True, eq=False)
class Domain:
    """Translation set, probe set and reference cube.

    ``probe_box`` is the finite box over which suprema over the translation
    set are sampled; ``probes`` are the points of the probe set at which
    relative density is checked by the certifier.
    """

    n: int
    probe_box: Box
    probes: tuple = ()
    omega: Box | None = None
    lambda_box: Box | None = None
    in_lambda: Callable[[np.ndarray], np.ndarray] | None = None
    in_lambda_prime: Callable[[np.ndarray], np.ndarray] | None = None
    in_lambda_double_prime: Callable[[np.ndarray], np.ndarray] | None = None
    grid_step: float = 0.5
    max_per_axis: int = 64

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if self.omega is None:
            object.__setattr__(self, "omega", Box.unit(self.n))
        if self.lambda_box is None:
            object.__setattr__(
                self, "lambda_box", Box((-math.inf,) * self.n, (math.inf,) * self.n)
            )
        if self.omega.volume <= 0:
            raise ValueError("reference cube must have positive volume")
        probes = tuple(tuple(as_vector(p, self.n)) for p in self.probes)
        object.__setattr__(self, "probes", probes)
        if probes:
            pts = np.asarray(probes)
            if self.in_lambda_prime is not None and not np.all(self.in_lambda_prime(pts)):
                raise ValueError("a probe lies outside the declared probe set")
            if not np.all(self.probe_box.contains(pts, atol=1e-12)):
                raise ValueError("probe box does not contain every probe")

    @classmethod
    def whole_space(cls, n: int, radius: float = 10.0, probes=None, **kw) -> "Domain":
        if probes is None:
            probes = [(0.0,) * n]
        return cls(n=n, probe_box=Box.cube(0.0, radius, n), probes=tuple(probes), **kw)

    @property
    def has_double_prime(self) -> bool:
        return self.in_lambda_double_prime is not None

    def member(self, pts: np.ndarray) -> np.ndarray:
        pts = as_points(pts, self.n)
        ok = self.lambda_box.contains(pts)
        if self.in_lambda is not None:
            ok &= np.asarray(self.in_lambda(pts), dtype=bool)
        return ok

    def t_grid(self, l: float = 1.0, step: float | None = None) -> np.ndarray:
        """Probe grid for sups over the translation set at scale ``l``.

        The lattice is anchored at the origin and covers the probe box
        widened on the low side by one cell, so every cell meeting the box
        from below is represented.  The step grows with ``l`` so the grid
        never exceeds ``max_per_axis`` points per axis.
        """
        base = self.grid_step if step is None else step
        lo = np.asarray(self.probe_box.lo) - l * np.asarray(self.omega.hi)
        hi = np.asarray(self.probe_box.hi) - l * np.asarray(self.omega.lo)
        span = float(np.max(hi - lo))
        h = base * max(1, math.ceil(span / (base * self.max_per_axis)))
        pts = lattice_points(lo, hi, h)
        return pts[self.member(pts)]

    def fingerprint(self) -> dict:
        return {
            "n": self.n,
            "probe_box": self.probe_box.to_dict(),
            "omega": self.omega.to_dict(),
            "grid_step": self.grid_step,
            "max_per_axis": self.max_per_axis,
            "probes": [list(p) for p in self.probes],
        }


def _no_breaks(axis: int, a: float, b: float) -> np.ndarray:
    return np.empty(0)


def integer_breaks(offset: float = 0.0, spacing: float = 1.0) -> BreaksFn:
    """Breakpoints at ``offset + spacing * Z`` on every axis."""

    def breaks(axis, a, b):
        k0 = math.floor((a - offset) / spacing) + 1
        k1 = math.ceil((b - offset) / spacing) - 1
        pts = offset + spacing * np.arange(k0, k1 + 1, dtype=float)
        return pts[(pts > a) & (pts < b)]

    return breaks


def fixed_breaks(per_axis: Sequence[Sequence[float]]) -> BreaksFn:
    """Breakpoints from an explicit finite list per axis."""
    arrays = [np.sort(np.asarray(v, dtype=float)) for v in per_axis]

    def breaks(axis, a, b):
        pts = arrays[axis]
        return pts[(pts > a) & (pts < b)]

    return breaks


def _merge_params(*handles: "FunctionHandle") -> tuple:
    nontrivial = [h.params for h in handles if h.params != (None,)]
    if not nontrivial:
        return (None,)
    if any(p != nontrivial[0] for p in nontrivial):
        raise ValueError("handles carry different parameter sets")
    return nontrivial[0]


@dataclass(frozen=True, eq=False)
class FunctionHandle:
    """Evaluable map ``F(t; x)`` with numerical metadata.

    ``func(points, x)`` receives an ``(m, n)`` float array and one parameter
    point from ``params``; it must return an array of shape ``(m,)`` or
    ``(m, d)`` and be free of side effects.
    """

    func: Callable[[np.ndarray, Any], np.ndarray]
    n: int
    label: str = "F"
    params: tuple = (None,)
    sup_bound: float | None = None
    breaks: BreaksFn | None = None
    piecewise_constant: bool = False
    bandwidth: float | None = None
    meta: dict = field(default_factory=dict)

    def __call__(self, t, x=None) -> np.ndarray:
        pts = as_points(t, self.n)
        return np.asarray(self.func(pts, x))

    def norms(self, t, x=None) -> np.ndarray:
        """Pointwise Euclidean norm ``|F(t; x)|``."""
        vals = self(t, x)
        if vals.ndim == 1:
            out = np.abs(vals)
        else:
            out = np.sqrt(np.sum(np.abs(vals) ** 2, axis=1))
        if not np.all(np.isfinite(out)):
            raise ValueError(f"non-finite samples of {self.label}")
        return out.astype(float)

    def breakpoints(self, axis: int, a: float, b: float) -> np.ndarray:
        if self.breaks is None:
            return np.empty(0)
        pts = np.asarray(self.breaks(axis, a, b), dtype=float)
        return np.unique(pts[(pts > a) & (pts < b)])

    # combinators -----------------------------------------------------------

    def _derived(self, func, label, breaks, **kw) -> "FunctionHandle":
        kw.setdefault("params", self.params)
        kw.setdefault("sup_bound", self.sup_bound)
        kw.setdefault("piecewise_constant", self.piecewise_constant)
        kw.setdefault("bandwidth", self.bandwidth)
        return FunctionHandle(func=func, n=self.n, label=label, breaks=breaks, **kw)

    def translate(self, tau) -> "FunctionHandle":
        """``t -> F(t + tau)``."""
        tau = as_vector(tau, self.n)
        if not np.any(tau):
            return self
        base = self.breaks

        def func(t, x):
            return self.func(t + tau, x)

        breaks = None
        if base is not None:
            def breaks(axis, a, b):
                return np.asarray(base(axis, a + tau[axis], b + tau[axis])) - tau[axis]

        return self._derived(func, f"{self.label}(.+{_fmt(tau)})", breaks)

    def dilate(self, c: float, shift=0.0) -> "FunctionHandle":
        """``u -> F(shift + c * u)`` for a nonzero scalar ``c``."""
        if c == 0:
            raise ValueError("dilation factor must be nonzero")
        s = as_vector(shift, self.n)
        base = self.breaks

        def func(t, x):
            return self.func(s + c * t, x)

        breaks = None
        if base is not None:
            def breaks(axis, a, b):
                lo, hi = sorted((s[axis] + c * a, s[axis] + c * b))
                return (np.asarray(base(axis, lo, hi)) - s[axis]) / c

        bw = None if self.bandwidth is None else abs(c) * self.bandwidth
        return self._derived(func, f"{self.label}({c}*.)", breaks, bandwidth=bw)

    def map_values(self, matrix) -> "FunctionHandle":
        """Compose with a linear map on the value space."""
        A = np.atleast_2d(np.asarray(matrix))

        def func(t, x):
            v = np.asarray(self.func(t, x))
            vec = v.reshape(-1, 1) if v.ndim == 1 else v
            out = vec @ A.T
            return out[:, 0] if out.shape[1] == 1 else out

        op = float(np.linalg.norm(A, 2))
        sb = None if self.sup_bound is None else op * self.sup_bound
        return self._derived(func, f"A{self.label}", self.breaks, sup_bound=sb)

    def __mul__(self, c) -> "FunctionHandle":
        if isinstance(c, FunctionHandle):
            return _binary(self, c, np.multiply, "*")
        c = complex(c) if np.iscomplexobj(c) else float(c)

        def func(t, x):
            return c * np.asarray(self.func(t, x))

        sb = None if self.sup_bound is None else abs(c) * self.sup_bound
        return self._derived(func, f"{c}*{self.label}", self.breaks, sup_bound=sb)

    __rmul__ = __mul__

    def __neg__(self) -> "FunctionHandle":
        return self * -1.0

    def __add__(self, other: "FunctionHandle") -> "FunctionHandle":
        return _binary(self, other, np.add, "+")

    def __sub__(self, other: "FunctionHandle") -> "FunctionHandle":
        return _binary(self, other, np.subtract, "-")


def _fmt(v: np.ndarray) -> str:
    return ",".join(f"{x:g}" for x in v)


def _binary(f: FunctionHandle, g: FunctionHandle, op, sym: str) -> FunctionHandle:
    if f.n != g.n:
        raise ValueError("dimension mismatch")
    params = _merge_params(f, g)

    def func(t, x):
        a, b = np.asarray(f.func(t, x)), np.asarray(g.func(t, x))
        if a.ndim != b.ndim:
            a = a.reshape(len(t), -1)
            b = b.reshape(len(t), -1)
        return op(a, b)

    breaks = None
    if f.breaks is not None or g.breaks is not None:
        def breaks(axis, a, b):
            return np.concatenate([f.breakpoints(axis, a, b), g.breakpoints(axis, a, b)])

    sb = None
    if f.sup_bound is not None and g.sup_bound is not None:
        sb = f.sup_bound * g.sup_bound if sym == "*" else f.sup_bound + g.sup_bound
    bws = [h.bandwidth for h in (f, g)]
    bw = None if None in bws else (sum(bws) if sym == "*" else max(bws))
    return FunctionHandle(
        func=func,
        n=f.n,
        label=f"({f.label}{sym}{g.label})",
        params=params,
        sup_bound=sb,
        breaks=breaks,
        piecewise_constant=f.piecewise_constant and g.piecewise_constant,
        bandwidth=bw,
    )


def constant(c, n: int, label: str | None = None) -> FunctionHandle:
    value = complex(c) if np.iscomplexobj(c) else float(c)

    def func(t, x):
        return np.full(len(t), value)

    return FunctionHandle(
        func=func,
        n=n,
        label=label or f"const({value})",
        sup_bound=abs(value),
        breaks=_no_breaks,
        piecewise_constant=True,
        bandwidth=0.0,
    )


def zero(n: int) -> FunctionHandle:
    return constant(0.0, n, label="0")


def box_indicator(lo, hi, height: float = 1.0, label: str | None = None) -> FunctionHandle:
    """``height`` times the indicator of the closed box ``[lo, hi]``."""
    box = Box(lo, hi)
    lo_a, hi_a = np.asarray(box.lo), np.asarray(box.hi)

    def func(t, x):
        inside = np.all((t >= lo_a) & (t <= hi_a), axis=1)
        return height * inside.astype(float)

    return FunctionHandle(
        func=func,
        n=box.n,
        label=label or f"{height:g}*chi[{_fmt(lo_a)};{_fmt(hi_a)}]",
        sup_bound=abs(height),
        breaks=fixed_breaks([[a, b] for a, b in zip(box.lo, box.hi)]),
        piecewise_constant=True,
        bandwidth=None,
    )


def sum_of(handles: Sequence[FunctionHandle], n: int) -> FunctionHandle:
    out = zero(n)
    for h in handles:
        out = out + h
    return out
