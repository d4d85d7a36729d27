"""Worked example functions with their known properties.

Each entry is addressable by a string id; ``truth`` records list the
claims the test-suite checks for that function.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .function_model import (
    FunctionHandle,
    box_indicator,
    constant,
    fixed_breaks,
    integer_breaks,
)
from .harmonic import TrigPolynomial


@dataclass(frozen=True)
class Claim:
    claim_id: str
    parameters: dict
    expected: object


@dataclass(frozen=True, eq=False)
class GalleryEntry:
    handle: FunctionHandle
    truth: tuple = ()
    description: str = ""
    coefficients: TrigPolynomial | None = None   # declared Bohr-Fourier expansion


def gallery_chi_half() -> FunctionHandle:
    """Indicator of ``[0, 1/2]`` on the line."""
    return box_indicator([0.0], [0.5], label="chi[0,1/2]")


def gallery_heaviside(n: int) -> FunctionHandle:
    """Indicator of the closed nonnegative orthant in ``R^n``."""
    if n < 1:
        raise ValueError("dimension must be positive")

    def func(t, x):
        return np.all(t >= 0, axis=1).astype(float)

    return FunctionHandle(func=func, n=n, label=f"heaviside{n}", sup_bound=1.0,
                          breaks=fixed_breaks([[0.0]] * n), piecewise_constant=True)


def stryja_value(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    j = np.ceil(x)                       # x in (j-1, j]
    m = np.where(j % 2 == 0, j, j + 1)   # even m with x in (m-2, m]
    sign = np.where(j % 2 == 0, -1.0, 1.0)
    return np.where(x > 0, sign * np.sqrt(np.maximum(m, 0) / 2.0), 0.0)


def gallery_stryja_staircase() -> FunctionHandle:
    """Alternating staircase: ``+sqrt(m/2)`` on ``(m-2, m-1]``, ``-sqrt(m/2)`` on ``(m-1, m]``."""
    return FunctionHandle(func=lambda t, x: stryja_value(t[:, 0]), n=1, label="stryja",
                          sup_bound=None, breaks=integer_breaks(), piecewise_constant=True)


def gallery_product(g_list: Sequence[FunctionHandle]) -> FunctionHandle:
    """``F(t_1..t_2k) = prod_j [g_j(t_{j+k}) - g_j(t_j)]`` for scalar ``g_j`` on the line."""
    k = len(g_list)
    if k == 0 or any(g.n != 1 for g in g_list):
        raise ValueError("dimension mismatch: every factor must be one-dimensional")

    real = all(np.isrealobj(g(np.zeros((1, 1)))) for g in g_list)

    def func(t, x):
        out = np.ones(len(t), dtype=complex)
        for j, g in enumerate(g_list):
            out *= g(t[:, j + k:j + k + 1], x) - g(t[:, j:j + 1], x)
        return out.real if real else out

    sb = None
    if all(g.sup_bound is not None for g in g_list):
        sb = math.prod(2 * g.sup_bound for g in g_list)
    breaks = None
    if all(g.breaks is not None for g in g_list):
        def breaks(axis, a, b):
            return g_list[axis % k].breakpoints(0, a, b)
    bws = [g.bandwidth for g in g_list]
    return FunctionHandle(
        func=func, n=2 * k, label="product(" + ",".join(g.label for g in g_list) + ")",
        sup_bound=sb, breaks=breaks,
        piecewise_constant=all(g.piecewise_constant for g in g_list),
        bandwidth=None if None in bws else max(bws),
    )


def sine() -> FunctionHandle:
    return FunctionHandle(func=lambda t, x: np.sin(t[:, 0]), n=1, label="sin", sup_bound=1.0,
                          bandwidth=1.0)


def cosine() -> FunctionHandle:
    return FunctionHandle(func=lambda t, x: np.cos(t[:, 0]), n=1, label="cos", sup_bound=1.0,
                          bandwidth=1.0)


def sqrt_series(terms: int = 40) -> TrigPolynomial:
    """Partial sum ``sum_{k<=terms} 2^-k exp(i sqrt(k) t)``."""
    k = np.arange(1, terms + 1, dtype=float)
    return TrigPolynomial(np.sqrt(k).reshape(-1, 1), 2.0**-k)


def two_tone() -> TrigPolynomial:
    return TrigPolynomial(np.array([[1.0], [math.sqrt(2.0)]]), np.array([1.0, 1.0]))


def plane_wave_2d() -> TrigPolynomial:
    return TrigPolynomial(np.array([[1.0, -0.5]]), np.array([2.0]))


def _entries() -> dict[str, Callable[[], GalleryEntry]]:
    return {
        "chi-half": lambda: GalleryEntry(
            gallery_chi_half(),
            (Claim("weyl-null", {"p": [1, 2]}, 0.0),
             Claim("stepanov-distance", {"l": [1, 2, 4, 8]}, "(1/(2l))^(1/p)"),
             Claim("power-weight-threshold", {"p": 1, "eps": 0.1}, {"sigma=1": True, "sigma=0": False}),
             Claim("empty-spectrum", {"threshold": 0.05}, []),
             Claim("weyl-bounded", {}, True)),
            "indicator of [0, 1/2]",
        ),
        "stryja": lambda: GalleryEntry(
            gallery_stryja_staircase(),
            (Claim("weyl-bounded", {"p": 1}, False),),
            "alternating staircase with growing steps",
        ),
        "product": lambda: GalleryEntry(
            gallery_product([sine(), sine()]),
            (Claim("difference-estimate", {}, True), Claim("weyl-bounded", {}, True)),
            "product of sine differences in four variables",
        ),
        "sin": lambda: GalleryEntry(
            sine(), (Claim("cube-agreement", {}, True), Claim("weyl-bounded", {}, True)),
            "sin t", TrigPolynomial(np.array([[1.0], [-1.0]]), np.array([-0.5j, 0.5j]))),
        "cos": lambda: GalleryEntry(
            cosine(), (Claim("cube-agreement", {}, True), Claim("weyl-bounded", {}, True)),
            "cos t", TrigPolynomial(np.array([[1.0], [-1.0]]), np.array([0.5, 0.5]))),
        "const-one": lambda: GalleryEntry(
            constant(1.0, 1, label="1"),
            (Claim("cube-agreement", {}, True), Claim("weyl-bounded", {}, True)),
            "constant 1", TrigPolynomial(np.array([[0.0]]), np.array([1.0]))),
        "two-tone": lambda: GalleryEntry(
            two_tone().handle("two-tone"),
            (Claim("shift-independence", {"lambda": 1, "T": 200}, True),
             Claim("cube-agreement", {}, True), Claim("weyl-bounded", {}, True)),
            "exp(it) + exp(i sqrt2 t)", two_tone(),
        ),
        "sqrt-series": lambda: GalleryEntry(
            sqrt_series().handle("sqrt-series"),
            (Claim("limit-closure", {"eps": 0.1}, True), Claim("cube-agreement", {}, True),
             Claim("weyl-bounded", {}, True)),
            "sum 2^-k exp(i sqrt(k) t), 40 terms", sqrt_series(),
        ),
        "plane-wave-2d": lambda: GalleryEntry(
            plane_wave_2d().handle("plane-wave-2d"),
            (Claim("bohr-coefficient", {"lambda": [1.0, -0.5]}, 2.0),
             Claim("cube-agreement", {}, True), Claim("weyl-bounded", {}, True)),
            "2 exp(i(t1 - t2/2))", plane_wave_2d(),
        ),
    }


_HEAVISIDE = re.compile(r"heaviside-n(\d+)$")


def gallery_ids() -> list[str]:
    return sorted(list(_entries()) + ["heaviside-n1", "heaviside-n2"])


def get_entry(gallery_id: str) -> GalleryEntry:
    m = _HEAVISIDE.match(gallery_id)
    if m:
        n = int(m.group(1))
        return GalleryEntry(
            gallery_heaviside(n),
            (Claim("difference-mass-bound", {"n": n}, "2^n l^(n-1) |tau|"),
             Claim("non-equi-certified", {"sigma": "(n-1)/p + 0.5"}, True),
             Claim("equi-not-certified", {"sigma": [0.5, 1, 2], "|t0|": ">= 10"}, False),
             Claim("weyl-bounded", {}, True)),
            f"indicator of the closed nonnegative orthant in R^{n}",
        )
    entries = _entries()
    if gallery_id not in entries:
        raise KeyError(f"unknown gallery id {gallery_id!r}; known: {', '.join(gallery_ids())}")
    return entries[gallery_id]()


def get_handle(gallery_id: str) -> FunctionHandle:
    return get_entry(gallery_id).handle
