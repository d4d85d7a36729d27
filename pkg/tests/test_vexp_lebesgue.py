import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad as scipy_quad
from scipy.optimize import brentq

from weylap.function_model import Box, FunctionHandle, box_indicator, constant, fixed_breaks, sum_of, zero
from weylap.gallery import gallery_chi_half
from weylap.vexp_lebesgue import (
    DegenerateRegionWarning,
    ExponentField,
    QuadratureConfig,
    cell_norms,
    cell_seminorm,
    conjugate_exponent,
    cube_rule,
    holder_product_norm_check,
    luxemburg_norm,
    modular,
    phi_p,
)

LINE = Box.unit(1)


def identity_line():
    return FunctionHandle(func=lambda t, x: t[:, 0], n=1, label="id")


def p_two_plus_x():
    return ExponentField.from_callable(lambda x: 2.0 + x[:, 0], 2.0, 3.0, "2+x")


class TestPhi:
    def test_power(self):
        assert phi_p(2, 3) == 9

    def test_infinite_exponent(self):
        assert phi_p(math.inf, 0.5) == 0
        assert phi_p(math.inf, 1.0) == 0
        assert phi_p(math.inf, 2) == math.inf

    def test_vectorised(self):
        out = phi_p(np.array([1.0, 2.0, math.inf]), np.array([2.0, 2.0, 3.0]))
        assert out.tolist() == [2.0, 4.0, math.inf]

    def test_negative_argument_rejected(self):
        with pytest.raises(ValueError):
            phi_p(2, -1.0)


class TestModular:
    def test_constant_one(self):
        assert modular(constant(1.0, 1), 2.0, LINE) == pytest.approx(1.0, abs=1e-14)

    def test_zero(self):
        assert modular(zero(1), p_two_plus_x(), LINE) == 0.0

    def test_variable_exponent_matches_independent_quadrature(self):
        oracle, _ = scipy_quad(lambda x: x ** (2 + x), 0, 1, epsabs=1e-13)
        assert modular(identity_line(), p_two_plus_x(), LINE) == pytest.approx(oracle, rel=1e-7)

    def test_infinite_branch(self):
        F = constant(2.0, 1)
        assert modular(F, math.inf, LINE) == math.inf
        assert modular(constant(0.5, 1), math.inf, LINE) == 0.0

    def test_unbounded_region_rejected(self):
        with pytest.raises(ValueError):
            modular(constant(1.0, 1), 2.0, Box((0.0,), (math.inf,)))

    def test_trace_recorded(self):
        _, info = modular(identity_line(), 2.0, LINE, full_output=True)
        assert len(info["trace"]) >= 2 and info["quadrature"]


class TestLuxemburg:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_constant_one_cubic(self, n):
        assert luxemburg_norm(constant(1.0, n), 3.0, Box.unit(n)) == pytest.approx(1.0, abs=1e-12)

    def test_identity_l2(self):
        assert luxemburg_norm(identity_line(), 2.0, LINE) == pytest.approx(3 ** -0.5, abs=1e-8)

    def test_variable_exponent_root_against_oracle(self):
        def oracle_modular(lam):
            return scipy_quad(lambda x: lam ** -(2 + x), 0, 1, epsabs=1e-14)[0]

        lam = brentq(lambda v: oracle_modular(v) - 1, 0.1, 10, xtol=1e-14)
        assert lam == pytest.approx(1.0, abs=1e-12)   # every exponent gives the same scaling here
        assert luxemburg_norm(constant(1.0, 1), p_two_plus_x(), LINE) == pytest.approx(lam, abs=1e-9)

    def test_variable_exponent_nontrivial_root(self):
        F = constant(3.0, 1)
        oracle = brentq(lambda v: scipy_quad(lambda x: (3 / v) ** (2 + x), 0, 1)[0] - 1, 0.5, 10,
                        xtol=1e-14)
        assert luxemburg_norm(F, p_two_plus_x(), LINE) == pytest.approx(oracle, rel=1e-9)

    def test_infinite_exponent_is_essential_sup(self):
        assert luxemburg_norm(identity_line(), math.inf, LINE) == pytest.approx(1.0, abs=1e-3)

    def test_mixed_infinite_region(self):
        p = ExponentField.from_callable(lambda x: np.where(x[:, 0] < 0.5, 1.0, np.inf), 1.0, np.inf)
        F = FunctionHandle(func=lambda t, x: np.where(t[:, 0] < 0.5, 0.2, 3.0), n=1,
                           breaks=fixed_breaks([[0.5]]), piecewise_constant=True)
        assert luxemburg_norm(F, p, LINE) == pytest.approx(3.0)

    def test_degenerate_region_warns(self):
        with pytest.warns(DegenerateRegionWarning):
            assert luxemburg_norm(constant(1.0, 1), 2.0, Box((0.0,), (0.0,))) == 0.0

    def test_near_overflow_samples(self):
        from weylap.vexp_lebesgue import luxemburg_from_samples

        # x/2 + x^2/2 = 1 has root x = 1, so the norm equals the sample value
        lam = luxemburg_from_samples(np.array([1e308, 1e308]), np.array([0.5, 0.5]),
                                     np.array([1.0, 2.0]))
        assert lam == pytest.approx(1e308, rel=1e-10)

    def test_exponent_field_validation(self):
        with pytest.raises(ValueError):
            ExponentField.constant(0.5)
        p = ExponentField.from_callable(lambda x: 0.5 + 0 * x[:, 0], 1.0, 2.0)
        with pytest.raises(ValueError, match="leaves"):
            p(np.zeros((3, 1)))


class TestConjugate:
    def test_self_conjugate(self):
        assert conjugate_exponent(2.0).p_minus == 2.0

    def test_one_and_infinity(self):
        assert conjugate_exponent(1.0).p_minus == math.inf
        assert conjugate_exponent(math.inf).p_minus == 1.0

    def test_pointwise(self):
        q = conjugate_exponent(ExponentField.from_callable(lambda x: 1.0 + 2 * x[:, 0], 1.0, 3.0))
        assert q(np.array([[1.0], [0.0]])).tolist() == [1.5, math.inf]
        assert (q.p_minus, q.p_plus) == (1.5, math.inf)


class TestHolder:
    def test_ones(self):
        lhs, rhs, ok = holder_product_norm_check(constant(1.0, 1), constant(1.0, 1), 2.0, 2.0, LINE)
        assert (lhs, rhs, ok) == (pytest.approx(1.0), pytest.approx(2.0), True)

    def test_zero_factor(self):
        lhs, _, ok = holder_product_norm_check(zero(1), constant(1.0, 1), 2.0, 2.0, LINE)
        assert lhs == 0.0 and ok

    def test_random_piecewise_constant(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            u = sum_of([box_indicator([a], [a + 0.2], rng.uniform(-2, 2))
                        for a in rng.uniform(0, 0.8, 3)], 1)
            v = sum_of([box_indicator([a], [a + 0.3], rng.uniform(-2, 2))
                        for a in rng.uniform(0, 0.7, 3)], 1)
            lhs, rhs, ok = holder_product_norm_check(u, v, 3.0, 1.5, LINE)
            assert ok
            direct = luxemburg_norm(FunctionHandle(
                func=lambda t, x: u.norms(t) * v.norms(t), n=1,
                breaks=lambda a, lo, hi: np.concatenate([u.breakpoints(a, lo, hi),
                                                         v.breakpoints(a, lo, hi)]),
                piecewise_constant=True), 1.0, LINE)
            assert lhs == pytest.approx(direct, rel=1e-12)

    def test_exponent_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            holder_product_norm_check(constant(1.0, 1), constant(1.0, 1), 1.5, 1.5, LINE)
        with pytest.raises(ValueError, match="mismatch"):
            holder_product_norm_check(constant(1.0, 1), constant(1.0, 1), 2.0, 2.0, LINE, s=1.5)


class TestCellSeminorm:
    def test_zero(self):
        assert cell_seminorm(zero(1), 1.0, [0.0], 1.0, LINE) == 0.0

    def test_volume(self):
        assert cell_seminorm(constant(1.0, 2), 1.0, [0.0, 0.0], 2.0, Box.unit(2)) == 4.0

    @pytest.mark.parametrize("tau,t,expected", [(0.3, 0.0, 0.3), (0.3, -0.3, 0.6),
                                                (0.1, 0.0, 0.1), (0.7, 0.0, 0.5)])
    def test_indicator_translate_difference(self, tau, t, expected):
        F = gallery_chi_half()
        # brute force: mass of [-tau, 1/2 - tau] symmetric-difference [0, 1/2] inside [t, t + 1]
        xs = t + (np.arange(200_000) + 0.5) / 200_000
        a = (xs >= -tau) & (xs <= 0.5 - tau)
        b = (xs >= 0) & (xs <= 0.5)
        brute = np.mean(a != b)
        assert brute == pytest.approx(expected, abs=1e-5)
        assert cell_seminorm(F.translate([tau]) - F, 1.0, [t], 1.0, LINE) == \
            pytest.approx(expected, abs=1e-12)

    def test_nonpositive_scale(self):
        with pytest.raises(ValueError):
            cell_seminorm(zero(1), 1.0, [0.0], 0.0, LINE)


class TestCubeRule:
    def test_weights_sum_to_volume(self):
        box = Box((0.0, -1.0), (2.0, 3.0))
        _, w = cube_rule(box, [5, 7])
        assert math.fsum(w) == pytest.approx(8.0, rel=1e-14)

    def test_breaks_are_never_sampled_across(self):
        nodes, w = cube_rule(LINE, 4, lambda axis, a, b: np.array([0.3]))
        left = nodes[:, 0] < 0.3
        assert math.fsum(w[left]) == pytest.approx(0.3)

    def test_cache_reuses_axis_rules(self):
        cache: dict = {}
        a = cube_rule(Box.unit(2), 4, None, cache)
        b = cube_rule(Box.unit(2), 4, None, cache)
        assert len(cache) == 2
        assert np.array_equal(a[0], b[0])

    def test_cell_norms_match_single_cells(self):
        F = FunctionHandle(func=lambda t, x: np.sin(3 * t[:, 0]) * np.cos(t[:, 1]), n=2)
        cells = [Box.unit(2).cell(t, 1.5) for t in ([0, 0], [1.0, -2.0], [-3.0, 0.5])]
        batch = cell_norms(F, 2.0, cells, QuadratureConfig(points_per_axis=16))
        single = [luxemburg_norm(F, 2.0, c, QuadratureConfig(points_per_axis=16)) for c in cells]
        assert batch == pytest.approx(single, rel=1e-8)


# invariants ---------------------------------------------------------------------

steps = st.lists(st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3), min_size=1, max_size=5)


def _step(values):
    k = len(values)
    edges = np.linspace(0, 1, k + 1)
    vals = np.asarray(values)

    def func(t, x):
        return vals[np.clip(np.searchsorted(edges, t[:, 0], side="right") - 1, 0, k - 1)]

    return FunctionHandle(func=func, n=1, breaks=fixed_breaks([edges[1:-1]]),
                          piecewise_constant=True)


variable_p = ExponentField.from_callable(lambda x: 1.5 + 2.0 * x[:, 0], 1.5, 3.5, "1.5+2x")


@settings(max_examples=40, deadline=None)
@given(steps, st.sampled_from([1.0, 2.0, 4.0]))
def test_constant_exponent_is_classical_norm(values, p):
    k = len(values)
    classical = (sum(abs(v) ** p for v in values) / k) ** (1 / p)
    assert luxemburg_norm(_step(values), p, LINE) == pytest.approx(classical, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(steps)
def test_modular_of_normalised_function_is_one(values):
    F = _step(values)
    q = QuadratureConfig(points_per_axis=256, max_refinements=0)
    lam = luxemburg_norm(F, variable_p, LINE, q)
    assert modular(F * (1 / lam), variable_p, LINE, q) == pytest.approx(1.0, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(steps, st.floats(0.0, 1.0))
def test_monotone_in_pointwise_bound(values, shrink):
    F = _step(values)
    q = QuadratureConfig(points_per_axis=128, max_refinements=0)
    assert luxemburg_norm(F * shrink, variable_p, LINE, q) <= \
        luxemburg_norm(F, variable_p, LINE, q) + 1e-12


@settings(max_examples=40, deadline=None)
@given(steps, st.floats(0.1, 3.0))
def test_embedding_constant(values, width):
    region = Box((0.0,), (width,))
    F = _step(values).dilate(1 / width)
    q = QuadratureConfig(points_per_axis=128, max_refinements=0)
    small = ExponentField.from_callable(lambda x: 1.0 + x[:, 0] / width, 1.0, 2.0)
    big = ExponentField.from_callable(lambda x: 2.0 + x[:, 0] / width, 2.0, 3.0)
    lhs = luxemburg_norm(F, small, region, q)
    assert lhs <= 2 * (1 + width) * luxemburg_norm(F, big, region, q) + 1e-12


@settings(max_examples=30, deadline=None)
@given(steps, st.floats(-4, 4), st.floats(-4, 4))
def test_linear_map_scales_by_operator_norm(values, a, b):
    F = _step(values).map_values([[1.0]])
    A = np.diag([a, b])
    G = FunctionHandle(func=lambda t, x: np.stack([F(t), F(t)], axis=1) @ A.T, n=1,
                       breaks=F.breaks, piecewise_constant=True)
    two = FunctionHandle(func=lambda t, x: np.stack([F(t), F(t)], axis=1), n=1,
                         breaks=F.breaks, piecewise_constant=True)
    q = QuadratureConfig(points_per_axis=64, max_refinements=0)
    op = max(abs(a), abs(b))
    assert luxemburg_norm(G, variable_p, LINE, q) <= \
        op * luxemburg_norm(two, variable_p, LINE, q) * (1 + 1e-9) + 1e-12
