import cmath
import math

import numpy as np
import pytest

from weylap.ap_certifier import (
    Certificate,
    ClassSpec,
    SearchConfig,
    Variant,
    WeightSpec,
    certify,
    constant_p_spec,
)
from weylap.function_model import Box, Domain, FunctionHandle, constant, zero
from weylap.gallery import cosine, gallery_heaviside, sine
from weylap.harmonic import TrigPolynomial
from weylap.pde_apps import (
    MissingBoundError,
    antiderivative,
    box_kernel,
    convolution_preserves_period_check,
    convolve,
    dalembert_period_transfer_check,
    dalembert_solution,
    evolution_kernel,
    evolution_kernel_apply,
    evolution_weight_transfer,
    gaussian_semigroup_apply,
    gaussian_sufficient_condition,
    heat_kernel,
    lattice_gaussian_sum,
    ratio_condition,
    shokiran_condition,
    wave_residual,
    zero_kernel,
)

PTS = np.array([[0.0], [1.0], [2.0]])


def plane_wave(lam):
    return TrigPolynomial([[lam]], [1.0]).handle()


def line(radius=5.0, **kw):
    return Domain(n=1, probe_box=Box.cube(0.0, radius, 1), **kw)


def flat(l, t=None):
    return 1.0


class TestKernels:
    @pytest.mark.parametrize("n,t0", [(1, 0.1), (1, 1.0), (1, 3.0), (2, 0.5), (2, 2.0)])
    def test_heat_mass(self, n, t0):
        res = gaussian_semigroup_apply(constant(1.0, n), t0)
        assert res.notes["kernel_mass"] == pytest.approx(1.0, abs=1e-6)
        h = heat_kernel(t0, n)
        assert h.tail_mass(res.truncation_radius) == pytest.approx(1e-8, rel=1e-6)

    def test_heat_time_must_be_positive(self):
        with pytest.raises(ValueError):
            heat_kernel(0.0, 1)

    def test_box_kernel_tail(self):
        h = box_kernel(2.0, 1)
        assert h.default_radius() == 1.0 and h.tail_mass(1.0) == 0.0
        assert h([[0.5], [1.5]]).tolist() == [0.5, 0.0]


class TestConvolve:
    def test_box_average_of_constant(self):
        out = convolve(box_kernel(0.75, 1), constant(2.5, 1)).handle(PTS)
        assert np.allclose(out, 2.5, atol=1e-12)

    def test_heat_multiplier(self):
        out = convolve(heat_kernel(1.0, 1), plane_wave(1.0)).handle(PTS)
        expected = [math.exp(-1) * cmath.exp(1j * t) for t in (0.0, 1.0, 2.0)]
        assert out == pytest.approx(expected, abs=1e-7)

    @pytest.mark.parametrize("lam", [0.5, 2.0])
    def test_semigroup_multiplier(self, lam):
        out = gaussian_semigroup_apply(plane_wave(lam), 0.3).handle(PTS)
        expected = [math.exp(-lam * lam * 0.3) * cmath.exp(1j * lam * t) for t in (0, 1, 2)]
        assert out == pytest.approx(expected, abs=1e-7)

    def test_heaviside_midpoint(self):
        out = gaussian_semigroup_apply(gallery_heaviside(1), 1.0).handle([[0.0]])
        assert out[0] == pytest.approx(0.5, abs=1e-8)

    def test_zero_inputs(self):
        assert np.all(convolve(zero_kernel(1), sine()).handle(PTS) == 0)
        assert np.all(convolve(heat_kernel(1.0, 1), zero(1)).handle(PTS) == 0)

    def test_missing_bound(self):
        F = FunctionHandle(func=lambda t, x: t[:, 0], n=1)
        with pytest.raises(MissingBoundError):
            convolve(heat_kernel(1.0, 1), F)

    def test_semigroup_property(self):
        F = sine()
        two = gaussian_semigroup_apply(gaussian_semigroup_apply(F, 0.5).handle, 0.7).handle
        one = gaussian_semigroup_apply(F, 1.2).handle
        assert two(PTS) == pytest.approx(one(PTS), abs=1e-6)
        assert one(PTS) == pytest.approx(math.exp(-1.2) * np.sin(PTS[:, 0]), abs=1e-7)


class TestInvarianceConditions:
    def test_zero_kernel_trivially_passes(self):
        assert shokiran_condition(zero_kernel(1), lambda x: x, flat, flat, 1.0, 1.0, 1.0,
                                  [0.0]) == (0.0, True)

    def test_small_target_weight_passes_and_scaled_fails(self):
        h = heat_kernel(1.0, 1)
        small, ok = shokiran_condition(h, lambda x: x, flat, lambda l, t: 1e-3, 1.0, 1.0, 1.0,
                                       [0.0])
        assert ok
        big, bad = shokiran_condition(h, lambda x: x, flat, lambda l, t: 1.0, 1.0, 1.0, 1.0,
                                      [0.0])
        assert not bad
        assert big == pytest.approx(1e3 * small, rel=1e-12)

    def test_custom_weights_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            shokiran_condition(heat_kernel(1.0, 1), lambda x: x, flat, flat, 1.0, 1.0, 1.0,
                               [0.0], a_scheme=lambda blocks: np.ones(len(blocks)))

    def test_gaussian_condition_against_lattice_sum(self):
        t0, l, p, n = 1.0, 1.0, 1.0, 1
        total = math.fsum(math.exp(-((abs(k) - 3.0) ** 2) / 4) for k in range(-60, 61))
        oracle = 2 * (4 * math.pi) ** -0.5 * total
        value, ok = gaussian_sufficient_condition(t0, l, p, flat, flat, n)
        assert value == pytest.approx(oracle, rel=1e-12) and ok == (oracle <= 1)

    def test_gaussian_condition_linear_in_ratio(self):
        v1, _ = gaussian_sufficient_condition(0.5, 2.0, 2.0, flat, lambda l: 0.1, 2)
        v2, _ = gaussian_sufficient_condition(0.5, 2.0, 2.0, flat, lambda l: 0.2, 2)
        assert v2 == pytest.approx(2 * v1, rel=1e-14)
        tiny, ok = gaussian_sufficient_condition(0.5, 2.0, 2.0, flat, lambda l: 1e-9, 2)
        assert ok and tiny < 1e-6


class TestPeriodTransfer:
    spec = constant_p_spec(line(4.0), 1.0)

    def test_exact_period_survives_box_average(self):
        out = convolution_preserves_period_check(box_kernel(0.5, 1), plane_wave(1.0),
                                                 [2 * math.pi], self.spec, 0.01, 1.0)
        assert out["passed"] and out["tau_passes_for_F"]
        assert out["conv_quantity"] < 1e-9 and out["F_quantity"] < 1e-9

    def test_zero_kernel(self):
        out = convolution_preserves_period_check(zero_kernel(1), sine(), [1.0], self.spec, 2.0, 1.0)
        assert out["conv_quantity"] == 0.0 and out["passed"]

    def test_general_case_needs_condition_inputs(self):
        spec = ClassSpec(Variant.PAREN_2, 1.0, WeightSpec.power(1.0), True, line(4.0))
        with pytest.raises(ValueError, match="condition inputs"):
            convolution_preserves_period_check(heat_kernel(1.0, 1), sine(), [1.0], spec, 1.0, 1.0)


class TestWave:
    def test_initial_condition(self):
        x = np.linspace(-3, 3, 7)
        u = dalembert_solution(sine(), zero(1), 2.0, x, 0.0)
        assert u == pytest.approx(np.sin(x), abs=1e-15)

    def test_unit_velocity(self):
        u = dalembert_solution(zero(1), constant(1.0, 1), 1.0, [0.0, 2.0, -1.0], [0.5, 1.0, 3.0])
        assert u == pytest.approx([0.5, 1.0, 3.0], abs=1e-9)

    def test_standing_wave(self):
        x, t = np.meshgrid(np.linspace(-2, 2, 5), np.linspace(0, 3, 4))
        u = dalembert_solution(sine(), zero(1), 1.0, x, t)
        assert u == pytest.approx(np.sin(x) * np.cos(t), abs=1e-14)

    def test_wave_speed_positive(self):
        with pytest.raises(ValueError):
            dalembert_solution(sine(), zero(1), 0.0, 0.0, 1.0)

    def test_residual_is_small(self):
        r = wave_residual(sine(), cosine(), 1.5, [0.3, 1.1], [0.7, 2.0], 1e-2,
                          g_antiderivative=sine())
        assert np.max(np.abs(r)) < 1e-3

    def test_antiderivative(self):
        G = antiderivative(cosine(), -4.0, 4.0)
        xs = np.linspace(-4, 4, 17)
        assert G(xs) == pytest.approx(np.sin(xs), abs=1e-6)
        with pytest.raises(ValueError, match="outside"):
            G([5.0])

    def test_common_period_gives_zero(self):
        tau = 2 * math.pi
        out = dalembert_period_transfer_check(sine(), cosine(), 1.0, (tau, tau), 1.0,
                                              [[0.0, 0.0], [1.0, 2.0]], g_antiderivative=sine(),
                                              count=16)
        assert out["passed"]
        assert max(r["lhs"] for r in out["rows"]) < 1e-12

    def test_near_period_bound_chain(self):
        f = plane_wave(1.0)
        out = dalembert_period_transfer_check(f, zero(1), 1.0, (6.3, 0.0), 1.0,
                                              [[0.0, 0.0], [2.0, -1.0]], count=16)
        assert out["passed"]
        for r in out["rows"]:
            assert r["lhs"] <= r["pointwise"] * (1 + 1e-9) + 1e-12 <= r["transfer"] * (1 + 1e-6) + 1e-9

    def test_ratio_condition(self):
        ok = ratio_condition(flat, flat, 1.0, [1.0, 2.0], [2.0, 4.0, 8.0])
        assert ok["finite"] and ok["sups"][-1] == pytest.approx(4.0, rel=1e-12)
        bad = ratio_condition(flat, lambda l, t: 1 + abs(t[0]), 1.0, [1.0], [2.0, 4.0, 8.0])
        assert not bad["finite"]


class TestEvolution:
    def test_zero_growth_is_heat_flow(self):
        a = evolution_kernel_apply(sine(), 1.5, 0.5, lambda s: 0.0).handle(PTS)
        b = gaussian_semigroup_apply(sine(), 1.0).handle(PTS)
        assert a == pytest.approx(b, abs=1e-8)

    def test_unit_growth_on_constant(self):
        out = evolution_kernel_apply(constant(2.0, 1), 2.0, 0.5, lambda s: 1.0).handle(PTS)
        assert out == pytest.approx(2.0 * math.exp(1.5) * np.ones(3), rel=1e-6)

    def test_heat_multiplier(self):
        out = evolution_kernel_apply(plane_wave(1.5), 1.0, 0.6, lambda s: 0.0).handle(PTS)
        expected = [math.exp(-2.25 * 0.4) * cmath.exp(1.5j * t) for t in (0, 1, 2)]
        assert out == pytest.approx(expected, abs=1e-7)

    def test_time_order(self):
        with pytest.raises(ValueError):
            evolution_kernel_apply(sine(), 1.0, 1.0, lambda s: 0.0)
        with pytest.raises(ValueError):
            evolution_kernel(0.5, 1.0, [0.0], [0.0], lambda s: 0.0)

    def test_missing_bound(self):
        F = FunctionHandle(func=lambda t, x: t[:, 0], n=1)
        with pytest.raises(MissingBoundError):
            evolution_kernel_apply(F, 1.0, 0.0, lambda s: 0.0)

    def test_lattice_sum_tail(self):
        v, tail = lattice_gaussian_sum(1.0, [0.3], 1.0, math.inf)
        assert tail < 1e-8 and v > 1
        v2, _ = lattice_gaussian_sum(1.0, [0.3], 1.0, math.inf, R=40.0)
        assert v2 == pytest.approx(v, abs=tail + 1e-15)

    def test_zero_function_transfer(self):
        d = line(2.0, probes=((1.0,),), in_lambda_prime=lambda p: np.abs(p[:, 0]) >= 1,
                 max_per_axis=6)
        spec = ClassSpec(Variant.PAREN, 1.0, WeightSpec.power(1.0), True, d)
        cert = certify(zero(1), spec, 0.1, SearchConfig(L_schedule=(1.0,), scales=(1.0,),
                                                        tau_step=0.5))
        assert isinstance(cert, Certificate)
        out = evolution_weight_transfer(zero(1), cert, spec, 1.0, 1.0)
        assert out["passed"] and all(r["value"] == 0.0 for r in out["rows"])
        assert out["c_t"] == pytest.approx((4 * math.pi) ** -0.5)

    def test_transfer_needs_equi_certificate(self):
        spec = ClassSpec(Variant.PAREN, 1.0, WeightSpec.power(1.0), True, line())
        with pytest.raises(ValueError):
            evolution_weight_transfer(zero(1), None, spec, 1.0, 1.0)
