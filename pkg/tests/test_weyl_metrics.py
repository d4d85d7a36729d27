import math

import numpy as np
import pytest

from weylap.ap_certifier import SearchConfig
from weylap.function_model import Box, Domain, box_indicator, constant, sum_of, zero
from weylap.gallery import gallery_chi_half, gallery_heaviside, gallery_stryja_staircase, sine
from weylap.schedules import LSchedule
from weylap.weyl_metrics import (
    normality_check,
    scaling_property_check,
    stepanov_bounded_sup,
    stepanov_distance,
    translation_monotonicity_check,
    triangle_check,
    weyl_distance,
    weyl_limit_closure_check,
)


def line(radius=10.0, **kw):
    return Domain(n=1, probe_box=Box.cube(0.0, radius, 1), **kw)


def random_steps(seed, k=4):
    rng = np.random.default_rng(seed)
    return sum_of([box_indicator([a], [a + w], c) for a, w, c in
                   zip(rng.uniform(-6, 6, k), rng.uniform(0.1, 2, k), rng.uniform(-2, 2, k))], 1)


class TestStepanovDistance:
    def test_self_distance(self):
        assert stepanov_distance(sine(), sine(), 2.0, 3.0, line()) == 0.0

    @pytest.mark.parametrize("l", [0.5, 1.0, 2.0, 8.0])
    def test_indicator_scaled_mass(self, l):
        assert stepanov_distance(gallery_chi_half(), None, 1.0, l, line()) == \
            pytest.approx(1 / (2 * l), abs=1e-12)

    @pytest.mark.parametrize("c,l", [(3.0, 1.0), (-0.5, 7.0)])
    def test_constant_density(self, c, l):
        assert stepanov_distance(constant(c, 1), zero(1), 1.0, l, line()) == \
            pytest.approx(abs(c), rel=1e-14)

    def test_symmetric_exactly(self):
        for seed in range(5):
            F, G = random_steps(seed), random_steps(seed + 100)
            for p in (1.0, 2.0, 3.0):
                assert stepanov_distance(F, G, p, 2.0, line()) == \
                    stepanov_distance(G, F, p, 2.0, line())

    def test_empty_grid(self):
        d = line(in_lambda=lambda p: p[:, 0] > 1e9)
        with pytest.raises(ValueError, match="empty probe grid"):
            stepanov_distance(sine(), None, 1.0, 1.0, d)

    def test_nonpositive_scale(self):
        with pytest.raises(ValueError):
            stepanov_distance(sine(), None, 1.0, -1.0, line())


class TestWeylDistance:
    def test_indicator_is_weyl_null(self):
        value, report = weyl_distance(gallery_chi_half(), None, 1.0, LSchedule(1, 2, 10), line())
        assert report.converged and value < 1e-2
        assert value == pytest.approx(1 / 2048, abs=1e-12)
        assert report.notes["dominated_by_every_stepanov"]

    def test_constant(self):
        value, report = weyl_distance(constant(2.5, 1), zero(1), 2.0, LSchedule(1, 2, 5), line())
        assert report.converged and value == pytest.approx(2.5, rel=1e-12)

    def test_staircase_diverges(self):
        _, report = weyl_distance(gallery_stryja_staircase(), None, 1.0, LSchedule(1, 2, 6),
                                  line(200.0))
        assert not report.converged
        vals = report.values
        assert all(b > a for a, b in zip(vals[-3:], vals[-2:]))

    def test_sup_over_tail_dominates_estimate(self):
        value, report = weyl_distance(random_steps(3), None, 2.0, LSchedule(1, 2, 4), line())
        assert report.notes["sup_over_tail"] >= value


class TestStepanovBounded:
    def test_constant_one(self):
        assert stepanov_bounded_sup(constant(1.0, 1), 1.0, line()) == pytest.approx(1.0)

    def test_heaviside(self):
        assert stepanov_bounded_sup(gallery_heaviside(1), 1.0, line()) == pytest.approx(1.0)

    def test_zero(self):
        assert stepanov_bounded_sup(zero(2), 2.0, Domain.whole_space(2, 3.0)) == 0.0


class TestInequalities:
    def test_triangle_degenerate(self):
        F, G = random_steps(1), random_steps(2)
        for H in (F, G):
            out = triangle_check(F, G, H, 2.0, [1.0, 4.0], line())
            assert out["passed"]
            for row in out["rows"]:
                assert row["rhs"] == pytest.approx(row["lhs"], rel=1e-14)

    def test_scaling_indicator_equality(self):
        out = scaling_property_check(gallery_chi_half(), zero(1), 1.0, 1.0, 2.0, line())
        assert out["passed"]
        assert out["property1"]["lhs"] == pytest.approx(0.5, abs=1e-12)
        assert out["property1"]["rhs"] == pytest.approx(0.5, abs=1e-12)

    def test_scaling_self(self):
        out = scaling_property_check(sine(), sine(), 2.0, 1.0, 3.5, line())
        assert out["passed"] and out["property1"]["lhs"] == 0.0

    def test_scaling_needs_ordered_scales(self):
        with pytest.raises(ValueError):
            scaling_property_check(sine(), None, 1.0, 2.0, 1.0, line())

    def test_translation_monotonicity_on_half_line(self):
        d = line(10.0, in_lambda=lambda p: p[:, 0] >= 0)
        F, G = gallery_heaviside(1), random_steps(4)
        out = translation_monotonicity_check(F, G, [1.5], 1.0, 2.0, d)
        assert out["holds"]
        assert out["lhs"] == pytest.approx(out["rhs"], rel=1e-12)


class TestClosure:
    d = line(12.0, probes=((2.0,),), max_per_axis=12,
             in_lambda_prime=lambda p: np.abs(p[:, 0]) >= 1)
    search = SearchConfig(L_schedule=(8.0,), scales=(1.0,), tau_step=0.1)

    def test_constant_sequence(self):
        out = weyl_limit_closure_check([sine()] * 3, sine(), 2.0, 0.1, self.d,
                                       LSchedule(1, 2, 4), self.search)
        assert out.passed and out.K == 0 and out.distances == [0.0] * 3
        assert out.certificate.witnesses == out.approximant_certificate.witnesses

    def test_weyl_null_perturbation(self):
        seq = [sine() + gallery_chi_half() * (1 / k) for k in range(1, 11)]
        sched = LSchedule(1, 2, 6)
        out = weyl_limit_closure_check(seq, sine(), 2.0, 0.3, self.d, sched, self.search)
        assert out.passed and out.K is not None
        # the perturbation's scaled L^2 mass is sqrt(1/(2l))/k at the last scale
        lmax = sched.scales[-1]
        for k, dist in enumerate(out.distances, start=1):
            assert dist == pytest.approx(math.sqrt(1 / (2 * lmax)) / k, rel=1e-9)
        assert out.notes["stepanov_distance"] < 0.1

    def test_unknown_split(self):
        with pytest.raises(ValueError):
            weyl_limit_closure_check([sine()], sine(), 2.0, 0.1, self.d, LSchedule(1, 2, 2),
                                     self.search, split="halves")


class TestNormality:
    def test_constant(self):
        out = normality_check(constant(1.0, 1), [0.0, 1.0, 5.0, 9.0], 1.0, LSchedule(1, 2, 3),
                              line(), 1e-6, m_min=4)
        assert out.found and out.subsequence == [0, 1, 2, 3]

    def test_heaviside_doubling_translates(self):
        out = normality_check(gallery_heaviside(1), [1.0, 2.0, 4.0, 8.0], 1.0,
                              LSchedule(1, 2, 10), line(), 0.05, m_min=4)
        assert out.found
        # D_W(H(.+a), H(.+b)) = |a - b| / l at the last scale
        assert out.distances["0,3"] == pytest.approx(7 / 1024, abs=1e-12)

    def test_sine_near_periods(self):
        ts = [0.0, 1.0, 2 * math.pi + 0.01, 4 * math.pi - 0.02]
        out = normality_check(sine(), ts, 2.0, LSchedule(1, 2, 3), line(), 0.05)
        assert out.found and out.subsequence == [0, 2, 3]

    def test_blocking_pair_reported(self):
        out = normality_check(sine(), [0.0, 1.5, 3.0], 2.0, LSchedule(1, 2, 3), line(), 0.05,
                              m_min=2)
        assert not out.found and out.blocking_pair == (0, 1)
