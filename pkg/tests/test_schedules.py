import math

import pytest

from weylap.schedules import ConvergenceReport, LSchedule


def test_geometric_scales():
    s = LSchedule(1.0, 2.0, 4)
    assert s.scales == [1.0, 2.0, 4.0, 8.0, 16.0]
    assert s.tail_scales == [4.0, 8.0, 16.0]


@pytest.mark.parametrize("kw", [dict(l0=0.0), dict(ratio=1.0), dict(K=1), dict(K=3, tail=5),
                                dict(tail=0)])
def test_invalid_schedules(kw):
    with pytest.raises(ValueError):
        LSchedule(**kw)


def test_schedule_round_trip():
    s = LSchedule(0.5, 3.0, 5, 2)
    assert LSchedule(**s.to_dict()) == s


def test_report_converges_on_flat_tail():
    r = ConvergenceReport.from_samples([1, 2, 4, 8], [5.0, 0.5002, 0.5001, 0.5], tol=1e-3)
    assert r.converged and r.limit_estimate == 0.5
    assert r.cauchy_gap == pytest.approx(2e-4)


def test_report_flags_divergence():
    r = ConvergenceReport.from_samples([1, 2, 4, 8], [1.0, 2.0, 3.0, 4.0])
    assert not r.converged and r.cauchy_gap == 2.0


def test_relative_tolerance():
    vals = [1e6, 1e6 + 1, 1e6 + 2]
    assert not ConvergenceReport.from_samples([1, 2, 3], vals, tol=1e-3).converged
    assert ConvergenceReport.from_samples([1, 2, 3], vals, tol=1e-3, relative=True).converged


def test_non_finite_tail_never_converges():
    r = ConvergenceReport.from_samples([1, 2, 3], [math.inf] * 3)
    assert not r.converged


def test_complex_values_serialise():
    r = ConvergenceReport.from_samples([1, 2, 3], [1j, 1j, 1j])
    d = r.to_dict()
    assert d["limit_estimate"] == [0.0, 1.0] and d["converged"]


def test_scales_must_increase():
    with pytest.raises(ValueError):
        ConvergenceReport.from_samples([1, 1], [0, 0])


def test_empty_report():
    r = ConvergenceReport.from_samples([], [])
    assert not r.converged and r.samples == []
