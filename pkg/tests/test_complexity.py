import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oracles import naive_distribution, naive_fluctuation, naive_series
from teampulse.complexity import (
    AnalysisWindow,
    ComplexitySeries,
    ScalePolicy,
    complexity_series,
    distribution,
    dynamic_complexity,
    fluctuation,
    return_points,
    team_average,
)
from teampulse.model import DataError, VolumeSeries

OSCILLATING = [0, 5] * 6
RAMP = list(range(12))
BIMODAL = [0] * 6 + [11] * 6


def W(values, lo=None, hi=None):
    lo = min(values) if lo is None else lo
    hi = max(values) if hi is None else hi
    return AnalysisWindow(np.asarray(values, dtype=float), lo, hi)


# --- single-window examples -------------------------------------------------

def test_max_oscillation_fluctuation():
    assert fluctuation(W(OSCILLATING, 0, 5)) == 1.0


def test_constant_window_is_zero():
    w = W([3.0] * 12, 0, 10)
    assert fluctuation(w) == 0.0
    assert distribution(w) == 0.0
    assert dynamic_complexity(w) == 0.0


def test_ramp_fluctuation():
    assert fluctuation(W(RAMP, 0, 11)) == pytest.approx(1 / 121, abs=1e-15)


def test_evenly_spaced_distribution():
    assert distribution(W(RAMP, 0, 11)) == 1.0


def test_bimodal_distribution_against_oracle():
    expected = naive_distribution(BIMODAL, 0, 11)
    assert expected == pytest.approx(0.4405594405594405, abs=1e-15)  # frozen oracle value
    got = distribution(W(BIMODAL, 0, 11))
    assert got == pytest.approx(expected, abs=1e-14)
    assert 0 < got < distribution(W(RAMP, 0, 11))


def test_dc_factor_identities():
    assert dynamic_complexity(W(RAMP, 0, 11)) == fluctuation(W(RAMP, 0, 11))
    assert dynamic_complexity(W(OSCILLATING, 0, 5)) == distribution(W(OSCILLATING, 0, 5))


def test_degenerate_scale_is_zero():
    w = W([2.0] * 8, 2.0, 2.0)
    assert fluctuation(w) == distribution(w) == dynamic_complexity(w) == 0.0


def test_missing_value_gives_undefined():
    w = W([1.0, 2.0, np.nan, 3, 4, 5, 6], 0, 10)
    assert np.isnan(fluctuation(w)) and np.isnan(distribution(w))
    assert np.isnan(dynamic_complexity(w))


def test_window_validation():
    with pytest.raises(DataError, match="at least 7"):
        W([1, 2, 3, 4, 5, 6])
    with pytest.raises(DataError, match="bracket"):
        W(RAMP, 1, 11)


def test_return_points():
    # rising, flat, falling, rising
    x = [0, 1, 2, 2, 2, 1, 0, 3]
    assert list(return_points(x)) == [0, 2, 4, 6, 7]
    rp = return_points(x)
    assert rp[0] == 0 and rp[-1] == len(x) - 1 and np.all(np.diff(rp) > 0)


def test_scale_policy_parse():
    assert ScalePolicy.parse("global") == ScalePolicy("global")
    assert ScalePolicy.parse("fixed:0:2.5") == ScalePolicy("fixed", 0.0, 2.5)
    assert str(ScalePolicy.parse("fixed:0:2.5")) == "fixed:0.0:2.5"
    for bad in ("fixed:1", "fixed:3:1", "median", "window:1"):
        with pytest.raises(DataError):
            ScalePolicy.parse(bad)


# --- series ---------------------------------------------------------------

def _series(values, period=5.0, start=1000.0):
    return VolumeSeries("A", start, period, np.asarray(values, dtype=float))


def test_series_lengths_and_timestamps():
    rng = np.random.default_rng(1)
    one = complexity_series(_series(rng.random(12)))
    assert len(one) == 1 and one.window_end_times[0] == 1000.0 + 11 * 5.0
    many = complexity_series(_series(rng.random(200)))
    assert len(many) == 189
    assert np.array_equal(many.window_end_times, 1000.0 + 5.0 * np.arange(11, 200))


def test_short_series_warns_and_is_empty():
    with pytest.warns(UserWarning, match="fewer than the window"):
        out = complexity_series(_series(np.ones(5)))
    assert len(out) == 0


def test_missing_sample_spoils_exactly_its_windows():
    x = np.random.default_rng(2).random(40)
    x[20] = np.nan
    out = complexity_series(_series(x))
    undefined = np.flatnonzero(np.isnan(out.dc))
    # windows ending at indices 20..31 contain index 20
    assert list(undefined) == list(range(20 - 11, 20 + 1))
    assert np.isnan(out.f[undefined]).all() and np.isnan(out.d[undefined]).all()


@pytest.mark.parametrize("scale, lo_hi", [
    ("global", None),
    ("window", lambda w: (min(w), max(w))),
    ("fixed:0:1.5", lambda w: (0.0, 1.5)),
])
def test_series_matches_naive_oracle(scale, lo_hi):
    rng = np.random.default_rng(3)
    x = rng.random(60) * 1.2
    x[[7, 33]] = np.nan
    if lo_hi is None:
        g = (np.nanmin(x), np.nanmax(x))
        lo_hi = lambda w: g  # noqa: E731
    got = complexity_series(_series(x), scale=scale)
    want = naive_series(list(x), lo_hi, 12)
    assert len(got) == len(want)
    for i, triple in enumerate(want):
        if triple is None:
            assert np.isnan(got.dc[i])
        else:
            assert abs(got.f[i] - triple[0]) < 1e-12
            assert abs(got.d[i] - triple[1]) < 1e-12
            assert abs(got.dc[i] - triple[2]) < 1e-12


def test_fixed_scale_clips_out_of_range_values():
    x = np.array([0, 3, 0, 3] * 3, dtype=float)
    out = complexity_series(_series(x), scale="fixed:0:2")
    clipped = complexity_series(_series(np.clip(x, 0, 2)), scale="fixed:0:2")
    assert out.f[0] == clipped.f[0] == 1.0


def test_step_subsamples_positions():
    x = np.random.default_rng(4).random(50)
    full = complexity_series(_series(x))
    stepped = complexity_series(_series(x), step=3)
    assert np.array_equal(stepped.dc, full.dc[::3])
    assert np.array_equal(stepped.window_end_times, full.window_end_times[::3])


def test_small_window_rejected():
    with pytest.raises(DataError):
        complexity_series(_series(np.ones(20)), window=6)


# --- team average ---------------------------------------------------------

def _cs(member, dc, times=(0.0,)):
    dc = np.asarray(dc, dtype=float)
    return ComplexitySeries(member, np.asarray(times, dtype=float), dc, np.ones_like(dc), dc)


def test_average_of_two():
    avg = team_average([_cs("A", [0.2]), _cs("B", [0.4])])
    assert avg.dc[0] == pytest.approx(0.3) and avg.contributors[0] == 2


def test_average_skips_undefined_members():
    avg = team_average([_cs("A", [np.nan]), _cs("B", [0.4])])
    assert avg.dc[0] == 0.4 and avg.contributors[0] == 1


def test_average_undefined_only_when_all_are():
    avg = team_average([_cs("A", [np.nan, 0.1], (0, 5)), _cs("B", [np.nan, 0.3], (0, 5))])
    assert np.isnan(avg.dc[0]) and avg.contributors[0] == 0
    assert avg.member == "Average"


def test_average_of_identical_series_is_exact():
    x = np.random.default_rng(5).random(100)
    s = complexity_series(_series(x))
    avg = team_average([s] * 7)
    assert np.array_equal(avg.dc, s.dc, equal_nan=True)


def test_average_requires_input_and_shared_grid():
    with pytest.raises(DataError):
        team_average([])
    with pytest.raises(DataError, match="window grid"):
        team_average([_cs("A", [0.1], (0,)), _cs("B", [0.1], (5,))])


# --- properties -----------------------------------------------------------

@st.composite
def windows(draw, integer=False):
    m = draw(st.integers(7, 30))
    if integer:
        vals = draw(st.lists(st.integers(-1000, 1000), min_size=m, max_size=m))
        pad_lo = draw(st.integers(0, 50))
        pad_hi = draw(st.integers(0, 50))
    else:
        # millesimal grid: keeps affine maps from absorbing tiny differences
        vals = draw(st.lists(st.integers(-10**6, 10**6).map(lambda v: v / 1000),
                             min_size=m, max_size=m))
        pad_lo = draw(st.floats(0, 100, allow_subnormal=False))
        pad_hi = draw(st.floats(0, 100, allow_subnormal=False))
    x = np.asarray(vals, dtype=float)
    return x, float(x.min() - pad_lo), float(x.max() + pad_hi)


@settings(max_examples=300, deadline=None)
@given(windows())
def test_measures_in_unit_interval_and_dc_is_product(w):
    win = AnalysisWindow(*w)
    f, d, dc = fluctuation(win), distribution(win), dynamic_complexity(win)
    assert 0.0 <= f <= 1.0 and 0.0 <= d <= 1.0 and 0.0 <= dc <= 1.0
    assert dc == f * d


@settings(max_examples=150, deadline=None)
@given(windows())
def test_single_window_matches_oracle(w):
    x, lo, hi = w
    win = AnalysisWindow(x, lo, hi)
    assert abs(fluctuation(win) - naive_fluctuation(list(x), lo, hi)) < 1e-12
    assert abs(distribution(win) - naive_distribution(list(x), lo, hi)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(windows(integer=True), st.integers(-10_000, 10_000))
def test_shift_invariance_exact(w, c):
    x, lo, hi = w
    a, b = AnalysisWindow(x, lo, hi), AnalysisWindow(x + c, lo + c, hi + c)
    assert fluctuation(a) == fluctuation(b)
    assert distribution(a) == distribution(b)


@settings(max_examples=200, deadline=None)
@given(windows(integer=True), st.integers(-8, 8))
def test_power_of_two_scaling_exact(w, e):
    x, lo, hi = w
    k = 2.0 ** e
    a, b = AnalysisWindow(x, lo, hi), AnalysisWindow(x * k, lo * k, hi * k)
    assert fluctuation(a) == fluctuation(b)
    assert distribution(a) == distribution(b)


@settings(max_examples=200, deadline=None)
@given(windows(), st.floats(1e-3, 1e3), st.floats(-1e3, 1e3))
def test_affine_invariance_approximate(w, k, c):
    x, lo, hi = w
    assume(hi - lo > 1e-6)
    a = AnalysisWindow(x, lo, hi)
    b = AnalysisWindow(x * k + c, min(lo * k + c, (x * k + c).min()),
                       max(hi * k + c, (x * k + c).max()))
    assert fluctuation(b) == pytest.approx(fluctuation(a), abs=1e-9)
    assert distribution(b) == pytest.approx(distribution(a), abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(windows(), st.randoms(use_true_random=False))
def test_distribution_ignores_order(w, r):
    x, lo, hi = w
    y = list(x)
    r.shuffle(y)
    assert distribution(AnalysisWindow(x, lo, hi)) == distribution(AnalysisWindow(np.array(y), lo, hi))


@settings(max_examples=200, deadline=None)
@given(st.integers(7, 40), st.floats(0.1, 100), st.data())
def test_extra_reversal_never_lowers_fluctuation(m, amp, data):
    slots = list(range(2, m - 1, 2))  # interior, never adjacent
    assume(slots)
    chosen = data.draw(st.sets(st.sampled_from(slots)))
    extra = data.draw(st.sampled_from(slots))
    base = np.zeros(m)
    base[list(chosen)] = amp
    more = base.copy()
    more[extra] = amp
    f0 = fluctuation(AnalysisWindow(base, 0.0, amp))
    f1 = fluctuation(AnalysisWindow(more, 0.0, amp))
    assert f1 >= f0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.one_of(st.floats(0, 10, allow_subnormal=False), st.just(float("nan"))),
                min_size=12, max_size=60))
def test_series_invariants(values):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        out = complexity_series(_series(values))
    x = np.asarray(values)
    assert len(out) == len(x) - 11
    for i in range(len(out)):
        gappy = np.isnan(x[i:i + 12]).any()
        assert np.isnan(out.dc[i]) == gappy
        if not gappy:
            assert out.dc[i] == out.f[i] * out.d[i]
            assert 0 <= out.dc[i] <= 1
