import math

import numpy as np
import pytest
from scipy import stats

from dynbatch import (
    ConstantRate,
    CountTable,
    SinusoidRate,
    SqrtCount,
    TableRate,
    TrialRecord,
    Wta,
    gen_poisson,
    gen_poisson_horizon,
    parse_rate_spec,
    run_study,
    summarize,
)
from dynbatch.online import FixedSize


class TestRateFunctions:
    def test_constant(self):
        r = ConstantRate(2.0)
        assert r.value(17.3) == 2.0
        assert r.max_rate() == 2.0
        with pytest.raises(ValueError):
            ConstantRate(0.0)

    def test_sinusoid(self):
        r = SinusoidRate(2.0, 1.0, 3.0)
        assert math.isclose(r.value(0.75), 2.0 + math.sin(math.pi / 2))
        assert r.max_rate() == 3.0
        assert r.value(100.0) >= 0.0
        with pytest.raises(ValueError, match="base"):
            SinusoidRate(1.0, 2.0, 3.0)

    def test_table(self):
        r = TableRate((0.0, 1.0, 2.0), (5.0, 0.0, 1.0))
        assert r.value(0.5) == 5.0
        assert r.value(1.5) == 0.0
        assert r.value(99.0) == 1.0
        assert r.max_rate() == 5.0

    def test_parse_rate_spec(self):
        assert parse_rate_spec("2") == ConstantRate(2.0)
        assert parse_rate_spec("sin:2,1,3") == SinusoidRate(2.0, 1.0, 3.0)
        with pytest.raises(ValueError, match="unknown rate spec"):
            parse_rate_spec("ramp:1")


class TestGenPoisson:
    def test_exact_count_sorted_positive(self):
        inst = gen_poisson(ConstantRate(2.0), 4, seed=9)
        assert inst.n == 4
        assert all(a <= b for a, b in zip(inst.times, inst.times[1:]))
        assert inst.times[0] > 0.0

    def test_single_arrival(self):
        inst = gen_poisson(ConstantRate(5.0), 1, seed=0)
        assert inst.n == 1 and inst.times[0] > 0.0

    def test_deterministic_per_seed(self):
        a = gen_poisson(SinusoidRate(2, 1, 3), 50, seed=4)
        b = gen_poisson(SinusoidRate(2, 1, 3), 50, seed=4)
        c = gen_poisson(SinusoidRate(2, 1, 3), 50, seed=5)
        assert a == b
        assert a != c

    def test_constant_rate_mean_gap(self):
        # mean exponential gap at rate 2 is 0.5
        n = 1_000_000
        inst_times = np.diff(np.concatenate(
            ([0.0], gen_poisson(ConstantRate(2.0), n, seed=123).times_array)))
        assert abs(inst_times.mean() - 0.5) <= 0.01

    def test_sinusoid_empirical_rate(self):
        # the sinusoid averages out over whole periods, leaving the base rate
        n = 20000
        inst = gen_poisson(SinusoidRate(2.0, 1.0, 3.0), n, seed=7)
        horizon = 3.0 * math.floor(inst.times[-1] / 3.0)
        count = int(np.searchsorted(inst.times_array, horizon, side="right"))
        rate = count / horizon
        assert abs(rate - 2.0) / 2.0 <= 0.02

    def test_gaps_pass_ks_against_exponential(self):
        n = 100_000
        times = gen_poisson(ConstantRate(2.0), n, seed=99).times_array
        gaps = np.diff(np.concatenate(([0.0], times)))
        stat = stats.kstest(gaps, "expon", args=(0, 0.5)).statistic
        critical_1pct = 1.6276 / math.sqrt(n)
        assert stat < critical_1pct

    def test_zero_rate_rejected(self):
        with pytest.raises(ValueError, match="identically zero"):
            gen_poisson(TableRate((0.0,), (0.0,)), 3, seed=0)

    def test_feature_sampler(self):
        inst = gen_poisson(ConstantRate(2.0), 30, seed=5,
                           feature_sampler=lambda rng, t: int(rng.integers(0, 3)))
        assert set(inst.features) <= {0, 1, 2}
        assert len(set(inst.features)) > 1

    def test_default_single_feature(self):
        inst = gen_poisson(ConstantRate(2.0), 10, seed=5, feature=3)
        assert set(inst.features) == {3}

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            gen_poisson(ConstantRate(1.0), 0, seed=0)


class TestGenPoissonHorizon:
    def test_within_window_and_deterministic(self):
        a = gen_poisson_horizon(ConstantRate(2.0), 50.0, seed=3)
        b = gen_poisson_horizon(ConstantRate(2.0), 50.0, seed=3)
        assert a == b
        assert a.times[-1] < 50.0
        assert 50 <= a.n <= 160  # Poisson(100) stays well inside this

    def test_mean_count_matches_rate(self):
        counts = [gen_poisson_horizon(ConstantRate(2.0), 20.0, seed=s).n
                  for s in range(300)]
        assert abs(np.mean(counts) - 40.0) <= 2.0

    def test_empty_window_rejected(self):
        with pytest.raises(ValueError, match="no arrivals"):
            gen_poisson_horizon(ConstantRate(1e-9), 1e-9, seed=1)


class TestRunStudy:
    def test_record_shape_and_ratio(self):
        records = run_study(
            n_values=[10], rates=[ConstantRate(2.0)], policies=[Wta(0.5)],
            cost_fn=SqrtCount(), trials=50, seed=3)
        assert len(records) == 50
        for r in records:
            assert r.ratio >= 1.0 - 1e-9
            assert math.isclose(r.J, r.W + r.F, rel_tol=1e-9)
            assert r.policy == "wta:0.5" and r.alpha == 0.5 and r.n == 10

    def test_grid_and_policy_cross_product(self):
        records = run_study(
            n_values=[5, 10], rates=[ConstantRate(1.0), ConstantRate(4.0)],
            policies=[Wta(0.5), FixedSize(2)], cost_fn=SqrtCount(), trials=3, seed=0)
        assert len(records) == 2 * 2 * 3 * 2
        groups = {r.trial.split(".")[0] for r in records}
        assert groups == {"g0", "g1", "g2", "g3"}

    def test_reproducible_across_parallelism(self):
        kwargs = dict(n_values=[8], rates=[ConstantRate(2.0)],
                      policies=[Wta(0.5)], cost_fn=SqrtCount(), trials=30, seed=11)
        serial = run_study(parallelism=1, **kwargs)
        parallel = run_study(parallelism=2, **kwargs)
        assert serial == parallel

    def test_seed_field_regenerates_instance(self):
        records = run_study(
            n_values=[6], rates=[ConstantRate(2.0)], policies=[Wta(1.0)],
            cost_fn=SqrtCount(), trials=4, seed=21)
        from dynbatch import optimal_schedule, run_wta
        for r in records:
            inst = gen_poisson(ConstantRate(2.0), r.n, r.seed)
            _, c = run_wta(inst, SqrtCount(), 1.0)
            assert math.isclose(c.total, r.J, rel_tol=1e-12)

    def test_failed_trials_recorded_not_fatal(self, capsys):
        # a two-entry cost table cannot price batches of 2+ samples, so
        # every trial fails and is recorded as NaN
        records = run_study(
            n_values=[6], rates=[ConstantRate(50.0)], policies=[Wta(0.5)],
            cost_fn=CountTable((0.0, 1.0)), trials=3, seed=2)
        assert len(records) == 3
        assert all(math.isnan(r.ratio) for r in records)
        assert "too short" in capsys.readouterr().err

    def test_horizon_mode(self):
        records = run_study(
            rates=[ConstantRate(2.0)], policies=[Wta(0.5)],
            cost_fn=SqrtCount(), trials=6, seed=3, horizon=15.0)
        assert len(records) == 6
        assert all(r.n >= 1 for r in records)
        assert len({r.n for r in records}) > 1  # counts vary with the window

    def test_rejects_both_modes(self):
        with pytest.raises(ValueError, match="exactly one"):
            run_study(n_values=[5], horizon=1.0, rates=[ConstantRate(1.0)],
                      policies=[Wta(0.5)], cost_fn=SqrtCount(), trials=1, seed=0)

    def test_rejects_empty_config(self):
        with pytest.raises(ValueError):
            run_study(n_values=[], rates=[ConstantRate(1.0)], policies=[Wta(0.5)],
                      cost_fn=SqrtCount(), trials=1, seed=0)


class TestSummarize:
    def test_single_record(self):
        rec = TrialRecord("g0.t0", 1, 5, "wta:0.5", 0.5, 1.2, 0.4, 0.8, 1.0, 1.2)
        row = summarize([rec])[0]
        assert row.min == row.median == row.max == 1.2
        assert row.count == 1

    def test_interpolated_median(self):
        recs = [
            TrialRecord("g0.t0", 1, 5, "p", None, 1.0, 0, 1.0, 1.0, 1.0),
            TrialRecord("g0.t1", 2, 5, "p", None, 2.0, 0, 2.0, 1.0, 2.0),
        ]
        assert summarize(recs)[0].median == 1.5

    def test_row_per_grid_point(self):
        records = run_study(
            n_values=[5, 8, 12], rates=[ConstantRate(2.0)], policies=[Wta(0.5)],
            cost_fn=SqrtCount(), trials=10, seed=1)
        rows = summarize(records)
        assert len(rows) == 3

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            summarize([])
