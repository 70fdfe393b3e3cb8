import math

import pytest

from dynbatch import (
    AdversaryConfig,
    CappedLinear,
    ConstantCost,
    FeatureMultiset,
    FixedDelay,
    SqrtCount,
    Wta,
    cost_of,
    finite_rounds_bound,
    run_adversary,
    run_policy,
    worst_pair_search,
)

ONE = FeatureMultiset.of_size(1)


def config(rounds, x1=ONE, x2=ONE, epsilon=1e-6):
    return AdversaryConfig(x1=x1, x2=x2, rounds=rounds, epsilon=epsilon)


class TestRunAdversary:
    def test_constant_cost_ratio_approaches_two(self):
        rep = run_adversary(Wta(0.5), ConstantCost(1), config(200))
        assert rep.limit_bound == 2.0
        assert rep.ratio_vs_avg >= finite_rounds_bound(1, 1, 1, 200) - 1e-3
        assert rep.split_waves == 0

    def test_single_round_upper_bound_dominates_exact(self):
        for f in (ConstantCost(1), SqrtCount()):
            rep = run_adversary(Wta(0.5), f, config(1))
            assert rep.opt_exact <= rep.opt_upper + 1e-12
            assert rep.ratio_vs_exact >= rep.ratio_vs_avg - 1e-12

    def test_sqrt_singletons_limit(self):
        rep = run_adversary(Wta(0.5), SqrtCount(), config(10))
        assert math.isclose(rep.limit_bound, math.sqrt(2), rel_tol=1e-12)

    def test_realized_instance_is_valid_and_replays(self):
        rep = run_adversary(Wta(0.5), ConstantCost(1), config(25))
        inst = rep.instance
        assert inst.n == 50
        assert all(a <= b for a, b in zip(inst.times, inst.times[1:]))
        sched, cost = run_policy(inst, ConstantCost(1), Wta(0.5))
        assert sched == rep.schedule
        assert cost == rep.alg_cost

    def test_ratio_vs_exact_nondecreasing_in_rounds(self):
        ratios = [run_adversary(Wta(0.5), ConstantCost(1), config(s)).ratio_vs_exact
                  for s in (10, 50, 200)]
        assert ratios[0] <= ratios[1] + 1e-3
        assert ratios[1] <= ratios[2] + 1e-3

    @pytest.mark.parametrize("policy", [Wta(0.5), Wta(1.0), FixedDelay(0.25)],
                             ids=lambda p: p.spec_string())
    @pytest.mark.parametrize("f", [ConstantCost(1), SqrtCount(), CappedLinear(3, 10)],
                             ids=lambda f: f.spec_string())
    def test_finite_rounds_inequality(self, policy, f):
        """The realized ratio is never below the finite-round bound, after
        adding back the release-gap slack the instance construction spends.

        The per-sample slack is rounds * epsilon * (|x1| + |x2|) / n spread
        over the algorithm's waiting cost; dividing by the benchmark average
        converts it to ratio units."""
        cfg = config(40, x1=FeatureMultiset.of_size(2), x2=ONE, epsilon=1e-7)
        rep = run_adversary(policy, f, cfg)
        if rep.split_waves:
            pytest.skip("benchmark accounting assumes whole-release flushes")
        f1, f2 = f.value(cfg.x1), f.value(cfg.x2)
        f12 = f.value(cfg.x1.union(cfg.x2))
        bound = finite_rounds_bound(f1, f2, f12, cfg.rounds)
        slack = cfg.rounds * cfg.epsilon * (len(cfg.x1) + len(cfg.x2)) / rep.instance.n
        assert (rep.alg_cost.total + slack) / rep.opt_upper >= bound - 1e-9

    def test_benchmark_schedules_are_achievable(self):
        # the two benchmark costs must each be realizable by an actual valid
        # schedule on the realized instance, up to the trailing-batch slack
        # the odd benchmark is granted
        cfg = config(12)
        f = ConstantCost(1)
        rep = run_adversary(Wta(0.5), f, cfg)
        inst = rep.instance
        # even benchmark: merge release pairs (2k-1, 2k), processed at the
        # even release's arrival instant
        from dynbatch import Batch, Schedule
        batches = []
        for k in range(cfg.rounds):
            lo = 2 * k * len(cfg.x1) + 1
            hi = lo + len(cfg.x1) + len(cfg.x2) - 1
            batches.append(Batch(lo, hi, inst.times[hi - 1]))
        even = cost_of(inst, Schedule(tuple(batches)), f)
        assert math.isclose(even.total * inst.n, rep.even_cost, rel_tol=1e-9)
        assert rep.opt_exact <= rep.opt_upper + 1e-12

    def test_timeout_detection(self):
        cfg = AdversaryConfig(x1=ONE, x2=ONE, rounds=2, epsilon=1e-6, timeout=1e-3)
        with pytest.raises(RuntimeError, match="non-terminating"):
            run_adversary(FixedDelay(1.0), ConstantCost(1), cfg)

    def test_auto_epsilon_scales_with_first_flush(self):
        rep = run_adversary(Wta(0.5), ConstantCost(1), AdversaryConfig(ONE, ONE, rounds=4))
        # the first lone sample flushes after alpha * f = 0.5 seconds
        assert math.isclose(rep.epsilon, 0.5e-6, rel_tol=1e-12)
        rep2 = run_adversary(Wta(0.5), ConstantCost(4), AdversaryConfig(ONE, ONE, rounds=4))
        assert math.isclose(rep2.epsilon, 2e-6, rel_tol=1e-12)

    def test_rejects_bad_config(self):
        with pytest.raises(ValueError):
            AdversaryConfig(x1=FeatureMultiset.empty(), x2=ONE, rounds=3)
        with pytest.raises(ValueError):
            AdversaryConfig(x1=ONE, x2=ONE, rounds=0)
        with pytest.raises(ValueError):
            AdversaryConfig(x1=ONE, x2=ONE, rounds=3, epsilon=0.0)


class TestWorstPairSearch:
    def test_constant_any_pair_bound_two(self):
        x1, x2, bound = worst_pair_search(ConstantCost(1), 8)
        assert bound == 2.0

    def test_sqrt_equal_sizes(self):
        x1, x2, bound = worst_pair_search(SqrtCount(), 64)
        assert len(x1) == len(x2)
        assert math.isclose(bound, math.sqrt(2), rel_tol=1e-12)

    def test_capped_linear_saturating_pair(self):
        x1, x2, bound = worst_pair_search(CappedLinear(3, 10), 16)
        assert bound == 2.0
        assert len(x1) == len(x2) == 4

    def test_custom_set_function_sampled(self):
        from dynbatch import CustomSetFunction
        f = CustomSetFunction(lambda x: math.sqrt(len(x)), universe_size=3)
        _, _, bound = worst_pair_search(f, 16, samples=500, seed=7)
        assert 1.0 <= bound <= math.sqrt(2) + 1e-9

    def test_size_cap_validated(self):
        with pytest.raises(ValueError):
            worst_pair_search(SqrtCount(), 1)
