import numpy as np
import pytest

from dynbench.core import (
    CompleteClass,
    FiniteDomain,
    Hypothesis,
    Instance,
    prob_of,
    uniform,
)
from dynbench.errors import WeightShapeError
from dynbench.experiments import generate_instance
from dynbench.measures import risk_01
from dynbench.minimizers import MinimizerSpec, make_state
from dynbench.path_engine import (
    PathConfig,
    check_corollary_random_pick,
    check_lemma1,
    check_thm1_bound,
    run_path,
    trace_to_csv,
    trace_to_json,
    TRACE_CSV_HEADER,
)


def perfect_state():
    return make_state(MinimizerSpec(0.0, "perfect"))


def test_config_validation():
    with pytest.raises(ValueError):
        PathConfig(rounds=0)
    with pytest.raises(WeightShapeError):
        PathConfig(rounds=3, mixture_weights=[[0.5, 0.5]])  # missing round-2 vector
    with pytest.raises(WeightShapeError):
        PathConfig(rounds=2, mixture_weights=[[0.9, 0.2]])  # not a distribution
    cfg = PathConfig(rounds=3, mixture_weights=[[0.5, 0.5], [0.2, 0.3, 0.5]])
    assert cfg.weights_for_round(2).tolist() == [0.2, 0.3, 0.5]


def test_uniform_weight_pattern_across_rounds():
    inst = generate_instance(d=10, underlying="random", initial="random", seed=0)
    trace = run_path(inst, perfect_state(), PathConfig(rounds=4))
    got = [r.mixture_weights for r in trace.rounds]
    assert got[0] == (1.0,)
    for t, weights in enumerate(got[1:], start=1):
        assert len(weights) == t + 1
        assert all(w == pytest.approx(1.0 / (t + 1)) for w in weights)


def test_perfect_minimizer_three_rounds_majority_zero():
    for seed in range(30):
        inst = generate_instance(d=8 + seed % 9, underlying="random", initial="random", seed=seed)
        trace = run_path(inst, perfect_state(), PathConfig(rounds=3))
        assert trace.majority_risks[-1] == 0.0


def test_single_round_reduces_to_static():
    inst = generate_instance(d=8, seed=1)
    spec = MinimizerSpec(0.2, "random", seed=3)
    trace = run_path(inst, make_state(spec), PathConfig(rounds=1))
    assert len(trace.rounds) == 1
    assert trace.majority_risks[0] == risk_01(
        trace.rounds[0].classifier, inst.underlying, inst
    )
    assert trace.rounds[0].risk_on_round <= 0.2 + 1e-9


def test_trace_starts_from_instance_initial():
    inst = generate_instance(d=6, underlying="random", initial="random", seed=2)
    trace = run_path(inst, perfect_state(), PathConfig(rounds=2))
    assert trace.rounds[0].distribution.allclose(inst.initial)


def test_early_stop_on_zero_mass_errors():
    # full-support instance: a perfect oracle has an empty error set at once
    inst = generate_instance(d=6, seed=3)
    trace = run_path(inst, perfect_state(), PathConfig(rounds=5))
    assert trace.perfect_round == 0
    assert len(trace.rounds) == 1
    assert trace.rounds[0].risk_on_underlying == 0.0


def test_every_round_consistent():
    inst = generate_instance(d=10, underlying="random", seed=4)
    trace = run_path(inst, make_state(MinimizerSpec(0.15, "random", seed=5)), PathConfig(rounds=8))
    assert all(r.consistency.consistent for r in trace.rounds)


def test_perfect_error_sets_avoid_round_support():
    inst = generate_instance(d=12, underlying="random", initial="random", seed=6)
    trace = run_path(inst, perfect_state(), PathConfig(rounds=10))
    D = inst.underlying
    for r in trace.rounds:
        assert r.errors.points.isdisjoint(r.distribution.support())
    # pairwise joint mass on the underlying distribution is exactly zero
    for i, a in enumerate(trace.rounds):
        for b in trace.rounds[i + 1 :]:
            assert prob_of(D, a.errors.points & b.errors.points) == 0.0


def test_error_sets_literally_disjoint_on_full_support():
    inst = generate_instance(d=12, underlying="random", initial="random", seed=7)
    assert inst.underlying.support() == frozenset(range(12))
    trace = run_path(inst, perfect_state(), PathConfig(rounds=8))
    seen = set()
    for r in trace.rounds:
        on_support = r.errors.points & inst.underlying.support()
        assert not (seen & on_support)
        seen |= on_support


def test_support_growth_with_positive_weights():
    inst = generate_instance(d=10, underlying="random", initial="random", seed=8)
    trace = run_path(inst, make_state(MinimizerSpec(0.2, "random", seed=9)), PathConfig(rounds=6))
    supp_D = inst.underlying.support()
    for prev, nxt in zip(trace.rounds, trace.rounds[1:]):
        grown = prev.distribution.support() | (prev.errors.points & supp_D)
        assert grown <= nxt.distribution.support()


def test_lemma1_counts():
    for seed in range(40):
        inst = generate_instance(d=12, underlying="random", initial="random", seed=seed)
        trace = run_path(inst, perfect_state(), PathConfig(rounds=20))
        for alpha in (0.25, 0.5):
            assert check_lemma1(trace, alpha)
        # risk never exceeds one, so no classifier is 1-bad
        assert check_lemma1(trace, 1.0)
        assert sum(1 for r in trace.rounds if r.risk_on_underlying > 1.0) == 0


def test_corollary_random_pick():
    for seed in range(20):
        inst = generate_instance(d=12, underlying="random", initial="random", seed=seed)
        trace = run_path(inst, perfect_state(), PathConfig(rounds=40))
        for delta, alpha in [(0.1, 0.25), (0.2, 0.25), (0.1, 0.5), (0.2, 0.5)]:
            if len(trace.rounds) >= 1.0 / (delta * alpha):
                assert check_corollary_random_pick(trace, alpha, delta)


def test_corollary_all_zero_risk_trace():
    inst = generate_instance(d=8, seed=100)
    trace = run_path(inst, perfect_state(), PathConfig(rounds=20))
    # the perfect stop leaves a single zero-risk round; fraction is zero
    assert check_corollary_random_pick(trace, 1.0, 1.0)


def test_thm1_bound_sweep():
    for seed in range(60):
        eps = [0.05, 0.1, 0.2][seed % 3]
        inst = generate_instance(d=6 + seed % 7, seed=seed)
        trace = run_path(inst, make_state(MinimizerSpec(eps, "random", seed=seed)), PathConfig(rounds=3))
        assert check_thm1_bound(inst, trace)


def test_explicit_majority_weights_prefix():
    inst = generate_instance(d=8, seed=10)
    cfg = PathConfig(rounds=3, majority_weights=[0.5, 0.25, 0.25])
    w = cfg.majority_for_prefix(2)
    assert w.tolist() == [2 / 3, 1 / 3]


def test_trace_determinism_and_csv():
    inst = generate_instance(d=10, underlying="random", seed=11)
    spec = MinimizerSpec(0.2, "random", seed=13)
    a = run_path(inst, make_state(spec), PathConfig(rounds=9))
    b = run_path(inst, make_state(spec), PathConfig(rounds=9))
    assert trace_to_csv(a) == trace_to_csv(b)
    header = trace_to_csv(a).splitlines()[0]
    assert header == ",".join(TRACE_CSV_HEADER)
    doc = trace_to_json(a)
    assert len(doc["rounds"]) == len(a.rounds)


def test_scripted_engine_run():
    dom = FiniteDomain(4)
    D = uniform(dom)
    truth = Hypothesis(dom, np.array([1, 1, 1, 1]))
    h0 = truth.flip([0])
    h1 = truth.flip([1])
    inst = Instance(dom, D, D, truth, CompleteClass(dom))
    spec = MinimizerSpec(0.5, "scripted", script=(h0, h1))
    trace = run_path(inst, make_state(spec), PathConfig(rounds=2))
    assert trace.rounds[0].classifier == h0
    assert trace.rounds[1].classifier == h1
    # round 1 distribution is half initial, half the error atom of h0
    assert trace.rounds[1].distribution.mass.tolist() == pytest.approx([0.625, 0.125, 0.125, 0.125])
