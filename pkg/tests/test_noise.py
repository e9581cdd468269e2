import numpy as np
import pytest

from dynbench.core import Instance, prob_of
from dynbench.errors import DeltaNotDominant
from dynbench.experiments import generate_instance
from dynbench.minimizers import MinimizerSpec, make_state
from dynbench.noise import (
    NOISY_CSV_HEADER,
    check_concentration,
    delta_first_round_bound,
    delta_lower_bound,
    noisy_to_csv,
    run_noisy_path,
)
from dynbench.path_engine import PathConfig, run_path


def noisy_instance(d, noisy_count, seed=0):
    base = generate_instance(d=d, seed=seed)
    rng = np.random.default_rng(seed + 1000)
    noisy = frozenset(rng.choice(d, size=noisy_count, replace=False).tolist())
    return Instance(base.domain, base.underlying, base.initial, base.truth, base.hclass, noisy)


def test_bound_values():
    # first-round floor at eps=0.01, delta=0.2
    assert delta_first_round_bound(0.01, 0.2) == pytest.approx(0.1 + 0.5 / 1.1, abs=1e-12)
    assert delta_first_round_bound(0.01, 0.2) == pytest.approx(0.5545454545, abs=1e-9)
    # closed form: t=5, eps=0.02, delta=0.5 -> 1/(2 * 2.6)
    assert delta_lower_bound(5, 0.02, 0.5) == pytest.approx(1.0 / 5.2, abs=1e-12)
    # t=10 at eps=0.01, delta=0.2 -> 1/(2 * 5)
    assert delta_lower_bound(10, 0.01, 0.2) == pytest.approx(0.1, abs=1e-15)
    # vanishing eps/delta pushes the t=1 floor to one half
    assert delta_lower_bound(1, 1e-12, 1.0 - 1e-9) == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(ValueError):
        delta_lower_bound(0, 0.1, 0.5)


def test_beta_horizon_floor():
    # for t <= beta * delta / eps the floor stays above 1/(2(1+8 beta))
    eps, delta, beta = 0.01, 0.2, 1.0
    horizon = int(beta * delta / eps)
    for t in range(1, horizon + 1):
        assert delta_lower_bound(t, eps, delta) >= 1.0 / (2.0 * (1.0 + 8.0 * beta)) - 1e-12


def test_round_zero_mass_equals_delta():
    inst = noisy_instance(10, 2, seed=0)
    trace = run_noisy_path(inst, make_state(MinimizerSpec(0.01, "random", seed=0)), rounds=1)
    assert trace.rounds[0].delta_t == pytest.approx(0.2, abs=1e-15)


def test_first_round_concentration():
    for seed in range(20):
        inst = noisy_instance(10, 2, seed=seed)
        trace = run_noisy_path(inst, make_state(MinimizerSpec(0.01, "random", seed=seed)), rounds=2)
        assert trace.rounds[1].delta_t >= delta_first_round_bound(0.01, 0.2) - 1e-9


def test_concentration_sweep_mixed_minimizers():
    for seed in range(50):
        d = [10, 15, 20][seed % 3]
        inst = noisy_instance(d, d // 5, seed=seed)
        spec = (
            MinimizerSpec(0.0, "perfect")
            if seed % 2 == 0
            else MinimizerSpec(0.01, "random", seed=seed)
        )
        trace = run_noisy_path(inst, make_state(spec), rounds=20)
        assert trace.bounds_checked
        assert check_concentration(trace)


def test_realizable_part_risk_invariant():
    # (1 - delta_t) * realizable risk stays within the oracle slack
    for seed in range(30):
        inst = noisy_instance(10, 2, seed=seed)
        trace = run_noisy_path(inst, make_state(MinimizerSpec(0.05, "random", seed=seed)), rounds=15)
        for r in trace.rounds:
            assert (1.0 - r.delta_t) * r.realizable_risk <= 0.05 + 1e-9


def test_error_mixture_noisy_weight_matches_formula():
    inst = noisy_instance(10, 2, seed=3)
    delta = inst.delta
    trace = run_noisy_path(inst, make_state(MinimizerSpec(0.05, "random", seed=3)), rounds=10)
    D = inst.underlying
    noisy_mask = inst.noisy_mask()
    realizable = frozenset(np.flatnonzero(~noisy_mask).tolist())
    for r in trace.rounds:
        errs = frozenset(
            x
            for x in realizable
            if r.classifier(x) != inst.truth(x)
        )
        r_under = (
            prob_of(D, errs) / prob_of(D, realizable) if errs else 0.0
        )
        expect = (delta / 2.0) / (delta / 2.0 + (1.0 - delta) * r_under)
        assert r.noisy_weight == pytest.approx(expect, abs=1e-12)
        # the assembled error mixture carries exactly that mass on the
        # noisy subset
        assert prob_of(r.error_dist, inst.noisy_set) == pytest.approx(expect, abs=1e-12)


def test_delta_not_dominant_warns_and_skips():
    inst = noisy_instance(10, 2, seed=4)
    with pytest.warns(DeltaNotDominant):
        trace = run_noisy_path(inst, make_state(MinimizerSpec(0.3, "random", seed=4)), rounds=5)
    assert not trace.bounds_checked
    assert check_concentration(trace)  # skipped, vacuously fine


def test_empty_noisy_set_reduces_to_path():
    inst = generate_instance(d=10, underlying="random", initial="random", seed=5)
    spec = MinimizerSpec(0.2, "random", seed=7)
    noisy_trace = run_noisy_path(inst, make_state(spec), rounds=8)
    path_trace = run_path(inst, make_state(spec), PathConfig(rounds=8))
    assert len(noisy_trace.rounds) == len(path_trace.rounds)
    for a, b in zip(noisy_trace.rounds, path_trace.rounds):
        assert a.classifier == b.classifier
        assert np.array_equal(a.distribution.mass, b.distribution.mass)


def test_csv_columns():
    inst = noisy_instance(10, 2, seed=6)
    trace = run_noisy_path(inst, make_state(MinimizerSpec(0.01, "random", seed=6)), rounds=4)
    text = noisy_to_csv(trace)
    lines = text.splitlines()
    assert lines[0] == ",".join(NOISY_CSV_HEADER)
    assert "delta_t" in lines[0] and "bound_t" in lines[0]
    assert len(lines) == 5
