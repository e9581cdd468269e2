import numpy as np
import pytest

from dynbench.experiments import generate_instance
from dynbench.hier_engine import (
    HIER_CSV_HEADER,
    HierConfig,
    check_thm4_bound,
    hier_final_risk,
    hier_to_csv,
    hier_to_json,
    run_hier,
)
from dynbench.measures import risk_01
from dynbench.minimizers import MinimizerSpec, make_state
from dynbench.path_engine import PathConfig, run_path
from dynbench.witnesses import build_hier_witness


def test_config_validation():
    with pytest.raises(ValueError):
        HierConfig(depth=0)
    with pytest.raises(ValueError):
        HierConfig(width=1)
    assert HierConfig(depth=2, width=3).annotator_rounds == 9


def test_depth_one_equals_path_engine():
    for seed in range(10):
        inst = generate_instance(d=10, underlying="random", initial="random", seed=seed)
        spec = MinimizerSpec(0.2, "random", seed=seed)
        path_trace = run_path(inst, make_state(spec), PathConfig(rounds=4))
        hier_trace = run_hier(inst, make_state(spec), HierConfig(depth=1, width=4))
        assert len(hier_trace.leaves) == len(path_trace.rounds)
        for leaf, r in zip(hier_trace.leaves, path_trace.rounds):
            assert leaf.classifier == r.classifier
            assert np.array_equal(leaf.distribution.mass, r.distribution.mass)
            assert leaf.risk_on_step == r.risk_on_round


def test_perfect_minimizer_final_risk_zero():
    for seed in range(10):
        inst = generate_instance(d=10, underlying="random", initial="random", seed=seed)
        trace = run_hier(inst, make_state(MinimizerSpec(0.0, "perfect")), HierConfig())
        assert hier_final_risk(trace) == 0.0


def test_early_success_on_full_support():
    inst = generate_instance(d=8, seed=1)  # uniform: perfect oracle nails round one
    trace = run_hier(inst, make_state(MinimizerSpec(0.0, "perfect")), HierConfig())
    assert trace.root.early_success or hier_final_risk(trace) == 0.0


def test_flattened_atom_counts_match_proof_pattern():
    witness = build_hier_witness(0.5)
    trace = run_hier(
        witness.instance, make_state(witness.minimizer_spec), witness.config
    )
    assert [leaf.atom_count for leaf in trace.leaves] == [1, 2, 3, 2, 3, 4, 3, 4, 5]
    # the step training the fourth leaf mixes initial and the first stage's
    # error atom at exactly one half each
    assert trace.leaves[3].mixture_weights == (0.5, 0.5)
    assert trace.leaves[5].mixture_weights == (0.25, 0.25, 0.25, 0.25)
    assert all(leaf.consistency.consistent for leaf in trace.leaves)


def test_hier_witness_final_risk():
    witness = build_hier_witness(0.5)
    trace = run_hier(witness.instance, make_state(witness.minimizer_spec), witness.config)
    members = trace.top_members()
    assert risk_01(members[0], witness.instance.underlying, witness.instance) == 0.125
    assert hier_final_risk(trace) == 0.0625


def test_leaf_count_full_run():
    inst = generate_instance(d=12, underlying="random", initial="random", seed=3)
    trace = run_hier(inst, make_state(MinimizerSpec(0.2, "random", seed=5)), HierConfig())
    if not trace.root.early_success:
        assert trace.leaf_count() == 9


def test_thm4_bound_sweep():
    for seed in range(40):
        eps = [0.05, 0.1, 0.2][seed % 3]
        inst = generate_instance(d=6 + seed % 7, seed=seed)
        trace = run_hier(inst, make_state(MinimizerSpec(eps, "random", seed=seed)), HierConfig())
        assert check_thm4_bound(inst, trace)


def test_depth_three_warns():
    inst = generate_instance(d=6, seed=4)
    with pytest.warns(UserWarning, match="depth > 2"):
        run_hier(inst, make_state(MinimizerSpec(0.0, "perfect")), HierConfig(depth=3, width=2))


def test_csv_and_json():
    witness = build_hier_witness(0.5)
    trace = run_hier(witness.instance, make_state(witness.minimizer_spec), witness.config)
    text = hier_to_csv(trace)
    lines = text.splitlines()
    assert lines[0] == ",".join(HIER_CSV_HEADER)
    assert len(lines) == 10  # header plus nine leaves
    assert lines[1].startswith("0,0,")
    assert lines[4].startswith("1,0,")
    doc = hier_to_json(trace)
    assert doc["tree"]["leaf"] is False
    assert len(doc["tree"]["children"]) == 3
