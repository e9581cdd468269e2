"""Exact population-level simulation and verification of dynamic benchmark
designs over finite domains."""

from .core import (
    CompleteClass,
    DiscreteDistribution,
    ExplicitClass,
    FiniteDomain,
    Hypothesis,
    Instance,
    IntervalClass,
    condition,
    constant_hypothesis,
    enumerate_class,
    instance_from_json,
    instance_to_json,
    mix,
    prob_of,
    three_intervals_class,
    two_intervals_class,
    uniform,
)
from .experiments import (
    ExperimentConfig,
    RolloutSummary,
    generate_instance,
    pearson,
    run_rollouts,
    z_score,
)
from .gradient import (
    BoostState,
    RealHypothesis,
    boost_step,
    hinge_risk,
    hinge_step,
    run_boost,
    run_hinge,
)
from .hier_engine import HierConfig, HierTrace, check_thm4_bound, hier_final_risk, run_hier
from .measures import (
    EnsembleVote,
    ErrorSet,
    error_set,
    hdh_distance,
    joint_error_mass,
    majority,
    majority_risk,
    risk_01,
    uniform_vote,
)
from .minimizers import (
    MinimizerSpec,
    MinimizerState,
    eps_feasible_set,
    make_state,
    minimize,
    verify_eps_consistency,
)
from .noise import NoisyTrace, check_concentration, delta_lower_bound, run_noisy_path
from .path_engine import (
    BenchmarkTrace,
    PathConfig,
    check_corollary_random_pick,
    check_lemma1,
    check_thm1_bound,
    run_path,
)
from .witnesses import (
    HierWitness,
    PathWitness,
    build_hier_witness,
    build_interval_witness,
    build_path_witness,
    verify_witness,
)

__version__ = "0.1.0"
