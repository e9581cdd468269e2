"""Adversarial witness sequences attaining the lower bounds.

The path witness keeps a small common block misclassified by every round:
early rounds use pairwise-disjoint padded blocks, later rounds replay an
earlier classifier chosen by a running-tally assignment that keeps the
replayed block's mixture weight small.  The hierarchical witness lays out
nine blocks whose pairwise intersections collapse each width-3 stage to a
planned error set, leaving one point misclassified by all three stage
majorities.

Block formulas are kept in 1-based proof coordinates and converted to
0-based indices at the boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    DiscreteDistribution,
    ExplicitClass,
    FiniteDomain,
    Hypothesis,
    Instance,
    constant_hypothesis,
    prob_of,
    three_intervals_class,
    two_intervals_class,
    uniform,
)
from .errors import InvalidEpsilon, MembershipViolation, NotAscending
from .hier_engine import HierConfig, HierTrace
from .measures import error_set, majority, majority_risk, uniform_vote
from .minimizers import MinimizerSpec
from .path_engine import BenchmarkTrace, PathConfig

TALLY_TOL = 1e-9


def _interval(a: int, b: int) -> frozenset[int]:
    """1-based half-open proof interval (a, b] as 0-based indices."""
    return frozenset(range(a, b))


def _closed(a: int, b: int) -> frozenset[int]:
    """1-based closed proof interval [a, b] as 0-based indices."""
    return frozenset(range(a - 1, b))


def _check_unit_fraction(epsilon: float) -> int:
    inv = round(1.0 / epsilon)
    if inv < 1 or abs(inv * epsilon - 1.0) > 1e-9:
        raise InvalidEpsilon(f"1/epsilon must be a positive integer, got epsilon={epsilon}")
    return inv


def _weights_schedule(cfg: PathConfig, rounds: int) -> list[np.ndarray]:
    return [cfg.weights_for_round(t) for t in range(1, rounds)]


# ---------------------------------------------------------------------------
# Path witness


@dataclass(frozen=True)
class PathWitness:
    epsilon: float
    d: int
    k: int
    k_prime: int
    T: int
    rounds: int
    common: frozenset[int]                 # misclassified by every round
    blocks: tuple[frozenset[int], ...]     # planned error sets, rounds 0..T-1
    phi: tuple[int, ...]                   # replay assignment for rounds >= T
    tallies: tuple[tuple[float, ...], ...]  # running weight tallies per replay round
    hypotheses: tuple[Hypothesis, ...]
    instance: Instance
    minimizer_spec: MinimizerSpec
    config: PathConfig

    def block_for_round(self, t: int) -> frozenset[int]:
        return self.blocks[t] if t < self.T else self.blocks[self.phi[t - self.T]]

    @property
    def claimed_mass(self) -> float:
        return prob_of(self.instance.underlying, self.common)


def _path_blocks(inv: int) -> tuple[int, int, int, list[frozenset[int]], frozenset[int]]:
    d = 8 * inv * inv
    k = 1  # k = d * eps^2 / 8 at the minimal dimension
    k_prime = 2 * k * inv
    T = 2 * inv
    common = _closed(1, k)
    blocks = [_closed(1, k_prime)]
    for t in range(1, T):
        lo = k_prime + (t - 1) * (k_prime - k)
        hi = k_prime + t * (k_prime - k)
        blocks.append(common | _interval(lo, hi))
    return d, k, k_prime, blocks, common


def build_path_witness(
    epsilon: float,
    rounds: int,
    initial: Optional[DiscreteDistribution] = None,
    mixture_weights: object = "uniform",
    interval_class: bool = False,
) -> PathWitness:
    """Construct the scripted path witness for `rounds` rounds.

    `initial` defaults to uniform; any mass vector ascending in the index
    order is accepted (the dimension choice then guarantees every block
    constraint).  When `rounds` exceeds the number of distinct blocks the
    remaining rounds replay earlier classifiers through the tally
    assignment computed against `mixture_weights`.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    inv = _check_unit_fraction(epsilon)
    d, k, k_prime, blocks, common = _path_blocks(inv)
    domain = FiniteDomain(d)
    D = uniform(domain)
    if initial is None:
        initial = D
    else:
        if initial.domain != domain:
            raise ValueError(f"initial distribution must live on d={d}")
        if np.any(np.diff(initial.mass) < 0):
            raise NotAscending("initial masses must be ascending in index order")
    T = 2 * inv

    # Block constraints, re-checked rather than trusted: the planned error
    # sets must stay cheap under the initial distribution.
    for t, block in enumerate(blocks):
        budget = epsilon if t == 0 else epsilon / 2.0
        got = prob_of(initial, block)
        if got > budget + TALLY_TOL:
            raise NotAscending(
                f"initial mass {got:.6g} on block {t} exceeds {budget:.6g}"
            )

    cfg = PathConfig(rounds=rounds, mixture_weights=mixture_weights)
    schedule = _weights_schedule(cfg, rounds)

    phi: list[int] = []
    tallies: list[tuple[float, ...]] = []
    for t in range(T, rounds):
        w = schedule[t - 1]  # weights building round t's distribution
        tally = np.array([w[1 + tau] for tau in range(T)], dtype=np.float64)
        for tp in range(T, t):
            tally[phi[tp - T]] += w[1 + tp]
        choice = int(np.argmin(tally))
        if tally[choice] > 1.0 / T + TALLY_TOL:
            raise AssertionError("tally bound failed; assignment logic is broken")
        phi.append(choice)
        tallies.append(tuple(tally.tolist()))

    truth = constant_hypothesis(domain, 1)
    base_hyps = [truth.flip(block) for block in blocks]
    hypotheses = [
        base_hyps[t] if t < T else base_hyps[phi[t - T]] for t in range(rounds)
    ]

    if interval_class:
        hclass = two_intervals_class(domain, truth)
        for t, h in enumerate(hypotheses):
            if not hclass.contains(h):
                raise MembershipViolation(f"scripted hypothesis {t} is not a two-interval flip")
    else:
        distinct = list(dict.fromkeys(base_hyps[: min(T, rounds)]))
        hclass = ExplicitClass([truth] + distinct)

    inst = Instance(domain, D, initial, truth, hclass)
    spec = MinimizerSpec(epsilon=epsilon, mode="scripted", script=tuple(hypotheses))
    return PathWitness(
        epsilon=epsilon,
        d=d,
        k=k,
        k_prime=k_prime,
        T=T,
        rounds=rounds,
        common=common,
        blocks=tuple(blocks),
        phi=tuple(phi),
        tallies=tuple(tallies),
        hypotheses=tuple(hypotheses),
        instance=inst,
        minimizer_spec=spec,
        config=cfg,
    )


# ---------------------------------------------------------------------------
# Hierarchical witness


@dataclass(frozen=True)
class HierWitness:
    epsilon: float
    d: int
    blocks: tuple[frozenset[int], ...]       # planned leaf error sets, 9 entries
    stage_blocks: tuple[frozenset[int], ...]  # planned stage-majority error sets
    common: frozenset[int]
    hypotheses: tuple[Hypothesis, ...]
    instance: Instance
    minimizer_spec: MinimizerSpec
    config: HierConfig
    extrapolated: bool = False

    @property
    def claimed_mass(self) -> float:
        return prob_of(self.instance.underlying, self.common)


def _hier_blocks(inv: int) -> tuple[list[frozenset[int]], list[frozenset[int]]]:
    e1, e2 = inv, inv * inv
    one = _closed(1, 1)
    blocks = [
        _closed(1, e2),
        _closed(1, e1) | _interval(e2, 2 * e2 - e1),
        _closed(1, e1) | _interval(2 * e2 - e1, 3 * e2 - 2 * e1),
        one | _interval(e1, e2 + e1 - 1),
        one | _interval(e1, 2 * e1 - 1) | _interval(e2 + e1 - 1, 2 * e2 - 1),
        one | _interval(e1, 2 * e1 - 1) | _interval(2 * e2 - 1, 3 * e2 - e1 - 1),
        one | _interval(2 * e1 - 1, e2 + 2 * e1 - 2),
        one | _interval(2 * e1 - 1, 3 * e1 - 2) | _interval(e2 + 2 * e1 - 2, 2 * e2 + e1 - 2),
        one | _interval(2 * e1 - 1, 3 * e1 - 2) | _interval(2 * e2 + e1 - 2, 3 * e2 - 2),
    ]
    stages = [
        _closed(1, e1),
        one | _interval(e1, 2 * e1 - 1),
        one | _interval(2 * e1 - 1, 3 * e1 - 2),
    ]
    return blocks, stages


def build_hier_witness(
    epsilon: float = 0.5, d: Optional[int] = None, interval_class: bool = False
) -> HierWitness:
    """Depth-2 width-3 witness.  The proof fixes epsilon = 1/2 with d = 16;
    other unit fractions (with d >= 1/eps^3 + 2/eps^2 - 1) are accepted as
    an extrapolation of the same block layout."""
    inv = _check_unit_fraction(epsilon)
    if inv < 2:
        raise InvalidEpsilon("hierarchical witness needs epsilon <= 1/2")
    default_d = 2 * inv**3
    if d is None:
        d = default_d
    feasible = inv**3 + 2 * inv**2 - 1
    if d < feasible:
        raise InvalidEpsilon(f"d={d} below the feasibility threshold {feasible}")
    extrapolated = epsilon != 0.5 or d != 16

    blocks, stages = _hier_blocks(inv)
    if max(max(b) for b in blocks) >= d:
        raise InvalidEpsilon(f"block layout does not fit in d={d}")

    # Planned intersections must collapse exactly; this is the whole trick.
    for s, (i, j, l) in zip(stages, [(0, 1, 2), (3, 4, 5), (6, 7, 8)]):
        assert blocks[i] & blocks[j] == s
        assert blocks[i] & blocks[l] == s
        assert blocks[j] & blocks[l] == s
    common = stages[0] & stages[1] & stages[2]

    domain = FiniteDomain(d)
    D = uniform(domain)
    truth = constant_hypothesis(domain, 1)
    hypotheses = [truth.flip(b) for b in blocks]

    if interval_class:
        hclass = three_intervals_class(domain, truth)
        for t, h in enumerate(hypotheses):
            if not hclass.contains(h):
                raise MembershipViolation(f"scripted hypothesis {t} is not a three-interval flip")
    else:
        hclass = ExplicitClass([truth] + hypotheses)

    inst = Instance(domain, D, D, truth, hclass)
    spec = MinimizerSpec(epsilon=epsilon, mode="scripted", script=tuple(hypotheses))
    return HierWitness(
        epsilon=epsilon,
        d=d,
        blocks=tuple(blocks),
        stage_blocks=tuple(stages),
        common=common,
        hypotheses=tuple(hypotheses),
        instance=inst,
        minimizer_spec=spec,
        config=HierConfig(depth=2, width=3),
        extrapolated=extrapolated,
    )


def build_interval_witness(kind: str, epsilon: float, rounds: Optional[int] = None):
    """Same scripted sequences expressed inside the interval classes."""
    if kind == "path":
        inv = _check_unit_fraction(epsilon)
        if rounds is None:
            rounds = 2 * inv
        return build_path_witness(epsilon, rounds, interval_class=True)
    if kind == "hier":
        return build_hier_witness(epsilon, interval_class=True)
    raise ValueError(f"unknown witness kind {kind!r}")


# ---------------------------------------------------------------------------
# Verification


@dataclass(frozen=True)
class RoundCheck:
    round: int
    closed_form: float
    engine_risk: float
    consistent: bool
    agree: bool


@dataclass(frozen=True)
class WitnessReport:
    rounds: tuple[RoundCheck, ...]
    common_error_everywhere: bool
    surviving_mass: float
    claimed_mass: float
    mass_matches: bool
    majority_masses: tuple[float, ...]
    tallies_ok: bool
    ok: bool
    failures: tuple[str, ...]


def _conditional_mass(D: DiscreteDistribution, target: frozenset, given: frozenset) -> float:
    return prob_of(D, target & given) / prob_of(D, given)


def _path_closed_form(witness: PathWitness, t: int, weights: Sequence[float]) -> float:
    """Round-t risk predicted from set arithmetic alone: the initial term
    plus conditional masses against every earlier planned error set."""
    block = witness.block_for_round(t)
    if t == 0:
        return prob_of(witness.instance.initial, block)
    D = witness.instance.underlying
    total = weights[0] * prob_of(witness.instance.initial, block)
    for tp in range(t):
        total += weights[1 + tp] * _conditional_mass(D, block, witness.block_for_round(tp))
    return total


def _verify_path(
    witness: PathWitness,
    trace: BenchmarkTrace,
    majority_weightings: Optional[list] = None,
) -> WitnessReport:
    failures = []
    eps = witness.epsilon
    inst = witness.instance
    checks = []
    for r in trace.rounds:
        cf = _path_closed_form(witness, r.t, r.mixture_weights)
        agree = abs(cf - r.risk_on_round) <= TALLY_TOL
        consistent = cf <= eps + TALLY_TOL and r.risk_on_round <= eps + TALLY_TOL
        checks.append(RoundCheck(r.t, cf, r.risk_on_round, consistent, agree))
        if not agree:
            failures.append(f"round {r.t}: closed form {cf} != engine risk {r.risk_on_round}")
        if not consistent:
            failures.append(f"round {r.t}: risk exceeds epsilon")

    common_ok = all(
        witness.common <= error_set(r.classifier, inst).points for r in trace.rounds
    )
    if not common_ok:
        failures.append("a round classifier is correct somewhere on the common block")

    # Uniform majority attains the claimed mass exactly; arbitrary sampled
    # weightings are only guaranteed the lower bound (a single block can in
    # principle carry more than half the vote and add its padding).
    members = trace.classifiers()
    surviving = majority_risk(members, inst)
    claimed = witness.claimed_mass
    maj_masses = [surviving]
    for w in majority_weightings or []:
        maj_masses.append(majority_risk(members, inst, weights=np.asarray(w)))
    mass_ok = abs(surviving - claimed) <= 1e-12 and all(
        m >= claimed - 1e-12 for m in maj_masses
    )
    if not mass_ok:
        failures.append(f"majority risks {maj_masses} fall outside claimed {claimed}")

    tallies_ok = all(
        sum(tal) <= 1.0 + TALLY_TOL and tal[witness.phi[i]] <= 1.0 / witness.T + TALLY_TOL
        for i, tal in enumerate(witness.tallies)
    )
    if not tallies_ok:
        failures.append("replay tallies violate the 1/T bound")

    return WitnessReport(
        rounds=tuple(checks),
        common_error_everywhere=common_ok,
        surviving_mass=surviving,
        claimed_mass=claimed,
        mass_matches=mass_ok,
        majority_masses=tuple(maj_masses),
        tallies_ok=tallies_ok,
        ok=not failures,
        failures=tuple(failures),
    )


def _hier_atom_events(witness: HierWitness) -> list[list[Optional[frozenset[int]]]]:
    """Replay the depth-2 width-3 execution symbolically: for each leaf, the
    list of atom events behind its training mixture (None marks the initial
    distribution).  Independent of the engine: pure set arithmetic."""
    inst = witness.instance
    hyps = witness.hypotheses
    events: list[list[Optional[frozenset[int]]]] = []
    root_atoms: list[Optional[frozenset[int]]] = [None]
    idx = 0
    for _stage in range(3):
        local = list(root_atoms)
        members = []
        for step in range(3):
            events.append(list(local))
            members.append(hyps[idx])
            idx += 1
            if step < 2:
                local.append(error_set(members[-1], inst).points)
        g = majority(uniform_vote(members))
        root_atoms.append(error_set(g, inst).points)
    return events


def _verify_hier(witness: HierWitness, trace: HierTrace) -> WitnessReport:
    failures = []
    inst = witness.instance
    eps = witness.epsilon
    D = inst.underlying
    events = _hier_atom_events(witness)
    checks = []
    for i, leaf in enumerate(trace.leaves):
        atoms = events[i]
        n = len(atoms)
        block = witness.blocks[i]
        cf = 0.0
        for ev in atoms:
            if ev is None:
                cf += prob_of(inst.initial, block) / n
            else:
                cf += _conditional_mass(D, block, frozenset(ev)) / n
        agree = abs(cf - leaf.risk_on_step) <= TALLY_TOL
        consistent = cf <= eps + TALLY_TOL and leaf.risk_on_step <= eps + TALLY_TOL
        checks.append(RoundCheck(i, cf, leaf.risk_on_step, consistent, agree))
        if not agree:
            failures.append(f"leaf {i}: closed form {cf} != engine risk {leaf.risk_on_step}")
        if not consistent:
            failures.append(f"leaf {i}: risk exceeds epsilon")
        if leaf.atom_count != n:
            failures.append(f"leaf {i}: engine mixed {leaf.atom_count} atoms, layout says {n}")
        engine_events = tuple(None if e is None else frozenset(e) for e in leaf.atom_events)
        if engine_events != tuple(None if e is None else frozenset(e) for e in atoms):
            failures.append(f"leaf {i}: engine atom ancestry deviates from the layout")

    members = trace.top_members()
    stage_ok = all(
        error_set(g, inst).points == planned
        for g, planned in zip(members, witness.stage_blocks)
    )
    if not stage_ok:
        failures.append("a stage majority error set deviates from the layout")

    common_ok = all(witness.common <= error_set(g, inst).points for g in members)
    if not common_ok:
        failures.append("common point escapes a stage majority")

    surviving = majority_risk(members, inst)
    claimed = witness.claimed_mass
    mass_ok = abs(surviving - claimed) <= 1e-12
    if not mass_ok:
        failures.append(f"final majority risk {surviving} != claimed {claimed}")

    return WitnessReport(
        rounds=tuple(checks),
        common_error_everywhere=common_ok and stage_ok,
        surviving_mass=surviving,
        claimed_mass=claimed,
        mass_matches=mass_ok,
        majority_masses=(surviving,),
        tallies_ok=True,
        ok=not failures,
        failures=tuple(failures),
    )


def verify_witness(witness, trace, majority_weightings: Optional[list] = None) -> WitnessReport:
    """Check an engine trace against a witness: closed-form consistency per
    round, common-error inclusion, and the surviving majority error mass."""
    if isinstance(witness, PathWitness):
        return _verify_path(witness, trace, majority_weightings)
    if isinstance(witness, HierWitness):
        return _verify_hier(witness, trace)
    raise TypeError(f"unknown witness type {type(witness)!r}")


def sample_majority_weightings(count: int, length: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.dirichlet(np.ones(length)) for _ in range(count)]


def sample_mixture_schedule(rounds: int, seed: int) -> list[np.ndarray]:
    """One random simplex weight vector per round t >= 1 (length t + 1)."""
    rng = np.random.default_rng(seed)
    return [rng.dirichlet(np.ones(t + 1)) for t in range(1, rounds)]


# ---------------------------------------------------------------------------
# Audit output


def witness_to_json(witness) -> dict:
    if isinstance(witness, PathWitness):
        return {
            "kind": "path",
            "epsilon": witness.epsilon,
            "d": witness.d,
            "k": witness.k,
            "k_prime": witness.k_prime,
            "T": witness.T,
            "rounds": witness.rounds,
            "common": sorted(witness.common),
            "blocks": [sorted(b) for b in witness.blocks],
            "phi": list(witness.phi),
            "tallies": [list(t) for t in witness.tallies],
            "claimed_mass": witness.claimed_mass,
        }
    return {
        "kind": "hier",
        "epsilon": witness.epsilon,
        "d": witness.d,
        "blocks": [sorted(b) for b in witness.blocks],
        "stage_blocks": [sorted(b) for b in witness.stage_blocks],
        "common": sorted(witness.common),
        "claimed_mass": witness.claimed_mass,
        "extrapolated": witness.extrapolated,
    }


def _format_blocks(named: list[tuple[str, frozenset[int]]], d: int) -> str:
    """Aligned text layout in 1-based proof coordinates."""
    width = min(d, max(max(b) for _, b in named if b) + 2)
    lines = []
    for name, block in named:
        cells = "".join("#" if x in block else "." for x in range(width))
        points = ",".join(str(x + 1) for x in sorted(block))
        lines.append(f"{name:>6} |{cells}| {{{points}}}")
    return "\n".join(lines)


def format_layout(witness) -> str:
    if isinstance(witness, PathWitness):
        named = [("K", witness.common)] + [
            (f"K_{t}", b) for t, b in enumerate(witness.blocks)
        ]
        header = (
            f"path witness  eps={witness.epsilon}  d={witness.d}  k={witness.k}  "
            f"k'={witness.k_prime}  T={witness.T}  (1-based coordinates)"
        )
        body = _format_blocks(named, witness.d)
        if witness.phi:
            body += "\nphi: " + ", ".join(
                f"{witness.T + i}->{tau}" for i, tau in enumerate(witness.phi)
            )
        return header + "\n" + body
    named = [(f"K_{t}", b) for t, b in enumerate(witness.blocks)]
    named += [(f"K_g{j}", b) for j, b in enumerate(witness.stage_blocks)]
    named.append(("common", witness.common))
    header = f"hier witness  eps={witness.epsilon}  d={witness.d}  (1-based coordinates)"
    return header + "\n" + _format_blocks(named, witness.d)


def witness_json_str(witness) -> str:
    return json.dumps(witness_to_json(witness), indent=2)
