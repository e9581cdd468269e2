"""Pluggable approximate risk-minimizer oracles.

Four modes: perfect argmin, seeded random draws from the feasible set,
a target-seeking adversary, and scripted replay.  Every mode's output is
checked against the accuracy contract before it is returned; a violation
is an oracle bug, not a recoverable condition.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    CompleteClass,
    DiscreteDistribution,
    Hypothesis,
    Instance,
    enumerate_class,
)
from .errors import ContractViolation, InfeasibleScript, ScriptExhausted
from .measures import risk_01

EPS_SLACK = 1e-9  # boundary risk = min + eps is feasible; slack absorbs drift
ADVERSARY_SUBSET_CAP = 16


@dataclass(frozen=True)
class MinimizerSpec:
    """Configuration of the approximate risk minimizer oracle."""

    epsilon: float = 0.0
    mode: str = "perfect"
    seed: Optional[int] = None
    target: frozenset[int] = field(default_factory=frozenset)
    script: tuple[Hypothesis, ...] = ()

    def __post_init__(self):
        # The witness constructions run scripted oracles at epsilon = 1/2,
        # so the range is [0, 1); the gradient updates enforce their own
        # stricter epsilon < 1/2 precondition.
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.mode not in ("perfect", "random", "adversarial", "scripted"):
            raise ValueError(f"unknown minimizer mode {self.mode!r}")
        if self.mode == "scripted" and not self.script:
            raise ValueError("scripted mode needs a non-empty hypothesis sequence")
        object.__setattr__(self, "target", frozenset(self.target))
        object.__setattr__(self, "script", tuple(self.script))

    def to_json(self) -> dict:
        doc: dict = {"epsilon": self.epsilon, "mode": self.mode}
        if self.seed is not None:
            doc["seed"] = self.seed
        if self.mode == "adversarial":
            doc["target"] = sorted(self.target)
        if self.mode == "scripted":
            doc["script"] = [h.labels.tolist() for h in self.script]
        return doc

    @staticmethod
    def from_json(doc: dict, domain=None) -> "MinimizerSpec":
        script = tuple(
            Hypothesis(domain, np.array(m)) for m in doc.get("script", [])
        )
        return MinimizerSpec(
            epsilon=float(doc.get("epsilon", 0.0)),
            mode=doc["mode"],
            seed=doc.get("seed"),
            target=frozenset(doc.get("target", [])),
            script=script,
        )


class MinimizerState:
    """Single-owner mutable oracle state: call counter plus seeded RNG."""

    def __init__(self, spec: MinimizerSpec):
        self.spec = spec
        self.call_counter = 0
        self.rng = np.random.default_rng(spec.seed)


def make_state(spec: MinimizerSpec) -> MinimizerState:
    return MinimizerState(spec)


# ---------------------------------------------------------------------------
# Risk floor


def min_risk(inst: Instance, P: DiscreteDistribution) -> float:
    """Smallest achievable risk on P over the instance's class.

    Realizable instances always admit the true classifier, so the floor is
    zero without any enumeration.  On noisy instances the complete class
    floor is half the noisy mass; other classes are enumerated.
    """
    if inst.realizable:
        return 0.0
    if isinstance(inst.hclass, CompleteClass):
        noisy_mass = float(P.mass[inst.noisy_mask()].sum())
        return 0.5 * noisy_mass
    return min(risk_01(h, P, inst) for h in enumerate_class(inst.hclass))


def eps_feasible_set(
    inst: Instance, P: DiscreteDistribution, epsilon: float
) -> list[Hypothesis]:
    """All class members within epsilon of the optimal risk on P."""
    best = min_risk(inst, P)
    return [
        h
        for h in enumerate_class(inst.hclass)
        if risk_01(h, P, inst) <= best + epsilon + EPS_SLACK
    ]


@dataclass(frozen=True)
class ConsistencyReport:
    achieved: float
    minimum: float
    epsilon: float
    consistent: bool


def verify_eps_consistency(
    step: tuple[DiscreteDistribution, Hypothesis], inst: Instance, epsilon: float
) -> tuple[bool, ConsistencyReport]:
    """Check one (distribution, classifier) step against the contract.
    The boundary risk = min + epsilon counts as consistent."""
    P, h = step
    achieved = risk_01(h, P, inst)
    minimum = min_risk(inst, P)
    ok = achieved <= minimum + epsilon + EPS_SLACK
    return ok, ConsistencyReport(achieved, minimum, epsilon, ok)


# ---------------------------------------------------------------------------
# Mode implementations


def _perfect_complete(inst: Instance, P: DiscreteDistribution) -> Hypothesis:
    """Exact argmin over the complete class without enumeration.

    Constrained points (positive P mass, realizably labelled) must copy the
    truth; everywhere else the lowest enumeration index puts +1.  Matches
    the enumerated argmin with first-wins ties at any enumerable size.
    """
    constrained = P.mass > 0
    if inst.noisy_set:
        constrained = constrained & ~inst.noisy_mask()
    labels = np.ones(inst.domain.size, dtype=np.int8)
    labels[constrained] = inst.truth.labels[constrained]
    return Hypothesis(inst.domain, labels)


def _perfect(inst: Instance, P: DiscreteDistribution) -> Hypothesis:
    if isinstance(inst.hclass, CompleteClass):
        return _perfect_complete(inst, P)
    best_h, best_r = None, np.inf
    for h in enumerate_class(inst.hclass):
        r = risk_01(h, P, inst)
        if r < best_r:
            best_h, best_r = h, r
    return best_h


def _flip_cost(inst: Instance, P: DiscreteDistribution) -> np.ndarray:
    """Risk increase from flipping each point away from the truth.
    Randomly labelled points cost nothing: their risk is 1/2 either way."""
    cost = np.array(P.mass, dtype=np.float64)
    if inst.noisy_set:
        cost[inst.noisy_mask()] = 0.0
    return cost


def _random_complete(
    state: MinimizerState, inst: Instance, P: DiscreteDistribution
) -> Hypothesis:
    """Constructive sampler for the complete class: visit points in seeded
    random order, flip away from the truth while the accumulated risk cost
    stays within epsilon, and flip zero-cost points with probability 1/2."""
    eps = state.spec.epsilon
    cost = _flip_cost(inst, P)
    labels = np.array(inst.truth.labels, dtype=np.int8)
    spent = 0.0
    for x in state.rng.permutation(inst.domain.size):
        c = cost[x]
        if c == 0.0:
            if state.rng.random() < 0.5:
                labels[x] = -labels[x]
        elif spent + c <= eps + EPS_SLACK:
            labels[x] = -labels[x]
            spent += c
    return Hypothesis(inst.domain, labels)


def _random(state: MinimizerState, inst: Instance, P: DiscreteDistribution) -> Hypothesis:
    if isinstance(inst.hclass, CompleteClass):
        return _random_complete(state, inst, P)
    feasible = eps_feasible_set(inst, P, state.spec.epsilon)
    return feasible[int(state.rng.integers(len(feasible)))]


def _best_target_subset(
    candidates: list[int], cost: np.ndarray, gain: np.ndarray, budget: float
) -> list[int]:
    """Exact search for the feasible flip subset of maximal gain.  Ties fall
    to the subset whose sorted point tuple is smallest."""
    best_gain, best_subset = -1.0, []
    for r in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, r):
            c = float(cost[list(combo)].sum()) if combo else 0.0
            if c > budget + EPS_SLACK:
                continue
            g = float(gain[list(combo)].sum()) if combo else 0.0
            if g > best_gain + 1e-15:
                best_gain, best_subset = g, list(combo)
    return best_subset


def _adversarial(
    state: MinimizerState, inst: Instance, P: DiscreteDistribution
) -> Hypothesis:
    eps = state.spec.epsilon
    target = state.spec.target
    if not all(0 <= x < inst.domain.size for x in target):
        raise ValueError("adversarial target contains out-of-domain points")
    if not isinstance(inst.hclass, CompleteClass):
        best_h, best_obj = None, -1.0
        truth = inst.truth.labels
        tmask = np.zeros(inst.domain.size, dtype=bool)
        tmask[list(target)] = True
        if inst.noisy_set:
            tmask = tmask & ~inst.noisy_mask()
        floor = min_risk(inst, P)
        for h in enumerate_class(inst.hclass):
            if risk_01(h, P, inst) > floor + eps + EPS_SLACK:
                continue
            obj = float(inst.underlying.mass[(h.labels != truth) & tmask].sum())
            if obj > best_obj:
                best_h, best_obj = h, obj
        if best_h is None:
            raise ContractViolation("feasible set is empty; class or floor is broken")
        return best_h

    # Complete class: error mass inside the target is maximized by flipping
    # a feasible subset of target points and nothing else.
    cost = _flip_cost(inst, P)
    gain = np.array(inst.underlying.mass, dtype=np.float64)
    candidates = sorted(
        x for x in target if not (inst.noisy_set and x in inst.noisy_set)
    )
    if len(candidates) <= ADVERSARY_SUBSET_CAP:
        flips = _best_target_subset(candidates, cost, gain, eps)
    else:
        order = sorted(
            candidates, key=lambda x: (-(gain[x] / cost[x] if cost[x] > 0 else np.inf), x)
        )
        flips, spent = [], 0.0
        for x in order:
            if spent + cost[x] <= eps + EPS_SLACK:
                flips.append(x)
                spent += cost[x]
    return inst.truth.flip(flips)


def _scripted(state: MinimizerState, inst: Instance, P: DiscreteDistribution) -> Hypothesis:
    idx = state.call_counter
    if idx >= len(state.spec.script):
        raise ScriptExhausted(f"script has {len(state.spec.script)} entries, call {idx}")
    h = state.spec.script[idx]
    achieved = risk_01(h, P, inst)
    floor = min_risk(inst, P)
    if achieved > floor + state.spec.epsilon + EPS_SLACK:
        raise InfeasibleScript(idx, achieved, floor, state.spec.epsilon)
    return h


def minimize(state: MinimizerState, inst: Instance, P: DiscreteDistribution) -> Hypothesis:
    """Run one oracle call on distribution P.  The returned hypothesis is
    guaranteed to satisfy risk <= min + epsilon; every call re-checks."""
    mode = state.spec.mode
    if mode == "perfect":
        h = _perfect(inst, P)
    elif mode == "random":
        h = _random(state, inst, P)
    elif mode == "adversarial":
        h = _adversarial(state, inst, P)
    else:
        h = _scripted(state, inst, P)
    state.call_counter += 1

    ok, report = verify_eps_consistency((P, h), inst, state.spec.epsilon)
    if not ok:
        raise ContractViolation(
            f"{mode} oracle returned risk {report.achieved:.9g} "
            f"> min {report.minimum:.9g} + eps {report.epsilon:.9g}"
        )
    return h
