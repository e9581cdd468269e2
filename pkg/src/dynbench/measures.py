"""Risk, error sets, weighted majority votes, and the class-pair
distribution distance.  Pure functions over immutable inputs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    CompleteClass,
    DiscreteDistribution,
    FiniteDomain,
    Hypothesis,
    HypothesisClass,
    Instance,
    enumerate_class,
)
from .errors import NotEnumerable

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class ErrorSet:
    domain: FiniteDomain
    points: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "points", frozenset(self.points))
        if self.points and not all(0 <= x < self.domain.size for x in self.points):
            raise ValueError("error set contains out-of-domain points")

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class EnsembleVote:
    members: tuple[Hypothesis, ...]
    weights: np.ndarray

    def __post_init__(self):
        members = tuple(self.members)
        weights = np.asarray(self.weights, dtype=np.float64)
        if len(members) == 0:
            raise ValueError("ensemble must have at least one member")
        if weights.shape != (len(members),):
            raise ValueError("one weight per member required")
        if np.any(weights < 0):
            raise ValueError("ensemble weights must be non-negative")
        total = float(weights.sum())
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"ensemble weights sum to {total!r}, not 1")
        weights = np.ascontiguousarray(weights)
        weights.flags.writeable = False
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "weights", weights)


def uniform_vote(members: list[Hypothesis]) -> EnsembleVote:
    n = len(members)
    return EnsembleVote(tuple(members), np.full(n, 1.0 / n))


def error_set(h: Hypothesis, inst: Instance) -> ErrorSet:
    """Points where h disagrees with the truth.

    On noisy instances only the realizable part is a set; the randomly
    labelled points carry risk 1/2 analytically through risk_01 and never
    appear here.
    """
    disagree = h.labels != inst.truth.labels
    if inst.noisy_set:
        disagree = disagree & ~inst.noisy_mask()
    return ErrorSet(inst.domain, frozenset(np.flatnonzero(disagree).tolist()))


def risk_01(h: Hypothesis, P: DiscreteDistribution, inst: Instance) -> float:
    """Zero-one risk of h under P.  Randomly labelled points contribute
    half their mass regardless of the predicted label."""
    disagree = h.labels != inst.truth.labels
    if not inst.noisy_set:
        return float(P.mass[disagree].sum())
    noisy = inst.noisy_mask()
    return float(P.mass[disagree & ~noisy].sum() + 0.5 * P.mass[noisy].sum())


def majority(vote: EnsembleVote) -> Hypothesis:
    """Weighted majority vote.  Ties resolve to +1: sign(0) = +1."""
    stacked = np.stack([h.labels.astype(np.float64) for h in vote.members])
    score = vote.weights @ stacked
    labels = np.where(score >= 0, 1, -1).astype(np.int8)
    return Hypothesis(vote.members[0].domain, labels)


def majority_risk(
    members: list[Hypothesis],
    inst: Instance,
    P: DiscreteDistribution | None = None,
    weights=None,
) -> float:
    """Risk of the (weighted) majority vote under P (default: underlying)."""
    vote = uniform_vote(members) if weights is None else EnsembleVote(tuple(members), np.asarray(weights))
    return risk_01(majority(vote), P if P is not None else inst.underlying, inst)


def joint_error_mass(h1: Hypothesis, h2: Hypothesis, inst: Instance) -> float:
    """Underlying mass of the points both classifiers get wrong."""
    if not inst.realizable:
        raise ValueError("joint error mass is defined for realizable instances")
    both = (h1.labels != inst.truth.labels) & (h2.labels != inst.truth.labels)
    return float(inst.underlying.mass[both].sum())


def _pair_sup(P1: DiscreteDistribution, P2: DiscreteDistribution, hclass) -> float:
    diff = P1.mass - P2.mass
    members = [h.labels for h in enumerate_class(hclass)]
    best = 0.0
    for i, hi in enumerate(members):
        for hj in members[i:]:  # |.| makes ordered and unordered pairs agree
            dis = hi != hj
            val = abs(float(diff[dis].sum()))
            if val > best:
                best = val
    return best


def hdh_distance(
    P1: DiscreteDistribution, P2: DiscreteDistribution, hclass: HypothesisClass
) -> float:
    """Largest difference, over pairs of class members, between the two
    distributions' disagreement masses.

    For the complete class every subset is a disagreement set of some pair,
    so the supremum collapses to the total variation distance
    max_A |P1(A) - P2(A)| = (1/2) sum_x |P1(x) - P2(x)|.
    """
    if P1.domain != P2.domain:
        raise ValueError("distributions must share one domain")
    if isinstance(hclass, CompleteClass):
        return 0.5 * float(np.abs(P1.mass - P2.mass).sum())
    if not hclass.is_enumerable():
        raise NotEnumerable(f"{hclass.kind} class too large for the pair supremum")
    return _pair_sup(P1, P2, hclass)


def tv_distance(P1: DiscreteDistribution, P2: DiscreteDistribution) -> float:
    return 0.5 * float(np.abs(P1.mass - P2.mass).sum())
