"""Sequential (path) dynamic benchmarking loop and its bound checkers.

Each round: fit a classifier on the current distribution, condition the
underlying distribution on its error set, and mix the initial distribution
with all accumulated error distributions for the next round.  A zero-mass
error set ends the run early: the benchmark has produced a perfect model
and there is nothing left for annotators to sample.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    DiscreteDistribution,
    Instance,
    condition,
    mix,
    prob_of,
)
from .errors import WeightShapeError
from .measures import ErrorSet, error_set, hdh_distance, majority, majority_risk, risk_01, uniform_vote
from .minimizers import ConsistencyReport, MinimizerState, minimize, verify_eps_consistency

# Theorem constants from the three-round majority analysis.
THM1_EPS2_COEFF = 11.0
THM1_SHIFT_COEFF = 8.0


@dataclass(frozen=True)
class PathConfig:
    """Run length plus the mixture / majority weight policies.

    mixture_weights: "uniform", or a sequence whose entry for round t >= 1
    is the weight vector (w_t0, wbar_t0, ..., wbar_t(t-1)) of length t + 1.
    majority_weights: "uniform", or one weight vector over all rounds;
    prefix votes renormalize its leading entries.
    """

    rounds: int
    mixture_weights: object = "uniform"
    majority_weights: object = "uniform"

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.mixture_weights != "uniform":
            sched = [np.asarray(w, dtype=np.float64) for w in self.mixture_weights]
            if len(sched) < self.rounds - 1:
                raise WeightShapeError(
                    f"need {self.rounds - 1} weight vectors, got {len(sched)}"
                )
            for t, w in enumerate(sched, start=1):
                if w.shape != (t + 1,):
                    raise WeightShapeError(
                        f"round {t} expects {t + 1} weights, got {w.shape}"
                    )
                if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-12:
                    raise WeightShapeError(f"round {t} weights must be a distribution")
            object.__setattr__(self, "mixture_weights", tuple(map(tuple, sched)))
        if self.majority_weights != "uniform":
            w = np.asarray(self.majority_weights, dtype=np.float64)
            if w.shape != (self.rounds,) or np.any(w < 0):
                raise WeightShapeError("majority weights: one non-negative entry per round")
            object.__setattr__(self, "majority_weights", tuple(w.tolist()))

    def weights_for_round(self, t: int) -> np.ndarray:
        """Mixture weights used to build the distribution of round t >= 1."""
        if self.mixture_weights == "uniform":
            return np.full(t + 1, 1.0 / (t + 1))
        return np.asarray(self.mixture_weights[t - 1], dtype=np.float64)

    def majority_for_prefix(self, n: int) -> np.ndarray:
        if self.majority_weights == "uniform":
            return np.full(n, 1.0 / n)
        w = np.asarray(self.majority_weights[:n], dtype=np.float64)
        total = w.sum()
        if total <= 0:
            raise WeightShapeError(f"majority weights for prefix {n} sum to zero")
        return w / total


@dataclass(frozen=True)
class PathRound:
    t: int
    distribution: DiscreteDistribution
    classifier: object
    errors: ErrorSet
    risk_on_round: float
    risk_on_underlying: float
    mixture_weights: tuple[float, ...]
    consistency: ConsistencyReport


@dataclass(frozen=True)
class BenchmarkTrace:
    instance: Instance
    epsilon: float
    rounds: tuple[PathRound, ...]
    majority_risks: tuple[float, ...]  # prefix majority risk on the underlying
    perfect_round: Optional[int] = None

    def classifiers(self) -> list:
        return [r.classifier for r in self.rounds]

    def __len__(self) -> int:
        return len(self.rounds)


def run_path(inst: Instance, minimizer: MinimizerState, cfg: PathConfig) -> BenchmarkTrace:
    """Execute the sequential loop for up to cfg.rounds rounds."""
    if not inst.realizable:
        raise ValueError("run_path handles realizable instances; see the noise engine")
    D = inst.underlying
    current = inst.initial
    error_atoms: list[DiscreteDistribution] = []
    rounds: list[PathRound] = []
    maj_risks: list[float] = []
    perfect: Optional[int] = None

    for t in range(cfg.rounds):
        weights = cfg.weights_for_round(t) if t >= 1 else np.array([1.0])
        h = minimize(minimizer, inst, current)
        errs = error_set(h, inst)
        _, report = verify_eps_consistency((current, h), inst, minimizer.spec.epsilon)
        rounds.append(
            PathRound(
                t=t,
                distribution=current,
                classifier=h,
                errors=errs,
                risk_on_round=report.achieved,
                risk_on_underlying=risk_01(h, D, inst),
                mixture_weights=tuple(np.asarray(weights).tolist()),
                consistency=report,
            )
        )
        members = [r.classifier for r in rounds]
        maj_risks.append(
            majority_risk(members, inst, weights=cfg.majority_for_prefix(len(members)))
        )
        if prob_of(D, errs.points) == 0.0:
            perfect = t
            break
        error_atoms.append(condition(D, errs.points))
        if t + 1 < cfg.rounds:
            current = mix([inst.initial] + error_atoms, cfg.weights_for_round(t + 1))

    return BenchmarkTrace(
        instance=inst,
        epsilon=minimizer.spec.epsilon,
        rounds=tuple(rounds),
        majority_risks=tuple(maj_risks),
        perfect_round=perfect,
    )


# ---------------------------------------------------------------------------
# Theorem checkers


def check_lemma1(trace: BenchmarkTrace, alpha: float) -> bool:
    """No more than 1/alpha classifiers may exceed risk alpha when the
    oracle is perfect."""
    bad = sum(1 for r in trace.rounds if r.risk_on_underlying > alpha)
    return bad <= 1.0 / alpha


def check_corollary_random_pick(trace: BenchmarkTrace, alpha: float, delta: float) -> bool:
    """A uniform pick from a long enough trace is alpha-accurate with
    probability at least 1 - delta; the pick-is-bad probability is exactly
    the fraction of alpha-bad rounds."""
    T = len(trace.rounds)
    if T < 1.0 / (delta * alpha):
        raise ValueError(f"trace length {T} below 1/(delta*alpha)")
    bad = sum(1 for r in trace.rounds if r.risk_on_underlying > alpha)
    return bad / T <= delta


def thm1_bound(inst: Instance, epsilon: float) -> float:
    shift = hdh_distance(inst.initial, inst.underlying, inst.hclass)
    return THM1_EPS2_COEFF * epsilon**2 + THM1_SHIFT_COEFF * epsilon * shift


def check_thm1_bound(inst: Instance, trace: BenchmarkTrace) -> bool:
    """Three-round uniform majority risk against the explicit constant
    bound 11 eps^2 + 8 eps shift."""
    if len(trace.rounds) < 3:
        if trace.perfect_round is None:
            raise ValueError("bound check needs three rounds or an early perfect stop")
        # The run ended with a perfect model; that model is the output.
        lhs = trace.rounds[-1].risk_on_underlying
    else:
        members = [trace.rounds[t].classifier for t in range(3)]
        lhs = risk_01(majority(uniform_vote(members)), inst.underlying, inst)
    return lhs <= thm1_bound(inst, trace.epsilon) + 1e-9


# ---------------------------------------------------------------------------
# Serialization

TRACE_CSV_HEADER = ["run_id", "round", "risk_ht_on_Dt", "risk_ht_on_D", "maj_risk", "perfect_round"]


def trace_csv_rows(trace: BenchmarkTrace, run_id: int = 0) -> list[list[str]]:
    rows = []
    pr = "" if trace.perfect_round is None else str(trace.perfect_round)
    for r, maj in zip(trace.rounds, trace.majority_risks):
        rows.append(
            [str(run_id), str(r.t), repr(r.risk_on_round), repr(r.risk_on_underlying), repr(maj), pr]
        )
    return rows


def trace_to_csv(trace: BenchmarkTrace, run_id: int = 0) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_CSV_HEADER)
    writer.writerows(trace_csv_rows(trace, run_id))
    return buf.getvalue()


def trace_to_json(trace: BenchmarkTrace) -> dict:
    return {
        "epsilon": trace.epsilon,
        "perfect_round": trace.perfect_round,
        "majority_risks": [repr(v) for v in trace.majority_risks],
        "rounds": [
            {
                "t": r.t,
                "distribution": [repr(float(v)) for v in r.distribution.mass],
                "classifier": r.classifier.labels.tolist(),
                "errors": sorted(r.errors.points),
                "risk_on_round": repr(r.risk_on_round),
                "risk_on_underlying": repr(r.risk_on_underlying),
                "mixture_weights": [repr(w) for w in r.mixture_weights],
                "consistent": r.consistency.consistent,
            }
            for r in trace.rounds
        ],
    }


def trace_json_str(trace: BenchmarkTrace) -> str:
    return json.dumps(trace_to_json(trace), indent=2)
