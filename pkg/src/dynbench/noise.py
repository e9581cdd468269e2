"""Path dynamics on partially random-labelled instances.

Labels on the noisy subset are never sampled: every quantity uses the
analytic one-half factor, so runs are exact and zero-variance.  The error
distribution of each round is assembled from the proof-form mixture of the
noisy conditional and the realizable-error conditional, and the per-round
noisy mass is checked against the closed-form concentration bound.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DiscreteDistribution, Instance, condition, mix, prob_of
from .errors import DeltaNotDominant
from .measures import error_set, risk_01
from .minimizers import ConsistencyReport, MinimizerState, minimize, verify_eps_consistency


@dataclass(frozen=True)
class NoisyRound:
    t: int
    distribution: DiscreteDistribution
    classifier: object
    delta_t: float                    # round mass of the noisy subset
    realizable_risk: float            # risk on the round's realizable conditional
    noisy_risk: float                 # always delta_t / 2
    noisy_weight: float               # noisy component weight inside the error mixture
    error_dist: Optional[DiscreteDistribution]  # None on a terminal perfect round
    consistency: ConsistencyReport


@dataclass(frozen=True)
class NoisyTrace:
    instance: Instance
    epsilon: float
    delta: float
    rounds: tuple[NoisyRound, ...]
    bounds_checked: bool


def delta_lower_bound(t: int, epsilon: float, delta: float) -> float:
    """Closed-form floor on the noisy mass after t >= 1 rounds."""
    if t < 1:
        raise ValueError("bound is stated for t >= 1")
    return 1.0 / (2.0 * (1.0 + 8.0 * (epsilon / delta) * t))


def delta_first_round_bound(epsilon: float, delta: float) -> float:
    """Floor on the noisy mass after the first mixing step."""
    return delta / 2.0 + 0.5 / (1.0 + 2.0 * epsilon / delta)


def run_noisy_path(inst: Instance, minimizer: MinimizerState, rounds: int) -> NoisyTrace:
    """Uniform-mixture path run with the half-risk rule on the noisy subset.

    With an empty noisy subset this reduces to the realizable path engine,
    trace for trace.  When delta <= epsilon the run proceeds but the
    concentration bound is not meaningful; a warning flags it.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    delta = inst.delta
    eps = minimizer.spec.epsilon
    bounds_checked = True
    if inst.noisy_set and delta <= eps:
        warnings.warn(
            f"noisy mass delta={delta:.6g} does not dominate epsilon={eps:.6g}; "
            "concentration bound checks are skipped",
            DeltaNotDominant,
            stacklevel=2,
        )
        bounds_checked = False

    D = inst.underlying
    noisy = inst.noisy_mask()
    noisy_points = frozenset(np.flatnonzero(noisy).tolist())
    realizable_points = frozenset(np.flatnonzero(~noisy).tolist())
    current = inst.initial
    atoms: list[DiscreteDistribution] = []
    out: list[NoisyRound] = []

    for t in range(rounds):
        h = minimize(minimizer, inst, current)
        _, report = verify_eps_consistency((current, h), inst, eps)
        delta_t = float(current.mass[noisy].sum())
        err = error_set(h, inst)  # realizable part only
        realizable_mass = float(current.mass[~noisy].sum())
        if realizable_mass > 0.0:
            r_real = float(current.mass[list(err.points)].sum()) / realizable_mass if err.points else 0.0
        else:
            r_real = 0.0

        # Error mixture per the proof form: the noisy side carries half the
        # underlying noisy mass, the realizable side the true error mass.
        r_under = prob_of(condition(D, realizable_points), err.points) if err.points else 0.0
        num_noisy = delta / 2.0
        num_real = (1.0 - delta) * r_under
        denom = num_noisy + num_real
        if denom == 0.0:
            # No noisy set and a perfect classifier: benchmark succeeded.
            out.append(
                NoisyRound(t, current, h, delta_t, r_real, delta_t / 2.0, 0.0, None, report)
            )
            break
        noisy_weight = num_noisy / denom
        parts, weights = [], []
        if num_noisy > 0.0:
            parts.append(condition(D, noisy_points))
            weights.append(noisy_weight)
        if num_real > 0.0:
            parts.append(condition(D, err.points))
            weights.append(num_real / denom)
        # A lone component passes through unmixed, keeping the empty-noisy
        # case bit-identical to the realizable path engine.
        error_dist = parts[0] if len(parts) == 1 else mix(parts, weights)

        out.append(
            NoisyRound(
                t, current, h, delta_t, r_real, delta_t / 2.0, noisy_weight, error_dist, report
            )
        )
        atoms.append(error_dist)
        if t + 1 < rounds:
            n = len(atoms) + 1
            current = mix([inst.initial] + atoms, np.full(n, 1.0 / n))

    return NoisyTrace(inst, eps, delta, tuple(out), bounds_checked)


def check_concentration(trace: NoisyTrace, tol: float = 1e-9) -> bool:
    """Every simulated round mass must clear the closed-form floor; the
    first mixing step additionally clears its sharper bound."""
    if not trace.bounds_checked:
        return True
    eps, delta = trace.epsilon, trace.delta
    for r in trace.rounds[1:]:
        if r.delta_t < delta_lower_bound(r.t, eps, delta) - tol:
            return False
    if len(trace.rounds) > 1:
        if trace.rounds[1].delta_t < delta_first_round_bound(eps, delta) - tol:
            return False
    return True


# ---------------------------------------------------------------------------
# Serialization

NOISY_CSV_HEADER = [
    "run_id",
    "round",
    "risk_ht_on_Dt",
    "risk_ht_on_D",
    "delta_t",
    "bound_t",
    "noisy_weight",
]


def noisy_csv_rows(trace: NoisyTrace, run_id: int = 0) -> list[list[str]]:
    rows = []
    for r in trace.rounds:
        bound = (
            repr(delta_lower_bound(r.t, trace.epsilon, trace.delta))
            if r.t >= 1 and trace.delta > 0
            else ""
        )
        rows.append(
            [
                str(run_id),
                str(r.t),
                repr(r.consistency.achieved),
                repr(risk_01(r.classifier, trace.instance.underlying, trace.instance)),
                repr(r.delta_t),
                bound,
                repr(r.noisy_weight),
            ]
        )
    return rows


def noisy_to_csv(trace: NoisyTrace, run_id: int = 0) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(NOISY_CSV_HEADER)
    writer.writerows(noisy_csv_rows(trace, run_id))
    return buf.getvalue()


def noisy_to_json(trace: NoisyTrace) -> dict:
    return {
        "epsilon": trace.epsilon,
        "delta": trace.delta,
        "bounds_checked": trace.bounds_checked,
        "rounds": [
            {
                "t": r.t,
                "delta_t": repr(r.delta_t),
                "realizable_risk": repr(r.realizable_risk),
                "noisy_risk": repr(r.noisy_risk),
                "noisy_weight": repr(r.noisy_weight),
                "classifier": r.classifier.labels.tolist(),
                "consistent": r.consistency.consistent,
            }
            for r in trace.rounds
        ],
    }


def noisy_json_str(trace: NoisyTrace) -> str:
    return json.dumps(noisy_to_json(trace), indent=2)
