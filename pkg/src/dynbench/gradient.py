"""Direct model updates driven by annotator feedback: hinge-loss descent
steps and exponential-loss (boosting-style) steps with the optimal step
size.  The finite domain makes the reweighting normalizer exact, which is
precisely what the population-level setting buys.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .core import DiscreteDistribution, FiniteDomain, Instance, condition, prob_of
from .errors import (
    Converged,
    DescentViolation,
    InvalidEpsilon,
    PerfectWeakLearner,
    StalledWeakLearner,
)
from .measures import risk_01
from .minimizers import MinimizerState, minimize

DEFAULT_HINGE_STEP = 0.05
NUMERIC_TOL = 1e-9


@dataclass(frozen=True)
class RealHypothesis:
    """Real-valued score vector; the prediction is its sign, sign(0) = +1."""

    domain: FiniteDomain
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (self.domain.size,):
            raise ValueError("value vector length does not match domain")
        if not np.all(np.isfinite(values)):
            raise ValueError("scores must be finite")
        values = np.ascontiguousarray(values)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def sign_labels(self) -> np.ndarray:
        return np.where(self.values >= 0, 1, -1).astype(np.int8)


def zero_hypothesis(domain: FiniteDomain) -> RealHypothesis:
    return RealHypothesis(domain, np.zeros(domain.size))


def sign_risk(h: RealHypothesis, P: DiscreteDistribution, inst: Instance) -> float:
    """Zero-one risk of the thresholded score."""
    disagree = h.sign_labels() != inst.truth.labels
    return float(P.mass[disagree].sum())


def hinge_risk(h: RealHypothesis, inst: Instance, P: DiscreteDistribution) -> float:
    if not inst.realizable:
        raise ValueError("hinge updates are defined for realizable instances")
    margins = h.values * inst.truth.labels
    return float((P.mass * np.maximum(1.0 - margins, 0.0)).sum())


def exp_risk(h: RealHypothesis, inst: Instance, P: DiscreteDistribution) -> float:
    margins = h.values * inst.truth.labels
    return float((P.mass * np.exp(-margins)).sum())


def margin_error_set(h: RealHypothesis, inst: Instance) -> frozenset[int]:
    """Points with margin below one; these trigger the hinge update."""
    margins = h.values * inst.truth.labels
    return frozenset(np.flatnonzero(margins < 1.0).tolist())


@dataclass(frozen=True)
class HingeStepRecord:
    step: int
    hinge_before: float
    hinge_after: float
    certificate: float  # weak-hypothesis alignment on the margin-error conditional


@dataclass(frozen=True)
class HingeState:
    hypothesis: RealHypothesis
    step_count: int = 0
    history: tuple[HingeStepRecord, ...] = ()


def hinge_state(inst: Instance) -> HingeState:
    return HingeState(zero_hypothesis(inst.domain))


def hinge_step(
    state: HingeState,
    inst: Instance,
    minimizer: MinimizerState,
    eta: float = DEFAULT_HINGE_STEP,
) -> HingeState:
    """One update h := h + eta * hinge_risk(h) * hbar, where hbar is the
    oracle's answer on the margin-error conditional.  Raises Converged when
    the margin-error set carries no mass."""
    if minimizer.spec.epsilon >= 0.5:
        raise InvalidEpsilon("hinge descent needs epsilon < 1/2")
    D = inst.underlying
    h = state.hypothesis
    errs = margin_error_set(h, inst)
    if prob_of(D, errs) == 0.0:
        raise Converged("margin-error set has zero mass")
    before = hinge_risk(h, inst, D)
    err_dist = condition(D, errs)
    hbar = minimize(minimizer, inst, err_dist)
    certificate = float(
        (hbar.labels.astype(np.float64) * inst.truth.labels * err_dist.mass).sum()
    )
    if certificate < 1.0 - 2.0 * minimizer.spec.epsilon - NUMERIC_TOL:
        raise DescentViolation(
            f"certificate {certificate:.9g} below {1.0 - 2.0 * minimizer.spec.epsilon:.9g}"
        )
    updated = RealHypothesis(
        inst.domain, h.values + eta * before * hbar.labels.astype(np.float64)
    )
    record = HingeStepRecord(
        step=state.step_count,
        hinge_before=before,
        hinge_after=hinge_risk(updated, inst, D),
        certificate=certificate,
    )
    return HingeState(updated, state.step_count + 1, state.history + (record,))


def run_hinge(
    inst: Instance,
    minimizer: MinimizerState,
    steps: int,
    eta: float = DEFAULT_HINGE_STEP,
) -> HingeState:
    """Run up to `steps` hinge updates from the zero score; a zero-mass
    margin-error set ends the run early."""
    state = hinge_state(inst)
    for _ in range(steps):
        try:
            state = hinge_step(state, inst, minimizer, eta)
        except Converged:
            break
    return state


# ---------------------------------------------------------------------------
# Exponential loss


@dataclass(frozen=True)
class BoostStepRecord:
    step: int
    weak: object                      # the weak hypothesis of this step
    eta: float
    weak_risk: float                  # weighted risk of the weak hypothesis
    normalizer: float                 # Z before the step
    exp_risk_after: float
    sign_risk_after: float


@dataclass(frozen=True)
class BoostState:
    hypothesis: RealHypothesis
    step_count: int = 0
    history: tuple[BoostStepRecord, ...] = ()
    exact: bool = False  # a weak learner with zero risk ended the run


def boost_state(inst: Instance) -> BoostState:
    return BoostState(zero_hypothesis(inst.domain))


def reweighted(inst: Instance, h: RealHypothesis) -> tuple[DiscreteDistribution, float]:
    """Exponentially reweighted distribution and its exact normalizer."""
    margins = h.values * inst.truth.labels
    unnorm = inst.underlying.mass * np.exp(-margins)
    Z = float(unnorm.sum())
    return DiscreteDistribution(inst.domain, unnorm / Z), Z


def boost_step(state: BoostState, inst: Instance, minimizer: MinimizerState) -> BoostState:
    """One exponential-loss step with the optimal step size
    eta = (1/2) log(1/r - 1) for weak risk r."""
    if minimizer.spec.epsilon >= 0.5:
        raise InvalidEpsilon("boosting needs epsilon < 1/2")
    if not inst.realizable:
        raise ValueError("boosting is defined for realizable instances")
    h = state.hypothesis
    weighted, Z = reweighted(inst, h)
    weak = minimize(minimizer, inst, weighted)
    r = risk_01(weak, weighted, inst)
    if r == 0.0:
        raise PerfectWeakLearner(weak)
    if r >= 0.5:
        raise StalledWeakLearner(f"weak risk {r:.6g} >= 1/2")
    eta = 0.5 * np.log(1.0 / r - 1.0)
    updated = RealHypothesis(
        inst.domain, h.values + eta * weak.labels.astype(np.float64)
    )
    record = BoostStepRecord(
        step=state.step_count,
        weak=weak,
        eta=float(eta),
        weak_risk=r,
        normalizer=Z,
        exp_risk_after=exp_risk(updated, inst, inst.underlying),
        sign_risk_after=sign_risk(updated, inst.underlying, inst),
    )
    return BoostState(updated, state.step_count + 1, state.history + (record,))


def boost_rate_bound(t: int, epsilon: float) -> float:
    return float(np.exp(-((1.0 - 2.0 * epsilon) ** 2) * t / 2.0))


def run_boost(inst: Instance, minimizer: MinimizerState, rounds: int) -> BoostState:
    """Run `rounds` exponential-loss steps, asserting the rate bound on the
    thresholded risk after every step.  A perfect weak learner ends the run
    with that learner as the exact classifier."""
    state = boost_state(inst)
    eps = minimizer.spec.epsilon
    for t in range(1, rounds + 1):
        try:
            state = boost_step(state, inst, minimizer)
        except PerfectWeakLearner as stop:
            exact = RealHypothesis(
                inst.domain, stop.hypothesis.labels.astype(np.float64)
            )
            record = BoostStepRecord(
                step=state.step_count,
                weak=stop.hypothesis,
                eta=float("inf"),
                weak_risk=0.0,
                normalizer=reweighted(inst, state.hypothesis)[1],
                exp_risk_after=exp_risk(exact, inst, inst.underlying),
                sign_risk_after=sign_risk(exact, inst.underlying, inst),
            )
            return BoostState(exact, state.step_count + 1, state.history + (record,), exact=True)
        achieved = state.history[-1].sign_risk_after
        bound = boost_rate_bound(t, eps)
        if achieved > bound + NUMERIC_TOL:
            raise AssertionError(
                f"rate bound failed at step {t}: risk {achieved:.9g} > {bound:.9g}"
            )
    return state


# ---------------------------------------------------------------------------
# Serialization

BOOST_CSV_HEADER = ["round", "zero_one_risk", "surrogate_risk", "eta", "weak_risk", "Z"]


def boost_csv_rows(state: BoostState) -> list[list[str]]:
    rows = []
    for rec in state.history:
        rows.append(
            [
                str(rec.step),
                repr(rec.sign_risk_after),
                repr(rec.exp_risk_after),
                repr(rec.eta),
                repr(rec.weak_risk),
                repr(rec.normalizer),
            ]
        )
    return rows


def boost_to_csv(state: BoostState) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BOOST_CSV_HEADER)
    writer.writerows(boost_csv_rows(state))
    return buf.getvalue()
