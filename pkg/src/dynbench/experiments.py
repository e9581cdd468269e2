"""Rollout orchestration, the round-pair similarity score, and summary
statistics.  Rollouts share one instance; all variation comes from the
minimizer seed, which is derived as base seed + rollout index.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import (
    CompleteClass,
    DiscreteDistribution,
    FiniteDomain,
    Hypothesis,
    Instance,
    constant_hypothesis,
    instance_from_json,
    prob_of,
    three_intervals_class,
    two_intervals_class,
    uniform,
)
from .errors import ConfigError, DegenerateVariance, UndefinedZScore
from .gradient import run_boost
from .hier_engine import HierConfig, hier_final_risk, run_hier
from .measures import error_set, majority, risk_01, uniform_vote
from .minimizers import MinimizerSpec, make_state
from .noise import run_noisy_path
from .path_engine import BenchmarkTrace, PathConfig, run_path
from .witnesses import build_path_witness


def pearson(xs, ys) -> float:
    """Sample correlation coefficient."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.size < 2:
        raise ValueError("need two equal-length sequences of size >= 2")
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    sx = float(np.sqrt((xc**2).sum()))
    sy = float(np.sqrt((yc**2).sum()))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateVariance("zero variance in a correlation input")
    return float((xc * yc).sum() / (sx * sy))


def z_score(trace: BenchmarkTrace, T: int) -> float:
    """Average over ordered round pairs t1 != t2 < T of the fraction of the
    pair's joint error mass that the full-trace majority also gets wrong.

    Set sizes are underlying-probability masses.  Pairs whose joint error
    carries no mass are excluded; when every pair is excluded the score
    does not exist.
    """
    if len(trace.rounds) < T:
        raise ValueError(f"trace has {len(trace.rounds)} rounds, need {T}")
    if T < 2:
        raise ValueError("score needs at least two rounds")
    inst = trace.instance
    D = inst.underlying
    members = trace.classifiers()
    maj_errors = error_set(majority(uniform_vote(members)), inst).points
    errors = [error_set(h, inst).points for h in members[:T]]

    values = []
    for t1 in range(T):
        for t2 in range(T):
            if t1 == t2:
                continue
            joint = errors[t1] & errors[t2]
            denom = prob_of(D, joint)
            if denom == 0.0:
                continue
            values.append(prob_of(D, joint & maj_errors) / denom)
    if not values:
        raise UndefinedZScore("every round pair has a zero-mass joint error")
    return sum(values) / len(values)


# ---------------------------------------------------------------------------
# Instance generation


def generate_instance(
    d: int,
    class_kind: str = "complete",
    underlying: str = "uniform",
    initial: str = "same",
    seed: int = 0,
    noisy_count: int = 0,
) -> Instance:
    """Seeded synthetic instance.

    underlying / initial: "uniform" or "random" (Dirichlet); initial may be
    "same" to copy the underlying distribution.  The truth is a random
    labelling for the complete class and the all-ones base for interval
    classes (membership is required when realizable).
    """
    rng = np.random.default_rng(seed)
    domain = FiniteDomain(d)

    def draw(shape: str) -> DiscreteDistribution:
        if shape == "uniform":
            return uniform(domain)
        if shape == "random":
            return DiscreteDistribution(domain, rng.dirichlet(np.ones(d)))
        raise ConfigError(f"unknown distribution shape {shape!r}")

    D = draw(underlying)
    D0 = D if initial == "same" else draw(initial)
    if class_kind == "complete":
        hclass = CompleteClass(domain)
        labels = rng.choice(np.array([-1, 1], dtype=np.int8), size=d)
        truth = Hypothesis(domain, labels)
    elif class_kind == "two_intervals":
        truth = constant_hypothesis(domain, 1)
        hclass = two_intervals_class(domain, truth)
    elif class_kind == "three_intervals":
        truth = constant_hypothesis(domain, 1)
        hclass = three_intervals_class(domain, truth)
    else:
        raise ConfigError(f"unknown class kind {class_kind!r}")

    noisy = frozenset()
    if noisy_count:
        noisy = frozenset(rng.choice(d, size=noisy_count, replace=False).tolist())
    return Instance(domain, D, D0, truth, hclass, noisy)


# ---------------------------------------------------------------------------
# Rollouts


@dataclass(frozen=True)
class ExperimentConfig:
    instance: Instance
    minimizer: MinimizerSpec
    design: dict
    rollouts: int
    base_seed: int
    z_round: int = 4  # early round at which similarity is measured

    def __post_init__(self):
        if self.rollouts < 1:
            raise ConfigError("rollout count must be >= 1")
        if self.base_seed is None:
            raise ConfigError("an explicit base seed is required")
        kind = self.design.get("kind")
        if kind not in ("path", "hier", "noisy", "boost", "witness"):
            raise ConfigError(f"unknown design kind {kind!r}")


@dataclass(frozen=True)
class RolloutRecord:
    index: int
    seed: int
    final_risk: float
    series: tuple[float, ...]
    z: Optional[float]
    perfect_round: Optional[int]


@dataclass(frozen=True)
class RolloutSummary:
    config: ExperimentConfig
    records: tuple[RolloutRecord, ...]
    mean_series: tuple[float, ...]
    std_series: tuple[float, ...]
    pearson_z_final: Optional[float]


def _pad(series: list[float], length: int) -> list[float]:
    # A finished run keeps its last majority; the series stays flat.
    if not series:
        return [0.0] * length
    return series + [series[-1]] * (length - len(series))


def _one_rollout(cfg: ExperimentConfig, idx: int) -> RolloutRecord:
    seed = cfg.base_seed + idx
    spec = replace(cfg.minimizer, seed=seed)
    design = cfg.design
    kind = design["kind"]
    inst = cfg.instance

    if kind in ("path", "witness"):
        if kind == "witness":
            witness = build_path_witness(
                design["epsilon"],
                design.get("rounds", round(2.0 / design["epsilon"])),
                mixture_weights=design.get("mixture_weights", "uniform"),
            )
            inst = witness.instance
            spec = witness.minimizer_spec
            pcfg = witness.config
        else:
            pcfg = PathConfig(
                rounds=design["rounds"],
                mixture_weights=design.get("mixture_weights", "uniform"),
                majority_weights=design.get("majority_weights", "uniform"),
            )
        trace = run_path(inst, make_state(spec), pcfg)
        series = _pad(list(trace.majority_risks), pcfg.rounds)
        try:
            z = z_score(trace, min(cfg.z_round, len(trace.rounds)))
        except (UndefinedZScore, ValueError):
            z = None
        return RolloutRecord(idx, seed, series[-1], tuple(series), z, trace.perfect_round)

    if kind == "hier":
        hcfg = HierConfig(depth=design.get("depth", 2), width=design.get("width", 3))
        trace = run_hier(inst, make_state(spec), hcfg)
        series = [leaf.risk_on_underlying for leaf in trace.leaves]
        series = _pad(series, hcfg.annotator_rounds)
        return RolloutRecord(idx, seed, hier_final_risk(trace), tuple(series), None, None)

    if kind == "noisy":
        trace = run_noisy_path(inst, make_state(spec), design["rounds"])
        series = _pad([r.delta_t for r in trace.rounds], design["rounds"])
        final = risk_01(trace.rounds[-1].classifier, inst.underlying, inst)
        return RolloutRecord(idx, seed, final, tuple(series), None, None)

    if kind == "boost":
        state = run_boost(inst, make_state(spec), design["rounds"])
        series = _pad([rec.sign_risk_after for rec in state.history], design["rounds"])
        return RolloutRecord(idx, seed, series[-1], tuple(series), None, None)

    raise ConfigError(f"unknown design kind {kind!r}")


def run_rollouts(cfg: ExperimentConfig) -> RolloutSummary:
    records = [_one_rollout(cfg, i) for i in range(cfg.rollouts)]
    matrix = np.array([r.series for r in records], dtype=np.float64)
    mean_series = matrix.mean(axis=0)
    std_series = matrix.std(axis=0)

    defined = [(r.z, r.final_risk) for r in records if r.z is not None]
    r_value: Optional[float] = None
    if len(defined) >= 2:
        zs, finals = zip(*defined)
        try:
            r_value = pearson(zs, finals)
        except DegenerateVariance:
            r_value = None
    return RolloutSummary(
        config=cfg,
        records=tuple(records),
        mean_series=tuple(mean_series.tolist()),
        std_series=tuple(std_series.tolist()),
        pearson_z_final=r_value,
    )


# ---------------------------------------------------------------------------
# Config JSON

CONFIG_KEYS = {"instance", "generator", "minimizer", "design", "rollouts", "seed", "z_round"}


def config_from_json(doc: dict) -> ExperimentConfig:
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    try:
        if "instance" in doc:
            inst = instance_from_json(doc["instance"])
        elif "generator" in doc:
            inst = generate_instance(**doc["generator"])
        elif doc.get("design", {}).get("kind") == "witness":
            inst = build_path_witness(
                doc["design"]["epsilon"],
                doc["design"].get("rounds", round(2.0 / doc["design"]["epsilon"])),
            ).instance
        else:
            raise ConfigError("config needs an instance or generator section")
        domain = inst.domain
        minimizer = MinimizerSpec.from_json(doc.get("minimizer", {"mode": "perfect"}), domain)
        return ExperimentConfig(
            instance=inst,
            minimizer=minimizer,
            design=doc["design"],
            rollouts=int(doc.get("rollouts", 1)),
            base_seed=int(doc["seed"]),
            z_round=int(doc.get("z_round", 4)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed config: {exc}") from exc


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return config_from_json(json.load(fh))


# ---------------------------------------------------------------------------
# Serialization

ROLLOUT_CSV_HEADER = ["rollout", "seed", "final_risk", "z", "perfect_round"]
ROUNDS_CSV_HEADER = ["round", "mean_risk", "std_risk"]


def summary_rollout_csv(summary: RolloutSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ROLLOUT_CSV_HEADER)
    for r in summary.records:
        writer.writerow(
            [
                str(r.index),
                str(r.seed),
                repr(r.final_risk),
                "" if r.z is None else repr(r.z),
                "" if r.perfect_round is None else str(r.perfect_round),
            ]
        )
    return buf.getvalue()


def summary_rounds_csv(summary: RolloutSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ROUNDS_CSV_HEADER)
    for t, (m, s) in enumerate(zip(summary.mean_series, summary.std_series)):
        writer.writerow([str(t), repr(m), repr(s)])
    return buf.getvalue()


def summary_to_json(summary: RolloutSummary) -> dict:
    return {
        "design": summary.config.design,
        "rollouts": summary.config.rollouts,
        "seed": summary.config.base_seed,
        "z_round": summary.config.z_round,
        "pearson_z_final": summary.pearson_z_final,
        "mean_series": [repr(v) for v in summary.mean_series],
        "std_series": [repr(v) for v in summary.std_series],
        "records": [
            {
                "rollout": r.index,
                "seed": r.seed,
                "final_risk": repr(r.final_risk),
                "z": None if r.z is None else repr(r.z),
                "perfect_round": r.perfect_round,
                "series": [repr(v) for v in r.series],
            }
            for r in summary.records
        ],
    }
