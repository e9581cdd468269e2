"""Recursive (hierarchical) dynamic benchmarking.

A depth-k node runs width-w steps whose model builder is a depth-(k-1)
node; depth 0 is a plain oracle call.  Distributions are uniform mixtures
over the flat atom list: the root's initial distribution followed by every
error distribution accumulated along the execution order visible to the
node.  A child inherits its parent's atoms at spawn time and extends the
list privately; inner atoms never leak to siblings.  This flattening is
what yields the 1/2, 1/3, 1/4, 1/5 weight pattern across the nine leaf
steps of the depth-2 width-3 layout.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .core import DiscreteDistribution, Instance, condition, mix, prob_of
from .measures import (
    ErrorSet,
    error_set,
    hdh_distance,
    majority,
    risk_01,
    uniform_vote,
    EnsembleVote,
)
from .minimizers import ConsistencyReport, MinimizerState, minimize, verify_eps_consistency

THM4_EPS3_COEFF = 543.0
THM4_SHIFT_COEFF = 300.0


@dataclass(frozen=True)
class HierConfig:
    """Depth-k width-w recursion.  Mixing is uniform over flat atoms by
    construction; the majority policy applies at every node."""

    depth: int = 2
    width: int = 3
    majority_weights: object = "uniform"

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.width < 2:
            raise ValueError("width must be >= 2")
        if self.majority_weights != "uniform":
            w = np.asarray(self.majority_weights, dtype=np.float64)
            if w.shape != (self.width,) or np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-12:
                raise ValueError("majority weights: one distribution entry per width slot")
            object.__setattr__(self, "majority_weights", tuple(w.tolist()))

    @property
    def annotator_rounds(self) -> int:
        """Total leaf oracle calls a full run makes."""
        return self.width**self.depth

    def node_vote(self, members) -> EnsembleVote:
        if self.majority_weights == "uniform":
            return uniform_vote(members)
        return EnsembleVote(tuple(members), np.asarray(self.majority_weights[: len(members)]))


@dataclass(frozen=True)
class LeafStep:
    path: tuple[int, ...]
    distribution: DiscreteDistribution
    classifier: object
    atom_count: int
    # ancestry of the training mixture: None marks the root's initial
    # distribution, a point set marks the error atom conditioned on it
    atom_events: tuple
    mixture_weights: tuple[float, ...]
    risk_on_step: float
    risk_on_underlying: float
    consistency: ConsistencyReport


@dataclass(frozen=True)
class HierNode:
    path: tuple[int, ...]
    depth: int
    children: tuple  # HierNode or LeafStep entries in execution order
    returned: object  # classifier returned by this node
    member_errors: tuple[ErrorSet, ...]
    early_success: bool = False


@dataclass(frozen=True)
class HierTrace:
    instance: Instance
    epsilon: float
    root: HierNode
    leaves: tuple[LeafStep, ...]  # execution order

    def leaf_count(self) -> int:
        return len(self.leaves)

    def top_members(self) -> list:
        """Classifiers returned by the root's direct children (g_0..g_{w-1})."""
        return [c.returned if isinstance(c, HierNode) else c.classifier for c in self.root.children]


def run_hier(inst: Instance, minimizer: MinimizerState, cfg: HierConfig) -> HierTrace:
    if not inst.realizable:
        raise ValueError("run_hier handles realizable instances")
    if cfg.depth > 2:
        warnings.warn(
            "depth > 2 is supported by the recursion but carries no proven bound",
            stacklevel=2,
        )
    D = inst.underlying
    leaves: list[LeafStep] = []

    def run_node(atoms, events, depth: int, path: tuple[int, ...]):
        weights = np.full(len(atoms), 1.0 / len(atoms))
        current = atoms[0] if len(atoms) == 1 else mix(atoms, weights)
        if depth == 0:
            h = minimize(minimizer, inst, current)
            _, report = verify_eps_consistency((current, h), inst, minimizer.spec.epsilon)
            step = LeafStep(
                path=path,
                distribution=current,
                classifier=h,
                atom_count=len(atoms),
                atom_events=tuple(events),
                mixture_weights=tuple(weights.tolist()),
                risk_on_step=report.achieved,
                risk_on_underlying=risk_01(h, D, inst),
                consistency=report,
            )
            leaves.append(step)
            return step

        local = list(atoms)
        local_events = list(events)
        children = []
        members = []
        errors = []
        for t in range(cfg.width):
            if t >= 1:
                errs = error_set(members[-1], inst)
                if prob_of(D, errs.points) == 0.0:
                    # Perfect member: nothing to condition on, node is done.
                    return HierNode(
                        path=path,
                        depth=depth,
                        children=tuple(children),
                        returned=members[-1],
                        member_errors=tuple(errors),
                        early_success=True,
                    )
                local.append(condition(D, errs.points))
                local_events.append(errs.points)
            child = run_node(local, local_events, depth - 1, path + (t,))
            children.append(child)
            h = child.returned if isinstance(child, HierNode) else child.classifier
            members.append(h)
            errors.append(error_set(h, inst))
        returned = majority(cfg.node_vote(members))
        return HierNode(
            path=path,
            depth=depth,
            children=tuple(children),
            returned=returned,
            member_errors=tuple(errors),
        )

    root = run_node([inst.initial], [None], cfg.depth, ())
    if isinstance(root, LeafStep):  # depth 0 is not constructible (depth >= 1)
        raise AssertionError("root cannot be a leaf")
    return HierTrace(
        instance=inst, epsilon=minimizer.spec.epsilon, root=root, leaves=tuple(leaves)
    )


def hier_final_risk(trace: HierTrace) -> float:
    return risk_01(trace.root.returned, trace.instance.underlying, trace.instance)


def thm4_bound(inst: Instance, epsilon: float) -> float:
    shift = hdh_distance(inst.initial, inst.underlying, inst.hclass)
    return THM4_EPS3_COEFF * epsilon**3 + THM4_SHIFT_COEFF * epsilon**2 * shift


def check_thm4_bound(inst: Instance, trace: HierTrace) -> bool:
    """Depth-2 width-3 uniform majority risk against 543 eps^3 + 300 eps^2
    shift.  The left side uses the root's three returned members."""
    if trace.root.depth != 2:
        raise ValueError("bound is stated for the depth-2 width-3 layout")
    if trace.root.early_success:
        lhs = hier_final_risk(trace)  # a perfect member ended the run
    else:
        members = trace.top_members()
        if len(members) != 3:
            raise ValueError("bound is stated for the depth-2 width-3 layout")
        lhs = risk_01(majority(uniform_vote(members)), inst.underlying, inst)
    return lhs <= thm4_bound(inst, trace.epsilon) + 1e-9


# ---------------------------------------------------------------------------
# Serialization

HIER_CSV_HEADER = ["node_path", "step", "risk_on_step", "risk_on_underlying"]


def hier_csv_rows(trace: HierTrace) -> list[list[str]]:
    rows = []
    for leaf in trace.leaves:
        node_path = "/".join(str(i) for i in leaf.path[:-1])
        rows.append(
            [node_path, str(leaf.path[-1]), repr(leaf.risk_on_step), repr(leaf.risk_on_underlying)]
        )
    return rows


def hier_to_csv(trace: HierTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HIER_CSV_HEADER)
    writer.writerows(hier_csv_rows(trace))
    return buf.getvalue()


def _node_to_json(node) -> dict:
    if isinstance(node, LeafStep):
        return {
            "leaf": True,
            "path": list(node.path),
            "classifier": node.classifier.labels.tolist(),
            "atom_count": node.atom_count,
            "atom_events": [None if e is None else sorted(e) for e in node.atom_events],
            "mixture_weights": [repr(w) for w in node.mixture_weights],
            "risk_on_step": repr(node.risk_on_step),
            "risk_on_underlying": repr(node.risk_on_underlying),
            "consistent": node.consistency.consistent,
        }
    return {
        "leaf": False,
        "path": list(node.path),
        "early_success": node.early_success,
        "returned": node.returned.labels.tolist(),
        "children": [_node_to_json(c) for c in node.children],
    }


def hier_to_json(trace: HierTrace) -> dict:
    return {"epsilon": trace.epsilon, "tree": _node_to_json(trace.root)}


def hier_json_str(trace: HierTrace) -> str:
    return json.dumps(hier_to_json(trace), indent=2)
