"""Finite domains, exact discrete distributions, label-vector hypotheses and
the instance bundle consumed by every engine.

All values are immutable after construction (numpy buffers are frozen), so
they can be shared freely across concurrent runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

import numpy as np

from .errors import NotEnumerable, WeightShapeError, ZeroMassEvent

MASS_TOL = 1e-12
COMPLETE_ENUM_CAP = 20  # 2^d hypotheses; brute-force oracles stay in seconds
INTERVAL_ENUM_CAP = 64


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FiniteDomain:
    """Finite domain of `size` points, identified with indices 0..size-1."""

    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"domain size must be >= 1, got {self.size}")

    def points(self) -> range:
        return range(self.size)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Exact probability vector over a finite domain."""

    domain: FiniteDomain
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=np.float64)
        if mass.shape != (self.domain.size,):
            raise ValueError(
                f"mass vector has shape {mass.shape}, domain size {self.domain.size}"
            )
        if np.any(mass < 0):
            raise ValueError("negative probability mass")
        total = float(mass.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"mass sums to {total!r}, not 1 within {MASS_TOL}")
        object.__setattr__(self, "mass", _frozen(mass))

    def support(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.mass > 0).tolist())

    def __getitem__(self, x: int) -> float:
        return float(self.mass[x])

    def allclose(self, other: "DiscreteDistribution", tol: float = MASS_TOL) -> bool:
        return self.domain == other.domain and bool(
            np.all(np.abs(self.mass - other.mass) <= tol)
        )


@dataclass(frozen=True)
class Hypothesis:
    """A +-1 label vector over the domain."""

    domain: FiniteDomain
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8)
        if labels.shape != (self.domain.size,):
            raise ValueError("label vector length does not match domain")
        if not np.all(np.abs(labels) == 1):
            raise ValueError("labels must be exactly -1 or +1")
        object.__setattr__(self, "labels", _frozen(labels))

    def __call__(self, x: int) -> int:
        return int(self.labels[x])

    def flip(self, points: Iterable[int]) -> "Hypothesis":
        """Return a copy with the labels at `points` negated."""
        labels = np.array(self.labels, dtype=np.int8)
        idx = list(points)
        labels[idx] = -labels[idx]
        return Hypothesis(self.domain, labels)

    def key(self) -> bytes:
        return self.labels.tobytes()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Hypothesis)
            and self.domain == other.domain
            and np.array_equal(self.labels, other.labels)
        )

    def __hash__(self) -> int:
        return hash((self.domain, self.key()))


def constant_hypothesis(domain: FiniteDomain, sign: int = 1) -> Hypothesis:
    return Hypothesis(domain, np.full(domain.size, sign, dtype=np.int8))


def _run_count(flipped: np.ndarray) -> int:
    """Number of maximal contiguous blocks of True in a boolean vector."""
    if not flipped.any():
        return 0
    starts = np.flatnonzero(np.diff(np.concatenate(([False], flipped)).astype(np.int8)) == 1)
    return len(starts)


class HypothesisClass:
    """Base class; concrete kinds below.

    Enumeration caps keep brute-force oracles cheap: 2^d <= 2^20 for the
    complete class, d <= 64 for the interval classes.
    """

    kind: str = "abstract"

    def __init__(self, domain: FiniteDomain):
        self.domain = domain

    def contains(self, h: Hypothesis) -> bool:
        raise NotImplementedError

    def is_enumerable(self) -> bool:
        raise NotImplementedError

    def __iter__(self) -> Iterator[Hypothesis]:
        raise NotImplementedError

    def __len__(self) -> int:
        raise NotImplementedError


class ExplicitClass(HypothesisClass):
    kind = "explicit"

    def __init__(self, members: Iterable[Hypothesis]):
        members = list(members)
        if not members:
            raise ValueError("explicit class must be non-empty")
        domain = members[0].domain
        seen = set()
        unique = []
        for h in members:
            if h.domain != domain:
                raise ValueError("explicit class members share one domain")
            if h.key() in seen:
                raise ValueError("explicit class members must be duplicate-free")
            seen.add(h.key())
            unique.append(h)
        super().__init__(domain)
        self.members = tuple(unique)
        self._keys = seen

    def contains(self, h: Hypothesis) -> bool:
        return h.domain == self.domain and h.key() in self._keys

    def is_enumerable(self) -> bool:
        return True

    def __iter__(self) -> Iterator[Hypothesis]:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)


class CompleteClass(HypothesisClass):
    """All 2^d labelings.  Enumeration order: member index i maps bit j of i
    to point j, with 0 -> +1 and 1 -> -1, so index 0 is the all-ones
    hypothesis and "lowest index" ties prefer +1 labels."""

    kind = "complete"

    def contains(self, h: Hypothesis) -> bool:
        return h.domain == self.domain

    def is_enumerable(self) -> bool:
        return self.domain.size <= COMPLETE_ENUM_CAP

    def __iter__(self) -> Iterator[Hypothesis]:
        d = self.domain.size
        if not self.is_enumerable():
            raise NotEnumerable(f"complete class over d={d} exceeds cap {COMPLETE_ENUM_CAP}")
        for i in range(2**d):
            labels = np.fromiter(
                (1 if (i >> j) & 1 == 0 else -1 for j in range(d)), dtype=np.int8, count=d
            )
            yield Hypothesis(self.domain, labels)

    def __len__(self) -> int:
        if not self.is_enumerable():
            raise NotEnumerable("complete class too large to count members explicitly")
        return 2**self.domain.size


class IntervalClass(HypothesisClass):
    """Hypotheses differing from a base labeling on a union of at most
    `max_intervals` contiguous index intervals.

    With the domain embedded on the index line this is the two-intervals
    class (VC dimension <= 4) for max_intervals=2 and the three-intervals
    class (VC dimension <= 6) for max_intervals=3.
    """

    def __init__(self, domain: FiniteDomain, max_intervals: int, base: Optional[Hypothesis] = None):
        super().__init__(domain)
        if max_intervals < 1:
            raise ValueError("max_intervals must be >= 1")
        self.max_intervals = max_intervals
        self.base = base if base is not None else constant_hypothesis(domain, 1)
        if self.base.domain != domain:
            raise ValueError("base hypothesis domain mismatch")
        self.kind = {2: "two_intervals", 3: "three_intervals"}.get(
            max_intervals, f"{max_intervals}_intervals"
        )

    def contains(self, h: Hypothesis) -> bool:
        if h.domain != self.domain:
            return False
        flipped = h.labels != self.base.labels
        return _run_count(flipped) <= self.max_intervals

    def is_enumerable(self) -> bool:
        return self.domain.size <= INTERVAL_ENUM_CAP

    def _flip_sets(self) -> Iterator[tuple[tuple[int, int], ...]]:
        """Yield tuples of disjoint, non-adjacent half-open intervals."""
        d = self.domain.size
        yield ()
        singles = [(a, b) for a in range(d) for b in range(a + 1, d + 1)]

        def extend(prev: tuple[tuple[int, int], ...], depth: int) -> Iterator:
            for a, b in singles:
                if prev and a <= prev[-1][1]:  # adjacent blocks merge into one run
                    continue
                cur = prev + ((a, b),)
                yield cur
                if depth > 1:
                    yield from extend(cur, depth - 1)

        yield from extend((), self.max_intervals)

    def __iter__(self) -> Iterator[Hypothesis]:
        if not self.is_enumerable():
            raise NotEnumerable(
                f"interval class over d={self.domain.size} exceeds cap {INTERVAL_ENUM_CAP}"
            )
        for blocks in self._flip_sets():
            points = [x for a, b in blocks for x in range(a, b)]
            yield self.base.flip(points)

    def __len__(self) -> int:
        return sum(1 for _ in self._flip_sets())


def two_intervals_class(domain: FiniteDomain, base: Optional[Hypothesis] = None) -> IntervalClass:
    return IntervalClass(domain, 2, base)


def three_intervals_class(domain: FiniteDomain, base: Optional[Hypothesis] = None) -> IntervalClass:
    return IntervalClass(domain, 3, base)


@dataclass(frozen=True)
class Instance:
    """Bundle of domain, underlying and initial distributions, true labels,
    hypothesis class, and the optional randomly-labelled subset."""

    domain: FiniteDomain
    underlying: DiscreteDistribution
    initial: DiscreteDistribution
    truth: Hypothesis
    hclass: HypothesisClass
    noisy_set: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "noisy_set", frozenset(self.noisy_set))
        for obj in (self.underlying, self.initial, self.truth, self.hclass):
            if obj.domain != self.domain:
                raise ValueError("instance parts must share one domain")
        if not self.initial.support() <= self.underlying.support():
            raise ValueError("initial distribution support must lie inside the underlying support")
        if self.noisy_set and not all(0 <= x < self.domain.size for x in self.noisy_set):
            raise ValueError("noisy set contains out-of-domain points")
        delta = prob_of(self.underlying, self.noisy_set)
        if not 0.0 <= delta < 1.0:
            raise ValueError(f"noisy mass delta={delta} must satisfy 0 <= delta < 1")
        if self.realizable and not self.hclass.contains(self.truth):
            raise ValueError("realizable instance requires the true classifier in the class")

    @property
    def realizable(self) -> bool:
        return not self.noisy_set

    @property
    def delta(self) -> float:
        """Underlying mass of the randomly labelled subset."""
        return prob_of(self.underlying, self.noisy_set)

    def noisy_mask(self) -> np.ndarray:
        mask = np.zeros(self.domain.size, dtype=bool)
        if self.noisy_set:
            mask[list(self.noisy_set)] = True
        return mask


# ---------------------------------------------------------------------------
# Operations


def uniform(domain: FiniteDomain) -> DiscreteDistribution:
    return DiscreteDistribution(domain, np.full(domain.size, 1.0 / domain.size))


def mix(
    components: list[DiscreteDistribution], weights: Iterable[float]
) -> DiscreteDistribution:
    """Mixture with the given weights; renormalized to absorb float drift."""
    weights = np.asarray(list(weights), dtype=np.float64)
    if not components:
        raise ValueError("mixture needs at least one component")
    domain = components[0].domain
    if any(c.domain != domain for c in components):
        raise ValueError("mixture components must share one domain")
    if len(weights) != len(components):
        raise WeightShapeError(f"{len(components)} components but {len(weights)} weights")
    if np.any(weights < 0):
        raise ValueError("mixture weights must be non-negative")
    total = float(weights.sum())
    if abs(total - 1.0) > MASS_TOL:
        raise ValueError(f"mixture weights sum to {total!r}, not 1 within {MASS_TOL}")
    mass = np.zeros(domain.size)
    for c, w in zip(components, weights):
        mass += w * c.mass
    return DiscreteDistribution(domain, mass / mass.sum())


def condition(P: DiscreteDistribution, event: Iterable[int]) -> DiscreteDistribution:
    """P restricted to `event` and renormalized."""
    event = frozenset(event)
    total = prob_of(P, event)
    if total <= 0.0:
        raise ZeroMassEvent(
            "cannot condition on a zero-mass event; "
            "the classifier has no errors to sample"
        )
    mass = np.zeros(P.domain.size)
    idx = list(event)
    mass[idx] = P.mass[idx]
    return DiscreteDistribution(P.domain, mass / mass.sum())


def prob_of(P: DiscreteDistribution, event: Iterable[int]) -> float:
    # Ascending-index summation keeps this bit-identical with mask-based
    # risk sums over the same point set.
    idx = sorted(frozenset(event))
    if not idx:
        return 0.0
    return float(P.mass[idx].sum())


def enumerate_class(hclass: HypothesisClass) -> Iterator[Hypothesis]:
    """Yield each member exactly once; raises NotEnumerable beyond caps."""
    if not hclass.is_enumerable():
        raise NotEnumerable(f"{hclass.kind} class is not enumerable at this size")
    return iter(hclass)


# ---------------------------------------------------------------------------
# JSON serialization.  Masses travel as exact decimal strings (repr of the
# float round-trips bit-for-bit).


def _mass_to_json(P: DiscreteDistribution) -> list[str]:
    return [repr(float(v)) for v in P.mass]


def _mass_from_json(domain: FiniteDomain, values: list) -> DiscreteDistribution:
    return DiscreteDistribution(domain, np.array([float(v) for v in values]))


def class_to_json(hclass: HypothesisClass) -> dict:
    if isinstance(hclass, ExplicitClass):
        return {"kind": "explicit", "members": [h.labels.tolist() for h in hclass.members]}
    if isinstance(hclass, CompleteClass):
        return {"kind": "complete"}
    if isinstance(hclass, IntervalClass):
        return {
            "kind": "intervals",
            "max_intervals": hclass.max_intervals,
            "base": hclass.base.labels.tolist(),
        }
    raise ValueError(f"cannot serialize class kind {hclass.kind}")


def class_from_json(domain: FiniteDomain, doc: dict) -> HypothesisClass:
    kind = doc["kind"]
    if kind == "explicit":
        return ExplicitClass([Hypothesis(domain, np.array(m)) for m in doc["members"]])
    if kind == "complete":
        return CompleteClass(domain)
    if kind == "intervals":
        base = Hypothesis(domain, np.array(doc["base"])) if "base" in doc else None
        return IntervalClass(domain, doc["max_intervals"], base)
    if kind == "two_intervals":
        return two_intervals_class(domain)
    if kind == "three_intervals":
        return three_intervals_class(domain)
    raise ValueError(f"unknown class kind {kind!r}")


def instance_to_json(inst: Instance) -> dict:
    return {
        "d": inst.domain.size,
        "D": _mass_to_json(inst.underlying),
        "D0": _mass_to_json(inst.initial),
        "f": inst.truth.labels.tolist(),
        "class": class_to_json(inst.hclass),
        "noisy_set": sorted(inst.noisy_set),
    }


def instance_from_json(doc: dict) -> Instance:
    domain = FiniteDomain(int(doc["d"]))
    return Instance(
        domain=domain,
        underlying=_mass_from_json(domain, doc["D"]),
        initial=_mass_from_json(domain, doc["D0"]),
        truth=Hypothesis(domain, np.array(doc["f"])),
        hclass=class_from_json(domain, doc["class"]),
        noisy_set=frozenset(int(x) for x in doc.get("noisy_set", [])),
    )


def dump_instance(inst: Instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_json(inst), fh, indent=2)


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_json(json.load(fh))
