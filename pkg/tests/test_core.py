import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dynbench.core import (
    CompleteClass,
    DiscreteDistribution,
    ExplicitClass,
    FiniteDomain,
    Hypothesis,
    Instance,
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
from dynbench.errors import NotEnumerable, WeightShapeError, ZeroMassEvent


def test_uniform_equal_split():
    P = uniform(FiniteDomain(4))
    assert np.allclose(P.mass, [0.25, 0.25, 0.25, 0.25])


def test_uniform_degenerate_domain():
    assert uniform(FiniteDomain(1)).mass.tolist() == [1.0]


def test_uniform_large_domain():
    # each point carries 1/d
    P = uniform(FiniteDomain(800))
    assert np.all(P.mass == 1.0 / 800)
    assert P[13] == 0.00125


def test_domain_rejects_empty():
    with pytest.raises(ValueError):
        FiniteDomain(0)


def test_distribution_invariants():
    dom = FiniteDomain(3)
    with pytest.raises(ValueError):
        DiscreteDistribution(dom, np.array([0.5, 0.6, 0.1]))
    with pytest.raises(ValueError):
        DiscreteDistribution(dom, np.array([-0.1, 0.6, 0.5]))
    P = DiscreteDistribution(dom, np.array([0.5, 0.5, 0.0]))
    assert P.support() == {0, 1}


def test_mix_idempotent_on_identical_components():
    P = DiscreteDistribution(FiniteDomain(2), np.array([0.3, 0.7]))
    assert mix([P, P], [0.5, 0.5]).allclose(P)


def test_mix_symmetry():
    dom = FiniteDomain(2)
    a = DiscreteDistribution(dom, np.array([1.0, 0.0]))
    b = DiscreteDistribution(dom, np.array([0.0, 1.0]))
    assert mix([a, b], [0.5, 0.5]).mass.tolist() == [0.5, 0.5]


def test_mix_uniform_weight_pattern():
    # The per-round uniform pattern 1/2, 1/3, 1/4: with four components each
    # contributes exactly a quarter.
    dom = FiniteDomain(4)
    parts = [condition(uniform(dom), {i}) for i in range(4)]
    out = mix(parts, [0.25] * 4)
    assert np.allclose(out.mass, 0.25)
    two = mix(parts[:2], [0.5, 0.5])
    three = mix(parts[:3], [1 / 3] * 3)
    assert np.allclose(two.mass[:2], 0.5)
    assert np.allclose(three.mass[:3], 1 / 3)


def test_mix_errors():
    a = uniform(FiniteDomain(2))
    b = uniform(FiniteDomain(3))
    with pytest.raises(ValueError):
        mix([a, b], [0.5, 0.5])
    with pytest.raises(ValueError):
        mix([a, a], [0.6, 0.6])
    with pytest.raises(WeightShapeError):
        mix([a, a], [1.0])


def test_condition_renormalizes():
    P = uniform(FiniteDomain(4))
    out = condition(P, {0, 1})
    assert out.mass.tolist() == [0.5, 0.5, 0.0, 0.0]


def test_condition_point_mass():
    P = DiscreteDistribution(FiniteDomain(2), np.array([0.2, 0.8]))
    assert condition(P, {1}).mass.tolist() == [0.0, 1.0]


def test_condition_empty_event():
    with pytest.raises(ZeroMassEvent):
        condition(uniform(FiniteDomain(4)), set())


def test_prob_of_basics():
    P = uniform(FiniteDomain(8))
    assert prob_of(P, {0, 5}) == 0.25
    assert prob_of(P, range(8)) == pytest.approx(1.0, abs=1e-12)
    assert prob_of(P, set()) == 0.0


@st.composite
def dist_and_events(draw):
    d = draw(st.integers(min_value=1, max_value=8))
    raw = draw(
        st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=d, max_size=d)
    )
    mass = np.array(raw) / np.sum(raw)
    event = draw(st.sets(st.integers(min_value=0, max_value=d - 1)))
    return DiscreteDistribution(FiniteDomain(d), mass), event


@given(dist_and_events(), dist_and_events())
@settings(max_examples=100, deadline=None)
def test_mix_prob_linearity(pe1, pe2):
    P1, E = pe1
    P2, _ = pe2
    if P1.domain != P2.domain:
        return
    w = (0.3, 0.7)
    mixed = mix([P1, P2], w)
    expect = w[0] * prob_of(P1, E) + w[1] * prob_of(P2, E)
    assert abs(prob_of(mixed, E) - expect) <= 1e-12


@given(dist_and_events())
@settings(max_examples=100, deadline=None)
def test_condition_support_and_mass(pe):
    P, E = pe
    if prob_of(P, E) == 0.0:
        with pytest.raises(ZeroMassEvent):
            condition(P, E)
        return
    out = condition(P, E)
    assert out.support() <= frozenset(E)
    assert abs(prob_of(out, E) - 1.0) <= 1e-12


def test_hypothesis_validation():
    dom = FiniteDomain(3)
    with pytest.raises(ValueError):
        Hypothesis(dom, np.array([1, 0, -1]))
    h = Hypothesis(dom, np.array([1, -1, 1]))
    assert h(1) == -1
    assert h.flip([0]).labels.tolist() == [-1, -1, 1]


def test_complete_class_enumeration_count():
    dom = FiniteDomain(2)
    members = list(enumerate_class(CompleteClass(dom)))
    assert len(members) == 4
    assert len({h.key() for h in members}) == 4
    # index 0 is the all-ones hypothesis
    assert members[0].labels.tolist() == [1, 1]


def test_explicit_class_single_member():
    f = constant_hypothesis(FiniteDomain(3), 1)
    cls = ExplicitClass([f])
    assert list(enumerate_class(cls)) == [f]
    with pytest.raises(ValueError):
        ExplicitClass([f, f])


def _brute_force_interval_count(d: int, max_runs: int) -> int:
    """Oracle: enumerate all 2^d labelings, keep those whose flipped set
    (vs all-ones) has at most max_runs contiguous runs."""
    count = 0
    for i in range(2**d):
        bits = [(i >> j) & 1 for j in range(d)]
        runs = sum(1 for j in range(d) if bits[j] and (j == 0 or not bits[j - 1]))
        if runs <= max_runs:
            count += 1
    return count


@pytest.mark.parametrize("d", [3, 4, 5, 6])
def test_two_intervals_count_matches_brute_force(d):
    cls = two_intervals_class(FiniteDomain(d))
    members = list(enumerate_class(cls))
    assert len(members) == _brute_force_interval_count(d, 2)
    assert len({h.key() for h in members}) == len(members)
    assert all(cls.contains(h) for h in members)


@pytest.mark.parametrize("d", [3, 5])
def test_three_intervals_count_matches_brute_force(d):
    cls = three_intervals_class(FiniteDomain(d))
    members = list(enumerate_class(cls))
    assert len(members) == _brute_force_interval_count(d, 3)


def test_two_intervals_membership_examples():
    dom = FiniteDomain(8)
    cls = two_intervals_class(dom)
    f = constant_hypothesis(dom, 1)
    assert cls.contains(f)  # zero intervals
    assert cls.contains(f.flip([1, 2, 5]))  # two runs
    assert not cls.contains(f.flip([0, 2, 4]))  # three runs


def test_enumeration_caps():
    with pytest.raises(NotEnumerable):
        list(enumerate_class(CompleteClass(FiniteDomain(21))))
    with pytest.raises(NotEnumerable):
        list(enumerate_class(two_intervals_class(FiniteDomain(65))))


def _small_instance(noisy=frozenset()):
    dom = FiniteDomain(4)
    return Instance(
        dom,
        uniform(dom),
        uniform(dom),
        constant_hypothesis(dom, 1),
        CompleteClass(dom),
        noisy,
    )


def test_instance_support_invariant():
    dom = FiniteDomain(3)
    D = DiscreteDistribution(dom, np.array([0.5, 0.5, 0.0]))
    D0 = uniform(dom)
    with pytest.raises(ValueError):
        Instance(dom, D, D0, constant_hypothesis(dom, 1), CompleteClass(dom))


def test_instance_truth_membership():
    dom = FiniteDomain(4)
    f = constant_hypothesis(dom, 1)
    other = f.flip([0])
    with pytest.raises(ValueError):
        Instance(dom, uniform(dom), uniform(dom), other, ExplicitClass([f]))


def test_instance_noisy_mass_bound():
    dom = FiniteDomain(2)
    with pytest.raises(ValueError):
        Instance(
            dom,
            uniform(dom),
            uniform(dom),
            constant_hypothesis(dom, 1),
            CompleteClass(dom),
            frozenset({0, 1}),
        )


def test_instance_json_round_trip_exact():
    dom = FiniteDomain(5)
    rng = np.random.default_rng(7)
    mass = rng.dirichlet(np.ones(5))
    D = DiscreteDistribution(dom, mass)
    inst = Instance(
        dom, D, condition(D, {0, 1, 2}), constant_hypothesis(dom, 1), CompleteClass(dom), frozenset({4})
    )
    doc = instance_to_json(inst)
    assert all(isinstance(v, str) for v in doc["D"])  # exact decimal strings
    back = instance_from_json(doc)
    assert np.array_equal(back.underlying.mass, inst.underlying.mass)
    assert np.array_equal(back.initial.mass, inst.initial.mass)
    assert back.truth == inst.truth
    assert back.noisy_set == inst.noisy_set


def test_instance_json_interval_class():
    dom = FiniteDomain(6)
    inst = Instance(
        dom, uniform(dom), uniform(dom), constant_hypothesis(dom, 1), two_intervals_class(dom)
    )
    back = instance_from_json(instance_to_json(inst))
    assert back.hclass.kind == "two_intervals"
    assert back.hclass.max_intervals == 2


def test_values_are_immutable():
    P = uniform(FiniteDomain(3))
    with pytest.raises(ValueError):
        P.mass[0] = 0.9
    h = constant_hypothesis(FiniteDomain(3), 1)
    with pytest.raises(ValueError):
        h.labels[0] = -1
