import itertools
import random

import numpy as np
import pytest

from stergm.network import EdgeAgeState, Network, NetworkError, iter_dyads
from stergm.terms import (
    DISSOLUTION,
    FORMATION,
    ModelSpec,
    SpecError,
    StatTerm,
    age_buckets,
    age_in_set,
    change_stat,
    degree1,
    dyad_age_in_set,
    dyad_independent,
    edges,
    eval_stat,
    independent_change_matrix,
    linear_age,
)

ALL_TERMS = [edges(), degree1(), age_in_set([2, 3]), age_buckets(3), linear_age(3), dyad_age_in_set([1, 4])]
T = 10


def _ages_for_all(n, rng, max_age=5):
    dyads = list(iter_dyads(n))
    return EdgeAgeState(
        {d: T - rng.randint(1, max_age) for d in dyads},
        {d: T - rng.randint(1, max_age) for d in dyads if rng.random() < 0.8},
    )


def two_eval_difference(term, y, ages, d):
    with_d = y.with_edges(y.edges | {d})
    without = y.with_edges(y.edges - {d})
    return eval_stat(term, with_d, ages, T) - eval_stat(term, without, ages, T)


def test_degree1_count_example():
    y = Network(3, [(0, 1), (1, 2)])
    assert eval_stat(degree1(), y, EdgeAgeState(), T).tolist() == [2.0]


def test_empty_network_zero_vectors():
    y = Network(5)
    for term in ALL_TERMS:
        v = eval_stat(term, y, EdgeAgeState(), T)
        assert v.shape == (term.dimension,) and not v.any()


def test_age_buckets_partition_edges():
    rng = random.Random(5)
    for _ in range(50):
        y = Network(5, [d for d in iter_dyads(5) if rng.random() < 0.5])
        ages = _ages_for_all(5, rng, max_age=9)
        assert eval_stat(age_buckets(4), y, ages, T).sum() == len(y)


def test_eval_requires_ages_for_extant_ties():
    y = Network(3, [(0, 1)])
    with pytest.raises(NetworkError):
        eval_stat(age_in_set([1]), y, EdgeAgeState(), T)


def test_edges_change_is_one():
    rng = random.Random(1)
    y = Network(4, [(0, 1)])
    ages = _ages_for_all(4, rng)
    for d in iter_dyads(4):
        assert change_stat(edges(), y, ages, d, T).tolist() == [1.0]


def test_degree1_change_example():
    # adding bc to {ab}: b leaves degree 1, c enters it
    y = Network(3, [(0, 1)])
    assert change_stat(degree1(), y, EdgeAgeState(), (1, 2), T).tolist() == [0.0]
    assert two_eval_difference(degree1(), y, _ages_for_all(3, random.Random(0)), (1, 2)).tolist() == [0.0]


@pytest.mark.parametrize("term", ALL_TERMS, ids=lambda t: t.kind)
def test_change_stat_matches_two_evaluations_n4(term):
    rng = random.Random(hash(term.kind) & 0xFFFF)
    dyads = list(iter_dyads(4))
    for _ in range(20):
        ages = _ages_for_all(4, rng)
        for bits in itertools.product([0, 1], repeat=len(dyads)):
            y = Network(4, [d for d, b in zip(dyads, bits) if b])
            for d in dyads:
                np.testing.assert_array_equal(change_stat(term, y, ages, d, T),
                                              two_eval_difference(term, y, ages, d))


@pytest.mark.parametrize("term", [t for t in ALL_TERMS if t.dyad_independent], ids=lambda t: t.kind)
def test_vectorised_change_matches_scalar(term):
    rng = random.Random(3)
    ages = _ages_for_all(6, rng, max_age=8)
    dyads = list(iter_dyads(6))
    tie_age = np.array([T - ages.formation_time[d] for d in dyads])
    dyad_age = np.array([T - ages.last_toggle_time[d] if d in ages.last_toggle_time else -1 for d in dyads])
    mat = independent_change_matrix(term, tie_age, dyad_age)
    y = Network(6)
    for k, d in enumerate(dyads):
        np.testing.assert_array_equal(mat[k], change_stat(term, y, ages, d, T))


def test_age_buckets_change_is_one_hot():
    y = Network(3, [(0, 1)])
    for age in range(1, 12):
        ages = EdgeAgeState({(0, 1): T - age})
        v = change_stat(age_buckets(5), y, ages, (0, 1), T)
        assert v.sum() == 1 and v.max() == 1
        assert np.argmax(v) == min(age, 5) - 1


def test_linear_age_change_capped():
    y = Network(2, [(0, 1)])
    vals = [change_stat(linear_age(4), y, EdgeAgeState({(0, 1): T - a}), (0, 1), T)[0] for a in range(1, 10)]
    assert vals == [1, 2, 3, 4, 4, 4, 4, 4, 4]


def test_never_toggled_dyads_are_outside_any_age_set():
    y = Network(3)
    v = change_stat(dyad_age_in_set(range(1, 100)), y, EdgeAgeState(), (0, 2), T)
    assert v.tolist() == [0.0]


def test_statistics_invariant_under_relabelling():
    rng = random.Random(11)
    n = 5
    for _ in range(30):
        y = Network(n, [d for d in iter_dyads(n) if rng.random() < 0.4])
        ages = _ages_for_all(n, rng, max_age=7)
        perm = list(range(n))
        rng.shuffle(perm)
        pd = lambda d: tuple(sorted((perm[d[0]], perm[d[1]])))  # noqa: E731
        y2 = Network(n, [pd(d) for d in y.edges])
        ages2 = EdgeAgeState({pd(d): s for d, s in ages.formation_time.items()},
                             {pd(d): s for d, s in ages.last_toggle_time.items()})
        for term in ALL_TERMS:
            np.testing.assert_array_equal(eval_stat(term, y, ages, T), eval_stat(term, y2, ages2, T))


def test_dyad_independence_flags():
    assert dyad_independent(ModelSpec(FORMATION, [edges()], [0]))
    assert not dyad_independent(ModelSpec(DISSOLUTION, [edges(), degree1()], [0, 0]))
    assert dyad_independent(ModelSpec(DISSOLUTION, [edges(), age_in_set([1, 2])], [0, 0]))
    assert dyad_independent(ModelSpec(DISSOLUTION, [age_buckets(3), linear_age(2)], [0, 0, 0, 0]))
    assert dyad_independent(ModelSpec(FORMATION, [edges(), dyad_age_in_set([1])], [0, 0]))


@pytest.mark.parametrize("bad", [
    dict(kind="nope"),
    dict(kind="age_in_set"),
    dict(kind="age_in_set", ages=frozenset({0, 1})),
    dict(kind="age_buckets", a0=0),
    dict(kind="linear_age", a0=-2),
])
def test_term_validation(bad):
    with pytest.raises(SpecError):
        StatTerm(**bad)


def test_dimensions():
    assert [t.dimension for t in ALL_TERMS] == [1, 1, 1, 3, 1, 1]


def test_phase_restrictions():
    with pytest.raises(SpecError):
        ModelSpec(FORMATION, [age_in_set([1])], [0])
    with pytest.raises(SpecError):
        ModelSpec(DISSOLUTION, [dyad_age_in_set([1])], [0])
    with pytest.raises(SpecError):
        ModelSpec(DISSOLUTION, [edges(), age_buckets(3)], [1, 2, 3])


def test_spec_config_round_trip():
    spec = ModelSpec(DISSOLUTION, [edges(), age_in_set([3, 1, 2]), age_buckets(2)], [1, 2, 3, 4])
    again = ModelSpec.from_config(DISSOLUTION, spec.to_config())
    assert again == spec
    assert spec.to_config()["terms"][1] == {"kind": "age_in_set", "ages": [1, 2, 3]}


def test_curved_mixture_spec_maps_to_bucket_coefficients():
    spec = ModelSpec(DISSOLUTION, [age_buckets(1)], [0.2, 0.1, 0.9, 0.1], curved="geometric_mixture")
    np.testing.assert_allclose(spec.eta(), [np.log(0.81 / 0.19)], rtol=1e-14)
    with pytest.raises(SpecError):
        ModelSpec(DISSOLUTION, [edges()], [0.2, 0.1, 0.9, 0.1], curved="geometric_mixture")
