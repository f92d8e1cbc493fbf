import io
import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stergm import network as netmod
from stergm.network import (
    EdgeAgeState,
    Network,
    NetworkError,
    Spell,
    SpellLog,
    advance_ages,
    combine,
    empty_network,
    iter_dyads,
)

A, B, C, D = 0, 1, 2, 3


def test_empty_network_sizes():
    y = empty_network(50)
    assert len(y) == 0
    assert y.n_dyads == 1225
    assert y.density == 0
    assert empty_network(2).n_dyads == 1
    with pytest.raises(NetworkError):
        empty_network(1)


def test_network_rejects_bad_dyads():
    with pytest.raises(NetworkError):
        Network(3, [(1, 1)])
    with pytest.raises(NetworkError):
        Network(3, [(0, 3)])
    assert Network(3, [(2, 0)]).edges == {(0, 2)}


@pytest.mark.parametrize("threshold", [2048, 1])
def test_queries_agree_across_representations(monkeypatch, threshold):
    monkeypatch.setattr(netmod, "DENSE_THRESHOLD", threshold)
    y = Network(5, [(0, 1), (1, 2), (3, 4)])
    assert y.is_dense == (threshold >= 5)
    assert y.has_edge(1, 0) and not y.has_edge(0, 2)
    assert [y.degree(i) for i in range(5)] == [1, 2, 1, 1, 1]
    assert list(y.degrees()) == [1, 2, 1, 1, 1]


def test_dense_round_trip():
    y = Network(6, [(0, 5), (2, 3)])
    adj = y.to_dense()
    assert (adj == adj.T).all() and adj.sum() == 4
    assert Network.from_dense(adj) == y


def test_combine_examples():
    ab, cd = (A, B), (C, D)
    assert combine(Network(4, [ab]), Network(4, [ab, cd]), Network(4)) == Network(4, [cd])
    y = Network(4, [ab, cd])
    assert combine(y, y, y) == y


def test_combine_rejects_containment_violation():
    y = Network(4, [(A, B)])
    with pytest.raises(NetworkError):
        combine(y, Network(4), y)
    with pytest.raises(NetworkError):
        combine(y, y, Network(4, [(A, B), (C, D)]))


def _random_phase_triple(rng: random.Random, n: int):
    dyads = list(iter_dyads(n))
    prev = {d for d in dyads if rng.random() < 0.5}
    plus = prev | {d for d in dyads if d not in prev and rng.random() < 0.5}
    minus = {d for d in prev if rng.random() < 0.5}
    return prev, plus, minus


def test_combine_three_forms_agree_randomized():
    rng = random.Random(2024)
    for trial in range(10_000):
        n = rng.randint(2, 6)
        prev, plus, minus = _random_phase_triple(rng, n)
        form1 = (prev | (plus - prev)) - (prev - minus)
        form2 = plus - (prev - minus)
        form3 = minus | (plus - prev)
        assert form1 == form2 == form3
        got = combine(Network(n, prev), Network(n, plus), Network(n, minus))
        assert got.edges == form3
        assert minus <= got.edges <= plus


def test_advance_ages_definitional_age():
    state = EdgeAgeState()
    y0, y1 = Network(3), Network(3, [(0, 1)])
    state, closed = advance_ages(state, y0, y1, 3)
    assert closed == [] and state.formation_time[(0, 1)] == 3
    assert state.age((0, 1), 7) == 4


def test_advance_ages_hand_trace():
    # dyad (0,1): on at 1, off at 4, on at 6, open at 10
    # dyad (1,2): on at 2, off at 3
    # dyad (0,2): seeded at 0, off at 5
    on = {
        0: {(0, 2)},
        1: {(0, 1), (0, 2)},
        2: {(0, 1), (0, 2), (1, 2)},
        3: {(0, 1), (0, 2)},
        4: {(0, 2)},
        5: set(),
        6: {(0, 1)},
    }
    nets = [Network(3, on[min(t, 6)]) for t in range(11)]
    state = EdgeAgeState.for_initial(nets[0])
    log = SpellLog()
    for t in range(1, 11):
        state, closed = advance_ages(state, nets[t - 1], nets[t], t)
        log.extend(closed)
    log.close_open(state, 10)
    assert log.spells == [
        Spell(1, 2, 2, 3, False),
        Spell(0, 1, 1, 4, False),
        Spell(0, 2, 0, 5, True),
        Spell(0, 1, 6, None, True),
    ]
    assert state.last_toggle_time == {(0, 1): 6, (1, 2): 3, (0, 2): 5}
    assert all(s.duration >= 1 for s in log if s.terminus is not None)


def test_advance_ages_rejects_time_zero():
    with pytest.raises(ValueError):
        advance_ages(EdgeAgeState(), Network(2), Network(2), 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_random_walk_invariants(seed):
    rng = random.Random(seed)
    n = 4
    dyads = list(iter_dyads(n))
    y = Network(n)
    state = EdgeAgeState.for_initial(y)
    spells = SpellLog()
    for t in range(1, 25):
        prev_ages = {d: state.age(d, t) for d in y.edges}
        new = Network(n, [d for d in dyads if (d in y.edges) != (rng.random() < 0.3)])
        state, closed = advance_ages(state, y, new, t)
        spells.extend(closed)
        for d in y.edges & new.edges:
            assert state.age(d, t + 1) == prev_ages[d] + 1
        for d in new.edges:
            assert state.age(d, t + 1) >= 1
            assert state.last_toggle_time.get(d, 0) >= state.formation_time[d]
        y = new
    by_dyad = {}
    for s in spells:
        assert s.duration >= 1
        by_dyad.setdefault((s.tail, s.head), []).append(s)
    for ss in by_dyad.values():
        ss.sort(key=lambda s: s.onset)
        for a, b in itertools.pairwise(ss):
            assert a.terminus <= b.onset


def test_spell_csv_round_trip():
    log = SpellLog([Spell(0, 1, 3, 7, False), Spell(1, 2, 0, 4, True), Spell(0, 2, 8, None, True)])
    text = log.to_csv_string(replicate=2, t_final=10)
    lines = text.splitlines()
    assert lines[0] == "replicate,tail,head,onset,terminus,censored"
    assert lines[3] == "2,0,2,8,10,1"
    back = SpellLog.read_csv(io.StringIO(text))
    assert back[2].spells == log.spells


def test_spell_csv_needs_final_time_for_open_spells():
    with pytest.raises(ValueError):
        SpellLog([Spell(0, 1, 3, None, True)]).to_csv_string()


def test_durations_skip_open_spells():
    log = SpellLog([Spell(0, 1, 3, 7, False), Spell(0, 2, 8, None, True)])
    assert log.durations().tolist() == [4]
    arr = log.to_arrays()
    assert arr["terminus"].tolist() == [7, -1]
    assert np.array_equal(arr["censored"], [False, True])
