"""Undirected network state, tie-age bookkeeping and spell logs.

Actors are labelled ``0..n-1``. A dyad is always stored as an ordered pair
``(i, j)`` with ``i < j``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, NamedTuple, TextIO

import numpy as np

Dyad = tuple[int, int]

#: Networks with at most this many actors keep a dense boolean adjacency
#: matrix for edge queries; larger ones keep per-actor neighbour sets.
DENSE_THRESHOLD = 2048

SPELL_CSV_HEADER = ("replicate", "tail", "head", "onset", "terminus", "censored")


class NetworkError(ValueError):
    """Raised for malformed networks or violated phase containment."""


def make_dyad(i: int, j: int) -> Dyad:
    i, j = int(i), int(j)
    if i == j:
        raise NetworkError(f"self-loop ({i}, {j}) is not a dyad")
    return (i, j) if i < j else (j, i)


def n_dyads(n: int) -> int:
    return n * (n - 1) // 2


@lru_cache(maxsize=32)
def triu_dyads(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row and column indices of all dyads, in ``iter_dyads`` order."""
    iu, ju = np.triu_indices(n, 1)
    iu.setflags(write=False)
    ju.setflags(write=False)
    return iu, ju


def iter_dyads(n: int) -> Iterator[Dyad]:
    for i in range(n):
        for j in range(i + 1, n):
            yield (i, j)


class Network:
    """An immutable undirected simple graph on ``n`` actors.

    Equality and hashing depend only on ``n`` and the edge set, so the
    query structure (dense matrix or neighbour sets, picked from
    :data:`DENSE_THRESHOLD`) is an implementation detail.
    """

    __slots__ = ("n", "_edges", "_adj", "_nbrs")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        n = int(n)
        if n < 2:
            raise NetworkError(f"a network needs at least 2 actors, got n={n}")
        canon = set()
        for i, j in edges:
            d = make_dyad(i, j)
            if d[0] < 0 or d[1] >= n:
                raise NetworkError(f"dyad {d} outside actor range 0..{n - 1}")
            canon.add(d)
        self.n = n
        self._edges = frozenset(canon)
        self._adj: np.ndarray | None = None
        self._nbrs: dict[int, set[int]] | None = None

    @classmethod
    def from_dense(cls, adj: np.ndarray) -> Network:
        adj = np.asarray(adj)
        iu, ju = triu_dyads(adj.shape[0])
        on = adj[iu, ju] != 0
        return cls(adj.shape[0], zip(iu[on].tolist(), ju[on].tolist()))

    @property
    def edges(self) -> frozenset[Dyad]:
        return self._edges

    @property
    def is_dense(self) -> bool:
        return self.n <= DENSE_THRESHOLD

    def _index(self) -> None:
        if self.is_dense:
            if self._adj is None:
                adj = np.zeros((self.n, self.n), dtype=bool)
                if self._edges:
                    e = np.array(sorted(self._edges), dtype=np.intp)
                    adj[e[:, 0], e[:, 1]] = True
                    adj[e[:, 1], e[:, 0]] = True
                self._adj = adj
        elif self._nbrs is None:
            nbrs: dict[int, set[int]] = {}
            for i, j in self._edges:
                nbrs.setdefault(i, set()).add(j)
                nbrs.setdefault(j, set()).add(i)
            self._nbrs = nbrs

    def has_edge(self, i: int, j: int) -> bool:
        self._index()
        if self._adj is not None:
            return bool(self._adj[i, j])
        return j in self._nbrs.get(i, ())

    def degree(self, i: int) -> int:
        self._index()
        if self._adj is not None:
            return int(self._adj[i].sum())
        return len(self._nbrs.get(i, ()))

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for i, j in self._edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def to_dense(self) -> np.ndarray:
        """Return a fresh ``uint8`` symmetric adjacency matrix."""
        adj = np.zeros((self.n, self.n), dtype=np.uint8)
        if self._edges:
            e = np.array(sorted(self._edges), dtype=np.intp)
            adj[e[:, 0], e[:, 1]] = 1
            adj[e[:, 1], e[:, 0]] = 1
        return adj

    @property
    def n_dyads(self) -> int:
        return n_dyads(self.n)

    @property
    def density(self) -> float:
        return len(self._edges) / self.n_dyads

    def dyads(self) -> Iterator[Dyad]:
        return iter_dyads(self.n)

    def with_edges(self, edges: Iterable[tuple[int, int]]) -> Network:
        return Network(self.n, edges)

    def __len__(self) -> int:
        return len(self._edges)

    def __iter__(self) -> Iterator[Dyad]:
        return iter(sorted(self._edges))

    def __contains__(self, d: tuple[int, int]) -> bool:
        return make_dyad(*d) in self._edges

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return self.n == other.n and self._edges == other._edges

    def __hash__(self) -> int:
        return hash((self.n, self._edges))

    def __le__(self, other: Network) -> bool:
        return self.n == other.n and self._edges <= other._edges

    def __ge__(self, other: Network) -> bool:
        return self.n == other.n and self._edges >= other._edges

    def __repr__(self) -> str:
        return f"Network(n={self.n}, edges={sorted(self._edges)})"


def empty_network(n: int) -> Network:
    return Network(n)


def combine(y_prev: Network, y_plus: Network, y_minus: Network) -> Network:
    """Apply one step's formations and dissolutions to ``y_prev``.

    Raises
    ------
    NetworkError
        If ``y_plus`` does not contain ``y_prev`` or ``y_minus`` is not
        contained in it; either means a phase sampler misbehaved.
    """
    if not (y_plus.n == y_prev.n == y_minus.n):
        raise NetworkError("networks disagree on actor count")
    if not y_plus.edges >= y_prev.edges:
        raise NetworkError("formation network does not contain the previous network")
    if not y_minus.edges <= y_prev.edges:
        raise NetworkError("dissolution network is not contained in the previous network")
    return Network(y_prev.n, y_plus.edges - (y_prev.edges - y_minus.edges))


@dataclass
class EdgeAgeState:
    """Formation times of extant ties and last-toggle times of dyads.

    ``formation_time[d]`` is the step at which tie ``d`` first appeared in
    its current spell; ties in a seeded initial network get ``0``.
    A dyad missing from ``last_toggle_time`` has never changed state.
    """

    formation_time: dict[Dyad, int] = field(default_factory=dict)
    last_toggle_time: dict[Dyad, int] = field(default_factory=dict)

    @classmethod
    def for_initial(cls, y0: Network) -> EdgeAgeState:
        return cls(formation_time={d: 0 for d in y0.edges})

    def age(self, d: Dyad, t: int) -> int:
        try:
            return t - self.formation_time[d]
        except KeyError:
            raise NetworkError(f"no formation time recorded for tie {d}") from None

    def dyad_age(self, d: Dyad, t: int) -> int | None:
        """Steps since the dyad last toggled, or ``None`` if it never has."""
        last = self.last_toggle_time.get(d)
        return None if last is None else t - last

    def copy(self) -> EdgeAgeState:
        return EdgeAgeState(dict(self.formation_time), dict(self.last_toggle_time))


class Spell(NamedTuple):
    tail: int
    head: int
    onset: int
    terminus: int | None
    censored: bool

    @property
    def duration(self) -> int | None:
        return None if self.terminus is None else self.terminus - self.onset


@dataclass
class SpellLog:
    """Tie spells recorded over a run.

    A spell is censored when its start or end was not observed: ties of a
    seeded initial network (onset ``0``) and ties still open when the run
    stopped.
    """

    spells: list[Spell] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.spells)

    def __iter__(self) -> Iterator[Spell]:
        return iter(self.spells)

    def extend(self, other: Iterable[Spell]) -> None:
        self.spells.extend(other)

    def close_open(self, state: EdgeAgeState, t_final: int) -> None:
        """Record every still-extant tie as a right-censored spell."""
        for (i, j), onset in sorted(state.formation_time.items()):
            self.spells.append(Spell(i, j, onset, None, True))

    def durations(self) -> np.ndarray:
        return np.array([s.duration for s in self.spells if s.terminus is not None], dtype=np.int64)

    def to_arrays(self) -> dict[str, np.ndarray]:
        """Columnar view; open termini are ``-1``."""
        sp = self.spells
        return {
            "tail": np.array([s.tail for s in sp], dtype=np.int64),
            "head": np.array([s.head for s in sp], dtype=np.int64),
            "onset": np.array([s.onset for s in sp], dtype=np.int64),
            "terminus": np.array([-1 if s.terminus is None else s.terminus for s in sp], dtype=np.int64),
            "censored": np.array([s.censored for s in sp], dtype=bool),
        }

    def write_csv(self, fh: TextIO, replicate: int = 0, t_final: int | None = None,
                  header: bool = True) -> None:
        """Write ``replicate,tail,head,onset,terminus,censored`` rows.

        Open spells are written with ``terminus = t_final`` and ``censored=1``.
        """
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(SPELL_CSV_HEADER)
        for s in self.spells:
            if s.terminus is None:
                if t_final is None:
                    raise ValueError("t_final is required to write open spells")
                term = t_final
            else:
                term = s.terminus
            w.writerow((replicate, s.tail, s.head, s.onset, term, int(s.censored)))

    @staticmethod
    def read_csv(fh: TextIO) -> dict[int, SpellLog]:
        """Read a spell CSV into one log per replicate.

        Censored rows come back with their written terminus; a censored row
        whose onset is positive is treated as right-censored (open).
        """
        r = csv.DictReader(fh)
        if tuple(r.fieldnames or ()) != SPELL_CSV_HEADER:
            raise ValueError(f"unexpected spell CSV header {r.fieldnames}")
        logs: dict[int, SpellLog] = {}
        for row in r:
            onset = int(row["onset"])
            cens = bool(int(row["censored"]))
            term: int | None = int(row["terminus"])
            if cens and onset > 0:
                term = None
            logs.setdefault(int(row["replicate"]), SpellLog()).spells.append(
                Spell(int(row["tail"]), int(row["head"]), onset, term, cens)
            )
        return logs

    def to_csv_string(self, replicate: int = 0, t_final: int | None = None) -> str:
        buf = io.StringIO()
        self.write_csv(buf, replicate, t_final)
        return buf.getvalue()


def advance_ages(state: EdgeAgeState, y_prev: Network, y_new: Network,
                 t: int) -> tuple[EdgeAgeState, list[Spell]]:
    """Update tie ages after the transition ``y_prev -> y_new`` at step ``t``.

    Returns the new state and the spells closed at ``t``.
    """
    if t < 1:
        raise ValueError(f"time step must be >= 1, got {t}")
    new = state.copy()
    formed = y_new.edges - y_prev.edges
    dissolved = y_prev.edges - y_new.edges
    closed = []
    for d in sorted(dissolved):
        onset = new.formation_time.pop(d)
        closed.append(Spell(d[0], d[1], onset, t, onset == 0))
        new.last_toggle_time[d] = t
    for d in formed:
        new.formation_time[d] = t
        new.last_toggle_time[d] = t
    return new, closed
