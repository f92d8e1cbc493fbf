"""Sufficient statistics and change statistics for formation and dissolution models."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .network import Dyad, EdgeAgeState, Network

EDGES = "edges"
DEGREE1 = "degree1"
AGE_IN_SET = "age_in_set"
AGE_BUCKETS = "age_buckets"
LINEAR_AGE = "linear_age"
DYAD_AGE_IN_SET = "dyad_age_in_set"

KINDS = (EDGES, DEGREE1, AGE_IN_SET, AGE_BUCKETS, LINEAR_AGE, DYAD_AGE_IN_SET)
FORMATION_KINDS = frozenset({EDGES, DEGREE1, DYAD_AGE_IN_SET})
DISSOLUTION_KINDS = frozenset({EDGES, DEGREE1, AGE_IN_SET, AGE_BUCKETS, LINEAR_AGE})
DYAD_DEPENDENT_KINDS = frozenset({DEGREE1})

FORMATION = "formation"
DISSOLUTION = "dissolution"


class SpecError(ValueError):
    """Raised for invalid terms or model specifications."""


@dataclass(frozen=True)
class StatTerm:
    """One statistic term.

    ``ages`` is used by the set-membership kinds, ``a0`` by the bucket and
    linear-age kinds.
    """

    kind: str
    ages: frozenset[int] = frozenset()
    a0: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown term kind {self.kind!r}")
        if self.kind in (AGE_IN_SET, DYAD_AGE_IN_SET):
            if not self.ages:
                raise SpecError(f"{self.kind} needs a non-empty set of ages")
            if any(int(a) != a or a < 1 for a in self.ages):
                raise SpecError(f"{self.kind} ages must be positive integers")
            object.__setattr__(self, "ages", frozenset(int(a) for a in self.ages))
        if self.kind in (AGE_BUCKETS, LINEAR_AGE) and (int(self.a0) != self.a0 or self.a0 < 1):
            raise SpecError(f"{self.kind} needs a0 >= 1, got {self.a0}")

    @property
    def dimension(self) -> int:
        return self.a0 if self.kind == AGE_BUCKETS else 1

    @property
    def dyad_independent(self) -> bool:
        return self.kind not in DYAD_DEPENDENT_KINDS

    def to_config(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind in (AGE_IN_SET, DYAD_AGE_IN_SET):
            out["ages"] = sorted(self.ages)
        if self.kind in (AGE_BUCKETS, LINEAR_AGE):
            out["a0"] = self.a0
        return out

    @classmethod
    def from_config(cls, obj: dict[str, Any]) -> StatTerm:
        kind = obj.get("kind")
        if kind in (AGE_IN_SET, DYAD_AGE_IN_SET):
            return cls(kind, ages=frozenset(obj.get("ages", ())))
        if kind in (AGE_BUCKETS, LINEAR_AGE):
            return cls(kind, a0=obj.get("a0", 0))
        return cls(kind)


def edges() -> StatTerm:
    return StatTerm(EDGES)


def degree1() -> StatTerm:
    return StatTerm(DEGREE1)


def age_in_set(ages: Sequence[int]) -> StatTerm:
    return StatTerm(AGE_IN_SET, ages=frozenset(ages))


def age_buckets(a0: int) -> StatTerm:
    return StatTerm(AGE_BUCKETS, a0=a0)


def linear_age(a0: int) -> StatTerm:
    return StatTerm(LINEAR_AGE, a0=a0)


def dyad_age_in_set(ages: Sequence[int]) -> StatTerm:
    return StatTerm(DYAD_AGE_IN_SET, ages=frozenset(ages))


# Curved mappings by name; each takes the parameter vector and returns the
# canonical vector. Looked up lazily so configs can name them.
def _geometric_mixture_eta(theta: np.ndarray, terms: Sequence[StatTerm]) -> np.ndarray:
    from .duration import MixtureModel, curved_eta

    m = len(theta) // 2
    a0 = sum(t.dimension for t in terms)
    return curved_eta(MixtureModel(theta[:m], theta[m:]), a0)


CURVED_MAPS: dict[str, Callable[[np.ndarray, Sequence[StatTerm]], np.ndarray]] = {
    "geometric_mixture": _geometric_mixture_eta,
}


@dataclass(frozen=True)
class ModelSpec:
    """Terms, coefficients and an optional named curved mapping for one phase.

    Without ``curved`` the coefficients are canonical. With
    ``curved="geometric_mixture"`` the coefficients are
    ``(omega_1..omega_m, pi_1..pi_m)`` and the single term must be
    ``age_buckets``.
    """

    phase: str
    terms: tuple[StatTerm, ...]
    theta: tuple[float, ...]
    curved: str | None = None
    _eta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "theta", tuple(float(x) for x in self.theta))
        if self.phase not in (FORMATION, DISSOLUTION):
            raise SpecError(f"phase must be 'formation' or 'dissolution', got {self.phase!r}")
        allowed = FORMATION_KINDS if self.phase == FORMATION else DISSOLUTION_KINDS
        for t in self.terms:
            if t.kind not in allowed:
                raise SpecError(f"term {t.kind!r} is not allowed in a {self.phase} model")
        if self.curved is None:
            eta = np.asarray(self.theta, dtype=float)
        else:
            if self.curved not in CURVED_MAPS:
                raise SpecError(f"unknown curved mapping {self.curved!r}")
            if self.curved == "geometric_mixture" and [t.kind for t in self.terms] != [AGE_BUCKETS]:
                raise SpecError("geometric_mixture mapping pairs with a single age_buckets term")
            eta = np.asarray(CURVED_MAPS[self.curved](np.asarray(self.theta, float), self.terms), float)
        if eta.shape != (self.dimension,):
            raise SpecError(
                f"canonical parameter has length {eta.size}, statistics have dimension {self.dimension}"
            )
        eta.setflags(write=False)
        object.__setattr__(self, "_eta", eta)

    @property
    def dimension(self) -> int:
        return sum(t.dimension for t in self.terms)

    def eta(self) -> np.ndarray:
        return self._eta

    def split_eta(self) -> list[tuple[StatTerm, np.ndarray]]:
        out, k = [], 0
        for t in self.terms:
            out.append((t, self._eta[k:k + t.dimension]))
            k += t.dimension
        return out

    def to_config(self) -> dict[str, Any]:
        out: dict[str, Any] = {"terms": [t.to_config() for t in self.terms], "theta": list(self.theta)}
        if self.curved is not None:
            out["curved"] = self.curved
        return out

    @classmethod
    def from_config(cls, phase: str, obj: dict[str, Any]) -> ModelSpec:
        return cls(phase, tuple(StatTerm.from_config(t) for t in obj["terms"]),
                   tuple(obj["theta"]), obj.get("curved"))


def dyad_independent(spec: ModelSpec) -> bool:
    return all(t.dyad_independent for t in spec.terms)


def _tie_age(ages: EdgeAgeState, d: Dyad, t: int) -> int:
    return ages.age(d, t)


def _age_bucket_vec(a: int, a0: int) -> np.ndarray:
    v = np.zeros(a0)
    v[min(a, a0) - 1] = 1.0
    return v


def eval_stat(term: StatTerm, y: Network, ages: EdgeAgeState, t: int) -> np.ndarray:
    """Evaluate ``term`` on network ``y`` at step ``t``.

    Tie ages are ``t - formation_time``; the dyad age used by
    ``dyad_age_in_set`` is the time since the dyad last toggled.
    """
    k = term.kind
    if k == EDGES:
        return np.array([float(len(y))])
    if k == DEGREE1:
        return np.array([float(np.count_nonzero(y.degrees() == 1))])
    if k == AGE_IN_SET:
        return np.array([float(sum(_tie_age(ages, d, t) in term.ages for d in y.edges))])
    if k == AGE_BUCKETS:
        out = np.zeros(term.a0)
        for d in y.edges:
            out[min(_tie_age(ages, d, t), term.a0) - 1] += 1
        return out
    if k == LINEAR_AGE:
        return np.array([float(sum(min(_tie_age(ages, d, t), term.a0) for d in y.edges))])
    # DYAD_AGE_IN_SET
    return np.array([float(sum(ages.dyad_age(d, t) in term.ages for d in y.edges))])


def _degree1_delta(deg_i: int, deg_j: int) -> int:
    # degrees measured without the dyad itself
    return (deg_i == 0) - (deg_i == 1) + (deg_j == 0) - (deg_j == 1)


def change_stat(term: StatTerm, y: Network, ages: EdgeAgeState, dyad: Dyad, t: int) -> np.ndarray:
    """Change in ``term`` from adding ``dyad`` to ``y`` minus ``y`` without it."""
    k = term.kind
    if k == EDGES:
        return np.ones(1)
    if k == DEGREE1:
        i, j = dyad
        on = y.has_edge(i, j)
        return np.array([float(_degree1_delta(y.degree(i) - on, y.degree(j) - on))])
    if k == AGE_IN_SET:
        return np.array([float(_tie_age(ages, dyad, t) in term.ages)])
    if k == AGE_BUCKETS:
        return _age_bucket_vec(_tie_age(ages, dyad, t), term.a0)
    if k == LINEAR_AGE:
        return np.array([float(min(_tie_age(ages, dyad, t), term.a0))])
    return np.array([float(ages.dyad_age(dyad, t) in term.ages)])


def independent_change_matrix(term: StatTerm, tie_age: np.ndarray, dyad_age: np.ndarray) -> np.ndarray:
    """Change statistics of a dyad-independent term for many dyads at once.

    ``tie_age`` and ``dyad_age`` hold one age per dyad; a negative
    ``dyad_age`` marks a dyad that never toggled. Returns shape
    ``(len(tie_age), term.dimension)``.
    """
    k = term.kind
    size = len(tie_age)
    if k == EDGES:
        return np.ones((size, 1))
    if k == AGE_IN_SET:
        return np.isin(tie_age, sorted(term.ages)).astype(float)[:, None]
    if k == AGE_BUCKETS:
        out = np.zeros((size, term.a0))
        out[np.arange(size), np.minimum(tie_age, term.a0) - 1] = 1.0
        return out
    if k == LINEAR_AGE:
        return np.minimum(tie_age, term.a0).astype(float)[:, None]
    if k == DYAD_AGE_IN_SET:
        return ((dyad_age >= 0) & np.isin(dyad_age, sorted(term.ages))).astype(float)[:, None]
    raise SpecError(f"{k} is not dyad-independent")
