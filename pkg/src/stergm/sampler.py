"""Formation/dissolution phase samplers and trajectory simulation.

Each phase draws from its conditional ERGM given the previous network.
Dyad-independent models are sampled exactly, one Bernoulli draw per
toggleable dyad. Models with a ``degree1`` term (or any model when
``exact_when_independent`` is off) use Metropolis-Hastings with uniform
single-dyad toggle proposals, starting from the previous network.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .duration import ilogit
from .network import (
    EdgeAgeState,
    Network,
    NetworkError,
    Spell,
    SpellLog,
    advance_ages,
    combine,
    triu_dyads,
)
from .terms import (
    AGE_BUCKETS,
    AGE_IN_SET,
    DEGREE1,
    DISSOLUTION,
    DYAD_AGE_IN_SET,
    EDGES,
    FORMATION,
    LINEAR_AGE,
    ModelSpec,
    SpecError,
    independent_change_matrix,
)

_PHASE_CODE = {FORMATION: 0, DISSOLUTION: 1}


@dataclass(frozen=True)
class SamplerConfig:
    mh_sweeps: int = 20
    seed: int = 0
    exact_when_independent: bool = True

    def __post_init__(self):
        if int(self.mh_sweeps) < 1:
            raise ValueError("mh_sweeps must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def phase_rng(seed: int, replicate: int, t: int, phase: str) -> np.random.Generator:
    """Independent Philox stream for one (replicate, step, phase) cell."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replicate), int(t), _PHASE_CODE[phase]))
    return np.random.Generator(np.random.Philox(ss))


def _state_arrays(y: Network, ages: EdgeAgeState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = y.n
    adj = y.to_dense()
    formed = np.full((n, n), -1, dtype=np.int64)
    toggled = np.full((n, n), -1, dtype=np.int64)
    for (i, j), s in ages.formation_time.items():
        formed[i, j] = formed[j, i] = s
    for (i, j), s in ages.last_toggle_time.items():
        toggled[i, j] = toggled[j, i] = s
    return adj, formed, toggled


def _ages_from_arrays(adj: np.ndarray, formed: np.ndarray, toggled: np.ndarray) -> EdgeAgeState:
    iu, ju = triu_dyads(adj.shape[0])
    on = adj[iu, ju].astype(bool)
    ft = {(int(i), int(j)): int(s) for i, j, s in zip(iu[on], ju[on], formed[iu[on], ju[on]])}
    tg = toggled[iu, ju] >= 0
    lt = {(int(i), int(j)): int(s) for i, j, s in zip(iu[tg], ju[tg], toggled[iu[tg], ju[tg]])}
    return EdgeAgeState(ft, lt)


def _sample_phase(adj: np.ndarray, formed: np.ndarray, toggled: np.ndarray, t: int,
                  spec: ModelSpec, cfg: SamplerConfig, rng: np.random.Generator) -> np.ndarray:
    iu, ju = triu_dyads(adj.shape[0])
    present = adj[iu, ju].astype(bool)
    sel = ~present if spec.phase == FORMATION else present
    ti, tj = iu[sel], ju[sel]
    out = adj.copy()
    k = ti.size
    if k == 0:
        return out

    tie_age = t - formed[ti, tj]
    if spec.phase == DISSOLUTION and np.any(tie_age < 1):
        raise NetworkError(f"tie with age < 1 at step {t}; formation times are inconsistent")
    tog = toggled[ti, tj]
    dyad_age = np.where(tog >= 0, t - tog, -1)

    base = np.zeros(k)
    c_deg1 = 0.0
    for term, coef in spec.split_eta():
        if term.kind == DEGREE1:
            c_deg1 += float(coef[0])
        else:
            base += independent_change_matrix(term, tie_age, dyad_age) @ coef

    if c_deg1 == 0.0 and cfg.exact_when_independent:
        on = rng.random(k) < ilogit(base)
        if spec.phase == FORMATION:
            a, b = ti[on], tj[on]
            out[a, b] = out[b, a] = 1
        else:
            a, b = ti[~on], tj[~on]
            out[a, b] = out[b, a] = 0
        return out

    deg = out.sum(axis=1, dtype=np.int64)
    n_prop = cfg.mh_sweeps * k
    proposals = rng.integers(0, k, size=n_prop, dtype=np.int64)
    with np.errstate(divide="ignore"):
        log_u = np.log(rng.random(n_prop))
    _kernels.mh_toggle(out, deg, ti.astype(np.int64), tj.astype(np.int64), base, c_deg1,
                       proposals, log_u)
    return out


def _check_phase(spec: ModelSpec, phase: str) -> None:
    if spec.phase != phase:
        raise SpecError(f"expected a {phase} model, got a {spec.phase} model")


def formation_phase(y_prev: Network, ages: EdgeAgeState, spec: ModelSpec, cfg: SamplerConfig,
                    t: int = 1, rng: np.random.Generator | None = None) -> Network:
    """Draw ``y+ >= y_prev`` from the formation model at step ``t``."""
    _check_phase(spec, FORMATION)
    rng = rng if rng is not None else phase_rng(cfg.seed, 0, t, FORMATION)
    adj, formed, toggled = _state_arrays(y_prev, ages)
    return Network.from_dense(_sample_phase(adj, formed, toggled, t, spec, cfg, rng))


def dissolution_phase(y_prev: Network, ages: EdgeAgeState, spec: ModelSpec, cfg: SamplerConfig,
                      t: int = 1, rng: np.random.Generator | None = None) -> Network:
    """Draw ``y- <= y_prev`` from the dissolution model at step ``t``."""
    _check_phase(spec, DISSOLUTION)
    rng = rng if rng is not None else phase_rng(cfg.seed, 0, t, DISSOLUTION)
    adj, formed, toggled = _state_arrays(y_prev, ages)
    return Network.from_dense(_sample_phase(adj, formed, toggled, t, spec, cfg, rng))


def sample_phase_many(y_prev: Network, ages: EdgeAgeState, spec: ModelSpec, cfg: SamplerConfig,
                      size: int, t: int = 1, rng: np.random.Generator | None = None) -> np.ndarray:
    """``size`` independent phase draws from the same ``y_prev``.

    Returns a ``(size, n_dyads)`` boolean array of tie indicators in
    ``iter_dyads`` order.
    """
    rng = rng if rng is not None else phase_rng(cfg.seed, 0, t, spec.phase)
    adj, formed, toggled = _state_arrays(y_prev, ages)
    iu, ju = triu_dyads(y_prev.n)
    out = np.empty((size, iu.size), dtype=bool)
    for s in range(size):
        out[s] = _sample_phase(adj, formed, toggled, t, spec, cfg, rng)[iu, ju] != 0
    return out


def step(y_prev: Network, ages: EdgeAgeState, formation_spec: ModelSpec,
         dissolution_spec: ModelSpec, cfg: SamplerConfig, t: int,
         replicate: int = 0) -> tuple[Network, EdgeAgeState, list[Spell]]:
    """One full transition ``y_{t-1} -> y_t``.

    Both phases start from ``y_prev``; returns the new network, the updated
    age state and the spells closed at ``t``.
    """
    y_plus = formation_phase(y_prev, ages, formation_spec, cfg, t,
                             phase_rng(cfg.seed, replicate, t, FORMATION))
    y_minus = dissolution_phase(y_prev, ages, dissolution_spec, cfg, t,
                                phase_rng(cfg.seed, replicate, t, DISSOLUTION))
    y_new = combine(y_prev, y_plus, y_minus)
    new_ages, closed = advance_ages(ages, y_prev, y_new, t)
    return y_new, new_ages, closed


def _phase_stats(spec: ModelSpec, adj: np.ndarray, formed: np.ndarray, toggled: np.ndarray,
                 t: int) -> np.ndarray:
    """Statistic vector of a phase network; ages are taken from the pre-step state."""
    iu, ju = triu_dyads(adj.shape[0])
    on = adj[iu, ju].astype(bool)
    ti, tj = iu[on], ju[on]
    out = []
    for term in spec.terms:
        if term.kind == EDGES:
            out.append([on.sum()])
        elif term.kind == DEGREE1:
            out.append([np.count_nonzero(adj.sum(axis=1) == 1)])
        elif term.kind in (AGE_IN_SET, AGE_BUCKETS, LINEAR_AGE):
            age = t - formed[ti, tj]
            out.append(independent_change_matrix(term, age, age).sum(axis=0))
        elif term.kind == DYAD_AGE_IN_SET:
            tog = toggled[ti, tj]
            dage = np.where(tog >= 0, t - tog, -1)
            out.append(independent_change_matrix(term, dage, dage).sum(axis=0))
    return np.concatenate([np.asarray(v, dtype=float) for v in out]) if out else np.zeros(0)


@dataclass
class Trajectory:
    """Per-step summaries of a run at steps ``1..steps`` plus its spells.

    ``formation_stats[t-1]`` and ``dissolution_stats[t-1]`` are the phase
    statistics of ``y+`` and ``y-`` drawn at step ``t``.
    """

    n: int
    edges: np.ndarray
    degree1: np.ndarray
    formation_stats: np.ndarray
    dissolution_stats: np.ndarray
    spell_log: SpellLog
    final_network: Network
    final_ages: EdgeAgeState
    replicate: int = 0
    seed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def steps(self) -> int:
        return self.edges.size

    @property
    def density(self) -> np.ndarray:
        return self.edges / (self.n * (self.n - 1) / 2)

    @property
    def prop_degree1(self) -> np.ndarray:
        return self.degree1 / self.n


def simulate(n: int, steps: int, formation_spec: ModelSpec, dissolution_spec: ModelSpec,
             cfg: SamplerConfig, initial: Network | None = None, replicate: int = 0) -> Trajectory:
    """Run ``steps`` transitions from ``initial`` (empty by default).

    The result depends only on the arguments: every phase draws from its own
    stream keyed by ``(cfg.seed, replicate, t, phase)``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    _check_phase(formation_spec, FORMATION)
    _check_phase(dissolution_spec, DISSOLUTION)
    y0 = initial if initial is not None else Network(n)
    if y0.n != n:
        raise ValueError(f"initial network has {y0.n} actors, expected {n}")

    adj, formed, toggled = _state_arrays(y0, EdgeAgeState.for_initial(y0))
    iu, ju = triu_dyads(n)
    edges = np.zeros(steps, dtype=np.int64)
    deg1 = np.zeros(steps, dtype=np.int64)
    fstats = np.zeros((steps, formation_spec.dimension))
    dstats = np.zeros((steps, dissolution_spec.dimension))
    log = SpellLog()

    for t in range(1, steps + 1):
        y_plus = _sample_phase(adj, formed, toggled, t, formation_spec, cfg,
                               phase_rng(cfg.seed, replicate, t, FORMATION))
        y_minus = _sample_phase(adj, formed, toggled, t, dissolution_spec, cfg,
                                phase_rng(cfg.seed, replicate, t, DISSOLUTION))
        fstats[t - 1] = _phase_stats(formation_spec, y_plus, formed, toggled, t)
        dstats[t - 1] = _phase_stats(dissolution_spec, y_minus, formed, toggled, t)

        new = y_minus | (y_plus & (1 - adj))
        prev_u = adj[iu, ju]
        new_u = new[iu, ju]
        gone = (prev_u == 1) & (new_u == 0)
        born = (prev_u == 0) & (new_u == 1)
        gi, gj = iu[gone], ju[gone]
        for i, j, s in zip(gi.tolist(), gj.tolist(), formed[gi, gj].tolist()):
            log.spells.append(Spell(i, j, s, t, s == 0))
        formed[gi, gj] = formed[gj, gi] = -1
        bi, bj = iu[born], ju[born]
        formed[bi, bj] = formed[bj, bi] = t
        ch = gone | born
        ci, cj = iu[ch], ju[ch]
        toggled[ci, cj] = toggled[cj, ci] = t

        adj = new
        edges[t - 1] = new_u.sum()
        deg1[t - 1] = np.count_nonzero(adj.sum(axis=1) == 1)

    final_ages = _ages_from_arrays(adj, formed, toggled)
    log.close_open(final_ages, steps)
    return Trajectory(n, edges, deg1, fstats, dstats, log, Network.from_dense(adj), final_ages,
                      replicate=replicate, seed=cfg.seed)
