"""Empirical discrete hazards and equilibrium summaries of simulated runs."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .network import SpellLog
from .sampler import Trajectory

HAZARD_CSV_HEADER = ("age", "n_terminated_at", "n_terminated_ge", "hazard")

#: Written into output metadata: which spells the estimator uses.
ELIGIBILITY_NOTE = (
    "spells with onset > burn_in that terminated before the run ended; "
    "spells open at the end or present in the initial network are excluded"
)


@dataclass(frozen=True)
class HazardTable:
    """Per-age termination counts among terminated ties.

    ``hazard[x-1]`` is NaN where no terminated tie reached age ``x``.
    """

    n_terminated_at: np.ndarray
    n_terminated_ge: np.ndarray
    n_total: int

    @property
    def x_max(self) -> int:
        return self.n_terminated_at.size

    @property
    def ages(self) -> np.ndarray:
        return np.arange(1, self.x_max + 1)

    @property
    def defined(self) -> np.ndarray:
        return self.n_terminated_ge > 0

    @property
    def hazard(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.defined, self.n_terminated_at / np.maximum(self.n_terminated_ge, 1), np.nan)

    def standard_error(self) -> np.ndarray:
        """Binomial standard error of each defined hazard estimate."""
        h = self.hazard
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.sqrt(h * (1 - h) / self.n_terminated_ge)

    @classmethod
    def from_durations(cls, durations: Iterable[int], x_max: int) -> HazardTable:
        if x_max < 1:
            raise ValueError("x_max must be >= 1")
        d = np.asarray(list(durations) if not isinstance(durations, np.ndarray) else durations,
                       dtype=np.int64)
        if d.size and d.min() < 1:
            raise ValueError("durations must be >= 1")
        counts = np.bincount(d, minlength=x_max + 2)
        at = counts[1:x_max + 1].copy()
        # ties terminated at age >= x: total minus those that ended earlier
        ge = d.size - np.concatenate(([0], np.cumsum(at)[:-1]))
        return cls(at, ge, int(d.size))

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HAZARD_CSV_HEADER)
        for x, a, g, h in zip(self.ages, self.n_terminated_at, self.n_terminated_ge, self.hazard):
            w.writerow((int(x), int(a), int(g), "NA" if np.isnan(h) else repr(float(h))))


def eligible_durations(spells: SpellLog | Iterable[SpellLog], burn_in: int) -> np.ndarray:
    logs = [spells] if isinstance(spells, SpellLog) else list(spells)
    out = [s.terminus - s.onset for log in logs for s in log
           if not s.censored and s.terminus is not None and s.onset > burn_in]
    return np.asarray(out, dtype=np.int64)


def empirical_hazard(spells: SpellLog | Iterable[SpellLog], burn_in: int, x_max: int) -> HazardTable:
    """Estimate ``P(duration = x | duration >= x)`` for ``x = 1..x_max``.

    Both numerator and denominator count terminated ties only, formed after
    ``burn_in``; several logs (replicates) are pooled.
    """
    return HazardTable.from_durations(eligible_durations(spells, burn_in), x_max)


@dataclass(frozen=True)
class EquilibriumStats:
    density_mean: float
    prop_degree1_mean: float
    n_steps_used: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def equilibrium_stats(trajectory: Trajectory, burn_in: int) -> EquilibriumStats:
    """Time averages of density and share of degree-1 actors after ``burn_in``."""
    if trajectory.steps <= burn_in:
        raise ValueError(f"trajectory has {trajectory.steps} steps, burn-in is {burn_in}")
    dens = trajectory.density[burn_in:]
    prop = trajectory.prop_degree1[burn_in:]
    return EquilibriumStats(float(dens.mean()), float(prop.mean()), int(dens.size))


def pool_equilibrium(stats: Iterable[EquilibriumStats]) -> EquilibriumStats:
    """Step-weighted average over replicates."""
    stats = list(stats)
    w = np.array([s.n_steps_used for s in stats], dtype=float)
    return EquilibriumStats(
        float(np.average([s.density_mean for s in stats], weights=w)),
        float(np.average([s.prop_degree1_mean for s in stats], weights=w)),
        int(w.sum()),
    )


def weighted_trend(table: HazardTable, ages: Sequence[int]) -> tuple[float, float]:
    """Slope of an inverse-variance weighted linear fit of hazard on age.

    Returns ``(slope, standard_error)``; ages with undefined or degenerate
    (0 or 1) estimates are dropped.
    """
    idx = np.asarray(ages) - 1
    h = table.hazard[idx]
    n = table.n_terminated_ge[idx].astype(float)
    x = np.asarray(ages, dtype=float)
    ok = np.isfinite(h) & (h > 0) & (h < 1)
    if ok.sum() < 3:
        raise ValueError("need at least three ages with usable hazard estimates")
    x, h, w = x[ok], h[ok], n[ok] / (h[ok] * (1 - h[ok]))
    xbar = np.average(x, weights=w)
    sxx = np.sum(w * (x - xbar) ** 2)
    slope = np.sum(w * (x - xbar) * h) / sxx
    return float(slope), float(np.sqrt(1.0 / sxx))
