"""Closed-form tie duration distributions and hazards.

Covers the constant (geometric) hazard, a two-level piecewise-constant
hazard driven by tie age, finite mixtures of geometric durations, and the
canonical parameters that make an ``age_buckets`` dissolution model
reproduce a mixture's hazard.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

ArrayLike = float | Sequence[float] | np.ndarray


def ilogit(x: ArrayLike) -> np.ndarray | float:
    """Inverse logit without overflow for large ``|x|``."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out if out.ndim else float(out)


def logit(p: ArrayLike) -> np.ndarray | float:
    p = np.asarray(p, dtype=float)
    out = np.log(p) - np.log1p(-p)
    return out if out.ndim else float(out)


def log_ilogit(x: ArrayLike) -> np.ndarray | float:
    """``log(ilogit(x))`` computed as ``-log(1 + exp(-x))``."""
    out = -np.logaddexp(0.0, -np.asarray(x, dtype=float))
    return out if np.ndim(out) else float(out)


def geometric_pmf(p: float, x: ArrayLike) -> np.ndarray | float:
    x = np.asarray(x, dtype=float)
    out = np.exp((x - 1) * np.log1p(-p) + np.log(p))
    return out if out.ndim else float(out)


def _check_ages(x: ArrayLike) -> np.ndarray:
    xa = np.asarray(x)
    if np.any(xa < 1):
        raise ValueError("ages must be >= 1")
    return xa


@dataclass(frozen=True)
class PiecewiseModel:
    """Preservation log-odds ``theta1 + theta2 * 1{age in ages}``."""

    theta1: float
    theta2: float
    ages: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "ages", frozenset(int(a) for a in self.ages))
        if not self.ages or min(self.ages) < 1:
            raise ValueError("ages must be a non-empty set of positive integers")
        for z in (self.theta1, self.theta1 + self.theta2):
            h = ilogit(-z)
            if not 0.0 < h < 1.0:
                raise ValueError(f"hazard {h} is not strictly inside (0, 1)")

    @classmethod
    def from_hazards(cls, baseline: float, in_set: float, ages: Sequence[int]) -> PiecewiseModel:
        """Build from the baseline hazard and the hazard at ages in ``ages``."""
        t1 = logit(1.0 - baseline)
        return cls(t1, logit(1.0 - in_set) - t1, frozenset(ages))

    @property
    def a0(self) -> int:
        return max(self.ages)

    @property
    def is_prefix(self) -> bool:
        return self.ages == frozenset(range(1, self.a0 + 1))


def piecewise_hazard(model: PiecewiseModel, x: ArrayLike) -> np.ndarray | float:
    xa = _check_ages(x)
    in_set = np.isin(xa, sorted(model.ages))
    return ilogit(-model.theta1 - model.theta2 * in_set)


def pmf_from_hazard(h: Callable[[np.ndarray], np.ndarray] | Sequence[float],
                    x_max: int) -> tuple[np.ndarray, float]:
    """Duration pmf ``f(1..x_max)`` and remaining tail mass from a discrete hazard.

    ``f(x) = h(x) * (1 - sum_{i<x} f(i))``; the bracket is carried as a
    running survival product so the tail keeps full relative precision.
    """
    x = np.arange(1, x_max + 1)
    hz = np.asarray(h(x) if callable(h) else h, dtype=float)[:x_max]
    if hz.shape != (x_max,):
        raise ValueError(f"need {x_max} hazard values, got {hz.size}")
    surv_before = np.concatenate(([1.0], np.cumprod(1.0 - hz)[:-1]))
    f = hz * surv_before
    tail = float(surv_before[-1] * (1.0 - hz[-1]))
    return f, tail


def piecewise_pmf(model: PiecewiseModel, x: ArrayLike) -> np.ndarray | float:
    """Closed-form duration pmf when ``ages == {1, ..., a0}``."""
    if not model.is_prefix:
        raise ValueError("closed form needs ages = {1, ..., a0}")
    xa = _check_ages(x).astype(float)
    a0 = model.a0
    z_in = model.theta1 + model.theta2
    z_base = model.theta1
    early = (xa - 1) * log_ilogit(z_in) + log_ilogit(-z_in)
    late = a0 * log_ilogit(z_in) + (xa - a0 - 1) * log_ilogit(z_base) + log_ilogit(-z_base)
    out = np.exp(np.where(xa <= a0, early, late))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class MixtureModel:
    """Finite mixture of geometric durations.

    ``omega[k]`` is class ``k``'s per-step hazard and ``pi[k]`` its
    incidence among newly formed ties.
    """

    omega: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        om = np.atleast_1d(np.asarray(self.omega, dtype=float)).copy()
        pi = np.atleast_1d(np.asarray(self.pi, dtype=float)).copy()
        if om.shape != pi.shape or om.ndim != 1 or om.size == 0:
            raise ValueError("omega and pi must be non-empty vectors of equal length")
        if np.any((om <= 0) | (om >= 1)):
            raise ValueError("every omega must lie strictly in (0, 1)")
        if np.any(pi <= 0) or abs(pi.sum() - 1.0) > 1e-12:
            raise ValueError("pi must be positive and sum to 1")
        om.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "pi", pi)

    @property
    def m(self) -> int:
        return self.omega.size

    def __eq__(self, other):
        if not isinstance(other, MixtureModel):
            return NotImplemented
        return np.array_equal(self.omega, other.omega) and np.array_equal(self.pi, other.pi)

    def __hash__(self):
        return hash((self.omega.tobytes(), self.pi.tobytes()))


def _log_class_survival(model: MixtureModel, x: np.ndarray) -> np.ndarray:
    # log(pi_k (1 - omega_k)^x), shape (len(x), m)
    return np.log(model.pi)[None, :] + x[:, None] * np.log1p(-model.omega)[None, :]


def _finish(out: np.ndarray, scalar: bool):
    return float(out[0]) if scalar else out


def mixture_pmf(model: MixtureModel, x: ArrayLike):
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(_check_ages(x)).astype(float)
    lw = _log_class_survival(model, xa - 1) + np.log(model.omega)[None, :]
    return _finish(np.exp(lw).sum(axis=1), scalar)


def mixture_survival(model: MixtureModel, x: ArrayLike):
    """``P(X > x) = sum_k pi_k (1 - omega_k)^x``."""
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    return _finish(np.exp(_log_class_survival(model, xa)).sum(axis=1), scalar)


def mixture_cdf(model: MixtureModel, x: ArrayLike):
    scalar = np.ndim(x) == 0
    return _finish(1.0 - np.atleast_1d(mixture_survival(model, x)), scalar)


def mixture_hazard(model: MixtureModel, x: ArrayLike):
    """``f(x) / (1 - F(x - 1))``, i.e. the class hazards weighted by posterior
    class membership of a tie that survived to age ``x``."""
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(_check_ages(x)).astype(float)
    lw = _log_class_survival(model, xa - 1)
    lw -= lw.max(axis=1, keepdims=True)
    w = np.exp(lw)
    # limit plus a nonnegative excess keeps the rounded curve nonincreasing
    lim = model.omega.min()
    h = lim + (w @ (model.omega - lim)) / w.sum(axis=1)
    h[xa == 1] = mixture_initial_hazard(model)
    return _finish(h, scalar)


def mixture_initial_hazard(model: MixtureModel) -> float:
    """``sum(pi * omega)``, written as limit plus excess like ``mixture_hazard``."""
    lim = model.omega.min()
    return float(lim + np.dot(model.pi, model.omega - lim))


def mixture_limiting_hazard(model: MixtureModel) -> float:
    return float(model.omega.min())


def curved_eta(model: MixtureModel, a0: int) -> np.ndarray:
    """Canonical coefficients for ``age_buckets(a0)`` that reproduce the
    mixture hazard at ages ``1..a0-1`` and hold the age-``a0`` hazard after."""
    if a0 < 1:
        raise ValueError("a0 must be >= 1")
    h = np.atleast_1d(mixture_hazard(model, np.arange(1, a0 + 1)))
    return np.log1p(-h) - np.log(h)


def choose_cutoff(model: MixtureModel, eps: float, max_age: int = 10_000_000) -> int:
    """Smallest age whose hazard is strictly within ``eps`` of the limiting hazard."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    lim = mixture_limiting_hazard(model)
    start, chunk = 1, 1024
    while start <= max_age:
        x = np.arange(start, start + chunk)
        hit = np.nonzero(np.abs(np.atleast_1d(mixture_hazard(model, x)) - lim) < eps)[0]
        if hit.size:
            return int(x[hit[0]])
        start += chunk
        chunk *= 2
    raise ValueError(f"hazard not within {eps} of its limit by age {max_age}")


@dataclass(frozen=True)
class LinearAgeFit:
    """Least-squares ``edges + linear_age(a0)`` approximation of a hazard curve."""

    theta1: float
    theta2: float
    a0: int
    rms_logodds: float
    max_abs_hazard_error: float

    def hazard(self, x: ArrayLike):
        xa = np.asarray(x, dtype=float)
        return ilogit(-(self.theta1 + self.theta2 * np.minimum(xa, self.a0)))


def fit_linear_age(model: MixtureModel, a0: int) -> LinearAgeFit:
    """Fit preservation log-odds ``theta1 + theta2 * min(age, a0)`` to the
    mixture's log-odds of preservation at ages ``1..a0``.

    The fit quality is reported, not guaranteed.
    """
    if a0 < 2:
        raise ValueError("a0 must be >= 2 to identify a slope")
    x = np.arange(1, a0 + 1, dtype=float)
    target = curved_eta(model, a0)
    design = np.column_stack([np.ones_like(x), x])
    (t1, t2), *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ np.array([t1, t2])
    h_fit = ilogit(-(t1 + t2 * x))
    h_true = np.atleast_1d(mixture_hazard(model, x))
    return LinearAgeFit(float(t1), float(t2), a0, float(np.sqrt(np.mean(resid ** 2))),
                        float(np.max(np.abs(h_fit - h_true))))


def curve_table(model: PiecewiseModel | MixtureModel, x_max: int) -> dict[str, np.ndarray]:
    """Columns ``x, f, F, h`` for ``x = 1..x_max``."""
    x = np.arange(1, x_max + 1)
    if isinstance(model, MixtureModel):
        f = np.atleast_1d(mixture_pmf(model, x))
        F = np.atleast_1d(mixture_cdf(model, x))
        h = np.atleast_1d(mixture_hazard(model, x))
    else:
        h = np.atleast_1d(piecewise_hazard(model, x))
        if model.is_prefix:
            f = np.atleast_1d(piecewise_pmf(model, x))
        else:
            f, _ = pmf_from_hazard(h, x_max)
        F = np.cumsum(f)
    return {"x": x, "f": f, "F": F, "h": h}
