"""Two-layer cascade ensembles: parameters, samples, simulators, likelihoods.

A super source activates each of ``p`` parents independently with
probability ``theta0``.  The child is then attempted by a helper source
(probability ``theta0``) and by every active parent in the true parent set
(probability ``theta`` each), with ``theta = 1 - theta0 ** (1/k)``.

Samples are stored as rows of ``p + 1`` activation times with ``NEVER``
(``inf``) for nodes that never activate.  In the discrete model parents fire
at time 1 and the child at time 2; in the continuous model parents fire in
``[0, T]`` and the child in ``[T, 2T]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ParameterError
from .transmission import TransmissionSpec, sample_transmission, transmission_density

NEVER = math.inf
PARENT_TIME = 1
CHILD_TIME = 2
MODELS = ("discrete", "continuous")


def derive_theta(theta0: float, k: int) -> float:
    """Per-parent transmission probability ``1 - theta0 ** (1/k)``."""
    if not (0.0 < theta0 < 1.0):
        raise ParameterError(f"theta0 must lie in (0, 1), got {theta0}")
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")
    # -expm1(log(theta0)/k) keeps precision when theta is small
    return -math.expm1(math.log(theta0) / k)


@dataclass(frozen=True)
class ModelParams:
    p: int
    k: int
    theta0: float
    theta: float = field(init=False)

    def __post_init__(self):
        if int(self.p) != self.p or int(self.k) != self.k:
            raise ParameterError("p and k must be integers")
        if not (1 <= self.k < self.p):
            raise ParameterError(f"need 1 <= k < p, got p={self.p}, k={self.k}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "k", int(self.k))
        object.__setattr__(self, "theta0", float(self.theta0))
        object.__setattr__(self, "theta", derive_theta(self.theta0, self.k))

    def child_log_table(self) -> np.ndarray:
        """``table[c, a]``: log-probability of child outcome ``c`` given ``a`` active parents.

        Row 0 is "child never activates", row 1 is "child activates".
        """
        a = np.arange(self.k + 1)
        log_off = a * math.log1p(-self.theta) + math.log1p(-self.theta0)
        log_on = np.log(-np.expm1(log_off))
        return np.vstack([log_off, log_on])


@dataclass(frozen=True, order=True)
class Hypothesis:
    """A candidate parent set: strictly increasing 1-based node indices."""

    parents: tuple[int, ...]

    def __post_init__(self):
        parents = tuple(int(i) for i in self.parents)
        if not parents:
            raise ParameterError("a hypothesis needs at least one parent")
        if parents[0] < 1 or any(b <= a for a, b in zip(parents, parents[1:])):
            raise ParameterError(f"parents must be strictly increasing indices >= 1: {parents}")
        object.__setattr__(self, "parents", parents)

    @classmethod
    def of(cls, *parents: int) -> "Hypothesis":
        return cls(tuple(parents))

    def __iter__(self):
        return iter(self.parents)

    def __len__(self):
        return len(self.parents)

    def __str__(self):
        return "{" + ",".join(map(str, self.parents)) + "}"

    @property
    def columns(self) -> np.ndarray:
        """0-based column indices into a sample row."""
        return np.asarray(self.parents, dtype=np.intp) - 1

    def overlap(self, other: "Hypothesis") -> int:
        return len(set(self.parents) & set(other.parents))


def check_hypothesis(hyp: Hypothesis, params: ModelParams) -> None:
    if len(hyp) != params.k:
        raise ParameterError(f"hypothesis {hyp} has {len(hyp)} parents, expected k={params.k}")
    if hyp.parents[-1] > params.p:
        raise ParameterError(f"hypothesis {hyp} references a node beyond p={params.p}")


@dataclass(frozen=True)
class DiscreteCascade:
    parent_times: tuple[float, ...]
    child_time: float

    def __post_init__(self):
        times = tuple(float(t) for t in self.parent_times)
        if any(t != PARENT_TIME and t != NEVER for t in times):
            raise DomainError(f"discrete parent times must be 1 or inf: {times}")
        if self.child_time != CHILD_TIME and self.child_time != NEVER:
            raise DomainError(f"discrete child time must be 2 or inf: {self.child_time}")
        object.__setattr__(self, "parent_times", times)
        object.__setattr__(self, "child_time", float(self.child_time))

    @property
    def p(self) -> int:
        return len(self.parent_times)

    def as_row(self) -> np.ndarray:
        return np.array(self.parent_times + (self.child_time,), dtype=float)


@dataclass(frozen=True)
class ContinuousCascade:
    parent_times: tuple[float, ...]
    child_time: float
    horizon: float

    def __post_init__(self):
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ParameterError(f"horizon must be positive, got {self.horizon}")
        times = tuple(float(t) for t in self.parent_times)
        T = float(self.horizon)
        if any(t != NEVER and not (0.0 <= t <= T) for t in times):
            raise DomainError(f"parent times must lie in [0, {T}] or be inf")
        c = float(self.child_time)
        if c != NEVER and not (T <= c <= 2 * T):
            raise DomainError(f"child time {c} outside [{T}, {2 * T}]")
        object.__setattr__(self, "parent_times", times)
        object.__setattr__(self, "child_time", c)
        object.__setattr__(self, "horizon", T)

    @property
    def p(self) -> int:
        return len(self.parent_times)

    def as_row(self) -> np.ndarray:
        return np.array(self.parent_times + (self.child_time,), dtype=float)


def child_activation_prob(active_parents: int, params: ModelParams) -> float:
    """Probability that the child activates when ``active_parents`` true parents are active."""
    if int(active_parents) != active_parents or not (0 <= active_parents <= params.k):
        raise ParameterError(f"active parent count must lie in [0, {params.k}], got {active_parents}")
    return -math.expm1(active_parents * math.log1p(-params.theta) + math.log1p(-params.theta0))


# -- simulation ---------------------------------------------------------------


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ParameterError("an explicit seed is required")
    return np.random.default_rng(seed)


def _draw_activity(params: ModelParams, truth: Hypothesis, n: int, rng: np.random.Generator):
    check_hypothesis(truth, params)
    parents_on = rng.random((n, params.p)) < params.theta0
    a = parents_on[:, truth.columns].sum(axis=1)
    p_child = -np.expm1(a * math.log1p(-params.theta) + math.log1p(-params.theta0))
    child_on = rng.random(n) < p_child
    return parents_on, child_on


def simulate_discrete_times(params: ModelParams, truth: Hypothesis, n: int, seed) -> np.ndarray:
    """``n`` discrete cascades as an ``(n, p + 1)`` array of times."""
    rng = _rng(seed)
    parents_on, child_on = _draw_activity(params, truth, n, rng)
    times = np.full((n, params.p + 1), NEVER)
    times[:, :-1][parents_on] = PARENT_TIME
    times[child_on, -1] = CHILD_TIME
    return times


def simulate_continuous_times(
    params: ModelParams, truth: Hypothesis, spec: TransmissionSpec, n: int, seed
) -> np.ndarray:
    """``n`` continuous cascades as an ``(n, p + 1)`` array; child times are absolute."""
    rng = _rng(seed)
    parents_on, child_on = _draw_activity(params, truth, n, rng)
    times = np.full((n, params.p + 1), NEVER)
    delays = sample_transmission(spec, rng, (n, params.p + 1))
    parent_block = times[:, :-1]
    parent_block[parents_on] = delays[:, :-1][parents_on]
    times[child_on, -1] = spec.horizon + delays[child_on, -1]
    return times


def simulate_discrete(params: ModelParams, truth: Hypothesis, seed) -> DiscreteCascade:
    row = simulate_discrete_times(params, truth, 1, seed)[0]
    return DiscreteCascade(tuple(row[:-1]), row[-1])


def simulate_continuous(
    params: ModelParams, truth: Hypothesis, spec: TransmissionSpec, seed
) -> ContinuousCascade:
    row = simulate_continuous_times(params, truth, spec, 1, seed)[0]
    return ContinuousCascade(tuple(row[:-1]), row[-1], spec.horizon)


# -- likelihoods --------------------------------------------------------------


def _as_matrix(times, p: int) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(times, dtype=float))
    if arr.shape[1] != p + 1:
        raise ParameterError(f"samples have {arr.shape[1] - 1} parents, params say p={p}")
    return arr


def child_loglik_terms(active: np.ndarray, child_on: np.ndarray, hyp: Hypothesis, params: ModelParams) -> np.ndarray:
    """Per-sample log of the child's conditional probability under ``hyp``."""
    a = active[:, hyp.columns].sum(axis=1)
    return params.child_log_table()[child_on.astype(np.intp), a]


def loglik_discrete_batch(times, hyp: Hypothesis, params: ModelParams) -> np.ndarray:
    """Per-row log-likelihood of discrete samples under ``hyp``."""
    check_hypothesis(hyp, params)
    arr = _as_matrix(times, params.p)
    parents, child = arr[:, :-1], arr[:, -1]
    if np.any((parents != PARENT_TIME) & (parents != NEVER)) or np.any(
        (child != CHILD_TIME) & (child != NEVER)
    ):
        raise DomainError("discrete samples must use times 1/2 or inf")
    active = parents == PARENT_TIME
    n_on = active.sum(axis=1)
    source = n_on * math.log(params.theta0) + (params.p - n_on) * math.log1p(-params.theta0)
    return source + child_loglik_terms(active, child == CHILD_TIME, hyp, params)


def loglik_discrete(cascade: DiscreteCascade, hyp: Hypothesis, params: ModelParams) -> float:
    if cascade.p != params.p:
        raise ParameterError(f"cascade has p={cascade.p}, params say p={params.p}")
    return float(loglik_discrete_batch(cascade.as_row(), hyp, params)[0])


def loglik_continuous_batch(
    times, hyp: Hypothesis, params: ModelParams, spec: TransmissionSpec
) -> np.ndarray:
    """Per-row log-density of continuous samples under ``hyp``.

    Finite parent times contribute ``log theta0 + log f(t)``, missing ones
    ``log(1 - theta0)``; the child contributes its conditional activation
    probability times ``f(t_child - T)`` when active.
    """
    check_hypothesis(hyp, params)
    arr = _as_matrix(times, params.p)
    T = spec.horizon
    parents, child = arr[:, :-1], arr[:, -1]
    active = np.isfinite(parents)
    child_on = np.isfinite(child)
    if np.any(parents[active] < 0) or np.any(parents[active] > T):
        raise DomainError(f"finite parent times must lie in [0, {T}]")
    if np.any(child[child_on] < T) or np.any(child[child_on] > 2 * T):
        raise DomainError(f"finite child times must lie in [{T}, {2 * T}]")
    n_on = active.sum(axis=1)
    out = n_on * math.log(params.theta0) + (params.p - n_on) * math.log1p(-params.theta0)
    if active.any():
        dens = np.zeros_like(parents)
        dens[active] = np.log(transmission_density(spec, parents[active]))
        out = out + dens.sum(axis=1)
    out = out + child_loglik_terms(active, child_on, hyp, params)
    if child_on.any():
        delay = np.clip(child[child_on] - T, 0.0, T)
        out[child_on] += np.log(transmission_density(spec, delay))
    return out


def loglik_continuous(
    cascade: ContinuousCascade, hyp: Hypothesis, params: ModelParams, spec: TransmissionSpec
) -> float:
    if cascade.p != params.p:
        raise ParameterError(f"cascade has p={cascade.p}, params say p={params.p}")
    if cascade.horizon != spec.horizon:
        raise ParameterError(f"cascade horizon {cascade.horizon} != spec horizon {spec.horizon}")
    return float(loglik_continuous_batch(cascade.as_row(), hyp, params, spec)[0])


def cascade_from_row(row: Sequence[float], model: str, horizon: float | None = None):
    row = tuple(float(x) for x in row)
    if model == "discrete":
        return DiscreteCascade(row[:-1], row[-1])
    return ContinuousCascade(row[:-1], row[-1], horizon)
