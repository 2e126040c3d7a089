"""Parent-set estimators run against simulated datasets."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import CapacityError, ParameterError
from .model import (
    MODELS,
    Hypothesis,
    ModelParams,
    cascade_from_row,
    loglik_continuous_batch,
    loglik_discrete_batch,
)
from .transmission import TransmissionSpec

HYPOTHESES_MAX = 10_000_000
# upper bound on n * hypotheses held in memory at once during a scan
SCAN_BLOCK = 4_000_000
# scores within this relative distance of the maximum count as tied
TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Dataset:
    """``n`` cascades of one model kind, stored as an ``(n, p + 1)`` time array."""

    params: ModelParams
    model: str
    times: np.ndarray
    spec: TransmissionSpec | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ParameterError(f"unknown model {self.model!r}")
        if self.model == "continuous" and self.spec is None:
            raise ParameterError("continuous datasets need a transmission spec")
        times = np.asarray(self.times, dtype=float)
        if times.size == 0:
            times = times.reshape(0, self.params.p + 1)
        if times.ndim != 2 or times.shape[1] != self.params.p + 1:
            raise ParameterError(f"dataset rows must have p + 1 = {self.params.p + 1} entries")
        object.__setattr__(self, "times", times)

    @property
    def n(self) -> int:
        return self.times.shape[0]

    @property
    def samples(self) -> list:
        horizon = self.spec.horizon if self.spec is not None else None
        return [cascade_from_row(row, self.model, horizon) for row in self.times]

    @property
    def active(self) -> np.ndarray:
        return np.isfinite(self.times[:, :-1])

    @property
    def child_active(self) -> np.ndarray:
        return np.isfinite(self.times[:, -1])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.params == other.params
            and self.model == other.model
            and self.spec == other.spec
            and np.array_equal(self.times, other.times)
        )


def enumerate_hypotheses(p: int, k: int) -> Iterator[Hypothesis]:
    """All ``k``-subsets of ``{1..p}`` in lexicographic order."""
    if not (1 <= k <= p):
        raise ParameterError(f"need 1 <= k <= p, got p={p}, k={k}")
    if math.comb(p, k) > HYPOTHESES_MAX:
        raise CapacityError(f"C({p},{k}) exceeds the hypothesis guard {HYPOTHESES_MAX}")
    for combo in itertools.combinations(range(1, p + 1), k):
        yield Hypothesis(combo)


def _hypothesis_columns(p: int, k: int) -> np.ndarray:
    if math.comb(p, k) > HYPOTHESES_MAX:
        raise CapacityError(f"C({p},{k}) exceeds the hypothesis guard {HYPOTHESES_MAX}")
    return np.array(list(itertools.combinations(range(p), k)), dtype=np.intp).reshape(-1, k)


def _check_nonempty(data: Dataset) -> None:
    if data.n < 1:
        raise ParameterError("estimators need at least one sample")


def reduced_scores(data: Dataset) -> np.ndarray:
    """Child-term log-likelihood of every hypothesis, in lexicographic order.

    Each hypothesis is scored from its integer counts of (child outcome,
    active parents) cells, so hypotheses with identical counts get
    bit-identical scores.
    """
    params = data.params
    k = params.k
    cols = _hypothesis_columns(params.p, k)
    active = data.active
    child = data.child_active.astype(np.intp)
    table = params.child_log_table().ravel()  # cell = child * (k + 1) + a
    scores = np.empty(len(cols))
    block = max(1, SCAN_BLOCK // max(data.n, 1))
    for start in range(0, len(cols), block):
        sub = cols[start : start + block]
        cell = child[:, None] * (k + 1) + active[:, sub].sum(axis=2)
        counts = np.stack([(cell == j).sum(axis=0) for j in range(2 * (k + 1))], axis=1)
        scores[start : start + len(sub)] = counts @ table
    return scores


def full_scores(data: Dataset) -> np.ndarray:
    """Complete log-likelihood of every hypothesis, including parent-marginal terms."""
    params = data.params
    out = []
    for hyp in enumerate_hypotheses(params.p, params.k):
        if data.model == "discrete":
            ll = loglik_discrete_batch(data.times, hyp, params)
        else:
            ll = loglik_continuous_batch(data.times, hyp, params, data.spec)
        out.append(math.fsum(ll))
    return np.array(out)


def _first_argmax(scores: np.ndarray) -> int:
    best = scores.max()
    tol = TIE_RTOL * max(1.0, abs(best))
    return int(np.flatnonzero(scores >= best - tol)[0])


def ml_estimate(data: Dataset, objective: str = "reduced") -> Hypothesis:
    """Exhaustive maximum-likelihood parent set; ties go to the lexicographically first."""
    _check_nonempty(data)
    if objective == "reduced":
        scores = reduced_scores(data)
    elif objective == "full":
        scores = full_scores(data)
    else:
        raise ParameterError(f"unknown objective {objective!r}")
    cols = _hypothesis_columns(data.params.p, data.params.k)
    return Hypothesis(tuple(cols[_first_argmax(scores)] + 1))


def absence_scores(data: Dataset) -> np.ndarray:
    """Per-parent count of samples where the parent fired and the child did not."""
    return (data.active & ~data.child_active[:, None]).sum(axis=0)


def absence_score_estimate(data: Dataset) -> Hypothesis:
    """The ``k`` parents least often active while the child stays inactive."""
    _check_nonempty(data)
    order = np.argsort(absence_scores(data), kind="stable")
    return Hypothesis(tuple(sorted(order[: data.params.k] + 1)))


ESTIMATORS = {
    "ml": ml_estimate,
    "absence": absence_score_estimate,
}


def get_estimator(name: str):
    try:
        return ESTIMATORS[name]
    except KeyError:
        raise ParameterError(f"unknown estimator {name!r}; choose from {sorted(ESTIMATORS)}") from None
