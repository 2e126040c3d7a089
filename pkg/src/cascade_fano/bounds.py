"""Exact KL divergences, mutual information, and Fano sample-size thresholds.

All quantities are in nats.

Two hypotheses ``A`` and ``B`` of size ``k`` sharing ``m`` parents induce
distributions that differ only through the child's conditional term.  With
``c`` active shared parents, ``u`` active parents only in ``A`` and ``v``
only in ``B`` (independent binomials), the KL divergence is an expectation
over ``(c, u, v)`` of the child log-ratio.  The grouped evaluator uses this;
the naive evaluator sums over every outcome in ``{1, inf}^p x {2, inf}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import CapacityError, ParameterError, UnsupportedError
from .model import (
    NEVER,
    Hypothesis,
    ModelParams,
    check_hypothesis,
    loglik_continuous_batch,
    loglik_discrete_batch,
)
from .transmission import TransmissionSpec, boundedness_constants

NAIVE_P_MAX = 16
GROUPED_P_MAX = 10_000
MI_TERMS_MAX = 10_000_000
LOG2 = math.log(2.0)


@dataclass(frozen=True)
class KlReport:
    pair: tuple[Hypothesis, Hypothesis]
    exact_kl: float | None
    bound: float
    overlap: int


@dataclass(frozen=True)
class ThresholdReport:
    p: int
    k: int
    theta0: float
    model: str
    numerator: float
    denominator: float
    n_star: float
    n_floor: int
    vacuous: bool
    kappa1: float | None = None
    kappa2: float | None = None
    lam: float | None = None
    T: float | None = None

    @property
    def kappa_ratio(self) -> float | None:
        if self.lam is not None and self.T is not None:
            return math.exp(self.lam * self.T)
        if self.kappa1 is None:
            return None
        return self.kappa2 / self.kappa1


def _check_theta0(theta0: float) -> None:
    if not (0.0 < theta0 < 1.0):
        raise ParameterError(f"theta0 must lie in (0, 1), got {theta0}")


def _binom_pmf(n: int, q: float) -> np.ndarray:
    i = np.arange(n + 1)
    return np.array([math.comb(n, j) for j in i], dtype=float) * q**i * (1.0 - q) ** (n - i)


# -- discrete KL ----------------------------------------------------------------


@lru_cache(maxsize=4096)
def _kl_by_overlap(k: int, overlap: int, theta0: float) -> float:
    params_k = k
    theta = -math.expm1(math.log(theta0) / params_k)
    a = np.arange(k + 1)
    log_off = a * math.log1p(-theta) + math.log1p(-theta0)
    off = np.exp(log_off)
    on = -np.expm1(log_off)
    log_on = np.log(on)

    shared = _binom_pmf(overlap, theta0)
    own = _binom_pmf(k - overlap, theta0)
    total = 0.0
    for c, wc in enumerate(shared):
        for u, wu in enumerate(own):
            aa = c + u
            for v, wv in enumerate(own):
                if u == v:
                    continue
                bb = c + v
                term = on[aa] * (log_on[aa] - log_on[bb]) + off[aa] * (log_off[aa] - log_off[bb])
                total += wc * wu * wv * term
    return max(total, 0.0)


def _check_pair(params: ModelParams, piA: Hypothesis, piB: Hypothesis) -> None:
    check_hypothesis(piA, params)
    check_hypothesis(piB, params)


def kl_exact_discrete(
    params: ModelParams, piA: Hypothesis, piB: Hypothesis, method: str = "grouped"
) -> float:
    """``KL(P(.|piA) || P(.|piB))`` for one discrete sample.

    ``method="grouped"`` sums over joint active counts; ``method="naive"``
    enumerates all ``2 ** (p + 1)`` outcomes through the likelihood.
    """
    _check_pair(params, piA, piB)
    if method == "grouped":
        if params.p > GROUPED_P_MAX:
            raise CapacityError(f"p={params.p} exceeds the grouped guard {GROUPED_P_MAX}")
        if piA == piB:
            return 0.0
        return _kl_by_overlap(params.k, piA.overlap(piB), params.theta0)
    if method == "naive":
        return _kl_naive_discrete(params, piA, piB)
    raise ParameterError(f"unknown KL method {method!r}")


def all_discrete_outcomes(p: int) -> np.ndarray:
    """Every discrete sample for ``p`` parents, ``2 ** (p + 1)`` rows."""
    bits = np.array(list(itertools.product((False, True), repeat=p + 1)), dtype=bool)
    times = np.full(bits.shape, NEVER)
    times[:, :-1][bits[:, :-1]] = 1.0
    times[bits[:, -1], -1] = 2.0
    return times


def _kl_naive_discrete(params: ModelParams, piA: Hypothesis, piB: Hypothesis) -> float:
    if params.p > NAIVE_P_MAX:
        raise CapacityError(f"p={params.p} exceeds the naive enumeration guard {NAIVE_P_MAX}")
    outcomes = all_discrete_outcomes(params.p)
    la = loglik_discrete_batch(outcomes, piA, params)
    lb = loglik_discrete_batch(outcomes, piB, params)
    return float(np.sum(np.exp(la) * (la - lb)))


def kl_bound_discrete(theta0: float) -> float:
    """Closed-form pairwise KL ceiling ``log(1 / theta0)`` for the discrete model."""
    _check_theta0(theta0)
    return -math.log(theta0)


# -- continuous KL ----------------------------------------------------------------


def _representative_rows(params: ModelParams, piA: Hypothesis, piB: Hypothesis, spec: TransmissionSpec):
    """One continuous sample per (c, u, v, child) configuration, with weights.

    Active parents get the mid-horizon time and the child ``1.5 T``; the
    remaining parents never fire.  Weights are the probabilities of the
    configuration under ``piA``'s activity model (the child weight is
    applied by the caller).
    """
    shared = sorted(set(piA.parents) & set(piB.parents))
    only_a = sorted(set(piA.parents) - set(piB.parents))
    only_b = sorted(set(piB.parents) - set(piA.parents))
    w_shared = _binom_pmf(len(shared), params.theta0)
    w_own = _binom_pmf(len(only_a), params.theta0)
    mid = 0.5 * spec.horizon
    rows, weights = [], []
    for c, u, v in itertools.product(range(len(shared) + 1), range(len(only_a) + 1), range(len(only_b) + 1)):
        row = np.full(params.p + 1, NEVER)
        for idx in shared[:c] + only_a[:u] + only_b[:v]:
            row[idx - 1] = mid
        for child in (NEVER, 1.5 * spec.horizon):
            r = row.copy()
            r[-1] = child
            rows.append(r)
            weights.append(w_shared[c] * w_own[u] * w_own[v])
    return np.array(rows), np.array(weights)


def kl_exact_continuous(
    params: ModelParams, piA: Hypothesis, piB: Hypothesis, spec: TransmissionSpec
) -> float:
    """``KL(P(.|piA) || P(.|piB))`` for one continuous sample.

    Evaluated through the continuous log-likelihood.  With a transmission
    density that does not depend on the parent set, every density factor
    cancels in the log-ratio, so the ratio is constant across times within
    each activation configuration and one representative sample suffices.
    """
    if spec.hypothesis_dependent:
        raise UnsupportedError("parent-set dependent transmission densities are not supported")
    _check_pair(params, piA, piB)
    if params.p > GROUPED_P_MAX:
        raise CapacityError(f"p={params.p} exceeds the grouped guard {GROUPED_P_MAX}")
    if piA == piB:
        return 0.0
    rows, weights = _representative_rows(params, piA, piB, spec)
    la = loglik_continuous_batch(rows, piA, params, spec)
    lb = loglik_continuous_batch(rows, piB, params, spec)
    # probability of the child outcome under piA given the activation pattern
    table = params.child_log_table()
    active = np.isfinite(rows[:, :-1])
    a = active[:, piA.columns].sum(axis=1)
    child_on = np.isfinite(rows[:, -1]).astype(np.intp)
    p_child = np.exp(table[child_on, a])
    return max(float(np.sum(weights * p_child * (la - lb))), 0.0)


def kl_bound_continuous(theta0: float, kappa1: float, kappa2: float) -> float:
    """Pairwise KL ceiling for the continuous model with density bounds ``kappa1 <= f <= kappa2``."""
    _check_theta0(theta0)
    if not (0.0 < kappa1 <= kappa2 < math.inf):
        raise ParameterError(f"need 0 < kappa1 <= kappa2 < inf, got {kappa1}, {kappa2}")
    return math.log(max(kappa2 / kappa1 * (1.0 / theta0 - (1.0 - theta0)), 1.0 / theta0))


def kl_bound(params: ModelParams, model: str, spec: TransmissionSpec | None = None) -> float:
    if model == "discrete":
        return kl_bound_discrete(params.theta0)
    if model == "continuous":
        if spec is None:
            raise ParameterError("continuous model needs a transmission spec")
        kappa1, kappa2 = boundedness_constants(spec)
        return kl_bound_continuous(params.theta0, kappa1, kappa2)
    raise ParameterError(f"unknown model {model!r}")


# -- mutual information -----------------------------------------------------------


def overlap_pair_counts(p: int, k: int) -> dict[int, int]:
    """Number of ordered hypothesis pairs with each overlap size."""
    n_hyp = math.comb(p, k)
    return {
        m: n_hyp * math.comb(k, m) * math.comb(p - k, k - m)
        for m in range(max(0, 2 * k - p), k + 1)
    }


def pairwise_average_kl(params: ModelParams, model: str = "discrete", spec: TransmissionSpec | None = None) -> float:
    """``(1/|F|^2) sum_{A,B} KL(A || B)`` over all ordered hypothesis pairs."""
    if model == "continuous":
        if spec is None:
            raise ParameterError("continuous model needs a transmission spec")
        # the continuous KL equals the discrete one for parent-set independent densities
        if spec.hypothesis_dependent:
            raise UnsupportedError("parent-set dependent transmission densities are not supported")
    n_hyp = math.comb(params.p, params.k)
    total = 0.0
    for m, count in overlap_pair_counts(params.p, params.k).items():
        if m < params.k:
            total += count * _kl_by_overlap(params.k, m, params.theta0)
    return total / n_hyp**2


def mi_pairwise_bound(
    n: int,
    params: ModelParams,
    model: str = "discrete",
    spec: TransmissionSpec | None = None,
    exact: bool = False,
) -> float:
    """Upper bound on ``I(truth; S)`` for ``n`` samples.

    ``exact=False`` gives ``n`` times the closed-form KL ceiling;
    ``exact=True`` gives ``n`` times the average exact pairwise KL.
    """
    if int(n) != n or n < 0:
        raise ParameterError(f"sample count must be a non-negative integer, got {n}")
    if exact:
        return n * pairwise_average_kl(params, model, spec)
    return n * kl_bound(params, model, spec)


def mi_exact_single_sample(params: ModelParams, hypotheses: list[Hypothesis] | None = None) -> float:
    """Exact ``I(truth; t)`` for one discrete sample under a uniform prior.

    The prior is uniform over ``hypotheses`` (all ``k``-subsets by default).
    Computed as the average KL from each hypothesis to the prior mixture,
    with the mixture accumulated in log space.
    """
    if hypotheses is None:
        cols = np.array(list(itertools.combinations(range(params.p), params.k)), dtype=np.intp)
    else:
        for h in hypotheses:
            check_hypothesis(h, params)
        cols = np.array([h.columns for h in hypotheses], dtype=np.intp)
    n_hyp = len(cols)
    if n_hyp * 2 ** (params.p + 1) > MI_TERMS_MAX:
        raise CapacityError(
            f"{n_hyp} hypotheses x 2^{params.p + 1} outcomes exceeds the guard {MI_TERMS_MAX}"
        )
    if n_hyp == 1:
        return 0.0
    patterns = np.array(list(itertools.product((False, True), repeat=params.p)), dtype=bool)
    n_on = patterns.sum(axis=1)
    log_base = n_on * math.log(params.theta0) + (params.p - n_on) * math.log1p(-params.theta0)
    a = patterns[:, cols].sum(axis=2)  # patterns x hypotheses
    table = params.child_log_table()
    mi = 0.0
    for child in (0, 1):
        log_q = table[child][a]
        log_mix = logsumexp(log_q, axis=1, keepdims=True) - math.log(n_hyp)
        terms = np.exp(log_q) * (log_q - log_mix)
        mi += float(np.sum(np.exp(log_base)[:, None] * terms)) / n_hyp
    return max(mi, 0.0)


# -- Fano thresholds -----------------------------------------------------------


def log_binom(p: int, k: int) -> float:
    """Exact ``log C(p, k)`` via log-gamma."""
    return float(gammaln(p + 1) - gammaln(k + 1) - gammaln(p - k + 1))


def log_binom_lower(p: int, k: int) -> float:
    """The lower bound ``k (log p - log k)`` on ``log C(p, k)``."""
    if not (1 <= k <= p):
        raise ParameterError(f"need 1 <= k <= p, got p={p}, k={k}")
    return k * (math.log(p) - math.log(k))


def fano_numerator(p: int, k: int) -> float:
    return k * math.log(p) - k * math.log(k) - 2 * LOG2


def _threshold(p, k, theta0, model, kl_max, **extra) -> ThresholdReport:
    numerator = fano_numerator(p, k)
    denominator = 2.0 * kl_max
    n_star = numerator / denominator
    vacuous = numerator <= 0.0
    n_floor = 0 if vacuous else int(math.floor(n_star))
    return ThresholdReport(
        p=p, k=k, theta0=theta0, model=model, numerator=numerator, denominator=denominator,
        n_star=n_star, n_floor=n_floor, vacuous=vacuous, **extra,
    )


def fano_threshold_discrete(p: int, k: int, theta0: float) -> ThresholdReport:
    """Sample count at or below which any estimator fails with probability >= 1/2."""
    ModelParams(p, k, theta0)
    return _threshold(p, k, theta0, "discrete", kl_bound_discrete(theta0))


def fano_threshold_continuous(
    p: int,
    k: int,
    theta0: float,
    kappa1: float | None = None,
    kappa2: float | None = None,
    *,
    lam: float | None = None,
    T: float | None = None,
) -> ThresholdReport:
    """Continuous-model threshold from density bounds, or from ``(lam, T)`` of a
    censored exponential, whose bound ratio is ``exp(lam * T)``."""
    ModelParams(p, k, theta0)
    if lam is not None or T is not None:
        if lam is None or T is None or kappa1 is not None or kappa2 is not None:
            raise ParameterError("give either (kappa1, kappa2) or (lam, T)")
        if not (lam > 0 and T > 0):
            raise ParameterError(f"lam and T must be positive, got {lam}, {T}")
        ratio = math.exp(lam * T)
        _check_theta0(theta0)
        kl_max = math.log(max(ratio * (1.0 / theta0 - (1.0 - theta0)), 1.0 / theta0))
        return _threshold(p, k, theta0, "continuous", kl_max, lam=lam, T=T)
    if kappa1 is None or kappa2 is None:
        raise ParameterError("give either (kappa1, kappa2) or (lam, T)")
    kl_max = kl_bound_continuous(theta0, kappa1, kappa2)
    return _threshold(p, k, theta0, "continuous", kl_max, kappa1=kappa1, kappa2=kappa2)


def fano_threshold(params: ModelParams, model: str, spec: TransmissionSpec | None = None) -> ThresholdReport:
    if model == "discrete":
        return fano_threshold_discrete(params.p, params.k, params.theta0)
    if spec is None:
        raise ParameterError("continuous model needs a transmission spec")
    if spec.family == "exponential":
        return fano_threshold_continuous(params.p, params.k, params.theta0, lam=spec.lam, T=spec.horizon)
    kappa1, kappa2 = boundedness_constants(spec)
    return fano_threshold_continuous(params.p, params.k, params.theta0, kappa1, kappa2)


def kl_sweep(
    params: ModelParams,
    model: str = "discrete",
    spec: TransmissionSpec | None = None,
    exact: bool = True,
):
    """KlReport for every ordered pair of hypotheses, in lexicographic order."""
    hyps = [Hypothesis(tuple(c)) for c in itertools.combinations(range(1, params.p + 1), params.k)]
    bound = kl_bound(params, model, spec)
    for a in hyps:
        for b in hyps:
            yield kl_report(params, a, b, model, spec, exact=exact, bound=bound)


def kl_report(params, piA, piB, model="discrete", spec=None, exact=True, bound=None) -> KlReport:
    if bound is None:
        bound = kl_bound(params, model, spec)
    value = None
    if exact:
        if model == "discrete":
            value = kl_exact_discrete(params, piA, piB)
        else:
            value = kl_exact_continuous(params, piA, piB, spec)
    return KlReport(pair=(piA, piB), exact_kl=value, bound=bound, overlap=piA.overlap(piB))
