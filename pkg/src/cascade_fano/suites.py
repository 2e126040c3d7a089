"""Exhaustive checks of the KL and mutual-information inequalities.

Each suite walks a grid of small instances and returns one
:class:`CheckOutcome` per instance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .bounds import (
    kl_bound_continuous,
    kl_bound_discrete,
    kl_exact_continuous,
    kl_exact_discrete,
    mi_exact_single_sample,
    pairwise_average_kl,
)
from .inference import enumerate_hypotheses
from .model import ModelParams
from .transmission import TransmissionSpec, boundedness_constants

THETA0_GRID = (0.3, 0.5, 0.7)
LAMBDA_GRID = (0.5, 1.0, 2.0)
HORIZON_GRID = (0.5, 1.0)
KL_ATOL = 1e-12
CANCEL_ATOL = 1e-9


@dataclass(frozen=True)
class CheckOutcome:
    name: str
    label: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} {self.label} {self.detail}".rstrip()


def discrete_instances(pmax: int, kmax: int, theta0s=THETA0_GRID):
    for p in range(2, pmax + 1):
        for k in range(1, min(kmax, p - 1) + 1):
            for theta0 in theta0s:
                yield ModelParams(p, k, theta0)


def _pair_kls(params: ModelParams):
    hyps = list(enumerate_hypotheses(params.p, params.k))
    for a, b in itertools.product(hyps, hyps):
        yield a, b, kl_exact_discrete(params, a, b)


def lemma1_suite(pmax: int = 8, kmax: int = 3) -> list[CheckOutcome]:
    """Every pair's exact KL against ``log(1/theta0)``, plus the location of the maximum.

    The maximum must sit at a pair with the smallest overlap available,
    which is zero whenever ``2k <= p``.
    """
    out = []
    for params in discrete_instances(pmax, kmax):
        bound = kl_bound_discrete(params.theta0)
        worst, argmax_overlap, min_overlap = -1.0, None, params.k
        by_overlap: dict[int, float] = {}
        ok = True
        for a, b, kl in _pair_kls(params):
            m = a.overlap(b)
            min_overlap = min(min_overlap, m)
            by_overlap[m] = max(by_overlap.get(m, 0.0), kl)
            if kl > bound + KL_ATOL or kl < 0:
                ok = False
            if kl > worst:
                worst, argmax_overlap = kl, m
        # a tie with a minimum-overlap pair also counts
        at_min = by_overlap[min_overlap] >= worst - KL_ATOL
        monotone = all(
            by_overlap[m] >= by_overlap[m + 1] - KL_ATOL
            for m in sorted(by_overlap)
            if m + 1 in by_overlap
        )
        label = f"p={params.p} k={params.k} theta0={params.theta0}"
        out.append(CheckOutcome(
            "lemma1", label, ok and at_min and monotone,
            f"max_kl={worst:.15g} bound={bound:.15g} argmax_overlap={argmax_overlap} "
            f"min_overlap={min_overlap}",
        ))
    return out


def lemma2_suite(pmax: int = 6, kmax: int = 2) -> list[CheckOutcome]:
    """Continuous KL against its bound, and equality with the discrete KL."""
    out = []
    for params in discrete_instances(pmax, kmax):
        hyps = list(enumerate_hypotheses(params.p, params.k))
        for lam, T in itertools.product(LAMBDA_GRID, HORIZON_GRID):
            spec = TransmissionSpec.exponential(lam, T)
            bound = kl_bound_continuous(params.theta0, *boundedness_constants(spec))
            ok, worst, gap = True, 0.0, 0.0
            for a, b in itertools.product(hyps, hyps):
                kc = kl_exact_continuous(params, a, b, spec)
                kd = kl_exact_discrete(params, a, b)
                worst = max(worst, kc)
                gap = max(gap, abs(kc - kd))
                if kc > bound + KL_ATOL or abs(kc - kd) > CANCEL_ATOL:
                    ok = False
            label = f"p={params.p} k={params.k} theta0={params.theta0} lambda={lam} T={T}"
            out.append(CheckOutcome(
                "lemma2", label, ok,
                f"max_kl={worst:.15g} bound={bound:.15g} max_gap_vs_discrete={gap:.3g}",
            ))
    return out


def mi_chain_suite(pmax: int = 8, kmax: int = 3) -> list[CheckOutcome]:
    """``I(truth; t) <= average pairwise KL <= log(1/theta0)`` on each instance."""
    out = []
    for params in discrete_instances(pmax, kmax):
        mi = mi_exact_single_sample(params)
        avg = pairwise_average_kl(params)
        bound = kl_bound_discrete(params.theta0)
        ok = mi <= avg + KL_ATOL and avg <= bound + KL_ATOL
        label = f"p={params.p} k={params.k} theta0={params.theta0}"
        out.append(CheckOutcome(
            "mi-chain", label, ok, f"mi={mi:.15g} pairwise={avg:.15g} bound={bound:.15g}"
        ))
    return out


SUITES = {
    "lemma1": lemma1_suite,
    "lemma2": lemma2_suite,
    "mi-chain": mi_chain_suite,
}
