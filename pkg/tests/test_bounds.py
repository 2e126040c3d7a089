import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from cascade_fano import (
    CapacityError,
    Hypothesis,
    ModelParams,
    ParameterError,
    TransmissionSpec,
    fano_threshold_continuous,
    fano_threshold_discrete,
    kl_bound_continuous,
    kl_bound_discrete,
    kl_exact_continuous,
    kl_exact_discrete,
    log_binom_lower,
    mi_exact_single_sample,
    mi_pairwise_bound,
)
from cascade_fano.bounds import (
    fano_threshold,
    kl_sweep,
    log_binom,
    overlap_pair_counts,
    pairwise_average_kl,
)
from cascade_fano.inference import enumerate_hypotheses


# -- independent brute-force oracles (pure Python, arbitrary precision) ------------


def brute_probs(p, k, theta0, parents, dps=30):
    """P(t | parents) for every outcome, keyed by (parent_bits, child_bit)."""
    mpmath.mp.dps = dps
    th0 = mpmath.mpf(theta0)
    th = 1 - th0 ** (mpmath.mpf(1) / k)
    out = {}
    for bits in itertools.product((0, 1), repeat=p):
        base = mpmath.mpf(1)
        for b in bits:
            base *= th0 if b else 1 - th0
        a = sum(bits[i - 1] for i in parents)
        off = (1 - th) ** a * (1 - th0)
        out[bits, 0] = base * off
        out[bits, 1] = base * (1 - off)
    return out


def brute_kl(p, k, theta0, a, b):
    pa, pb = brute_probs(p, k, theta0, a), brute_probs(p, k, theta0, b)
    return float(mpmath.fsum(pa[t] * mpmath.log(pa[t] / pb[t]) for t in pa))


def brute_mi(p, k, theta0):
    hyps = list(itertools.combinations(range(1, p + 1), k))
    tables = [brute_probs(p, k, theta0, h) for h in hyps]
    mix = {t: mpmath.fsum(tb[t] for tb in tables) / len(hyps) for t in tables[0]}
    return float(
        mpmath.fsum(tb[t] * mpmath.log(tb[t] / mix[t]) for tb in tables for t in tb) / len(hyps)
    )


# -- discrete KL -----------------------------------------------------------------


def test_kl_pin_hand_formula():
    hand = 0.25 * (0.75 * math.log(1.5) + 0.25 * math.log(0.5)) + 0.25 * (
        0.5 * math.log(2 / 3) + 0.5 * math.log(2)
    )
    oracle = brute_kl(2, 1, 0.5, (1,), (2,))
    assert oracle == pytest.approx(hand, abs=1e-15)
    params = ModelParams(2, 1, 0.5)
    for method in ("grouped", "naive"):
        assert abs(kl_exact_discrete(params, Hypothesis.of(1), Hypothesis.of(2), method) - oracle) < 1e-9
    assert kl_exact_discrete(params, Hypothesis.of(1), Hypothesis.of(2)) == pytest.approx(0.0686633, abs=1e-7)


@pytest.mark.parametrize(
    "p,k,theta0,a,b",
    [
        (3, 1, 0.3, (1,), (3,)),
        (4, 2, 0.7, (1, 2), (2, 3)),
        (5, 2, 0.5, (1, 2), (3, 4)),
        (6, 3, 0.2, (1, 2, 3), (1, 5, 6)),
    ],
)
def test_kl_against_arbitrary_precision_enumeration(p, k, theta0, a, b):
    params = ModelParams(p, k, theta0)
    assert kl_exact_discrete(params, Hypothesis(a), Hypothesis(b)) == pytest.approx(
        brute_kl(p, k, theta0, a, b), abs=1e-13
    )


@pytest.mark.parametrize(
    "p,k,theta0",
    [(2, 1, 0.5), (4, 2, 0.3), (7, 3, 0.7), (9, 2, 0.1), (10, 4, 0.5), (12, 3, 0.9), (12, 5, 0.4)],
)
def test_grouped_equals_naive(p, k, theta0):
    params = ModelParams(p, k, theta0)
    rng = np.random.default_rng(p * 100 + k)
    for _ in range(4):
        a = Hypothesis(tuple(sorted(rng.choice(p, k, replace=False) + 1)))
        b = Hypothesis(tuple(sorted(rng.choice(p, k, replace=False) + 1)))
        assert abs(
            kl_exact_discrete(params, a, b, "grouped") - kl_exact_discrete(params, a, b, "naive")
        ) < 1e-12


def test_kl_identical_is_zero():
    params = ModelParams(5, 2, 0.5)
    h = Hypothesis.of(2, 4)
    assert kl_exact_discrete(params, h, h) == 0.0
    assert kl_exact_discrete(params, h, h, "naive") == pytest.approx(0.0, abs=1e-15)


def test_naive_guard():
    params = ModelParams(17, 1, 0.5)
    with pytest.raises(CapacityError):
        kl_exact_discrete(params, Hypothesis.of(1), Hypothesis.of(2), "naive")
    with pytest.raises(CapacityError):
        kl_exact_discrete(ModelParams(10_001, 1, 0.5), Hypothesis.of(1), Hypothesis.of(2))


def test_grouped_scales_to_large_p():
    params = ModelParams(5000, 3, 0.5)
    kl = kl_exact_discrete(params, Hypothesis.of(1, 2, 3), Hypothesis.of(4, 5, 6))
    # KL depends on (k, overlap, theta0) only
    assert kl == kl_exact_discrete(ModelParams(6, 3, 0.5), Hypothesis.of(1, 2, 3), Hypothesis.of(4, 5, 6))


def test_kl_bound_discrete_values():
    assert kl_bound_discrete(0.5) == pytest.approx(0.693147, abs=1e-6)
    assert kl_bound_discrete(1 / math.e) == pytest.approx(1.0, abs=1e-15)
    assert kl_bound_discrete(0.9) == pytest.approx(-math.log(0.9), abs=1e-15)
    assert kl_bound_discrete(0.9) == pytest.approx(0.105361, abs=1e-6)
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ParameterError):
            kl_bound_discrete(bad)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.data(), st.floats(0.01, 0.99))
def test_kl_below_bound(p, data, theta0):
    k = data.draw(st.integers(1, min(p - 1, 6)))
    params = ModelParams(p, k, theta0)
    cols = data.draw(st.permutations(range(1, p + 1)))
    a = Hypothesis(tuple(sorted(cols[:k])))
    b = Hypothesis(tuple(sorted(data.draw(st.permutations(range(1, p + 1)))[:k])))
    kl = kl_exact_discrete(params, a, b)
    assert 0 <= kl <= kl_bound_discrete(theta0) + 1e-12


def test_disjoint_pairs_maximise_and_overlap_monotone():
    for p, k, theta0 in [(6, 2, 0.5), (8, 3, 0.3), (7, 3, 0.7)]:
        params = ModelParams(p, k, theta0)
        by_overlap = {}
        for r in kl_sweep(params):
            by_overlap.setdefault(r.overlap, []).append(r.exact_kl)
        maxes = [max(by_overlap[m]) for m in sorted(by_overlap)]
        assert maxes[0] == max(maxes)
        assert all(x >= y - 1e-15 for x, y in zip(maxes, maxes[1:]))


# -- continuous KL -----------------------------------------------------------------


def continuous_kl_by_quadrature(theta0, spec, nodes=10):
    """KL for p=2, k=1, piA={1}, piB={2} by tensor quadrature over all times.

    Written from the model definition directly, without the package likelihood.
    """
    from cascade_fano.transmission import transmission_density

    theta = 1 - theta0
    x, w = np.polynomial.legendre.leggauss(nodes)
    T = spec.horizon
    tn, tw = 0.5 * T * (x + 1), 0.5 * T * w
    f = transmission_density(spec, tn)

    def child(a, on):
        off = (1 - theta) ** a * (1 - theta0)
        return 1 - off if on else off

    total = 0.0
    for b1, b2, bc in itertools.product((0, 1), repeat=3):
        on = [b for b in (b1, b2, bc) if b]
        # full integrand P(t|A) log(P(t|A)/P(t|B)) on the tensor grid of active times
        dens = np.ones(1)
        weights = np.ones(1)
        for _ in on:
            dens = np.multiply.outer(dens, f)
            weights = np.multiply.outer(weights, tw)
        src = (theta0 if b1 else 1 - theta0) * (theta0 if b2 else 1 - theta0)
        pa = src * child(b1, bc) * dens
        pb = src * child(b2, bc) * dens
        total += float(np.sum(weights * pa * np.log(pa / pb)))
    return total


@pytest.mark.parametrize("lam,T", [(1.0, 1.0), (2.0, 0.5), (0.5, 1.0)])
def test_continuous_kl_cancellation_by_quadrature(lam, T):
    spec = TransmissionSpec.exponential(lam, T)
    params = ModelParams(2, 1, 0.5)
    quad = continuous_kl_by_quadrature(0.5, spec)
    value = kl_exact_continuous(params, Hypothesis.of(1), Hypothesis.of(2), spec)
    assert value == pytest.approx(quad, abs=1e-9)
    assert value == pytest.approx(0.0686633, abs=1e-7)


def test_continuous_equals_discrete():
    spec = TransmissionSpec.exponential(1.0, 1.0)
    for p, k, theta0 in [(4, 2, 0.3), (6, 2, 0.7), (7, 3, 0.5)]:
        params = ModelParams(p, k, theta0)
        hyps = list(enumerate_hypotheses(p, k))
        for a, b in itertools.product(hyps[:6], hyps[-6:]):
            assert abs(kl_exact_continuous(params, a, b, spec) - kl_exact_discrete(params, a, b)) < 1e-9


def test_continuous_kl_identical_zero():
    spec = TransmissionSpec.rayleigh(1.0, 1.0)
    params = ModelParams(4, 2, 0.5)
    assert kl_exact_continuous(params, Hypothesis.of(1, 2), Hypothesis.of(1, 2), spec) == 0.0


def test_kl_bound_continuous_values():
    assert kl_bound_continuous(0.5, 1.0, 1.0) == pytest.approx(math.log(2), abs=1e-15)
    kappa1, kappa2 = 1 / (math.e - 1), math.e / (math.e - 1)
    assert kl_bound_continuous(0.5, kappa1, kappa2) == pytest.approx(1 + math.log(1.5), abs=1e-12)
    assert kl_bound_continuous(0.5, kappa1, kappa2) == pytest.approx(1.405465, abs=1e-6)
    assert kl_bound_continuous(0.9, 2.0, 2.0) == pytest.approx(0.105361, abs=1e-6)
    with pytest.raises(ParameterError):
        kl_bound_continuous(0.5, 2.0, 1.0)
    with pytest.raises(ParameterError):
        kl_bound_continuous(0.5, 0.0, 1.0)


@given(st.floats(0.01, 0.99), st.floats(1.0, 50.0))
def test_continuous_bound_branches(theta0, ratio):
    value = kl_bound_continuous(theta0, 1.0, ratio)
    discrete = kl_bound_discrete(theta0)
    assert value >= discrete - 1e-15
    if ratio < 1 / (1 - theta0 * (1 - theta0)):
        assert value == pytest.approx(discrete, abs=1e-15)


# -- mutual information ---------------------------------------------------------------


def test_mi_pin():
    oracle = brute_mi(2, 1, 0.5)
    value = mi_exact_single_sample(ModelParams(2, 1, 0.5))
    assert value == pytest.approx(oracle, abs=1e-13)
    assert abs(value - 0.0169108) < 1e-6


@pytest.mark.parametrize("p,k,theta0", [(3, 1, 0.3), (4, 2, 0.5), (5, 2, 0.8), (6, 3, 0.05)])
def test_mi_against_arbitrary_precision(p, k, theta0):
    assert mi_exact_single_sample(ModelParams(p, k, theta0)) == pytest.approx(
        brute_mi(p, k, theta0), abs=1e-12
    )


def test_mi_single_hypothesis_is_zero():
    params = ModelParams(4, 2, 0.5)
    assert mi_exact_single_sample(params, [Hypothesis.of(1, 3)]) == 0.0


def test_mi_guard():
    with pytest.raises(CapacityError):
        mi_exact_single_sample(ModelParams(22, 1, 0.5))


def test_mi_small_theta0_stays_finite():
    value = mi_exact_single_sample(ModelParams(10, 2, 1e-6))
    assert math.isfinite(value) and value >= 0


def test_pairwise_bound_values():
    params = ModelParams(2, 1, 0.5)
    assert mi_pairwise_bound(0, params) == 0.0
    assert mi_pairwise_bound(1, params) == pytest.approx(math.log(2))
    assert mi_pairwise_bound(1, params, exact=True) == pytest.approx(2 * 0.0686632680417568 / 4, abs=1e-12)
    assert mi_pairwise_bound(1, params, exact=True) == pytest.approx(0.0343316, abs=1e-7)
    spec = TransmissionSpec.exponential(1.0, 1.0)
    assert mi_pairwise_bound(3, params, "continuous", spec) == pytest.approx(3 * (1 + math.log(1.5)))


def test_pairwise_average_matches_direct_sum():
    for p, k, theta0 in [(5, 2, 0.4), (6, 3, 0.6)]:
        params = ModelParams(p, k, theta0)
        hyps = list(enumerate_hypotheses(p, k))
        direct = math.fsum(kl_exact_discrete(params, a, b) for a in hyps for b in hyps) / len(hyps) ** 2
        assert pairwise_average_kl(params) == pytest.approx(direct, abs=1e-14)
        assert sum(overlap_pair_counts(p, k).values()) == len(hyps) ** 2


def test_mi_chain_small_instances():
    for p, k, theta0 in [(3, 1, 0.5), (5, 2, 0.3), (7, 3, 0.7)]:
        params = ModelParams(p, k, theta0)
        mi = mi_exact_single_sample(params)
        assert mi <= mi_pairwise_bound(1, params, exact=True) + 1e-12
        assert mi_pairwise_bound(1, params, exact=True) <= kl_bound_discrete(theta0) + 1e-12


# -- log-binomial and thresholds ----------------------------------------------------------


def test_log_binom_lower_examples():
    assert log_binom_lower(17, 1) == pytest.approx(math.log(17))
    assert log_binom_lower(10, 2) == pytest.approx(3.2189, abs=1e-4)
    assert log_binom(10, 2) == pytest.approx(math.log(45))
    assert log_binom(10, 2) == pytest.approx(3.8067, abs=1e-4)
    assert log_binom_lower(9, 9) == 0.0


def test_log_binom_lower_everywhere():
    for p in range(1, 10_001):
        k = np.arange(1, p + 1)
        exact = gammaln(p + 1) - gammaln(k + 1) - gammaln(p - k + 1)
        lower = k * (math.log(p) - np.log(k))
        assert np.all(lower <= exact + 1e-9 * np.maximum(1, exact)), p


def test_log_binom_lower_matches_vector_form():
    for p, k in [(10, 3), (1000, 7), (10_000, 5000)]:
        assert log_binom_lower(p, k) <= log_binom(p, k) + 1e-9


def test_threshold_discrete_values():
    r = fano_threshold_discrete(1000, 5, 0.5)
    oracle = (5 * math.log(1000) - 5 * math.log(5) - 2 * math.log(2)) / (2 * math.log(2))
    assert r.n_star == pytest.approx(oracle, abs=1e-12)
    assert abs(r.n_star - 18.11) < 0.01
    assert r.n_floor == 18 and not r.vacuous
    r = fano_threshold_discrete(100, 2, 0.5)
    assert r.n_star == pytest.approx(4.64, abs=0.01)
    assert r.n_floor == 4
    r = fano_threshold_discrete(4, 2, 0.5)
    assert r.numerator == 0.0 and r.n_floor == 0 and r.vacuous


def test_threshold_continuous_values():
    r = fano_threshold_continuous(1000, 5, 0.5, lam=1.0, T=1.0)
    assert abs(r.n_star - 8.93) < 0.01
    assert r.n_star == pytest.approx(25.1052924716203 / (2 * 1.405465108108164), rel=1e-12)
    flat = fano_threshold_continuous(1000, 5, 0.5, 0.7, 0.7)
    assert flat.n_star == pytest.approx(fano_threshold_discrete(1000, 5, 0.5).n_star, rel=1e-15)
    with pytest.raises(ParameterError):
        fano_threshold_continuous(1000, 5, 0.5, 2.0, 1.0)
    with pytest.raises(ParameterError):
        fano_threshold_continuous(1000, 5, 0.5, 1.0, 2.0, lam=1.0, T=1.0)


def test_threshold_from_spec_uses_corollary_ratio():
    params = ModelParams(200, 3, 0.4)
    spec = TransmissionSpec.exponential(2.0, 1.5)
    via_spec = fano_threshold(params, "continuous", spec)
    via_kappas = fano_threshold_continuous(200, 3, 0.4, spec.kappa1, spec.kappa2)
    assert via_spec.n_star == pytest.approx(via_kappas.n_star, rel=1e-12)
    assert via_spec.kappa_ratio == pytest.approx(math.exp(3.0), rel=1e-15)


@settings(max_examples=200)
@given(st.integers(2, 100_000), st.data(), st.floats(0.01, 0.99), st.floats(1.0, 100.0))
def test_threshold_consistency(p, data, theta0, ratio):
    k = data.draw(st.integers(1, min(p - 1, 50)))
    disc = fano_threshold_discrete(p, k, theta0)
    cont = fano_threshold_continuous(p, k, theta0, 1.0, ratio)
    assert cont.n_star <= disc.n_star + 1e-12 if disc.numerator > 0 else True
    for r in (disc, cont):
        bound = r.denominator / 2
        assert r.n_floor >= 0
        if not r.vacuous:
            assert r.n_floor * 2 * bound + 2 * math.log(2) <= k * (math.log(p) - math.log(k)) + 2 * bound + 1e-9
            assert r.n_floor <= r.n_star < r.n_floor + 1
            assert r.n_floor * r.denominator <= r.numerator + 1e-9
