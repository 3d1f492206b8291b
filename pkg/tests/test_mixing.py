import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dyncm import _kernels
from dyncm.dynamics import config_space, k_from_alpha
from dyncm.halfedge import build_degree_sequence, sample_uniform_configuration
from dyncm.mixing import (
    BEYOND_HORIZON,
    EmpiricalDistribution,
    MixingPoint,
    debiased_tv,
    decomposition_bounds,
    estimate_distribution,
    exact_annealed_distribution,
    exact_joint_law,
    mixing_time,
    theory_profile,
    tv_distance,
    uniform_baseline,
)
from dyncm.regularity import degree_statistics

C_STAT = 1.081266324737945
BIVALUED = build_degree_sequence([3] * 5000 + [4] * 5000, "R*")


def simplex(n):
    return st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n).filter(lambda v: sum(v) > 0).map(
        lambda v: np.asarray(v) / sum(v))


def direct_tv(p, q):
    # independent oracle: sum of positive parts
    return float(sum(a - b for a, b in zip(p, q) if a > b))


# -- total variation -----------------------------------------------------------

def test_tv_against_direct_summation(rng):
    for _ in range(100):
        ell = int(rng.integers(2, 40))
        p, q = rng.dirichlet(np.ones(ell)), rng.dirichlet(np.ones(ell))
        assert abs(tv_distance(p, q) - direct_tv(p, q)) <= 1e-14


def test_tv_examples():
    p = np.full(12, 1 / 12)
    assert tv_distance(p, p) == 0
    assert tv_distance(np.eye(12)[3], p) == pytest.approx(11 / 12, abs=1e-15)
    with pytest.raises(ValueError):
        tv_distance(np.ones(3) / 3, np.ones(4) / 4)
    with pytest.raises(ValueError):
        tv_distance(np.array([0.5, 0.6]), np.array([0.5, 0.5]))


@given(simplex(6), simplex(6), simplex(6))
def test_tv_is_a_metric(p, q, r):
    assert tv_distance(p, q) == pytest.approx(tv_distance(q, p), abs=1e-15)
    assert 0 <= tv_distance(p, q) <= 1
    assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-12


# -- empirical distributions ---------------------------------------------------------

def test_empirical_distribution():
    e = EmpiricalDistribution(np.array([3, 1, 0, 0]), 4)
    assert e.probabilities().tolist() == [0.75, 0.25, 0, 0] and e.low_confidence
    tot = e + EmpiricalDistribution(np.array([0, 0, 96, 0]), 96)
    assert tot.N == 100 and not tot.low_confidence
    with pytest.raises(ValueError):
        EmpiricalDistribution(np.array([1, 1]), 3)


def test_estimate_at_time_zero(rng):
    eta = sample_uniform_configuration(BIVALUED, rng)
    all_, gt, le, sa, p = estimate_distribution(BIVALUED, eta, 7, 0, 1900, 500, rng)
    assert all_.counts[7] == 500 and p == 1.0 and le.N == 0 and sa == 1.0


def test_estimate_split_sums(rng):
    ds = build_degree_sequence([3, 4] * 50, "R*")
    eta = sample_uniform_configuration(ds, rng)
    est = estimate_distribution(ds, eta, 0, 6, 10, 3000, rng)
    assert est.tau_gt.N + est.tau_le.N == est.N == 3000
    assert (est.tau_gt.counts + est.tau_le.counts == est.all.counts).all()
    again = estimate_distribution(ds, eta, 0, 6, 10, 3000, _kernels.seed_state(4))
    same = estimate_distribution(ds, eta, 0, 6, 10, 3000, _kernels.seed_state(4))
    assert (again.all.counts == same.all.counts).all()
    with pytest.raises(ValueError):
        estimate_distribution(ds, eta, 0, 6, 10, 0, rng)


# -- debiasing -------------------------------------------------------------------

def test_debiased_uniform_is_calibrated():
    rng = np.random.default_rng(12)
    misses = 0
    for _ in range(20):
        counts = rng.multinomial(5000, np.full(300, 1 / 300))
        est = debiased_tv(EmpiricalDistribution(counts, 5000), rng, clamp=False)
        misses += abs(est.tv_debiased) > 3 * est.stderr
    assert misses <= 1


def test_debiased_point_mass():
    rng = np.random.default_rng(13)
    ell, N = 12, 1_000_000
    est = debiased_tv(EmpiricalDistribution(np.eye(ell, dtype=np.int64)[0] * N, N), rng)
    assert est.tv_raw == pytest.approx(1 - 1 / ell)
    assert abs(est.tv_debiased - (1 - 1 / ell)) <= est.stderr


def test_baseline_magnitude():
    rng = np.random.default_rng(14)
    for ell, N in ((12, 1000), (300, 5000), (35000, 100_000)):
        mean, sd = uniform_baseline(ell, N, rng, B=20)
        assert mean < 2 * math.sqrt(ell / N)
        if N > 10 * ell:
            assert 0.5 < mean / math.sqrt(ell / (2 * math.pi * N)) < 2
        assert sd >= 0


def test_debiased_errors(rng):
    with pytest.raises(ValueError):
        debiased_tv(EmpiricalDistribution.empty(5), rng)
    with pytest.raises(ValueError):
        debiased_tv(EmpiricalDistribution(np.array([2, 2]), 4), rng, B=5)


# -- exact laws ------------------------------------------------------------------

def test_exact_t0_is_point_mass():
    ds = build_degree_sequence([3, 3, 2], "R")
    law = exact_annealed_distribution(ds, 2, config_space(8).configs[4], 5, 0)
    assert law.tolist() == np.eye(8)[5].tolist()


@pytest.mark.parametrize("degrees", [[2, 2, 2, 2], [3, 3, 2]])
def test_exact_annealed_stationarity(degrees):
    ds = build_degree_sequence(degrees, "R")
    space = config_space(8)
    law = np.full((len(space), 8), 1 / (len(space) * 8))
    for _ in range(5):
        law = exact_joint_law(ds, 2, law, 1)
        assert abs(law.sum() - 1) <= 1e-12
        assert np.abs(law.sum(0) - 1 / 8).max() <= 1e-12
    assert np.abs(exact_annealed_distribution(ds, 2, None, None, 4) - 1 / 8).max() <= 1e-12


def test_exact_size_guard():
    with pytest.raises(ValueError):
        exact_annealed_distribution(build_degree_sequence([2] * 5, "R"), 2, None, 0, 1)


def test_exact_matches_monte_carlo():
    ds = build_degree_sequence([2, 2, 2, 2], "R")
    eta = config_space(8).configs[40]
    exact = exact_annealed_distribution(ds, 2, eta, 0, 3)
    assert abs(exact.sum() - 1) <= 1e-12
    N = 1_000_000
    est = estimate_distribution(ds, eta, 0, 3, 2, N, _kernels.seed_state(8))
    freq = est.all.counts / N
    sigma = np.sqrt(exact * (1 - exact) / N)
    assert (np.abs(freq - exact) <= 3 * sigma + 1e-12).all()


# -- theory and bounds ---------------------------------------------------------------

def test_theory_values():
    assert theory_profile("supercritical", None, C_STAT, 0) == 1
    assert theory_profile("supercritical", None, C_STAT, 1) == pytest.approx(0.6065, abs=1e-4)
    assert theory_profile("subcritical", 0, C_STAT, 0.5 * C_STAT) == 1
    assert theory_profile("subcritical", 0, C_STAT, 1.5 * C_STAT) == 0
    assert math.isnan(theory_profile("critical", 2, C_STAT, C_STAT))
    assert math.isnan(theory_profile("subcritical", 0, C_STAT, C_STAT))
    with pytest.raises(ValueError):
        theory_profile("critical", 2, C_STAT, -0.1)
    with pytest.raises(ValueError):
        theory_profile("critical", -1, C_STAT, 0.5)


def test_critical_drop_height():
    below = theory_profile("critical", 2, C_STAT, C_STAT * (1 - 1e-12))
    assert below == pytest.approx(math.exp(-C_STAT ** 2), abs=1e-9)
    assert below == pytest.approx(0.3107, abs=1e-4) and below > 0
    assert theory_profile("critical", 2, C_STAT, C_STAT * (1 + 1e-12)) == 0


@given(st.sampled_from(["supercritical", "critical", "subcritical"]), st.floats(0, 3),
       st.floats(0, 5))
def test_theory_continuous_off_cutoff(regime, beta, c):
    h = 1e-9
    if abs(c - C_STAT) < 1e-6 or c < h:
        return
    a, b = theory_profile(regime, beta, C_STAT, c - h), theory_profile(regime, beta, C_STAT, c + h)
    assert abs(a - b) <= 1e-6


def test_decomposition_examples():
    assert decomposition_bounds(1.0, 0.4, 0.9) == (0.4, 0.4)
    lo, up = decomposition_bounds(0.3, 0.5, 0.0)
    assert lo == pytest.approx(0.15) and up == pytest.approx(0.15)
    with pytest.raises(ValueError):
        decomposition_bounds(1.2, 0.1, 0.1)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_decomposition_ordered(p, a, b):
    lo, up = decomposition_bounds(p, a, b)
    assert 0 <= lo <= up <= 1 + 1e-12


def test_sandwich_on_simulated_point(rng):
    ds = build_degree_sequence([3, 4] * 100, "R*")
    eta = sample_uniform_configuration(ds, rng)
    est = estimate_distribution(ds, eta, 0, 5, 20, 20_000, rng)
    u = np.full(ds.ell, 1 / ds.ell)
    raw = tv_distance(est.all.probabilities(), u)
    A = tv_distance(est.tau_gt.probabilities(), u)
    B = tv_distance(est.tau_le.probabilities(), u)
    lo, up = decomposition_bounds(est.p_tau_gt, A, B)
    sd = debiased_tv(est.all, rng).stderr
    assert lo - 3 * sd <= raw <= up + 3 * sd


# -- mixing time ----------------------------------------------------------------------

def _pt(t, v):
    return MixingPoint(c=t, t=t, tv_raw=v, tv_debiased=v, stderr=0, p_tau_gt=0, theory=0,
                       lower_bound=0, upper_bound=1)


def test_mixing_time_trivial():
    assert mixing_time([_pt(3, 0.0), _pt(5, 0.0)], 0.25) == 3
    assert mixing_time([_pt(3, 1.0), _pt(5, 1.0)], 0.25) == BEYOND_HORIZON
    with pytest.raises(ValueError):
        mixing_time([], 0.25)
    with pytest.raises(ValueError):
        mixing_time([_pt(1, 0)], 1.0)


def test_supercritical_mixing_time():
    # n = 1000 keeps N well above ell, where the uniform baseline is small
    n = 1000
    ds = build_degree_sequence([3] * 500 + [4] * 500, "R*")
    alpha = 1 / math.log(n)
    k = k_from_alpha(alpha, ds.m)
    rng = np.random.default_rng(21)
    eta = sample_uniform_configuration(ds, rng)
    x = int(rng.integers(ds.ell))
    profile = []
    for t in range(1, 5):
        est = estimate_distribution(ds, eta, x, t, k, 100_000, _kernels.seed_state(21, t))
        profile.append(_pt(t, debiased_tv(est.all, rng).tv_debiased))
    t_hat = mixing_time(profile, math.exp(-0.5))
    assert t_hat != BEYOND_HORIZON and abs(t_hat - alpha ** -0.5) <= 1


def test_conditioned_on_tau_le_is_near_uniform():
    n = 10_000
    alpha = 2 / math.log(n) ** 2
    k = k_from_alpha(alpha, BIVALUED.m)
    t = math.ceil(degree_statistics(BIVALUED).c_stat * math.log(n))
    rng = np.random.default_rng(22)
    eta = sample_uniform_configuration(BIVALUED, rng)
    est = estimate_distribution(BIVALUED, eta, int(rng.integers(BIVALUED.ell)), t, k, 50_000,
                                _kernels.seed_state(22))
    assert est.tau_le.N > 10_000
    assert debiased_tv(est.tau_le, rng).tv_debiased <= 0.1
