import math
from itertools import product

import numpy as np
import pytest
from scipy import stats

from riskdiff.errors import DomainError
from riskdiff.kernel import (JointModel, Outcome, TrialDesign,
                             enumerate_outcomes, inverse_normal_cdf,
                             joint_outcome_prob, log_binom_pmf, log_choose,
                             normal_cdf, normal_sf)


def test_design_validation():
    d = TrialDesign(6, 6)
    assert d.n_total == 12
    with pytest.raises(DomainError):
        TrialDesign(0, 6)
    with pytest.raises(DomainError):
        TrialDesign(6, -1)


def test_outcome_validation():
    d = TrialDesign(4, 3)
    Outcome(4, 3).validate(d)
    Outcome(0, 0).validate(d)
    with pytest.raises(DomainError):
        Outcome(5, 0).validate(d)
    with pytest.raises(DomainError):
        Outcome(0, 4).validate(d)
    with pytest.raises(DomainError):
        Outcome(-1, 0).validate(d)


def test_joint_model_feasibility():
    m = JointModel(p_c=0.3, delta_cap=0.25)
    assert m.p_t == pytest.approx(0.55, abs=1e-15)
    with pytest.raises(DomainError):
        JointModel(p_c=0.3, delta_cap=0.8)   # p_t would exceed 1
    with pytest.raises(DomainError):
        JointModel(p_c=1.3, delta_cap=0.0)


def test_enumerate_outcomes_is_lexicographic():
    d = TrialDesign(2, 3)
    outs = enumerate_outcomes(d)
    assert len(outs) == 12
    assert outs[0] == Outcome(0, 0)
    assert outs[-1] == Outcome(2, 3)
    pairs = [(y.x_t, y.x_c) for y in outs]
    assert pairs == sorted(pairs)


@pytest.mark.parametrize("n", [0, 1, 5, 20, 100, 500])
def test_log_choose_matches_exact_combinatorics(n):
    for k in range(0, n + 1, max(1, n // 7)):
        exact = math.log(math.comb(n, k))
        assert log_choose(n, k) == pytest.approx(exact, rel=1e-13), \
            f"log C({n},{k})"


def test_log_binom_pmf_matches_scipy():
    rng = np.random.default_rng(7)
    for _ in range(200):
        n = int(rng.integers(1, 60))
        k = int(rng.integers(0, n + 1))
        p = float(rng.uniform(1e-6, 1 - 1e-6))
        ref = stats.binom.logpmf(k, n, p)
        assert log_binom_pmf(k, n, p) == pytest.approx(ref, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("k,n,p,expected", [
    (0, 5, 0.0, 0.0),
    (3, 5, 0.0, -np.inf),
    (5, 5, 0.0, -np.inf),
    (5, 5, 1.0, 0.0),
    (0, 5, 1.0, -np.inf),
    (2, 5, 1.0, -np.inf),
])
def test_log_binom_pmf_degenerate_probabilities(k, n, p, expected):
    got = log_binom_pmf(k, n, p)
    if math.isinf(expected):
        assert got == -np.inf
    else:
        assert got == expected


def test_log_binom_pmf_accepts_arrays():
    p = np.array([0.0, 0.25, 0.5, 1.0])
    got = log_binom_pmf(2, 4, p)
    ref = stats.binom.logpmf(2, 4, p)
    # scipy returns nan at the degenerate ps for some versions; compare
    # only where scipy is finite, and pin the edges directly.
    assert got[0] == -np.inf and got[3] == -np.inf
    np.testing.assert_allclose(got[1:3], ref[1:3], rtol=1e-12)


def test_joint_outcome_prob_is_product_binomial():
    d = TrialDesign(5, 7)
    m = JointModel(p_c=0.4, delta_cap=0.2)
    y = Outcome(3, 2)
    ref = stats.binom.pmf(3, 5, 0.6) * stats.binom.pmf(2, 7, 0.4)
    assert joint_outcome_prob(d, y, m) == pytest.approx(ref, rel=1e-12)


def test_joint_outcome_probs_sum_to_one():
    d = TrialDesign(6, 5)
    for p_c, dc in [(0.3, 0.1), (0.9, -0.5), (0.0, 0.4), (1.0, -1.0)]:
        m = JointModel(p_c=p_c, delta_cap=dc)
        total = sum(joint_outcome_prob(d, y, m) for y in enumerate_outcomes(d))
        assert total == pytest.approx(1.0, abs=1e-12), f"p_c={p_c} d={dc}"


def test_normal_cdf_sf_match_scipy():
    zs = np.concatenate([np.linspace(-8, 8, 161), [-37.5, -15, 15, 37.5]])
    for z in zs:
        assert normal_cdf(z) == pytest.approx(stats.norm.cdf(z), rel=1e-14)
        assert normal_sf(z) == pytest.approx(stats.norm.sf(z), rel=1e-14)


def test_normal_cdf_sf_complementarity():
    for z in [-30.0, -3.2, 0.0, 1.7, 9.0]:
        assert normal_cdf(z) + normal_sf(z) == pytest.approx(1.0, abs=1e-15)
        assert normal_cdf(-z) == pytest.approx(normal_sf(z), rel=1e-14)


def test_inverse_normal_cdf_matches_scipy_ppf():
    qs = np.concatenate([
        np.linspace(1e-4, 1 - 1e-4, 101),
        [1e-300, 1e-100, 1e-16, 1e-8, 0.5, 1 - 1e-8, 1 - 1e-12],
    ])
    for q in qs:
        ref = stats.norm.ppf(q)
        got = inverse_normal_cdf(q)
        assert got == pytest.approx(ref, rel=5e-13, abs=5e-15), f"q={q}"


def test_inverse_normal_cdf_round_trip():
    # the quantile should invert the cdf to near machine precision,
    # including far into the tails where naive rational approximations
    # lose digits
    for q in [1e-200, 1e-13, 0.00013, 0.025, 0.5, 0.975, 1 - 2.5e-13]:
        z = inverse_normal_cdf(q)
        back = normal_cdf(z)
        assert back == pytest.approx(q, rel=5e-13), f"q={q} z={z}"


def test_inverse_normal_cdf_domain():
    for bad in [0.0, 1.0, -0.1, 1.1, float("nan")]:
        with pytest.raises(DomainError):
            inverse_normal_cdf(bad)


def test_inverse_normal_cdf_symmetry():
    # 1 - q must itself be evaluated in floats, which costs relative
    # accuracy in the upper tail; stay where that cost is negligible
    for q in [1e-4, 0.00013, 0.2, 0.49]:
        assert inverse_normal_cdf(q) == pytest.approx(
            -inverse_normal_cdf(1 - q), rel=1e-11, abs=1e-13)
