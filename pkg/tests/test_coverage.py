import math

import pytest
from scipy import stats

from riskdiff.coverage import coverage_surface, exact_coverage
from riskdiff.errors import DomainError, UsageError
from riskdiff.kernel import Outcome, TrialDesign


def _oracle_wald_coverage(n_t, n_c, p_t, p_c, alpha):
    """Enumerated Wald coverage rebuilt from scratch with scipy."""
    crit = stats.norm.isf(alpha / 2)
    d = p_t - p_c
    cov = 0.0
    for i in range(n_t + 1):
        for j in range(n_c + 1):
            ph_t, ph_c = i / n_t, j / n_c
            se = math.sqrt(ph_t * (1 - ph_t) / n_t
                           + ph_c * (1 - ph_c) / n_c)
            lo = max(ph_t - ph_c - crit * se, -1.0)
            hi = min(ph_t - ph_c + crit * se, 1.0)
            if lo - 1e-12 <= d <= hi + 1e-12:
                cov += (stats.binom.pmf(i, n_t, p_t)
                        * stats.binom.pmf(j, n_c, p_c))
    return cov


def test_wald_cell_matches_enumeration_oracle():
    cell = exact_coverage("wald", TrialDesign(6, 6), 0.5, 0.5, 0.05)
    ref = _oracle_wald_coverage(6, 6, 0.5, 0.5, 0.05)
    assert cell.coverage == pytest.approx(ref, abs=1e-12)
    # classical Wald undercoverage at the center
    assert cell.coverage < 0.95


def test_degenerate_corner_reduces_to_single_outcome():
    # p_t = p_c = 0 forces the outcome (0,0); coverage is then just the
    # membership indicator for the true difference 0
    d = TrialDesign(5, 5)
    cell = exact_coverage("mee", d, 0.0, 0.0, 0.05)
    from riskdiff.ci import invert_asymptotic
    ci = invert_asymptotic("mee", d, Outcome(0, 0), 0.05)
    assert cell.coverage == (1.0 if ci.contains(0.0, tol=1e-12) else 0.0)
    assert cell.expected_width == pytest.approx(ci.width, abs=1e-12)


def test_exact_hull_respects_the_level_on_a_spot_grid():
    d = TrialDesign(4, 4)
    for (p_t, p_c) in [(0.5, 0.5), (0.1, 0.9), (1.0, 0.0), (0.85, 0.25)]:
        cell = exact_coverage("cz_exact", d, p_t, p_c, 0.05)
        assert cell.coverage >= 0.95 - 1e-12, f"({p_t}, {p_c})"


def test_surface_shape_and_argmin():
    d = TrialDesign(4, 4)
    s = coverage_surface("wald", d, 0.25, 0.05)
    assert len(s) == 25
    assert s.min_coverage == min(c.coverage for c in s)
    assert s.argmin_cell.coverage == s.min_coverage
    seen = {(c.p_t, c.p_c) for c in s}
    assert (0.0, 0.0) in seen and (1.0, 1.0) in seen and (0.5, 0.25) in seen
    for c in s:
        assert 0.0 <= c.coverage <= 1.0
        assert 0.0 <= c.expected_width <= 2.0


def test_surfaces_are_deterministic():
    d = TrialDesign(3, 3)
    a = coverage_surface("mn", d, 0.5, 0.1)
    b = coverage_surface("mn", d, 0.5, 0.1)
    assert a == b  # dataclass equality: bit-identical floats throughout


def test_ec_requires_margin():
    d = TrialDesign(4, 4)
    with pytest.raises(UsageError):
        exact_coverage("ec", d, 0.4, 0.5, 0.05)
    with pytest.raises(UsageError):
        coverage_surface("ec", d, 0.25, 0.05)


def test_ec_raw_components_never_beat_the_hull():
    d = TrialDesign(4, 4)
    for (p_t, p_c) in [(0.3, 0.4), (0.7, 0.2), (0.95, 0.05)]:
        hull = exact_coverage("ec", d, p_t, p_c, 0.05, delta0=0.1)
        raw = exact_coverage("ec", d, p_t, p_c, 0.05, delta0=0.1,
                             raw_components=True)
        assert raw.coverage <= hull.coverage + 1e-12
        assert raw.expected_width <= hull.expected_width + 1e-12


def test_ec_degenerate_outcome_gets_the_full_interval():
    # at p_t=0, p_c=1 the only outcome is (0, n_c), whose exact p-value
    # at the boundary is degenerate; the policy interval [-1, 1] covers
    # everything, so coverage is 1 and the width contribution is 2
    d = TrialDesign(4, 4)
    cell = exact_coverage("ec", d, 0.0, 1.0, 0.05, delta0=0.05)
    assert cell.coverage == 1.0
    assert cell.expected_width == pytest.approx(2.0, abs=1e-12)


def test_parameter_validation():
    d = TrialDesign(3, 3)
    with pytest.raises(DomainError):
        exact_coverage("mee", d, 1.2, 0.5, 0.05)
    with pytest.raises(DomainError):
        exact_coverage("mee", d, 0.5, 0.5, 1.5)
    with pytest.raises(DomainError):
        coverage_surface("mee", d, 0.0, 0.05)
    with pytest.raises(DomainError):
        coverage_surface("mee", d, 0.7, 0.05)
    with pytest.raises(DomainError):
        exact_coverage("bootstrap", d, 0.5, 0.5, 0.05)


def test_asymptotic_methods_can_undercover():
    # the motivating contrast: somewhere on the grid the asymptotic
    # methods dip below nominal while the exact hull cannot
    d = TrialDesign(4, 4)
    s = coverage_surface("wald", d, 0.25, 0.05)
    assert s.min_coverage < 0.95
