import math

import numpy as np
import pytest
from scipy import optimize, stats

from riskdiff.errors import DomainError
from riskdiff.exact import (exact_pvalue, feasible_nuisance_interval,
                            tail_prob, tail_set)
from riskdiff.kernel import JointModel, Outcome, TrialDesign, \
    enumerate_outcomes, joint_outcome_prob


def _oracle_z(n_t, x_t, n_c, x_c, delta):
    """Score statistic recomputed through an independent optimizer."""
    lo = max(0.0, -delta)
    hi = min(1.0, 1.0 - delta)

    def neg_loglik(pc):
        pt = pc + delta
        ll = 0.0
        for x, n, p in ((x_t, n_t, pt), (x_c, n_c, pc)):
            if x > 0:
                if p <= 0.0:
                    return 1e300
                ll += x * math.log(p)
            if x < n:
                if p >= 1.0:
                    return 1e300
                ll += (n - x) * math.log1p(-p)
        return -ll

    res = optimize.minimize_scalar(
        neg_loglik, bounds=(lo + 1e-13, hi - 1e-13), method="bounded",
        options={"xatol": 1e-13})
    cands = [(neg_loglik(c), c) for c in (res.x, lo, hi)]
    pc = min(cands)[1]
    pt = pc + delta
    var = pt * (1 - pt) / n_t + pc * (1 - pc) / n_c
    diff = x_t / n_t - x_c / n_c - delta
    if var <= 0.0:
        return math.copysign(math.inf, diff) if diff else 0.0
    return diff / math.sqrt(var)


def _oracle_grid_context(n_t, n_c, delta, grid_step):
    """Statistic table and per-arm pmf matrices over a dense nuisance
    grid, shared by every outcome of the design."""
    zs = {}
    for i in range(n_t + 1):
        for j in range(n_c + 1):
            zs[(i, j)] = _oracle_z(n_t, i, n_c, j, delta)
    lo = max(0.0, -delta)
    hi = min(1.0, 1.0 - delta)
    grid = np.append(np.arange(lo, hi, grid_step), hi)
    pt = np.clip(grid + delta, 0.0, 1.0)
    mt = stats.binom.pmf(np.arange(n_t + 1)[:, None], n_t, pt[None, :])
    mc = stats.binom.pmf(np.arange(n_c + 1)[:, None], n_c, grid[None, :])
    return zs, mt, mc


def _oracle_pvalue_bracket(ctx, x_t, x_c):
    """Bounds on the supremum p-value from a grid context.

    Exact z-ties exist (complement outcomes on balanced designs share
    the statistic in exact arithmetic) and the optimizer-based z is
    only good to ~1e-8, so outcomes within that slack of the observed
    statistic are scored both ways; the truth lies between the strict
    and loose tails.
    """
    zs, mt, mc = ctx
    zobs = zs[(x_t, x_c)]

    def sup_over_grid(tail):
        acc = np.zeros(mt.shape[1])
        for (i, j) in tail:
            acc += mt[i] * mc[j]
        return min(float(acc.max()), 1.0)

    strict = [k for k, z in zs.items()
              if z > zobs + 1e-7 or k == (x_t, x_c)]
    loose = [k for k, z in zs.items() if z >= zobs - 1e-7]
    return sup_over_grid(strict), sup_over_grid(loose)


def test_extreme_outcome_six_by_six():
    res = exact_pvalue(TrialDesign(6, 6), Outcome(6, 0), -0.05)
    assert res.value == pytest.approx(0.000131924, abs=1e-7)
    assert res.argmax_p_c == pytest.approx(0.525, abs=1e-3)


def test_pvalue_matches_dense_grid_oracle_spot():
    for (n_t, n_c) in [(3, 3), (2, 4)]:
        d = TrialDesign(n_t, n_c)
        for delta in (-0.15, 0.1):
            ctx = _oracle_grid_context(n_t, n_c, delta, 1e-4)
            for y in enumerate_outcomes(d):
                got = exact_pvalue(d, y, delta).value
                p_lo, p_hi = _oracle_pvalue_bracket(ctx, y.x_t, y.x_c)
                assert p_lo - 5e-7 <= got <= p_hi + 5e-7, \
                    f"({n_t},{n_c}) x=({y.x_t},{y.x_c}) delta={delta}: " \
                    f"{got} not in [{p_lo}, {p_hi}]"


def test_argmax_lies_in_feasible_interval():
    d = TrialDesign(5, 4)
    for delta in (-0.3, 0.0, 0.45):
        lo, hi = feasible_nuisance_interval(delta)
        for y in [Outcome(5, 0), Outcome(2, 2), Outcome(0, 4)]:
            res = exact_pvalue(d, y, delta)
            assert lo <= res.argmax_p_c <= hi
            assert 0.0 <= res.value <= 1.0


def test_observed_outcome_is_in_its_tail():
    d = TrialDesign(4, 4)
    for y in [Outcome(4, 0), Outcome(2, 2), Outcome(0, 3)]:
        t = tail_set(d, y, -0.1)
        assert y in t.outcomes
        t2 = tail_set(d, y, -0.1, alternative="smaller")
        assert y in t2.outcomes


def test_tail_union_covers_sample_space():
    # the two one-sided tails at the same threshold overlap exactly on
    # the z-ties, so p_larger + p_smaller = 1 + P(tie) pointwise
    d = TrialDesign(4, 3)
    y = Outcome(3, 1)
    delta = -0.2
    larger = tail_set(d, y, delta)
    smaller = tail_set(d, y, delta, alternative="smaller")
    all_out = set(enumerate_outcomes(d))
    assert set(larger.outcomes) | set(smaller.outcomes) == all_out
    ties = set(larger.outcomes) & set(smaller.outcomes)
    assert y in ties
    for p_c in (0.25, 0.5, 0.81):
        m = JointModel(p_c=p_c, delta_cap=delta)
        pl = tail_prob(d, larger, m)
        ps = tail_prob(d, smaller, m)
        pt = sum(joint_outcome_prob(d, t, m) for t in ties)
        assert pl + ps == pytest.approx(1.0 + pt, abs=1e-12)


def test_tail_sorted_by_decreasing_statistic():
    d = TrialDesign(5, 5)
    t = tail_set(d, Outcome(4, 1), -0.1)
    zs = [z for (_, z) in _pairs_with_z(d, t, -0.1)]
    assert all(a >= b for a, b in zip(zs, zs[1:]))


def _pairs_with_z(d, t, delta):
    from riskdiff.score import z_mee
    return [(y, z_mee(d, y, delta).value) for y in t.outcomes]


def test_diagonal_ties_included_at_zero_difference():
    d = TrialDesign(4, 4)
    t = tail_set(d, Outcome(2, 2), 0.0)
    outs = set(t.outcomes)
    for k in range(5):
        assert Outcome(k, k) in outs, f"diagonal ({k},{k}) dropped"


def test_refinement_never_loses_to_the_grid():
    # the refined supremum must dominate the best plain grid value
    d = TrialDesign(6, 6)
    y = Outcome(5, 1)
    coarse = exact_pvalue(d, y, -0.1, grid_points=51, refine_tol=1e-10)
    fine = exact_pvalue(d, y, -0.1, grid_points=2001, refine_tol=1e-10)
    assert coarse.value <= fine.value + 1e-9
    assert fine.value == pytest.approx(coarse.value, abs=1e-4)


def test_two_calls_bit_identical():
    d = TrialDesign(5, 3)
    a = exact_pvalue(d, Outcome(4, 1), -0.25)
    b = exact_pvalue(d, Outcome(4, 1), -0.25)
    assert a.value == b.value
    assert a.argmax_p_c == b.argmax_p_c


def test_superiority_boundary_allowed():
    res = exact_pvalue(TrialDesign(2, 2), Outcome(2, 0), 0.0)
    assert 0.0 < res.value < 1.0


def test_parameter_validation():
    d = TrialDesign(3, 3)
    y = Outcome(2, 1)
    with pytest.raises(DomainError):
        exact_pvalue(d, y, -0.1, grid_points=2)
    with pytest.raises(DomainError):
        exact_pvalue(d, y, -0.1, refine_tol=0.0)
    with pytest.raises(DomainError):
        exact_pvalue(d, y, -0.1, alternative="sideways")
    with pytest.raises(DomainError):
        exact_pvalue(d, y, -1.0)


def test_smaller_alternative_mirrors_larger():
    # swapping the arms negates the difference scale, so the "smaller"
    # p-value must reproduce the mirrored "larger" one
    d = TrialDesign(5, 3)
    dm = TrialDesign(3, 5)
    for (x_t, x_c, delta) in [(4, 1, -0.2), (2, 2, 0.15), (0, 3, -0.4)]:
        a = exact_pvalue(d, Outcome(x_t, x_c), delta,
                         alternative="smaller").value
        b = exact_pvalue(dm, Outcome(x_c, x_t), -delta,
                         alternative="larger").value
        assert a == pytest.approx(b, abs=5e-11), (x_t, x_c, delta)
