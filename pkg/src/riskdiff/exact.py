"""Exact unconditional test for the risk difference (Chan's construction).

The observed data are referred to the distribution of the Mee score
statistic over the whole outcome space.  Because the null fixes only the
difference ``p_T - p_C``, the control-arm probability remains a nuisance
parameter; the exact p-value takes the supremum of the tail probability
over its feasible range,

    p_exact(x) = sup_{p_C} P_{p_C, delta0}( Z >= Z(x) ),

so the test is conservative by construction for any sample size.  The
supremum is located on a fixed nuisance grid and then polished by
golden-section refinement around every grid-local maximum (endpoints
included).

All outcomes of a design share one sorted statistic table per null
difference, so p-values for every outcome at a given boundary come out
of a single cumulative pass; the table is memoized, which is what makes
confidence-interval scans and coverage enumeration affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .kernel import JointModel, Outcome, TrialDesign, enumerate_outcomes, \
    log_binom_pmf
from .score import StatValue, _check_delta_cap, z_mee

__all__ = [
    "DEFAULT_GRID_POINTS",
    "DEFAULT_REFINE_TOL",
    "ExactPValue",
    "TailSet",
    "exact_pvalue",
    "feasible_nuisance_interval",
    "tail_set",
    "tail_prob",
]

DEFAULT_GRID_POINTS = 1001
DEFAULT_REFINE_TOL = 1e-10

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class TailSet:
    """Outcomes at least as extreme as an observed one.

    ``outcomes`` are ordered by decreasing statistic, ties broken by
    decreasing point estimate and then lexicographically, so the
    sequence is reproducible run to run.  ``threshold`` is the observed
    statistic defining membership (``z >= threshold`` for the default
    direction, ``z <= threshold`` for ``alternative="smaller"``).
    """

    outcomes: tuple
    threshold: StatValue
    alternative: str = "larger"


@dataclass(frozen=True)
class ExactPValue:
    """Result of the nuisance supremum.

    Attributes
    ----------
    value : float
        The exact p-value, in [0, 1].
    argmax_p_c : float
        A nuisance value attaining the supremum (to refinement accuracy).
    delta_cap : float
        Null-boundary difference the table was built at (cap scale).
    grid_points, refine_tol :
        Search parameters the value was computed with.
    """

    value: float
    argmax_p_c: float
    delta_cap: float
    grid_points: int
    refine_tol: float


def feasible_nuisance_interval(delta_cap: float):
    """Range of control probabilities keeping both arms inside [0, 1]:
    ``[max(0, -delta_cap), min(1, 1 - delta_cap)]``."""
    d = _check_delta_cap(delta_cap)
    return max(0.0, -d), min(1.0, 1.0 - d)


def _lex_index(design: TrialDesign, outcome: Outcome) -> int:
    return outcome.x_t * (design.n_c + 1) + outcome.x_c


@lru_cache(maxsize=None)
def _lex_counts(design: TrialDesign):
    """Per-lex-outcome count arrays (x_t, x_c) and point estimates."""
    outs = enumerate_outcomes(design)
    x_t = np.array([y.x_t for y in outs])
    x_c = np.array([y.x_c for y in outs])
    d_hat = x_t / design.n_t - x_c / design.n_c
    for arr in (x_t, x_c, d_hat):
        arr.setflags(write=False)
    return x_t, x_c, d_hat


@lru_cache(maxsize=65536)
def _z_array(design: TrialDesign, delta_cap: float) -> np.ndarray:
    """Mee statistic for every outcome of the design, lexicographic."""
    zs = np.array([z_mee(design, y, delta_cap).value
                   for y in enumerate_outcomes(design)])
    zs.setflags(write=False)
    return zs


def tail_set(design: TrialDesign, outcome: Outcome, delta_cap: float,
             alternative: str = "larger") -> TailSet:
    """Collect the outcomes whose statistic is at least as extreme as
    the observed one (ties included by float equality)."""
    _check_alternative(alternative)
    outcome.validate(design)
    zs = _z_array(design, delta_cap)
    iobs = _lex_index(design, outcome)
    zobs = zs[iobs]
    outs = enumerate_outcomes(design)
    if alternative == "larger":
        members = [y for y, z in zip(outs, zs) if z >= zobs]
        sign = -1.0
    else:
        members = [y for y, z in zip(outs, zs) if z <= zobs]
        sign = 1.0
    _, _, d_hat = _lex_counts(design)
    members.sort(key=lambda y: (sign * zs[_lex_index(design, y)],
                                sign * d_hat[_lex_index(design, y)],
                                y.x_t, y.x_c))
    obs_stat = z_mee(design, outcome, delta_cap)
    return TailSet(outcomes=tuple(members), threshold=obs_stat,
                   alternative=alternative)


def tail_prob(design: TrialDesign, tail: TailSet,
              model: JointModel) -> float:
    """Probability of a tail set under a fully specified joint law,
    accumulated in log space (stable when every member is rare)."""
    if not tail.outcomes:
        return 0.0
    logs = np.array([
        log_binom_pmf(y.x_t, design.n_t, model.p_t)
        + log_binom_pmf(y.x_c, design.n_c, model.p_c)
        for y in tail.outcomes
    ])
    m = np.max(logs)
    if m == -np.inf:
        return 0.0
    total = m + math.log(np.sum(np.exp(logs - m)))
    return min(math.exp(total), 1.0)


def _check_alternative(alternative: str):
    if alternative not in ("larger", "smaller"):
        raise DomainError(
            f"alternative must be 'larger' or 'smaller', got {alternative!r}"
        )


@lru_cache(maxsize=None)
def _log_choose_vector(n: int) -> np.ndarray:
    lf = np.array([math.lgamma(k + 1.0) for k in range(n + 1)])
    v = lf[n] - lf - lf[::-1]
    v.setflags(write=False)
    return v


def _log_pmf_matrix(n: int, p: np.ndarray) -> np.ndarray:
    """(n+1, len(p)) matrix of log binomial pmf values, boundary-safe."""
    k = np.arange(n + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.log(p)
        log1mp = np.log1p(-p)
        t1 = k[:, None] * logp[None, :]
        t2 = (n - k)[:, None] * log1mp[None, :]
    t1[0, :] = 0.0   # 0 * log(0) is a certain factor, not a nan
    t2[n, :] = 0.0
    return _log_choose_vector(n)[:, None] + t1 + t2


@lru_cache(maxsize=65536)
def _sorted_structure(design: TrialDesign, delta_cap: float,
                      alternative: str):
    """Outcome ordering shared by every tail at one null difference.

    Returns ``(order, block_last)`` where ``order`` sorts outcomes from
    most to least extreme and ``block_last[r]`` is the last sorted
    position tied (by float equality of the statistic) with position
    ``r`` — the cumulative probability through that position is the
    tail probability of the outcome sitting at ``r``.
    """
    zs = _z_array(design, delta_cap)
    key = -zs if alternative == "larger" else zs
    order = np.argsort(key, kind="stable")
    zs_sorted = zs[order]
    n_out = len(zs_sorted)
    change = np.nonzero(zs_sorted[1:] != zs_sorted[:-1])[0]
    ends = np.append(change, n_out - 1)
    block_last = ends[np.searchsorted(ends, np.arange(n_out), side="left")]
    for arr in (order, block_last):
        arr.setflags(write=False)
    return order, block_last


def _tail_curves(design: TrialDesign, delta_cap: float, alternative: str,
                 p_c: np.ndarray) -> np.ndarray:
    """Tail probabilities for every sorted position at each nuisance
    value: shape ``(n_outcomes, len(p_c))``."""
    order, block_last = _sorted_structure(design, delta_cap, alternative)
    x_t, x_c, _ = _lex_counts(design)
    lt = _log_pmf_matrix(design.n_t,
                         np.clip(p_c + delta_cap, 0.0, 1.0))
    lc = _log_pmf_matrix(design.n_c, p_c)
    mass = np.exp(lt[x_t[order], :] + lc[x_c[order], :])
    csum = np.cumsum(mass, axis=0)
    return csum[block_last, :]


@lru_cache(maxsize=65536)
def _pvalue_table(design: TrialDesign, delta_cap: float, grid_points: int,
                  refine_tol: float, alternative: str):
    """Exact p-value (and its nuisance argmax) for every outcome of the
    design at one null-boundary difference.

    Grid stage: tail curves over ``grid_points`` nuisance values.
    Refinement stage: golden-section polish around every grid-local
    maximum of every curve, run in lockstep across all (outcome,
    bracket) pairs so each iteration is one vectorized pmf evaluation.
    """
    lo, hi = feasible_nuisance_interval(delta_cap)
    pgrid = np.linspace(lo, hi, grid_points)
    curves = _tail_curves(design, delta_cap, alternative, pgrid)
    n_out, g = curves.shape

    best_j = np.argmax(curves, axis=1)
    best_val = curves[np.arange(n_out), best_j]
    best_arg = pgrid[best_j]

    # Local maxima (plateaus collapsed to their first point).
    ge_left = np.ones_like(curves, dtype=bool)
    ge_left[:, 1:] = curves[:, 1:] >= curves[:, :-1]
    ge_right = np.ones_like(curves, dtype=bool)
    ge_right[:, :-1] = curves[:, :-1] >= curves[:, 1:]
    first_of_run = np.ones_like(curves, dtype=bool)
    first_of_run[:, 1:] = curves[:, 1:] != curves[:, :-1]
    rows, cols = np.nonzero(ge_left & ge_right & first_of_run)

    if len(rows) > 0 and hi - lo > refine_tol:
        a = pgrid[np.maximum(cols - 1, 0)]
        b = pgrid[np.minimum(cols + 1, g - 1)]
        x_ref, f_ref = _golden_lockstep(
            design, delta_cap, alternative, rows, a, b, refine_tol)
        for r, xx, ff in zip(rows, x_ref, f_ref):
            if ff > best_val[r]:
                best_val[r] = ff
                best_arg[r] = xx

    order, _ = _sorted_structure(design, delta_cap, alternative)
    inv = np.empty(n_out, dtype=int)
    inv[order] = np.arange(n_out)
    values = np.minimum(best_val[inv], 1.0)
    argmax = best_arg[inv]
    values.setflags(write=False)
    argmax.setflags(write=False)
    return values, argmax


def _golden_lockstep(design, delta_cap, alternative, rows, a, b, tol):
    """Golden-section maximization of many tail curves at once.

    ``rows`` are sorted-order positions (one per bracket); all brackets
    advance together, one batched tail evaluation per iteration.
    """
    _, block_last = _sorted_structure(design, delta_cap, alternative)
    pos = block_last[rows]
    cols = np.arange(len(rows))

    def evaluate(x):
        curves = _tail_curves(design, delta_cap, alternative, x)
        return curves[pos, cols]

    a = a.astype(float).copy()
    b = b.astype(float).copy()
    h = b - a
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    fc = evaluate(c)
    fd = evaluate(d)
    pick0 = fc >= fd
    best_x = np.where(pick0, c, d)
    best_f = np.where(pick0, fc, fd)

    for _ in range(200):
        if np.max(h) <= tol:
            break
        pick = fc >= fd
        a = np.where(pick, a, c)
        b = np.where(pick, d, b)
        h = b - a
        c_next = np.where(pick, a + _INVPHI2 * h, d)
        d_next = np.where(pick, c, a + _INVPHI * h)
        x_eval = np.where(pick, c_next, d_next)
        f_eval = evaluate(x_eval)
        fc_next = np.where(pick, f_eval, fd)
        fd_next = np.where(pick, fc, f_eval)
        c, d, fc, fd = c_next, d_next, fc_next, fd_next
        improved = f_eval > best_f
        best_x = np.where(improved, x_eval, best_x)
        best_f = np.where(improved, f_eval, best_f)
    return best_x, best_f


def exact_pvalue(design: TrialDesign, outcome: Outcome, delta0_cap: float,
                 grid_points: int = DEFAULT_GRID_POINTS,
                 refine_tol: float = DEFAULT_REFINE_TOL,
                 alternative: str = "larger") -> ExactPValue:
    """Exact unconditional p-value at the null boundary ``delta0_cap``.

    Parameters
    ----------
    design, outcome :
        The trial layout and observed counts.
    delta0_cap : float
        Null-boundary difference on the cap scale, inside (-1, 1).
    grid_points : int
        Size of the nuisance search grid (>= 3).
    refine_tol : float
        Width to which each local maximum bracket is narrowed.
    alternative : str
        "larger" collects outcomes with statistic >= the observed one
        (evidence of a larger difference); "smaller" the reverse.

    Returns
    -------
    ExactPValue
    """
    _check_alternative(alternative)
    outcome.validate(design)
    d = _check_delta_cap(delta0_cap)
    if not isinstance(grid_points, int) or grid_points < 3:
        raise DomainError(f"grid_points must be an int >= 3, got {grid_points}")
    if not (refine_tol > 0.0):
        raise DomainError(f"refine_tol must be positive, got {refine_tol}")
    values, argmax = _pvalue_table(design, d, grid_points, refine_tol,
                                   alternative)
    i = _lex_index(design, outcome)
    return ExactPValue(value=float(values[i]), argmax_p_c=float(argmax[i]),
                       delta_cap=d, grid_points=grid_points,
                       refine_tol=refine_tol)
