"""Score statistics for the difference of two binomial proportions.

Implements the restricted maximum-likelihood estimate of the nuisance
(control-arm) probability under the constraint ``p_T = p_C + delta_cap``,
and the score-type Z statistics built on it: Mee's statistic, the
Miettinen-Nurminen small-sample rescaling, and the Wald statistic for
reference.

All statistics share one sign convention: large positive values are
evidence that the true difference ``d = p_T - p_C`` exceeds the
hypothesized ``delta_cap``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainError
from .kernel import Outcome, TrialDesign, normal_sf

__all__ = [
    "RestrictedMle",
    "StatValue",
    "unrestricted_estimate",
    "restricted_mle",
    "z_mee",
    "z_mn",
    "z_wald",
    "p_asy",
]


@dataclass(frozen=True)
class RestrictedMle:
    """Constrained MLE of the two arm probabilities at a fixed difference.

    Attributes
    ----------
    p_tilde_t, p_tilde_c : float
        The fitted probabilities; ``p_tilde_t - p_tilde_c`` equals the
        hypothesized difference up to float round-off.
    sigma_hat : float
        Standard error of the difference evaluated at the fitted
        probabilities,
        ``sqrt(pt(1-pt)/n_t + pc(1-pc)/n_c)``.
    at_boundary : bool
        True when the constrained optimum sits at an edge of the
        feasible nuisance interval.
    """

    p_tilde_t: float
    p_tilde_c: float
    sigma_hat: float
    at_boundary: bool


@dataclass(frozen=True)
class StatValue:
    """A Z statistic on the extended real line.

    ``degenerate`` marks outcomes where the restricted variance estimate
    collapses to zero; the value is then ``+inf``, ``-inf`` or ``0.0``
    according to the sign of ``d_hat - delta_cap``.
    """

    value: float
    degenerate: bool = False


def unrestricted_estimate(design: TrialDesign, outcome: Outcome) -> float:
    """Plain difference of sample proportions ``x_t/n_t - x_c/n_c``."""
    outcome.validate(design)
    return outcome.x_t / design.n_t - outcome.x_c / design.n_c


def _check_delta_cap(delta_cap: float) -> float:
    d = float(delta_cap)
    if not (-1.0 < d < 1.0) or math.isnan(d):
        raise DomainError(
            f"delta_cap must lie strictly inside (-1, 1), got {delta_cap}"
        )
    return d


def _score(x_t, n_t, x_c, n_c, delta_cap, p_c):
    """Derivative of the constrained log-likelihood with respect to the
    nuisance p_c (p_t = p_c + delta_cap substituted in)."""
    p_t = p_c + delta_cap
    s = 0.0
    if x_t > 0:
        s += math.inf if p_t <= 0.0 else x_t / p_t
    if x_t < n_t:
        s -= math.inf if p_t >= 1.0 else (n_t - x_t) / (1.0 - p_t)
    if x_c > 0:
        s += math.inf if p_c <= 0.0 else x_c / p_c
    if x_c < n_c:
        s -= math.inf if p_c >= 1.0 else (n_c - x_c) / (1.0 - p_c)
    return s


def _score_slope(x_t, n_t, x_c, n_c, delta_cap, p_c):
    """Second derivative of the constrained log-likelihood (always
    negative on the interior: the problem is strictly concave)."""
    p_t = p_c + delta_cap
    g = 0.0
    if x_t > 0:
        g -= x_t / p_t ** 2
    if x_t < n_t:
        g -= (n_t - x_t) / (1.0 - p_t) ** 2
    if x_c > 0:
        g -= x_c / p_c ** 2
    if x_c < n_c:
        g -= (n_c - x_c) / (1.0 - p_c) ** 2
    return g


def _cubic_root(x_t, n_t, x_c, n_c, delta_cap):
    """Closed-form interior root of the constrained score equation.

    The stationarity condition is a cubic in p_c; the trigonometric
    solution below picks the branch that lands in the feasible interval
    for this problem.  Returns None when the expression degenerates
    numerically (the caller then falls back to bisection).
    """
    nobs = n_t + n_c
    count = x_t + x_c
    d = delta_cap
    tmp3 = float(nobs)
    tmp2 = (n_t + 2.0 * n_c) * d - nobs - count
    tmp1 = (x_c * d - nobs - 2.0 * x_c) * d + count
    tmp0 = x_c * d * (1.0 - d)
    q = (tmp2 / (3.0 * tmp3)) ** 3 \
        - tmp1 * tmp2 / (6.0 * tmp3 ** 2) + tmp0 / (2.0 * tmp3)
    rad = (tmp2 / (3.0 * tmp3)) ** 2 - tmp1 / (3.0 * tmp3)
    if rad < 0.0:
        return None
    p = math.copysign(math.sqrt(rad), q) if q != 0.0 else math.sqrt(rad)
    if p == 0.0:
        return -tmp2 / (3.0 * tmp3)
    ratio = q / p ** 3
    if ratio > 1.0:
        if ratio > 1.0 + 1e-9:
            return None
        ratio = 1.0
    elif ratio < -1.0:
        if ratio < -1.0 - 1e-9:
            return None
        ratio = -1.0
    a = (math.pi + math.acos(ratio)) / 3.0
    return 2.0 * p * math.cos(a) - tmp2 / (3.0 * tmp3)


def restricted_mle(design: TrialDesign, outcome: Outcome,
                   delta_cap: float) -> RestrictedMle:
    """Constrained MLE of ``(p_T, p_C)`` subject to ``p_T - p_C = delta_cap``.

    Parameters
    ----------
    design : TrialDesign
    outcome : Outcome
    delta_cap : float
        Hypothesized difference on the cap scale, strictly inside
        (-1, 1).

    Returns
    -------
    RestrictedMle

    Notes
    -----
    The nuisance ``p_C`` ranges over the feasible interval
    ``[max(0, -delta_cap), min(1, 1 - delta_cap)]``.  The log-likelihood
    is strictly concave there, so the optimum is the unique score zero
    when the score changes sign across the interval, and the matching
    endpoint otherwise.  The interior root starts from the closed-form
    cubic solution and is polished by a safeguarded Newton iteration;
    if the closed form degenerates, bisection on the score takes over.
    """
    outcome.validate(design)
    d = _check_delta_cap(delta_cap)
    x_t, n_t = outcome.x_t, design.n_t
    x_c, n_c = outcome.x_c, design.n_c

    lo = max(0.0, -d)
    hi = min(1.0, 1.0 - d)

    if d == 0.0:
        # Constraint collapses to a common proportion: pooled estimate.
        pc = (x_t + x_c) / (n_t + n_c)
        return _finish(n_t, n_c, d, pc, at_boundary=(pc in (0.0, 1.0)))

    width = hi - lo
    shim = 1e-12 * width
    a, b = lo + shim, hi - shim
    if _score(x_t, n_t, x_c, n_c, d, a) <= 0.0:
        return _finish(n_t, n_c, d, lo, at_boundary=True)
    if _score(x_t, n_t, x_c, n_c, d, b) >= 0.0:
        return _finish(n_t, n_c, d, hi, at_boundary=True)

    # The score is strictly decreasing, positive at a and negative at b,
    # so the optimum is its unique zero in (a, b).  Try the closed-form
    # cubic first; it occasionally lands on a spurious root at a pole of
    # the score (where the constrained likelihood vanishes), so accept
    # it only when the score changes sign across a small window around
    # it, and fall back to bisection on the full bracket otherwise.
    seed = _cubic_root(x_t, n_t, x_c, n_c, d)
    blo = bhi = None
    if seed is not None and a < seed < b:
        h = 1e-6 * width
        wlo, whi = max(seed - h, a), min(seed + h, b)
        if (_score(x_t, n_t, x_c, n_c, d, wlo) > 0.0
                and _score(x_t, n_t, x_c, n_c, d, whi) < 0.0):
            blo, bhi = wlo, whi
    if blo is None:
        blo, bhi = a, b

    pc = _polish_root(x_t, n_t, x_c, n_c, d, blo, bhi)
    return _finish(n_t, n_c, d, pc, at_boundary=False)


def _polish_root(x_t, n_t, x_c, n_c, d, blo, bhi):
    """Zero of the (strictly decreasing) score on a bracket with a sign
    change: bracketed Newton, with bisection whenever a step leaves the
    bracket, terminating on bracket collapse."""
    pc = 0.5 * (blo + bhi)
    for _ in range(200):
        s = _score(x_t, n_t, x_c, n_c, d, pc)
        if s > 0.0:
            blo = pc
        elif s < 0.0:
            bhi = pc
        else:
            return pc
        if bhi - blo <= 5e-16 * max(1.0, abs(blo)):
            break
        g = _score_slope(x_t, n_t, x_c, n_c, d, pc)
        nxt = pc - s / g if (math.isfinite(s) and g < 0.0) else math.nan
        if math.isnan(nxt) or not (blo < nxt < bhi):
            nxt = 0.5 * (blo + bhi)
        if nxt == pc:
            break
        pc = nxt
    return 0.5 * (blo + bhi)


def _finish(n_t, n_c, delta_cap, pc, at_boundary):
    pt = min(max(pc + delta_cap, 0.0), 1.0)
    var = pt * (1.0 - pt) / n_t + pc * (1.0 - pc) / n_c
    sigma = math.sqrt(var) if var > 0.0 else 0.0
    return RestrictedMle(p_tilde_t=pt, p_tilde_c=pc,
                         sigma_hat=sigma, at_boundary=at_boundary)


# The MLE is re-requested heavily along scan grids (tail statistics for
# every outcome at every delta), so memoize on the exact float key.
@lru_cache(maxsize=400_000)
def _mle_cached(design: TrialDesign, outcome: Outcome,
                delta_cap: float) -> RestrictedMle:
    return restricted_mle(design, outcome, delta_cap)


def _degenerate_value(d_hat: float, delta_cap: float) -> float:
    if d_hat > delta_cap:
        return math.inf
    if d_hat < delta_cap:
        return -math.inf
    return 0.0


def z_mee(design: TrialDesign, outcome: Outcome,
          delta_cap: float) -> StatValue:
    """Mee's score statistic ``(d_hat - delta_cap) / sigma_hat`` with the
    restricted-MLE standard error.

    When ``sigma_hat`` collapses to zero (only possible at
    ``delta_cap = 0`` with all-failure or all-success data) the value
    follows the extended-real convention of :class:`StatValue`.
    """
    d = _check_delta_cap(delta_cap)
    mle = _mle_cached(design, outcome, d)
    d_hat = unrestricted_estimate(design, outcome)
    if mle.sigma_hat == 0.0:
        return StatValue(_degenerate_value(d_hat, d), degenerate=True)
    return StatValue((d_hat - d) / mle.sigma_hat)


def z_mn(design: TrialDesign, outcome: Outcome,
         delta_cap: float) -> StatValue:
    """Miettinen-Nurminen variant: Mee's statistic times
    ``sqrt(N / (N - 1))`` with ``N = n_t + n_c``."""
    base = z_mee(design, outcome, delta_cap)
    n = design.n_total
    factor = math.sqrt(n / (n - 1.0))
    return StatValue(factor * base.value, degenerate=base.degenerate)


def z_wald(design: TrialDesign, outcome: Outcome,
           delta_cap: float) -> StatValue:
    """Wald statistic with the unconstrained plug-in standard error."""
    outcome.validate(design)
    d = float(delta_cap)
    p_t = outcome.x_t / design.n_t
    p_c = outcome.x_c / design.n_c
    var = p_t * (1.0 - p_t) / design.n_t + p_c * (1.0 - p_c) / design.n_c
    d_hat = p_t - p_c
    if var <= 0.0:
        return StatValue(_degenerate_value(d_hat, d), degenerate=True)
    return StatValue((d_hat - d) / math.sqrt(var))


def p_asy(design: TrialDesign, outcome: Outcome,
          delta0_cap: float) -> float:
    """One-sided asymptotic p-value ``1 - Phi(z_mee)`` at the null
    boundary ``delta0_cap``; degenerate ``+inf``/``-inf`` statistics map
    to 0 and 1."""
    z = z_mee(design, outcome, delta0_cap)
    if math.isinf(z.value):
        return 0.0 if z.value > 0 else 1.0
    return normal_sf(z.value)
