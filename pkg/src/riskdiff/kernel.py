"""Probability kernel for two independent binomial arms.

Data model for a two-arm trial (treatment and control counts), log-space
binomial mass evaluation, and the standard-normal CDF/quantile pair used
throughout the package.

Conventions
-----------
The internal effect scale is the risk difference on the cap scale,

    delta_cap = p_T - p_C,

so a hypothesized difference ``delta_cap`` constrains ``p_T = p_C +
delta_cap``.  Callers that prefer the noninferiority-margin sign
convention (delta = -delta_cap) convert at the interface layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class TrialDesign:
    """Sample sizes of the two arms.

    Attributes
    ----------
    n_t : int
        Number of subjects in the treatment arm, at least 1.
    n_c : int
        Number of subjects in the control arm, at least 1.
    """

    n_t: int
    n_c: int

    def __post_init__(self):
        for label, n in (("n_t", self.n_t), ("n_c", self.n_c)):
            if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
                raise DomainError(f"{label} must be an integer, got {n!r}")
            if n < 1:
                raise DomainError(f"{label} must be >= 1, got {n}")

    @property
    def n_total(self) -> int:
        return self.n_t + self.n_c


@dataclass(frozen=True)
class Outcome:
    """Observed success counts ``(x_t, x_c)`` for a given design."""

    x_t: int
    x_c: int

    def __post_init__(self):
        for label, x in (("x_t", self.x_t), ("x_c", self.x_c)):
            if not isinstance(x, (int, np.integer)) or isinstance(x, bool):
                raise DomainError(f"{label} must be an integer, got {x!r}")
            if x < 0:
                raise DomainError(f"{label} must be >= 0, got {x}")

    def validate(self, design: TrialDesign) -> "Outcome":
        """Check the counts against a design's sample sizes."""
        if self.x_t > design.n_t:
            raise DomainError(f"x_t={self.x_t} exceeds n_t={design.n_t}")
        if self.x_c > design.n_c:
            raise DomainError(f"x_c={self.x_c} exceeds n_c={design.n_c}")
        return self


@dataclass(frozen=True)
class JointModel:
    """A fully specified joint law: nuisance ``p_c`` plus the difference
    ``delta_cap = p_T - p_C`` on the cap scale.

    Both ``p_c`` and ``p_c + delta_cap`` must lie in ``[0, 1]``.
    """

    p_c: float
    delta_cap: float

    def __post_init__(self):
        if not (0.0 <= self.p_c <= 1.0):
            raise DomainError(f"p_c must be in [0, 1], got {self.p_c}")
        p_t = self.p_c + self.delta_cap
        if not (-1e-12 <= p_t <= 1.0 + 1e-12):
            raise DomainError(
                f"p_c + delta_cap = {p_t} falls outside [0, 1]"
            )

    @property
    def p_t(self) -> float:
        return min(max(self.p_c + self.delta_cap, 0.0), 1.0)


@lru_cache(maxsize=None)
def _log_factorials(n: int) -> np.ndarray:
    """Table of log(k!) for k = 0..n."""
    return np.array([math.lgamma(k + 1.0) for k in range(n + 1)])


def log_choose(n: int, k: int) -> float:
    lf = _log_factorials(n)
    return float(lf[n] - lf[k] - lf[n - k])


def log_binom_pmf(k: int, n: int, p):
    """Natural log of the binomial pmf, stable in the far tails.

    Parameters
    ----------
    k : int
        Success count, ``0 <= k <= n``.
    n : int
        Number of trials.
    p : float or ndarray
        Success probability (or an array of probabilities), in [0, 1].

    Returns
    -------
    float or ndarray
        ``log C(n, k) + k log p + (n - k) log(1 - p)`` with the usual
        boundary conventions: the result is 0.0 when the outcome is
        certain (``p = 0, k = 0`` or ``p = 1, k = n``) and ``-inf`` when
        it is impossible.
    """
    if not (isinstance(k, (int, np.integer)) and isinstance(n, (int, np.integer))):
        raise DomainError(f"k and n must be integers, got k={k!r}, n={n!r}")
    if n < 0 or k < 0 or k > n:
        raise DomainError(f"require 0 <= k <= n, got k={k}, n={n}")
    parr = np.asarray(p, dtype=float)
    if np.any(parr < 0.0) or np.any(parr > 1.0):
        raise DomainError("p must lie in [0, 1]")
    logc = log_choose(int(n), int(k))
    with np.errstate(divide="ignore"):
        out = np.full_like(parr, logc, dtype=float)
        if k > 0:
            out = out + k * np.log(parr)
        if k < n:
            out = out + (n - k) * np.log1p(-parr)
    if np.isscalar(p) or parr.ndim == 0:
        return float(out)
    return out


def joint_outcome_prob(design: TrialDesign, outcome: Outcome,
                       model: JointModel) -> float:
    """Probability of ``outcome`` under independent binomial arms.

    The treatment arm uses ``p_t = p_c + delta_cap`` (clamped against
    float round-off at the endpoints), the control arm uses ``p_c``.
    """
    outcome.validate(design)
    lp = (log_binom_pmf(outcome.x_t, design.n_t, model.p_t)
          + log_binom_pmf(outcome.x_c, design.n_c, model.p_c))
    return math.exp(lp)


def enumerate_outcomes(design: TrialDesign) -> list:
    """All ``(n_t + 1) * (n_c + 1)`` outcomes in lexicographic order."""
    return [Outcome(i, j)
            for i in range(design.n_t + 1)
            for j in range(design.n_c + 1)]


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-z / _SQRT2)


def normal_sf(z: float) -> float:
    """Upper tail 1 - Phi(z), computed without cancellation."""
    return 0.5 * math.erfc(z / _SQRT2)


# Rational approximation for the normal quantile (Acklam's coefficients;
# relative error below 1.2e-9 on its own), then a single Halley step
# against the erfc-based CDF pushes the defect below 1e-12.
_A = (-3.969683028665376e+01, 2.209460984245205e+02,
      -2.759285104469687e+02, 1.383577518672690e+02,
      -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02,
      -1.556989798598866e+02, 6.680131188771972e+01,
      -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01,
      -2.400758277161838e+00, -2.549732539343734e+00,
      4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01,
      2.445134137142996e+00, 3.754408661907416e+00)

_P_LOW = 0.02425
_P_HIGH = 1.0 - _P_LOW


def inverse_normal_cdf(q: float) -> float:
    """Standard normal quantile function.

    Parameters
    ----------
    q : float
        Probability, strictly inside (0, 1).

    Returns
    -------
    float
        The value z with Phi(z) = q, accurate to |Phi(z) - q| <= 1e-12.

    Raises
    ------
    DomainError
        If q is outside the open interval (0, 1).
    """
    if not (0.0 < q < 1.0):
        raise DomainError(f"quantile argument must be in (0, 1), got {q}")

    if q < _P_LOW:
        u = math.sqrt(-2.0 * math.log(q))
        z = ((((((_C[0] * u + _C[1]) * u + _C[2]) * u + _C[3]) * u + _C[4])
              * u + _C[5])
             / ((((_D[0] * u + _D[1]) * u + _D[2]) * u + _D[3]) * u + 1.0))
    elif q <= _P_HIGH:
        u = q - 0.5
        r = u * u
        z = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4])
              * r + _A[5]) * u
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r
                 + _B[4]) * r + 1.0))
    else:
        u = math.sqrt(-2.0 * math.log1p(-q))
        z = -((((((_C[0] * u + _C[1]) * u + _C[2]) * u + _C[3]) * u + _C[4])
               * u + _C[5])
              / ((((_D[0] * u + _D[1]) * u + _D[2]) * u + _D[3]) * u + 1.0))

    # One Halley refinement.  The CDF defect is formed from whichever
    # tail is small so it keeps full relative precision far out.
    if q < 0.5:
        f = 0.5 * math.erfc(-z / _SQRT2) - q
    else:
        f = 0.5 * math.erfc(z / _SQRT2) - (1.0 - q)
        f = -f
    u = f * _SQRT2PI * math.exp(0.5 * z * z)
    return z - u / (1.0 + 0.5 * z * u)
