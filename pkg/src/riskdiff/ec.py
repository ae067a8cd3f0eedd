"""Exact-corrected (EC) score statistic.

The EC construction replaces the observed point estimate with a
calibrated one so that the asymptotic test reproduces the exact
unconditional p-value at the noninferiority boundary.  With margin
``delta0 > 0`` (so the boundary difference is ``-delta0`` on the cap
scale) the calibrated estimate is

    d_hat_0 = -delta0 + sigma_hat(-delta0) * Phi^{-1}(1 - p_exact),

where ``sigma_hat(-delta0)`` is the restricted-MLE standard error at the
boundary, and the statistic at any hypothesized difference is

    Z_EC(delta_cap) = (d_hat_0 - delta_cap) / sigma_hat(delta_cap).

By construction ``Z_EC(-delta0) = Phi^{-1}(1 - p_exact)``: the normal
test based on Z_EC agrees exactly with the exact test at the boundary.
Away from the boundary the statistic inherits whatever shape the
standard-error profile imposes; it need not be monotone in the
hypothesized difference, which is what the scanning helpers in
:mod:`riskdiff.diagnostics` look for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._search import golden_section_max
from .errors import DegenerateCalibrationError, DomainError
from .exact import DEFAULT_GRID_POINTS, DEFAULT_REFINE_TOL, exact_pvalue
from .kernel import Outcome, TrialDesign, inverse_normal_cdf
from .score import StatValue, _check_delta_cap, _mle_cached

__all__ = [
    "EcCalibration",
    "ZecExtremum",
    "calibrate_ec",
    "z_ec",
    "find_zec_extremum",
]

# Exact p-values this close to 0 or 1 have no usable normal quantile.
_P_FLOOR = 1e-15


@dataclass(frozen=True)
class EcCalibration:
    """Boundary calibration of the EC statistic.

    Attributes
    ----------
    d_hat_0 : float
        Calibrated point estimate replacing ``x_t/n_t - x_c/n_c``.  It
        may fall outside [-1, 1]; that is a feature of the construction,
        not an error.
    delta0_margin : float
        The (positive) noninferiority margin the calibration was built
        for.
    p_exact : float
        Exact unconditional p-value at the boundary.
    sigma_at_boundary : float
        Restricted-MLE standard error at the boundary difference.
    """

    d_hat_0: float
    delta0_margin: float
    p_exact: float
    sigma_at_boundary: float


@dataclass(frozen=True)
class ZecExtremum:
    """An interior extremum of the Z_EC profile over a margin interval.

    ``kind`` is "min" or "max"; when the profile is monotone over the
    requested interval there is nothing to report and ``kind`` is
    "none" with NaN location and value.  ``delta_star`` is on the margin
    (delta) scale, like the interval it was searched in.
    """

    delta_star: float
    value: float
    kind: str


def _check_margin(delta0_margin: float) -> float:
    m = float(delta0_margin)
    if not (0.0 < m < 1.0) or math.isnan(m):
        raise DomainError(
            f"noninferiority margin must lie in (0, 1), got {delta0_margin}"
        )
    return m


@lru_cache(maxsize=65536)
def calibrate_ec(design: TrialDesign, outcome: Outcome,
                 delta0_margin: float,
                 grid_points: int = DEFAULT_GRID_POINTS,
                 refine_tol: float = DEFAULT_REFINE_TOL) -> EcCalibration:
    """Build the EC boundary calibration for one observed dataset.

    Parameters
    ----------
    design, outcome :
        Trial layout and observed counts.
    delta0_margin : float
        Noninferiority margin, in (0, 1).
    grid_points, refine_tol :
        Passed through to the exact p-value search.

    Returns
    -------
    EcCalibration

    Raises
    ------
    DegenerateCalibrationError
        When the exact p-value is numerically 0 or 1, so the normal
        quantile does not exist.  This happens for the least extreme
        outcomes of a design (p_exact = 1) and cannot be repaired by
        tuning: such data admit no EC statistic.
    """
    m = _check_margin(delta0_margin)
    delta0_cap = -m
    p = exact_pvalue(design, outcome, delta0_cap,
                     grid_points=grid_points, refine_tol=refine_tol).value
    if p <= _P_FLOOR or p >= 1.0 - _P_FLOOR:
        raise DegenerateCalibrationError(
            f"exact p-value {p} at boundary {-m} is degenerate; "
            "no finite normal quantile exists"
        )
    sigma_b = _mle_cached(design, outcome, delta0_cap).sigma_hat
    d_hat_0 = -m + sigma_b * inverse_normal_cdf(1.0 - p)
    return EcCalibration(d_hat_0=d_hat_0, delta0_margin=m, p_exact=p,
                         sigma_at_boundary=sigma_b)


def z_ec(design: TrialDesign, outcome: Outcome, delta0_margin: float,
         delta_cap: float, calibration: EcCalibration | None = None,
         grid_points: int = DEFAULT_GRID_POINTS,
         refine_tol: float = DEFAULT_REFINE_TOL) -> StatValue:
    """EC statistic at a hypothesized difference on the cap scale.

    A precomputed ``calibration`` short-circuits the exact p-value
    search (it takes precedence over ``delta0_margin``, which must then
    match the margin it was built for).

    The restricted standard error can vanish only at ``delta_cap = 0``
    for all-failure or all-success data; the statistic then follows the
    extended-real convention of :class:`~riskdiff.score.StatValue` with
    the sign of ``d_hat_0 - delta_cap``.
    """
    d = _check_delta_cap(delta_cap)
    if calibration is None:
        calibration = calibrate_ec(design, outcome, delta0_margin,
                                   grid_points=grid_points,
                                   refine_tol=refine_tol)
    sigma = _mle_cached(design, outcome, d).sigma_hat
    num = calibration.d_hat_0 - d
    if sigma == 0.0:
        if num > 0.0:
            return StatValue(math.inf, degenerate=True)
        if num < 0.0:
            return StatValue(-math.inf, degenerate=True)
        return StatValue(0.0, degenerate=True)
    return StatValue(num / sigma)


def find_zec_extremum(design: TrialDesign, outcome: Outcome,
                      delta0_margin: float, interval,
                      calibration: EcCalibration | None = None,
                      scan_points: int = 2001,
                      refine_tol: float = 1e-8,
                      grid_points: int = DEFAULT_GRID_POINTS,
                      nuisance_refine_tol: float = DEFAULT_REFINE_TOL
                      ) -> ZecExtremum:
    """Locate the most prominent interior extremum of the Z_EC profile.

    Parameters
    ----------
    interval : pair of floats
        Search window on the margin (delta) scale, inside (-1, 1); the
        statistic is evaluated at ``delta_cap = -delta``.
    scan_points : int
        Initial grid resolution over the window.
    refine_tol : float
        Width to which the bracketing interval around the winning
        extremum is narrowed by golden section.

    Returns
    -------
    ZecExtremum
        The deepest interior dip or tallest interior bump relative to
        the window endpoints (whichever is more prominent), or a
        ``kind="none"`` result when the profile is monotone over the
        window.
    """
    lo, hi = (float(interval[0]), float(interval[1]))
    if not (-1.0 < lo < hi < 1.0):
        raise DomainError(
            f"interval must satisfy -1 < lo < hi < 1, got ({lo}, {hi})"
        )
    if not isinstance(scan_points, int) or scan_points < 5:
        raise DomainError("scan_points must be an int >= 5")
    if calibration is None:
        calibration = calibrate_ec(design, outcome, delta0_margin,
                                   grid_points=grid_points,
                                   refine_tol=nuisance_refine_tol)

    def profile(delta):
        return z_ec(design, outcome, delta0_margin, -delta,
                    calibration=calibration).value

    grid = np.linspace(lo, hi, scan_points)
    vals = np.array([profile(x) for x in grid])

    finite = np.isfinite(vals)
    edge_lo = vals[finite][0] if finite.any() else math.nan
    edge_hi = vals[finite][-1] if finite.any() else math.nan

    best = None  # (prominence, kind, grid index)
    for j in range(1, scan_points - 1):
        if not (finite[j - 1] and finite[j] and finite[j + 1]):
            continue
        if vals[j] < vals[j - 1] and vals[j] < vals[j + 1]:
            prom = min(edge_lo, edge_hi) - vals[j]
            cand = (prom, "min", j)
        elif vals[j] > vals[j - 1] and vals[j] > vals[j + 1]:
            prom = vals[j] - max(edge_lo, edge_hi)
            cand = (prom, "max", j)
        else:
            continue
        if best is None or cand[0] > best[0]:
            best = cand

    if best is None:
        return ZecExtremum(delta_star=math.nan, value=math.nan, kind="none")

    _, kind, j = best
    a, b = grid[j - 1], grid[j + 1]
    if kind == "min":
        x_star, neg_val = golden_section_max(lambda x: -profile(x), a, b,
                                             refine_tol)
        return ZecExtremum(delta_star=x_star, value=-neg_val, kind="min")
    x_star, val = golden_section_max(profile, a, b, refine_tol)
    return ZecExtremum(delta_star=x_star, value=val, kind="max")
