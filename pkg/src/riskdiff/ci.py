"""Confidence sets for the risk difference by test inversion.

Every construction here is "the set of hypothesized differences the
corresponding level-alpha test does not reject":

* ``wald``  — closed form, ``d_hat +/- z_{1-a/2} * s``;
* ``mee`` / ``mn`` — scan plus bisection on ``|Z(delta)| = z_{1-a/2}``;
* ``cz``    — two one-sided exact tests at ``alpha/2`` each, evaluated
  on the scan grid (endpoints are reported at grid resolution: the
  exact p-value is not continuous in the hypothesized difference, so
  there is no root to polish between grid points);
* ``ec``    — inversion of the exact-corrected statistic.  The default
  inverts the one-sided (noninferiority-relevant) test, which keeps the
  boundary consistency rule exact: the null boundary ``-delta0`` lies
  outside the set precisely when the exact p-value falls below
  ``alpha/2``.  ``sides="two"`` inverts ``|Z_EC|`` instead, which gives
  a bounded set but ties membership at the boundary to the two-sided
  statistic rather than to the exact test.

Because an inverted set need not be an interval (the EC statistic in
particular can be non-monotone), results carry the raw ``components``
plus their interval ``hull`` and the ``gaps`` between components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._search import bisect_sign_change
from .errors import DomainError
from .exact import DEFAULT_GRID_POINTS, DEFAULT_REFINE_TOL, _lex_index, \
    _pvalue_table, exact_pvalue
from .kernel import Outcome, TrialDesign, inverse_normal_cdf, normal_sf
from .score import unrestricted_estimate, z_mee, z_mn, z_wald
from .ec import calibrate_ec, z_ec

__all__ = [
    "DOMAIN_EDGE_EPS",
    "ConfidenceSet",
    "invert_asymptotic",
    "invert_cz_exact",
    "invert_ec",
    "noninferiority_decision",
]

# Statistics are only defined strictly inside (-1, 1); scans stop this
# far from the edges, and runs that reach the last scan point are
# reported as extending to the closed endpoint.
DOMAIN_EDGE_EPS = 1e-9

DEFAULT_SCAN_POINTS = 4001
_BISECT_TOL = 1e-9

_ASYMPTOTIC = {"wald": z_wald, "mee": z_mee, "mn": z_mn}


@dataclass(frozen=True)
class ConfidenceSet:
    """A test-inversion confidence set on the cap scale.

    Attributes
    ----------
    method : str
        One of "wald", "mee", "mn", "cz_exact", "ec".
    alpha : float
        Nominal two-sided level (each one-sided exact test in
        "cz_exact" runs at ``alpha/2``).
    components : tuple of (float, float)
        Disjoint closed intervals, in increasing order.  Empty when the
        test rejects every difference (possible only in pathological
        corners).
    hull : (float, float) or None
        Smallest interval containing all components.
    gaps : tuple of (float, float)
        Open intervals between consecutive components.
    margin_delta0 : float or None
        The noninferiority margin, for methods that need one (ec).
    boundary_consistent : bool or None
        For "ec": whether membership of the boundary ``-delta0`` agreed
        with the exact test (``p_exact >= alpha/2``) when the set was
        built.  None for other methods.
    """

    method: str
    alpha: float
    components: tuple
    hull: tuple | None
    gaps: tuple
    margin_delta0: float | None = None
    boundary_consistent: bool | None = None

    def contains(self, delta_cap: float, tol: float = 0.0) -> bool:
        """Membership of a point in the union of components."""
        return any(lo - tol <= delta_cap <= hi + tol
                   for lo, hi in self.components)

    @property
    def width(self) -> float:
        """Total length of the components."""
        return sum(hi - lo for lo, hi in self.components)


def _check_alpha(alpha: float) -> float:
    a = float(alpha)
    if not (0.0 < a < 1.0) or math.isnan(a):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return a


def _scan_grid(scan_points: int) -> np.ndarray:
    if not isinstance(scan_points, int) or scan_points < 11:
        raise DomainError(f"scan_points must be an int >= 11, got {scan_points}")
    return np.linspace(-1.0 + DOMAIN_EDGE_EPS, 1.0 - DOMAIN_EDGE_EPS,
                       scan_points)


def _components_from_margin(grid: np.ndarray, margin, accept: np.ndarray,
                            bisect_tol: float):
    """Assemble components from an acceptance mask over a grid, with the
    run boundaries polished by bisection of the (continuous) margin
    function.  Runs touching the scan edge keep the edge grid value as
    their endpoint (the statistic is undefined at the closed ends of
    [-1, 1], so there is no crossing to refine there)."""
    comps = []
    n = len(grid)
    j = 0
    while j < n:
        if not accept[j]:
            j += 1
            continue
        k = j
        while k + 1 < n and accept[k + 1]:
            k += 1
        if j == 0:
            lo = grid[0]
        else:
            lo = bisect_sign_change(margin, grid[j - 1], grid[j], bisect_tol)
        if k == n - 1:
            hi = grid[n - 1]
        else:
            hi = bisect_sign_change(margin, grid[k], grid[k + 1], bisect_tol)
        comps.append((float(lo), float(hi)))
        j = k + 1
    return tuple(comps)


def _components_from_mask(grid: np.ndarray, accept: np.ndarray,
                          close_edges: bool = False):
    """Grid-resolution components (no refinement): maximal runs of
    accepted points.  With ``close_edges`` a run reaching the scan edge
    is closed at the physical endpoint of the parameter space; the
    gap-filled exact hull uses this so that degenerate parameter corners
    (difference exactly +/-1) stay covered."""
    comps = []
    n = len(grid)
    j = 0
    while j < n:
        if not accept[j]:
            j += 1
            continue
        k = j
        while k + 1 < n and accept[k + 1]:
            k += 1
        lo = -1.0 if (j == 0 and close_edges) else float(grid[j])
        hi = 1.0 if (k == n - 1 and close_edges) else float(grid[k])
        comps.append((lo, hi))
        j = k + 1
    return tuple(comps)


def _finish_set(method, alpha, comps, margin_delta0=None,
                boundary_consistent=None) -> ConfidenceSet:
    if comps:
        hull = (comps[0][0], comps[-1][1])
        gaps = tuple((comps[i][1], comps[i + 1][0])
                     for i in range(len(comps) - 1))
    else:
        hull = None
        gaps = ()
    return ConfidenceSet(method=method, alpha=alpha, components=comps,
                         hull=hull, gaps=gaps, margin_delta0=margin_delta0,
                         boundary_consistent=boundary_consistent)


def invert_asymptotic(method: str, design: TrialDesign, outcome: Outcome,
                      alpha: float, scan_points: int = DEFAULT_SCAN_POINTS,
                      bisect_tol: float = _BISECT_TOL) -> ConfidenceSet:
    """Two-sided confidence set ``{delta : |Z(delta)| < z_{1-a/2}}`` for
    a score-type statistic.

    ``method`` is "wald" (closed form), "mee" or "mn" (scan plus
    bisection; the statistic is monotone in the hypothesized difference,
    so the result is a single interval).
    """
    if method not in _ASYMPTOTIC:
        raise DomainError(f"unknown asymptotic method {method!r}")
    a = _check_alpha(alpha)
    outcome.validate(design)
    crit = inverse_normal_cdf(1.0 - a / 2.0)

    if method == "wald":
        d_hat = unrestricted_estimate(design, outcome)
        p_t = outcome.x_t / design.n_t
        p_c = outcome.x_c / design.n_c
        var = p_t * (1.0 - p_t) / design.n_t + p_c * (1.0 - p_c) / design.n_c
        half = crit * math.sqrt(var)
        lo = max(d_hat - half, -1.0)
        hi = min(d_hat + half, 1.0)
        return _finish_set("wald", a, ((lo, hi),))

    stat = _ASYMPTOTIC[method]

    def margin(delta):
        return crit - abs(stat(design, outcome, delta).value)

    grid = _scan_grid(scan_points)
    vals = np.array([margin(x) for x in grid])
    comps = _components_from_margin(grid, margin, vals > 0.0, bisect_tol)
    return _finish_set(method, a, comps)


def invert_cz_exact(design: TrialDesign, outcome: Outcome, alpha: float,
                    scan_points: int = DEFAULT_SCAN_POINTS,
                    grid_points: int = DEFAULT_GRID_POINTS,
                    refine_tol: float = DEFAULT_REFINE_TOL,
                    extra_scan_values=None) -> ConfidenceSet:
    """Exact-test inversion: differences where both one-sided exact
    p-values stay at or above ``alpha/2``.

    ``extra_scan_values`` injects additional hypothesized differences
    into the scan grid (deduplicated, kept in order); coverage
    enumeration uses this to make sure every achievable point estimate
    is tested verbatim.  Because the exact p-value jumps as the tail
    recomposes, endpoints are reported at grid resolution instead of
    being bisected.
    """
    a = _check_alpha(alpha)
    outcome.validate(design)
    grid = _scan_grid(scan_points)
    if extra_scan_values is not None:
        extra = [float(v) for v in extra_scan_values
                 if -1.0 + DOMAIN_EDGE_EPS <= v <= 1.0 - DOMAIN_EDGE_EPS]
        if extra:
            grid = np.unique(np.concatenate([grid, np.array(extra)]))
    i = _lex_index(design, outcome)
    half = a / 2.0
    accept = np.empty(len(grid), dtype=bool)
    for j, delta in enumerate(grid):
        p_hi = _pvalue_table(design, float(delta), grid_points, refine_tol,
                             "larger")[0][i]
        if p_hi < half:
            accept[j] = False
            continue
        p_lo = _pvalue_table(design, float(delta), grid_points, refine_tol,
                             "smaller")[0][i]
        accept[j] = p_lo >= half
    comps = _components_from_mask(grid, accept, close_edges=True)
    return _finish_set("cz_exact", a, comps)


def invert_ec(design: TrialDesign, outcome: Outcome, delta0: float,
              alpha: float, sides: str = "lower",
              scan_points: int = DEFAULT_SCAN_POINTS,
              bisect_tol: float = _BISECT_TOL,
              grid_points: int = DEFAULT_GRID_POINTS,
              refine_tol: float = DEFAULT_REFINE_TOL) -> ConfidenceSet:
    """Confidence set from the exact-corrected statistic.

    ``sides="lower"`` (default) inverts the one-sided test,
    ``{delta : Z_EC(delta) < z_{1-a/2}}``; ``sides="two"`` inverts
    ``{delta : |Z_EC(delta)| < z_{1-a/2}}``.  The boundary ``-delta0``
    is always part of the scan grid so the reported components decide
    its membership the same way a direct test at the boundary would.

    Raises
    ------
    DegenerateCalibrationError
        When the exact p-value at the boundary is 0 or 1 and the EC
        statistic does not exist.
    """
    if sides not in ("lower", "two"):
        raise DomainError(f"sides must be 'lower' or 'two', got {sides!r}")
    a = _check_alpha(alpha)
    outcome.validate(design)
    cal = calibrate_ec(design, outcome, delta0,
                       grid_points=grid_points, refine_tol=refine_tol)
    crit = inverse_normal_cdf(1.0 - a / 2.0)
    boundary = -cal.delta0_margin

    def margin(delta):
        z = z_ec(design, outcome, cal.delta0_margin, delta,
                 calibration=cal).value
        zz = abs(z) if sides == "two" else z
        return crit - zz

    grid = _scan_grid(scan_points)
    grid = np.unique(np.append(grid, boundary))
    vals = np.array([margin(x) for x in grid])
    comps = _components_from_margin(grid, margin, vals > 0.0, bisect_tol)

    member = any(lo <= boundary <= hi for lo, hi in comps)
    consistent = member == (cal.p_exact >= a / 2.0)
    return _finish_set("ec", a, comps, margin_delta0=cal.delta0_margin,
                       boundary_consistent=consistent)


def noninferiority_decision(method: str, design: TrialDesign,
                            outcome: Outcome, delta0: float, alpha: float):
    """One-sided noninferiority test at level ``alpha/2``.

    The null is "the difference is at or below ``-delta0``"; rejection
    claims noninferiority.  Returns ``(reject, p_used)`` where
    ``p_used`` is the one-sided p-value the decision is based on: the
    exact p-value for "cz_exact" and "ec" (the EC statistic reproduces
    the exact test at the boundary by construction), the asymptotic
    upper-tail probability for the score methods and "wald".
    """
    a = _check_alpha(alpha)
    outcome.validate(design)
    m = float(delta0)
    if not (0.0 < m < 1.0):
        raise DomainError(f"margin must lie in (0, 1), got {delta0}")
    boundary = -m

    if method in ("cz_exact", "ec"):
        p = exact_pvalue(design, outcome, boundary).value
    elif method in ("mee", "mn"):
        z = (z_mee if method == "mee" else z_mn)(design, outcome, boundary)
        p = 0.0 if z.value == math.inf else (
            1.0 if z.value == -math.inf else normal_sf(z.value))
    elif method == "wald":
        z = z_wald(design, outcome, boundary)
        p = 0.0 if z.value == math.inf else (
            1.0 if z.value == -math.inf else normal_sf(z.value))
    else:
        raise DomainError(f"unknown method {method!r}")
    return p < a / 2.0, p
