"""Exact coverage and expected width by full enumeration.

No simulation: for a fixed joint law ``(p_T, p_C)`` the probability
that a method's confidence interval covers the true difference is a
finite sum over the ``(n_T+1) x (n_C+1)`` outcomes,

    coverage = sum 1{p_T - p_C in CI(x)} * Bin(x_T) * Bin(x_C),

so exactness claims ("the coverage never drops below the nominal
level") are checked identically, not estimated.

Coverage is evaluated against the interval hull of each outcome's
confidence set, which is what a practitioner quoting "the interval"
experiences; for the EC method, whose raw acceptance set can be
disconnected, an optional flag scores the raw components instead so the
price of the gaps is measurable.

The per-outcome intervals depend only on the design (never on the true
law), so each design's table of intervals is computed once and shared
across the whole parameter grid.  The exact-hull scan grid additionally
receives the evaluated differences ``p_T - p_C`` verbatim, so a
difference sitting exactly on an acceptance boundary is judged by its
own test, not by its nearest scan neighbour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .ci import invert_asymptotic, invert_cz_exact, invert_ec
from .errors import DegenerateCalibrationError, DomainError, UsageError
from .exact import _log_pmf_matrix
from .kernel import TrialDesign, enumerate_outcomes

__all__ = [
    "CoverageCell",
    "CoverageSurface",
    "coverage_surface",
    "exact_coverage",
]

_METHODS = ("wald", "mee", "mn", "cz_exact", "ec")

# Knife-edge slack for hull membership: an endpoint and an evaluated
# difference that are equal in exact arithmetic may differ by float
# round-off.
_MEMBER_TOL = 1e-12


@dataclass(frozen=True)
class CoverageCell:
    """Coverage and expected width at one true parameter pair."""

    method: str
    alpha: float
    p_t: float
    p_c: float
    coverage: float
    expected_width: float
    delta0: float | None = None


@dataclass(frozen=True)
class CoverageSurface:
    """All cells of a parameter grid plus the worst-case summary."""

    method: str
    alpha: float
    p_grid_step: float
    cells: tuple
    min_coverage: float
    argmin_cell: CoverageCell
    delta0: float | None = None

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)


def _check_method(method: str) -> str:
    if method not in _METHODS:
        raise DomainError(
            f"method must be one of {', '.join(_METHODS)}; got {method!r}"
        )
    return method


def _require_margin(method: str, delta0) -> float | None:
    if method == "ec":
        if delta0 is None:
            raise UsageError("method 'ec' requires a noninferiority margin")
        return float(delta0)
    return None if delta0 is None else float(delta0)


@lru_cache(maxsize=8192)
def _interval_table(method: str, design: TrialDesign, alpha: float,
                    delta0, extra_scan, raw_components: bool):
    """Per-outcome coverage intervals for one design.

    Returns ``(los, his, widths)`` arrays over lexicographic outcomes.
    With ``raw_components`` (EC only) the arrays hold tuples of
    component intervals instead of hull endpoints.
    """
    outs = enumerate_outcomes(design)
    intervals = []
    for y in outs:
        if method in ("wald", "mee", "mn"):
            cs = invert_asymptotic(method, design, y, alpha)
        elif method == "cz_exact":
            cs = invert_cz_exact(design, y, alpha, extra_scan_values=extra_scan)
        else:
            try:
                cs = invert_ec(design, y, delta0, alpha)
            except DegenerateCalibrationError:
                # The EC statistic does not exist for this outcome (its
                # exact p-value is 0 or 1); the test that cannot be run
                # rejects nothing, so every difference is retained.
                cs = None
        if cs is None:
            intervals.append(((-1.0, 1.0),))
        elif not cs.components:
            intervals.append(())
        elif raw_components:
            intervals.append(cs.components)
        else:
            intervals.append((cs.hull,))
    return tuple(intervals)


def _cell(method, design, p_t, p_c, alpha, delta0, intervals) -> CoverageCell:
    d = p_t - p_c
    w_t = np.exp(_log_pmf_matrix(design.n_t, np.array([p_t]))[:, 0])
    w_c = np.exp(_log_pmf_matrix(design.n_c, np.array([p_c]))[:, 0])
    weights = np.outer(w_t, w_c).ravel()
    cov = 0.0
    ew = 0.0
    for w, comps in zip(weights, intervals):
        width = sum(hi - lo for lo, hi in comps)
        ew += w * width
        if any(lo - _MEMBER_TOL <= d <= hi + _MEMBER_TOL
               for lo, hi in comps):
            cov += w
    return CoverageCell(method=method, alpha=alpha, p_t=p_t, p_c=p_c,
                        coverage=min(cov, 1.0), expected_width=ew,
                        delta0=delta0)


def exact_coverage(method: str, design: TrialDesign, p_t: float,
                   p_c: float, alpha: float, delta0=None,
                   raw_components: bool = False) -> CoverageCell:
    """Exact coverage of one method at one true parameter pair.

    Parameters
    ----------
    method : str
        "wald", "mee", "mn", "cz_exact" or "ec".
    p_t, p_c : float
        True success probabilities, each in [0, 1].
    alpha : float
        Nominal level of the intervals.
    delta0 : float, optional
        Noninferiority margin; required for "ec", ignored otherwise.
    raw_components : bool
        Score the raw (possibly disconnected) acceptance set rather
        than its hull.  Only meaningful for "ec".

    Returns
    -------
    CoverageCell
    """
    _check_method(method)
    m = _require_margin(method, delta0)
    if not (0.0 <= p_t <= 1.0 and 0.0 <= p_c <= 1.0):
        raise DomainError(
            f"probabilities must lie in [0, 1], got ({p_t}, {p_c})"
        )
    a = float(alpha)
    if not (0.0 < a < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    extra = (float(p_t) - float(p_c),) if method == "cz_exact" else ()
    intervals = _interval_table(method, design, a, m, extra,
                                bool(raw_components))
    return _cell(method, design, float(p_t), float(p_c), a, m, intervals)


def coverage_surface(method: str, design: TrialDesign, p_grid_step: float,
                     alpha: float, delta0=None,
                     raw_components: bool = False,
                     threads: int = 0) -> CoverageSurface:
    """Exact coverage over the full ``(p_T, p_C)`` grid.

    Parameters
    ----------
    p_grid_step : float
        Grid spacing on both probability axes, in (0, 0.5].
    threads : int
        Accepted for interface stability (0 = auto); evaluation is
        sequential and deterministic in this implementation.

    Returns
    -------
    CoverageSurface
        Cells in row-major (p_T, then p_C) order plus the minimum
        coverage and the cell attaining it (first such cell in scan
        order on ties).
    """
    _check_method(method)
    m = _require_margin(method, delta0)
    step = float(p_grid_step)
    if not (0.0 < step <= 0.5):
        raise DomainError(f"p_grid_step must lie in (0, 0.5], got {p_grid_step}")
    if not isinstance(threads, int) or threads < 0:
        raise DomainError(f"threads must be a nonnegative int, got {threads}")
    a = float(alpha)
    if not (0.0 < a < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")

    n_steps = int(math.floor(1.0 / step + 1e-9))
    probs = [min(k * step, 1.0) for k in range(n_steps + 1)]
    if probs[-1] < 1.0 - 1e-12:
        probs.append(1.0)

    if method == "cz_exact":
        extra = tuple(sorted({pt - pc for pt in probs for pc in probs}))
    else:
        extra = ()
    intervals = _interval_table(method, design, a, m, extra,
                                bool(raw_components))

    cells = []
    for p_t in probs:
        for p_c in probs:
            cells.append(_cell(method, design, p_t, p_c, a, m, intervals))
    worst = min(cells, key=lambda c: c.coverage)
    return CoverageSurface(method=method, alpha=a, p_grid_step=step,
                           cells=tuple(cells), min_coverage=worst.coverage,
                           argmin_cell=worst, delta0=m)
