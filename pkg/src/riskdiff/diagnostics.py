"""Pathology scanners for exact and exact-corrected inference.

The constructions in this package are known to misbehave in specific,
checkable ways: the EC statistic need not be monotone in the margin, the
exact p-value need not be monotone in the null boundary, those
inversions can make a larger (easier) margin fail where a smaller one
succeeded, and non-monotone statistics can break the nesting of
confidence sets across levels.  Each scanner here walks a grid, and
every finding is packaged as a :class:`ViolationCertificate` carrying
the concrete witness points so the violation can be reproduced from
scratch by ``verify()`` — findings are evidence, not side effects of a
particular run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ci import DEFAULT_SCAN_POINTS, _scan_grid, invert_asymptotic, \
    invert_cz_exact, invert_ec
from .ec import calibrate_ec, z_ec
from .errors import DomainError
from .exact import DEFAULT_GRID_POINTS, DEFAULT_REFINE_TOL, _lex_index, \
    _pvalue_table, exact_pvalue
from .kernel import Outcome, TrialDesign, enumerate_outcomes, \
    inverse_normal_cdf
from .score import _check_delta_cap, p_asy, z_mee, z_mn, z_wald

__all__ = [
    "LiberalConservativeMap",
    "MapRow",
    "ViolationCertificate",
    "liberal_conservative_map",
    "scan_ci_nesting",
    "scan_margin_coherence",
    "scan_pexact_monotonicity",
    "scan_zec_monotonicity",
]

_ZEC_TOL = 1e-9
_PEXACT_TOL = 1e-9
_NESTING_TOL = 1e-9


@dataclass(frozen=True)
class ViolationCertificate:
    """A reproducible witness of one concrete incoherence.

    Attributes
    ----------
    kind : str
        One of "zec_nonmonotone", "pexact_nonmonotone",
        "margin_incoherence", "nesting_failure".
    design, outcome :
        Where the violation lives.
    witness : dict
        The specific grid points and the quantities computed at them.
    tolerance_used : float
        Slack the detecting scan demanded; ``verify()`` recomputes the
        witness quantities and checks the violation still clears it.
    """

    kind: str
    design: TrialDesign
    outcome: Outcome
    witness: dict
    tolerance_used: float

    def verify(self) -> bool:
        """Recompute the witness quantities from scratch and confirm the
        claimed violation with margin at least ``tolerance_used``."""
        w = self.witness
        if self.kind == "zec_nonmonotone":
            vals = [z_ec(self.design, self.outcome, w["delta0_margin"],
                         -d).value for d in w["delta_points"]]
            v1, v2, v3 = vals
            if w["pattern"] == "min":
                margin = min(v1, v3) - v2
            else:
                margin = v2 - max(v1, v3)
            return margin >= self.tolerance_used
        if self.kind == "pexact_nonmonotone":
            a, b = w["delta_caps"]
            pa = exact_pvalue(self.design, self.outcome, a).value
            pb = exact_pvalue(self.design, self.outcome, b).value
            return pa - pb >= self.tolerance_used
        if self.kind == "margin_incoherence":
            m_small, m_large = w["margins"]
            half = w["alpha"] / 2.0
            p_small = exact_pvalue(self.design, self.outcome,
                                   -m_small).value
            p_large = exact_pvalue(self.design, self.outcome,
                                   -m_large).value
            return p_small < half <= p_large
        if self.kind == "nesting_failure":
            inside, outside = _nesting_membership(
                w["method"], self.design, self.outcome,
                w.get("delta0_margin"), w["alphas"], w["delta_cap"])
            return inside and not outside
        raise DomainError(f"unknown certificate kind {self.kind!r}")


def scan_zec_monotonicity(design: TrialDesign, outcome: Outcome,
                          delta0_margin: float, delta_grid,
                          tol: float = _ZEC_TOL):
    """Find local-extremum triples of the Z_EC profile over a margin
    grid.

    Every adjacent triple ``d1 < d2 < d3`` with
    ``z_ec(d2) < min(z_ec(d1), z_ec(d3)) - tol`` (or the mirrored
    maximum pattern) yields one certificate.  A monotone profile yields
    none.

    Raises the calibration error of the EC engine when the outcome has
    a degenerate exact p-value at the margin boundary.
    """
    grid = np.asarray(delta_grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 3:
        raise DomainError("delta_grid must be a 1-d grid with >= 3 points")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("delta_grid must be strictly increasing")
    cal = calibrate_ec(design, outcome, delta0_margin)
    vals = np.array([
        z_ec(design, outcome, cal.delta0_margin, -d, calibration=cal).value
        for d in grid
    ])
    certs = []
    for j in range(1, len(grid) - 1):
        v1, v2, v3 = vals[j - 1], vals[j], vals[j + 1]
        if not (math.isfinite(v1) and math.isfinite(v2)
                and math.isfinite(v3)):
            continue
        if v2 < min(v1, v3) - tol:
            pattern = "min"
        elif v2 > max(v1, v3) + tol:
            pattern = "max"
        else:
            continue
        certs.append(ViolationCertificate(
            kind="zec_nonmonotone", design=design, outcome=outcome,
            witness={
                "delta_points": (float(grid[j - 1]), float(grid[j]),
                                 float(grid[j + 1])),
                "zec_values": (float(v1), float(v2), float(v3)),
                "pattern": pattern,
                "delta0_margin": cal.delta0_margin,
            },
            tolerance_used=tol,
        ))
    return certs


def scan_pexact_monotonicity(design: TrialDesign, outcome: Outcome,
                             delta_cap_grid, tol: float = _PEXACT_TOL,
                             grid_points: int = DEFAULT_GRID_POINTS,
                             refine_tol: float = DEFAULT_REFINE_TOL):
    """Certify decreases of the exact p-value along increasing null
    boundaries.

    Moving the null boundary up (toward the point estimate) should not
    shrink the p-value; every adjacent pair where it drops by more than
    ``tol`` is certified.
    """
    grid = np.asarray(delta_cap_grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise DomainError("delta_cap_grid must be a 1-d grid with >= 2 points")
    if np.any(np.diff(grid) <= 0):
        raise DomainError("delta_cap_grid must be strictly increasing")
    outcome.validate(design)
    i = _lex_index(design, outcome)
    ps = [float(_pvalue_table(design, _check_delta_cap(float(d)),
                              grid_points, refine_tol, "larger")[0][i])
          for d in grid]
    certs = []
    for j in range(len(grid) - 1):
        if ps[j] - ps[j + 1] > tol:
            certs.append(ViolationCertificate(
                kind="pexact_nonmonotone", design=design, outcome=outcome,
                witness={
                    "delta_caps": (float(grid[j]), float(grid[j + 1])),
                    "p_values": (ps[j], ps[j + 1]),
                },
                tolerance_used=tol,
            ))
    return certs


def scan_margin_coherence(design: TrialDesign, outcome: Outcome,
                          alpha: float, margin_grid,
                          grid_points: int = DEFAULT_GRID_POINTS,
                          refine_tol: float = DEFAULT_REFINE_TOL):
    """Certify margin pairs where the easier hypothesis fails.

    A margin ``m_large > m_small`` puts the null boundary further from
    the point estimate, so rejecting at ``m_small`` should imply
    rejecting at ``m_large``.  Every grid pair with
    ``p_exact(-m_small) < alpha/2 <= p_exact(-m_large)`` is certified.
    """
    a = float(alpha)
    if not (0.0 < a < 1.0) or math.isnan(a):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    margins = np.asarray(margin_grid, dtype=float)
    if margins.ndim != 1 or len(margins) < 2:
        raise DomainError("margin_grid must be a 1-d grid with >= 2 points")
    if np.any(np.diff(margins) <= 0):
        raise DomainError("margin_grid must be strictly increasing")
    if not (0.0 < margins[0] and margins[-1] < 1.0):
        raise DomainError("margins must lie in (0, 1)")
    outcome.validate(design)
    i = _lex_index(design, outcome)
    half = a / 2.0
    ps = [float(_pvalue_table(design, -float(m), grid_points, refine_tol,
                              "larger")[0][i])
          for m in margins]
    certs = []
    for j in range(len(margins)):
        if ps[j] >= half:
            continue
        for k in range(j + 1, len(margins)):
            if ps[k] >= half:
                certs.append(ViolationCertificate(
                    kind="margin_incoherence", design=design,
                    outcome=outcome,
                    witness={
                        "margins": (float(margins[j]), float(margins[k])),
                        "p_values": (ps[j], ps[k]),
                        "alpha": a,
                    },
                    tolerance_used=0.0,
                ))
    return certs


def _level_set(method, design, outcome, delta0_margin, alpha):
    if method in ("wald", "mee", "mn"):
        return invert_asymptotic(method, design, outcome, alpha)
    if method == "cz_exact":
        return invert_cz_exact(design, outcome, alpha)
    if method == "ec":
        return invert_ec(design, outcome, delta0_margin, alpha)
    raise DomainError(f"unknown method {method!r}")


def _pointwise_member(method, design, outcome, delta0_margin, alpha,
                      delta_cap):
    """Ground-truth membership of one difference in the level set,
    bypassing scan resolution for the statistic-based methods."""
    crit = inverse_normal_cdf(1.0 - alpha / 2.0)
    if method in ("wald", "mee", "mn"):
        stat = {"wald": z_wald, "mee": z_mee, "mn": z_mn}[method]
        return abs(stat(design, outcome, delta_cap).value) < crit
    if method == "ec":
        return z_ec(design, outcome, delta0_margin, delta_cap).value < crit
    if method == "cz_exact":
        # Gap-filled: membership is hull membership of the scanned set.
        hull = invert_cz_exact(design, outcome, alpha).hull
        return hull is not None and hull[0] <= delta_cap <= hull[1]
    raise DomainError(f"unknown method {method!r}")


def _nesting_membership(method, design, outcome, delta0_margin, alphas,
                        delta_cap):
    alpha_hi, alpha_lo = alphas
    inside = _pointwise_member(method, design, outcome, delta0_margin,
                               alpha_hi, delta_cap)
    outside = _pointwise_member(method, design, outcome, delta0_margin,
                                alpha_lo, delta_cap)
    return inside, outside


def scan_ci_nesting(method: str, design: TrialDesign, outcome: Outcome,
                    delta0_margin, alpha_pairs,
                    scan_points: int = DEFAULT_SCAN_POINTS,
                    tol: float = _NESTING_TOL):
    """Search for differences accepted at low confidence but rejected at
    high confidence.

    For each pair ``(alpha_hi, alpha_lo)`` with ``alpha_hi > alpha_lo``
    (so ``1 - alpha_hi`` is the lower confidence level), candidate
    differences — the union of both level sets' component endpoints and
    a uniform grid — are tested for membership in the
    ``(1 - alpha_hi)``-level set but not the ``(1 - alpha_lo)``-level
    set.  Properly nested constructions (monotone statistics, or the
    gap-filled exact hull) yield no certificates.
    """
    certs = []
    for alpha_hi, alpha_lo in alpha_pairs:
        if not (0.0 < alpha_lo < alpha_hi < 1.0):
            raise DomainError(
                f"need 0 < alpha_lo < alpha_hi < 1, got ({alpha_hi}, {alpha_lo})"
            )
        set_hi = _level_set(method, design, outcome, delta0_margin, alpha_hi)
        set_lo = _level_set(method, design, outcome, delta0_margin, alpha_lo)
        candidates = set()
        for cs in (set_hi, set_lo):
            for lo, hi in cs.components:
                for x in (lo, hi, lo - 1e-7, lo + 1e-7, hi - 1e-7,
                          hi + 1e-7):
                    if -1.0 < x < 1.0:
                        candidates.add(float(x))
        candidates.update(float(x) for x in _scan_grid(scan_points))
        for delta_cap in sorted(candidates):
            inside, outside = _nesting_membership(
                method, design, outcome, delta0_margin,
                (alpha_hi, alpha_lo), delta_cap)
            if inside and not outside:
                certs.append(ViolationCertificate(
                    kind="nesting_failure", design=design, outcome=outcome,
                    witness={
                        "method": method,
                        "delta_cap": delta_cap,
                        "alphas": (float(alpha_hi), float(alpha_lo)),
                        "delta0_margin": delta0_margin,
                    },
                    tolerance_used=tol,
                ))
    return certs


@dataclass(frozen=True)
class MapRow:
    """One outcome's asymptotic-versus-exact comparison."""

    outcome: Outcome
    p_asy: float
    p_exact: float
    relation: str  # "liberal" (p_asy < p_exact), "conservative", "equal"


@dataclass(frozen=True)
class LiberalConservativeMap:
    """All outcomes of a design classified against the exact reference.

    ``liberal_fraction`` is the share of outcomes where the asymptotic
    score test is anticonservative (its p-value is below the exact
    one).
    """

    design: TrialDesign
    delta0_cap: float
    rows: tuple
    liberal_fraction: float


def liberal_conservative_map(design: TrialDesign, delta0_cap: float,
                             grid_points: int = DEFAULT_GRID_POINTS,
                             refine_tol: float = DEFAULT_REFINE_TOL
                             ) -> LiberalConservativeMap:
    """Compare the asymptotic score p-value with the exact one at a
    common null boundary for every outcome of the design."""
    d0 = _check_delta_cap(delta0_cap)
    values, _ = _pvalue_table(design, d0, grid_points, refine_tol, "larger")
    rows = []
    n_liberal = 0
    for i, y in enumerate(enumerate_outcomes(design)):
        pa = p_asy(design, y, d0)
        pe = float(values[i])
        if pa < pe:
            relation = "liberal"
            n_liberal += 1
        elif pa > pe:
            relation = "conservative"
        else:
            relation = "equal"
        rows.append(MapRow(outcome=y, p_asy=pa, p_exact=pe,
                           relation=relation))
    return LiberalConservativeMap(
        design=design, delta0_cap=d0, rows=tuple(rows),
        liberal_fraction=n_liberal / len(rows))
