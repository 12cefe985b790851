"""Exact independence diagnostics on subgroup count tables.

Two verifiers, both computed in rational arithmetic so that exact
claims stay exact:

- `check_mimicking` measures how far each class's group distribution
  sits from a reference class's: max over (class, group) of
  |P(b | y2) - P(b | y_ref)|. A table produced by the mimicking sampler
  keeps this below 1 / (smallest retained class size).

- `verify_independence` measures how far the table is from class/group
  independence: max over (class, group) of |P(y | b) - P(y)|. When all
  classes share one group distribution this is exactly zero, and in
  general it is bounded by a quantity derived from the mimicking
  spread, which the report carries alongside the residual:

      P(y|b) - P(y) = P(y) * sum_{j != y} P(j) * (P(b|y) - P(b|j)) / P(b)

  so a spread of at most delta between any two class-conditional group
  distributions forces |P(y|b) - P(y)| <= delta * P(y)(1-P(y)) / P(b).
  Reporting both sides makes the implication machine-checkable on any
  table.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dataset import SubgroupTable
from .errors import DataError

__all__ = [
    "IndependenceReport",
    "check_mimicking",
    "verify_independence",
    "rounding_bound",
]


@dataclass(frozen=True)
class IndependenceReport:
    """Outcome of one diagnostic: residuals, tolerance, verdict.

    `kind` is "mimicking" or "independence". `residual_matrix[y, b]`
    holds the per-cell residual (zero in skipped cells). For
    independence reports, `premise_spread` is the largest gap between
    any two class-conditional group distributions and `derived_bound`
    the residual ceiling it implies. All residuals are non-negative and
    `passed` holds exactly when max_residual <= tolerance.
    """

    kind: str
    max_residual: float
    residual_matrix: np.ndarray
    tolerance: float
    passed: bool
    reference_class: int | None = None
    premise_spread: float | None = None
    derived_bound: float | None = None
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        m = np.asarray(self.residual_matrix, dtype=np.float64)
        m.setflags(write=False)
        object.__setattr__(self, "residual_matrix", m)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "max_residual": self.max_residual,
            "residual_matrix": self.residual_matrix.tolist(),
            "tolerance": self.tolerance,
            "passed": self.passed,
        }
        if self.reference_class is not None:
            out["reference_class"] = int(self.reference_class)
        if self.premise_spread is not None:
            out["premise_spread"] = self.premise_spread
        if self.derived_bound is not None:
            out["derived_bound"] = self.derived_bound
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def _row_fractions(counts: np.ndarray, y: int) -> list[Fraction]:
    t = int(counts[y].sum())
    return [Fraction(int(c), t) for c in counts[y]]


def _require_nonzero_rows(counts: np.ndarray) -> None:
    totals = counts.sum(axis=1)
    if (totals == 0).any():
        y = int(np.argmax(totals == 0))
        raise DataError(f"class {y} has no samples")


def rounding_bound(t: SubgroupTable) -> float:
    """1 / (smallest nonzero class size): the worst-case residual a
    correctly mimicked table can show due to integer counts."""
    totals = t.row_totals()
    live = totals[totals > 0]
    if len(live) == 0:
        raise DataError("empty table")
    return 1.0 / int(live.min())


def check_mimicking(
    t: SubgroupTable, reference_class: int, tol: float | None = None
) -> IndependenceReport:
    """Spread of each class's group distribution against a reference class.

    Residual cell (y2, b) is |P(b | y2) - P(b | reference)|; the
    reference row is zero. Default tolerance is twice the rounding
    bound of the table.
    """
    counts = t.counts
    if not 0 <= reference_class < t.num_classes:
        raise DataError(
            f"reference class {reference_class} outside 0..{t.num_classes - 1}"
        )
    _require_nonzero_rows(counts)
    ref = _row_fractions(counts, reference_class)
    matrix = np.zeros(counts.shape, dtype=np.float64)
    max_res = Fraction(0)
    for y2 in range(t.num_classes):
        if y2 == reference_class:
            continue
        row = _row_fractions(counts, y2)
        for b in range(t.num_groups):
            r = abs(row[b] - ref[b])
            matrix[y2, b] = float(r)
            max_res = max(max_res, r)
    if tol is None:
        tol_frac = Fraction(2, int(t.row_totals().min()))
    else:
        tol_frac = Fraction(tol)
    return IndependenceReport(
        kind="mimicking",
        max_residual=float(max_res),
        residual_matrix=matrix,
        tolerance=float(tol_frac),
        passed=max_res <= tol_frac,
        reference_class=reference_class,
    )


def verify_independence(t: SubgroupTable, tol: float | None = None) -> IndependenceReport:
    """Distance of a table from class/group independence.

    Residual cell (y, b) is |P(y | b) - P(y)|. The report also carries
    the mimicking premise spread (max gap between any two
    class-conditional group distributions) and the residual bound that
    spread implies, so the implication "identical conditionals force
    independence" can be checked numerically: at spread zero the
    residual must be exactly zero. Groups with no samples at all are
    skipped with a note. Default tolerance is twice the rounding bound.
    """
    counts = t.counts
    _require_nonzero_rows(counts)
    C, G = counts.shape
    total = int(counts.sum())
    col_totals = counts.sum(axis=0)
    row_totals = counts.sum(axis=1)
    notes = []

    p_class = [Fraction(int(r), total) for r in row_totals]
    cond = [_row_fractions(counts, y) for y in range(C)]  # P(b|y)

    matrix = np.zeros((C, G), dtype=np.float64)
    max_res = Fraction(0)
    spread = Fraction(0)
    bound = Fraction(0)
    for b in range(G):
        if col_totals[b] == 0:
            notes.append(f"group {b} has no samples; skipped")
            continue
        p_b = Fraction(int(col_totals[b]), total)
        for y in range(C):
            r = abs(Fraction(int(counts[y, b]), int(col_totals[b])) - p_class[y])
            matrix[y, b] = float(r)
            max_res = max(max_res, r)
        col_spread = max(
            abs(cond[i][b] - cond[j][b]) for i in range(C) for j in range(C)
        )
        spread = max(spread, col_spread)
    for b in range(G):
        if col_totals[b] == 0:
            continue
        p_b = Fraction(int(col_totals[b]), total)
        for y in range(C):
            bound = max(bound, spread * p_class[y] * (1 - p_class[y]) / p_b)
    if tol is None:
        tol_frac = Fraction(2, int(row_totals.min()))
    else:
        tol_frac = Fraction(tol)
    return IndependenceReport(
        kind="independence",
        max_residual=float(max_res),
        residual_matrix=matrix,
        tolerance=float(tol_frac),
        passed=max_res <= tol_frac,
        premise_spread=float(spread),
        derived_bound=float(bound),
        notes=tuple(notes),
    )
