"""Subgroup-aware evaluation metrics.

All three scores are computed from per-subgroup tallies on a grouped
test set, with the training-time subgroup table deciding which
subgroups count as minority and which group dominates each class:

- unbiased accuracy: unweighted mean of per-subgroup accuracies, so
  every subgroup matters equally regardless of its test-set size.
- bias-conflict accuracy: the same mean restricted to minority
  subgroups, i.e. every (class, group) cell whose group is not the
  class's most common group in training.
- bias amplification: how much the model over-assigns each predicted
  class to that class's training-dominant group, relative to the 1/G
  share a group-blind predictor shows on a balanced test set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import GroupedDataset, SubgroupTable
from .errors import DataError

__all__ = [
    "MetricsReport",
    "subgroup_accuracy_matrix",
    "unbiased_accuracy",
    "minority_subgroups",
    "bias_conflict",
    "bias_amplification",
    "evaluate_predictions",
    "evaluate_model",
]


@dataclass(frozen=True)
class MetricsReport:
    """Per-subgroup accuracies plus the three aggregate scores.

    `minority` lists the (class, group) cells behind `bc`; `dominant`
    holds the training-dominant group per class; `tie_classes` flags
    classes whose dominant group was a tie (broken to the lowest
    index); `skipped_classes` lists classes never predicted, whose
    amplification terms were dropped.
    """

    accuracy: np.ndarray  # (C, G)
    counts: np.ndarray  # (C, G) test-set sizes
    ua: float
    bc: float
    ba: float
    minority: tuple[tuple[int, int], ...]
    dominant: np.ndarray  # (C,)
    tie_classes: tuple[int, ...] = ()
    skipped_classes: tuple[int, ...] = ()

    def __post_init__(self):
        for name in ("accuracy", "counts", "dominant"):
            a = np.asarray(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def to_dict(self) -> dict:
        return {
            "UA": self.ua,
            "BC": self.bc,
            "BA": self.ba,
            "subgroup_accuracy": self.accuracy.tolist(),
            "subgroup_counts": self.counts.tolist(),
            "minority_subgroups": [list(p) for p in self.minority],
            "dominant_groups": self.dominant.tolist(),
            "tie_classes": list(self.tie_classes),
            "skipped_classes": list(self.skipped_classes),
        }


def _check_preds(preds, d_test: GroupedDataset) -> np.ndarray:
    preds = np.asarray(preds, dtype=np.int64)
    if preds.shape != (len(d_test),):
        raise DataError(
            f"got {preds.shape[0] if preds.ndim == 1 else preds.shape} predictions "
            f"for {len(d_test)} test samples"
        )
    return preds


def subgroup_accuracy_matrix(preds, d_test: GroupedDataset):
    """Accuracy and sample count per (class, group) cell."""
    preds = _check_preds(preds, d_test)
    C, G = d_test.num_classes, d_test.num_groups
    acc = np.zeros((C, G))
    counts = np.zeros((C, G), dtype=np.int64)
    correct = preds == d_test.targets
    for y in range(C):
        for b in range(G):
            members = d_test.subgroup_index[(y, b)]
            if len(members) == 0:
                raise DataError(f"test set has empty subgroup (y={y}, b={b})")
            rows = d_test.rows_for_ids(members)
            counts[y, b] = len(rows)
            acc[y, b] = correct[rows].mean()
    return acc, counts


def unbiased_accuracy(preds, d_test: GroupedDataset) -> float:
    acc, _ = subgroup_accuracy_matrix(preds, d_test)
    return float(acc.mean())


def minority_subgroups(train_table: SubgroupTable):
    """Minority cells per the training distribution.

    For each class, every group except the most common one (ties break
    to the lowest group index and the class is flagged). Returns
    (minority cells, dominant group per class, tied classes).
    """
    counts = train_table.counts
    dominant = counts.argmax(axis=1)
    ties = tuple(
        int(y)
        for y in range(train_table.num_classes)
        if (counts[y] == counts[y, dominant[y]]).sum() > 1
    )
    minority = tuple(
        (int(y), int(b))
        for y in range(train_table.num_classes)
        for b in range(train_table.num_groups)
        if b != dominant[y]
    )
    return minority, dominant, ties


def bias_conflict(preds, d_test: GroupedDataset, train_table: SubgroupTable) -> float:
    """Mean accuracy over training-minority subgroups."""
    _check_table(d_test, train_table)
    acc, _ = subgroup_accuracy_matrix(preds, d_test)
    minority, _, _ = minority_subgroups(train_table)
    if not minority:
        raise DataError("no minority subgroups (single-group table)")
    return float(np.mean([acc[y, b] for y, b in minority]))


def bias_amplification(preds, d_test: GroupedDataset, train_table: SubgroupTable) -> float:
    """Dominant-group over-prediction, averaged over classes.

    Per class y: (share of y-predictions that fall on y's
    training-dominant group) - 1/G. Zero for any predictor whose
    errors are distributed identically across groups on a balanced
    test set; 0.5 for a two-class, two-group predictor that reads the
    class straight off the group. Classes never predicted contribute
    nothing and are flagged in the full report.
    """
    ba, _ = _bias_amplification(preds, d_test, train_table)
    return ba


def _bias_amplification(preds, d_test, train_table):
    _check_table(d_test, train_table)
    preds = _check_preds(preds, d_test)
    C, G = d_test.num_classes, d_test.num_groups
    _, dominant, _ = minority_subgroups(train_table)
    total = 0.0
    skipped = []
    for y in range(C):
        mask = preds == y
        n = int(mask.sum())
        if n == 0:
            skipped.append(y)
            continue
        on_dominant = int((d_test.groups[mask] == dominant[y]).sum())
        total += on_dominant / n - 1.0 / G
    return total / C, tuple(skipped)


def _check_table(d_test: GroupedDataset, train_table: SubgroupTable) -> None:
    if train_table.counts.shape != (d_test.num_classes, d_test.num_groups):
        raise DataError(
            f"training table shape {train_table.counts.shape} does not match "
            f"test set ({d_test.num_classes}, {d_test.num_groups})"
        )


def evaluate_predictions(
    preds, d_test: GroupedDataset, train_table: SubgroupTable
) -> MetricsReport:
    """Full report: subgroup matrix plus UA, BC, BA."""
    _check_table(d_test, train_table)
    acc, counts = subgroup_accuracy_matrix(preds, d_test)
    minority, dominant, ties = minority_subgroups(train_table)
    if not minority:
        raise DataError("no minority subgroups (single-group table)")
    bc = float(np.mean([acc[y, b] for y, b in minority]))
    ba, skipped = _bias_amplification(preds, d_test, train_table)
    return MetricsReport(
        accuracy=acc,
        counts=counts,
        ua=float(acc.mean()),
        bc=bc,
        ba=ba,
        minority=minority,
        dominant=dominant,
        tie_classes=ties,
        skipped_classes=skipped,
    )


def evaluate_model(m, d_test: GroupedDataset, train_table: SubgroupTable) -> MetricsReport:
    return evaluate_predictions(m.predict(d_test.features), d_test, train_table)
