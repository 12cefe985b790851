"""Subgroup-level resamplers: undersampling, oversampling, upweighting,
and per-class distribution mimicking.

Everything here operates on subgroup counts and sample ids only.
Features are never inspected, so a plan computed from a table can be
realized against any dataset with compatible subgroup sizes.

The mimicking sampler is the centerpiece. For a chosen class y it keeps
y's samples in full and undersamples every other class y2 so that the
group distribution within y2 matches the group distribution within y.
The integer realization apportions N2 = floor(min_b caps_b / p_b) slots
across groups by largest remainder, which keeps every group's count
within one slot of its exact share N2 * p_b. Consequently the achieved
conditional P(b | y2) differs from the target P(b | y) by less than
1/N2 in every group, and is exact whenever the shares are integers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import rng
from .dataset import GroupedDataset, SubgroupTable, subgroup_table
from .errors import ConfigError, DataError

__all__ = [
    "ResamplePlan",
    "SampleWeights",
    "LabelView",
    "undersample",
    "oversample",
    "upweight",
    "mimic_counts",
    "partial_mimic",
    "build_label_views",
    "select_ids",
    "plan_to_dict",
    "plan_from_dict",
    "weights_to_dict",
    "weights_from_dict",
    "view_to_dict",
    "view_from_dict",
]


# ---------------------------------------------------------------------------
# Plan and weight containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ResamplePlan:
    """Per-subgroup target counts plus the seed that realizes them.

    `method` is one of undersample / oversample / mimic. Kept counts
    never exceed subgroup capacity for undersample and mimic plans;
    oversample counts are at least the capacity. `reference_class` and
    `mimic_percent` are set on mimic plans only.
    """

    method: str
    counts: np.ndarray  # int64, shape (C, G)
    seed: int
    reference_class: int | None = None
    mimic_percent: float | None = None

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)


@dataclass(frozen=True)
class SampleWeights:
    """Per-subgroup loss weights: weight(y, b) = total / count(y, b).

    Every sample in subgroup (y, b) carries the same weight, so each
    nonempty subgroup's weights sum to the dataset total.
    """

    weights: np.ndarray  # float64, shape (C, G)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def weight(self, y: int, b: int) -> float:
        return float(self.weights[y, b])

    def for_dataset(self, d: GroupedDataset) -> np.ndarray:
        """Row-aligned weight vector for `d`."""
        return self.weights[d.targets, d.groups]

    def id_map(self, d: GroupedDataset) -> dict[int, float]:
        per_row = self.for_dataset(d)
        return {int(i): float(w) for i, w in zip(d.ids, per_row)}


@dataclass(frozen=True)
class LabelView:
    """One-vs-rest relabeling of a subsampled dataset.

    Samples of `positive_class` are all present and labeled positive;
    samples of every other class are undersampled to mimic the positive
    class's group distribution and labeled negative.
    """

    positive_class: int
    positive_ids: np.ndarray
    negative_ids: np.ndarray
    achieved_table: SubgroupTable
    seed: int
    mimic_percent: float = 100.0

    def __post_init__(self):
        for name in ("positive_ids", "negative_ids"):
            a = np.sort(np.asarray(getattr(self, name), dtype=np.int64))
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def included_ids(self) -> np.ndarray:
        return np.sort(np.concatenate([self.positive_ids, self.negative_ids]))

    def binary_labels(self) -> dict[int, int]:
        """Map id -> 1 (positive) or 0 (negative) over included ids."""
        out = {int(i): 1 for i in self.positive_ids}
        out.update({int(i): 0 for i in self.negative_ids})
        return out

    def __len__(self) -> int:
        return len(self.positive_ids) + len(self.negative_ids)


# ---------------------------------------------------------------------------
# Uniform samplers
# ---------------------------------------------------------------------------


def _require_nonempty(t: SubgroupTable, method: str) -> None:
    if t.counts.size == 0:
        raise DataError(f"{method}: empty table")
    if (t.counts == 0).any():
        y, b = np.argwhere(t.counts == 0)[0]
        raise DataError(f"{method}: subgroup (y={y}, b={b}) is empty")


def undersample(t: SubgroupTable, seed: int) -> ResamplePlan:
    """Cut every subgroup down to the size of the smallest one."""
    _require_nonempty(t, "undersample")
    m = int(t.counts.min())
    return ResamplePlan("undersample", np.full_like(t.counts, m), seed)


def oversample(t: SubgroupTable, seed: int) -> ResamplePlan:
    """Replicate every subgroup up to the size of the largest one.

    Realization repeats each subgroup in whole copies and tops up with
    a seeded draw without replacement, so per-sample multiplicities
    within a subgroup differ by at most one.
    """
    _require_nonempty(t, "oversample")
    m = int(t.counts.max())
    return ResamplePlan("oversample", np.full_like(t.counts, m), seed)


def upweight(t: SubgroupTable) -> SampleWeights:
    """Weight each subgroup by the inverse of its frequency.

    weight(y, b) = total / count(y, b), so Sum weights over any subgroup
    equals the dataset total and small subgroups pull as much loss as
    large ones.
    """
    _require_nonempty(t, "upweight")
    return SampleWeights(t.total / t.counts)


# ---------------------------------------------------------------------------
# Distribution mimicking
# ---------------------------------------------------------------------------


def _mimic_row(ref: np.ndarray, caps: np.ndarray) -> np.ndarray:
    """Largest kept counts for one class whose group shares track `ref`.

    `ref` is the reference class's count vector (target distribution
    p_b = ref_b / T); `caps` is the mimicked class's count vector. The
    kept total is N2 = floor(min over live groups of caps_b / p_b), the
    largest multiple of the target shares that fits under every cap.
    N2 is then apportioned by largest remainder: group b gets
    floor(N2 * p_b), and the leftover slots go to the largest
    fractional shares (ties to the lowest group index). Each count
    lands within one slot of its exact share, so
    |kept_b / N2 - p_b| < 1/N2 for every group, with equality to zero
    when all shares are integers. Groups absent from the reference
    (p_b = 0) keep nothing. All arithmetic is exact integer math.
    """
    G = len(ref)
    T = int(ref.sum())
    live = [b for b in range(G) if ref[b] > 0]
    # caps_b / p_b = caps_b * T / ref_b; floor of the min via integer division.
    n2 = min(int(caps[b]) * T // int(ref[b]) for b in live)
    kept = np.zeros(G, dtype=np.int64)
    if n2 == 0:
        return kept
    floors = {b: n2 * int(ref[b]) // T for b in live}
    remainders = {b: n2 * int(ref[b]) % T for b in live}
    spare = n2 - sum(floors.values())
    for b in sorted(live, key=lambda b: (-remainders[b], b))[:spare]:
        floors[b] += 1
    for b in live:
        kept[b] = floors[b]
    return kept


def mimic_counts(t: SubgroupTable, y: int) -> np.ndarray:
    """Kept counts per (class, group) for the label view of class `y`.

    Row y is kept in full; every other row is reduced by `_mimic_row`
    so its group distribution matches row y's. A class that cannot
    retain any samples (some group is required by the reference but
    absent from the class) collapses to zero with a warning.
    """
    counts = t.counts
    if not 0 <= y < t.num_classes:
        raise DataError(f"class index {y} outside 0..{t.num_classes - 1}")
    if counts[y].sum() == 0:
        raise DataError(f"class {y} has no samples")
    kept = np.array(counts, dtype=np.int64)
    for y2 in range(t.num_classes):
        if y2 == y:
            continue
        kept[y2] = _mimic_row(counts[y], counts[y2])
        if kept[y2].sum() == 0 and counts[y2].sum() > 0:
            warnings.warn(
                f"class {y2} retains no samples in the view for class {y}: "
                "a group present in the reference class is empty here",
                stacklevel=2,
            )
    return kept


def partial_mimic(t: SubgroupTable, y: int, x: float) -> np.ndarray:
    """Kept counts interpolated between the original table and full mimicking.

    `x` is a percentage: 0 keeps the table as is, 100 equals
    `mimic_counts`, and intermediate values move each kept count
    linearly between the two and round half-up. Counts move
    monotonically in x because the interpolation is linear per cell.
    """
    if not 0.0 <= x <= 100.0:
        raise ConfigError(f"mimic percentage must lie in [0, 100], got {x}")
    full = mimic_counts(t, y)
    frac = x / 100.0
    v = t.counts + frac * (full - t.counts)
    return np.floor(v + 0.5).astype(np.int64)


def build_label_views(
    d: GroupedDataset, seed: int, mimic_percent: float = 100.0
) -> list[LabelView]:
    """One label view per class, realized against `d`.

    Each view keeps class y in full (labeled positive) and draws the
    mimicked counts for every other class uniformly without replacement
    (labeled negative). Selections are seeded per (view, class, group),
    so identical seeds rebuild identical views and distinct cells draw
    independently.
    """
    if len(d) == 0:
        raise DataError("cannot build label views for an empty dataset")
    t = subgroup_table(d)
    if (t.row_totals() == 0).any():
        y = int(np.argmax(t.row_totals() == 0))
        raise DataError(f"class {y} has no samples")
    views = []
    for y in range(d.num_classes):
        kept = partial_mimic(t, y, mimic_percent)
        positives = np.concatenate(
            [d.subgroup_index[(y, b)] for b in range(d.num_groups)]
        )
        negatives = []
        for y2 in range(d.num_classes):
            if y2 == y:
                continue
            for b in range(d.num_groups):
                n = int(kept[y2, b])
                if n == 0:
                    continue
                members = d.subgroup_index[(y2, b)]
                gen = rng.stream(seed, rng.VIEWS, y, y2, b)
                negatives.append(members[gen.choice(len(members), size=n, replace=False)])
        negative_ids = (
            np.concatenate(negatives) if negatives else np.empty(0, dtype=np.int64)
        )
        views.append(
            LabelView(
                positive_class=y,
                positive_ids=positives,
                negative_ids=negative_ids,
                achieved_table=SubgroupTable(kept),
                seed=seed,
                mimic_percent=mimic_percent,
            )
        )
    return views


# ---------------------------------------------------------------------------
# Plan realization
# ---------------------------------------------------------------------------


def select_ids(d: GroupedDataset, plan: ResamplePlan) -> np.ndarray:
    """Materialize a plan against a dataset as a multiset of sample ids.

    Undersample and mimic plans draw `counts[y, b]` ids per subgroup
    without replacement. Oversample plans repeat each subgroup in whole
    copies and top up with a seeded draw without replacement. Ids come
    out grouped by (y, b); training shuffles them anyway.
    """
    counts = plan.counts
    if counts.shape != (d.num_classes, d.num_groups):
        raise DataError(
            f"plan shape {counts.shape} does not match dataset "
            f"({d.num_classes}, {d.num_groups})"
        )
    picked = []
    for y in range(d.num_classes):
        for b in range(d.num_groups):
            n = int(counts[y, b])
            if n == 0:
                continue
            members = d.subgroup_index[(y, b)]
            if plan.method == "oversample":
                if len(members) == 0:
                    raise DataError(f"cannot oversample empty subgroup (y={y}, b={b})")
                gen = rng.stream(plan.seed, rng.PLAN, y, b)
                whole, extra = divmod(n, len(members))
                picked.append(np.tile(members, whole))
                if extra:
                    picked.append(members[gen.choice(len(members), size=extra, replace=False)])
            else:
                if n > len(members):
                    raise DataError(
                        f"plan keeps {n} samples of subgroup (y={y}, b={b}) "
                        f"but the dataset has only {len(members)}"
                    )
                if plan.method == "mimic":
                    gen = rng.stream(plan.seed, rng.VIEWS, int(plan.reference_class), y, b)
                else:
                    gen = rng.stream(plan.seed, rng.PLAN, y, b)
                picked.append(members[gen.choice(len(members), size=n, replace=False)])
    if not picked:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(picked)


# ---------------------------------------------------------------------------
# Serialization (JSON-ready dicts)
# ---------------------------------------------------------------------------


def plan_to_dict(plan: ResamplePlan, ids: np.ndarray | None = None) -> dict:
    out = {
        "method": plan.method,
        "seed": int(plan.seed),
        "counts": plan.counts.tolist(),
    }
    if plan.reference_class is not None:
        out["reference_class"] = int(plan.reference_class)
    if plan.mimic_percent is not None:
        out["mimic_percent"] = float(plan.mimic_percent)
    if ids is not None:
        out["ids"] = [int(i) for i in ids]
    return out


def plan_from_dict(obj: dict) -> ResamplePlan:
    try:
        return ResamplePlan(
            method=str(obj["method"]),
            counts=np.asarray(obj["counts"], dtype=np.int64),
            seed=int(obj["seed"]),
            reference_class=(
                int(obj["reference_class"]) if "reference_class" in obj else None
            ),
            mimic_percent=(
                float(obj["mimic_percent"]) if "mimic_percent" in obj else None
            ),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"malformed resample plan: {e}") from None


def weights_to_dict(w: SampleWeights) -> dict:
    return {"method": "upweight", "weights": w.weights.tolist()}


def weights_from_dict(obj: dict) -> SampleWeights:
    try:
        return SampleWeights(np.asarray(obj["weights"], dtype=np.float64))
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"malformed weight table: {e}") from None


def view_to_dict(v: LabelView) -> dict:
    return {
        "positive_class": int(v.positive_class),
        "positive_ids": [int(i) for i in v.positive_ids],
        "negative_ids": [int(i) for i in v.negative_ids],
        "achieved_counts": v.achieved_table.counts.tolist(),
        "seed": int(v.seed),
        "mimic_percent": float(v.mimic_percent),
    }


def view_from_dict(obj: dict) -> LabelView:
    try:
        return LabelView(
            positive_class=int(obj["positive_class"]),
            positive_ids=np.asarray(obj["positive_ids"], dtype=np.int64),
            negative_ids=np.asarray(obj["negative_ids"], dtype=np.int64),
            achieved_table=SubgroupTable(np.asarray(obj["achieved_counts"], dtype=np.int64)),
            seed=int(obj["seed"]),
            mimic_percent=float(obj.get("mimic_percent", 100.0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"malformed label view: {e}") from None
