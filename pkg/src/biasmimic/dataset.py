"""Grouped-dataset data model, CSV ingestion, and the synthetic generator.

A dataset is a list of (features, target class y, sensitive group b)
triplets. The subgroup g[y, b] collects the samples that share target y
and group b; every sampler in this package operates on the subgroup
structure, never on features.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import ConfigError, DataError

__all__ = [
    "Sample",
    "GroupedDataset",
    "SubgroupTable",
    "CsvSchema",
    "SyntheticSpec",
    "dataset_from_arrays",
    "subgroup_table",
    "load_csv",
    "save_csv",
    "generate_synthetic",
    "split",
]


@dataclass(frozen=True)
class Sample:
    """One labeled point: feature vector, target class, sensitive group."""

    features: np.ndarray
    target: int
    group: int
    id: int


class GroupedDataset:
    """Immutable array-backed dataset indexed by subgroup.

    Samples keep their original order; `ids` are unique non-negative
    integers (row order for freshly loaded data, inherited for subsets).
    """

    def __init__(
        self,
        features: np.ndarray,
        targets: np.ndarray,
        groups: np.ndarray,
        ids: np.ndarray,
        num_classes: int,
        num_groups: int,
    ):
        features = np.ascontiguousarray(features, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.int64)
        groups = np.asarray(groups, dtype=np.int64)
        ids = np.asarray(ids, dtype=np.int64)
        n = len(targets)
        if features.ndim != 2 or len(features) != n or len(groups) != n or len(ids) != n:
            raise DataError("features/targets/groups/ids lengths disagree")
        if num_classes <= 0 or num_groups <= 0:
            raise DataError("num_classes and num_groups must be positive")
        if n:
            if not np.isfinite(features).all():
                raise DataError("features contain non-finite values")
            if targets.min() < 0 or targets.max() >= num_classes:
                bad = int(np.argmax((targets < 0) | (targets >= num_classes)))
                raise DataError(
                    f"target {targets[bad]} of sample id {ids[bad]} outside "
                    f"0..{num_classes - 1}"
                )
            if groups.min() < 0 or groups.max() >= num_groups:
                bad = int(np.argmax((groups < 0) | (groups >= num_groups)))
                raise DataError(
                    f"group {groups[bad]} of sample id {ids[bad]} outside "
                    f"0..{num_groups - 1}"
                )
            if ids.min() < 0:
                raise DataError("sample ids must be non-negative")
            if len(np.unique(ids)) != n:
                raise DataError("sample ids must be unique")
        for arr in (features, targets, groups, ids):
            arr.setflags(write=False)
        self.features = features
        self.targets = targets
        self.groups = groups
        self.ids = ids
        self.num_classes = int(num_classes)
        self.num_groups = int(num_groups)
        # Subgroup index: (y, b) -> ids, in dataset order.
        self.subgroup_index: dict[tuple[int, int], np.ndarray] = {}
        for y in range(num_classes):
            ymask = targets == y
            for b in range(num_groups):
                sel = ids[ymask & (groups == b)]
                sel.setflags(write=False)
                self.subgroup_index[(y, b)] = sel
        self._row_of: dict[int, int] = {int(i): r for r, i in enumerate(ids)}

    def __len__(self) -> int:
        return len(self.targets)

    def rows_for_ids(self, wanted: np.ndarray) -> np.ndarray:
        """Row positions of the given sample ids (order preserved)."""
        return np.fromiter(
            (self._row_of[int(i)] for i in wanted), dtype=np.int64, count=len(wanted)
        )

    def sample(self, sample_id: int) -> Sample:
        r = self._row_of[int(sample_id)]
        return Sample(self.features[r], int(self.targets[r]), int(self.groups[r]), int(sample_id))

    def subset(self, wanted_ids: np.ndarray) -> "GroupedDataset":
        """New dataset containing exactly the given ids, dataset order kept."""
        keep = np.isin(self.ids, np.asarray(wanted_ids, dtype=np.int64))
        return GroupedDataset(
            self.features[keep],
            self.targets[keep],
            self.groups[keep],
            self.ids[keep],
            self.num_classes,
            self.num_groups,
        )


def dataset_from_arrays(features, targets, groups, num_classes=None, num_groups=None,
                        ids=None) -> GroupedDataset:
    """Convenience constructor; infers C and G from the data when omitted."""
    targets = np.asarray(targets, dtype=np.int64)
    groups = np.asarray(groups, dtype=np.int64)
    if num_classes is None:
        num_classes = int(targets.max()) + 1 if len(targets) else 1
    if num_groups is None:
        num_groups = int(groups.max()) + 1 if len(groups) else 1
    if ids is None:
        ids = np.arange(len(targets), dtype=np.int64)
    return GroupedDataset(np.asarray(features, dtype=np.float64), targets, groups,
                          np.asarray(ids, dtype=np.int64), num_classes, num_groups)


@dataclass(frozen=True)
class SubgroupTable:
    """|Y| x |B| matrix of subgroup sizes with derived distributions."""

    counts: np.ndarray  # int64, shape (C, G)

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.ndim != 2:
            raise DataError("counts must be a 2-D matrix")
        if (c < 0).any():
            raise DataError("counts must be non-negative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def num_groups(self) -> int:
        return self.counts.shape[1]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def col_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    def p_joint(self) -> np.ndarray:
        """P(Y=y, B=b)."""
        if self.total == 0:
            raise DataError("empty table has no joint distribution")
        return self.counts / self.total

    def p_class(self) -> np.ndarray:
        """P(Y=y)."""
        if self.total == 0:
            raise DataError("empty table has no class distribution")
        return self.row_totals() / self.total

    def p_group(self) -> np.ndarray:
        """P(B=b)."""
        if self.total == 0:
            raise DataError("empty table has no group distribution")
        return self.col_totals() / self.total

    def p_group_given_class(self, y: int) -> np.ndarray:
        """P(B=b | Y=y); requires a nonzero class row."""
        t = self.counts[y].sum()
        if t == 0:
            raise DataError(f"class {y} has no samples")
        return self.counts[y] / t

    def p_class_given_group(self, b: int) -> np.ndarray:
        """P(Y=y | B=b); requires a nonzero group column."""
        t = self.counts[:, b].sum()
        if t == 0:
            raise DataError(f"group {b} has no samples")
        return self.counts[:, b] / t

    def dominant_groups(self) -> np.ndarray:
        """Most common group per class (ties break to the lowest index)."""
        return self.counts.argmax(axis=1)


def subgroup_table(d: GroupedDataset) -> SubgroupTable:
    """Count |g[y, b]| for every subgroup."""
    counts = np.zeros((d.num_classes, d.num_groups), dtype=np.int64)
    for (y, b), members in d.subgroup_index.items():
        counts[y, b] = len(members)
    return SubgroupTable(counts)


# ---------------------------------------------------------------------------
# CSV interchange
#
# Format: header row, columns f0..f{k-1} (decimal floats), y (integer class),
# b (integer group); UTF-8, LF line endings. Row order is sample order and
# loaded ids are assigned by row position.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CsvSchema:
    """Column roles for `load_csv`.

    `features=None` selects every `f<number>` column, ordered by number.
    Declared `num_classes`/`num_groups` turn out-of-range labels into
    errors instead of silently widening the dataset.
    """

    target: str = "y"
    group: str = "b"
    features: tuple[str, ...] | None = None
    num_classes: int | None = None
    num_groups: int | None = None


def load_csv(path, schema: CsvSchema = CsvSchema()) -> GroupedDataset:
    """Load a dataset from CSV, validating every row.

    Raises DataError naming the offending line for malformed rows,
    unknown columns, empty files, or out-of-range class/group indices.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise DataError(f"{path}: cannot open ({e})") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        col = {name: i for i, name in enumerate(header)}
        for name in (schema.target, schema.group):
            if name not in col:
                raise DataError(f"{path}: missing column {name!r}")
        if schema.features is None:
            feats = sorted(
                (h for h in header if h.startswith("f") and h[1:].isdigit()),
                key=lambda h: int(h[1:]),
            )
            if not feats:
                raise DataError(f"{path}: no feature columns f0..f{{k-1}} found")
        else:
            feats = list(schema.features)
            for name in feats:
                if name not in col:
                    raise DataError(f"{path}: unknown feature column {name!r}")
        fidx = [col[f] for f in feats]
        yidx, bidx = col[schema.target], col[schema.group]

        features, targets, groups = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                x = [float(row[i]) for i in fidx]
                y = int(row[yidx])
                b = int(row[bidx])
            except ValueError as e:
                raise DataError(f"{path}:{lineno}: malformed value ({e})") from None
            if not all(math.isfinite(v) for v in x):
                raise DataError(f"{path}:{lineno}: non-finite feature value")
            if schema.num_classes is not None and not 0 <= y < schema.num_classes:
                raise DataError(
                    f"{path}:{lineno}: class index {y} outside declared range "
                    f"0..{schema.num_classes - 1}"
                )
            if schema.num_groups is not None and not 0 <= b < schema.num_groups:
                raise DataError(
                    f"{path}:{lineno}: group index {b} outside declared range "
                    f"0..{schema.num_groups - 1}"
                )
            features.append(x)
            targets.append(y)
            groups.append(b)

    if not targets:
        raise DataError(f"{path}: no data rows")
    return dataset_from_arrays(
        np.array(features, dtype=np.float64),
        targets,
        groups,
        num_classes=schema.num_classes,
        num_groups=schema.num_groups,
    )


def save_csv(d: GroupedDataset, path) -> None:
    """Write a dataset in the interchange format (round-trip exact floats)."""
    k = d.features.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{i}" for i in range(k)] + ["y", "b"])
        for r in range(len(d)):
            writer.writerow(
                [format(v, ".17g") for v in d.features[r]]
                + [int(d.targets[r]), int(d.groups[r])]
            )


# ---------------------------------------------------------------------------
# Synthetic biased blobs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for Gaussian class blobs with a controllable group shortcut.

    Class y is a blob at `class_center_separation * e[y mod k]`. Each
    sample's group is drawn with probability `bias_strength` for the
    class's dominant group and the rest spread uniformly; membership in
    group b additively shifts the features by `group_shift_magnitude`
    along axis e[k-1-b]. That shift is the learnable spurious signal:
    at bias_strength near 1 a model can predict the class from the
    group axes alone. bias_strength = 1/num_groups is the unbiased limit.
    """

    num_classes: int = 2
    num_groups: int = 2
    samples_per_class: int = 1000
    bias_strength: float | tuple[float, ...] = 0.95
    dominant_group: tuple[int, ...] | None = None
    class_center_separation: float = 2.2
    group_shift_magnitude: float = 4.5
    feature_dim: int = 6
    noise_sigma: float = 1.0
    seed: int = 0

    def rho(self) -> np.ndarray:
        r = np.broadcast_to(np.asarray(self.bias_strength, dtype=np.float64),
                            (self.num_classes,)).copy()
        return r

    def dominants(self) -> np.ndarray:
        if self.dominant_group is None:
            return np.arange(self.num_classes, dtype=np.int64) % self.num_groups
        return np.asarray(self.dominant_group, dtype=np.int64)

    def validate(self) -> None:
        if self.num_classes < 1 or self.num_groups < 1:
            raise ConfigError("num_classes and num_groups must be positive")
        if self.samples_per_class < 1:
            raise ConfigError("samples_per_class must be positive")
        if self.feature_dim < 1:
            raise ConfigError("feature_dim must be positive")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        lo = 1.0 / self.num_groups
        for y, r in enumerate(self.rho()):
            if not lo - 1e-12 <= r <= 1.0 + 1e-12:
                raise ConfigError(
                    f"bias_strength for class {y} is {r}, must lie in [1/G, 1] = [{lo}, 1]"
                )
        doms = self.dominants()
        if len(doms) != self.num_classes or (doms < 0).any() or (doms >= self.num_groups).any():
            raise ConfigError("dominant_group must name one valid group per class")


def generate_synthetic(spec: SyntheticSpec) -> GroupedDataset:
    """Draw the dataset described by `spec`; fully deterministic given its seed."""
    spec.validate()
    C, G, n, k = spec.num_classes, spec.num_groups, spec.samples_per_class, spec.feature_dim
    rho = spec.rho()
    doms = spec.dominants()
    gen = rng.stream(spec.seed, rng.GENERATE)

    centers = np.zeros((C, k))
    for y in range(C):
        # Axes cycle with a sign flip per wrap so up to 2k classes stay distinct.
        axis = y % k
        sign = -1.0 if (y // k) % 2 else 1.0
        centers[y, axis] = sign * spec.class_center_separation
    shifts = np.zeros((G, k))
    for b in range(G):
        axis = (k - 1 - b) % k
        shifts[b, axis] = spec.group_shift_magnitude

    features = np.empty((C * n, k))
    targets = np.repeat(np.arange(C, dtype=np.int64), n)
    groups = np.empty(C * n, dtype=np.int64)
    for y in range(C):
        probs = np.full(G, (1.0 - rho[y]) / (G - 1) if G > 1 else 1.0)
        probs[doms[y]] = rho[y]
        probs /= probs.sum()
        g = gen.choice(G, size=n, p=probs)
        noise = gen.normal(0.0, spec.noise_sigma, size=(n, k))
        sl = slice(y * n, (y + 1) * n)
        features[sl] = centers[y] + shifts[g] + noise
        groups[sl] = g
    return dataset_from_arrays(features, targets, groups, num_classes=C, num_groups=G)


def split(
    d: GroupedDataset,
    train_frac: float,
    balanced_test: bool = False,
    seed: int = 0,
) -> tuple[GroupedDataset, GroupedDataset]:
    """Disjoint stratified train/test split.

    Each subgroup is shuffled (seeded) and divided so both sides stay
    nonempty. With `balanced_test`, every test subgroup is subsampled to
    the smallest test subgroup size, giving an exactly balanced test set.
    """
    if not 0.0 < train_frac < 1.0:
        raise ConfigError(f"train_frac must lie in (0, 1), got {train_frac}")
    gen = rng.stream(seed, rng.SPLIT)
    train_ids, test_ids = [], []
    for y in range(d.num_classes):
        for b in range(d.num_groups):
            members = d.subgroup_index[(y, b)]
            if len(members) < 2:
                raise DataError(
                    f"subgroup (y={y}, b={b}) has {len(members)} samples; "
                    "need at least 2 to populate both splits"
                )
            perm = gen.permutation(len(members))
            n_train = min(max(int(round(train_frac * len(members))), 1), len(members) - 1)
            train_ids.append(members[perm[:n_train]])
            test_ids.append(members[perm[n_train:]])
    if balanced_test:
        m = min(len(t) for t in test_ids)
        test_ids = [t[gen.permutation(len(t))[:m]] for t in test_ids]
    train = d.subset(np.concatenate(train_ids))
    test = d.subset(np.concatenate(test_ids))
    return train, test
