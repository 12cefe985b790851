"""Tiny shared helper for the demo scripts."""

import numpy as np

from biasmimic.dataset import dataset_from_arrays


def dataset_from_table(counts):
    """Dataset realizing a subgroup count table; features are all zero."""
    counts = np.asarray(counts, dtype=np.int64)
    C, G = counts.shape
    targets = np.repeat(np.arange(C, dtype=np.int64), counts.sum(axis=1))
    groups = np.concatenate(
        [np.repeat(np.arange(G, dtype=np.int64), counts[y]) for y in range(C)]
    )
    features = np.zeros((len(targets), 1))
    return dataset_from_arrays(features, targets, groups,
                               num_classes=C, num_groups=G)
