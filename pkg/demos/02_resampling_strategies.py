"""The three baseline samplers on one worked table.

Undersampling trims every subgroup to the smallest, oversampling
repeats every subgroup up to the largest, and upweighting keeps the
data untouched but scales each sample's loss so every subgroup carries
the same total mass.
"""

import numpy as np

from biasmimic.dataset import SubgroupTable
from biasmimic.samplers import oversample, select_ids, undersample, upweight

from pathlib import Path
import sys

sys.path.insert(0, str(Path(__file__).parent))
from _demo_data import dataset_from_table

TABLE = SubgroupTable(np.array([[90, 10], [50, 50]]))
print(f"training table:\n{TABLE.counts}\n")

us = undersample(TABLE, seed=0)
print(f"undersample keeps  (all cells = min):\n{us.counts}")
os_ = oversample(TABLE, seed=0)
print(f"oversample draws   (all cells = max):\n{os_.counts}")
w = upweight(TABLE)
print(f"upweight factors   (weight x count is constant):\n{w.weights}\n")

d = dataset_from_table(TABLE.counts)
ids = select_ids(d, us)
print(f"undersample realizes {len(ids)} of {len(d)} samples, all distinct: "
      f"{len(set(ids.tolist())) == len(ids)}")

ids = select_ids(d, os_)
print(f"oversample realizes {len(ids)} sample slots from {len(d)} samples "
      f"(duplicates by design)")

mass = w.weights * TABLE.counts
print(f"upweighted subgroup mass: {mass.ravel().tolist()} (equal by construction)")
