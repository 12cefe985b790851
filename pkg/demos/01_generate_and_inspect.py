"""Generate a biased synthetic dataset and inspect its subgroup structure.

The generator plants a spurious shortcut: each class has a dominant
sensitive group, and group membership shifts the features along its own
axis. A model can reach high accuracy by reading the group axes instead
of the class signal, which is exactly the failure the resamplers target.
"""

import tempfile
from pathlib import Path

from biasmimic.dataset import (
    CsvSchema,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    save_csv,
    subgroup_table,
)

spec = SyntheticSpec(samples_per_class=2000, bias_strength=0.95, seed=0)
d = generate_synthetic(spec)
t = subgroup_table(d)

print(f"{len(d)} samples, {d.num_classes} classes x {d.num_groups} groups")
print(f"subgroup counts (rows = classes, columns = groups):\n{t.counts}\n")

print("P(B = b | Y = y): how skewed each class's group mix is")
for y in range(t.num_classes):
    row = t.counts[y] / t.counts[y].sum()
    print(f"  class {y}: " + "  ".join(f"{p:.3f}" for p in row))

dominant = t.dominant_groups()
print(f"\ndominant group per class: {dominant.tolist()}")
print("minority subgroups are the bias-conflicting cells the BC metric scores")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "dataset.csv"
    save_csv(d, path)
    back = load_csv(path, CsvSchema())
    same = (back.targets == d.targets).all() and (back.features == d.features).all()
    print(f"\nCSV round trip at {path.name}: {'exact' if same else 'MISMATCH'}")
