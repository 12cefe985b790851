"""Shared test utilities.

Besides small dataset builders this module holds the independent
reference implementations the tests compare the package against:
a brute-force scan for the largest kept total whose exact group shares
fit under the per-group caps, exact rational residuals, and a central
finite-difference gradient oracle. None of them share code with the
package; that is the point.
"""

from fractions import Fraction

import numpy as np

from biasmimic.dataset import SubgroupTable, dataset_from_arrays


def random_table(gen, min_classes=2, max_classes=5, min_groups=2, max_groups=4,
                 lo=1, hi=500):
    C = int(gen.integers(min_classes, max_classes + 1))
    G = int(gen.integers(min_groups, max_groups + 1))
    return SubgroupTable(gen.integers(lo, hi + 1, size=(C, G)).astype(np.int64))


def divisible_table(gen, min_classes=2, max_classes=5, min_groups=2, max_groups=4):
    """Table whose rows are integer multiples of one base vector.

    Every row then shares one group distribution whose exact reduced
    shares are integers, so mimicking can hit the target distribution
    with zero residual.
    """
    C = int(gen.integers(min_classes, max_classes + 1))
    G = int(gen.integers(min_groups, max_groups + 1))
    base = gen.integers(1, 7, size=G)
    mults = gen.integers(1, 9, size=C)
    return SubgroupTable((mults[:, None] * base[None, :]).astype(np.int64))


def table_dataset(t, feature_dim=1):
    """Dataset realizing a count table; features are all zero."""
    counts = np.asarray(t.counts if isinstance(t, SubgroupTable) else t,
                        dtype=np.int64)
    C, G = counts.shape
    targets = np.repeat(np.arange(C, dtype=np.int64), counts.sum(axis=1))
    groups = np.concatenate(
        [np.repeat(np.arange(G, dtype=np.int64), counts[y]) for y in range(C)]
    )
    features = np.zeros((len(targets), feature_dim))
    return dataset_from_arrays(features, targets, groups,
                               num_classes=C, num_groups=G)


def max_feasible_total(ref_row, caps_row):
    """Largest kept total whose exact per-group shares fit under the caps.

    A total M is feasible when M * ref_b <= caps_b * T for every group
    the reference populates (equivalently, the exact share M * ref_b / T
    never exceeds the cap). Scans down from the sum of live caps; pure
    integer arithmetic.
    """
    ref = [int(v) for v in ref_row]
    caps = [int(v) for v in caps_row]
    T = sum(ref)
    live = [b for b in range(len(ref)) if ref[b] > 0]
    for M in range(sum(caps[b] for b in live), -1, -1):
        if all(M * ref[b] <= caps[b] * T for b in live):
            return M
    return 0


def row_residuals(ref_row, kept_row):
    """Exact |kept_b / N - ref_b / T| per group, as Fractions."""
    T = int(np.sum(ref_row))
    N = int(np.sum(kept_row))
    return [
        abs(Fraction(int(k), N) - Fraction(int(r), T))
        for k, r in zip(kept_row, ref_row)
    ]


def fd_gradients(model, loss_fn, step=1e-5):
    """Central finite-difference gradients of loss_fn() w.r.t. every parameter.

    loss_fn must evaluate the loss at the model's current parameters;
    the parameters are restored exactly after probing.
    """
    grads = {}
    for name, p in model.params.items():
        g = np.zeros_like(p)
        flat_p = p.ravel()
        flat_g = g.ravel()
        for i in range(flat_p.size):
            orig = flat_p[i]
            flat_p[i] = orig + step
            hi = loss_fn()
            flat_p[i] = orig - step
            lo = loss_fn()
            flat_p[i] = orig
            flat_g[i] = (hi - lo) / (2.0 * step)
        grads[name] = g
    return grads


def gradient_error(analytic, reference):
    """max |a - f| / max(1, max |f|) over the keys present in `analytic`."""
    worst = 0.0
    for k, a in analytic.items():
        f = reference[k]
        denom = max(1.0, float(np.max(np.abs(f))) if f.size else 0.0)
        worst = max(worst, float(np.max(np.abs(a - f))) / denom)
    return worst
