"""Resampling plans, weights, and label views.

The mimicking tests compare against independent references from
helpers.py: a brute-force scan for the largest kept total whose exact
group shares fit under the caps, and exact rational residuals.
"""

import json
from fractions import Fraction

import numpy as np
import pytest

from biasmimic.dataset import SubgroupTable, subgroup_table
from biasmimic.errors import ConfigError, DataError
from biasmimic.samplers import (
    build_label_views,
    mimic_counts,
    oversample,
    partial_mimic,
    plan_from_dict,
    plan_to_dict,
    select_ids,
    undersample,
    upweight,
    view_from_dict,
    view_to_dict,
    weights_from_dict,
    weights_to_dict,
)

from helpers import max_feasible_total, random_table, row_residuals, table_dataset

# Running example: class 0 is 90/10 across groups, class 1 is 50/50.
TABLE = SubgroupTable(np.array([[90, 10], [50, 50]]))


class TestUniformPlans:
    def test_undersample_levels_to_smallest_subgroup(self):
        plan = undersample(TABLE, seed=0)
        assert plan.method == "undersample"
        assert (plan.counts == 10).all()

    def test_oversample_levels_to_largest_subgroup(self):
        plan = oversample(TABLE, seed=0)
        assert plan.method == "oversample"
        assert (plan.counts == 90).all()

    def test_upweight_is_inverse_frequency(self):
        w = upweight(TABLE)
        assert np.allclose(w.weights, [[200 / 90, 20.0], [4.0, 4.0]])
        assert w.weight(0, 1) == 20.0

    def test_each_subgroup_carries_equal_weight_mass(self):
        gen = np.random.default_rng(0)
        for _ in range(50):
            t = random_table(gen, hi=200)
            w = upweight(t)
            mass = t.counts * w.weights
            assert np.allclose(mass, t.total, rtol=1e-12)

    def test_weights_align_with_rows(self):
        d = table_dataset(TABLE)
        per_row = upweight(TABLE).for_dataset(d)
        assert per_row.shape == (200,)
        assert per_row[0] == 200 / 90  # first row is subgroup (0, 0)
        assert per_row[-1] == 4.0  # last row is subgroup (1, 1)

    def test_empty_subgroup_rejected(self):
        t = SubgroupTable(np.array([[3, 0], [2, 2]]))
        for fn in (lambda: undersample(t, 0), lambda: oversample(t, 0),
                   lambda: upweight(t)):
            with pytest.raises(DataError, match=r"\(y=0, b=1\)"):
                fn()


class TestSelectIds:
    def test_undersample_draws_within_each_subgroup(self):
        d = table_dataset(TABLE)
        plan = undersample(TABLE, seed=1)
        ids = select_ids(d, plan)
        assert len(ids) == 40
        assert len(np.unique(ids)) == 40
        rows = d.rows_for_ids(ids)
        realized = np.zeros((2, 2), dtype=int)
        for y, b in zip(d.targets[rows], d.groups[rows]):
            realized[y, b] += 1
        assert (realized == 10).all()

    def test_oversample_spreads_multiplicity_evenly(self):
        d = table_dataset(TABLE)
        ids = select_ids(d, oversample(TABLE, seed=1))
        assert len(ids) == 360
        members = d.subgroup_index[(0, 1)]  # 10 samples lifted to 90
        mult = {int(i): int((ids == i).sum()) for i in members}
        assert set(mult.values()) == {9}  # whole copies, no remainder
        members = d.subgroup_index[(1, 0)]  # 50 samples lifted to 90
        mult = [int((ids == i).sum()) for i in members]
        assert sorted(set(mult)) == [1, 2] and sum(mult) == 90

    def test_same_seed_replays_different_seed_redraws(self):
        d = table_dataset(TABLE)
        a = select_ids(d, undersample(TABLE, seed=3))
        b = select_ids(d, undersample(TABLE, seed=3))
        c = select_ids(d, undersample(TABLE, seed=4))
        assert np.array_equal(a, b)
        assert len(c) == len(a)
        assert not np.array_equal(np.sort(a), np.sort(c))

    def test_shape_mismatch_rejected(self):
        d = table_dataset(TABLE)
        plan = undersample(SubgroupTable(np.ones((3, 2), dtype=np.int64)), seed=0)
        with pytest.raises(DataError, match="shape"):
            select_ids(d, plan)

    def test_overdrawn_subgroup_rejected(self):
        d = table_dataset(np.array([[5, 5], [5, 5]]))
        plan = undersample(SubgroupTable(np.full((2, 2), 9, dtype=np.int64)), seed=0)
        with pytest.raises(DataError, match="only 5"):
            select_ids(d, plan)


class TestMimicCounts:
    def test_running_example(self):
        # Toward class 0: class 1 shrinks from 50/50 to 50/5, totals 100/55.
        assert np.array_equal(mimic_counts(TABLE, 0), [[90, 10], [50, 5]])
        # Toward class 1: class 0 shrinks from 90/10 to 10/10, totals 20/100.
        assert np.array_equal(mimic_counts(TABLE, 1), [[10, 10], [50, 50]])

    def test_reference_row_is_untouched(self):
        gen = np.random.default_rng(1)
        for _ in range(100):
            t = random_table(gen, hi=80)
            y = int(gen.integers(t.num_classes))
            kept = mimic_counts(t, y)
            assert np.array_equal(kept[y], t.counts[y])

    def test_kept_totals_match_scan_oracle(self):
        gen = np.random.default_rng(2)
        for _ in range(200):
            t = random_table(gen, hi=60)
            y = int(gen.integers(t.num_classes))
            kept = mimic_counts(t, y)
            for y2 in range(t.num_classes):
                if y2 == y:
                    continue
                assert (kept[y2] <= t.counts[y2]).all()
                want = max_feasible_total(t.counts[y], t.counts[y2])
                assert int(kept[y2].sum()) == want

    def test_residual_below_one_part_per_kept_total(self):
        gen = np.random.default_rng(3)
        for _ in range(200):
            t = random_table(gen, hi=60)
            y = int(gen.integers(t.num_classes))
            kept = mimic_counts(t, y)
            for y2 in range(t.num_classes):
                if y2 == y:
                    continue
                n = int(kept[y2].sum())
                if n == 0:
                    continue
                for r in row_residuals(t.counts[y], kept[y2]):
                    assert r < Fraction(1, n)

    def test_exact_when_shares_divide(self):
        # caps are per-group multiples of the reference: shares come out integral
        t = SubgroupTable(np.array([[90, 10], [90, 50]]))
        kept = mimic_counts(t, 0)
        assert np.array_equal(kept[1], [90, 10])
        assert row_residuals(t.counts[0], kept[1]) == [0, 0]

    def test_zero_share_groups_keep_nothing(self):
        t = SubgroupTable(np.array([[40, 0], [30, 30]]))
        kept = mimic_counts(t, 0)
        assert kept[1, 1] == 0
        assert kept[1, 0] == 30

    def test_collapse_warns(self):
        # class 1 has no samples in a group the reference populates
        t = SubgroupTable(np.array([[5, 5], [7, 0]]))
        with pytest.warns(UserWarning, match="class 1 retains no samples"):
            kept = mimic_counts(t, 0)
        assert kept[1].sum() == 0

    def test_bad_reference_rejected(self):
        with pytest.raises(DataError, match="class index 2"):
            mimic_counts(TABLE, 2)
        t = SubgroupTable(np.array([[0, 0], [1, 1]]))
        with pytest.raises(DataError, match="class 0 has no samples"):
            mimic_counts(t, 0)


class TestPartialMimic:
    def test_endpoints(self):
        assert np.array_equal(partial_mimic(TABLE, 0, 0.0), TABLE.counts)
        assert np.array_equal(partial_mimic(TABLE, 0, 100.0), mimic_counts(TABLE, 0))

    def test_halfway_rounds_half_up(self):
        # class 1 group 1: 50 -> 5 fully, so halfway is 27.5, rounded up to 28
        kept = partial_mimic(TABLE, 0, 50.0)
        assert np.array_equal(kept, [[90, 10], [50, 28]])

    def test_monotone_in_percentage(self):
        gen = np.random.default_rng(4)
        for _ in range(50):
            t = random_table(gen, hi=60)
            y = int(gen.integers(t.num_classes))
            series = [partial_mimic(t, y, x) for x in (0.0, 20.0, 50.0, 80.0, 100.0)]
            for lo, hi in zip(series, series[1:]):
                assert (hi <= lo).all()  # counts only ever shrink toward the target

    def test_never_exceeds_capacity(self):
        gen = np.random.default_rng(5)
        for _ in range(50):
            t = random_table(gen, hi=60)
            y = int(gen.integers(t.num_classes))
            x = float(gen.uniform(0.0, 100.0))
            assert (partial_mimic(t, y, x) <= t.counts).all()

    def test_percentage_range_checked(self):
        for x in (-0.1, 100.1):
            with pytest.raises(ConfigError, match="mimic percentage"):
                partial_mimic(TABLE, 0, x)


class TestLabelViews:
    def test_view_sizes_on_running_example(self):
        d = table_dataset(TABLE)
        views = build_label_views(d, seed=0)
        assert [len(v) for v in views] == [155, 120]
        assert [len(v.positive_ids) for v in views] == [100, 100]

    def test_positives_are_the_whole_class(self):
        d = table_dataset(TABLE)
        for v in build_label_views(d, seed=0):
            want = np.sort(d.ids[d.targets == v.positive_class])
            assert np.array_equal(v.positive_ids, want)

    def test_achieved_table_matches_mimic_counts(self):
        d = table_dataset(TABLE)
        for v in build_label_views(d, seed=0):
            want = mimic_counts(TABLE, v.positive_class)
            assert np.array_equal(v.achieved_table.counts, want)

    def test_negatives_realize_the_achieved_counts(self):
        d = table_dataset(TABLE)
        for v in build_label_views(d, seed=0):
            rows = d.rows_for_ids(v.negative_ids)
            realized = np.zeros((2, 2), dtype=int)
            for y, b in zip(d.targets[rows], d.groups[rows]):
                realized[y, b] += 1
            want = np.array(v.achieved_table.counts)
            want[v.positive_class] = 0
            assert np.array_equal(realized, want)

    def test_seed_replay_and_redraw(self):
        d = table_dataset(TABLE)
        a = build_label_views(d, seed=7)
        b = build_label_views(d, seed=7)
        c = build_label_views(d, seed=8)
        for va, vb, vc in zip(a, b, c):
            assert np.array_equal(va.negative_ids, vb.negative_ids)
            assert np.array_equal(va.achieved_table.counts, vc.achieved_table.counts)
        assert not np.array_equal(a[0].negative_ids, c[0].negative_ids)

    def test_balanced_data_keeps_every_sample(self):
        t = np.array([[30, 30], [30, 30], [30, 30]])
        d = table_dataset(t)
        for v in build_label_views(d, seed=0):
            assert len(v) == 180

    def test_residual_bound_on_random_tables(self):
        gen = np.random.default_rng(6)
        for _ in range(40):
            d = table_dataset(random_table(gen, max_classes=4, max_groups=3, hi=40))
            t = subgroup_table(d)
            for v in build_label_views(d, seed=int(gen.integers(1 << 32))):
                kept = v.achieved_table.counts
                ref = t.counts[v.positive_class]
                live_totals = [int(kept[y].sum()) for y in range(t.num_classes)
                               if kept[y].sum() > 0]
                bound = Fraction(1, min(live_totals))
                for y in range(t.num_classes):
                    if y == v.positive_class or kept[y].sum() == 0:
                        continue
                    for r in row_residuals(ref, kept[y]):
                        assert r <= bound

    def test_binary_labels_partition_included_ids(self):
        d = table_dataset(TABLE)
        v = build_label_views(d, seed=0)[0]
        labels = v.binary_labels()
        assert len(labels) == len(v)
        assert all(labels[int(i)] == 1 for i in v.positive_ids)
        assert all(labels[int(i)] == 0 for i in v.negative_ids)
        assert np.array_equal(
            v.included_ids, np.sort(np.concatenate([v.positive_ids, v.negative_ids]))
        )

    def test_partial_percent_flows_through(self):
        d = table_dataset(TABLE)
        views = build_label_views(d, seed=0, mimic_percent=50.0)
        assert np.array_equal(views[0].achieved_table.counts, [[90, 10], [50, 28]])
        assert views[0].mimic_percent == 50.0

    def test_missing_class_rejected(self):
        d = table_dataset(np.array([[0, 0], [5, 5]]))
        with pytest.raises(DataError, match="class 0 has no samples"):
            build_label_views(d, seed=0)


class TestSerialization:
    def test_plan_round_trip(self):
        d = table_dataset(TABLE)
        plan = undersample(TABLE, seed=9)
        ids = select_ids(d, plan)
        obj = json.loads(json.dumps(plan_to_dict(plan, ids=ids)))
        back = plan_from_dict(obj)
        assert back.method == plan.method and back.seed == plan.seed
        assert np.array_equal(back.counts, plan.counts)
        assert np.array_equal(select_ids(d, back), ids)

    def test_weights_round_trip(self):
        w = upweight(TABLE)
        back = weights_from_dict(json.loads(json.dumps(weights_to_dict(w))))
        assert np.array_equal(back.weights, w.weights)

    def test_view_round_trip(self):
        d = table_dataset(TABLE)
        v = build_label_views(d, seed=5)[1]
        back = view_from_dict(json.loads(json.dumps(view_to_dict(v))))
        assert back.positive_class == v.positive_class
        assert np.array_equal(back.positive_ids, v.positive_ids)
        assert np.array_equal(back.negative_ids, v.negative_ids)
        assert np.array_equal(back.achieved_table.counts, v.achieved_table.counts)
        assert back.mimic_percent == v.mimic_percent

    def test_malformed_payloads_rejected(self):
        with pytest.raises(DataError, match="malformed resample plan"):
            plan_from_dict({"method": "undersample"})
        with pytest.raises(DataError, match="malformed weight table"):
            weights_from_dict({})
        with pytest.raises(DataError, match="malformed label view"):
            view_from_dict({"positive_class": 0})
