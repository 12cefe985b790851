"""Subgroup accuracy aggregation and the three headline scores."""

import numpy as np
import pytest

from biasmimic.dataset import SubgroupTable, dataset_from_arrays, subgroup_table
from biasmimic.errors import DataError
from biasmimic.metrics import (
    bias_amplification,
    bias_conflict,
    evaluate_model,
    evaluate_predictions,
    minority_subgroups,
    subgroup_accuracy_matrix,
    unbiased_accuracy,
)
from biasmimic.model import Classifier

from helpers import table_dataset

TRAIN_TABLE = SubgroupTable(np.array([[90, 10], [50, 50]]))


def balanced_test_set(per_cell=10):
    counts = np.full((2, 2), per_cell, dtype=np.int64)
    return table_dataset(counts)


def preds_with_cell_accuracy(d, acc):
    """Predictions hitting an exact accuracy per (class, group) cell."""
    preds = np.array(d.targets)
    for y in range(d.num_classes):
        for b in range(d.num_groups):
            members = d.subgroup_index[(y, b)]
            rows = d.rows_for_ids(members)
            wrong = round(len(rows) * (1.0 - acc[y][b]))
            preds[rows[:wrong]] = (y + 1) % d.num_classes
    return preds


class TestSubgroupAccuracy:
    def test_exact_cell_accuracies(self):
        d = balanced_test_set()
        preds = preds_with_cell_accuracy(d, [[1.0, 0.8], [0.6, 0.4]])
        acc, counts = subgroup_accuracy_matrix(preds, d)
        assert np.allclose(acc, [[1.0, 0.8], [0.6, 0.4]])
        assert (counts == 10).all()

    def test_unbiased_accuracy_is_the_plain_mean(self):
        d = balanced_test_set()
        preds = preds_with_cell_accuracy(d, [[1.0, 0.8], [0.6, 0.4]])
        assert abs(unbiased_accuracy(preds, d) - 0.7) < 1e-12

    def test_unbiased_accuracy_ignores_cell_sizes(self):
        # same per-cell accuracies on a very skewed test set
        d = table_dataset(np.array([[80, 5], [5, 10]]))
        preds = preds_with_cell_accuracy(d, [[1.0, 0.8], [0.6, 0.4]])
        assert abs(unbiased_accuracy(preds, d) - 0.7) < 1e-12

    def test_prediction_shape_checked(self):
        d = balanced_test_set()
        with pytest.raises(DataError, match="predictions"):
            unbiased_accuracy(np.zeros(3, dtype=int), d)

    def test_empty_test_subgroup_rejected(self):
        d = table_dataset(np.array([[5, 0], [5, 5]]))
        with pytest.raises(DataError, match=r"\(y=0, b=1\)"):
            unbiased_accuracy(np.zeros(15, dtype=int), d)


class TestMinoritySubgroups:
    def test_non_dominant_cells_with_tie_flag(self):
        minority, dominant, ties = minority_subgroups(TRAIN_TABLE)
        assert minority == ((0, 1), (1, 1))
        assert list(dominant) == [0, 0]
        assert ties == (1,)  # class 1 is 50/50; tie broken to group 0

    def test_three_group_layout(self):
        t = SubgroupTable(np.array([[10, 70, 20], [60, 20, 20]]))
        minority, dominant, ties = minority_subgroups(t)
        assert list(dominant) == [1, 0]
        assert minority == ((0, 0), (0, 2), (1, 1), (1, 2))
        assert ties == ()


class TestBiasConflict:
    def test_mean_over_training_minority_cells(self):
        d = balanced_test_set()
        preds = preds_with_cell_accuracy(d, [[1.0, 0.8], [0.6, 0.4]])
        # minority cells are (0,1) and (1,1)
        assert abs(bias_conflict(preds, d, TRAIN_TABLE) - 0.6) < 1e-12

    def test_single_group_table_rejected(self):
        d = table_dataset(np.array([[10], [10]]))
        t = subgroup_table(d)
        with pytest.raises(DataError, match="no minority subgroups"):
            bias_conflict(np.zeros(20, dtype=int), d, t)

    def test_table_shape_must_match(self):
        d = balanced_test_set()
        t = SubgroupTable(np.ones((3, 2), dtype=np.int64))
        with pytest.raises(DataError, match="does not match"):
            bias_conflict(np.zeros(40, dtype=int), d, t)


class TestBiasAmplification:
    def test_perfect_predictor_scores_zero_on_balanced_test(self):
        d = balanced_test_set()
        preds = np.array(d.targets)
        assert bias_amplification(preds, d, TRAIN_TABLE) == 0.0

    def test_group_reader_scores_one_half(self):
        # predict the class whose training-dominant group is the sample's
        # group: with dominants (0 -> 0, 1 -> 1) that is pred = group
        t = SubgroupTable(np.array([[90, 10], [10, 90]]))
        d = balanced_test_set()
        preds = np.array(d.groups)
        assert bias_amplification(preds, d, t) == 0.5

    def test_never_predicted_class_is_skipped(self):
        d = balanced_test_set()
        preds = np.zeros(len(d), dtype=int)
        rep = evaluate_predictions(preds, d, TRAIN_TABLE)
        assert rep.skipped_classes == (1,)
        # only class 0 contributes: half its predictions hit group 0
        assert abs(rep.ba - 0.0) < 1e-12

    def test_sign_tracks_over_and_under_assignment(self):
        t = SubgroupTable(np.array([[90, 10], [10, 90]]))
        d = balanced_test_set()
        anti = 1 - np.array(d.groups)  # always predict the non-dominant class
        assert bias_amplification(anti, d, t) == -0.5


class TestFullReport:
    def test_report_is_consistent(self):
        d = balanced_test_set()
        preds = preds_with_cell_accuracy(d, [[1.0, 0.8], [0.6, 0.4]])
        rep = evaluate_predictions(preds, d, TRAIN_TABLE)
        assert rep.ua == unbiased_accuracy(preds, d)
        assert rep.bc == bias_conflict(preds, d, TRAIN_TABLE)
        assert rep.ba == bias_amplification(preds, d, TRAIN_TABLE)
        assert rep.minority == ((0, 1), (1, 1))
        assert rep.tie_classes == (1,)
        obj = rep.to_dict()
        assert {"UA", "BC", "BA"} <= set(obj)

    def test_group_shortcut_shows_the_gap(self):
        # a predictor that reads the group scores UA 0.5 but BC 0.0
        t = SubgroupTable(np.array([[90, 10], [10, 90]]))
        d = balanced_test_set()
        rep = evaluate_predictions(np.array(d.groups), d, t)
        assert rep.ua == 0.5
        assert rep.bc == 0.0
        assert rep.ba == 0.5

    def test_evaluate_model_wraps_predictions(self):
        d = table_dataset(np.array([[4, 4], [4, 4]]), feature_dim=2)
        m = Classifier(input_dim=2, num_classes=2, seed=0)
        rep_m = evaluate_model(m, d, subgroup_table(d))
        rep_p = evaluate_predictions(m.predict(d.features), d, subgroup_table(d))
        assert rep_m.ua == rep_p.ua and rep_m.ba == rep_p.ba
