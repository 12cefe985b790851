"""Exact-rational residual diagnostics."""

import json
from fractions import Fraction

import numpy as np
import pytest

from biasmimic.dataset import SubgroupTable
from biasmimic.errors import DataError
from biasmimic.samplers import mimic_counts
from biasmimic.stats import check_mimicking, rounding_bound, verify_independence

from helpers import divisible_table, random_table

BIASED = SubgroupTable(np.array([[90, 10], [50, 50]]))
MIMICKED = SubgroupTable(np.array([[90, 10], [50, 5]]))


class TestCheckMimicking:
    def test_running_example_residual(self):
        # |50/55 - 90/100| = |10/11 - 9/10| = 1/110 in both groups
        rep = check_mimicking(MIMICKED, 0)
        assert rep.max_residual == float(Fraction(1, 110))
        assert rep.residual_matrix[1, 0] == float(Fraction(1, 110))
        assert rep.residual_matrix[1, 1] == float(Fraction(1, 110))
        assert (rep.residual_matrix[0] == 0).all()
        assert rep.reference_class == 0
        # default tolerance is 2 / min row total = 2/55
        assert rep.tolerance == float(Fraction(2, 55))
        assert rep.passed

    def test_identical_distributions_are_exactly_zero(self):
        t = SubgroupTable(np.array([[20, 30], [40, 60], [2, 3]]))
        rep = check_mimicking(t, 1)
        assert rep.max_residual == 0.0
        assert (rep.residual_matrix == 0).all()

    def test_biased_table_fails_its_rounding_bound(self):
        rep = check_mimicking(BIASED, 0, tol=rounding_bound(BIASED))
        assert rep.max_residual == 0.4
        assert not rep.passed

    def test_mimicked_tables_always_meet_the_bound(self):
        gen = np.random.default_rng(0)
        for _ in range(100):
            t = random_table(gen, hi=80)
            y = int(gen.integers(t.num_classes))
            kept = SubgroupTable(mimic_counts(t, y))
            if (kept.row_totals() == 0).any():
                continue  # a collapsed class has no distribution to compare
            rep = check_mimicking(kept, y, tol=rounding_bound(kept))
            assert rep.passed, (t.counts, y, rep.max_residual, rep.tolerance)

    def test_explicit_tolerance_is_respected(self):
        rep = check_mimicking(MIMICKED, 0, tol=1e-6)
        assert not rep.passed

    def test_bad_inputs_rejected(self):
        with pytest.raises(DataError, match="reference class 5"):
            check_mimicking(BIASED, 5)
        t = SubgroupTable(np.array([[0, 0], [3, 3]]))
        with pytest.raises(DataError, match="class 0 has no samples"):
            check_mimicking(t, 1)


class TestVerifyIndependence:
    def test_running_example_residuals(self):
        # P(y|b) vs P(y): columns give |9/14 - 1/2| = 1/7 and |1/6 - 1/2| = 1/3
        rep = verify_independence(BIASED)
        assert rep.max_residual == float(Fraction(1, 3))
        assert rep.residual_matrix[0, 0] == float(Fraction(1, 7))
        assert rep.residual_matrix[1, 0] == float(Fraction(1, 7))
        assert rep.residual_matrix[0, 1] == float(Fraction(1, 3))
        # premise spread is |0.9 - 0.5| = 0.4; with C = 2 the implied
        # bound is tight and equals the worst residual exactly
        assert rep.premise_spread == 0.4
        assert rep.derived_bound == float(Fraction(1, 3))

    def test_matched_conditionals_force_exact_zero(self):
        gen = np.random.default_rng(1)
        for _ in range(50):
            base = gen.integers(1, 9, size=int(gen.integers(2, 5)))
            mults = gen.integers(1, 9, size=int(gen.integers(2, 6)))
            t = SubgroupTable((mults[:, None] * base[None, :]).astype(np.int64))
            rep = verify_independence(t)
            assert rep.premise_spread == 0.0
            assert rep.max_residual == 0.0
            assert rep.derived_bound == 0.0

    def test_spread_bound_dominates_residual(self):
        gen = np.random.default_rng(2)
        for _ in range(150):
            rep = verify_independence(random_table(gen, hi=200))
            # both floats come from the same exact-rational pass, and
            # float conversion preserves order
            assert rep.max_residual <= rep.derived_bound

    def test_mimicked_views_stay_within_the_derived_bound(self):
        gen = np.random.default_rng(3)
        for _ in range(60):
            t = divisible_table(gen)
            y = int(gen.integers(t.num_classes))
            kept = SubgroupTable(mimic_counts(t, y))
            rep = verify_independence(kept)
            assert rep.max_residual == 0.0  # divisible: no rounding slack at all

    def test_scale_invariance(self):
        a = verify_independence(BIASED)
        b = verify_independence(SubgroupTable(BIASED.counts * 7))
        assert a.max_residual == b.max_residual
        assert a.premise_spread == b.premise_spread
        assert a.derived_bound == b.derived_bound

    def test_empty_group_column_is_skipped_with_note(self):
        t = SubgroupTable(np.array([[4, 0, 6], [3, 0, 7]]))
        rep = verify_independence(t)
        assert any("group 1" in n for n in rep.notes)
        assert (rep.residual_matrix[:, 1] == 0).all()

    def test_empty_class_rejected(self):
        t = SubgroupTable(np.array([[0, 0], [3, 3]]))
        with pytest.raises(DataError, match="class 0 has no samples"):
            verify_independence(t)


class TestRoundingBound:
    def test_uses_smallest_nonzero_row(self):
        assert rounding_bound(MIMICKED) == 1.0 / 55
        t = SubgroupTable(np.array([[0, 0], [3, 4]]))
        assert rounding_bound(t) == 1.0 / 7

    def test_empty_table_rejected(self):
        with pytest.raises(DataError, match="empty table"):
            rounding_bound(SubgroupTable(np.zeros((2, 2), dtype=np.int64)))


def test_reports_serialize_to_json():
    for rep in (check_mimicking(MIMICKED, 0), verify_independence(BIASED)):
        obj = json.loads(json.dumps(rep.to_dict()))
        assert obj["max_residual"] == rep.max_residual
        assert obj["passed"] == rep.passed
    obj = verify_independence(BIASED).to_dict()
    assert set(obj) >= {"kind", "max_residual", "residual_matrix", "tolerance",
                        "passed", "premise_spread", "derived_bound"}
