import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaer import (IncompleteRunError, ResultMatrix, UndefinedMetricError,
                   make_synthetic, nn)


def complete_matrix(rows, baseline=None):
    m = ResultMatrix(len(rows))
    if baseline is not None:
        m.set_baseline(baseline)
    for i, row in enumerate(rows, start=1):
        m.record_row(i, row)
    return m


matrix_rows = st.integers(2, 6).flatmap(
    lambda t: st.lists(
        st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=t, max_size=t),
        min_size=t, max_size=t))


class TestRecordRow:
    def test_second_write_wins_best_keeps_max(self):
        m = ResultMatrix(2)
        m.record_row(1, [0.9, 0.1])
        m.record_row(1, [0.4, 0.2])
        assert m.matrix[0, 0] == 0.4
        assert m.best[0] == 0.9

    def test_out_of_range_index(self):
        m = ResultMatrix(3)
        with pytest.raises(ValueError):
            m.record_row(0, [0.1, 0.2, 0.3])
        with pytest.raises(ValueError):
            m.record_row(4, [0.1, 0.2, 0.3])

    def test_accuracy_outside_unit_interval(self):
        m = ResultMatrix(2)
        with pytest.raises(ValueError):
            m.record_row(1, [1.2, 0.0])
        with pytest.raises(ValueError):
            m.record_row(1, [0.5, float("nan")])

    def test_best_is_column_max_after_all_rows(self):
        rng = np.random.default_rng(0)
        rows = rng.uniform(size=(4, 4))
        m = complete_matrix(rows)
        assert np.array_equal(m.best, rows.max(axis=0))


class TestAverageAccuracy:
    def test_example(self):
        m = complete_matrix([[0.7, 0.6], [0.8, 0.9]])
        assert m.average_accuracy() == pytest.approx(0.85)

    def test_constant_row(self):
        m = complete_matrix([[0.5, 0.5, 0.5]] * 3)
        assert m.average_accuracy() == pytest.approx(0.5)

    def test_requires_final_row(self):
        m = ResultMatrix(2)
        m.record_row(1, [0.5, 0.5])
        with pytest.raises(IncompleteRunError):
            m.average_accuracy()

    def test_only_final_row_matters(self):
        a = complete_matrix([[0.1, 0.2], [0.6, 0.8]])
        b = complete_matrix([[0.9, 0.9], [0.6, 0.8]])
        assert a.average_accuracy() == b.average_accuracy()


class TestForgetting:
    def test_no_forgetting(self):
        m = complete_matrix([[0.9, 0.0], [0.9, 0.8]])
        assert m.forgetting() == pytest.approx(0.0)

    def test_two_task_example(self):
        m = complete_matrix([[0.9, 0.1], [0.8, 0.95]])
        assert m.forgetting() == pytest.approx(0.1)

    def test_single_task_undefined(self):
        m = complete_matrix([[0.9]])
        with pytest.raises(UndefinedMetricError):
            m.forgetting()

    def test_incomplete(self):
        m = ResultMatrix(3)
        m.record_row(3, [0.1, 0.2, 0.3])
        with pytest.raises(IncompleteRunError):
            m.forgetting()

    @settings(max_examples=100, deadline=None)
    @given(matrix_rows)
    def test_nonnegative_and_at_least_minus_bwt(self, rows):
        m = complete_matrix(rows)
        assert m.forgetting() >= -1e-12
        assert m.forgetting() >= -m.backward_transfer() - 1e-12


class TestBackwardTransfer:
    def test_zero_when_final_equals_diagonal(self):
        m = complete_matrix([[0.9, 0.0, 0.0], [0.7, 0.8, 0.0], [0.9, 0.8, 0.95]])
        assert m.backward_transfer() == pytest.approx(0.0)

    def test_two_task_example(self):
        m = complete_matrix([[0.95, 0.0], [0.80, 0.9]])
        assert m.backward_transfer() == pytest.approx(-0.15)

    def test_single_task_undefined(self):
        with pytest.raises(UndefinedMetricError):
            complete_matrix([[1.0]]).backward_transfer()


class TestForwardTransfer:
    def test_zero_when_diagonal_equals_baseline(self):
        m = complete_matrix([[0.5, 0.0], [0.1, 0.5]], baseline=[0.5, 0.5])
        assert m.forward_transfer() == pytest.approx(0.0)

    def test_three_task_example(self):
        rows = [[0.9, 0.0, 0.0], [0.0, 0.8, 0.0], [0.0, 0.0, 0.7]]
        m = complete_matrix(rows, baseline=[0.5, 0.5, 0.5])
        assert m.forward_transfer() == pytest.approx(0.35)

    def test_missing_baseline(self):
        m = complete_matrix([[0.9, 0.0], [0.1, 0.8]])
        with pytest.raises(IncompleteRunError):
            m.forward_transfer()

    def test_random_init_baseline_near_chance(self):
        # Accuracy of a freshly initialized single-head 10-class net should
        # sit near 1/10 on a balanced test set, averaged over inits.
        X, y = make_synthetic(10, 16, 100, seed=0)
        accs = [nn.accuracy(nn.init_network(16, 32, 10, seed=s), X, y)
                for s in range(30)]
        assert abs(np.mean(accs) - 0.1) < 0.04


class TestAlgebra:
    @settings(max_examples=100, deadline=None)
    @given(matrix_rows)
    def test_forgetting_is_negated_bwt_when_diag_is_best(self, rows):
        rows = np.asarray(rows)
        # force the diagonal to be each column's max
        for i in range(len(rows)):
            rows[i, i] = rows[:, i].max()
        m = complete_matrix(rows)
        assert m.forgetting() == pytest.approx(-m.backward_transfer(), abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(matrix_rows, st.randoms())
    def test_acc_invariant_to_permuting_earlier_rows(self, rows, rnd):
        t = len(rows)
        base = complete_matrix(rows)
        perm = list(range(t - 1))
        rnd.shuffle(perm)
        shuffled = complete_matrix([rows[i] for i in perm] + [rows[-1]])
        assert shuffled.average_accuracy() == base.average_accuracy()
