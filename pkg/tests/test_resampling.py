import numpy as np
import pytest

from fedfront.resampling import build_knn, smote, smote_tomek, tomek_links
from oracles import brute_force_knn, brute_force_tomek


class TestBuildKnn:
    def test_collinear_points(self):
        x = np.array([[0.0], [1.0], [3.0]])
        idx = build_knn(x, 1)
        assert idx.neighbor_lists.tolist() == [[1], [0], [1]]

    def test_duplicate_points_tie_by_lower_index(self):
        x = np.array([[0.0], [5.0], [5.0], [5.0]])
        idx = build_knn(x, 2)
        # rows 2 and 3 both sit at distance 0 from row 1: lower index first
        assert idx.neighbor_lists[1].tolist() == [2, 3]
        assert idx.neighbor_lists[2].tolist() == [1, 3]
        assert idx.neighbor_lists[3].tolist() == [1, 2]

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(50, 4))
        idx = build_knn(x, 5)
        assert np.array_equal(idx.neighbor_lists, brute_force_knn(x, 5))

    def test_requires_more_rows_than_k(self):
        with pytest.raises(ValueError):
            build_knn(np.zeros((3, 2)), 3)


class TestSmote:
    def test_balanced_input_unchanged(self, rng):
        x = rng.normal(size=(10, 3))
        y = np.array([0, 1] * 5)
        new_x, new_y = smote(x, y, 5, rng)
        assert np.array_equal(new_x, x)
        assert np.array_equal(new_y, y)

    def test_single_positive_passthrough(self, rng):
        x = rng.normal(size=(408, 3))
        y = np.zeros(408, dtype=int)
        y[7] = 1
        new_x, new_y = smote(x, y, 5, rng)
        assert np.array_equal(new_x, x)
        assert np.array_equal(new_y, y)

    def test_two_identical_positives(self, rng):
        x = np.vstack([np.zeros((2, 2)) + 4.0, rng.normal(size=(8, 2)) - 10.0])
        y = np.array([1, 1] + [0] * 8)
        new_x, new_y = smote(x, y, 5, rng)
        assert new_y.sum() == 8
        synth = new_x[10:]
        assert np.allclose(synth, 4.0)

    def test_exact_parity_and_originals_preserved(self, rng):
        x = rng.normal(size=(60, 4))
        y = np.array([1] * 9 + [0] * 51)
        new_x, new_y = smote(x, y, 5, rng)
        assert np.array_equal(new_x[:60], x)
        assert int(np.sum(new_y == 1)) == int(np.sum(new_y == 0)) == 51

    def test_synthetics_lie_on_minority_segments(self, rng):
        x = rng.normal(size=(30, 3))
        y = np.array([1] * 6 + [0] * 24)
        new_x, new_y = smote(x, y, 5, rng)
        minority = x[:6]
        for s in new_x[30:]:
            on_segment = False
            for a in range(6):
                for b in range(6):
                    if a == b:
                        continue
                    seg = minority[b] - minority[a]
                    denom = float(seg @ seg)
                    if denom == 0.0:
                        continue
                    lam = float((s - minority[a]) @ seg) / denom
                    residual = np.linalg.norm(s - (minority[a] + lam * seg))
                    if -1e-9 <= lam <= 1 + 1e-9 and residual <= 1e-9:
                        on_segment = True
            assert on_segment

    def test_deterministic_per_seed(self):
        x = np.random.default_rng(0).normal(size=(40, 3))
        y = np.array([1] * 5 + [0] * 35)
        a = smote(x, y, 5, np.random.default_rng(9))
        b = smote(x, y, 5, np.random.default_rng(9))
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


class TestTomekLinks:
    def test_three_point_example(self):
        x = np.array([[0.0], [0.1], [5.0]])
        y = np.array([1, 0, 0])
        assert tomek_links(x, y) == {(0, 1)}

    def test_same_label_no_links(self, rng):
        x = rng.normal(size=(20, 2))
        y = np.zeros(20, dtype=int)
        assert tomek_links(x, y) == set()

    def test_interleaved_clusters_boundary_pair_only(self):
        # two well separated 1-d clusters; only the facing pair links
        x = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
        y = np.array([0, 0, 0, 1, 1, 1])
        links = tomek_links(x, y)
        assert links == {(2, 3)}
        assert links == brute_force_tomek(x, y)

    def test_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            n = int(rng.integers(5, 60))
            x = rng.normal(size=(n, 3))
            y = rng.integers(0, 2, size=n)
            assert tomek_links(x, y) == brute_force_tomek(x, y)

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            tomek_links(np.zeros((1, 2)), np.zeros(1))


class TestSmoteTomek:
    def test_report_accounting_identity(self, rng):
        x = rng.normal(size=(80, 3))
        y = np.array([1] * 8 + [0] * 72)
        new_x, new_y, report = smote_tomek(x, y, rng)
        before_total = sum(report.before_counts)
        after_total = sum(report.after_counts)
        assert after_total == before_total + report.synthetic_added - report.tomek_removed
        assert after_total == len(new_y) == len(new_x)
        assert report.before_counts == (72, 8)

    def test_balanced_separated_input_untouched(self, rng):
        x = np.vstack([rng.normal(size=(10, 2)) + 50.0, rng.normal(size=(10, 2)) - 50.0])
        y = np.array([1] * 10 + [0] * 10)
        new_x, new_y, report = smote_tomek(x, y, rng)
        assert np.array_equal(new_x, x)
        assert report.synthetic_added == 0
        assert report.tomek_removed == 0

    def test_tomek_phase_removes_pairs_evenly(self, rng):
        # overlapping classes force links; removal takes one of each class
        x = np.vstack([rng.normal(size=(30, 2)), rng.normal(size=(12, 2))])
        y = np.array([0] * 30 + [1] * 12)
        _, new_y, report = smote_tomek(x, y, rng)
        assert report.tomek_removed % 2 == 0
        assert int(np.sum(new_y == 1)) == int(np.sum(new_y == 0))

    def test_deterministic_per_seed(self):
        x = np.random.default_rng(2).normal(size=(50, 4))
        y = np.array([1] * 6 + [0] * 44)
        a = smote_tomek(x, y, np.random.default_rng(33))
        b = smote_tomek(x, y, np.random.default_rng(33))
        assert np.array_equal(a[0], b[0])
        assert a[2] == b[2]
