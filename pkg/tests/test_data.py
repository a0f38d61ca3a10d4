import os
from pathlib import Path

import numpy as np
import pytest

from fedfront.data import (
    CSV_COLUMNS,
    FEATURE_COLUMNS,
    DataError,
    FeatureMatrix,
    RawRecord,
    drop_other_gender,
    fit_preprocessor,
    parse_csv,
    partition_clients,
    stratified_split,
    synth_dataset,
    transform,
    write_csv,
    write_feature_csv,
)
from oracles import auc_score, fit_logistic

STROKE_CSV_ENV = "FEDFRONT_STROKE_CSV"


def make_record(**overrides) -> RawRecord:
    base = dict(
        gender="Female",
        age=40.0,
        hypertension=0,
        heart_disease=0,
        ever_married="Yes",
        work_type="Private",
        residence_type="Urban",
        avg_glucose_level=100.0,
        bmi=25.0,
        smoking_status="never smoked",
        stroke=0,
    )
    base.update(overrides)
    return RawRecord(**base)


def write_rows(path: Path, rows: list[list[str]], header=None) -> Path:
    header = list(CSV_COLUMNS) if header is None else header
    lines = [",".join(header)]
    lines += [",".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


GOOD_ROW = [
    "Male", "67", "0", "1", "Yes", "Private", "Urban", "228.69", "36.6",
    "formerly smoked", "1",
]


class TestParseCsv:
    def test_roundtrip_through_writer(self, tmp_path):
        records = synth_dataset(50, 0.2, seed=0)
        target = tmp_path / "synth.csv"
        write_csv(records, target)
        back = parse_csv(target)
        assert back == records

    def test_accepts_and_ignores_id_column(self, tmp_path):
        path = write_rows(
            tmp_path / "with_id.csv",
            [["7"] + GOOD_ROW],
            header=["id"] + list(CSV_COLUMNS),
        )
        records = parse_csv(path)
        assert len(records) == 1
        assert records[0].age == 67

    def test_na_bmi_becomes_missing(self, tmp_path):
        row = GOOD_ROW.copy()
        row[8] = "N/A"
        records = parse_csv(write_rows(tmp_path / "na.csv", [row]))
        assert records[0].bmi is None

    def test_bad_gender_names_row(self, tmp_path):
        row = GOOD_ROW.copy()
        row[0] = "X"
        with pytest.raises(DataError, match="row 2"):
            parse_csv(write_rows(tmp_path / "badgender.csv", [row]))

    def test_unparseable_numeric_names_row_and_column(self, tmp_path):
        row = GOOD_ROW.copy()
        row[7] = "high"
        with pytest.raises(DataError, match="row 2.*avg_glucose_level"):
            parse_csv(write_rows(tmp_path / "badnum.csv", [row]))

    def test_renamed_column_rejected(self, tmp_path):
        header = list(CSV_COLUMNS)
        header[0] = "sex"
        with pytest.raises(DataError, match="header"):
            parse_csv(write_rows(tmp_path / "badheader.csv", [GOOD_ROW], header=header))

    def test_row_order_preserved(self, tmp_path):
        records = synth_dataset(20, 0.3, seed=1)
        target = tmp_path / "order.csv"
        write_csv(records, target)
        assert [r.age for r in parse_csv(target)] == [r.age for r in records]


@pytest.mark.skipif(
    not os.environ.get(STROKE_CSV_ENV),
    reason=f"set {STROKE_CSV_ENV} to the Kaggle stroke CSV to run",
)
def test_real_kaggle_file_counts():
    records = parse_csv(os.environ[STROKE_CSV_ENV])
    assert len(records) == 5110
    assert len(drop_other_gender(records)) == 5109


class TestDropOtherGender:
    def test_no_other_rows_is_identity(self):
        records = [make_record(), make_record(gender="Male")]
        assert drop_other_gender(records) == records

    def test_drops_only_other(self):
        records = [make_record(), make_record(gender="Other"), make_record(gender="Male")]
        kept = drop_other_gender(records)
        assert len(kept) == 2
        assert all(r.gender != "Other" for r in kept)


class TestStratifiedSplit:
    def test_table6_train_size(self):
        records = synth_dataset(5109, 0.05, seed=3)
        train, test = stratified_split(records, 0.2, seed=0)
        assert len(train) == 4088
        assert len(test) == 1021
        whole = sum(r.stroke for r in records) / len(records)
        for side in (train, test):
            share = sum(r.stroke for r in side) / len(side)
            assert abs(share - whole) <= 0.005

    def test_balanced_even_split(self):
        records = [make_record(stroke=i % 2) for i in range(100)]
        train, test = stratified_split(records, 0.5, seed=1)
        assert len(train) == len(test) == 50
        assert sum(r.stroke for r in train) == 25
        assert sum(r.stroke for r in test) == 25

    def test_deterministic_and_partitioning(self):
        records = synth_dataset(300, 0.1, seed=4)
        a_train, a_test = stratified_split(records, 0.2, seed=9)
        b_train, b_test = stratified_split(records, 0.2, seed=9)
        assert a_train == b_train and a_test == b_test
        # disjoint cover
        def key(r):
            return (r.age, r.avg_glucose_level, r.gender, r.stroke)
        combined = sorted(map(key, a_train + a_test))
        assert combined == sorted(map(key, records))

    def test_requires_two_positives(self):
        records = [make_record() for _ in range(20)] + [make_record(stroke=1)]
        with pytest.raises(DataError):
            stratified_split(records, 0.2, seed=0)


class TestFitPreprocessor:
    def test_bmi_mean_imputation(self):
        records = [
            make_record(bmi=20.0, age=30.0, avg_glucose_level=80.0),
            make_record(bmi=None, age=40.0, avg_glucose_level=100.0),
            make_record(bmi=30.0, age=50.0, avg_glucose_level=120.0),
        ]
        stats = fit_preprocessor(records)
        assert stats.bmi_mean == pytest.approx(25.0)
        x, _ = transform(records, stats)
        # imputed bmi equals the mean, so its z-score is 0
        assert x.rows[1, 2] == pytest.approx(0.0)

    def test_zero_variance_error(self):
        records = [make_record(age=33.0), make_record(age=33.0)]
        with pytest.raises(DataError, match="age"):
            fit_preprocessor(records)

    def test_all_bmi_missing_error(self):
        records = [make_record(bmi=None), make_record(bmi=None, age=50.0)]
        with pytest.raises(DataError, match="bmi"):
            fit_preprocessor(records)

    def test_against_column_scan_oracle(self):
        records = synth_dataset(500, 0.1, seed=8)
        stats = fit_preprocessor(records)
        present = [r.bmi for r in records if r.bmi is not None]
        assert stats.bmi_mean == pytest.approx(sum(present) / len(present), rel=1e-12)


class TestTransform:
    def test_fifteen_columns_fixed_names(self, small_records):
        stats = fit_preprocessor(small_records)
        x, y = transform(small_records, stats)
        assert x.rows.shape == (len(small_records), 15)
        assert x.column_names == FEATURE_COLUMNS
        assert len(y) == len(small_records)

    def test_record_at_fitted_means_maps_to_zero(self):
        records = [
            make_record(age=30.0, avg_glucose_level=90.0, bmi=20.0),
            make_record(age=50.0, avg_glucose_level=110.0, bmi=30.0),
        ]
        stats = fit_preprocessor(records)
        probe = make_record(age=40.0, avg_glucose_level=100.0, bmi=25.0)
        x, _ = transform([probe], stats)
        np.testing.assert_allclose(x.rows[0, :3], 0.0, atol=1e-12)

    def test_reference_categories_encode_to_zero(self):
        records = [
            make_record(age=30.0, avg_glucose_level=80.0, bmi=20.0),
            make_record(age=50.0, avg_glucose_level=120.0, bmi=30.0),
        ]
        stats = fit_preprocessor(records)
        probe = make_record(
            gender="Female", ever_married="No", residence_type="Rural",
            work_type="Govt_job", smoking_status="Unknown",
        )
        x, _ = transform([probe], stats)
        assert np.all(x.rows[0, 3:] == 0.0)

    def test_own_stats_standardize_continuous(self, small_records):
        stats = fit_preprocessor(small_records)
        x, _ = transform(small_records, stats)
        for col in range(3):
            assert abs(x.rows[:, col].mean()) <= 1e-9
            assert abs(x.rows[:, col].std() - 1.0) <= 1e-9

    def test_indicator_columns_binary(self, small_records):
        stats = fit_preprocessor(small_records)
        x, _ = transform(small_records, stats)
        assert np.all(np.isin(x.rows[:, 3:], (0.0, 1.0)))

    def test_no_leakage_stats_unchanged_by_test_transform(self, small_records):
        train, test = stratified_split(small_records, 0.25, seed=0)
        stats = fit_preprocessor(train)
        before = (stats.bmi_mean, stats.scaler_means.copy(), stats.scaler_stds.copy())
        transform(test, stats)
        assert stats.bmi_mean == before[0]
        assert np.array_equal(stats.scaler_means, before[1])
        assert np.array_equal(stats.scaler_stds, before[2])


class TestPartitionClients:
    def test_table6_sizes(self):
        x = FeatureMatrix(rows=np.zeros((4088, 15)))
        parts = partition_clients(x, np.zeros(4088), 10)
        assert [p.n_samples for p in parts] == [408] * 9 + [416]
        assert [p.client_id for p in parts] == list(range(10))

    def test_singletons(self):
        x = FeatureMatrix(rows=np.arange(150.0).reshape(10, 15))
        parts = partition_clients(x, np.zeros(10), 10)
        assert [p.n_samples for p in parts] == [1] * 10

    def test_floor_then_remainder(self):
        x = FeatureMatrix(rows=np.arange(105.0).reshape(7, 15))
        parts = partition_clients(x, np.zeros(7), 3)
        assert [p.n_samples for p in parts] == [2, 2, 3]

    def test_conservation(self):
        rng = np.random.default_rng(0)
        x = FeatureMatrix(rows=rng.normal(size=(53, 15)))
        y = rng.integers(0, 2, size=53)
        parts = partition_clients(x, y, 4)
        stacked = np.vstack([p.features.rows for p in parts])
        assert np.array_equal(stacked, x.rows)
        assert np.array_equal(np.concatenate([p.labels for p in parts]), y)

    def test_too_few_rows(self):
        x = FeatureMatrix(rows=np.zeros((2, 15)))
        with pytest.raises(ValueError):
            partition_clients(x, np.zeros(2), 3)


class TestSynthDataset:
    def test_positive_count_rounding(self):
        records = synth_dataset(5109, 0.05, seed=0)
        assert sum(r.stroke for r in records) == 255

    def test_deterministic(self):
        assert synth_dataset(80, 0.1, seed=5) == synth_dataset(80, 0.1, seed=5)
        assert synth_dataset(80, 0.1, seed=5) != synth_dataset(80, 0.1, seed=6)

    def test_schema_valid_and_learnable(self):
        records = synth_dataset(5000, 0.1, seed=21)
        assert all(r.gender in ("Male", "Female") for r in records)
        stats = fit_preprocessor(records)
        x, y = transform(records, stats)
        w = fit_logistic(x.rows, y)
        scores = np.hstack([x.rows, np.ones((len(y), 1))]) @ w
        assert auc_score(scores, y) > 0.6


def test_write_feature_csv_roundtrip(tmp_path, small_records):
    stats = fit_preprocessor(small_records)
    x, y = transform(small_records, stats)
    target = tmp_path / "features.csv"
    write_feature_csv(x, y, target)
    lines = target.read_text().strip().splitlines()
    assert lines[0].split(",") == list(FEATURE_COLUMNS) + ["stroke"]
    assert len(lines) == len(small_records) + 1
