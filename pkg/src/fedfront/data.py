"""Stroke-dataset ingestion, preprocessing and client partitioning.

The pipeline is: parse the CSV, drop the handful of gender="Other" rows,
stratified train/test split, fit imputation/scaling statistics on the
training side only, one-hot encode into the fixed 15-column layout, and
slice the training matrix into contiguous per-client partitions.

A seeded synthetic generator with the same schema lets everything run
without the real file.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class DataError(ValueError):
    """Raised for schema, vocabulary or value problems in input data."""


GENDERS = ("Female", "Male", "Other")
YES_NO = ("No", "Yes")
WORK_TYPES = ("Govt_job", "Never_worked", "Private", "Self-employed", "children")
RESIDENCE_TYPES = ("Rural", "Urban")
SMOKING_STATUSES = ("Unknown", "formerly smoked", "never smoked", "smokes")

# Kaggle header, in file order; a leading "id" column is accepted and ignored.
CSV_COLUMNS = (
    "gender",
    "age",
    "hypertension",
    "heart_disease",
    "ever_married",
    "work_type",
    "Residence_type",
    "avg_glucose_level",
    "bmi",
    "smoking_status",
    "stroke",
)

# One-hot layout: 3 z-scored continuous, 2 raw binary, then drop-first
# indicators with the first (sorted) vocabulary entry as reference.
FEATURE_COLUMNS = (
    "age",
    "avg_glucose_level",
    "bmi",
    "hypertension",
    "heart_disease",
    "gender_Male",
    "ever_married_Yes",
    "residence_Urban",
    "work_type_Never_worked",
    "work_type_Private",
    "work_type_Self-employed",
    "work_type_children",
    "smoking_formerly smoked",
    "smoking_never smoked",
    "smoking_smokes",
)

CONTINUOUS_COLUMNS = ("age", "avg_glucose_level", "bmi")


@dataclass
class RawRecord:
    """One row of the stroke schema, before any encoding."""

    gender: str
    age: float
    hypertension: int
    heart_disease: int
    ever_married: str
    work_type: str
    residence_type: str
    avg_glucose_level: float
    bmi: Optional[float]
    smoking_status: str
    stroke: int

    def __post_init__(self) -> None:
        if self.gender not in GENDERS:
            raise DataError(f"gender {self.gender!r} not in {GENDERS}")
        if self.ever_married not in YES_NO:
            raise DataError(f"ever_married {self.ever_married!r} not in {YES_NO}")
        if self.work_type not in WORK_TYPES:
            raise DataError(f"work_type {self.work_type!r} not in {WORK_TYPES}")
        if self.residence_type not in RESIDENCE_TYPES:
            raise DataError(
                f"residence_type {self.residence_type!r} not in {RESIDENCE_TYPES}"
            )
        if self.smoking_status not in SMOKING_STATUSES:
            raise DataError(
                f"smoking_status {self.smoking_status!r} not in {SMOKING_STATUSES}"
            )
        for name in ("hypertension", "heart_disease", "stroke"):
            if getattr(self, name) not in (0, 1):
                raise DataError(f"{name} must be 0 or 1, got {getattr(self, name)!r}")
        if not self.age > 0:
            raise DataError(f"age must be positive, got {self.age!r}")
        if not self.avg_glucose_level > 0:
            raise DataError(
                f"avg_glucose_level must be positive, got {self.avg_glucose_level!r}"
            )
        if self.bmi is not None and not self.bmi > 0:
            raise DataError(f"bmi must be positive when present, got {self.bmi!r}")


@dataclass
class PreprocessStats:
    """Imputation and scaling statistics, fitted on training records only."""

    bmi_mean: float
    scaler_means: np.ndarray  # (age, avg_glucose_level, bmi)
    scaler_stds: np.ndarray
    category_orderings: tuple[tuple[str, ...], ...] = (
        GENDERS[:2],
        YES_NO,
        RESIDENCE_TYPES,
        WORK_TYPES,
        SMOKING_STATUSES,
    )


@dataclass
class FeatureMatrix:
    """n x 15 float matrix with the fixed documented column order.

    Matrices produced by transform() additionally satisfy {0,1} indicator
    columns; resampled matrices may hold interpolated indicator values.
    """

    rows: np.ndarray
    column_names: tuple[str, ...] = FEATURE_COLUMNS

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.column_names):
            raise DataError(
                f"feature matrix must have {len(self.column_names)} columns, "
                f"got shape {self.rows.shape}"
            )

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]


@dataclass
class ClientPartition:
    """One client's local training data."""

    client_id: int
    features: FeatureMatrix
    labels: np.ndarray
    n_samples: int

    def __post_init__(self) -> None:
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.features.n_rows != self.labels.shape[0]:
            raise DataError(
                f"client {self.client_id}: {self.features.n_rows} rows vs "
                f"{self.labels.shape[0]} labels"
            )
        if self.n_samples != self.labels.shape[0]:
            raise DataError(
                f"client {self.client_id}: n_samples {self.n_samples} does not "
                f"match row count {self.labels.shape[0]}"
            )


def _parse_float(text: str, row: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"row {row}, column {column}: unparseable numeric {text!r}")


def _parse_binary(text: str, row: int, column: str) -> int:
    if text not in ("0", "1"):
        raise DataError(f"row {row}, column {column}: expected 0/1, got {text!r}")
    return int(text)


def parse_csv(path: str | Path) -> list[RawRecord]:
    """Read the Kaggle-schema stroke CSV into validated records.

    The header must contain exactly the documented columns (an optional
    leading ``id`` is ignored); a bmi of "N/A" marks a missing value.
    Errors name the offending row and column.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: file is empty")
        expected = list(CSV_COLUMNS)
        if header and header[0] == "id":
            id_offset = 1
            body = header[1:]
        else:
            id_offset = 0
            body = header
        if body != expected:
            missing = [c for c in expected if c not in body]
            extra = [c for c in body if c not in expected]
            raise DataError(
                f"{path}: header mismatch (missing {missing}, unexpected {extra})"
            )

        records: list[RawRecord] = []
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected) + id_offset:
                raise DataError(
                    f"row {row_no}: expected {len(expected) + id_offset} fields, "
                    f"got {len(row)}"
                )
            vals = dict(zip(expected, row[id_offset:]))
            bmi_text = vals["bmi"]
            bmi = None if bmi_text == "N/A" else _parse_float(bmi_text, row_no, "bmi")
            try:
                record = RawRecord(
                    gender=vals["gender"],
                    age=_parse_float(vals["age"], row_no, "age"),
                    hypertension=_parse_binary(vals["hypertension"], row_no, "hypertension"),
                    heart_disease=_parse_binary(vals["heart_disease"], row_no, "heart_disease"),
                    ever_married=vals["ever_married"],
                    work_type=vals["work_type"],
                    residence_type=vals["Residence_type"],
                    avg_glucose_level=_parse_float(
                        vals["avg_glucose_level"], row_no, "avg_glucose_level"
                    ),
                    bmi=bmi,
                    smoking_status=vals["smoking_status"],
                    stroke=_parse_binary(vals["stroke"], row_no, "stroke"),
                )
            except DataError as exc:
                raise DataError(f"row {row_no}: {exc}") from None
            records.append(record)
    return records


def write_csv(records: Sequence[RawRecord], path: str | Path) -> None:
    """Write records back out in the Kaggle schema (with an id column)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(("id",) + CSV_COLUMNS)
        for i, r in enumerate(records):
            writer.writerow(
                [
                    i,
                    r.gender,
                    repr(r.age) if isinstance(r.age, float) else r.age,
                    r.hypertension,
                    r.heart_disease,
                    r.ever_married,
                    r.work_type,
                    r.residence_type,
                    repr(r.avg_glucose_level),
                    "N/A" if r.bmi is None else repr(r.bmi),
                    r.smoking_status,
                    r.stroke,
                ]
            )


def drop_other_gender(records: Sequence[RawRecord]) -> list[RawRecord]:
    """Remove gender="Other" rows (required to reach the 15-column layout)."""
    return [r for r in records if r.gender != "Other"]


def stratified_split(
    records: Sequence[RawRecord], test_fraction: float, seed: int
) -> tuple[list[RawRecord], list[RawRecord]]:
    """Seeded stratified split; both sides come out in shuffled order.

    The test side takes floor(n * test_fraction) rows with round(n_pos *
    test_fraction) positives, which keeps each side's positive share within
    half a percentage point of the whole.
    """
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    labels = np.array([r.stroke for r in records], dtype=np.int64)
    pos_idx = np.flatnonzero(labels == 1)
    neg_idx = np.flatnonzero(labels == 0)
    if pos_idx.size < 2:
        raise DataError("stratified split needs at least 2 positive records")

    n = len(records)
    n_test = int(np.floor(n * test_fraction))
    pos_test = int(round(pos_idx.size * test_fraction))
    pos_test = min(max(pos_test, 1), pos_idx.size - 1, n_test)
    neg_test = n_test - pos_test
    if not 0 <= neg_test <= neg_idx.size:
        raise DataError("test_fraction incompatible with class counts")

    rng = np.random.default_rng(seed)
    pos_perm = rng.permutation(pos_idx)
    neg_perm = rng.permutation(neg_idx)
    test_idx = np.concatenate([pos_perm[:pos_test], neg_perm[:neg_test]])
    train_idx = np.concatenate([pos_perm[pos_test:], neg_perm[neg_test:]])
    # Interleave classes so contiguous client slices are near-homogeneous.
    train_idx = rng.permutation(train_idx)
    test_idx = rng.permutation(test_idx)
    return [records[i] for i in train_idx], [records[i] for i in test_idx]


def _imputed_continuous(records: Sequence[RawRecord], bmi_mean: float) -> np.ndarray:
    out = np.empty((len(records), 3))
    for i, r in enumerate(records):
        out[i, 0] = r.age
        out[i, 1] = r.avg_glucose_level
        out[i, 2] = bmi_mean if r.bmi is None else r.bmi
    return out


def fit_preprocessor(train: Sequence[RawRecord]) -> PreprocessStats:
    """Fit bmi imputation and z-score statistics from training records only."""
    if not train:
        raise DataError("cannot fit preprocessor on an empty training set")
    bmi_values = [r.bmi for r in train if r.bmi is not None]
    if not bmi_values:
        raise DataError("all bmi values missing; cannot fit imputation mean")
    bmi_mean = float(np.mean(bmi_values))
    cont = _imputed_continuous(train, bmi_mean)
    means = cont.mean(axis=0)
    stds = cont.std(axis=0)
    for name, std in zip(CONTINUOUS_COLUMNS, stds):
        if std <= 0:
            raise DataError(f"column {name} has zero variance; cannot scale")
    return PreprocessStats(bmi_mean=bmi_mean, scaler_means=means, scaler_stds=stds)


def transform(
    records: Sequence[RawRecord], stats: PreprocessStats
) -> tuple[FeatureMatrix, np.ndarray]:
    """Encode records into the 15-column feature matrix plus label vector."""
    n = len(records)
    rows = np.zeros((n, len(FEATURE_COLUMNS)))
    cont = _imputed_continuous(records, stats.bmi_mean)
    rows[:, 0:3] = (cont - stats.scaler_means) / stats.scaler_stds
    labels = np.empty(n, dtype=np.int64)
    for i, r in enumerate(records):
        if r.gender == "Other":
            raise DataError("gender=Other records must be dropped before transform")
        rows[i, 3] = r.hypertension
        rows[i, 4] = r.heart_disease
        rows[i, 5] = 1.0 if r.gender == "Male" else 0.0
        rows[i, 6] = 1.0 if r.ever_married == "Yes" else 0.0
        rows[i, 7] = 1.0 if r.residence_type == "Urban" else 0.0
        # Drop-first indicators: reference categories are WORK_TYPES[0]
        # and SMOKING_STATUSES[0].
        wt = WORK_TYPES.index(r.work_type)
        if wt > 0:
            rows[i, 7 + wt] = 1.0
        sm = SMOKING_STATUSES.index(r.smoking_status)
        if sm > 0:
            rows[i, 11 + sm] = 1.0
        labels[i] = r.stroke
    return FeatureMatrix(rows=rows), labels


def partition_clients(
    features: FeatureMatrix,
    labels: np.ndarray,
    num_clients: int,
    pre_shuffle: bool = False,
    seed: int = 0,
) -> list[ClientPartition]:
    """Slice rows into contiguous per-client blocks.

    The first num_clients - 1 partitions get floor(n / num_clients) rows and
    the last one takes the remainder. ``pre_shuffle`` applies one seeded
    permutation to the rows first.
    """
    labels = np.asarray(labels, dtype=np.int64).ravel()
    n = features.n_rows
    if num_clients < 1:
        raise ValueError("num_clients must be at least 1")
    if n < num_clients:
        raise ValueError(f"{n} rows cannot fill {num_clients} clients")
    rows = features.rows
    if pre_shuffle:
        perm = np.random.default_rng(seed).permutation(n)
        rows = rows[perm]
        labels = labels[perm]
    per_client = n // num_clients
    partitions = []
    for cid in range(num_clients):
        start = cid * per_client
        end = (cid + 1) * per_client if cid != num_clients - 1 else n
        part_rows = rows[start:end]
        partitions.append(
            ClientPartition(
                client_id=cid,
                features=FeatureMatrix(rows=part_rows, column_names=features.column_names),
                labels=labels[start:end],
                n_samples=end - start,
            )
        )
    return partitions


# Class-conditional means/stds for the synthetic generator; positives are
# shifted by one standard deviation in age and glucose.
_SYNTH_AGE = (45.0, 15.0)
_SYNTH_GLUCOSE = (105.0, 30.0)
_SYNTH_BMI = (28.0, 6.0)
_SYNTH_BMI_MISSING_RATE = 0.04


def synth_dataset(n: int, positive_rate: float, seed: int) -> list[RawRecord]:
    """Schema-valid synthetic records with learnable class structure.

    Positive count is round(n * positive_rate). Continuous fields are
    class-conditional Gaussians; categories are sampled uniformly (gender
    from Male/Female only, so row counts survive drop_other_gender).
    """
    if not 0 < positive_rate < 1:
        raise ValueError("positive_rate must be in (0, 1)")
    rng = np.random.default_rng(seed)
    n_pos = int(round(n * positive_rate))
    labels = np.zeros(n, dtype=np.int64)
    labels[:n_pos] = 1
    rng.shuffle(labels)

    age = rng.normal(_SYNTH_AGE[0] + labels * _SYNTH_AGE[1], _SYNTH_AGE[1])
    glucose = rng.normal(
        _SYNTH_GLUCOSE[0] + labels * _SYNTH_GLUCOSE[1], _SYNTH_GLUCOSE[1]
    )
    bmi = rng.normal(_SYNTH_BMI[0], _SYNTH_BMI[1], size=n)
    age = np.clip(age, 1.0, None)
    glucose = np.clip(glucose, 20.0, None)
    bmi = np.clip(bmi, 10.0, None)
    bmi_missing = rng.random(n) < _SYNTH_BMI_MISSING_RATE

    genders = rng.choice(GENDERS[:2], size=n)
    married = rng.choice(YES_NO, size=n)
    work = rng.choice(WORK_TYPES, size=n)
    residence = rng.choice(RESIDENCE_TYPES, size=n)
    smoking = rng.choice(SMOKING_STATUSES, size=n)
    hypertension = rng.integers(0, 2, size=n)
    heart = rng.integers(0, 2, size=n)

    return [
        RawRecord(
            gender=str(genders[i]),
            age=float(age[i]),
            hypertension=int(hypertension[i]),
            heart_disease=int(heart[i]),
            ever_married=str(married[i]),
            work_type=str(work[i]),
            residence_type=str(residence[i]),
            avg_glucose_level=float(glucose[i]),
            bmi=None if bmi_missing[i] else float(bmi[i]),
            smoking_status=str(smoking[i]),
            stroke=int(labels[i]),
        )
        for i in range(n)
    ]


def write_feature_csv(
    features: FeatureMatrix, labels: np.ndarray, path: str | Path
) -> None:
    """Dump a preprocessed matrix as CSV: the 15 feature columns plus stroke."""
    labels = np.asarray(labels, dtype=np.int64).ravel()
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(features.column_names + ("stroke",))
        for row, y in zip(features.rows, labels):
            writer.writerow([f"{v:.10g}" for v in row] + [int(y)])
