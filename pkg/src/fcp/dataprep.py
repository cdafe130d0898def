"""Dataset ingestion, encoding, scaling, and the credit-scoring recipe.

Tabular data arrives as delimited text, gets encoded into a float matrix
(nominal categories become their schema index), and is min-max scaled into
[0,1]. The module also carries the specific preprocessing the credit
case study needs: the native UCI file format, collapsing the combined
personal-status attribute into binary gender, and the protected-group
definitions (female, age under 25).
"""

import csv
import json
from dataclasses import dataclass

import numpy as np


class DataError(ValueError):
    """Input data is malformed or inconsistent with its schema."""


@dataclass(frozen=True)
class FeatureMeta:
    """One column's name, encoding kind, and protected status.

    Nominal features list their categories in encoding order: category i
    encodes as the float i. Numeric features have no categories.
    """

    name: str
    kind: str
    categories: tuple[str, ...] = ()
    protected: bool = False

    def __post_init__(self):
        if not self.name:
            raise ValueError("feature name must be non-empty")
        if self.kind not in ("numeric", "nominal"):
            raise ValueError(f"feature kind must be numeric or nominal, got {self.kind!r}")
        cats = tuple(self.categories)
        object.__setattr__(self, "categories", cats)
        if self.kind == "nominal":
            if not cats:
                raise ValueError(f"nominal feature {self.name!r} needs categories")
            if len(set(cats)) != len(cats):
                raise ValueError(f"feature {self.name!r} has duplicate categories")
        elif cats:
            raise ValueError(f"numeric feature {self.name!r} cannot have categories")


@dataclass(frozen=True)
class Dataset:
    """Encoded instances, integer labels, and the column/class metadata."""

    instances: np.ndarray
    labels: np.ndarray
    meta: tuple[FeatureMeta, ...]
    class_names: tuple[str, ...]

    def __post_init__(self):
        X = np.array(self.instances, dtype=np.float64, order="C")
        y = np.array(self.labels, dtype=np.int64)
        meta = tuple(self.meta)
        names = tuple(self.class_names)
        if X.ndim != 2:
            raise DataError(f"instances must be 2-D, got {X.ndim}-D")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError(f"{X.shape[0]} instances but {y.shape[0]} labels")
        if len(meta) != X.shape[1]:
            raise DataError(f"{X.shape[1]} columns but {len(meta)} feature descriptions")
        if not np.isfinite(X).all():
            raise DataError("instances contain non-finite values")
        if not names:
            raise DataError("dataset needs at least one class name")
        if y.size and (y.min() < 0 or y.max() >= len(names)):
            raise DataError(f"labels must lie in [0, {len(names)}), found {y.min()}..{y.max()}")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "instances", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "meta", meta)
        object.__setattr__(self, "class_names", names)

    @property
    def n_instances(self) -> int:
        return self.instances.shape[0]

    @property
    def n_features(self) -> int:
        return self.instances.shape[1]

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(m.name for m in self.meta)

    def feature_index(self, name: str) -> int:
        for i, m in enumerate(self.meta):
            if m.name == name:
                return i
        raise DataError(f"no feature named {name!r}")


def take(data: Dataset, indices) -> Dataset:
    """Row subset of a dataset, in the order given."""
    idx = np.asarray(indices, dtype=np.int64)
    return Dataset(data.instances[idx], data.labels[idx], data.meta, data.class_names)


def _encode_value(value: str, meta: FeatureMeta, where: str) -> float:
    value = value.strip()
    if value == "":
        raise DataError(f"{where}: missing value")
    if meta.kind == "numeric":
        try:
            out = float(value)
        except ValueError:
            raise DataError(f"{where}: not a number: {value!r}") from None
        if not np.isfinite(out):
            raise DataError(f"{where}: non-finite value {value!r}")
        return out
    try:
        return float(meta.categories.index(value))
    except ValueError:
        raise DataError(f"{where}: unknown category {value!r}") from None


def load_csv(source, schema, label_column: str) -> Dataset:
    """Load a comma-separated file with a header row against a schema.

    Columns may appear in any file order; the dataset's column order follows
    the schema. Every header column must be either the label or a schema
    feature, and labels are encoded by the sorted order of their distinct
    values. Errors name the file line and column.
    """
    schema = tuple(schema)
    if hasattr(source, "read"):
        rows = list(csv.reader(source))
    else:
        with open(source, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    if not rows:
        raise DataError("empty file: no header row")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise DataError("header has duplicate column names")
    by_name = {name: i for i, name in enumerate(header)}
    if label_column not in by_name:
        raise DataError(f"label column {label_column!r} not in header")
    missing = [m.name for m in schema if m.name not in by_name]
    if missing:
        raise DataError(f"schema features missing from header: {missing}")
    known = {m.name for m in schema} | {label_column}
    extra = [name for name in header if name not in known]
    if extra:
        raise DataError(f"header has columns not in the schema: {extra}")

    col_of = [by_name[m.name] for m in schema]
    label_col = by_name[label_column]
    encoded = []
    raw_labels = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataError(f"line {lineno}: has {len(row)} fields, header has {len(header)}")
        encoded.append(
            [
                _encode_value(row[col_of[j]], schema[j], f"line {lineno}, column {schema[j].name!r}")
                for j in range(len(schema))
            ]
        )
        label = row[label_col].strip()
        if label == "":
            raise DataError(f"line {lineno}, column {label_column!r}: missing value")
        raw_labels.append(label)
    if not encoded:
        raise DataError("file has a header but no data rows")
    class_names = tuple(sorted(set(raw_labels)))
    index = {name: i for i, name in enumerate(class_names)}
    labels = [index[v] for v in raw_labels]
    return Dataset(np.array(encoded), np.array(labels), schema, class_names)


def load_schema(source) -> tuple[tuple[FeatureMeta, ...], str]:
    """Read a JSON schema sidecar: features list plus the label column name."""
    if hasattr(source, "read"):
        doc = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    if not isinstance(doc, dict) or "features" not in doc or "label" not in doc:
        raise DataError("schema must be an object with 'features' and 'label'")
    feats = []
    for i, fdoc in enumerate(doc["features"]):
        if not isinstance(fdoc, dict) or "name" not in fdoc or "kind" not in fdoc:
            raise DataError(f"features[{i}]: needs 'name' and 'kind'")
        try:
            feats.append(
                FeatureMeta(
                    fdoc["name"],
                    fdoc["kind"],
                    tuple(fdoc.get("categories", ())),
                    bool(fdoc.get("protected", False)),
                )
            )
        except ValueError as exc:
            raise DataError(f"features[{i}]: {exc}") from exc
    if not isinstance(doc["label"], str):
        raise DataError("schema 'label' must be a column name")
    return tuple(feats), doc["label"]


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-column min/max fitted on one dataset, reusable on another."""

    mins: np.ndarray
    maxs: np.ndarray
    constant_columns: tuple[int, ...] = ()

    def __post_init__(self):
        mins = np.asarray(self.mins, dtype=np.float64)
        maxs = np.asarray(self.maxs, dtype=np.float64)
        mins.flags.writeable = False
        maxs.flags.writeable = False
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)
        object.__setattr__(self, "constant_columns", tuple(self.constant_columns))


def minmax_scale(data: Dataset) -> tuple[Dataset, MinMaxScaler]:
    """Scale every column into [0,1] by its own min/max.

    Nominal-encoded columns are scaled exactly like numeric ones. A constant
    column has no range to stretch; it maps to 0 and is flagged on the
    returned scaler.
    """
    mins = data.instances.min(axis=0)
    maxs = data.instances.max(axis=0)
    scaler = MinMaxScaler(mins, maxs, tuple(int(i) for i in np.nonzero(maxs == mins)[0]))
    return apply_scaler(data, scaler), scaler


def apply_scaler(data: Dataset, scaler: MinMaxScaler) -> Dataset:
    """Apply fitted min/max parameters; flagged constant columns map to 0.

    Values outside the fitted range (possible on held-out data) simply land
    outside [0,1]; they are not clipped.
    """
    if scaler.mins.shape[0] != data.n_features:
        raise DataError(
            f"scaler fitted for {scaler.mins.shape[0]} columns, dataset has {data.n_features}"
        )
    span = scaler.maxs - scaler.mins
    const = np.zeros(data.n_features, dtype=bool)
    if scaler.constant_columns:
        const[list(scaler.constant_columns)] = True
    safe = np.where(const, 1.0, span)
    X = (data.instances - scaler.mins) / safe
    if const.any():
        X[:, const] = 0.0
    return Dataset(X, data.labels, data.meta, data.class_names)


def invert_scaler(data: Dataset, scaler: MinMaxScaler) -> Dataset:
    """Undo apply_scaler; flagged constant columns recover their fitted min."""
    if scaler.mins.shape[0] != data.n_features:
        raise DataError(
            f"scaler fitted for {scaler.mins.shape[0]} columns, dataset has {data.n_features}"
        )
    span = scaler.maxs - scaler.mins
    X = data.instances * span + scaler.mins
    if scaler.constant_columns:
        X[:, list(scaler.constant_columns)] = scaler.mins[list(scaler.constant_columns)]
    return Dataset(X, data.labels, data.meta, data.class_names)


# Native UCI credit file: 20 whitespace-separated attributes, then the label
# (1 = good credit, 2 = bad). Nominal codes follow the dataset documentation.
GERMAN_LABEL_GOOD = "1"
GERMAN_SCHEMA: tuple[FeatureMeta, ...] = (
    FeatureMeta("checking_status", "nominal", ("A11", "A12", "A13", "A14")),
    FeatureMeta("duration_months", "numeric"),
    FeatureMeta("credit_history", "nominal", ("A30", "A31", "A32", "A33", "A34")),
    FeatureMeta(
        "purpose",
        "nominal",
        ("A40", "A41", "A42", "A43", "A44", "A45", "A46", "A48", "A49", "A410"),
    ),
    FeatureMeta("credit_amount", "numeric"),
    FeatureMeta("savings_status", "nominal", ("A61", "A62", "A63", "A64", "A65")),
    FeatureMeta("employment_since", "nominal", ("A71", "A72", "A73", "A74", "A75")),
    FeatureMeta("installment_rate", "numeric"),
    FeatureMeta(
        "personal_status_sex", "nominal", ("A91", "A92", "A93", "A94", "A95"), protected=True
    ),
    FeatureMeta("other_debtors", "nominal", ("A101", "A102", "A103")),
    FeatureMeta("residence_since", "numeric"),
    FeatureMeta("property", "nominal", ("A121", "A122", "A123", "A124")),
    FeatureMeta("age", "numeric", protected=True),
    FeatureMeta("other_installments", "nominal", ("A141", "A142", "A143")),
    FeatureMeta("housing", "nominal", ("A151", "A152", "A153")),
    FeatureMeta("existing_credits", "numeric"),
    FeatureMeta("job", "nominal", ("A171", "A172", "A173", "A174")),
    FeatureMeta("people_liable", "numeric"),
    FeatureMeta("telephone", "nominal", ("A191", "A192")),
    FeatureMeta("foreign_worker", "nominal", ("A201", "A202")),
)

FEMALE_CODES = frozenset({"A92", "A95"})
MALE_CODES = frozenset({"A91", "A93", "A94"})


def load_uci_german(source) -> Dataset:
    """Load the native UCI credit file (whitespace-separated, 21 fields/line)."""
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    encoded = []
    labels = []
    for lineno, line in enumerate(lines, start=1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != len(GERMAN_SCHEMA) + 1:
            raise DataError(
                f"line {lineno}: expected {len(GERMAN_SCHEMA) + 1} fields, got {len(fields)}"
            )
        encoded.append(
            [
                _encode_value(fields[j], GERMAN_SCHEMA[j], f"line {lineno}, column {GERMAN_SCHEMA[j].name!r}")
                for j in range(len(GERMAN_SCHEMA))
            ]
        )
        label = fields[-1]
        if label not in ("1", "2"):
            raise DataError(f"line {lineno}: label must be 1 or 2, got {label!r}")
        labels.append(0 if label == GERMAN_LABEL_GOOD else 1)
    if not encoded:
        raise DataError("file has no data lines")
    return Dataset(np.array(encoded), np.array(labels), GERMAN_SCHEMA, ("good", "bad"))


def recode_german_gender(data: Dataset) -> Dataset:
    """Collapse the combined personal-status attribute into binary gender.

    The attribute mixes marital status with sex; only the sex information is
    kept: codes A92 and A95 become female (0), A91, A93 and A94 become male
    (1). Must run before scaling, while column values are still exact
    category indices. Every other column is carried over untouched.
    """
    col = data.feature_index("personal_status_sex")
    meta = data.meta[col]
    values = data.instances[:, col]
    female = np.zeros(data.n_instances, dtype=bool)
    for i, v in enumerate(values):
        if v != int(v) or not 0 <= int(v) < len(meta.categories):
            raise DataError(
                f"row {i}: personal_status_sex value {v} is not a category index; "
                "recode before scaling"
            )
        code = meta.categories[int(v)]
        if code in FEMALE_CODES:
            female[i] = True
        elif code not in MALE_CODES:
            raise DataError(f"row {i}: unexpected personal status code {code!r}")
    X = np.array(data.instances)
    X[:, col] = np.where(female, 0.0, 1.0)
    new_meta = list(data.meta)
    new_meta[col] = FeatureMeta("gender", "nominal", ("female", "male"), protected=True)
    return Dataset(X, data.labels, tuple(new_meta), data.class_names)


@dataclass(frozen=True)
class ProtectedGroups:
    """Boolean membership masks for the protected groups."""

    female: np.ndarray
    young: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.female, dtype=bool)
        y = np.asarray(self.young, dtype=bool)
        f.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "female", f)
        object.__setattr__(self, "young", y)


YOUNG_AGE_LIMIT = 25.0


def protected_groups(data: Dataset) -> ProtectedGroups:
    """Masks for female instances and for age strictly under 25.

    The age threshold is in years, so this must run on unscaled data; a
    column that already looks scaled is rejected rather than silently
    matching everyone.
    """
    age_col = data.feature_index("age")
    gender_col = data.feature_index("gender")
    ages = data.instances[:, age_col]
    if ages.max() <= 1.0:
        raise DataError("age column looks min-max scaled; derive groups before scaling")
    gender_meta = data.meta[gender_col]
    try:
        female_code = float(gender_meta.categories.index("female"))
    except ValueError:
        raise DataError("gender feature has no 'female' category") from None
    return ProtectedGroups(
        data.instances[:, gender_col] == female_code,
        ages < YOUNG_AGE_LIMIT,
    )
