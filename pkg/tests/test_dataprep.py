import io
import json

import numpy as np
import pytest

from fcp.dataprep import (
    GERMAN_SCHEMA,
    DataError,
    Dataset,
    FeatureMeta,
    MinMaxScaler,
    apply_scaler,
    invert_scaler,
    load_csv,
    load_schema,
    load_uci_german,
    minmax_scale,
    protected_groups,
    recode_german_gender,
    take,
)

TOY_SCHEMA = (
    FeatureMeta("age", "numeric"),
    FeatureMeta("color", "nominal", ("blue", "green", "red")),
)

TOY_CSV = """age,color,outcome
30,red,yes
25,blue,no
40,green,yes
"""


def toy_data():
    return load_csv(io.StringIO(TOY_CSV), TOY_SCHEMA, "outcome")


def test_feature_meta_validation():
    with pytest.raises(ValueError):
        FeatureMeta("", "numeric")
    with pytest.raises(ValueError):
        FeatureMeta("x", "ordinal")
    with pytest.raises(ValueError):
        FeatureMeta("x", "nominal")
    with pytest.raises(ValueError):
        FeatureMeta("x", "nominal", ("a", "a"))
    with pytest.raises(ValueError):
        FeatureMeta("x", "numeric", ("a",))


def test_dataset_validation():
    meta = (FeatureMeta("a", "numeric"),)
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 1)), np.zeros(3, dtype=int), meta, ("c",))
    with pytest.raises(DataError):
        Dataset(np.zeros((2, 2)), np.zeros(2, dtype=int), meta, ("c",))
    with pytest.raises(DataError):
        Dataset(np.array([[np.nan]]), np.zeros(1, dtype=int), meta, ("c",))
    with pytest.raises(DataError):
        Dataset(np.zeros((1, 1)), np.array([1]), meta, ("c",))
    data = Dataset(np.zeros((1, 1)), np.zeros(1, dtype=int), meta, ("c",))
    assert not data.instances.flags.writeable
    assert data.feature_index("a") == 0
    with pytest.raises(DataError):
        data.feature_index("b")


def test_take_subsets_rows():
    data = toy_data()
    sub = take(data, [2, 1])
    assert np.array_equal(sub.instances, data.instances[[2, 1]])
    assert sub.labels.tolist() == [1, 0]
    assert sub.meta == data.meta
    assert sub.class_names == data.class_names


def test_load_csv_encodes_against_schema():
    data = toy_data()
    assert data.feature_names == ("age", "color")
    assert np.array_equal(data.instances, [[30.0, 2.0], [25.0, 0.0], [40.0, 1.0]])
    # Distinct label strings, sorted: no=0, yes=1.
    assert data.class_names == ("no", "yes")
    assert data.labels.tolist() == [1, 0, 1]


def test_load_csv_accepts_any_column_order():
    reordered = "outcome,color,age\nyes,red,30\nno,blue,25\nyes,green,40\n"
    data = load_csv(io.StringIO(reordered), TOY_SCHEMA, "outcome")
    assert np.array_equal(data.instances, toy_data().instances)
    assert data.labels.tolist() == toy_data().labels.tolist()


def test_load_csv_errors_name_line_and_column():
    bad_number = "age,color,outcome\nthirty,red,yes\n20,blue,no\n"
    with pytest.raises(DataError, match="line 2, column 'age'"):
        load_csv(io.StringIO(bad_number), TOY_SCHEMA, "outcome")
    bad_category = "age,color,outcome\n30,red,yes\n20,purple,no\n"
    with pytest.raises(DataError, match="line 3, column 'color'.*purple"):
        load_csv(io.StringIO(bad_category), TOY_SCHEMA, "outcome")
    short_row = "age,color,outcome\n30,red\n"
    with pytest.raises(DataError, match="line 2"):
        load_csv(io.StringIO(short_row), TOY_SCHEMA, "outcome")


def test_load_csv_header_errors():
    with pytest.raises(DataError, match="empty"):
        load_csv(io.StringIO(""), TOY_SCHEMA, "outcome")
    with pytest.raises(DataError, match="no data rows"):
        load_csv(io.StringIO("age,color,outcome\n"), TOY_SCHEMA, "outcome")
    with pytest.raises(DataError, match="label column"):
        load_csv(io.StringIO("age,color\n30,red\n"), TOY_SCHEMA, "outcome")
    with pytest.raises(DataError, match="missing from header"):
        load_csv(io.StringIO("age,outcome\n30,yes\n"), TOY_SCHEMA, "outcome")
    with pytest.raises(DataError, match="not in the schema"):
        load_csv(
            io.StringIO("age,color,height,outcome\n30,red,170,yes\n"),
            TOY_SCHEMA,
            "outcome",
        )
    with pytest.raises(DataError, match="duplicate"):
        load_csv(io.StringIO("age,age,outcome\n30,30,yes\n"), TOY_SCHEMA, "outcome")


def test_load_csv_non_finite_rejected():
    source = "age,color,outcome\ninf,red,yes\n30,blue,no\n"
    with pytest.raises(DataError, match="non-finite"):
        load_csv(io.StringIO(source), TOY_SCHEMA, "outcome")


def test_load_schema_round_trip():
    doc = {
        "features": [
            {"name": "age", "kind": "numeric", "protected": True},
            {"name": "color", "kind": "nominal", "categories": ["blue", "red"]},
        ],
        "label": "outcome",
    }
    features, label = load_schema(io.StringIO(json.dumps(doc)))
    assert label == "outcome"
    assert features[0] == FeatureMeta("age", "numeric", (), True)
    assert features[1] == FeatureMeta("color", "nominal", ("blue", "red"))


def test_load_schema_errors():
    with pytest.raises(DataError, match="'features' and 'label'"):
        load_schema(io.StringIO('{"features": []}'))
    with pytest.raises(DataError, match=r"features\[0\]"):
        load_schema(io.StringIO('{"features": [{"name": "x"}], "label": "y"}'))
    with pytest.raises(DataError, match=r"features\[0\]"):
        load_schema(
            io.StringIO('{"features": [{"name": "x", "kind": "ordinal"}], "label": "y"}')
        )


def test_minmax_scale_golden():
    data = Dataset(
        np.array([[0.0, 2.0], [4.0, 6.0], [2.0, 4.0]]),
        np.zeros(3, dtype=int),
        (FeatureMeta("a", "numeric"), FeatureMeta("b", "numeric")),
        ("c",),
    )
    scaled, scaler = minmax_scale(data)
    assert np.array_equal(scaled.instances, [[0.0, 0.0], [1.0, 1.0], [0.5, 0.5]])
    assert np.array_equal(scaler.mins, [0.0, 2.0])
    assert np.array_equal(scaler.maxs, [4.0, 6.0])
    assert scaler.constant_columns == ()


def test_minmax_scale_constant_column_flagged():
    data = Dataset(
        np.array([[7.0, 1.0], [7.0, 3.0]]),
        np.zeros(2, dtype=int),
        (FeatureMeta("a", "numeric"), FeatureMeta("b", "numeric")),
        ("c",),
    )
    scaled, scaler = minmax_scale(data)
    assert scaler.constant_columns == (0,)
    assert np.array_equal(scaled.instances[:, 0], [0.0, 0.0])
    assert np.array_equal(scaled.instances[:, 1], [0.0, 1.0])


def test_apply_scaler_to_held_out_data_without_clipping():
    meta = (FeatureMeta("a", "numeric"),)
    train = Dataset(np.array([[0.0], [8.0]]), np.zeros(2, dtype=int), meta, ("c",))
    _, scaler = minmax_scale(train)
    test = Dataset(np.array([[4.0], [16.0], [-8.0]]), np.zeros(3, dtype=int), meta, ("c",))
    scaled = apply_scaler(test, scaler)
    assert np.array_equal(scaled.instances[:, 0], [0.5, 2.0, -1.0])


def test_apply_scaler_width_mismatch():
    scaler = MinMaxScaler(np.zeros(3), np.ones(3))
    data = Dataset(
        np.zeros((1, 2)),
        np.zeros(1, dtype=int),
        (FeatureMeta("a", "numeric"), FeatureMeta("b", "numeric")),
        ("c",),
    )
    with pytest.raises(DataError):
        apply_scaler(data, scaler)


def test_invert_scaler_round_trip():
    rng = np.random.default_rng(17)
    meta = tuple(FeatureMeta(f"f{i}", "numeric") for i in range(4))
    X = rng.uniform(-50.0, 5000.0, size=(30, 4))
    data = Dataset(X, np.zeros(30, dtype=int), meta, ("c",))
    scaled, scaler = minmax_scale(data)
    back = invert_scaler(scaled, scaler)
    np.testing.assert_allclose(back.instances, X, rtol=1e-12, atol=1e-12)


GERMAN_LINE_FEMALE = (
    "A11 6 A34 A43 1169 A65 A75 4 A92 A101 4 A121 67 A143 A152 2 A173 1 A192 A201 1"
)
GERMAN_LINE_MALE = (
    "A12 48 A32 A43 5951 A61 A73 2 A93 A101 2 A121 22 A143 A152 1 A173 1 A191 A201 2"
)
GERMAN_LINE_SINGLE_FEMALE = (
    "A14 12 A32 A40 2096 A61 A74 2 A95 A101 3 A121 49 A143 A152 1 A172 2 A191 A201 1"
)


def german_text():
    return "\n".join([GERMAN_LINE_FEMALE, GERMAN_LINE_MALE, GERMAN_LINE_SINGLE_FEMALE]) + "\n"


def test_load_uci_german():
    data = load_uci_german(io.StringIO(german_text()))
    assert data.n_instances == 3 and data.n_features == 20
    assert data.class_names == ("good", "bad")
    assert data.labels.tolist() == [0, 1, 0]
    assert data.meta == GERMAN_SCHEMA
    # Spot-check encodings: checking A11 -> 0, duration 6, amount 1169.
    assert data.instances[0, 0] == 0.0
    assert data.instances[0, 1] == 6.0
    assert data.instances[0, 4] == 1169.0
    # personal_status_sex: A92 -> category index 1, A93 -> 2, A95 -> 4.
    col = data.feature_index("personal_status_sex")
    assert data.instances[:, col].tolist() == [1.0, 2.0, 4.0]
    assert data.instances[:, data.feature_index("age")].tolist() == [67.0, 22.0, 49.0]


def test_load_uci_german_errors():
    with pytest.raises(DataError, match="line 1.*fields"):
        load_uci_german(io.StringIO("A11 6 A34\n"))
    bad_label = german_text().replace(" 1\n", " 3\n", 1)
    with pytest.raises(DataError, match="label"):
        load_uci_german(io.StringIO(bad_label))
    bad_code = german_text().replace("A34", "A39", 1)
    with pytest.raises(DataError, match="'credit_history'.*A39"):
        load_uci_german(io.StringIO(bad_code))
    with pytest.raises(DataError, match="no data"):
        load_uci_german(io.StringIO("\n\n"))


def test_recode_german_gender():
    data = load_uci_german(io.StringIO(german_text()))
    recoded = recode_german_gender(data)
    col = recoded.feature_index("gender")
    assert col == data.feature_index("personal_status_sex")
    assert recoded.instances[:, col].tolist() == [0.0, 1.0, 0.0]
    meta = recoded.meta[col]
    assert meta.kind == "nominal" and meta.categories == ("female", "male")
    assert meta.protected
    # Every other column is carried over bit for bit.
    others = [j for j in range(recoded.n_features) if j != col]
    assert np.array_equal(recoded.instances[:, others], data.instances[:, others])
    assert recoded.class_names == data.class_names


def test_recode_german_gender_rejects_scaled_values():
    data = load_uci_german(io.StringIO(german_text()))
    scaled, _ = minmax_scale(data)
    with pytest.raises(DataError, match="recode before scaling"):
        recode_german_gender(scaled)


def test_protected_groups_age_boundary():
    data = load_uci_german(io.StringIO(german_text()))
    recoded = recode_german_gender(data)
    groups = protected_groups(recoded)
    assert groups.female.tolist() == [True, False, True]
    # Ages 67, 22, 49: only the 22-year-old is under the limit.
    assert groups.young.tolist() == [False, True, False]

    # Exactly 25 is not "under 25".
    meta = (FeatureMeta("age", "numeric"), FeatureMeta("gender", "nominal", ("female", "male")))
    boundary = Dataset(
        np.array([[25.0, 0.0], [24.0, 1.0]]), np.zeros(2, dtype=int), meta, ("c",)
    )
    groups = protected_groups(boundary)
    assert groups.young.tolist() == [False, True]


def test_protected_groups_rejects_scaled_ages():
    meta = (FeatureMeta("age", "numeric"), FeatureMeta("gender", "nominal", ("female", "male")))
    scaled = Dataset(
        np.array([[0.4, 0.0], [1.0, 1.0]]), np.zeros(2, dtype=int), meta, ("c",)
    )
    with pytest.raises(DataError, match="scaled"):
        protected_groups(scaled)


def test_protected_groups_needs_female_category():
    meta = (FeatureMeta("age", "numeric"), FeatureMeta("gender", "nominal", ("m", "f")))
    data = Dataset(np.array([[30.0, 0.0]]), np.zeros(1, dtype=int), meta, ("c",))
    with pytest.raises(DataError, match="female"):
        protected_groups(data)
