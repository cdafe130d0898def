"""Regenerate the CSV fixtures under data/ from scikit-learn's bundled copies.

Development helper only; the package itself does not depend on scikit-learn.
Run from the repository root: python3 tools/make_fixtures.py
"""

import csv
import json
import os

from sklearn.datasets import load_breast_cancer, load_wine

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "data")


def write_fixture(name, bunch, label_column):
    features = [str(f) for f in bunch.feature_names]
    classes = [str(c) for c in bunch.target_names]
    csv_path = os.path.join(DATA, f"{name}.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(features + [label_column])
        for row, target in zip(bunch.data, bunch.target):
            writer.writerow([repr(float(v)) for v in row] + [classes[target]])
    schema = {
        "features": [{"name": f, "kind": "numeric"} for f in features],
        "label": label_column,
    }
    with open(os.path.join(DATA, f"{name}.schema.json"), "w", encoding="utf-8") as fh:
        json.dump(schema, fh, indent=2)
        fh.write("\n")
    print(f"wrote {csv_path}: {bunch.data.shape[0]} rows, {len(features)} features")


def main():
    os.makedirs(DATA, exist_ok=True)
    write_fixture("breast_cancer_wisconsin", load_breast_cancer(), "diagnosis")
    write_fixture("wine", load_wine(), "cultivar")


if __name__ == "__main__":
    main()
