"""Agreement metrics and the two validation protocols.

The first protocol examines whether protected features steer a trained
classifier: per-instance age compositions are correlated with age values
within each predicted class, and a gender-only composition vote is compared
against the network's own predictions with Cohen's kappa. The second
protocol is feature flipping: replace the top-ranked features with their
means and watch prediction agreement with the true labels decay.
"""

from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .attribution import composition_class_vote, global_importance, FeatureRanking
from .dataprep import DataError, Dataset
from .fcp import explain
from .network import Network, forward
from .trainer import (
    Hyperparams,
    batch_predict,
    default_hidden_widths,
    init_network,
    stratified_split,
    train,
)


class UndefinedCorrelationError(ValueError):
    """Pearson correlation of a constant sequence does not exist."""


def pearson(xs, ys) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"need two equal-length sequences, got {x.shape} and {y.shape}")
    if x.shape[0] < 2:
        raise ValueError(f"correlation needs at least 2 points, got {x.shape[0]}")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float((dx * dx).sum())
    sy = float((dy * dy).sum())
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant sequence")
    r = float((dx * dy).sum() / np.sqrt(sx * sy))
    return min(max(r, -1.0), 1.0)


def cohen_kappa(a, b) -> float:
    """Chance-corrected agreement between two label sequences.

    kappa = (p_o - p_e) / (1 - p_e) with p_e from the marginal label
    frequencies. When chance agreement is total (both sequences constant and
    equal), kappa is 1 for identical sequences and 0 otherwise.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"need two equal-length sequences, got {a.shape} and {b.shape}")
    if a.shape[0] < 1:
        raise ValueError("kappa needs at least one pair")
    p_o = float(np.mean(a == b))
    p_e = 0.0
    for label in np.union1d(a, b):
        p_e += float(np.mean(a == label)) * float(np.mean(b == label))
    if p_e >= 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    kappa = (p_o - p_e) / (1.0 - p_e)
    return min(max(kappa, -1.0), 1.0)


@dataclass(frozen=True)
class BiasReport:
    """Protected-feature analysis of one trained network on one test set.

    ``r_by_class[c]`` is the Pearson correlation between age values and the
    age composition of the predicted output neuron, over instances predicted
    as class c; None when the group has fewer than 2 members or is constant.
    ``kappa`` measures agreement between network predictions and the
    gender-composition vote. ``group_counts[g, c]`` counts instances of
    gender category g predicted as class c. ``density`` holds one
    (instance, age_value, age_composition, predicted_class) row per
    evaluated instance, ready for plotting.
    """

    r_by_class: tuple[float | None, ...]
    kappa: float
    group_counts: np.ndarray
    gender_categories: tuple[str, ...]
    class_names: tuple[str, ...]
    degenerate_count: int
    n_evaluated: int
    density: tuple[tuple[int, float, float, int], ...]


def bias_report(net: Network, test: Dataset, age: int, gender: int) -> BiasReport:
    """Run the protected-feature protocol over a test set.

    Instances whose predicted-class composition row is degenerate are
    excluded and counted. The gender column must still hold category indices
    (a binary column survives min-max scaling unchanged).
    """
    for name, idx in (("age", age), ("gender", gender)):
        if not 0 <= idx < test.n_features:
            raise ValueError(f"{name} index {idx} out of range for {test.n_features} features")
    if test.n_instances < 1:
        raise ValueError("bias report needs at least one instance")
    gender_meta = test.meta[gender]
    categories = gender_meta.categories if gender_meta.kind == "nominal" else ("0", "1")
    n_classes = len(test.class_names)

    preds: list[int] = []
    votes: list[int] = []
    density: list[tuple[int, float, float, int]] = []
    counts = np.zeros((len(categories), n_classes), dtype=np.int64)
    degenerate = 0
    for i, row in enumerate(test.instances):
        trace = explain(net, row)
        pred = int(np.argmax(forward(net, row).outputs))
        if trace.is_degenerate(len(trace.per_layer) - 1, pred):
            degenerate += 1
            continue
        gval = row[gender]
        if gval != int(gval) or not 0 <= int(gval) < len(categories):
            raise DataError(
                f"row {i}: gender value {gval} is not a category index; "
                "keep the gender column categorical"
            )
        counts[int(gval), pred] += 1
        density.append((i, float(row[age]), float(trace.output_compositions[pred, age]), pred))
        preds.append(pred)
        votes.append(composition_class_vote(trace, gender))
    if not preds:
        raise ValueError(f"all {degenerate} instances had degenerate decision rows")

    r_by_class: list[float | None] = []
    pred_arr = np.array(preds)
    ages = np.array([d[1] for d in density])
    comps = np.array([d[2] for d in density])
    for cls in range(n_classes):
        mask = pred_arr == cls
        if mask.sum() < 2:
            r_by_class.append(None)
            continue
        try:
            r_by_class.append(pearson(ages[mask], comps[mask]))
        except UndefinedCorrelationError:
            r_by_class.append(None)
    return BiasReport(
        tuple(r_by_class),
        cohen_kappa(preds, votes),
        counts,
        tuple(categories),
        test.class_names,
        degenerate,
        len(preds),
        tuple(density),
    )


@dataclass(frozen=True)
class FlipCurve:
    """Mean/std of one agreement metric as top-ranked features get flipped.

    One point per k in 0..N; k=0 is the unflipped baseline. ``ranking``
    records which ranking drove the flipping ("fcp" or "random").
    """

    activation: str
    ranking: str
    k: tuple[int, ...]
    mean: tuple[float, ...]
    std: tuple[float, ...]
    reps: int
    metric: str = "cohen_kappa"

    def __post_init__(self):
        if not (len(self.k) == len(self.mean) == len(self.std)):
            raise ValueError("curve fields must have equal length")


def flip_features(data: Dataset, ranking: FeatureRanking, k: int, means) -> Dataset:
    """Replace the columns of the k top-ranked features with given means."""
    means = np.asarray(means, dtype=np.float64)
    if means.shape[0] != data.n_features:
        raise ValueError(f"{means.shape[0]} means for {data.n_features} features")
    top = ranking.top(k)
    X = np.array(data.instances)
    for idx in top:
        X[:, idx] = means[idx]
    return Dataset(X, data.labels, data.meta, data.class_names)


@dataclass(frozen=True)
class FlipExperimentResult:
    """Curves per activation kind, with optional paired random baselines."""

    curves: dict[str, FlipCurve]
    random_curves: dict[str, FlipCurve] | None = None


def _random_ranking(n_features: int, seed: int) -> FeatureRanking:
    perm = np.random.default_rng(seed).permutation(n_features)
    return FeatureRanking(
        tuple((int(f), float(n_features - pos)) for pos, f in enumerate(perm))
    )


def flip_experiment(
    problem: Dataset,
    hp: Hyperparams,
    activations,
    reps: int,
    train_fraction: float = 0.8,
    hidden_widths=None,
    means_from_train: bool = False,
    random_baseline: bool = False,
) -> FlipExperimentResult:
    """Train/flip/measure, repeated with varied seeds, averaged per activation.

    Repetition r uses seed hp.seed + r for the split, the initial weights,
    and the epoch shuffling together. The importance ranking is computed on
    the same test split that gets flipped, and by default the replacement
    means come from that split too. With random_baseline, a seeded random
    ranking is evaluated on the identical trained models, giving a paired
    comparison.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    n = problem.n_features
    widths = default_hidden_widths(n) if hidden_widths is None else tuple(hidden_widths)
    ks = tuple(range(n + 1))
    per_act: dict[str, list[list[float]]] = {a.kind: [] for a in activations}
    per_act_random: dict[str, list[list[float]]] = {a.kind: [] for a in activations}
    for r in range(reps):
        seed = hp.seed + r
        train_d, test_d = stratified_split(problem, train_fraction, seed)
        source = train_d if means_from_train else test_d
        means = source.instances.mean(axis=0)
        for act in activations:
            net0 = init_network(n, widths, len(problem.class_names), act, seed)
            trained, _ = train(net0, train_d, dc_replace(hp, seed=seed))
            rankings = [("fcp", global_importance(trained, test_d))]
            if random_baseline:
                rankings.append(("random", _random_ranking(n, seed)))
            for tag, ranking in rankings:
                kappas = []
                for k in ks:
                    flipped = flip_features(test_d, ranking, k, means)
                    preds = batch_predict(trained, flipped.instances)
                    kappas.append(cohen_kappa(preds, test_d.labels))
                (per_act if tag == "fcp" else per_act_random)[act.kind].append(kappas)

    def summarize(tag: str, rows: list[list[float]], kind: str) -> FlipCurve:
        arr = np.array(rows)
        return FlipCurve(
            kind,
            tag,
            ks,
            tuple(float(v) for v in arr.mean(axis=0)),
            tuple(float(v) for v in arr.std(axis=0)),
            reps,
        )

    curves = {kind: summarize("fcp", rows, kind) for kind, rows in per_act.items()}
    if not random_baseline:
        return FlipExperimentResult(curves)
    return FlipExperimentResult(
        curves,
        {kind: summarize("random", rows, kind) for kind, rows in per_act_random.items()},
    )
