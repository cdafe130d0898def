"""Feature attributions from composition traces, plus a relevance baseline.

The composition route reads the output layer's composition row for the
predicted class. The baseline route is epsilon-stabilized relevance
backpropagation seeded at the pre-softmax score of the predicted class; it
is an independent comparison point, not another view of the same
computation, so the two share no propagation code.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .fcp import CompositionTrace, explain
from .network import Network, forward


class DegenerateAttributionError(ValueError):
    """The composition row needed for attribution carried no feature mass."""


@dataclass(frozen=True)
class FeatureAttribution:
    """Per-feature scores with their provenance.

    ``method`` is "FCP" or "LRP"; ``scope`` is "instance" or "global". FCP
    instance scores are absolute composition shares and sum to 1; LRP scores
    are signed relevances with no fixed scale.
    """

    scores: np.ndarray
    method: str
    scope: str

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=np.float64)
        if not np.isfinite(arr).all():
            raise ValueError("attribution scores must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "scores", arr)
        if self.method not in ("FCP", "LRP"):
            raise ValueError(f"unknown attribution method {self.method!r}")
        if self.scope not in ("instance", "global"):
            raise ValueError(f"unknown attribution scope {self.scope!r}")


@dataclass(frozen=True)
class FeatureRanking:
    """All features ordered by descending score, ties broken by lower index.

    ``order`` holds (feature_index, score) pairs. ``skipped`` counts
    instances a global aggregate dropped because their attribution row was
    degenerate.
    """

    order: tuple[tuple[int, float], ...]
    skipped: int = 0

    def __post_init__(self):
        indices = [i for i, _ in self.order]
        if sorted(indices) != list(range(len(indices))):
            raise ValueError("ranking must be a permutation of all features")
        scores = [s for _, s in self.order]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("ranking scores must be non-increasing")

    def top(self, k: int) -> tuple[int, ...]:
        if not 0 <= k <= len(self.order):
            raise ValueError(f"k must be in [0, {len(self.order)}], got {k}")
        return tuple(idx for idx, _ in self.order[:k])


def _rank(mean_scores: np.ndarray, skipped: int) -> FeatureRanking:
    order = sorted(range(mean_scores.shape[0]), key=lambda i: (-mean_scores[i], i))
    return FeatureRanking(tuple((i, float(mean_scores[i])) for i in order), skipped)


def instance_importance(trace: CompositionTrace, net: Network, x) -> FeatureAttribution:
    """Attribution for one instance: |composition row| of the predicted class.

    The trace must come from explain(net, x). Raises
    DegenerateAttributionError when the decision row was zeroed during
    normalization, since magnitudes of a massless row mean nothing.
    """
    pred = int(np.argmax(forward(net, x).outputs))
    last = len(trace.per_layer) - 1
    if trace.is_degenerate(last, pred):
        raise DegenerateAttributionError(
            f"composition row for predicted class {pred} is degenerate"
        )
    return FeatureAttribution(np.abs(trace.output_compositions[pred]), "FCP", "instance")


def global_importance(net: Network, data) -> FeatureRanking:
    """Mean absolute predicted-class composition over a dataset, ranked.

    Instances whose decision row is degenerate are skipped and counted in
    the result. An empty dataset, or one where every instance is skipped,
    leaves nothing to average and raises.
    """
    instances = np.asarray(data.instances, dtype=np.float64)
    if instances.shape[0] < 1:
        raise ValueError("global importance needs at least one instance")
    total = np.zeros(instances.shape[1])
    used = 0
    skipped = 0
    for row in instances:
        trace = explain(net, row)
        try:
            attr = instance_importance(trace, net, row)
        except DegenerateAttributionError:
            skipped += 1
            continue
        total += attr.scores
        used += 1
    if used == 0:
        raise DegenerateAttributionError(
            f"all {skipped} instances had degenerate attribution rows"
        )
    return _rank(total / used, skipped)


def composition_class_vote(trace: CompositionTrace, feature: int) -> int:
    """Output class whose composition weights the feature most strongly.

    Compares the signed output compositions down the feature's column and
    returns the class with the largest value, lowest index on ties.
    """
    if not 0 <= feature < trace.n_features:
        raise ValueError(f"feature index {feature} out of range")
    return int(np.argmax(trace.output_compositions[:, feature]))


def lrp_epsilon(net: Network, x, epsilon: float = 1e-9) -> FeatureAttribution:
    """Epsilon-rule relevance backpropagation down to the input features.

    Relevance starts as the pre-softmax score of the predicted class
    (softmax rescales scores without reordering, so the score itself is the
    quantity worth decomposing). Each backward step shares a neuron's
    relevance over its inputs in proportion to their contribution
    a_j * w_jk, stabilized by epsilon * sign(z_k) in the denominator, with
    sign(0) taken as +1.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    trace = forward(net, x)
    pre = []
    for lno, layer in enumerate(net.layers):
        a_prev = trace.per_layer[lno]
        pre.append(np.sum(layer.weights * a_prev[:, None], axis=0) + layer.biases)
    pred = int(np.argmax(trace.outputs))
    relevance = np.zeros(net.n_outputs)
    relevance[pred] = pre[-1][pred]
    for lno in range(len(net.layers) - 1, -1, -1):
        a_prev = trace.per_layer[lno]
        z = pre[lno]
        denom = z + epsilon * np.where(z >= 0.0, 1.0, -1.0)
        shares = (a_prev[:, None] * net.layers[lno].weights) / denom[None, :]
        relevance = shares @ relevance
    return FeatureAttribution(relevance, "LRP", "instance")


def global_lrp_importance(net: Network, data, epsilon: float = 1e-9) -> FeatureRanking:
    """Mean absolute input relevance over a dataset, ranked like the FCP one."""
    instances = np.asarray(data.instances, dtype=np.float64)
    if instances.shape[0] < 1:
        raise ValueError("global importance needs at least one instance")
    total = np.zeros(instances.shape[1])
    for row in instances:
        total += np.abs(lrp_epsilon(net, row, epsilon).scores)
    return _rank(total / instances.shape[0], 0)


def write_attribution_csv(path, order, names, method: str, scope: str) -> None:
    """Write scored features as feature,name,score,method,scope rows.

    ``order`` is an iterable of (feature_index, score); rows are written in
    the order given, so passing a ranking yields a ranked file.
    """
    rows = list(order)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "name", "score", "method", "scope"])
        for idx, score in rows:
            writer.writerow([idx, names[idx], repr(float(score)), method, scope])
