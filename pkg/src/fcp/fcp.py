"""Per-neuron feature composition, propagated forward through a network.

Every neuron of every layer gets a signed vector over the input features:
entry k says how strongly feature k drives that neuron on the given
instance, with sign carrying excitation versus inhibition and magnitudes
normalized to unit L1 mass per neuron. Layer 0 is the identity (each input
neuron is composed purely of its own feature). Each later layer folds the
previous layer's compositions through the incoming weights, scaled by the
absolute activations of the source neurons. Bias weights never take part:
they map to no input feature.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .linalg import ShapeError
from .network import Network, forward

# A row whose absolute entries sum below this has no feature mass to
# distribute; it is zeroed and flagged instead of divided.
DEGENERATE_EPS = 1e-12


@dataclass(frozen=True)
class CompositionTrace:
    """Composition matrices for every layer of one forward pass.

    ``per_layer[0]`` is the N-by-N identity over the features;
    ``per_layer[l]`` has one row per neuron of layer l. ``degenerate_rows``
    lists (layer, row) pairs whose raw composition had no mass and were
    zeroed rather than normalized.
    """

    per_layer: tuple[np.ndarray, ...]
    degenerate_rows: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if not self.per_layer:
            raise ValueError("a trace needs at least the identity layer")

    @property
    def n_features(self) -> int:
        return self.per_layer[0].shape[0]

    @property
    def output_compositions(self) -> np.ndarray:
        return self.per_layer[-1]

    def is_degenerate(self, layer: int, row: int) -> bool:
        return (layer, row) in set(self.degenerate_rows)


def init_compositions(n_features: int) -> np.ndarray:
    """Layer-0 composition matrix: each input neuron is its own feature."""
    return linalg.identity(n_features)


def propagate_raw(comp_prev: np.ndarray, act_prev: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Fold one layer: raw composition of neuron i, feature k is
    sum_j w[j, i] * comp_prev[j, k] * |act_prev[j]|.

    Activations enter by absolute value, so a source neuron's composition
    sign survives even when the activation itself is negative. Biases are
    absent by construction. Expressed with the kernel primitives this is
    ``((|a| expanded into comp_prev)^T W)^T``.
    """
    act_prev = np.asarray(act_prev, dtype=np.float64)
    if act_prev.ndim != 1:
        raise ShapeError(f"activations must be a vector, got {act_prev.ndim}-D")
    if comp_prev.shape[0] != act_prev.shape[0]:
        raise ShapeError(
            f"composition has {comp_prev.shape[0]} rows, activations have {act_prev.shape[0]}"
        )
    if weights.shape[0] != act_prev.shape[0]:
        raise ShapeError(
            f"weights expect fan-in {weights.shape[0]}, previous layer has {act_prev.shape[0]}"
        )
    scaled = linalg.col_expand_mul(np.abs(act_prev), comp_prev)
    return linalg.transpose(linalg.matmul(linalg.transpose(scaled), weights))


def normalize_rows(raw: np.ndarray) -> tuple[np.ndarray, tuple[int, ...]]:
    """L1-normalize each row, keeping signs; flag rows with no mass.

    The denominator sums the absolute entries in ascending order, which
    makes it invariant under feature permutations bit-for-bit, not merely up
    to rounding. Rows whose mass falls below DEGENERATE_EPS are zeroed and
    their indices returned.
    """
    if raw.ndim != 2:
        raise ShapeError(f"expected a matrix, got {raw.ndim}-D")
    absrow = np.abs(raw)
    denom = np.sum(np.sort(absrow, axis=1), axis=1)
    degenerate = denom < DEGENERATE_EPS
    safe = np.where(degenerate, 1.0, denom)
    out = raw / safe[:, None]
    if degenerate.any():
        out[degenerate, :] = 0.0
    return linalg._freeze(out), tuple(int(i) for i in np.nonzero(degenerate)[0])


def explain(net: Network, x) -> CompositionTrace:
    """Composition matrices for one instance, layer 0 through the output.

    Runs the forward pass to get activations, then alternates raw
    propagation and row normalization once per layer.
    """
    trace = forward(net, x)
    comps = [init_compositions(net.input_width)]
    flagged: list[tuple[int, int]] = []
    for lno, layer in enumerate(net.layers, start=1):
        raw = propagate_raw(comps[-1], trace.per_layer[lno - 1], layer.weights)
        normed, degenerate = normalize_rows(raw)
        flagged.extend((lno, row) for row in degenerate)
        comps.append(normed)
    return CompositionTrace(tuple(comps), tuple(flagged))


def explanation_to_dict(trace: CompositionTrace, x) -> dict:
    """Plain-JSON form of a composition trace for one instance."""
    return {
        "instance": [float(v) for v in np.asarray(x, dtype=np.float64)],
        "degenerate_rows": [[lno, row] for lno, row in trace.degenerate_rows],
        "layers": [
            {"layer": lno, "compositions": mat.tolist()}
            for lno, mat in enumerate(trace.per_layer)
        ],
    }
