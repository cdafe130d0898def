"""Hand-rolled reference implementations used as independent oracles.

Everything here recomputes results with plain Python floats and explicit
loops, deliberately sharing no code with the package, so a bug in the
library's vectorized pipeline cannot hide in its own oracle.
"""

import math

import numpy as np

from fcp.network import Activation, Layer, Network

HIDDEN_KINDS = ("identity", "sigmoid", "tanh", "relu", "leaky_relu", "elu")
OUTPUT_KINDS = HIDDEN_KINDS + ("softmax",)


def apply_activation(kind, param, z):
    if kind == "identity":
        return list(z)
    if kind == "sigmoid":
        out = []
        for v in z:
            if v >= 0:
                out.append(1.0 / (1.0 + math.exp(-v)))
            else:
                e = math.exp(v)
                out.append(e / (1.0 + e))
        return out
    if kind == "tanh":
        return [math.tanh(v) for v in z]
    if kind == "relu":
        return [v if v > 0 else 0.0 for v in z]
    if kind == "leaky_relu":
        return [v if v > 0 else param * v for v in z]
    if kind == "elu":
        return [v if v > 0 else param * (math.exp(v) - 1.0) for v in z]
    if kind == "softmax":
        m = max(z)
        e = [math.exp(v - m) for v in z]
        s = sum(e)
        return [v / s for v in e]
    raise ValueError(kind)


def oracle_forward(weights, biases, kinds, params, x):
    """Per-layer activations computed with explicit loops over lists."""
    acts = [list(map(float, x))]
    for w, b, kind, param in zip(weights, biases, kinds, params):
        fan_in = len(w)
        fan_out = len(w[0])
        z = [
            sum(w[j][i] * acts[-1][j] for j in range(fan_in)) + b[i]
            for i in range(fan_out)
        ]
        acts.append(apply_activation(kind, param, z))
    return acts


def oracle_compositions(weights, acts, zero_eps=1e-12):
    """Naive composition propagation: raw sums, then row normalization.

    Returns (per-layer composition lists, set of (layer, row) degenerate
    pairs). Layer 0 is the identity.
    """
    n = len(acts[0])
    comps = [[[1.0 if i == k else 0.0 for k in range(n)] for i in range(n)]]
    degenerate = set()
    for lno, w in enumerate(weights, start=1):
        a_prev = acts[lno - 1]
        comp_prev = comps[-1]
        fan_in = len(w)
        fan_out = len(w[0])
        normed = []
        for i in range(fan_out):
            raw = [
                sum(w[j][i] * comp_prev[j][k] * abs(a_prev[j]) for j in range(fan_in))
                for k in range(n)
            ]
            mass = sum(abs(v) for v in raw)
            if mass < zero_eps:
                normed.append([0.0] * n)
                degenerate.add((lno, i))
            else:
                normed.append([v / mass for v in raw])
        comps.append(normed)
    return comps, degenerate


def random_net_spec(rng, min_layers=2, max_layers=4, max_width=8):
    """Random layer stack as plain lists: (weights, biases, kinds, params, x)."""
    n_layers = int(rng.integers(min_layers, max_layers + 1))
    widths = [int(rng.integers(1, max_width + 1)) for _ in range(n_layers + 1)]
    weights = []
    biases = []
    kinds = []
    params = []
    for i in range(n_layers):
        weights.append(rng.uniform(-2.0, 2.0, size=(widths[i], widths[i + 1])).tolist())
        biases.append(rng.uniform(-1.0, 1.0, size=widths[i + 1]).tolist())
        pool = OUTPUT_KINDS if i == n_layers - 1 else HIDDEN_KINDS
        kind = pool[int(rng.integers(0, len(pool)))]
        kinds.append(kind)
        if kind == "leaky_relu":
            params.append(float(rng.uniform(0.01, 0.5)))
        elif kind == "elu":
            params.append(float(rng.uniform(0.5, 2.0)))
        else:
            params.append(None)
    x = rng.uniform(-2.0, 2.0, size=widths[0]).tolist()
    return weights, biases, kinds, params, x


def build_net(weights, biases, kinds, params):
    layers = tuple(
        Layer(w, b, Activation(kind, param))
        for w, b, kind, param in zip(weights, biases, kinds, params)
    )
    return Network(len(weights[0]), layers)


def random_network(rng, **kw):
    """Random Network plus the matching input vector."""
    weights, biases, kinds, params, x = random_net_spec(rng, **kw)
    return build_net(weights, biases, kinds, params), (weights, biases, kinds, params, x)


def oracle_cross_entropy_loss(weights, biases, kinds, params, X, labels):
    """Mean softmax cross-entropy over a batch, via the loop oracle."""
    total = 0.0
    for row, label in zip(X, labels):
        acts = oracle_forward(weights, biases, kinds, params, row)
        # kinds[-1] is softmax in the nets this is used for; recompute the
        # log-sum-exp from the pre-activation of the final layer.
        prev = acts[-2]
        w = weights[-1]
        b = biases[-1]
        z = [
            sum(w[j][i] * prev[j] for j in range(len(w))) + b[i]
            for i in range(len(w[0]))
        ]
        m = max(z)
        lse = m + math.log(sum(math.exp(v - m) for v in z))
        total += lse - z[label]
    return total / len(labels)


def as_array(nested):
    return np.asarray(nested, dtype=np.float64)
