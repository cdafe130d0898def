"""Mini-batch Adam training for dense softmax classifiers.

Also houses the stratified train/test split, Glorot-style initialization,
and the diagnostic loss that adds a protected-feature composition penalty
and a weight-norm penalty to the squared error. That loss reports values
only; no gradient ever flows through composition vectors.

The training loop works on plain mutable numpy arrays and uses numpy's
native matrix operator for batch throughput. It is bit-deterministic for a
fixed seed, data order, and hyperparameters, which is all the training
contract asks; the stricter permutation-stable arithmetic lives in the
explanation pipeline, not here.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dataprep import Dataset, take
from .fcp import explain
from .network import (
    SOFTMAX,
    Activation,
    Layer,
    Network,
    forward,
)


@dataclass(frozen=True)
class Hyperparams:
    """Optimizer and loss knobs.

    lambda1 weighs the protected-composition term and lambda2 the squared
    weight norm in the diagnostic loss. bias_weight_decay is an optional L2
    pull on bias vectors during training (off by default), there because
    large biases dilute what composition vectors can express.
    abs_bias_term switches the diagnostic composition sum to absolute
    values; the default keeps the signed sum, where cancellation across
    neurons is possible and intentional.
    """

    learning_rate: float = 0.001
    epochs: int = 100
    batch_size: int = 32
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    lambda1: float = 0.0
    lambda2: float = 0.0
    bias_weight_decay: float = 0.0
    abs_bias_term: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        for name in ("adam_beta1", "adam_beta2"):
            beta = getattr(self, name)
            if not 0.0 < beta < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {beta}")
        if self.adam_eps <= 0:
            raise ValueError(f"adam_eps must be positive, got {self.adam_eps}")
        for name in ("lambda1", "lambda2", "bias_weight_decay"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class TrainReport:
    """Per-epoch mean loss plus final accuracies for one training run."""

    epoch_mean_loss: list[float] = field(default_factory=list)
    train_accuracy: float = 0.0
    test_accuracy: float | None = None
    seed: int = 0


def default_hidden_widths(n_features: int) -> tuple[int, int]:
    """The case-study architecture: two hidden layers of 2N and N neurons."""
    return (2 * n_features, n_features)


def init_network(
    n_features: int,
    hidden_widths,
    n_classes: int,
    hidden_activation: Activation,
    seed: int,
    output_activation: Activation = SOFTMAX,
) -> Network:
    """Uniform Glorot-style initialization, zero biases.

    Each weight is drawn from U(-r, r) with r = sqrt(6 / (fan_in + fan_out)),
    keeping initial activations well inside every transfer function's linear
    region for min-max scaled inputs.
    """
    rng = np.random.default_rng(seed)
    widths = [n_features, *hidden_widths, n_classes]
    layers = []
    for i in range(len(widths) - 1):
        fan_in, fan_out = widths[i], widths[i + 1]
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        act = output_activation if i == len(widths) - 2 else hidden_activation
        layers.append(Layer(w, np.zeros(fan_out), act))
    return Network(n_features, tuple(layers))


def stratified_split(data: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split rows per class so both sides keep the class proportions.

    Every class needs at least 2 instances so each side gets at least one.
    The per-class train count is round(fraction * count), clamped to leave
    one instance on each side. Deterministic for a fixed seed.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train fraction must be in (0, 1), got {train_fraction}")
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for cls in range(len(data.class_names)):
        members = np.nonzero(data.labels == cls)[0]
        if members.shape[0] < 2:
            raise ValueError(
                f"class {data.class_names[cls]!r} has {members.shape[0]} instances, needs >= 2"
            )
        shuffled = members[rng.permutation(members.shape[0])]
        n_train = round(train_fraction * members.shape[0])
        n_train = min(max(n_train, 1), members.shape[0] - 1)
        train_idx.extend(int(i) for i in shuffled[:n_train])
        test_idx.extend(int(i) for i in shuffled[n_train:])
    return take(data, sorted(train_idx)), take(data, sorted(test_idx))


class AdamState:
    """First/second moment accumulators for one parameter array."""

    def __init__(self, shape, hp: Hyperparams):
        self.hp = hp
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0

    def step(self, grad: np.ndarray) -> np.ndarray:
        """Return the parameter delta for this gradient (already negated)."""
        hp = self.hp
        self.t += 1
        self.m = hp.adam_beta1 * self.m + (1.0 - hp.adam_beta1) * grad
        self.v = hp.adam_beta2 * self.v + (1.0 - hp.adam_beta2) * grad * grad
        m_hat = self.m / (1.0 - hp.adam_beta1**self.t)
        v_hat = self.v / (1.0 - hp.adam_beta2**self.t)
        return -hp.learning_rate * m_hat / (np.sqrt(v_hat) + hp.adam_eps)


def _activate_batch(act: Activation, Z: np.ndarray) -> np.ndarray:
    """Row-wise activation on a batch of pre-activation vectors."""
    if act.kind == "identity":
        return Z.copy()
    if act.kind == "sigmoid":
        out = np.empty_like(Z)
        pos = Z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-Z[pos]))
        ez = np.exp(Z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if act.kind == "tanh":
        return np.tanh(Z)
    if act.kind == "relu":
        return np.maximum(Z, 0.0)
    if act.kind == "leaky_relu":
        return np.where(Z > 0.0, Z, act.param * Z)
    if act.kind == "elu":
        out = Z.copy()
        neg = Z <= 0.0
        out[neg] = act.param * np.expm1(Z[neg])
        return out
    if act.kind == "softmax":
        shifted = Z - Z.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)
    raise ValueError(f"unknown activation {act.kind!r}")


def _activation_grad_batch(act: Activation, Z: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Elementwise dA/dZ for hidden activations (softmax is handled fused)."""
    if act.kind == "identity":
        return np.ones_like(Z)
    if act.kind == "sigmoid":
        return A * (1.0 - A)
    if act.kind == "tanh":
        return 1.0 - A * A
    if act.kind == "relu":
        return (Z > 0.0).astype(np.float64)
    if act.kind == "leaky_relu":
        return np.where(Z > 0.0, 1.0, act.param)
    if act.kind == "elu":
        # For z <= 0, a = alpha*(e^z - 1), so da/dz = alpha*e^z = a + alpha.
        return np.where(Z > 0.0, 1.0, A + act.param)
    raise ValueError(f"no elementwise gradient for {act.kind!r}")


def _forward_batch(weights, biases, activations, X):
    pre = []
    post = [X]
    for w, b, act in zip(weights, biases, activations):
        z = post[-1] @ w + b
        pre.append(z)
        post.append(_activate_batch(act, z))
    return pre, post


def _batch_gradients(weights, biases, acts, bx, by):
    """Mean cross-entropy over one batch and its exact parameter gradients.

    ``by`` is one-hot. The softmax head is fused with the loss: the gradient
    at the output pre-activations is (probabilities - one-hot) / batch size.
    Returns (loss_sum, weight gradients, bias gradients).
    """
    pre, post = _forward_batch(weights, biases, acts, bx)
    probs = post[-1]
    shifted = pre[-1] - pre[-1].max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss_sum = float(-(by * log_probs).sum())

    grads_w = [None] * len(weights)
    grads_b = [None] * len(weights)
    delta = (probs - by) / bx.shape[0]
    for lno in range(len(weights) - 1, -1, -1):
        grads_w[lno] = post[lno].T @ delta
        grads_b[lno] = delta.sum(axis=0)
        if lno > 0:
            upstream = delta @ weights[lno].T
            delta = upstream * _activation_grad_batch(acts[lno - 1], pre[lno - 1], post[lno])
    return loss_sum, grads_w, grads_b


def batch_predict(net: Network, instances: np.ndarray) -> np.ndarray:
    """Predicted class per row; same tie rule as predict (lowest index)."""
    X = np.asarray(instances, dtype=np.float64)
    weights = [l.weights for l in net.layers]
    biases = [l.biases for l in net.layers]
    acts = [l.activation for l in net.layers]
    _, post = _forward_batch(weights, biases, acts, X)
    return np.argmax(post[-1], axis=1)


def accuracy(net: Network, data: Dataset) -> float:
    """Fraction of instances whose predicted class matches the label."""
    if data.n_instances == 0:
        raise ValueError("accuracy needs at least one instance")
    return float(np.mean(batch_predict(net, data.instances) == data.labels))


def softmax_cross_entropy(logits, label: int) -> float:
    """Negative log softmax probability of the label, computed in log space."""
    z = np.asarray(logits, dtype=np.float64)
    if not 0 <= label < z.shape[0]:
        raise ValueError(f"label {label} out of range for {z.shape[0]} logits")
    m = z.max()
    return float(m + math.log(np.exp(z - m).sum()) - z[label])


def train(
    net: Network, train_data: Dataset, hp: Hyperparams, eval_data: Dataset | None = None
) -> tuple[Network, TrainReport]:
    """Mini-batch Adam on softmax cross-entropy.

    The softmax head and the loss are fused in the backward pass (the
    gradient at the pre-activations is probabilities minus one-hot).
    Shuffling is driven by hp.seed, one permutation per epoch, so runs are
    bit-reproducible. Returns a new network; the input network is untouched.
    """
    if net.layers[-1].activation.kind != "softmax":
        raise ValueError("training requires a softmax output layer")
    n_classes = len(train_data.class_names)
    if net.n_outputs != n_classes:
        raise ValueError(f"network has {net.n_outputs} outputs but data has {n_classes} classes")
    if net.input_width != train_data.n_features:
        raise ValueError(
            f"network expects {net.input_width} features, data has {train_data.n_features}"
        )

    weights = [np.array(l.weights) for l in net.layers]
    biases = [np.array(l.biases) for l in net.layers]
    acts = [l.activation for l in net.layers]
    w_state = [AdamState(w.shape, hp) for w in weights]
    b_state = [AdamState(b.shape, hp) for b in biases]

    X = train_data.instances
    y = train_data.labels
    n = X.shape[0]
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0

    rng = np.random.default_rng(hp.seed)
    report = TrainReport(seed=hp.seed)
    for _ in range(hp.epochs):
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, hp.batch_size):
            idx = order[start : start + hp.batch_size]
            # The reported loss is the cross-entropy alone; bias_weight_decay
            # only shapes the bias gradients below.
            batch_loss, grads_w, grads_b = _batch_gradients(
                weights, biases, acts, X[idx], onehot[idx]
            )
            loss_sum += batch_loss
            for lno in range(len(weights)):
                grad_b = grads_b[lno]
                if hp.bias_weight_decay > 0.0:
                    grad_b = grad_b + 2.0 * hp.bias_weight_decay * biases[lno]
                weights[lno] += w_state[lno].step(grads_w[lno])
                biases[lno] += b_state[lno].step(grad_b)
        report.epoch_mean_loss.append(loss_sum / n)

    trained = Network(
        net.input_width,
        tuple(Layer(w, b, a) for w, b, a in zip(weights, biases, acts)),
    )
    report.train_accuracy = accuracy(trained, train_data)
    if eval_data is not None:
        report.test_accuracy = accuracy(trained, eval_data)
    return trained, report


class BiasLoss(NamedTuple):
    """Diagnostic loss breakdown; degenerate rows contributed zero bias."""

    total: float
    error_term: float
    bias_term: float
    reg_term: float
    degenerate_rows: tuple[tuple[int, int], ...]


def bias_penalized_loss(
    net: Network, x, target, protected: int, hp: Hyperparams
) -> BiasLoss:
    """Squared error plus weighted composition and weight-norm penalties.

    The error term compares network outputs against the target vector. The
    bias term sums the protected feature's composition value over every
    neuron of every layer past the input, signed (or absolute when
    hp.abs_bias_term is set). The regularization term sums all squared
    weights, biases excluded. Values only; nothing here is differentiated.
    """
    target = np.asarray(target, dtype=np.float64)
    outputs = forward(net, x).outputs
    if target.shape != outputs.shape:
        raise ValueError(f"target has {target.shape[0]} entries, network outputs {outputs.shape[0]}")
    if not 0 <= protected < net.input_width:
        raise ValueError(f"protected feature index {protected} out of range")
    error = float(((outputs - target) ** 2).sum())
    trace = explain(net, x)
    bias = 0.0
    for mat in trace.per_layer[1:]:
        column = mat[:, protected]
        bias += float(np.abs(column).sum() if hp.abs_bias_term else column.sum())
    reg = sum(float((l.weights * l.weights).sum()) for l in net.layers)
    total = error + hp.lambda1 * bias + hp.lambda2 * reg
    return BiasLoss(total, error, bias, reg, trace.degenerate_rows)
