"""Dense feed-forward classifier representation and the instance forward pass.

A network is an immutable stack of fully connected layers. Weight matrices
are stored fan-in by fan-out, so column k of a layer's matrix holds the
incoming weights of neuron k. Softmax is permitted only on the output layer;
every other activation applies elementwise.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import linalg
from .linalg import ShapeError

ACTIVATION_KINDS = ("identity", "sigmoid", "tanh", "relu", "leaky_relu", "elu", "softmax")
DEFAULT_LEAKY_SLOPE = 0.01
DEFAULT_ELU_ALPHA = 1.0


class ModelFormatError(ValueError):
    """Model document is malformed or violates a structural invariant."""


@dataclass(frozen=True)
class Activation:
    """Activation function tag.

    ``param`` is the negative-side slope for leaky_relu and the saturation
    scale alpha for elu; both get their conventional defaults when omitted.
    The other kinds take no parameter.
    """

    kind: str
    param: float | None = None

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise ValueError(f"unknown activation {self.kind!r}")
        if self.kind == "leaky_relu":
            slope = DEFAULT_LEAKY_SLOPE if self.param is None else float(self.param)
            if not 0.0 < slope < 1.0:
                raise ValueError(f"leaky_relu slope must be in (0, 1), got {slope}")
            object.__setattr__(self, "param", slope)
        elif self.kind == "elu":
            alpha = DEFAULT_ELU_ALPHA if self.param is None else float(self.param)
            if alpha <= 0.0:
                raise ValueError(f"elu alpha must be positive, got {alpha}")
            object.__setattr__(self, "param", alpha)
        elif self.param is not None:
            raise ValueError(f"{self.kind} takes no parameter")


IDENTITY = Activation("identity")
SIGMOID = Activation("sigmoid")
TANH = Activation("tanh")
RELU = Activation("relu")
LEAKY_RELU = Activation("leaky_relu")
ELU = Activation("elu")
SOFTMAX = Activation("softmax")


def activate(act: Activation, z: np.ndarray) -> np.ndarray:
    """Apply an activation to a 1-D pre-activation vector.

    Sigmoid and elu are evaluated branch-wise on the sign of z so large
    magnitudes cannot overflow. Softmax subtracts the max before
    exponentiating; the result is unchanged analytically and safe in float.
    """
    z = np.asarray(z, dtype=np.float64)
    if act.kind == "identity":
        out = z.copy()
    elif act.kind == "sigmoid":
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
    elif act.kind == "tanh":
        out = np.tanh(z)
    elif act.kind == "relu":
        out = np.maximum(z, 0.0)
    elif act.kind == "leaky_relu":
        out = np.where(z > 0.0, z, act.param * z)
    elif act.kind == "elu":
        out = z.copy()
        neg = z <= 0.0
        out[neg] = act.param * np.expm1(z[neg])
    elif act.kind == "softmax":
        if z.shape[0] < 1:
            raise ShapeError("softmax needs at least one entry")
        e = np.exp(z - z.max())
        out = e / e.sum()
    else:  # unreachable: Activation validates kind
        raise ValueError(f"unknown activation {act.kind!r}")
    return linalg._freeze(out)


@dataclass(frozen=True)
class Layer:
    """One dense layer: weights (fan_in x fan_out), biases, activation."""

    weights: np.ndarray
    biases: np.ndarray
    activation: Activation

    def __post_init__(self):
        w = linalg.matrix(self.weights)
        b = linalg.vector(self.biases)
        if b.shape[0] != w.shape[1]:
            raise ShapeError(
                f"bias length {b.shape[0]} does not match weight columns {w.shape[1]}"
            )
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def fan_in(self) -> int:
        return self.weights.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class Network:
    """Immutable layer stack with validated shape chaining."""

    input_width: int
    layers: tuple[Layer, ...]

    def __post_init__(self):
        if self.input_width < 1:
            raise ValueError(f"input width must be >= 1, got {self.input_width}")
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        if layers[0].fan_in != self.input_width:
            raise ShapeError(
                f"layer 1 expects fan-in {layers[0].fan_in}, input width is {self.input_width}"
            )
        for i in range(len(layers) - 1):
            if layers[i].fan_out != layers[i + 1].fan_in:
                raise ShapeError(
                    f"layer {i + 1} fan-out {layers[i].fan_out} does not match "
                    f"layer {i + 2} fan-in {layers[i + 1].fan_in}"
                )
        for i, layer in enumerate(layers[:-1]):
            if layer.activation.kind == "softmax":
                raise ValueError(f"softmax is only allowed on the output layer, found on layer {i + 1}")
        object.__setattr__(self, "layers", layers)

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].fan_out

    @property
    def n_layers(self) -> int:
        return len(self.layers)


@dataclass(frozen=True)
class ActivationTrace:
    """Post-activation vectors from a forward pass.

    ``per_layer[0]`` is the input instance itself; ``per_layer[l]`` is the
    activation vector of layer l. The last entry is the network output.
    """

    per_layer: tuple[np.ndarray, ...]

    @property
    def outputs(self) -> np.ndarray:
        return self.per_layer[-1]


def forward(net: Network, x) -> ActivationTrace:
    """Run one instance through the network, keeping every layer's activations."""
    a = linalg.vector(x)
    if a.shape[0] != net.input_width:
        raise ShapeError(f"instance has {a.shape[0]} features, network expects {net.input_width}")
    acts = [a]
    for layer in net.layers:
        # Sum the fan-in products in sorted order so the reduction depends
        # only on the multiset of terms. Reordering input features (together
        # with the matching weight rows) then reproduces the very same
        # pre-activations, not merely close ones.
        terms = np.sort(layer.weights * acts[-1][:, None], axis=0)
        z = np.sum(terms, axis=0) + layer.biases
        acts.append(activate(layer.activation, z))
    return ActivationTrace(tuple(acts))


def predict(net: Network, x) -> int:
    """Predicted class index: argmax of the outputs, lowest index on ties."""
    return int(np.argmax(forward(net, x).outputs))


def _activation_params(act: Activation) -> dict:
    if act.kind == "leaky_relu":
        return {"slope": act.param}
    if act.kind == "elu":
        return {"alpha": act.param}
    return {}


def _activation_from_doc(ldoc: dict, where: str) -> Activation:
    kind = ldoc["activation"]
    if not isinstance(kind, str):
        raise ModelFormatError(f"{where}: activation must be a string name")
    params = ldoc.get("activation_params", {})
    if not isinstance(params, dict):
        raise ModelFormatError(f"{where}: activation_params must be an object")
    extras = set(params) - {"slope", "alpha"}
    if extras:
        raise ModelFormatError(f"{where}: unknown activation_params {sorted(extras)}")
    try:
        if kind == "leaky_relu":
            return Activation(kind, params.get("slope"))
        if kind == "elu":
            return Activation(kind, params.get("alpha"))
        if params:
            raise ValueError(f"{kind} takes no parameter")
        return Activation(kind)
    except ValueError as exc:
        raise ModelFormatError(f"{where}: {exc}") from exc


def model_to_dict(net: Network) -> dict:
    """Plain-JSON form of a network. Floats keep full precision via repr."""
    layers = []
    for layer in net.layers:
        ldoc = {
            "activation": layer.activation.kind,
            "weights": layer.weights.tolist(),
            "biases": layer.biases.tolist(),
        }
        params = _activation_params(layer.activation)
        if params:
            ldoc["activation_params"] = params
        layers.append(ldoc)
    return {"input_width": net.input_width, "layers": layers}


def model_from_dict(doc) -> Network:
    """Validate and build a network from its JSON form.

    Errors name the offending location (layer index, row) so a truncated or
    hand-edited file fails loudly instead of producing a subtly wrong model.
    """
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    width = doc.get("input_width")
    if not isinstance(width, int) or width < 1:
        raise ModelFormatError(f"input_width must be a positive integer, got {width!r}")
    layer_docs = doc.get("layers")
    if not isinstance(layer_docs, list) or not layer_docs:
        raise ModelFormatError("model needs a non-empty 'layers' list")
    layers = []
    for i, ldoc in enumerate(layer_docs, start=1):
        where = f"layers[{i}]"
        if not isinstance(ldoc, dict):
            raise ModelFormatError(f"{where}: layer must be an object")
        missing = {"weights", "biases", "activation"} - set(ldoc)
        if missing:
            raise ModelFormatError(f"{where}: missing fields {sorted(missing)}")
        rows = ldoc["weights"]
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            raise ModelFormatError(f"{where}: weights must be a non-empty list of rows")
        ncols = len(rows[0])
        for rno, row in enumerate(rows, start=1):
            if len(row) != ncols:
                raise ModelFormatError(
                    f"{where}: weights row {rno} has {len(row)} entries, expected {ncols}"
                )
        act = _activation_from_doc(ldoc, where)
        try:
            layers.append(Layer(rows, ldoc["biases"], act))
        except (ShapeError, ValueError, TypeError) as exc:
            raise ModelFormatError(f"{where}: {exc}") from exc
    try:
        return Network(width, tuple(layers))
    except (ShapeError, ValueError) as exc:
        raise ModelFormatError(str(exc)) from exc


def save_model(net: Network, destination) -> None:
    """Write a network as JSON to a path or text file object."""
    doc = model_to_dict(net)
    if hasattr(destination, "write"):
        json.dump(doc, destination, indent=2, sort_keys=True)
        destination.write("\n")
    else:
        with open(destination, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_model(source) -> Network:
    """Read a network from a JSON path or text file object."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not valid JSON: {exc}") from exc
    return model_from_dict(doc)
