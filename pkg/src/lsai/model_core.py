"""Dense-network numerical core.

Everything the rest of the system treats as "a model" lives here: flat
parameter vectors with layer-shape descriptors, sigmoid MLP forward and
backward passes, plain SGD, and the wire format used for model exchange.
All arithmetic is float64 and deterministic.
"""

from dataclasses import dataclass, field, replace
import struct

import numpy as np

MAGIC = b"LSAI"
FORMAT_VERSION = 1

_SIG_LO = np.nextafter(0.0, 1.0)
_SIG_HI = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class LayerShape:
    input_dim: int
    output_dim: int

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError(f"layer dims must be >= 1, got {self.input_dim}x{self.output_dim}")

    @property
    def n_params(self):
        return self.input_dim * self.output_dim + self.output_dim


def total_params(shapes):
    return sum(s.n_params for s in shapes)


@dataclass
class ParamVector:
    """Flat float64 weight vector plus its layer layout.

    Layout: per layer, the (out x in) weight matrix row-major, then the
    bias vector; layers in order.
    """

    values: np.ndarray
    shapes: tuple = ()

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        self.shapes = tuple(self.shapes)
        expect = total_params(self.shapes)
        if self.values.ndim != 1 or self.values.size != expect:
            raise ValueError(
                f"param vector length {self.values.size} does not match shapes (need {expect})"
            )
        if self.values.size and not np.all(np.isfinite(self.values)):
            raise ValueError("param vector contains non-finite entries")

    def copy(self):
        return ParamVector(self.values.copy(), self.shapes)

    def layer_views(self):
        """List of (W, b) views into values; W has shape (out, in)."""
        out = []
        off = 0
        for s in self.shapes:
            w = self.values[off : off + s.input_dim * s.output_dim]
            w = w.reshape(s.output_dim, s.input_dim)
            off += s.input_dim * s.output_dim
            b = self.values[off : off + s.output_dim]
            off += s.output_dim
            out.append((w, b))
        return out

    def __eq__(self, other):
        return (
            isinstance(other, ParamVector)
            and self.shapes == other.shapes
            and np.array_equal(self.values, other.values)
        )


def zeros(shapes):
    return ParamVector(np.zeros(total_params(shapes)), shapes)


def random_init(shapes, rng):
    """Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer."""
    chunks = []
    for s in shapes:
        bound = 1.0 / np.sqrt(s.input_dim)
        chunks.append(rng.uniform(-bound, bound, s.n_params))
    vals = np.concatenate(chunks) if chunks else np.zeros(0)
    return ParamVector(vals, shapes)


def mlp_shapes(input_dim, output_dim, hidden=64, n_hidden=3):
    """Default topology: input -> hidden x n_hidden -> output."""
    dims = [input_dim] + [hidden] * n_hidden + [output_dim]
    return tuple(LayerShape(a, b) for a, b in zip(dims[:-1], dims[1:]))


def sigmoid(x):
    out = np.empty_like(x)
    np.negative(x, out=out)
    np.exp(np.clip(out, None, 700.0), out=out)
    out += 1.0
    np.reciprocal(out, out=out)
    # keep outputs strictly inside (0, 1) even where float64 saturates
    return np.clip(out, _SIG_LO, _SIG_HI)


SIGMOID = "sigmoid"
IDENTITY = "identity"


@dataclass
class MlpModel:
    """Sigmoid-hidden MLP; output layer is sigmoid or identity."""

    params: ParamVector
    out_activation: str = SIGMOID

    def __post_init__(self):
        if self.out_activation not in (SIGMOID, IDENTITY):
            raise ValueError(f"unknown output activation {self.out_activation!r}")
        if not self.params.shapes:
            raise ValueError("model needs at least one layer")

    @property
    def input_dim(self):
        return self.params.shapes[0].input_dim

    @property
    def output_dim(self):
        return self.params.shapes[-1].output_dim

    def copy(self):
        return MlpModel(self.params.copy(), self.out_activation)


def _check_input(model, x):
    if x.shape[-1] != model.input_dim:
        raise ValueError(
            f"input dim {x.shape[-1]} does not match model input {model.input_dim}"
        )


def forward_cache(model, x):
    """Forward pass keeping activations; x is (d,) or (batch, d).

    Returns (output, activations) where activations[0] is the input and
    activations[i] the output of layer i.
    """
    x = np.asarray(x, dtype=np.float64)
    _check_input(model, x)
    layers = model.params.layer_views()
    acts = [x]
    h = x
    for i, (w, b) in enumerate(layers):
        z = h @ w.T + b
        if not np.all(np.isfinite(z)):
            raise ValueError(f"non-finite pre-activation at layer {i}")
        last = i == len(layers) - 1
        if last and model.out_activation == IDENTITY:
            h = z
        else:
            h = sigmoid(z)
        acts.append(h)
    return h, acts


def forward(model, x):
    """Deterministic forward pass; accepts a single vector or a batch."""
    return forward_cache(model, x)[0]


def backward(model, acts, dout):
    """Backprop an output gradient through cached activations.

    Returns (grad ParamVector, input gradient). For batched inputs the
    parameter gradient is averaged over the batch.
    """
    layers = model.params.layer_views()
    grad = np.zeros_like(model.params.values)
    gviews = ParamVector(grad, model.params.shapes)
    # overwrite the zero copy's views in place
    gl = gviews.layer_views()
    batched = acts[0].ndim == 2
    scale = 1.0 / acts[0].shape[0] if batched else 1.0
    d = np.asarray(dout, dtype=np.float64)
    for i in range(len(layers) - 1, -1, -1):
        w, _ = layers[i]
        h = acts[i + 1]
        last = i == len(layers) - 1
        if not (last and model.out_activation == IDENTITY):
            d = d * h * (1.0 - h)  # sigmoid derivative from its own output
        gw, gb = gl[i]
        if batched:
            gw += scale * (d.T @ acts[i])
            gb += scale * d.sum(axis=0)
        else:
            gw += np.outer(d, acts[i])
            gb += d
        d = d @ w
    return gviews, d


def backprop(model, x, target, loss="mse"):
    """Gradient of the MSE loss 0.5*||f(x) - target||^2 w.r.t. params."""
    if loss != "mse":
        raise ValueError(f"unsupported loss {loss!r}")
    target = np.asarray(target, dtype=np.float64)
    y, acts = forward_cache(model, x)
    if y.shape != target.shape:
        raise ValueError(f"target shape {target.shape} does not match output {y.shape}")
    grad, _ = backward(model, acts, y - target)
    return grad


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 1e-3
    batch_size: int = 128

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def sgd_step(params, grad, cfg):
    """params - lr * grad, shapes checked."""
    if params.shapes != grad.shapes:
        raise ValueError("gradient shapes do not match parameter shapes")
    return ParamVector(params.values - cfg.learning_rate * grad.values, params.shapes)


# -- wire format --------------------------------------------------------------
# little-endian: magic "LSAI", version u16, layer count u16,
# per-layer (in u32, out u32), then float64 values in layout order.

_HEADER = struct.Struct("<4sHH")
_LAYER = struct.Struct("<II")


def serialized_size(shapes):
    return _HEADER.size + _LAYER.size * len(shapes) + 8 * total_params(shapes)


def serialize(params):
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, len(params.shapes))]
    for s in params.shapes:
        parts.append(_LAYER.pack(s.input_dim, s.output_dim))
    parts.append(params.values.astype("<f8").tobytes())
    return b"".join(parts)


def deserialize(data):
    if len(data) < _HEADER.size:
        raise ValueError("model bytes truncated: header incomplete")
    magic, version, n_layers = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported format version {version}")
    off = _HEADER.size
    shapes = []
    for _ in range(n_layers):
        if off + _LAYER.size > len(data):
            raise ValueError("model bytes truncated: layer table incomplete")
        i, o = _LAYER.unpack_from(data, off)
        off += _LAYER.size
        shapes.append(LayerShape(i, o))
    shapes = tuple(shapes)
    n = total_params(shapes)
    if len(data) != off + 8 * n:
        raise ValueError(
            f"model bytes truncated or oversized: expected {off + 8 * n} bytes, got {len(data)}"
        )
    values = np.frombuffer(data, dtype="<f8", count=n, offset=off).astype(np.float64)
    return ParamVector(values, shapes)
