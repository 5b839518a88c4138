"""Hand-derived LSTM building blocks: cells, layers, dropout, losses, Adam and training.

Tensors are float64 numpy arrays. Sequences are laid out as (batch, steps, features).
Gate tensors are stacked along a leading axis in the order of `GATES`.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .errors import StaleCacheError, TrainingError
from .preprocess import WindowedDataset

logger = logging.getLogger(__name__)

GATES = ("input", "forget", "output", "candidate")
LOSSES = ("mse", "mae")


@dataclass(slots=True)
class LstmParams:
    """Gate-stacked weights: W (4, hidden, input), U (4, hidden, hidden), b (4, hidden)."""

    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    def __post_init__(self) -> None:
        if self.W.ndim != 3 or self.W.shape[0] != len(GATES):
            raise ValueError(f"W must have shape (4, hidden, input), got {self.W.shape}.")
        hidden = self.W.shape[1]
        if self.U.shape != (len(GATES), hidden, hidden):
            raise ValueError(f"U must have shape (4, {hidden}, {hidden}), got {self.U.shape}.")
        if self.b.shape != (len(GATES), hidden):
            raise ValueError(f"b must have shape (4, {hidden}), got {self.b.shape}.")
        for name in ("W", "U", "b"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"LSTM parameter {name} contains non-finite entries.")

    @property
    def hidden_size(self) -> int:
        return int(self.W.shape[1])

    @property
    def input_size(self) -> int:
        return int(self.W.shape[2])

    def gate(self, name: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        index = GATES.index(name)
        return self.W[index], self.U[index], self.b[index]

    @classmethod
    def initialize(
        cls,
        input_size: int,
        hidden_size: int,
        rng: np.random.Generator,
        forget_bias: float = 1.0,
    ) -> LstmParams:
        if input_size < 1 or hidden_size < 1:
            raise ValueError("input_size and hidden_size must be >= 1.")
        bound = 1.0 / math.sqrt(hidden_size)
        W = rng.uniform(-bound, bound, size=(len(GATES), hidden_size, input_size))
        U = rng.uniform(-bound, bound, size=(len(GATES), hidden_size, hidden_size))
        b = np.zeros((len(GATES), hidden_size))
        b[GATES.index("forget")] = forget_bias
        return cls(W=W, U=U, b=b)


@dataclass(slots=True)
class DenseParams:
    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        if self.weights.ndim != 2 or self.bias.shape != (self.weights.shape[0],):
            raise ValueError(
                f"Dense weights (out, in) and bias (out,) disagree: "
                f"{self.weights.shape} vs {self.bias.shape}."
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("Dense parameters contain non-finite entries.")

    @classmethod
    def initialize(cls, input_size: int, output_size: int, rng: np.random.Generator) -> DenseParams:
        bound = 1.0 / math.sqrt(input_size)
        return cls(
            weights=rng.uniform(-bound, bound, size=(output_size, input_size)),
            bias=np.zeros(output_size),
        )


@dataclass(frozen=True, slots=True)
class DropoutSpec:
    """Inverted dropout: kept activations are divided by (1 - rate) during training."""

    rate: float = 0.2

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"Dropout rate must be in [0, 1), got {self.rate}.")

    def mask(self, shape: Tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        keep = rng.random(shape) >= self.rate
        return keep / (1.0 - self.rate)


@dataclass(slots=True)
class AdamState:
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0.")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must be in [0, 1).")
        if self.step < 0:
            raise ValueError("step must be >= 0.")

    @classmethod
    def for_parameters(
        cls, params: Mapping[str, np.ndarray], learning_rate: float = 0.001, **kwargs: float
    ) -> AdamState:
        return cls(
            learning_rate=learning_rate,
            first_moment={name: np.zeros_like(value) for name, value in params.items()},
            second_moment={name: np.zeros_like(value) for name, value in params.items()},
            **kwargs,
        )


@dataclass(frozen=True, slots=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    lookback: int = 60
    dropout: float = 0.2
    learning_rate: float = 0.001
    seed: int = 0
    hidden_sizes: Tuple[int, ...] = (50, 50)
    clip_norm: float = 5.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1.")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1.")
        if self.lookback < 1:
            raise ValueError("lookback must be >= 1.")
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ValueError("hidden_sizes must list at least one positive width.")
        if self.clip_norm <= 0.0:
            raise ValueError("clip_norm must be > 0.")
        DropoutSpec(self.dropout)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lookback": self.lookback,
            "dropout": self.dropout,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
            "hidden_sizes": list(self.hidden_sizes),
            "clip_norm": self.clip_norm,
        }


@dataclass(slots=True)
class CellCache:
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    tanh_c: np.ndarray


def _stacked(params: LstmParams) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    hidden = params.hidden_size
    return (
        params.W.reshape(4 * hidden, params.input_size),
        params.U.reshape(4 * hidden, hidden),
        params.b.reshape(4 * hidden),
    )


def _activate(z: np.ndarray, hidden: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    i = expit(z[..., :hidden])
    f = expit(z[..., hidden : 2 * hidden])
    o = expit(z[..., 2 * hidden : 3 * hidden])
    g = np.tanh(z[..., 3 * hidden :])
    return i, f, o, g


def lstm_cell_forward(
    params: LstmParams,
    x: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, CellCache]:
    """One LSTM step for a vector or a (batch, features) matrix."""

    single = np.ndim(x) == 1
    x2, h2, c2 = np.atleast_2d(x), np.atleast_2d(h_prev), np.atleast_2d(c_prev)
    hidden = params.hidden_size
    if x2.shape[1] != params.input_size:
        raise ValueError(f"x has {x2.shape[1]} features, params expect {params.input_size}.")
    if h2.shape[1] != hidden or c2.shape[1] != hidden:
        raise ValueError(f"h_prev and c_prev must have {hidden} units.")
    if not x2.shape[0] == h2.shape[0] == c2.shape[0]:
        raise ValueError("x, h_prev and c_prev disagree on batch size.")
    W, U, b = _stacked(params)
    z = x2 @ W.T + h2 @ U.T + b
    i, f, o, g = _activate(z, hidden)
    c = f * c2 + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    cache = CellCache(x2, h2, c2, i, f, o, g, tanh_c)
    if single:
        return h[0], c[0], cache
    return h, c, cache


def lstm_cell_backward(
    params: LstmParams,
    cache: CellCache,
    dh: np.ndarray,
    dc_next: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, LstmParams]:
    """Gradients of one step: (dx, dh_prev, dc_prev, parameter gradients)."""

    dh, dc_next = np.atleast_2d(dh), np.atleast_2d(dc_next)
    dz, dc_prev = _cell_pre_activation_grad(
        cache.i, cache.f, cache.o, cache.g, cache.tanh_c, cache.c_prev, dh, dc_next
    )
    W, U, _ = _stacked(params)
    hidden = params.hidden_size
    grads = LstmParams(
        W=(dz.T @ cache.x).reshape(len(GATES), hidden, params.input_size),
        U=(dz.T @ cache.h_prev).reshape(len(GATES), hidden, hidden),
        b=dz.sum(axis=0).reshape(len(GATES), hidden),
    )
    return dz @ W, dz @ U, dc_prev, grads


def _cell_pre_activation_grad(
    i: np.ndarray,
    f: np.ndarray,
    o: np.ndarray,
    g: np.ndarray,
    tanh_c: np.ndarray,
    c_prev: np.ndarray,
    dh: np.ndarray,
    dc_next: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    dc = dc_next + dh * o * (1.0 - tanh_c * tanh_c)
    dz = np.concatenate(
        (
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            dh * tanh_c * o * (1.0 - o),
            dc * i * (1.0 - g * g),
        ),
        axis=-1,
    )
    return dz, dc * f


@dataclass(slots=True)
class LayerCache:
    inputs: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    tanh_c: np.ndarray


class LstmLayer:
    """Unrolls one LSTM over every step of a batched sequence, starting from zero state."""

    __slots__ = ("params",)

    def __init__(self, params: LstmParams) -> None:
        self.params = params

    def forward(self, inputs: np.ndarray) -> Tuple[np.ndarray, LayerCache]:
        if inputs.ndim != 3 or inputs.shape[2] != self.params.input_size:
            raise ValueError(
                f"Expected (batch, steps, {self.params.input_size}) inputs, got {inputs.shape}."
            )
        batch, steps, _ = inputs.shape
        hidden = self.params.hidden_size
        W, U, b = _stacked(self.params)
        projected = inputs @ W.T + b
        shape = (batch, steps, hidden)
        h_prev, c_prev = np.zeros(shape), np.zeros(shape)
        gates = [np.empty(shape) for _ in GATES]
        tanh_c = np.empty(shape)
        outputs = np.empty(shape)
        h = np.zeros((batch, hidden))
        c = np.zeros((batch, hidden))
        for t in range(steps):
            h_prev[:, t] = h
            c_prev[:, t] = c
            i, f, o, g = _activate(projected[:, t] + h @ U.T, hidden)
            c = f * c + i * g
            tanh_c[:, t] = np.tanh(c)
            h = o * tanh_c[:, t]
            for store, value in zip(gates, (i, f, o, g)):
                store[:, t] = value
            outputs[:, t] = h
        cache = LayerCache(inputs, h_prev, c_prev, *gates, tanh_c)
        return outputs, cache

    def backward(self, cache: LayerCache, d_outputs: np.ndarray) -> Tuple[np.ndarray, LstmParams]:
        batch, steps, _ = cache.inputs.shape
        hidden = self.params.hidden_size
        if d_outputs.shape != (batch, steps, hidden):
            raise ValueError(
                f"Upstream gradient shape {d_outputs.shape} != {(batch, steps, hidden)}."
            )
        W, U, _ = _stacked(self.params)
        dz_seq = np.empty((batch, steps, 4 * hidden))
        dh_next = np.zeros((batch, hidden))
        dc_next = np.zeros((batch, hidden))
        for t in reversed(range(steps)):
            dz, dc_next = _cell_pre_activation_grad(
                cache.i[:, t],
                cache.f[:, t],
                cache.o[:, t],
                cache.g[:, t],
                cache.tanh_c[:, t],
                cache.c_prev[:, t],
                d_outputs[:, t] + dh_next,
                dc_next,
            )
            dz_seq[:, t] = dz
            dh_next = dz @ U
        d_inputs = dz_seq @ W
        grads = LstmParams(
            W=np.tensordot(dz_seq, cache.inputs, axes=([0, 1], [0, 1])).reshape(
                len(GATES), hidden, self.params.input_size
            ),
            U=np.tensordot(dz_seq, cache.h_prev, axes=([0, 1], [0, 1])).reshape(
                len(GATES), hidden, hidden
            ),
            b=dz_seq.sum(axis=(0, 1)).reshape(len(GATES), hidden),
        )
        return d_inputs, grads


@dataclass(slots=True)
class ForwardCache:
    """Intermediates of one forward pass, tied to the parameter generation that produced them."""

    network: "Network"
    generation: int
    layers: List[LayerCache]
    masks: List[np.ndarray | None]
    extras: Dict[str, np.ndarray] = field(default_factory=dict)


class Network(ABC):
    """A trainable sequence model over windows of shape (batch, lookback)."""

    loss: str = "mse"
    kind: str = "network"

    def __init__(self, lookback: int, dropout: DropoutSpec) -> None:
        if lookback < 1:
            raise ValueError("lookback must be >= 1.")
        self.lookback = lookback
        self.dropout = dropout
        self.generation = 0

    @abstractmethod
    def parameters(self) -> Dict[str, np.ndarray]:
        """Every trainable tensor by stable name; values are the live arrays."""

    @abstractmethod
    def forward(
        self,
        inputs: np.ndarray,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tuple[np.ndarray, ForwardCache]:
        """Run a batch of windows and keep what `backward` needs."""

    @abstractmethod
    def backward(self, cache: ForwardCache, upstream: np.ndarray) -> Dict[str, np.ndarray]:
        """Gradients for every entry of `parameters()` given d(loss)/d(output)."""

    @abstractmethod
    def targets(self, dataset: WindowedDataset) -> np.ndarray:
        """What the network learns to output for each dataset row."""

    @abstractmethod
    def architecture(self) -> Dict[str, Any]:
        """Constructor arguments needed to rebuild an identically shaped network."""

    def predict(self, inputs: np.ndarray, batch_size: int = 512) -> np.ndarray:
        if len(inputs) == 0:
            raise ValueError("Nothing to predict: no windows given.")
        chunks = [
            self.forward(inputs[start : start + batch_size])[0]
            for start in range(0, len(inputs), batch_size)
        ]
        return np.concatenate(chunks, axis=0)

    def mark_updated(self) -> None:
        self.generation += 1

    def _as_sequence(self, inputs: np.ndarray) -> np.ndarray:
        inputs = np.asarray(inputs, dtype=np.float64)
        if inputs.ndim == 2:
            inputs = inputs[:, :, np.newaxis]
        if inputs.ndim != 3 or inputs.shape[1:] != (self.lookback, 1):
            raise ValueError(
                f"Expected windows of shape (batch, {self.lookback}), got {inputs.shape}."
            )
        return inputs

    def _dropout(
        self, activations: np.ndarray, training: bool, rng: np.random.Generator | None
    ) -> Tuple[np.ndarray, np.ndarray | None]:
        if not training or self.dropout.rate == 0.0:
            return activations, None
        if rng is None:
            raise ValueError("Training-mode forward passes need an rng for dropout masks.")
        mask = self.dropout.mask(activations.shape, rng)
        return activations * mask, mask

    def _check_cache(self, cache: ForwardCache) -> None:
        if cache.network is not self:
            raise StaleCacheError("Cache was produced by a different network.")
        if cache.generation != self.generation:
            raise StaleCacheError(
                f"Cache from parameter generation {cache.generation}, "
                f"network is at {self.generation}."
            )


def run_stack(
    network: Network,
    layers: Sequence[LstmLayer],
    sequence: np.ndarray,
    training: bool,
    rng: np.random.Generator | None,
) -> Tuple[np.ndarray, List[LayerCache], List[np.ndarray | None]]:
    """Feed a sequence through stacked layers with dropout after each one."""

    caches: List[LayerCache] = []
    masks: List[np.ndarray | None] = []
    for layer in layers:
        sequence, cache = layer.forward(sequence)
        sequence, mask = network._dropout(sequence, training, rng)
        caches.append(cache)
        masks.append(mask)
    return sequence, caches, masks


def backprop_stack(
    layers: Sequence[LstmLayer],
    caches: Sequence[LayerCache],
    masks: Sequence[np.ndarray | None],
    d_sequence: np.ndarray,
    prefix: str,
    grads: Dict[str, np.ndarray],
) -> np.ndarray:
    for index in reversed(range(len(layers))):
        mask = masks[index]
        if mask is not None:
            d_sequence = d_sequence * mask
        d_sequence, layer_grads = layers[index].backward(caches[index], d_sequence)
        grads[f"{prefix}{index}.W"] = layer_grads.W
        grads[f"{prefix}{index}.U"] = layer_grads.U
        grads[f"{prefix}{index}.b"] = layer_grads.b
    return d_sequence


def stack_parameters(layers: Sequence[LstmLayer], prefix: str) -> Dict[str, np.ndarray]:
    params: Dict[str, np.ndarray] = {}
    for index, layer in enumerate(layers):
        params[f"{prefix}{index}.W"] = layer.params.W
        params[f"{prefix}{index}.U"] = layer.params.U
        params[f"{prefix}{index}.b"] = layer.params.b
    return params


def build_stack(
    input_size: int, hidden_sizes: Sequence[int], rng: np.random.Generator
) -> List[LstmLayer]:
    layers: List[LstmLayer] = []
    for hidden in hidden_sizes:
        layers.append(LstmLayer(LstmParams.initialize(input_size, hidden, rng)))
        input_size = hidden
    return layers


class LstmRegressor(Network):
    """Stacked LSTM with a dense head on the last step: one normalized price per window."""

    loss = "mse"
    kind = "regressor"

    def __init__(
        self,
        lookback: int,
        hidden_sizes: Sequence[int] = (50, 50),
        dropout: DropoutSpec | None = None,
        rng: np.random.Generator | None = None,
    ) -> None:
        super().__init__(lookback, dropout or DropoutSpec(0.2))
        if not hidden_sizes:
            raise ValueError("hidden_sizes must list at least one layer.")
        rng = rng or np.random.default_rng()
        self.hidden_sizes = tuple(hidden_sizes)
        self.layers = build_stack(1, self.hidden_sizes, rng)
        self.head = DenseParams.initialize(self.hidden_sizes[-1], 1, rng)

    def parameters(self) -> Dict[str, np.ndarray]:
        params = stack_parameters(self.layers, "lstm")
        params["dense.weights"] = self.head.weights
        params["dense.bias"] = self.head.bias
        return params

    def forward(
        self,
        inputs: np.ndarray,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tuple[np.ndarray, ForwardCache]:
        sequence = self._as_sequence(inputs)
        sequence, caches, masks = run_stack(self, self.layers, sequence, training, rng)
        last = sequence[:, -1, :]
        output = last @ self.head.weights.T + self.head.bias
        cache = ForwardCache(self, self.generation, caches, masks, {"last": last})
        return output[:, 0], cache

    def backward(self, cache: ForwardCache, upstream: np.ndarray) -> Dict[str, np.ndarray]:
        self._check_cache(cache)
        last = cache.extras["last"]
        d_output = np.asarray(upstream, dtype=np.float64).reshape(-1, 1)
        if d_output.shape[0] != last.shape[0]:
            raise ValueError("Upstream gradient does not match the cached batch.")
        grads: Dict[str, np.ndarray] = {
            "dense.weights": d_output.T @ last,
            "dense.bias": d_output.sum(axis=0),
        }
        d_sequence = np.zeros((last.shape[0], self.lookback, self.hidden_sizes[-1]))
        d_sequence[:, -1] = d_output @ self.head.weights
        backprop_stack(self.layers, cache.layers, cache.masks, d_sequence, "lstm", grads)
        return grads

    def targets(self, dataset: WindowedDataset) -> np.ndarray:
        return dataset.targets

    def architecture(self) -> Dict[str, Any]:
        return {
            "lookback": self.lookback,
            "hidden_sizes": list(self.hidden_sizes),
            "dropout": self.dropout.rate,
        }


def sequence_forward(
    model: Network,
    window: np.ndarray,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> Tuple[np.ndarray, ForwardCache]:
    """Forward a single window of length `model.lookback`; the batch axis is dropped."""

    window = np.asarray(window, dtype=np.float64).reshape(-1)
    if window.shape[0] != model.lookback:
        raise ValueError(f"Window has {window.shape[0]} steps, model expects {model.lookback}.")
    output, cache = model.forward(window[np.newaxis, :], training=training, rng=rng)
    return output[0], cache


def sequence_backward(cache: ForwardCache, d_prediction: np.ndarray | float) -> Dict[str, np.ndarray]:
    upstream = np.asarray(d_prediction, dtype=np.float64)[np.newaxis, ...]
    return cache.network.backward(cache, upstream)


def _check_pair(pred: np.ndarray, target: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"Length mismatch: pred {pred.shape} vs target {target.shape}.")
    if pred.size == 0:
        raise ValueError("Loss of an empty batch is undefined.")
    return pred, target


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    pred, target = _check_pair(pred, target)
    return float(np.mean((pred - target) ** 2))


def mae_loss(pred: np.ndarray, target: np.ndarray) -> float:
    pred, target = _check_pair(pred, target)
    return float(np.mean(np.abs(pred - target)))


def loss_and_gradient(kind: str, pred: np.ndarray, target: np.ndarray) -> Tuple[float, np.ndarray]:
    pred, target = _check_pair(pred, target)
    diff = pred - target
    if kind == "mse":
        return float(np.mean(diff * diff)), 2.0 * diff / diff.size
    if kind == "mae":
        return float(np.mean(np.abs(diff))), np.sign(diff) / diff.size
    raise ValueError(f"Unsupported loss '{kind}'; expected one of {LOSSES}.")


def adam_step(
    state: AdamState,
    params: Dict[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
) -> Tuple[Dict[str, np.ndarray], AdamState]:
    """Bias-corrected Adam update applied in place to every array in `params`."""

    for name, value in params.items():
        grad = grads.get(name)
        if grad is None or grad.shape != value.shape:
            got = None if grad is None else grad.shape
            raise ValueError(f"Gradient for '{name}' has shape {got}, expected {value.shape}.")
        if not np.all(np.isfinite(grad)):
            raise ValueError(f"Gradient for '{name}' contains non-finite entries.")
    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    step_size = state.learning_rate / correction1
    for name, value in params.items():
        grad = grads[name]
        m = state.first_moment.setdefault(name, np.zeros_like(value))
        v = state.second_moment.setdefault(name, np.zeros_like(value))
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * (grad * grad)
        value -= step_size * m / (np.sqrt(v / correction2) + state.epsilon)
    return params, state


def clip_by_global_norm(grads: Dict[str, np.ndarray], max_norm: float) -> float:
    """Scale every gradient in place so the joint L2 norm is at most `max_norm`."""

    norm = math.sqrt(sum(float(np.sum(grad * grad)) for grad in grads.values()))
    if math.isfinite(norm) and norm > max_norm:
        scale = max_norm / norm
        for grad in grads.values():
            grad *= scale
    return norm


@dataclass(slots=True)
class TrainResult:
    model: Network
    losses: List[float]


def train(model: Network, dataset: WindowedDataset, config: TrainConfig) -> TrainResult:
    """Mini-batch Adam over seeded shuffles; one mean loss per epoch."""

    if len(dataset) == 0:
        raise ValueError("Cannot train on an empty dataset.")
    if dataset.lookback != model.lookback:
        raise ValueError(
            f"Dataset lookback {dataset.lookback} != model lookback {model.lookback}."
        )
    rng = np.random.default_rng(config.seed + 1)
    targets = model.targets(dataset)
    params = model.parameters()
    optimizer = AdamState.for_parameters(params, learning_rate=config.learning_rate)
    samples = len(dataset)
    losses: List[float] = []
    logger.info(
        "Training %s: %d samples, %d epochs, batch %d",
        model.kind,
        samples,
        config.epochs,
        config.batch_size,
    )
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(samples)
        total = 0.0
        for batch_index, start in enumerate(range(0, samples, config.batch_size)):
            rows = order[start : start + config.batch_size]
            output, cache = model.forward(dataset.inputs[rows], training=True, rng=rng)
            loss, upstream = loss_and_gradient(model.loss, output, targets[rows])
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {batch_index}",
                    epoch=epoch,
                    batch=batch_index,
                )
            grads = model.backward(cache, upstream)
            norm = clip_by_global_norm(grads, config.clip_norm)
            if not math.isfinite(norm):
                raise TrainingError(
                    f"non-finite gradient norm at epoch {epoch}, batch {batch_index}",
                    epoch=epoch,
                    batch=batch_index,
                )
            adam_step(optimizer, params, grads)
            model.mark_updated()
            total += loss * len(rows)
        losses.append(total / samples)
        logger.debug("%s epoch %d/%d loss %.6g", model.kind, epoch, config.epochs, losses[-1])
    logger.info("Finished %s: final loss %.6g", model.kind, losses[-1])
    return TrainResult(model=model, losses=losses)
