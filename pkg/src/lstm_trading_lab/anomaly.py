"""Strategy-2 breakout detector: an LSTM autoencoder scored by reconstruction MAE."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from .errors import DataError
from .neural import (
    DenseParams,
    DropoutSpec,
    ForwardCache,
    Network,
    TrainConfig,
    backprop_stack,
    build_stack,
    run_stack,
    stack_parameters,
    train,
)
from .preprocess import (
    MinMaxScaler,
    WindowedDataset,
    fit_scaler,
    make_windows,
    sliding_windows,
    transform,
)
from .types import AnomalyLabel, PriceSeries, SplitSeries

logger = logging.getLogger(__name__)

DEFAULT_LOOKBACK = 30
DEFAULT_THRESHOLD = 0.55


class LstmAutoencoder(Network):
    """Encoder stack -> latent (last hidden state) -> repeated over the window -> decoder stack.

    Decoder widths mirror the encoder widths; a dense head maps every decoder step back
    to one normalized price.
    """

    loss = "mae"
    kind = "autoencoder"

    def __init__(
        self,
        lookback: int = DEFAULT_LOOKBACK,
        hidden_sizes: Sequence[int] = (32, 16),
        dropout: DropoutSpec | None = None,
        rng: np.random.Generator | None = None,
    ) -> None:
        super().__init__(lookback, dropout or DropoutSpec(0.2))
        if not hidden_sizes:
            raise ValueError("hidden_sizes must list at least one encoder layer.")
        rng = rng or np.random.default_rng()
        self.hidden_sizes = tuple(hidden_sizes)
        self.encoder = build_stack(1, self.hidden_sizes, rng)
        self.decoder = build_stack(self.latent_size, tuple(reversed(self.hidden_sizes)), rng)
        self.head = DenseParams.initialize(self.hidden_sizes[0], 1, rng)

    @property
    def latent_size(self) -> int:
        return self.hidden_sizes[-1]

    def parameters(self) -> Dict[str, np.ndarray]:
        params = stack_parameters(self.encoder, "encoder")
        params.update(stack_parameters(self.decoder, "decoder"))
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
        encoded, enc_caches, enc_masks = run_stack(self, self.encoder, sequence, training, rng)
        latent = encoded[:, -1, :]
        repeated = np.repeat(latent[:, np.newaxis, :], self.lookback, axis=1)
        decoded, dec_caches, dec_masks = run_stack(self, self.decoder, repeated, training, rng)
        output = decoded @ self.head.weights.T + self.head.bias
        cache = ForwardCache(
            self,
            self.generation,
            enc_caches + dec_caches,
            enc_masks + dec_masks,
            {"decoded": decoded},
        )
        return output[..., 0], cache

    def backward(self, cache: ForwardCache, upstream: np.ndarray) -> Dict[str, np.ndarray]:
        self._check_cache(cache)
        decoded = cache.extras["decoded"]
        d_output = np.asarray(upstream, dtype=np.float64)
        if d_output.shape != decoded.shape[:2]:
            raise ValueError(
                f"Upstream gradient shape {d_output.shape} != reconstruction {decoded.shape[:2]}."
            )
        d_output = d_output[..., np.newaxis]
        grads: Dict[str, np.ndarray] = {
            "dense.weights": np.tensordot(d_output, decoded, axes=([0, 1], [0, 1])),
            "dense.bias": d_output.sum(axis=(0, 1)),
        }
        depth = len(self.encoder)
        d_repeated = backprop_stack(
            self.decoder,
            cache.layers[depth:],
            cache.masks[depth:],
            d_output @ self.head.weights,
            "decoder",
            grads,
        )
        d_encoded = np.zeros((decoded.shape[0], self.lookback, self.latent_size))
        d_encoded[:, -1] = d_repeated.sum(axis=1)
        backprop_stack(
            self.encoder, cache.layers[:depth], cache.masks[:depth], d_encoded, "encoder", grads
        )
        return grads

    def targets(self, dataset: WindowedDataset) -> np.ndarray:
        return dataset.inputs

    def architecture(self) -> Dict[str, Any]:
        return {
            "lookback": self.lookback,
            "hidden_sizes": list(self.hidden_sizes),
            "dropout": self.dropout.rate,
        }


@dataclass(slots=True)
class AutoencoderModel:
    network: LstmAutoencoder
    scaler: MinMaxScaler
    losses: List[float] = field(default_factory=list)

    @property
    def lookback(self) -> int:
        return self.network.lookback


def fit_autoencoder(split: SplitSeries, config: TrainConfig) -> AutoencoderModel:
    """Train on the (assumed anomaly-free) training split; no filtering is applied."""

    lookback = config.lookback
    if len(split.train) <= lookback:
        raise DataError(
            f"{split.train.ticker}: {len(split.train)} training bars cannot fill "
            f"a {lookback}-day window plus one"
        )
    scaler = fit_scaler(split.train)
    dataset = make_windows(transform(scaler, split.train.values()), lookback)
    network = LstmAutoencoder(
        lookback=lookback,
        hidden_sizes=config.hidden_sizes,
        dropout=DropoutSpec(config.dropout),
        rng=np.random.default_rng(config.seed),
    )
    result = train(network, dataset, config)
    return AutoencoderModel(network=network, scaler=scaler, losses=result.losses)


def reconstruction_windows(
    model: AutoencoderModel, series: PriceSeries, context: PriceSeries | None = None
) -> np.ndarray:
    lookback = model.lookback
    values = transform(model.scaler, series.values())
    if context is None:
        if len(series) < lookback:
            raise DataError(
                f"{series.ticker}: {len(series)} bars cannot fill a {lookback}-day window"
            )
        return sliding_windows(values, lookback)
    needed = lookback - 1
    if len(context) < needed:
        raise DataError(
            f"{series.ticker}: context of {len(context)} bars is shorter than {needed}"
        )
    tail = transform(model.scaler, context.values()[len(context) - needed :])
    return sliding_windows(np.concatenate((tail, values)), lookback)


def reconstruction_errors(
    model: AutoencoderModel, series: PriceSeries, context: PriceSeries | None = None
) -> List[Tuple[date, float]]:
    """MAE of each window's reconstruction, dated by the window's last bar.

    With `context` (normally the training split) its last `lookback - 1` bars are
    prepended so every bar of `series` closes a window.
    """

    windows = reconstruction_windows(model, series, context)
    reconstructed = model.network.predict(windows)
    mae = np.mean(np.abs(reconstructed - windows), axis=1)
    dates = series.dates[len(series) - len(windows) :]
    return [(day, float(error)) for day, error in zip(dates, mae)]


def label_anomalies(
    errors: Sequence[Tuple[date, float]],
    threshold: float = DEFAULT_THRESHOLD,
    inclusive: bool = True,
) -> List[AnomalyLabel]:
    """Flag windows whose MAE reaches the threshold (`>=`; `>` when not inclusive)."""

    if threshold <= 0.0:
        raise ValueError(f"threshold must be > 0, got {threshold}.")
    labels = [
        AnomalyLabel(
            date=day,
            reconstruction_mae=error,
            is_anomaly=error >= threshold if inclusive else error > threshold,
        )
        for day, error in errors
    ]
    flagged = sum(1 for label in labels if label.is_anomaly)
    logger.info(
        "Labelled %d of %d windows as breakouts (threshold %s)", flagged, len(labels), threshold
    )
    return labels
