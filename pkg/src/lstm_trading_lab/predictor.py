"""Strategy-1 model: one-step-ahead adjusted-close prediction over the test split."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import DataError
from .neural import DropoutSpec, LstmRegressor, Network, TrainConfig, train
from .preprocess import (
    MinMaxScaler,
    fit_scaler,
    inverse_transform,
    make_windows,
    transform,
)
from .types import PredictionSeries, SplitSeries

logger = logging.getLogger(__name__)

DEFAULT_LOOKBACK = 60


@dataclass(slots=True)
class PricePredictor:
    network: Network
    scaler: MinMaxScaler
    losses: List[float] = field(default_factory=list)

    @property
    def lookback(self) -> int:
        return self.network.lookback


def fit_predictor(split: SplitSeries, config: TrainConfig) -> PricePredictor:
    """Fit the scaler on the training split only, then train the stacked LSTM."""

    if len(split.train) <= config.lookback:
        raise DataError(
            f"{split.train.ticker}: {len(split.train)} training bars leave no sample "
            f"for lookback {config.lookback}"
        )
    scaler = fit_scaler(split.train)
    if scaler.is_degenerate:
        raise DataError(
            f"{split.train.ticker}: constant training prices ({scaler.min}); "
            "degenerate scaler cannot map predictions back to dollars"
        )
    dataset = make_windows(transform(scaler, split.train.values()), config.lookback)
    network = LstmRegressor(
        lookback=config.lookback,
        hidden_sizes=config.hidden_sizes,
        dropout=DropoutSpec(config.dropout),
        rng=np.random.default_rng(config.seed),
    )
    result = train(network, dataset, config)
    return PricePredictor(network=network, scaler=scaler, losses=result.losses)


def predict_test(
    predictor: PricePredictor, split: SplitSeries, prepend_context: bool = True
) -> PredictionSeries:
    """Predict every test bar from the `lookback` closes before it, in dollars.

    With `prepend_context` the last `lookback` training bars seed the first test
    windows, so the first test bar gets a prediction. Without it predictions start
    at test bar `lookback`.
    """

    lookback = predictor.lookback
    test = split.test
    if prepend_context:
        if len(split.train) < lookback:
            raise DataError(
                f"{test.ticker}: {len(split.train)} training bars cannot seed lookback {lookback}"
            )
        source = split.train.tail(lookback).join(test)
    else:
        if len(test) <= lookback:
            raise DataError(
                f"{test.ticker}: test split of {len(test)} bars is too short for lookback {lookback}"
            )
        source = test
    values = source.values()
    if values.max() > predictor.scaler.max or values.min() < predictor.scaler.min:
        logger.warning(
            "%s: test prices leave the training range [%s, %s]; normalized inputs exceed [0, 1]",
            test.ticker,
            predictor.scaler.min,
            predictor.scaler.max,
        )
    dataset = make_windows(transform(predictor.scaler, values), lookback)
    predicted = inverse_transform(predictor.scaler, predictor.network.predict(dataset.inputs))
    target_bars = source.bars[lookback:]
    return PredictionSeries(
        dates=tuple(bar.date for bar in target_bars),
        predicted=tuple(predicted.tolist()),
        actual=tuple(float(bar.adj_close) for bar in target_bars),
    )


def squared_errors(predictions: PredictionSeries) -> np.ndarray:
    if len(predictions) == 0:
        raise ValueError("No predictions to score.")
    predicted = np.asarray(predictions.predicted, dtype=np.float64)
    actual = np.asarray(predictions.actual, dtype=np.float64)
    return (predicted - actual) ** 2
