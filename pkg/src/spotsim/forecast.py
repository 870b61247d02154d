"""Seasonal-trend spot-price forecasting with 95% intervals and bid pricing.

The model is an ordinary-least-squares linear trend over hourly price means
plus an additive hour-of-day seasonal profile; residuals are treated as
Gaussian, giving constant-width intervals. Deliberately dependency-light and
closed-form testable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domain import PriceSeries
from .errors import InsufficientData, InvalidInput, LengthMismatch, ValidationError

MIN_HOURLY_OBSERVATIONS = 48
Z_95 = 1.96

DEFAULT_BID_MARGIN_FRACTION = 0.05
DEFAULT_BID_CAP_FRACTION = 0.9


@dataclass(frozen=True)
class ForecastModel:
    """Fitted trend + hour-of-day seasonality for one (type, zone) series."""

    intercept: float
    slope_per_hour: float
    seasonal: tuple[float, ...]  # 24 additive hour-of-day offsets, zero-sum
    residual_sigma: float
    fitted_start: int  # first hourly bucket start, epoch seconds
    fitted_end: int  # last hourly bucket start, epoch seconds
    instance_type: str
    zone: str

    def __post_init__(self):
        if len(self.seasonal) != 24:
            raise ValidationError("seasonal profile must have 24 offsets")
        if abs(sum(self.seasonal)) >= 1e-9 * 24:
            raise ValidationError("seasonal offsets must sum to ~0")
        if self.residual_sigma < 0:
            raise ValidationError("residual_sigma must be >= 0")


@dataclass(frozen=True)
class PriceForecast:
    """Point forecasts with 95% intervals; all values floored at zero."""

    points: tuple[tuple[int, float, float, float], ...]  # (ts, mean, lower95, upper95)

    def __post_init__(self):
        for ts, mean, lower, upper in self.points:
            if not (0 <= lower <= mean <= upper):
                raise ValidationError(f"malformed interval at t={ts}")


def hourly_buckets(series: PriceSeries) -> tuple[np.ndarray, np.ndarray]:
    """Collapse a series to (bucket start seconds, mean price) per hour."""
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for ts, price in series.points:
        bucket = (ts // 3600) * 3600
        sums[bucket] = sums.get(bucket, 0.0) + price
        counts[bucket] = counts.get(bucket, 0) + 1
    starts = np.array(sorted(sums), dtype=np.int64)
    means = np.array([sums[b] / counts[b] for b in starts], dtype=np.float64)
    return starts, means


_MAX_ALTERNATIONS = 60


def fit(series: PriceSeries) -> ForecastModel:
    """Fit trend and seasonality to a price series bucketed to hour means.

    Trend is ordinary least squares over the hour index; seasonality is the
    per hour-of-day mean of the detrended residuals, recentered to zero sum.
    The two steps alternate to a fixed point: a single pass leaves a small
    covariance bias between a linear trend and a daily pattern sampled over
    finitely many days, and iterating contracts it below float noise.
    """
    starts, prices = hourly_buckets(series)
    if len(starts) < MIN_HOURLY_OBSERVATIONS:
        raise InsufficientData(
            f"need >= {MIN_HOURLY_OBSERVATIONS} hourly observations, got {len(starts)}"
        )
    hours = ((starts - starts[0]) // 3600).astype(np.float64)
    hod = ((starts // 3600) % 24).astype(np.int64)
    hod_masks = [hod == h for h in range(24)]

    offsets = np.zeros(24)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(prices))))
    slope = intercept = 0.0
    for _ in range(_MAX_ALTERNATIONS):
        slope, intercept = np.polyfit(hours, prices - offsets[hod], 1)
        detrended = prices - (intercept + slope * hours)
        new_offsets = np.zeros(24)
        for h in range(24):
            if hod_masks[h].any():
                new_offsets[h] = detrended[hod_masks[h]].mean()
        new_offsets -= new_offsets.mean()  # recenter so the profile is level-free
        delta = float(np.max(np.abs(new_offsets - offsets)))
        offsets = new_offsets
        if delta < tol:
            break

    residuals = prices - (intercept + slope * hours) - offsets[hod]
    sigma = float(np.sqrt(np.mean(residuals**2)))
    return ForecastModel(
        intercept=float(intercept),
        slope_per_hour=float(slope),
        seasonal=tuple(float(o) for o in offsets),
        residual_sigma=sigma,
        fitted_start=int(starts[0]),
        fitted_end=int(starts[-1]),
        instance_type=series.instance_type,
        zone=series.zone,
    )


def predict(model: ForecastModel, horizon_hours: int) -> PriceForecast:
    """Forecast the next horizon_hours hourly means past the fitted range.

    Interval width is 2 * 1.96 * residual_sigma; mean and bounds are floored
    at zero since prices cannot go negative.
    """
    if horizon_hours < 1:
        raise InvalidInput(f"horizon_hours must be >= 1, got {horizon_hours}")
    half_width = Z_95 * model.residual_sigma
    points = []
    for step in range(1, horizon_hours + 1):
        ts = model.fitted_end + step * 3600
        hour_index = (ts - model.fitted_start) // 3600
        raw = (
            model.intercept
            + model.slope_per_hour * hour_index
            + model.seasonal[(ts // 3600) % 24]
        )
        mean = max(0.0, raw)
        lower = max(0.0, raw - half_width)
        upper = max(0.0, raw + half_width)
        points.append((ts, mean, lower, upper))
    return PriceForecast(points=tuple(points))


def rmse(predicted, actual) -> float:
    """Root mean square error between two equal-length vectors."""
    if len(predicted) != len(actual):
        raise LengthMismatch(f"length mismatch: {len(predicted)} vs {len(actual)}")
    if len(predicted) == 0:
        raise LengthMismatch("need at least one point")
    errors = np.asarray(predicted, dtype=np.float64) - np.asarray(actual, dtype=np.float64)
    return float(math.sqrt(np.mean(errors**2)))


def bid_price(
    upper95: float,
    on_demand: float,
    margin_fraction: float = DEFAULT_BID_MARGIN_FRACTION,
    cap_fraction: float = DEFAULT_BID_CAP_FRACTION,
) -> float:
    """Bid above the forecast's upper bound but below on-demand.

    min(upper95 * (1 + margin_fraction), on_demand * cap_fraction); the cap
    keeps spot bids rational relative to the guaranteed price.
    """
    if on_demand <= 0:
        raise InvalidInput(f"on_demand must be > 0, got {on_demand}")
    bid = min(upper95 * (1.0 + margin_fraction), on_demand * cap_fraction)
    if bid <= 0:
        raise InvalidInput("bid would be <= 0; upper95 and fractions must be positive")
    return bid
