"""Delay-coordinate embedding of scalar time series.

The reconstruction pipeline starts from a single observed channel and builds
state vectors

    x(i) = (s[i], s[i + tau], ..., s[i + (m-1)*tau])

following the usual delay-coordinate construction.  This module provides the
two standard delay estimators (autocorrelation decay and average mutual
information), the false nearest neighbour test for the embedding dimension,
and the embedding itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientData, LagOutOfRange, NotFoundError, ZeroVariance


@dataclass(frozen=True)
class TimeSeries:
    """A uniformly sampled multichannel series.

    Parameters
    ----------
    values : ndarray, shape (n_samples, n_channels)
        Sample values.  A one dimensional array is treated as one channel.
    dt : float
        Sampling interval, must be positive.
    labels : tuple of str, optional
        Channel names.  Defaults to ch0, ch1, ...
    """

    values: np.ndarray
    dt: float
    labels: tuple = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2:
            raise ValueError(f"values must be 1-D or 2-D, got shape {values.shape}")
        if values.shape[0] < 2:
            raise InsufficientData(f"need at least 2 samples, got {values.shape[0]}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain NaN or infinity")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        labels = self.labels
        if labels is None:
            labels = tuple(f"ch{i}" for i in range(values.shape[1]))
        else:
            labels = tuple(labels)
            if len(labels) != values.shape[1]:
                raise ValueError(
                    f"{len(labels)} labels for {values.shape[1]} channels"
                )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def n_channels(self):
        return self.values.shape[1]

    def channel(self, index):
        if not 0 <= index < self.n_channels:
            raise NotFoundError(
                f"channel {index} out of range, series has {self.n_channels} channels"
            )
        return self.values[:, index]


@dataclass(frozen=True)
class DelayEmbedding:
    """Delay-coordinate states built from one channel of a series."""

    states: np.ndarray
    tau: int
    m: int
    source_channel: int = 0
    dt: float = 1.0

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2:
            raise ValueError(f"states must be 2-D, got shape {states.shape}")
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if states.shape[1] != self.m:
            raise ValueError(f"states have {states.shape[1]} columns, expected m={self.m}")
        object.__setattr__(self, "states", states)

    @property
    def n_states(self):
        return self.states.shape[0]


@dataclass
class DelayScan:
    """Result of the autocorrelation delay estimate."""

    lag: int
    acf: np.ndarray
    crossed_threshold: bool
    warnings: list = field(default_factory=list)


@dataclass
class AmiScan:
    """Result of the average mutual information delay estimate."""

    lag: int
    lags: np.ndarray
    ami: np.ndarray
    bins: int
    minimum_found: bool
    warnings: list = field(default_factory=list)


@dataclass
class FnnScan:
    """Result of the false nearest neighbour dimension scan."""

    m: int
    dims: np.ndarray
    fractions: np.ndarray
    finite_dimension: bool
    threshold: float
    warnings: list = field(default_factory=list)


def _get_channel(series, channel):
    s = series.channel(channel)
    if np.max(s) == np.min(s):
        raise ZeroVariance(f"channel {channel} is constant")
    return s


def autocorrelation_delay(series, channel=0, max_lag=None):
    """Pick the smallest lag where the autocorrelation drops below 1/e.

    Parameters
    ----------
    series : TimeSeries
    channel : int
        Channel to analyse.
    max_lag : int, optional
        Largest lag examined.  Defaults to n_samples // 4.

    Returns
    -------
    DelayScan
        ``lag`` is the first lag with normalized autocorrelation below 1/e.
        If no lag up to ``max_lag`` crosses the threshold, ``lag`` is
        ``max_lag`` and ``crossed_threshold`` is False with a warning.
    """
    s = _get_channel(series, channel)
    n = s.size
    if max_lag is None:
        max_lag = max(1, n // 4)
    if max_lag < 1 or max_lag >= n:
        raise LagOutOfRange(f"max_lag={max_lag} outside [1, {n - 1}] for length {n}")
    centered = s - s.mean()
    denom = float(np.dot(centered, centered))
    acf = np.empty(max_lag + 1)
    acf[0] = 1.0
    for lag in range(1, max_lag + 1):
        acf[lag] = float(np.dot(centered[:-lag], centered[lag:])) / denom
    threshold = 1.0 / np.e
    below = np.nonzero(acf[1:] < threshold)[0]
    if below.size:
        return DelayScan(lag=int(below[0] + 1), acf=acf, crossed_threshold=True)
    return DelayScan(
        lag=int(max_lag),
        acf=acf,
        crossed_threshold=False,
        warnings=[f"autocorrelation never fell below 1/e within max_lag={max_lag}"],
    )


def _histogram_mi(x, y, bins, lo, hi):
    joint, _, _ = np.histogram2d(x, y, bins=bins, range=[[lo, hi], [lo, hi]])
    total = joint.sum()
    pxy = joint / total
    px = pxy.sum(axis=1)
    py = pxy.sum(axis=0)
    mask = pxy > 0
    outer = np.outer(px, py)
    return float(np.sum(pxy[mask] * np.log(pxy[mask] / outer[mask])))


def average_mutual_information(series, channel=0, max_lag=None, bins=None):
    """Average mutual information between s[k] and s[k+lag] for each lag.

    The estimator is the plug-in mutual information of an equal-width joint
    histogram.  The number of bins defaults to ceil(sqrt(n_samples)) capped
    at 64, and the bin range is fixed to the full range of the channel so
    that every lag is measured on the same grid.

    Returns
    -------
    AmiScan
        ``lag`` is the first strict local minimum of the AMI curve.  When no
        local minimum exists up to ``max_lag``, the autocorrelation delay is
        used as a fallback and a warning is recorded.
    """
    s = _get_channel(series, channel)
    n = s.size
    if max_lag is None:
        max_lag = max(1, n // 4)
    if max_lag < 1 or max_lag >= n:
        raise LagOutOfRange(f"max_lag={max_lag} outside [1, {n - 1}] for length {n}")
    if bins is None:
        bins = int(min(64, np.ceil(np.sqrt(n))))
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    lo = float(np.min(s))
    hi = float(np.max(s))
    lags = np.arange(max_lag + 1)
    ami = np.empty(max_lag + 1)
    for lag in lags:
        if lag == 0:
            ami[0] = _histogram_mi(s, s, bins, lo, hi)
        else:
            ami[lag] = _histogram_mi(s[:-lag], s[lag:], bins, lo, hi)
    for lag in range(1, max_lag):
        if ami[lag] < ami[lag - 1] and ami[lag] < ami[lag + 1]:
            return AmiScan(lag=int(lag), lags=lags, ami=ami, bins=bins, minimum_found=True)
    fallback = autocorrelation_delay(series, channel, max_lag)
    warnings = [
        f"no strict local minimum of AMI within max_lag={max_lag}; "
        f"fell back to the autocorrelation delay {fallback.lag}"
    ]
    warnings.extend(fallback.warnings)
    return AmiScan(
        lag=fallback.lag,
        lags=lags,
        ami=ami,
        bins=bins,
        minimum_found=False,
        warnings=warnings,
    )


def _nearest_neighbors(points, chunk=256):
    """Index of the nearest neighbour of every row, self excluded."""
    n = points.shape[0]
    sq = np.einsum("ij,ij->i", points, points)
    nn = np.empty(n, dtype=np.intp)
    nn_d2 = np.empty(n)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = points[start:stop]
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * block @ points.T
        np.maximum(d2, 0.0, out=d2)
        rows = np.arange(start, stop)
        d2[rows - start, rows] = np.inf
        nn[start:stop] = np.argmin(d2, axis=1)
        nn_d2[start:stop] = d2[rows - start, nn[start:stop]]
    return nn, np.sqrt(nn_d2)


def false_nearest_neighbors(
    series,
    channel=0,
    tau=1,
    m_max=8,
    r_tol=10.0,
    a_tol=2.0,
    threshold=0.05,
    max_points=None,
):
    """False nearest neighbour fractions for dimensions 1..m_max.

    For each dimension m the series is embedded at m and m+1 with the same
    delay.  A neighbour pair is false when the coordinate added by the lift
    separates it: either the gap in the new coordinate exceeds ``r_tol``
    times the original distance, or it exceeds ``a_tol`` times the standard
    deviation of the series.

    Parameters
    ----------
    max_points : int, optional
        Evenly strided subsample used for the neighbour search.  All points
        are used when omitted.

    Returns
    -------
    FnnScan
        ``m`` is the smallest dimension whose fraction falls below
        ``threshold``.  If no dimension qualifies, ``m`` is ``m_max`` and
        ``finite_dimension`` is False with a warning.
    """
    s = _get_channel(series, channel)
    n = s.size
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    if m_max < 1:
        raise ValueError(f"m_max must be >= 1, got {m_max}")
    sigma = float(np.std(s))
    dims = np.arange(1, m_max + 1)
    fractions = np.empty(m_max)
    for m in dims:
        rows = n - m * tau
        if rows < 2:
            raise InsufficientData(
                f"embedding at m={m + 1}, tau={tau} leaves {rows} states; need >= 2"
            )
        idx = np.arange(rows)[:, None] + np.arange(m)[None, :] * tau
        pts = s[idx]
        added = s[np.arange(rows) + m * tau]
        if max_points is not None and rows > max_points:
            keep = np.linspace(0, rows - 1, max_points).astype(np.intp)
            pts = pts[keep]
            added = added[keep]
        nn, dist = _nearest_neighbors(pts)
        gap = np.abs(added - added[nn])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dist > 0.0, gap / dist, np.where(gap > 0.0, np.inf, 0.0))
        false = (ratio > r_tol) | (gap > a_tol * sigma)
        fractions[m - 1] = float(np.mean(false))
    qualifying = np.nonzero(fractions < threshold)[0]
    if qualifying.size:
        return FnnScan(
            m=int(dims[qualifying[0]]),
            dims=dims,
            fractions=fractions,
            finite_dimension=True,
            threshold=threshold,
        )
    return FnnScan(
        m=int(m_max),
        dims=dims,
        fractions=fractions,
        finite_dimension=False,
        threshold=threshold,
        warnings=[
            f"false neighbour fraction never fell below {threshold} up to m_max={m_max}; "
            "the series may have no finite embedding dimension"
        ],
    )


def delay_embed(series, channel=0, tau=1, m=2):
    """Build delay-coordinate states x(i) = (s[i], s[i+tau], ..., s[i+(m-1)tau]).

    Returns
    -------
    DelayEmbedding
        with states of shape (n_samples - (m-1)*tau, m).
    """
    s = series.channel(channel)
    n = s.size
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    rows = n - (m - 1) * tau
    if rows < 1:
        raise InsufficientData(
            f"embedding with m={m}, tau={tau} needs more than {(m - 1) * tau} samples, got {n}"
        )
    idx = np.arange(rows)[:, None] + np.arange(m)[None, :] * tau
    return DelayEmbedding(
        states=s[idx], tau=tau, m=m, source_channel=channel, dt=series.dt
    )
