"""Validation metrics: correlation dimension, largest Lyapunov exponent,
and series-to-series comparison.

The correlation dimension follows the Grassberger-Procaccia construction:
count pairs closer than r over log-spaced radii, then read the dimension off
the slope of log C(r) against log r inside an automatically selected scaling
region.  The Lyapunov estimate follows Rosenstein's method: track the mean
log divergence of nearest neighbour pairs and fit the initial slope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedding import DelayEmbedding, TimeSeries, average_mutual_information, delay_embed
from .errors import ChannelMismatch, InsufficientData, NoScalingRegion


def _points_of(data):
    if isinstance(data, DelayEmbedding):
        return data.states
    points = np.asarray(data, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    return points


def _pair_distance_counts(points, edges, theiler_window, chunk=512):
    """Histogram of pairwise distances against ``edges``, Theiler excluded.

    Returns (counts per bin, total number of admissible pairs).  Only pairs
    (i, j) with j - i > theiler_window are counted, each once.
    """
    n = points.shape[0]
    sq = np.einsum("ij,ij->i", points, points)
    counts = np.zeros(edges.size - 1, dtype=np.int64)
    total = 0
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        block = points[start:stop]
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * block @ points.T
        np.maximum(d2, 0.0, out=d2)
        rows = []
        for i in range(start, stop):
            j0 = i + theiler_window + 1
            if j0 < n:
                rows.append(d2[i - start, j0:])
        if not rows:
            continue
        d = np.sqrt(np.concatenate(rows))
        total += d.size
        counts += np.histogram(d, bins=edges)[0]
    return counts, total


@dataclass
class CorrelationDimension:
    """Correlation dimension estimate with its scaling-region diagnostics."""

    dimension: float
    r_squared: float
    fit_range: tuple
    reliable: bool
    n_points: int
    radii: np.ndarray = None
    correlation: np.ndarray = None
    warnings: list = field(default_factory=list)


def correlation_dimension(data, r_count=32, theiler_window=0, max_points=8000):
    """Grassberger-Procaccia correlation dimension.

    Parameters
    ----------
    data : DelayEmbedding or ndarray
        Point set; an embedding contributes its states.
    r_count : int
        Number of log-spaced radius bins.
    theiler_window : int
        Pairs closer than this in time are excluded.
    max_points : int, optional
        Evenly strided subsample bound; None uses every point.

    Returns
    -------
    CorrelationDimension
        ``reliable`` is False when the fit explains less than 0.98 of the
        variance inside the chosen region.

    Raises
    ------
    NoScalingRegion
        when no stretch of at least four bins has a locally constant slope.
    """
    points = _points_of(data)
    n = points.shape[0]
    if n < 10:
        raise InsufficientData(f"correlation dimension needs >= 10 points, got {n}")
    if r_count < 8:
        raise ValueError(f"r_count must be >= 8, got {r_count}")
    if max_points is not None and n > max_points:
        keep = np.linspace(0, n - 1, max_points).astype(np.intp)
        points = points[keep]
        # thin the Theiler window with the same factor so it keeps excluding
        # the same time span
        theiler_window = int(np.ceil(theiler_window * max_points / n))
        n = max_points

    span = points.max(axis=0) - points.min(axis=0)
    r_max = float(np.linalg.norm(span))
    if r_max == 0.0:
        raise NoScalingRegion("all points coincide")
    r_min = r_max * 1e-3
    radii = np.geomspace(r_min, r_max, r_count)
    # a catch-all first bin keeps pairs closer than r_min inside C(r)
    edges = np.concatenate([[0.0], radii])
    counts, total = _pair_distance_counts(points, edges, theiler_window)
    if total == 0:
        raise InsufficientData("Theiler window excluded every pair")
    cumulative = np.cumsum(counts)
    c_r = cumulative / total

    # keep bins with enough pairs for a stable log value, and stay below the
    # saturation shoulder where edge effects flatten the curve
    valid = (cumulative >= 10) & (c_r <= 0.2)
    log_r = np.log(radii)
    with np.errstate(divide="ignore"):
        log_c = np.where(valid, np.log(np.maximum(c_r, 1e-300)), np.nan)

    slopes = np.diff(log_c) / np.diff(log_r)
    ok = np.isfinite(slopes) & (slopes > 0.0)
    best = _longest_stable_run(slopes, ok, rel_tol=0.10)
    if best is None:
        raise NoScalingRegion(
            "no run of at least 4 radius bins with a locally constant slope"
        )
    lo, hi = best  # slope indices, inclusive; edges lo .. hi+1
    seg = slice(lo, hi + 2)
    coeff = np.polyfit(log_r[seg], log_c[seg], 1)
    fitted = np.polyval(coeff, log_r[seg])
    ss_res = float(np.sum((log_c[seg] - fitted) ** 2))
    ss_tot = float(np.sum((log_c[seg] - np.mean(log_c[seg])) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 0.0
    reliable = r_squared >= 0.98
    warnings = []
    if not reliable:
        warnings.append(
            f"scaling-region fit explains only r^2={r_squared:.4f} of the variance"
        )
    return CorrelationDimension(
        dimension=float(coeff[0]),
        r_squared=r_squared,
        fit_range=(float(radii[lo]), float(radii[hi + 1])),
        reliable=reliable,
        n_points=n,
        radii=radii,
        correlation=c_r,
        warnings=warnings,
    )


def _longest_stable_run(slopes, ok, rel_tol, min_len=4):
    """Longest index run where every slope stays within rel_tol of the
    run median.  Returns (first, last) slope indices or None."""
    n = slopes.size
    best = None
    for lo in range(n):
        if not ok[lo]:
            continue
        for hi in range(lo + min_len - 1, n):
            if not ok[hi] or not np.all(ok[lo : hi + 1]):
                break
            window = slopes[lo : hi + 1]
            center = np.median(window)
            if center <= 0.0:
                break
            if np.max(np.abs(window - center)) > rel_tol * abs(center):
                break
            if best is None or (hi - lo) > (best[1] - best[0]):
                best = (lo, hi)
    return best


@dataclass
class LyapunovEstimate:
    """Largest Lyapunov exponent estimate from divergence tracking."""

    exponent: float
    fit_range: tuple
    n_pairs: int
    curve: np.ndarray = None
    warnings: list = field(default_factory=list)


def dominant_period(values):
    """Period of the dominant spectral peak, in samples.

    Computed from the power spectrum of the mean-removed signal; multiply by
    the sample interval for the period in time units.  Intended to supply
    ``mean_period`` for :func:`largest_lyapunov`.
    """
    x = np.asarray(values, dtype=float).ravel()
    n = x.size
    if n < 4:
        raise InsufficientData(f"period estimate needs >= 4 samples, got {n}")
    power = np.abs(np.fft.rfft(x - x.mean())) ** 2
    power[0] = 0.0
    peak = int(np.argmax(power))
    if power[peak] == 0.0:
        raise InsufficientData("signal has no spectral peak")
    return float(n / peak)


def largest_lyapunov(
    embedding,
    dt=None,
    mean_period=10.0,
    max_steps=None,
    fit_range=None,
):
    """Largest Lyapunov exponent by nearest neighbour divergence tracking.

    Every state is paired with its nearest neighbour at least
    ``mean_period`` samples away in time; the mean log distance of the
    surviving pairs is tracked ``max_steps`` ahead, and the exponent is the
    least squares slope over ``fit_range`` divided by dt.

    Parameters
    ----------
    embedding : DelayEmbedding
    dt : float, optional
        Sample interval; defaults to the embedding's.
    mean_period : float
        Minimum temporal separation between neighbour pairs, in samples.
        Use the dominant oscillation period of the series.
    max_steps : int, optional
        Length of the divergence curve, default min(3 * mean_period, n/4).
    fit_range : (int, int), optional
        Step range fitted; defaults to the first half of the curve.

    Returns
    -------
    LyapunovEstimate
        exponent in units of 1 / time.
    """
    states = embedding.states
    n = states.shape[0]
    if dt is None:
        dt = embedding.dt
    if n < 20:
        raise InsufficientData(f"Lyapunov estimate needs >= 20 states, got {n}")
    separation = max(1, int(round(mean_period)))
    if max_steps is None:
        max_steps = int(min(max(3 * separation, 10), n // 4))
    if max_steps < 2:
        raise InsufficientData("divergence horizon shorter than 2 steps")

    usable = n - max_steps
    if usable < 2:
        raise InsufficientData(
            f"only {usable} states usable with max_steps={max_steps}"
        )
    pts = states[:usable]
    sq = np.einsum("ij,ij->i", pts, pts)
    neighbor = np.empty(usable, dtype=np.intp)
    neighbor_d2 = np.empty(usable)
    chunk = 512
    for start in range(0, usable, chunk):
        stop = min(start + chunk, usable)
        block = pts[start:stop]
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * block @ pts.T
        np.maximum(d2, 0.0, out=d2)
        for i in range(start, stop):
            lo = max(0, i - separation)
            hi = min(usable, i + separation + 1)
            d2[i - start, lo:hi] = np.inf
        neighbor[start:stop] = np.argmin(d2, axis=1)
        neighbor_d2[start:stop] = d2[
            np.arange(stop - start), neighbor[start:stop]
        ]

    idx = np.arange(usable)
    pair_ok = np.isfinite(neighbor_d2) & (neighbor_d2 > 0.0)
    i_idx = idx[pair_ok]
    j_idx = neighbor[pair_ok]
    if i_idx.size < 1:
        raise InsufficientData("no separated neighbour pairs with nonzero distance")

    curve = np.empty(max_steps)
    for step in range(max_steps):
        d = np.linalg.norm(states[i_idx + step] - states[j_idx + step], axis=1)
        good = d > 0.0
        if not np.any(good):
            curve[step] = curve[step - 1] if step else 0.0
            continue
        curve[step] = float(np.mean(np.log(d[good])))

    if fit_range is None:
        fit_range = (0, max(2, max_steps // 2))
    lo, hi = fit_range
    lo = max(0, int(lo))
    hi = min(max_steps, int(hi))
    if hi - lo < 2:
        raise ValueError(f"fit_range {fit_range} spans fewer than 2 steps")
    steps = np.arange(lo, hi)
    slope = np.polyfit(steps, curve[lo:hi], 1)[0]
    return LyapunovEstimate(
        exponent=float(slope / dt),
        fit_range=(lo, hi),
        n_pairs=int(i_idx.size),
        curve=curve,
    )


@dataclass
class ChaosMetrics:
    """Bundle of the two invariant estimates for one trajectory."""

    correlation: CorrelationDimension = None
    lyapunov: LyapunovEstimate = None


@dataclass
class ComparisonReport:
    """Per-channel agreement metrics between a reference and a model run."""

    nrmse: np.ndarray
    histogram_distance: np.ndarray
    dimension_delta: float = None
    reference_dimension: float = None
    modeled_dimension: float = None
    warnings: list = field(default_factory=list)


def _histogram_l1(a, b, bins=64):
    lo = min(float(np.min(a)), float(np.min(b)))
    hi = max(float(np.max(a)), float(np.max(b)))
    if hi == lo:
        hi = lo + 1.0
    pa = np.histogram(a, bins=bins, range=(lo, hi))[0] / a.size
    pb = np.histogram(b, bins=bins, range=(lo, hi))[0] / b.size
    return float(np.sum(np.abs(pa - pb)))


def compare(reference, modeled, tau=None, m=None, with_dimension=True, theiler=None):
    """Compare a modeled series against its reference channel by channel.

    The NRMSE normalizes each channel's pointwise RMS error by the standard
    deviation of the reference channel.  The histogram distance is the L1
    distance between 64-bin normalized histograms over the common value
    range.  When ``with_dimension`` is set, channel 0 of both series is
    delay embedded with a common (tau, m) and the difference of the two
    correlation dimensions is reported.

    Raises
    ------
    ChannelMismatch
        when the two series have different channel counts.
    """
    if reference.n_channels != modeled.n_channels:
        raise ChannelMismatch(
            f"reference has {reference.n_channels} channels, modeled has {modeled.n_channels}"
        )
    rows = min(reference.n_samples, modeled.n_samples)
    ref = reference.values[:rows]
    mod = modeled.values[:rows]
    scale = np.std(ref, axis=0)
    scale[scale == 0.0] = 1.0
    nrmse = np.sqrt(np.mean((mod - ref) ** 2, axis=0)) / scale
    hist = np.array(
        [
            _histogram_l1(reference.values[:, c], modeled.values[:, c])
            for c in range(reference.n_channels)
        ]
    )
    report = ComparisonReport(nrmse=nrmse, histogram_distance=hist)
    if not with_dimension:
        return report
    try:
        if tau is None:
            tau = average_mutual_information(reference, 0).lag
        if m is None:
            m = 3
        if theiler is None:
            theiler = tau * m
        ref_emb = delay_embed(reference, 0, tau, m)
        mod_emb = delay_embed(modeled, 0, tau, m)
        ref_dim = correlation_dimension(ref_emb, theiler_window=theiler)
        mod_dim = correlation_dimension(mod_emb, theiler_window=theiler)
        report.reference_dimension = ref_dim.dimension
        report.modeled_dimension = mod_dim.dimension
        report.dimension_delta = abs(ref_dim.dimension - mod_dim.dimension)
        report.warnings.extend(ref_dim.warnings)
        report.warnings.extend(mod_dim.warnings)
    except (InsufficientData, NoScalingRegion) as exc:
        report.warnings.append(f"correlation dimension unavailable: {exc}")
    return report
