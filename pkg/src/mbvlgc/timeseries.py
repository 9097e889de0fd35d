"""Signal containers and the basic statistics shared by every stage."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateSignal, InsufficientData, InvalidArgument, InvalidBand, InvalidLag


@dataclass(frozen=True)
class TimeSeries:
    """A uniformly sampled real signal. ``values`` is stored as a read-only float64 copy."""

    values: np.ndarray
    fs: float
    label: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).ravel()
        if values.size < 2:
            raise InsufficientData(f"a series needs at least 2 samples, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise InvalidArgument("series contains NaN or Inf")
        if not (np.isfinite(self.fs) and self.fs > 0):
            raise InvalidArgument(f"sampling rate must be positive, got {self.fs}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "fs", float(self.fs))

    def __len__(self):
        return self.values.size

    def with_values(self, values, label=None):
        return TimeSeries(values, self.fs, self.label if label is None else label)


@dataclass(frozen=True)
class BandSpec:
    """Closed frequency interval ``[low, high]`` in Hz. Nyquist is checked at filter design."""

    low: float
    high: float

    def __post_init__(self):
        if not (np.isfinite(self.low) and np.isfinite(self.high)):
            raise InvalidBand("band edges must be finite")
        if self.low <= 0:
            raise InvalidBand(f"band low edge must be > 0, got {self.low}")
        if self.low >= self.high:
            raise InvalidBand(f"band needs low < high, got [{self.low}, {self.high}]")
        object.__setattr__(self, "low", float(self.low))
        object.__setattr__(self, "high", float(self.high))

    @property
    def center(self):
        return float(np.sqrt(self.low * self.high))

    def overlaps(self, other):
        return self.low < other.high and other.low < self.high

    def label(self):
        return f"{self.low:g}-{self.high:g}Hz"


def as_array(x):
    if isinstance(x, TimeSeries):
        return x.values
    arr = np.asarray(x, dtype=np.float64).ravel()
    return arr


def _like(x, values):
    if isinstance(x, TimeSeries):
        return x.with_values(values)
    return values


def variance(x):
    """Unbiased sample variance (divisor n - 1)."""
    v = as_array(x)
    if v.size < 2:
        raise InsufficientData("variance needs at least 2 samples")
    return float(np.var(v, ddof=1))


def zscore(x):
    v = as_array(x)
    var = variance(v)
    if var <= 0.0:
        raise DegenerateSignal("cannot standardize a constant series")
    out = (v - v.mean()) / np.sqrt(var)
    # second centering pass removes the residual mean left by rounding
    out = out - out.mean()
    return _like(x, out)


def cross_correlation(x, y, max_lag):
    """Normalized cross-correlation of ``x`` leading ``y`` at lags ``0..max_lag``.

    ``ccf[tau] = sum_t (x[t - tau] - xbar)(y[t] - ybar) / sqrt(Sxx * Syy)``, with
    the sums in the denominator taken over the full series.
    Returns ``(lags, ccf)``.
    """
    xv, yv = as_array(x), as_array(y)
    if xv.size != yv.size:
        raise InvalidArgument(f"series lengths differ: {xv.size} != {yv.size}")
    n = xv.size
    max_lag = int(max_lag)
    if max_lag < 0:
        raise InvalidLag(f"max_lag must be >= 0, got {max_lag}")
    if max_lag >= n:
        raise InvalidLag(f"max_lag {max_lag} must be < series length {n}")
    xc = xv - xv.mean()
    yc = yv - yv.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if np.ptp(xv) == 0 or np.ptp(yv) == 0 or sxx <= 0 or syy <= 0:
        raise DegenerateSignal("cross-correlation of a constant series is undefined")
    denom = np.sqrt(sxx * syy)
    lags = np.arange(max_lag + 1)
    ccf = np.array([xc[: n - tau] @ yc[tau:] for tau in lags]) / denom
    return lags, np.clip(ccf, -1.0, 1.0)


def opt_delay(x, y, max_lag):
    """Lag in ``[0, max_lag]`` maximizing ``|CCF|``; ties go to the smallest lag."""
    _, ccf = cross_correlation(x, y, max_lag)
    mag = np.abs(ccf)
    return int(np.flatnonzero(mag >= mag.max() - 1e-12)[0])
