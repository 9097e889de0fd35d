"""DTW alignment and per-time-point lag selection between a cause and an effect."""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InfeasibleWindow, InvalidArgument, InvalidLag
from .timeseries import TimeSeries, as_array, zscore


@dataclass(frozen=True)
class WarpingPath:
    """Monotone alignment: ``pairs[k] = (i, j)`` matches ``x[i]`` with ``y[j]``."""

    pairs: np.ndarray
    cost: float

    @property
    def i(self):
        return self.pairs[:, 0]

    @property
    def j(self):
        return self.pairs[:, 1]

    def __len__(self):
        return self.pairs.shape[0]


@dataclass(frozen=True)
class LagSequence:
    """Per-effect-sample delays: ``y[t]`` is explained by ``x[t - lags[t]]``."""

    lags: np.ndarray
    delta_max: int

    def __post_init__(self):
        lags = np.asarray(self.lags, dtype=np.int64).ravel()
        if lags.size and (lags.min() < 0 or lags.max() > self.delta_max):
            raise InvalidLag(f"lags must lie in [0, {self.delta_max}]")
        lags.setflags(write=False)
        object.__setattr__(self, "lags", lags)

    def __len__(self):
        return self.lags.size


def pointwise_distance(a, b, metric="abs"):
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if metric == "abs":
        return np.abs(d)
    if metric == "sq":
        return d * d
    raise InvalidArgument(f"unknown DTW metric {metric!r}")


def dtw(x, y, window=None, *, normalize=True, metric="abs"):
    """Minimum-cost warping path under a Sakoe-Chiba band of half-width ``window``.

    Steps are ``(1, 0)``, ``(0, 1)`` and ``(1, 1)``; the path cost is the plain sum
    of pointwise distances along the path. Inputs are z-scored first unless
    ``normalize=False``. ``window=None`` means unconstrained.
    """
    if metric not in ("abs", "sq"):
        raise InvalidArgument(f"unknown DTW metric {metric!r}")
    xv, yv = as_array(x), as_array(y)
    if xv.size == 0 or yv.size == 0:
        raise InvalidArgument("DTW needs non-empty series")
    if normalize:
        xv, yv = zscore(xv), zscore(yv)
    n, m = xv.size, yv.size
    full = max(n, m) - 1
    if window is None:
        window = full
    window = int(window)
    if window < abs(n - m):
        raise InfeasibleWindow(f"window {window} cannot bridge length difference {abs(n - m)}")
    window = min(window, full)
    cost, pi, pj = kernels.dtw_band(xv, yv, window, squared=(metric == "sq"))
    pairs = np.column_stack([pi, pj])
    pairs.setflags(write=False)
    return WarpingPath(pairs=pairs, cost=cost)


def path_to_lags(path, T, delta_max):
    """Reduce a warping path to one delay per effect index ``j``.

    ``lag[j] = j - i`` for the matched ``i``; when several ``i`` match the same
    ``j`` the smallest non-negative delay wins, and an effect sample matched only
    to later cause samples gets 0. Delays are clamped to ``[0, delta_max]``.
    """
    delta_max = int(delta_max)
    d = path.j - path.i
    keep = (d >= 0) & (path.j < T)
    lags = np.full(T, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(lags, path.j[keep], d[keep])
    lags[lags == np.iinfo(np.int64).max] = 0
    return LagSequence(np.clip(lags, 0, delta_max), delta_max)


def _windowed_mean(err, valid, window):
    if window <= 1:
        return np.where(valid, err, np.inf)
    kernel = np.ones(int(window))
    total = np.convolve(np.where(valid, err, 0.0), kernel, mode="same")
    count = np.convolve(valid.astype(float), kernel, mode="same")
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = total / count
    return np.where(valid, mean, np.inf)


def hybrid_lag_selection(x, y, tau_cc, dtw_lags, delta_max, *, window=1, standardize=True):
    """Choose, per effect sample, between the global CCF lag and the DTW lag.

    The candidate with the smaller prediction error ``|y[t] - s * x[t - lag]|`` wins,
    ``s`` being the sign of the correlation at ``tau_cc``. With ``window > 1`` the
    errors are averaged over a centred window of that many samples before the
    comparison, so one sample of ``y`` cannot pick its own regressor. Ties go to
    ``tau_cc``; out-of-range candidates lose; if both are out of range the lag is 0.
    """
    xv, yv = as_array(x), as_array(y)
    T = yv.size
    delta_max = int(delta_max)
    tau_cc = int(tau_cc)
    if not 0 <= tau_cc <= delta_max:
        raise InvalidLag(f"tau_cc {tau_cc} outside [0, {delta_max}]")
    dl = dtw_lags.lags if isinstance(dtw_lags, LagSequence) else np.asarray(dtw_lags, dtype=np.int64)
    if dl.size != T or xv.size != T:
        raise InvalidArgument("lag sequence and series lengths must agree")
    if standardize:
        xv, yv = zscore(xv), zscore(yv)
    t = np.arange(T)

    src_cc = t - tau_cc
    ok_cc = src_cc >= 0
    sign = 1.0
    if ok_cc.sum() > 1:
        c = float(np.dot(xv[src_cc[ok_cc]] - xv.mean(), yv[ok_cc] - yv.mean()))
        sign = -1.0 if c < 0 else 1.0
    err_cc = np.abs(yv - sign * xv[np.clip(src_cc, 0, None)])

    src_dtw = t - dl
    ok_dtw = src_dtw >= 0
    err_dtw = np.abs(yv - sign * xv[np.clip(src_dtw, 0, None)])

    e_cc = _windowed_mean(err_cc, ok_cc, window)
    e_dtw = _windowed_mean(err_dtw, ok_dtw, window)
    chosen = np.where(e_cc <= e_dtw, tau_cc, dl)
    chosen = np.where(~ok_cc & ~ok_dtw, 0, chosen)
    chosen = np.where(~ok_cc & ok_dtw, dl, chosen)
    chosen = np.where(ok_cc & ~ok_dtw, tau_cc, chosen)
    return LagSequence(np.clip(chosen, 0, delta_max), delta_max)


def build_aligned(x, lags):
    """``out[t] = x[t - lags[t]]``, holding ``x[0]`` where the index falls before the start."""
    xv = as_array(x)
    lv = lags.lags if isinstance(lags, LagSequence) else np.asarray(lags, dtype=np.int64)
    if lv.size != xv.size:
        raise InvalidArgument("lag sequence length must match the series")
    src = np.clip(np.arange(xv.size) - lv, 0, None)
    out = xv[src]
    if isinstance(x, TimeSeries):
        return x.with_values(out)
    return out
