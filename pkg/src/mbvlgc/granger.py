"""Fixed-lag and variable-lag Granger causality tests for a single band."""
import math
from dataclasses import dataclass, field

import numpy as np

from . import alignment
from .distributions import f_sf
from .errors import DegenerateBIC, InsufficientData, InvalidArgument, NotNested, SingularDesign
from .timeseries import as_array, opt_delay, variance, zscore

#: condition number of the column-equilibrated design above which a fit is refused
COND_LIMIT = 1e10


@dataclass(frozen=True)
class RegressionFit:
    """Ordinary least-squares fit. Coefficients are ordered intercept, own lags, cause lags."""

    coefficients: np.ndarray
    residuals: np.ndarray = field(repr=False)
    rss: float
    n_obs: int
    n_params: int
    bic: float

    @property
    def residual_variance(self):
        return float(np.var(self.residuals, ddof=1))


@dataclass(frozen=True)
class VLGCResult:
    var_r_y: float
    var_r_yx: float
    var_r_vl: float
    p_f: float
    gamma: float
    decision: bool
    lag_mean: float
    lag_sd: float
    significant_lag: float
    delta_max: int
    alpha: float = 0.01
    gamma_threshold: float = 0.6
    tau_cc: int = 0
    p_fixed: float = 1.0
    lags: np.ndarray = field(default=None, repr=False, compare=False)

    def expected_decision(self, alpha=None, gamma_threshold=None):
        """Re-derive the decision from the stored statistics."""
        alpha = self.alpha if alpha is None else alpha
        gamma_threshold = self.gamma_threshold if gamma_threshold is None else gamma_threshold
        return decide(self.var_r_y, self.var_r_yx, self.var_r_vl, self.p_f, self.gamma,
                      alpha, gamma_threshold)


def decide(var_y, var_yx, var_vl, p_f, gamma, alpha, gamma_threshold):
    return bool(var_vl < var_y and var_vl < var_yx and (p_f <= alpha or gamma >= gamma_threshold))


def _lag_block(series, delta_max, shift=0):
    # column i-1 holds series[t - i + shift] for t in [delta_max, T)
    T = series.size
    rows = np.arange(delta_max, T)
    cols = [series[rows - i + shift] for i in range(1, delta_max + 1)]
    return np.column_stack(cols)


def _ols(target, design):
    n, k = design.shape
    if n <= k:
        raise InsufficientData(f"{n} observations cannot support {k} parameters")
    norms = np.sqrt(np.einsum("ij,ij->j", design, design))
    if np.any(norms == 0):
        raise SingularDesign("design has an all-zero column")
    scaled = design / norms
    u, s, vt = np.linalg.svd(scaled, full_matrices=False)
    if s[-1] <= 0 or s[0] / s[-1] > COND_LIMIT:
        cond = math.inf if s[-1] <= 0 else s[0] / s[-1]
        raise SingularDesign(f"design matrix is numerically rank deficient (condition {cond:.3g})")
    beta = (vt.T @ ((u.T @ target) / s)) / norms
    resid = target - design @ beta
    rss = float(resid @ resid)
    bic = n * math.log(rss / n) + k * math.log(n) if rss > 0 else -math.inf
    resid.setflags(write=False)
    beta.setflags(write=False)
    return RegressionFit(beta, resid, rss, n, k, bic)


def _check(y, delta_max, *others):
    delta_max = int(delta_max)
    if delta_max < 1:
        raise InvalidArgument(f"delta_max must be >= 1, got {delta_max}")
    for o in others:
        if o.size != y.size:
            raise InvalidArgument(f"series lengths differ: {o.size} != {y.size}")
    if y.size <= 2 * delta_max + 2:
        raise InsufficientData(f"length {y.size} too short for delta_max={delta_max}")
    return delta_max


def _null_design(yv, delta_max):
    return np.column_stack([np.ones(yv.size - delta_max), _lag_block(yv, delta_max)])


def fit_null(y, delta_max):
    """Regress ``y[t]`` on an intercept and ``y[t-1] .. y[t-delta_max]``."""
    yv = as_array(y)
    delta_max = _check(yv, delta_max)
    return _ols(yv[delta_max:], _null_design(yv, delta_max))


def fit_fixed_lag(y, x, delta_max):
    """Null design plus ``x[t-1] .. x[t-delta_max]``."""
    yv, xv = as_array(y), as_array(x)
    delta_max = _check(yv, delta_max, xv)
    design = np.column_stack([_null_design(yv, delta_max), _lag_block(xv, delta_max)])
    return _ols(yv[delta_max:], design)


def fit_variable_lag(y, x_aligned, delta_max):
    """Null design plus the aligned cause ``a[t] .. a[t-delta_max+1]``.

    ``a[t] = x[t - lag[t]]`` already carries the delay, so the block starts at
    ``a[t]``. With every lag equal to 1 this design equals the fixed-lag one.
    """
    yv, av = as_array(y), as_array(x_aligned)
    delta_max = _check(yv, delta_max, av)
    design = np.column_stack([_null_design(yv, delta_max), _lag_block(av, delta_max, shift=1)])
    return _ols(yv[delta_max:], design)


def f_test(restricted, full):
    """p-value of the F test that the extra parameters of ``full`` are all zero."""
    if restricted.n_obs != full.n_obs:
        raise InvalidArgument("fits cover different observation counts")
    q = full.n_params - restricted.n_params
    # allow round-off in the solver
    tol = 1e-12 + 1e-9 * restricted.rss
    if full.rss > restricted.rss + tol:
        raise NotNested(f"full model RSS {full.rss} exceeds restricted RSS {restricted.rss}")
    if q == 0:
        if abs(full.rss - restricted.rss) <= tol:
            return 1.0
        raise NotNested("models have the same number of parameters but different fits")
    if q < 0:
        raise NotNested("full model has fewer parameters than the restricted model")
    df2 = full.n_obs - full.n_params
    if df2 < 1:
        raise InsufficientData("full model leaves no residual degrees of freedom")
    if full.rss <= 0:
        return 0.0 if restricted.rss > tol else 1.0
    stat = max(0.0, (restricted.rss - full.rss) / q) / (full.rss / df2)
    return f_sf(stat, q, df2)


def bic_ratio(fit_null, fit_vl):
    """``max(0, (bic_null - bic_vl) / |bic_null|)`` clipped to ``[0, 1]``."""
    if fit_null.n_obs != fit_vl.n_obs:
        raise InvalidArgument("fits cover different observation counts")
    if not math.isfinite(fit_null.bic) or abs(fit_null.bic) < 1e-12:
        raise DegenerateBIC(f"null-model BIC {fit_null.bic} cannot normalize the difference")
    if fit_vl.bic == -math.inf:
        return 1.0
    return float(min(1.0, max(0.0, (fit_null.bic - fit_vl.bic) / abs(fit_null.bic))))


def _prepare(x, y, delta_max):
    xv, yv = as_array(x), as_array(y)
    if xv.size != yv.size:
        raise InvalidArgument(f"series lengths differ: {xv.size} != {yv.size}")
    delta_max = int(delta_max)
    if delta_max < 1:
        raise InvalidArgument(f"delta_max must be >= 1, got {delta_max}")
    if yv.size <= 4 * delta_max:
        raise InsufficientData(f"length {yv.size} must exceed 4 * delta_max = {4 * delta_max}")
    return zscore(xv), zscore(yv), variance(yv), delta_max


def infer_lags(x, y, delta_max, *, dtw_window=None, selection_window=None, metric="abs"):
    """Per-sample delays of ``y`` behind ``x``: returns ``(tau_cc, LagSequence)``.

    ``dtw_window`` defaults to ``2 * delta_max`` and ``selection_window`` (the
    smoothing span of the lag choice) to ``2 * delta_max + 1``.
    """
    xs, ys, _, delta_max = _prepare(x, y, delta_max)
    if dtw_window is None:
        dtw_window = 2 * delta_max
    if selection_window is None:
        selection_window = 2 * delta_max + 1
    tau_cc = opt_delay(xs, ys, delta_max)
    path = alignment.dtw(xs, ys, dtw_window, normalize=False, metric=metric)
    dtw_lags = alignment.path_to_lags(path, ys.size, delta_max)
    lags = alignment.hybrid_lag_selection(xs, ys, tau_cc, dtw_lags, delta_max,
                                          window=selection_window, standardize=False)
    return tau_cc, lags


def lag_statistics(lags, delta_max):
    """Mean and sample sd of the selected lags over the regression range."""
    lv = lags.lags if isinstance(lags, alignment.LagSequence) else np.asarray(lags)
    used = lv[int(delta_max):].astype(float)
    return float(used.mean()), float(used.std(ddof=1)) if used.size > 1 else 0.0


def vl_granger_test(x, y, delta_max, alpha=0.01, gamma_threshold=0.6, *,
                    dtw_window=None, selection_window=None, metric="abs", inferred=None):
    """Test whether ``x`` causes ``y`` with a per-sample variable delay.

    Fits run on standardized copies, so ``gamma`` does not depend on units;
    reported residual variances are scaled back to the units of ``y``.
    ``inferred`` takes a precomputed ``(tau_cc, LagSequence)`` from :func:`infer_lags`.
    """
    xs, ys, var_y, delta_max = _prepare(x, y, delta_max)
    if inferred is None:
        inferred = infer_lags(xs, ys, delta_max, dtw_window=dtw_window,
                              selection_window=selection_window, metric=metric)
    tau_cc, lags = inferred
    xa = alignment.build_aligned(xs, lags)

    h0 = fit_null(ys, delta_max)
    h1 = fit_fixed_lag(ys, xs, delta_max)
    h2 = fit_variable_lag(ys, xa, delta_max)

    p_f = f_test(h0, h2)
    p_fixed = f_test(h0, h1)
    gamma = bic_ratio(h0, h2)
    var0 = h0.residual_variance * var_y
    var1 = h1.residual_variance * var_y
    var2 = h2.residual_variance * var_y

    lag_mean, lag_sd = lag_statistics(lags, delta_max)
    used = lags.lags[delta_max:].astype(float)
    r0 = np.asarray(h0.residuals)
    hot = np.abs(r0) > np.std(r0, ddof=1)
    sig = float(used[hot].mean()) if hot.any() else lag_mean

    return VLGCResult(
        var_r_y=var0,
        var_r_yx=var1,
        var_r_vl=var2,
        p_f=float(p_f),
        gamma=gamma,
        decision=decide(var0, var1, var2, p_f, gamma, alpha, gamma_threshold),
        lag_mean=lag_mean,
        lag_sd=lag_sd,
        significant_lag=sig,
        delta_max=delta_max,
        alpha=float(alpha),
        gamma_threshold=float(gamma_threshold),
        tau_cc=int(tau_cc),
        p_fixed=float(p_fixed),
        lags=lags.lags,
    )


def granger_fixed_pvalue(x, y, delta_max):
    """p-value of classic fixed-lag Granger causality ``x -> y``."""
    xv, yv = as_array(x), as_array(y)
    if xv.size != yv.size:
        raise InvalidArgument(f"series lengths differ: {xv.size} != {yv.size}")
    xs, ys = zscore(xv), zscore(yv)
    return f_test(fit_null(ys, delta_max), fit_fixed_lag(ys, xs, delta_max))


def granger_test_fixed(x, y, delta_max, alpha=0.01):
    return bool(granger_fixed_pvalue(x, y, delta_max) <= alpha)
