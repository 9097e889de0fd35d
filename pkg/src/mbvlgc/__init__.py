"""Multi-band variable-lag Granger causality."""
from .alignment import LagSequence, WarpingPath, build_aligned, dtw, hybrid_lag_selection, path_to_lags
from .distributions import chi2_sf, f_sf, normal_isf, normal_quantile, normal_sf
from .errors import *  # noqa: F401,F403
from .filters import FilterCoefficients, decompose, design_butterworth_bandpass, filtfilt
from .granger import (
    RegressionFit,
    VLGCResult,
    bic_ratio,
    f_test,
    fit_fixed_lag,
    fit_null,
    fit_variable_lag,
    granger_test_fixed,
    vl_granger_test,
)
from .integration import (
    BandResult,
    MBVLGCReport,
    bonferroni_combine,
    fisher_combine,
    integrate,
    stouffer_combine,
)
from .pipeline import AnalysisConfig, mb_vlgc_analyze, residual_variance_check
from .timeseries import BandSpec, TimeSeries, cross_correlation, opt_delay, variance, zscore

__version__ = "0.1.0"
