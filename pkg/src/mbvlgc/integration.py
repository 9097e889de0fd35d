"""Combine per-band test results into one verdict."""
import math
from dataclasses import dataclass, field
from typing import Optional

from .distributions import P_FLOOR, chi2_sf, normal_isf, normal_sf
from .errors import InvalidArgument, InvalidPValue, NoValidBands
from .granger import VLGCResult
from .timeseries import BandSpec

#: bands holding less than this share of the signal energy are not trusted
ENERGY_EPS = 0.01

METHODS = ("fisher", "stouffer", "bonferroni")


@dataclass(frozen=True)
class BandResult:
    band: BandSpec
    result: Optional[VLGCResult]
    valid: bool
    energy_fraction: float
    error: Optional[str] = None
    lag_stats: Optional[dict] = None


def make_band_result(band, result, energy_fraction, error=None, energy_eps=ENERGY_EPS,
                     lag_stats=None):
    valid = (
        error is None
        and result is not None
        and energy_fraction >= energy_eps
        and math.isfinite(result.p_f)
    )
    if lag_stats is None and result is not None:
        lag_stats = {"tau_cc": result.tau_cc, "lag_mean": result.lag_mean, "lag_sd": result.lag_sd}
    return BandResult(band, result, valid, float(energy_fraction), error, lag_stats)


@dataclass(frozen=True)
class MBVLGCReport:
    bands: tuple
    combined_p: float
    combination_method: str
    fisher_chi2: float
    overall_decision: bool
    dominant_band: Optional[BandSpec]
    per_band_lags: tuple
    alpha: float = 0.01
    diagnostics: tuple = field(default=())
    combined_decision: bool = False
    band_decision: bool = False

    @property
    def valid_bands(self):
        return [b for b in self.bands if b.valid]

    def expected_decision(self):
        return overall_rule(self.bands, self.combined_p, self.alpha)


def _check_ps(ps):
    ps = [float(p) for p in ps]
    if not ps:
        raise NoValidBands("no p-values to combine")
    for p in ps:
        if not (0.0 < p <= 1.0):
            raise InvalidPValue(f"p-value {p} outside (0, 1]")
    return ps


def fisher_combine(ps):
    """Fisher's method. Returns ``(chi2, p)``."""
    ps = _check_ps(ps)
    chi2 = -2.0 * sum(math.log(max(p, P_FLOOR)) for p in ps)
    chi2 = max(chi2, 0.0)
    return chi2, chi2_sf(chi2, 2 * len(ps))


def stouffer_combine(ps):
    ps = _check_ps(ps)
    if len(ps) == 1:
        return ps[0]
    z = sum(normal_isf(min(max(p, P_FLOOR), 1.0 - 1e-16)) for p in ps) / math.sqrt(len(ps))
    return normal_sf(z)


def bonferroni_combine(ps):
    ps = _check_ps(ps)
    return min(1.0, len(ps) * min(ps))


def combine(ps, method="fisher"):
    """Combined p-value and Fisher statistic (the latter is always reported)."""
    chi2, p_fisher = fisher_combine(ps)
    if method == "fisher":
        return p_fisher, chi2
    if method == "stouffer":
        return stouffer_combine(ps), chi2
    if method == "bonferroni":
        return bonferroni_combine(ps), chi2
    raise InvalidArgument(f"unknown combination method {method!r}")


def _lag_summary(b):
    out = {"band": b.band.label(), "tau_cc": None, "lag_mean": None, "lag_sd": None,
           "significant_lag": None}
    if b.lag_stats:
        out.update(b.lag_stats)
    if b.result is not None:
        out["significant_lag"] = b.result.significant_lag
    return out


def overall_rule(band_results, combined_p, alpha):
    """Causal if any valid band decides causal, or, when more than one band was
    analysed, if the combined p-value is at most ``alpha``.

    A single band has nothing to combine, so its verdict is that band's own decision.
    """
    valid = [b for b in band_results if b.valid]
    if not valid:
        return False
    band_decision = any(b.result.decision for b in valid)
    if len(band_results) < 2:
        return bool(band_decision)
    return bool(band_decision or combined_p <= alpha)


def integrate(band_results, alpha=0.01, gamma_threshold=0.6, method="fisher"):
    """Combine per-band results; see :func:`overall_rule` for the verdict.

    ``gamma_threshold`` is accepted for symmetry with the per-band test; each
    band's decision already embeds it. With no valid band the report is still
    returned, with a false verdict and a ``no_valid_bands`` diagnostic.
    """
    if method not in METHODS:
        raise InvalidArgument(f"unknown combination method {method!r}")
    band_results = tuple(band_results)
    if not band_results:
        raise NoValidBands("integration needs at least one band result")
    lags = tuple(_lag_summary(b) for b in band_results)
    valid = [b for b in band_results if b.valid]
    if not valid:
        return MBVLGCReport(band_results, 1.0, method, 0.0, False, None, lags, float(alpha),
                            ("no_valid_bands",))
    # a p-value that underflowed to zero is floored so the logarithm stays finite
    ps = [max(b.result.p_f, P_FLOOR) for b in valid]
    combined, chi2 = combine(ps, method)
    combined = min(1.0, max(0.0, combined))
    dominant = min(valid, key=lambda b: b.result.p_f).band
    overall = overall_rule(band_results, combined, alpha)
    diags = tuple(f"invalid_band:{b.band.label()}" for b in band_results if not b.valid)
    if len(band_results) < 2:
        diags += ("single_band_verdict",)
    return MBVLGCReport(band_results, combined, method, chi2, overall, dominant, lags,
                        float(alpha), diags, combined_decision=bool(combined <= alpha),
                        band_decision=any(b.result.decision for b in valid))
