import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mbvlgc.distributions import chi2_sf
from mbvlgc.errors import InvalidPValue, NoValidBands
from mbvlgc.filters import EEG_BANDS, TWO_BANDS
from mbvlgc.granger import VLGCResult
from mbvlgc.integration import (
    bonferroni_combine,
    combine,
    fisher_combine,
    integrate,
    make_band_result,
    stouffer_combine,
)

p_unit = st.floats(1e-300, 1.0, exclude_min=False)


def result(p_f, decision, lag=4.0):
    return VLGCResult(1.0, 0.9, 0.8 if decision else 0.95, p_f, 0.0, decision, lag, 1.0, lag, 25)


def band(spec, p_f=0.5, decision=False, energy=0.3):
    return make_band_result(spec, result(p_f, decision), energy)


def test_fisher_examples():
    assert fisher_combine([1, 1]) == (0.0, 1.0)
    chi2, p = fisher_combine([0.05, 0.05])
    mpmath.mp.dps = 30
    ref_chi2 = -4 * mpmath.log(mpmath.mpf("0.05"))
    assert chi2 == pytest.approx(float(ref_chi2), abs=1e-12)
    # closed form survival for 4 degrees of freedom
    ref_p = mpmath.exp(-ref_chi2 / 2) * (1 + ref_chi2 / 2)
    assert p == pytest.approx(float(ref_p), abs=1e-12)
    assert p == chi2_sf(chi2, 4)


def test_stouffer_and_bonferroni_examples():
    assert stouffer_combine([0.5, 0.5]) == pytest.approx(0.5, abs=1e-12)
    # Z = 2 * 1.6449 / sqrt(2) = 2.3262
    assert stouffer_combine([0.05, 0.05]) == pytest.approx(0.0100, abs=5e-5)
    assert bonferroni_combine([0.01, 0.9, 0.9]) == pytest.approx(0.03)
    assert bonferroni_combine([0.5, 0.6]) == 1.0


@given(p_unit)
def test_single_p_identity(p):
    assert fisher_combine([p])[1] == pytest.approx(p, rel=1e-12, abs=1e-300)
    assert stouffer_combine([p]) == p
    assert bonferroni_combine([p]) == p


@given(p_unit, p_unit, st.floats(0.0, 1.0))
def test_fisher_monotone(p, q, shrink):
    smaller = max(p * shrink, 1e-300)
    assert fisher_combine([smaller, q])[1] <= fisher_combine([p, q])[1] + 1e-15


@pytest.mark.parametrize("ps", [[], [0.0], [0.5, -0.1], [1.5]])
def test_invalid_p_values(ps):
    with pytest.raises((NoValidBands, InvalidPValue)):
        fisher_combine(ps)


def test_combine_dispatch():
    p, chi2 = combine([0.2, 0.3], "stouffer")
    assert p == stouffer_combine([0.2, 0.3])
    assert chi2 == fisher_combine([0.2, 0.3])[0]


def test_one_band_decision():
    b = band(TWO_BANDS[0], p_f=1e-6, decision=True)
    rep = integrate([b])
    assert rep.overall_decision and rep.dominant_band == TWO_BANDS[0]
    assert rep.combined_p == pytest.approx(1e-6)


def test_one_band_verdict_is_the_band_decision():
    # a lone band has nothing to combine: its own decision is the verdict
    rep = integrate([band(TWO_BANDS[0], p_f=1e-6, decision=False)])
    assert not rep.overall_decision
    assert rep.combined_decision and not rep.band_decision
    assert "single_band_verdict" in rep.diagnostics


def test_combined_p_alone_decides_with_several_bands():
    rep = integrate([band(TWO_BANDS[0], 1e-5), band(TWO_BANDS[1], 0.2)])
    assert rep.overall_decision and not rep.band_decision
    assert rep.expected_decision() == rep.overall_decision


def test_no_valid_bands():
    bands = [band(b, 1e-9, True, energy=0.001) for b in TWO_BANDS]
    rep = integrate(bands)
    assert not rep.overall_decision
    assert rep.diagnostics == ("no_valid_bands",)
    assert rep.dominant_band is None


def test_errored_band_is_invalid():
    b = make_band_result(TWO_BANDS[0], None, 0.5, error="SingularDesign: boom")
    assert not b.valid
    rep = integrate([b, band(TWO_BANDS[1], 0.5)])
    assert "invalid_band:1-80Hz" in rep.diagnostics


def test_gamma_band_dominates_eeg():
    bands = [band(b, 0.6) for b in EEG_BANDS[:-1]] + [band(EEG_BANDS[-1], 1e-8, True)]
    rep = integrate(bands)
    assert rep.overall_decision
    assert rep.dominant_band == EEG_BANDS[-1]
    assert len(rep.per_band_lags) == 6


def test_all_null_bands_not_causal():
    rep = integrate([band(b, 1.0, False) for b in EEG_BANDS])
    assert not rep.overall_decision
    assert rep.combined_p == 1.0


def test_combined_p_in_unit_interval():
    for method in ("fisher", "stouffer", "bonferroni"):
        rep = integrate([band(b, p) for b, p in zip(EEG_BANDS, [0.1, 0.2, 1e-300, 1.0, 0.5, 0.05])],
                        method=method)
        assert 0.0 <= rep.combined_p <= 1.0
        assert math.isfinite(rep.fisher_chi2)
