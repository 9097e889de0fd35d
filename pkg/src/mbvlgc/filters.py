"""Butterworth bandpass design and zero-phase band decomposition."""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InsufficientData, InvalidArgument, InvalidBand, InvalidBandConfig, NyquistViolation
from .timeseries import BandSpec, TimeSeries, as_array

EEG_BANDS = (
    BandSpec(1.0, 4.0),     # delta
    BandSpec(4.0, 8.0),     # theta
    BandSpec(8.0, 13.0),    # alpha
    BandSpec(13.0, 30.0),   # beta
    BandSpec(30.0, 50.0),   # low gamma
    BandSpec(50.0, 100.0),  # high gamma
)
EEG_BAND_NAMES = ("delta", "theta", "alpha", "beta", "low_gamma", "high_gamma")
TWO_BANDS = (BandSpec(1.0, 80.0), BandSpec(81.0, 120.0))


def single_band(fs):
    return (BandSpec(1.0, 0.99 * fs / 2.0),)


def band_preset(name, fs):
    """Expand a preset name (``single``, ``two-band``, ``eeg``) into bands."""
    key = name.strip().lower().replace("_", "-")
    if key == "single":
        return single_band(fs)
    if key in ("two-band", "two", "twoband"):
        return TWO_BANDS
    if key == "eeg":
        return EEG_BANDS
    raise InvalidBandConfig(f"unknown band preset {name!r}")


@dataclass(frozen=True)
class FilterCoefficients:
    """Digital bandpass filter.

    ``feedforward``/``feedback`` hold the transfer-function polynomials (length
    ``2 * order + 1``, ``feedback[0] == 1``). ``sos`` holds the same filter as
    cascaded biquads, which is what :func:`filtfilt` runs.
    """

    feedforward: np.ndarray
    feedback: np.ndarray
    sos: np.ndarray
    order: int
    band: BandSpec
    fs: float

    def poles(self):
        # roots per biquad; the expanded polynomial is ill-conditioned for narrow low bands
        return np.concatenate([np.roots(sec[3:]) for sec in self.sos])

    def is_stable(self, margin=1e-9):
        return bool(np.all(np.abs(self.poles()) < 1.0 - margin))

    def frequency_response(self, freqs_hz):
        """Complex response ``H(e^{j w})`` at the given frequencies."""
        w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=float) / self.fs
        z = np.exp(-1j * w)
        h = np.ones_like(z)
        for sec in self.sos:
            h = h * np.polyval(sec[2::-1], z) / np.polyval(sec[:2:-1], z)
        return h

    @property
    def pad_length(self):
        return 3 * (2 * self.order + 1)


def design_butterworth_bandpass(band, fs, order=4):
    """Butterworth bandpass via analog prototype and prewarped bilinear transform.

    Prewarping puts the -3 dB points exactly on ``band.low`` and ``band.high``.
    """
    if not isinstance(band, BandSpec):
        band = BandSpec(*band)
    fs = float(fs)
    order = int(order)
    if order < 1:
        raise InvalidArgument(f"filter order must be >= 1, got {order}")
    if band.low <= 0:
        raise InvalidBand(f"band low edge must be > 0, got {band.low}")
    nyquist = fs / 2.0
    if band.high >= nyquist:
        raise NyquistViolation(f"band high edge {band.high} Hz must be below Nyquist {nyquist} Hz")

    # analog prototype poles on the left half of the unit circle
    k = np.arange(1, order + 1)
    proto = np.exp(1j * np.pi * (2 * k + order - 1) / (2 * order))

    w_lo = 2.0 * fs * np.tan(np.pi * band.low / fs)
    w_hi = 2.0 * fs * np.tan(np.pi * band.high / fs)
    bw = w_hi - w_lo
    w0_sq = w_lo * w_hi

    # lowpass -> bandpass: each prototype pole splits into a pair
    half = proto * bw / 2.0
    root = np.sqrt(half * half - w0_sq)
    analog_poles = np.concatenate([half + root, half - root])
    gain = bw**order

    fs2 = 2.0 * fs
    digital_poles = (fs2 + analog_poles) / (fs2 - analog_poles)
    # order zeros at s = 0 map to z = 1, the remaining order zeros at infinity map to z = -1
    digital_gain = np.real(gain * fs2**order / np.prod(fs2 - analog_poles))

    zeros = np.concatenate([np.ones(order), -np.ones(order)])
    feedforward = digital_gain * np.real(np.poly(zeros))
    feedback = np.real(np.poly(digital_poles))

    sos = _pair_sections(digital_poles, digital_gain, order)
    return FilterCoefficients(
        feedforward=_frozen(feedforward),
        feedback=_frozen(feedback),
        sos=_frozen(sos),
        order=order,
        band=band,
        fs=fs,
    )


def _pair_sections(poles, gain, order):
    upper = poles[np.imag(poles) > 0]
    real = np.sort(np.real(poles[np.abs(np.imag(poles)) <= 1e-14]))
    sections = []
    for p in sorted(upper, key=lambda p: abs(p)):
        sections.append([1.0, 0.0, -1.0, 1.0, -2.0 * p.real, abs(p) ** 2])
    # real poles only arise for degenerate designs; pair them up
    for i in range(0, real.size, 2):
        pair = real[i : i + 2]
        a = np.real(np.poly(pair))
        sections.append([1.0, 0.0, -1.0, a[0], a[1], a[2]])
    sos = np.array(sections, dtype=float)
    if sos.shape[0] != order:
        raise ArithmeticError("pole pairing produced the wrong number of sections")
    sos[0, :3] *= gain
    return sos


def _frozen(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _section_zi(sos):
    """Steady-state initial conditions for a unit step, scaled through the cascade."""
    zi = np.empty((sos.shape[0], 2))
    scale = 1.0
    for s, (b0, b1, b2, _a0, a1, a2) in enumerate(sos):
        # transposed direct form II state for DC input: solve (I - A) z = B
        lhs = np.array([[1.0 + a1, -1.0], [a2, 1.0]])
        rhs = np.array([b1 - a1 * b0, b2 - a2 * b0])
        zi[s] = scale * np.linalg.solve(lhs, rhs)
        scale *= (b0 + b1 + b2) / (1.0 + a1 + a2)
    return zi


def _odd_extend(x, pad):
    left = 2.0 * x[0] - x[pad:0:-1]
    right = 2.0 * x[-1] - x[-2 : -pad - 2 : -1]
    return np.concatenate([left, x, right])


def filtfilt(coeffs, x):
    """Zero-phase forward-backward filtering with odd padding of ``3 * (2 * order + 1)`` samples."""
    values = as_array(x)
    pad = coeffs.pad_length
    if values.size <= pad:
        raise InsufficientData(f"series of length {values.size} is too short for padding {pad}")
    ext = _odd_extend(values, pad)
    zi = _section_zi(coeffs.sos)
    fwd = kernels.sosfilt(coeffs.sos, ext, zi * ext[0])
    rev = fwd[::-1]
    bwd = kernels.sosfilt(coeffs.sos, rev, zi * rev[0])
    out = bwd[::-1][pad:-pad].copy()
    if isinstance(x, TimeSeries):
        return x.with_values(out)
    return out


def validate_bands(bands, fs=None):
    bands = [b if isinstance(b, BandSpec) else BandSpec(*b) for b in bands]
    if not bands:
        raise InvalidBandConfig("at least one band is required")
    for i, a in enumerate(bands):
        for b in bands[i + 1 :]:
            if a.overlaps(b):
                raise InvalidBandConfig(f"bands {a.label()} and {b.label()} overlap")
        if fs is not None and a.high >= fs / 2.0:
            raise NyquistViolation(f"band {a.label()} reaches Nyquist {fs / 2.0} Hz")
    return bands


def decompose(x, bands, fs=None, order=4):
    """Split ``x`` into one zero-phase band-limited component per band.

    ``fs`` is taken from ``x`` when it is a :class:`TimeSeries`.
    """
    if isinstance(x, TimeSeries):
        fs = x.fs
    if fs is None:
        raise InvalidArgument("sampling rate is required for a raw array")
    bands = validate_bands(bands, fs)
    out = []
    for band in bands:
        coeffs = design_butterworth_bandpass(band, fs, order)
        y = filtfilt(coeffs, x)
        if isinstance(y, TimeSeries):
            y = y.with_values(y.values, label=f"{x.label or 'x'}[{band.label()}]")
        out.append(y)
    return out
