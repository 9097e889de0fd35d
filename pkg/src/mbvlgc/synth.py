"""Seeded synthetic cause/effect pairs with known lag structure, and the benchmark corpus."""
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import filters
from .errors import InvalidArgument
from .timeseries import BandSpec, cross_correlation, opt_delay

KINDS = ("random_noise", "basic", "variable_lag", "broadband", "multifreq")
FS = 250.0
NOISE_STD = 0.5
MIN_COUPLING = 0.3
MAX_RETRIES = 10

BASIC_LAG = 20
BROADBAND_LAG = 7
VARIABLE_LAGS = (12, 16, 20)
MIN_REGIME = 150
MULTIFREQ_LAGS = {10: 15, 40: 8, 80: 4}
MULTIFREQ_WIDTH = 8.0
# bands used by the multifreq self-check, one per component
MULTIFREQ_CHECK = {10: BandSpec(8.0, 13.0), 40: BandSpec(30.0, 50.0), 80: BandSpec(70.0, 90.0)}
CHECK_MAX_LAG = 50
CHECK_MAX_LAG_NARROW = 25

#: files per kind in the benchmark corpus
CORPUS_COUNTS = {"random_noise": 120, "basic": 30, "variable_lag": 30, "broadband": 30, "multifreq": 30}


class SelfCheckFailed(RuntimeError):
    pass


@dataclass(frozen=True)
class SynthSpec:
    kind: str
    seed: int
    length: int = 1000
    fs: float = FS

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown generator kind {self.kind!r}")
        if not 500 <= int(self.length) <= 2000:
            raise InvalidArgument(f"length must lie in [500, 2000], got {self.length}")
        if self.fs <= 0:
            raise InvalidArgument("sampling rate must be positive")

    @property
    def ground_truth(self):
        return self.kind != "random_noise"


@dataclass(frozen=True)
class SynthPair:
    x: np.ndarray
    y: np.ndarray
    true_lags: object
    params: dict = field(default_factory=dict)


def _rng(spec):
    return np.random.Generator(np.random.PCG64(spec.seed))


def draw_coupling(rng):
    """Normal coupling, redrawn until ``|c| >= MIN_COUPLING`` (never zero)."""
    while True:
        c = float(rng.normal())
        if abs(c) >= MIN_COUPLING:
            return c


def _shift(s, lag):
    out = np.zeros_like(s)
    out[lag:] = s[: s.size - lag]
    return out


def _retry(make, check, rng):
    for _ in range(MAX_RETRIES):
        pair = make(rng)
        if check(pair):
            return pair
    raise SelfCheckFailed("generator failed its lag self-check after repeated redraws")


def gen_random_noise(spec):
    rng = _rng(spec)
    T = int(spec.length)
    bound = 4.0 / np.sqrt(T)

    def make(rng):
        return SynthPair(rng.normal(size=T), rng.normal(size=T), None, {})

    def check(p):
        _, fwd = cross_correlation(p.x, p.y, CHECK_MAX_LAG)
        _, bwd = cross_correlation(p.y, p.x, CHECK_MAX_LAG)
        return max(np.abs(fwd).max(), np.abs(bwd).max()) < bound

    return _retry(make, check, rng)


def gen_basic(spec):
    rng = _rng(spec)
    T = int(spec.length)

    def make(rng):
        x = rng.normal(size=T)
        c = draw_coupling(rng)
        y = c * _shift(x, BASIC_LAG) + NOISE_STD * rng.normal(size=T)
        return SynthPair(x, y, BASIC_LAG, {"coupling": c, "noise_std": NOISE_STD})

    return _retry(make, lambda p: opt_delay(p.x, p.y, CHECK_MAX_LAG) == BASIC_LAG, rng)


def _regimes(rng, T):
    max_changes = min(4, T // MIN_REGIME - 1)
    changes = int(rng.integers(2, max_changes + 1))
    n_seg = changes + 1
    # spread the slack beyond the minimum regime length uniformly over the segments
    slack = T - n_seg * MIN_REGIME
    cuts = np.sort(rng.integers(0, slack + 1, size=n_seg - 1))
    extra = np.diff(np.concatenate([[0], cuts, [slack]]))
    bounds = np.concatenate([[0], np.cumsum(MIN_REGIME + extra)])
    lags, prev = [], None
    for _ in range(n_seg):
        lag = int(rng.choice([v for v in VARIABLE_LAGS if v != prev]))
        lags.append(lag)
        prev = lag
    return [(int(a), int(b), lag) for a, b, lag in zip(bounds[:-1], bounds[1:], lags)]


def regime_lag(x, y, start, stop, max_lag=CHECK_MAX_LAG_NARROW):
    """Lag maximizing ``|corr(x[t - tau], y[t])|`` over ``t`` in ``[start, stop)``."""
    best, best_tau = -1.0, 0
    for tau in range(max_lag + 1):
        lo = max(start, tau)
        a = x[lo - tau : stop - tau]
        b = y[lo:stop]
        r = abs(np.corrcoef(a, b)[0, 1])
        if r > best + 1e-12:
            best, best_tau = r, tau
    return best_tau


def gen_variable_lag(spec):
    rng = _rng(spec)
    T = int(spec.length)

    def make(rng):
        x = rng.normal(size=T)
        regimes = _regimes(rng, T)
        lag_t = np.empty(T, dtype=np.int64)
        for a, b, lag in regimes:
            lag_t[a:b] = lag
        c = draw_coupling(rng)
        src = np.arange(T) - lag_t
        driven = np.where(src >= 0, x[np.clip(src, 0, None)], 0.0)
        y = c * driven + NOISE_STD * rng.normal(size=T)
        truth = [{"start": a, "stop": b, "lag": lag} for a, b, lag in regimes]
        return SynthPair(x, y, truth, {"coupling": c, "noise_std": NOISE_STD})

    def check(p):
        return all(regime_lag(p.x, p.y, r["start"], r["stop"]) == r["lag"] for r in p.true_lags)

    return _retry(make, check, rng)


def gen_broadband(spec, n_components=12):
    rng = _rng(spec)
    T = int(spec.length)
    t = np.arange(T) / spec.fs

    def make(rng):
        freqs = rng.uniform(1.0, 50.0, size=n_components)
        phases = rng.uniform(0.0, 2 * np.pi, size=n_components)
        x = np.sin(2 * np.pi * freqs[:, None] * t + phases[:, None]).sum(axis=0)
        x = x + NOISE_STD * rng.normal(size=T)
        x = x / x.std()
        c = draw_coupling(rng)
        y = c * _shift(x, BROADBAND_LAG) + NOISE_STD * rng.normal(size=T)
        params = {"coupling": c, "noise_std": NOISE_STD, "frequencies": [float(f) for f in freqs]}
        return SynthPair(x, y, BROADBAND_LAG, params)

    return _retry(make, lambda p: opt_delay(p.x, p.y, CHECK_MAX_LAG) == BROADBAND_LAG, rng)


def narrowband(rng, center, width, T, fs):
    """Unit-variance Gaussian process band-limited to ``center +/- width / 2``."""
    band = BandSpec(center - width / 2.0, center + width / 2.0)
    coeffs = filters.design_butterworth_bandpass(band, fs)
    s = filters.filtfilt(coeffs, rng.normal(size=T))
    return s / s.std()


def gen_multifreq(spec):
    rng = _rng(spec)
    T = int(spec.length)

    def make(rng):
        comps = {f: narrowband(rng, f, MULTIFREQ_WIDTH, T, spec.fs) for f in MULTIFREQ_LAGS}
        x = sum(comps.values()) + NOISE_STD * rng.normal(size=T)
        couplings = {f: draw_coupling(rng) for f in MULTIFREQ_LAGS}
        y = sum(couplings[f] * _shift(comps[f], lag) for f, lag in MULTIFREQ_LAGS.items())
        y = y + NOISE_STD * rng.normal(size=T)
        truth = {str(f): lag for f, lag in MULTIFREQ_LAGS.items()}
        params = {
            "couplings": {str(f): c for f, c in couplings.items()},
            "noise_std": NOISE_STD,
            "component_width_hz": MULTIFREQ_WIDTH,
        }
        return SynthPair(x, y, truth, params)

    def check(p):
        for f, lag in MULTIFREQ_LAGS.items():
            coeffs = filters.design_butterworth_bandpass(MULTIFREQ_CHECK[f], spec.fs)
            xb, yb = filters.filtfilt(coeffs, p.x), filters.filtfilt(coeffs, p.y)
            if opt_delay(xb, yb, CHECK_MAX_LAG_NARROW) != lag:
                return False
        return True

    return _retry(make, check, rng)


GENERATORS = {
    "random_noise": gen_random_noise,
    "basic": gen_basic,
    "variable_lag": gen_variable_lag,
    "broadband": gen_broadband,
    "multifreq": gen_multifreq,
}


def generate(spec):
    return GENERATORS[spec.kind](spec)


def file_seed(master_seed, index):
    """Independent 63-bit seed for corpus file ``index``."""
    state = np.random.SeedSequence([int(master_seed), int(index)]).generate_state(1, np.uint64)[0]
    return int(state >> np.uint64(1))


def corpus_specs(master_seed, counts=None):
    counts = CORPUS_COUNTS if counts is None else counts
    specs, idx = [], 0
    for kind in KINDS:
        for _ in range(counts.get(kind, 0)):
            seed = file_seed(master_seed, idx)
            specs.append(SynthSpec(kind, seed, length=500 + seed % 1501))
            idx += 1
    return specs


def write_pair_csv(path, x, y, fs):
    t = np.arange(x.size) / fs
    np.savetxt(path, np.column_stack([t, x, y]), fmt="%.17g", delimiter=",", header="t,x,y",
               comments="")


def gen_corpus(master_seed, out_dir, counts=None):
    """Write one CSV per pair plus ``manifest.json`` and return the manifest entries."""
    os.makedirs(out_dir, exist_ok=True)
    manifest = []
    for idx, spec in enumerate(corpus_specs(master_seed, counts)):
        pair = generate(spec)
        name = f"{idx:03d}_{spec.kind}.csv"
        write_pair_csv(os.path.join(out_dir, name), pair.x, pair.y, spec.fs)
        manifest.append({
            "file": name,
            "kind": spec.kind,
            "seed": spec.seed,
            "length": int(spec.length),
            "fs": spec.fs,
            "ground_truth": spec.ground_truth,
            "true_lags": pair.true_lags,
            "params": pair.params,
        })
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest
