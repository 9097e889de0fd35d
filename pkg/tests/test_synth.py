import filecmp
import json
import os

import numpy as np
import pytest

from mbvlgc.errors import InvalidArgument
from mbvlgc.synth import (
    CORPUS_COUNTS,
    MIN_COUPLING,
    VARIABLE_LAGS,
    SelfCheckFailed,
    SynthSpec,
    _retry,
    corpus_specs,
    draw_coupling,
    file_seed,
    gen_corpus,
    generate,
    regime_lag,
)
from mbvlgc.timeseries import cross_correlation, opt_delay

KINDS = ["random_noise", "basic", "variable_lag", "broadband", "multifreq"]


@pytest.mark.parametrize("kind", KINDS)
def test_seed_determinism(kind):
    a = generate(SynthSpec(kind, 17, 800))
    b = generate(SynthSpec(kind, 17, 800))
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
    assert a.true_lags == b.true_lags
    c = generate(SynthSpec(kind, 18, 800))
    assert not np.array_equal(a.x, c.x)


def test_spec_validation():
    with pytest.raises(InvalidArgument):
        SynthSpec("sine", 1)
    with pytest.raises(InvalidArgument):
        SynthSpec("basic", 1, length=499)
    with pytest.raises(InvalidArgument):
        SynthSpec("basic", 1, length=2001)
    assert not SynthSpec("random_noise", 1).ground_truth
    assert SynthSpec("multifreq", 1).ground_truth


@pytest.mark.parametrize("seed", range(5))
def test_noise_moments_and_ccf_bound(seed):
    n = 2000
    p = generate(SynthSpec("random_noise", seed, n))
    for s in (p.x, p.y):
        assert abs(s.mean()) < 5 / np.sqrt(n)
        # SE of the sample variance is about sqrt(2 / n)
        assert abs(s.var() - 1) < 5 * np.sqrt(2 / n)
    _, r = cross_correlation(p.x, p.y, 50)
    assert np.abs(r).max() < 4 / np.sqrt(n)


def test_coupling_never_small():
    rng = np.random.default_rng(0)
    assert all(abs(draw_coupling(rng)) >= MIN_COUPLING for _ in range(2000))


@pytest.mark.parametrize("seed", range(4))
def test_basic_lag_and_coupling_recovered(seed):
    p = generate(SynthSpec("basic", seed, 1500))
    assert opt_delay(p.x, p.y, 50) == 20
    xs, ys = p.x[:-20], p.y[20:]
    c_hat = (xs @ ys) / (xs @ xs)
    assert abs(c_hat - p.params["coupling"]) <= 0.1


@pytest.mark.parametrize("seed", range(6))
def test_variable_lag_regimes(seed):
    p = generate(SynthSpec("variable_lag", seed, 1200))
    regimes = p.true_lags
    assert 3 <= len(regimes) <= 5
    assert regimes[0]["start"] == 0 and regimes[-1]["stop"] == 1200
    for a, b in zip(regimes, regimes[1:]):
        assert a["stop"] == b["start"]
        assert a["lag"] != b["lag"]
    for r in regimes:
        assert r["lag"] in VARIABLE_LAGS
        assert r["stop"] - r["start"] >= 150
        assert regime_lag(p.x, p.y, r["start"], r["stop"]) == r["lag"]


def test_short_series_still_has_two_changes():
    p = generate(SynthSpec("variable_lag", 3, 500))
    assert len(p.true_lags) == 3


@pytest.mark.parametrize("seed", range(3))
def test_broadband_spectrum_and_lag(seed):
    p = generate(SynthSpec("broadband", seed, 2000))
    assert opt_delay(p.x, p.y, 50) == 7
    freqs = np.fft.rfftfreq(p.x.size, 1 / 250)
    power = np.abs(np.fft.rfft(p.x - p.x.mean())) ** 2
    assert power[freqs <= 50].sum() >= 0.9 * power.sum()
    assert len(p.params["frequencies"]) >= 10


@pytest.mark.parametrize("seed", range(3))
def test_multifreq_component_energy(seed):
    p = generate(SynthSpec("multifreq", seed, 2000))
    assert p.true_lags == {"10": 15, "40": 8, "80": 4}
    freqs = np.fft.rfftfreq(p.x.size, 1 / 250)
    power = np.abs(np.fft.rfft(p.x)) ** 2
    near = np.zeros_like(freqs, dtype=bool)
    for f in (10, 40, 80):
        near |= np.abs(freqs - f) <= 6
    assert power[near].sum() > 0.7 * power.sum()


def test_retry_gives_up():
    rng = np.random.default_rng(0)
    calls = []
    with pytest.raises(SelfCheckFailed):
        _retry(lambda r: calls.append(1), lambda p: False, rng)
    assert len(calls) == 10


def test_file_seeds_and_specs():
    seeds = [file_seed(42, i) for i in range(240)]
    assert len(set(seeds)) == 240
    assert all(0 <= s < 2**63 for s in seeds)
    specs = corpus_specs(42)
    assert len(specs) == 240
    assert all(500 <= s.length <= 2000 for s in specs)
    kinds = [s.kind for s in specs]
    assert {k: kinds.count(k) for k in CORPUS_COUNTS} == CORPUS_COUNTS


def test_small_corpus_is_byte_identical(tmp_path):
    counts = {k: 2 for k in KINDS}
    a, b = tmp_path / "a", tmp_path / "b"
    manifest = gen_corpus(7, a, counts)
    gen_corpus(7, b, counts)
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    assert len(names) == 11
    _, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert not mismatch and not errors

    with open(a / "manifest.json") as fh:
        loaded = json.load(fh)
    assert loaded == json.loads(json.dumps(manifest))
    required = {"file", "kind", "seed", "length", "fs", "ground_truth", "true_lags"}
    assert all(required <= set(e) for e in loaded)

    first = loaded[0]
    with open(a / first["file"]) as fh:
        assert fh.readline().strip() == "t,x,y"
    data = np.loadtxt(a / first["file"], delimiter=",", skiprows=1)
    assert data.shape == (first["length"], 3)
    regenerated = generate(SynthSpec(first["kind"], first["seed"], first["length"]))
    # 17 significant digits round-trip exactly
    assert np.array_equal(data[:, 1], regenerated.x)
    assert np.array_equal(data[:, 2], regenerated.y)


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        gen_corpus(1, blocker / "sub", {"basic": 1})
