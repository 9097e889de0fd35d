import os
import subprocess
import sys

import numpy as np
import pytest

from mbvlgc import kernels
from mbvlgc._accel import HAVE_NUMBA

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("n, m, w", [(1, 1, 0), (5, 5, 0), (30, 37, 7), (200, 200, 50), (64, 40, 63)])
@pytest.mark.parametrize("squared", [False, True])
def test_dtw_backends_bit_identical(n, m, w, squared):
    r = np.random.default_rng(n * 1000 + m)
    x, y = r.normal(size=n), r.normal(size=m)
    with kernels.backend("numba"):
        a = kernels.dtw_band(x, y, w, squared)
    with kernels.backend("numpy"):
        b = kernels.dtw_band(x, y, w, squared)
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1], b[1])
    np.testing.assert_array_equal(a[2], b[2])


@needs_numba
def test_dtw_backends_agree_on_ties():
    # integer-valued series produce many equal-cost predecessors
    r = np.random.default_rng(3)
    x, y = r.integers(0, 3, 40).astype(float), r.integers(0, 3, 45).astype(float)
    with kernels.backend("numba"):
        a = kernels.dtw_band(x, y, 10)
    with kernels.backend("numpy"):
        b = kernels.dtw_band(x, y, 10)
    np.testing.assert_array_equal(a[1], b[1])
    np.testing.assert_array_equal(a[2], b[2])


@needs_numba
def test_sosfilt_backends_identical(rng):
    sos = np.array([[0.1, 0.0, -0.1, 1.0, -1.5, 0.8], [1.0, 0.0, -1.0, 1.0, -1.2, 0.5]])
    x = rng.normal(size=500)
    zi = rng.normal(size=(2, 2))
    with kernels.backend("numba"):
        a = kernels.sosfilt(sos, x, zi)
    with kernels.backend("numpy"):
        b = kernels.sosfilt(sos, x, zi)
    np.testing.assert_array_equal(a, b)


def test_sosfilt_matches_scipy(each_backend, rng):
    from scipy import signal

    sos = signal.butter(4, [8, 13], btype="band", fs=250, output="sos")
    x = rng.normal(size=300)
    zi = rng.normal(size=(sos.shape[0], 2))
    ref, _ = signal.sosfilt(sos, x, zi=zi)
    np.testing.assert_allclose(kernels.sosfilt(sos, x, zi), ref, atol=1e-12)


def test_backend_switch_and_restore():
    before = kernels.get_backend()
    with kernels.backend("numpy"):
        assert kernels.get_backend() == "numpy"
    assert kernels.get_backend() == before
    with pytest.raises(ValueError):
        kernels.set_backend("cuda")


@pytest.mark.parametrize("flag, expected", [("1", "numpy"), ("0", "numba" if HAVE_NUMBA else "numpy")])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, MBVLGC_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from mbvlgc import kernels; print(kernels.get_backend())"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == expected
