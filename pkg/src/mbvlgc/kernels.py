"""Hot numeric kernels: banded DTW and second-order-section IIR filtering.

Each kernel has a numba implementation and a pure-numpy implementation with
identical arithmetic, so both paths return bit-identical results. The default
dispatch target is chosen at import time from ``MBVLGC_DISABLE_NUMBA`` and can
be switched at runtime with :func:`set_backend` / :func:`backend`.
"""
from contextlib import contextmanager

import numpy as np

from . import _accel
from ._accel import njit

# move codes stored in the DTW backpointer band
_START, _DIAG, _UP, _LEFT = -1, 0, 1, 2

_backend = "numba" if _accel.USE_NUMBA else "numpy"


def get_backend():
    return _backend


def set_backend(name):
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not _accel.HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


@contextmanager
def backend(name):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


# ---------------------------------------------------------------------------
# DTW
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _dtw_numba(x, y, w, squared):
    n = x.shape[0]
    m = y.shape[0]
    width = 2 * w + 1
    inf = np.inf
    prev = np.full(width, inf)
    cur = np.full(width, inf)
    moves = np.zeros((n, width), dtype=np.int8)
    for i in range(n):
        for k in range(width):
            cur[k] = inf
        jlo = max(0, i - w)
        jhi = min(m - 1, i + w)
        for j in range(jlo, jhi + 1):
            b = j - i + w
            d = x[i] - y[j]
            c = d * d if squared else abs(d)
            if i == 0 and j == 0:
                cur[b] = c
                moves[i, b] = -1
                continue
            best = inf
            move = 0
            if i > 0 and j > 0:
                best = prev[b]
            if i > 0 and b + 1 < width:
                if prev[b + 1] < best:
                    best = prev[b + 1]
                    move = 1
            if j > 0 and b >= 1:
                if cur[b - 1] < best:
                    best = cur[b - 1]
                    move = 2
            cur[b] = best + c
            moves[i, b] = move
        tmp = prev
        prev = cur
        cur = tmp
    cost = prev[(m - 1) - (n - 1) + w]
    pi, pj = _backtrack_numba(moves, n, m, w)
    return cost, pi, pj


@njit(cache=True, nogil=True)
def _backtrack_numba(moves, n, m, w):
    pi = np.empty(n + m, dtype=np.int64)
    pj = np.empty(n + m, dtype=np.int64)
    i = n - 1
    j = m - 1
    k = 0
    while True:
        pi[k] = i
        pj[k] = j
        k += 1
        mv = moves[i, j - i + w]
        if mv == -1:
            break
        if mv == 0:
            i -= 1
            j -= 1
        elif mv == 1:
            i -= 1
        else:
            j -= 1
    return pi[:k][::-1].copy(), pj[:k][::-1].copy()


def _dtw_numpy(x, y, w, squared):
    n, m = x.shape[0], y.shape[0]
    width = 2 * w + 1
    acc = np.full((n, width), np.inf)
    moves = np.zeros((n, width), dtype=np.int8)
    for d in range(n + m - 1):
        ilo = max(0, d - (m - 1), -((w - d) // 2))
        ihi = min(n - 1, d, (d + w) // 2)
        if ilo > ihi:
            continue
        i = np.arange(ilo, ihi + 1)
        j = d - i
        b = j - i + w
        diff = x[i] - y[j]
        c = diff * diff if squared else np.abs(diff)
        if d == 0:
            acc[0, w] = c[0]
            moves[0, w] = _START
            continue
        im1 = np.maximum(i - 1, 0)
        diag = np.where((i > 0) & (j > 0), acc[im1, b], np.inf)
        up_ok = (i > 0) & (b + 1 < width)
        up = np.where(up_ok, acc[im1, np.minimum(b + 1, width - 1)], np.inf)
        left_ok = (j > 0) & (b >= 1)
        left = np.where(left_ok, acc[i, np.maximum(b - 1, 0)], np.inf)
        cand = np.stack([diag, up, left])
        move = np.argmin(cand, axis=0)
        acc[i, b] = cand[move, np.arange(move.size)] + c
        moves[i, b] = move
    cost = acc[n - 1, (m - 1) - (n - 1) + w]
    pi, pj = _backtrack_numpy(moves, n, m, w)
    return cost, pi, pj


def _backtrack_numpy(moves, n, m, w):
    pi, pj = [], []
    i, j = n - 1, m - 1
    while True:
        pi.append(i)
        pj.append(j)
        mv = moves[i, j - i + w]
        if mv == _START:
            break
        if mv == _DIAG:
            i -= 1
            j -= 1
        elif mv == _UP:
            i -= 1
        else:
            j -= 1
    return np.array(pi[::-1], dtype=np.int64), np.array(pj[::-1], dtype=np.int64)


def dtw_band(x, y, window, squared=False):
    """Banded DTW over float64 arrays. Returns ``(cost, path_i, path_j)``.

    The caller guarantees ``window >= |len(x) - len(y)|``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if _backend == "numba":
        cost, pi, pj = _dtw_numba(x, y, int(window), bool(squared))
    else:
        cost, pi, pj = _dtw_numpy(x, y, int(window), bool(squared))
    return float(cost), pi, pj


# ---------------------------------------------------------------------------
# IIR filtering (cascaded biquads, transposed direct form II)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _sosfilt_numba(sos, x, zi):
    n_sections = sos.shape[0]
    z = zi.copy()
    out = np.empty_like(x)
    for t in range(x.shape[0]):
        xn = x[t]
        for s in range(n_sections):
            yn = sos[s, 0] * xn + z[s, 0]
            z[s, 0] = sos[s, 1] * xn - sos[s, 4] * yn + z[s, 1]
            z[s, 1] = sos[s, 2] * xn - sos[s, 5] * yn
            xn = yn
        out[t] = xn
    return out


def _sosfilt_numpy(sos, x, zi):
    coeffs = [tuple(float(v) for v in row) for row in sos]
    z = [[float(a), float(b)] for a, b in zi]
    out = np.empty_like(x)
    for t, xn in enumerate(x.tolist()):
        for s, (b0, b1, b2, _a0, a1, a2) in enumerate(coeffs):
            zs = z[s]
            yn = b0 * xn + zs[0]
            zs[0] = b1 * xn - a1 * yn + zs[1]
            zs[1] = b2 * xn - a2 * yn
            xn = yn
        out[t] = xn
    return out


def sosfilt(sos, x, zi):
    """Filter ``x`` through normalized second-order sections with initial state ``zi``."""
    sos = np.ascontiguousarray(sos, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    zi = np.ascontiguousarray(zi, dtype=np.float64)
    if _backend == "numba":
        return _sosfilt_numba(sos, x, zi)
    return _sosfilt_numpy(sos, x, zi)
