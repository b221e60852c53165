"""Discrete Fourier transforms for arbitrary series lengths.

Conventions (unnormalized forward / 1-over-n inverse):

    forward:  X[k] = sum_j x[j] exp(-2 pi i j k / n)
    inverse:  x[j] = (1/n) sum_k X[k] exp(+2 pi i j k / n)

Benchmark grids are short and odd-sized (26, 32, 51, 100, 241 points), so two
engines back ``dft_1d``: a cached dense transform matrix applied as a GEMM for
small n (fastest at these sizes on a single core), and Bluestein's chirp-z
algorithm with an internal radix-2 FFT for everything else. Both agree with
the definition sum to roundoff and may be selected explicitly for testing.

Frequency layout is numpy's fftfreq order: bins [0, 1, ..., n//2 - 1,
-(n//2), ..., -1] for even n. Helpers here return signed mode numbers and
angular frequencies in that order so spectral code downstream shares one
convention (the even-n Nyquist bin is the negative frequency).
"""

from functools import lru_cache

import numpy as np

# Above this length the dense-matrix GEMM loses to Bluestein.
_MATRIX_MAX = 256


@lru_cache(maxsize=None)
def _bitrev(m):
    levels = m.bit_length() - 1
    idx = np.arange(m)
    rev = np.zeros(m, dtype=np.intp)
    for _ in range(levels):
        rev = (rev << 1) | (idx & 1)
        idx >>= 1
    return rev


def _fft_pow2(a):
    """Unnormalized forward DFT along the last axis; length must be 2**k."""
    m = a.shape[-1]
    if m & (m - 1):
        raise ValueError(f"radix-2 FFT needs a power-of-two length, got {m}")
    out = np.ascontiguousarray(a[..., _bitrev(m)], dtype=np.complex128)
    half = 1
    while half < m:
        tw = np.exp(-1j * np.pi * np.arange(half) / half)
        v = out.reshape(out.shape[:-1] + (m // (2 * half), 2, half))
        even = v[..., 0, :].copy()
        odd = v[..., 1, :] * tw
        v[..., 0, :] = even + odd
        v[..., 1, :] = even - odd
        half *= 2
    return out


@lru_cache(maxsize=None)
def _bluestein_tables(n):
    m = 1 << (2 * n - 1).bit_length()
    j = np.arange(n)
    chirp = np.exp(-1j * np.pi * (j * j % (2 * n)) / n)  # exact mod keeps phase accurate
    b = np.zeros(m, dtype=np.complex128)
    b[:n] = np.conj(chirp)
    b[m - n + 1:] = np.conj(chirp[1:][::-1])
    return m, chirp, _fft_pow2(b)


def _bluestein(x, axis):
    n = x.shape[axis]
    m, chirp, fb = _bluestein_tables(n)
    xm = np.moveaxis(np.asarray(x, dtype=np.complex128), axis, -1)
    a = np.zeros(xm.shape[:-1] + (m,), dtype=np.complex128)
    a[..., :n] = xm * chirp
    fa = _fft_pow2(a)
    # circular convolution with the conjugate chirp via the power-of-two FFT
    conv = np.conj(_fft_pow2(np.conj(fa * fb))) / m
    out = conv[..., :n] * chirp
    return np.moveaxis(out, -1, axis)


@lru_cache(maxsize=None)
def dft_matrix(n, inverse=False):
    """Dense transform matrix; inverse carries the 1/n factor."""
    jk = np.outer(np.arange(n), np.arange(n)) % n
    if inverse:
        return np.exp(2j * np.pi * jk / n) / n
    return np.exp(-2j * np.pi * jk / n)


def dft_1d(x, inverse=False, axis=-1, engine=None):
    """Transform ``x`` along ``axis``.

    engine: None picks automatically, "matrix" or "bluestein" forces a path.
    """
    x = np.asarray(x)
    n = x.shape[axis]
    if n < 1:
        raise ValueError("dft_1d needs at least one sample")
    if engine is None:
        engine = "matrix" if n <= _MATRIX_MAX else "bluestein"
    if engine == "matrix":
        M = dft_matrix(n, inverse)
        return np.moveaxis(M @ np.moveaxis(x, axis, -2), -2, axis) \
            if x.ndim > 1 else M @ x
    if engine == "bluestein":
        if inverse:
            return np.conj(_bluestein(np.conj(x), axis)) / n
        return _bluestein(x, axis)
    raise ValueError(f"unknown engine {engine!r}")


def signed_modes(n):
    """Signed mode numbers in bin order (fftfreq layout)."""
    k = np.arange(n)
    return np.where(k <= (n - 1) // 2, k, k - n)


def angular_frequencies(n, step):
    """Angular frequencies 2*pi*l/(n*step) of the n DFT bins, signed."""
    return 2.0 * np.pi * signed_modes(n) / (n * step)


def mode_to_bin(mode, n):
    """Bin index of a signed mode number, or None if not representable."""
    lo = -(n // 2)
    hi = (n - 1) // 2
    if mode < lo or mode > hi:
        return None
    return mode % n
