"""Gaussian random input fields.

Periodic 1D fields use the exponentiated sine-squared kernel

    k(x, x') = sigma^2 exp(-2 sin^2(pi (x - x') / p) / l^2)

sampled by dense Cholesky (grids are <= 151 nodes, so this is trivially
cheap); a diagonal jitter of 1e-10 sigma^2 keeps the factorization positive
definite even for near-degenerate length scales. The 2D permeability prior is
sampled spectrally: the covariance operator (-Laplace + 9 I)^{-2} is diagonal
in the Fourier basis of the periodic unit square, so independent complex
normal coefficients are scaled by (4 pi^2 |k|^2 + 9)^{-1} and the DC mode is
zeroed (strict mean-zero field; with it left in, the constant mode dominates
and realizations degenerate to a single phase before thresholding).

Everything is deterministic given (spec, seed); per-instance streams come
from seeding numpy's Generator with the (base_seed, index) sequence.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .fields import Axis, SpaceTimeField
from .fourier import dft_1d

CHOLESKY_JITTER = 1e-10


@dataclass(frozen=True)
class ExpSinKernelParams:
    sigma: float = 0.2
    length_scale: float = 0.5
    period: float = 1.0

    def __post_init__(self):
        if min(self.sigma, self.length_scale, self.period) <= 0:
            raise ValueError("kernel parameters must be positive")


def kernel_eval(x, x_prime, params):
    """Covariance between coordinates x and x'; vectorizes over arrays.

    The lag is folded into [0, p/2] before evaluating sin, which makes
    symmetry bit-exact (fmod and the min-fold commute with negation exactly,
    the raw sin does not).
    """
    p = params.period
    lag = np.abs(np.asarray(x, dtype=np.float64) - np.asarray(x_prime, dtype=np.float64))
    q = np.mod(lag, p)
    q = np.minimum(q, p - q)
    s = np.sin(q * (np.pi / p))
    return params.sigma ** 2 * np.exp(-2.0 * s * s / params.length_scale ** 2)


@lru_cache(maxsize=64)
def _cholesky_factor(n_points, params, endpoint, extent):
    ax = Axis(extent[0], extent[1], n_points, endpoint=endpoint)
    x = ax.coords()
    K = kernel_eval(x[:, None], x[None, :], params)
    K = K + (CHOLESKY_JITTER * params.sigma ** 2) * np.eye(n_points)
    return np.linalg.cholesky(K)


def sample_periodic_field(n_points, params, seed, endpoint=False,
                          extent=(0.0, 1.0)):
    """One zero-mean draw from the exp-sin Gaussian process on [lo, hi].

    endpoint=False samples the n periodic nodes lo + i*span/n; endpoint=True
    samples an inclusive grid (the duplicated closing node of a periodic
    domain comes out bit-equal to the first up to jitter noise).
    """
    if n_points < 2:
        raise ValueError("need at least two grid points")
    L = _cholesky_factor(n_points, params, endpoint, tuple(extent))
    rng = np.random.default_rng(seed)
    values = L @ rng.standard_normal(n_points)
    ax = Axis(extent[0], extent[1], n_points, endpoint=endpoint)
    return SpaceTimeField(values, (ax,), meta={"length_scale": params.length_scale,
                                               "sigma": params.sigma,
                                               "seed": seed})


@lru_cache(maxsize=8)
def _darcy_spectral_weights(n):
    k = np.where(np.arange(n) <= (n - 1) // 2, np.arange(n), np.arange(n) - n)
    k2 = k[:, None] ** 2 + k[None, :] ** 2
    w = 1.0 / (4.0 * np.pi ** 2 * k2 + 9.0)
    w[0, 0] = 0.0
    return w


def sample_darcy_gaussian(n_fine, seed):
    """The latent mean-zero field phi on the inclusive n_fine x n_fine grid."""
    if n_fine < 8:
        raise ValueError("Darcy fields need at least an 8x8 grid")
    n = n_fine - 1  # periodic nodes; the inclusive grid wraps the first row/col
    w = _darcy_spectral_weights(n)
    rng = np.random.default_rng(seed)
    coeff = w * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    coeff *= 1.0 / np.sqrt(2.0)
    phi = dft_1d(dft_1d(coeff, inverse=True, axis=0), inverse=True, axis=1)
    phi = (n * n) * phi.real
    out = np.empty((n_fine, n_fine))
    out[:n, :n] = phi
    out[n, :n] = phi[0, :]
    out[:n, n] = phi[:, 0]
    out[n, n] = phi[0, 0]
    return out


def threshold_permeability(phi):
    return np.where(phi >= 0.0, 12.0, 3.0)


def sample_darcy_coefficient(n_fine, seed):
    """Two-phase permeability field a(x) in {3, 12} on the inclusive grid."""
    a = threshold_permeability(sample_darcy_gaussian(n_fine, seed))
    ax = Axis(0.0, 1.0, n_fine)
    return SpaceTimeField(a, (ax, ax), meta={"seed": seed})


GRF_KINDS = ("initial_condition", "forcing")
FIELD_KINDS = GRF_KINDS + ("coefficient", "fkdv")


@dataclass(frozen=True)
class VirtualInputSpec:
    """Label-free input ensemble description.

    For GRF kinds the ensemble cycles through length_scale_set so it spans
    the full range of spectral content; the coefficient (Darcy) and fkdv
    priors have no length scale and ignore the set.
    """

    count: int
    length_scale_set: tuple = ()
    kind: str = "initial_condition"
    seed: int = 0
    n_points: int = 32
    sigma: float = 0.2
    period: float = 1.0
    endpoint: bool = False
    extent: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if self.kind not in FIELD_KINDS:
            raise ValueError(f"unknown input kind {self.kind!r}")
        if any(l <= 0 for l in self.length_scale_set):
            raise ValueError("length scales must be positive")
        if self.kind in GRF_KINDS and self.count > 0 and not self.length_scale_set:
            raise ValueError("GRF virtual inputs need a non-empty length-scale set")


@dataclass
class VirtualInput:
    values: np.ndarray
    kind: str
    length_scale: float | None
    seed: tuple
    index: int


def build_virtual_ensemble(spec):
    """Materialize the ensemble; instance i uses stream (spec.seed, i)."""
    out = []
    for i in range(spec.count):
        seed = (spec.seed, i)
        if spec.kind in GRF_KINDS:
            ell = spec.length_scale_set[i % len(spec.length_scale_set)]
            params = ExpSinKernelParams(spec.sigma, ell, spec.period)
            f = sample_periodic_field(spec.n_points, params, seed,
                                      endpoint=spec.endpoint, extent=spec.extent)
            out.append(VirtualInput(f.values, spec.kind, ell, seed, i))
        elif spec.kind == "coefficient":
            a = sample_darcy_coefficient(spec.n_points, seed)
            out.append(VirtualInput(a.values, spec.kind, None, seed, i))
        else:
            raise ValueError(
                "fkdv virtual inputs are drawn by the analytic-family sampler "
                "(solvers.fkdv.sample_instance), not the GRF ensemble")
    return out
