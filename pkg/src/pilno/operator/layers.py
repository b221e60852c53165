"""Kernel layers: pole-residue transient, spectral multiplier, and their sums.

The latent signal v on a uniform time grid expands in exponentials,
v(t) = sum_l alpha_l exp(i w_l t) with alpha = DFT(v)/n and w_l the signed
bin frequencies 2 pi l / (n h). A rational transfer function
K(s) = sum_n beta_n / (s - mu_n) then acts as

    transient(t) = sum_n (sum_l beta_n alpha_l / (mu_n - i w_l)) e^{mu_n t}
    steady(t)    = sum_l (sum_n beta_n alpha_l / (i w_l - mu_n)) e^{i w_l t}

which is the exact causal convolution of the band-limited interpolant with
kappa(t) = sum_n beta_n e^{mu_n t}. Layers keep the real part (latent fields
are real); oracles can ask for the complex values.

Poles are reparameterized as mu = -softplus(rho) + i theta so Re(mu) < 0
always holds and e^{mu t} stays bounded on [0, T]. Residues and the free
Fourier multiplier H live on signed modes [0..m-1] + [-(m-1)..-1] per axis
in fftfreq order (the even-n Nyquist bin is the negative frequency), so the
Eq.-style identity H(w_l) = K(i w_l) is bitwise consistent between the
steady term and the spectral convolution.

All hot contractions are GEMMs: DFT submatrices via matm, per-bin channel
mixing via pair_mix. The per-pair pole layout goes through einsum2 instead,
which is fine at oracle sizes but costly at training widths; trained desk
configs use shared poles with per-pair residues (common-pole vector-fitting
form).
"""

from functools import lru_cache

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from ..fourier import angular_frequencies, dft_matrix, signed_modes


# ---------------------------------------------------------------------------
# mode bookkeeping


def stored_modes(m):
    """Signed mode numbers a multiplier of size m stores, in storage order."""
    if m < 1:
        raise ValueError("need at least one mode")
    return np.concatenate([np.arange(m), np.arange(-(m - 1), 0)])


def max_modes(n):
    """Largest admissible mode count for an n-point grid (Nyquist bound)."""
    return n // 2 + 1


@lru_cache(maxsize=None)
def _mode_maps(m, n):
    """(storage indices, grid bins) of the stored modes representable on n."""
    if m > max_modes(n):
        raise ValueError(f"modes_kept={m} exceeds the Nyquist bound for n={n}")
    modes = stored_modes(m)
    lo, hi = -(n // 2), (n - 1) // 2
    keep = (modes >= lo) & (modes <= hi)
    return np.nonzero(keep)[0], np.mod(modes[keep], n)


@lru_cache(maxsize=None)
def _dft_submatrices(n, bins_key):
    bins = np.array(bins_key, dtype=np.intp)
    W = dft_matrix(n)
    fwd = np.ascontiguousarray(W[bins, :])
    syn = np.ascontiguousarray(np.conj(W)[:, bins]) / n
    return fwd, syn


def dft_submatrices(n, m):
    """Forward (K x n) and synthesis (n x K) matrices for the kept bins."""
    idx, bins = _mode_maps(m, n)
    fwd, syn = _dft_submatrices(n, tuple(int(b) for b in bins))
    return idx, fwd, syn


# ---------------------------------------------------------------------------
# parameter containers


class PoleResidueBank:
    """Learnable rational transfer function K(s) = sum_n beta_n/(s - mu_n).

    pole_mode "per_pair" gives every (out, in) channel pair its own poles
    (shape [c_out, c_in, n]); "shared" uses one pole set for all pairs with
    per-pair residues.
    """

    def __init__(self, c_out, c_in, n_modes, pole_mode="per_pair", prefix="bank"):
        if pole_mode not in ("per_pair", "shared"):
            raise ValueError(f"unknown pole_mode {pole_mode!r}")
        self.c_out, self.c_in, self.n_modes = c_out, c_in, n_modes
        self.pole_mode = pole_mode
        pole_shape = (n_modes,) if pole_mode == "shared" else (c_out, c_in, n_modes)
        self.rho = Tensor(np.zeros(pole_shape), requires_grad=True,
                          name=f"{prefix}.rho")
        self.theta = Tensor(np.zeros(pole_shape), requires_grad=True,
                            name=f"{prefix}.theta")
        self.beta_re = Tensor(np.zeros((c_out, c_in, n_modes)), requires_grad=True,
                              name=f"{prefix}.beta_re")
        self.beta_im = Tensor(np.zeros((c_out, c_in, n_modes)), requires_grad=True,
                              name=f"{prefix}.beta_im")

    def initialize(self, rng, horizon, residue_scale):
        re = rng.uniform(-3.0, -0.1, size=self.rho.shape)
        self.rho.data[...] = np.log(np.expm1(-re))  # softplus inverse
        width = np.pi * self.n_modes / horizon
        self.theta.data[...] = rng.uniform(-width, width, size=self.theta.shape)
        self.beta_re.data[...] = residue_scale * rng.standard_normal(self.beta_re.shape)
        self.beta_im.data[...] = residue_scale * rng.standard_normal(self.beta_im.shape)

    def poles(self):
        return ad.as_complex(ad.neg(ad.softplus(self.rho)), self.theta)

    def residues(self):
        return ad.as_complex(self.beta_re, self.beta_im)

    def parameters(self):
        return [self.rho, self.theta, self.beta_re, self.beta_im]


class SpectralMultiplier:
    """Free Fourier weights on signed modes, one slot per (out, in) pair."""

    def __init__(self, c_out, c_in, modes, prefix="spec"):
        self.c_out, self.c_in = c_out, c_in
        self.modes = tuple(int(m) for m in modes)
        bins = tuple(2 * m - 1 for m in self.modes)
        self.h_re = Tensor(np.zeros((c_out, c_in) + bins), requires_grad=True,
                           name=f"{prefix}.h_re")
        self.h_im = Tensor(np.zeros((c_out, c_in) + bins), requires_grad=True,
                           name=f"{prefix}.h_im")

    def initialize(self, rng, scale):
        self.h_re.data[...] = scale * rng.standard_normal(self.h_re.shape)
        self.h_im.data[...] = scale * rng.standard_normal(self.h_im.shape)

    def weights(self):
        return ad.as_complex(self.h_re, self.h_im)

    def parameters(self):
        return [self.h_re, self.h_im]

    @classmethod
    def from_values(cls, values, modes):
        values = np.asarray(values, dtype=np.complex128)
        mult = cls(values.shape[0], values.shape[1], modes)
        mult.h_re.data[...] = values.real
        mult.h_im.data[...] = values.imag
        return mult


# ---------------------------------------------------------------------------
# kernel applications


def _as_tensor(v):
    return v if isinstance(v, Tensor) else Tensor(v)


def _flatten_trailing(v, axis):
    """Move ``axis`` to position 2 and flatten everything after it."""
    v = ad.moveaxis(v, axis, 2) if axis != 2 else v
    shape = v.shape
    rest = int(np.prod(shape[3:])) if len(shape) > 3 else 1
    flat = ad.reshape(v, shape[:3] + (rest,)) if len(shape) != 4 else v
    return flat, shape


def _restore_trailing(out, shape, axis, c_out):
    target = (shape[0], c_out) + shape[2:]
    out = ad.reshape(out, target)
    return ad.moveaxis(out, 2, axis) if axis != 2 else out


def _alpha_coefficients(flat, n):
    """Exponential-expansion coefficients alpha = DFT(v)/n of (b,c,n,rest)."""
    return ad.matm(Tensor(dft_matrix(n)), flat, axis=2) * (1.0 / n)


def _transient_from_alpha(alpha, bank, omega, t_nodes):
    b, c_in, n, rest = alpha.shape
    mu = bank.poles()
    beta = bank.residues()
    i_omega = Tensor(1j * omega)
    if bank.pole_mode == "shared":
        # R[n,l] = 1/(mu_n - i w_l); pole sums are plain GEMMs
        denom = ad.sub(ad.reshape(mu, (bank.n_modes, 1)), ad.reshape(i_omega, (1, n)))
        R = ad.div(Tensor(np.ones((bank.n_modes, n))), denom)
        S = ad.matm(R, alpha, axis=2)                     # [b, ci, N, rest]
        beta_x = ad.expand(ad.reshape(beta, beta.shape + (1,)),
                           (bank.c_out, c_in, bank.n_modes, rest))
        D = ad.pair_mix(beta_x, S)                        # [b, co, N, rest]
        E = ad.exp(ad.mul(ad.reshape(mu, (1, bank.n_modes)),
                          Tensor(t_nodes[:, None])))      # [n, N]
        return ad.matm(E, D, axis=2)                      # [b, co, n, rest]
    denom = ad.sub(ad.reshape(mu, mu.shape + (1,)),
                   ad.reshape(i_omega, (1, 1, 1, n)))
    Wt = ad.div(ad.reshape(beta, beta.shape + (1,)), denom)  # [co,ci,N,l]
    G = ad.einsum2("oinl,bilr->boinr", Wt, alpha)
    E = ad.exp(ad.mul(ad.reshape(mu, mu.shape + (1,)),
                      Tensor(t_nodes[None, None, None, :])))  # [co,ci,N,t]
    return ad.einsum2("oint,boinr->botr", E, G)


def _steady_from_alpha(alpha, bank, omega):
    b, c_in, n, rest = alpha.shape
    mu = bank.poles()
    beta = bank.residues()
    i_omega = Tensor(1j * omega)
    if bank.pole_mode == "shared":
        denom = ad.sub(ad.reshape(i_omega, (1, n)), ad.reshape(mu, (bank.n_modes, 1)))
        Kw = ad.matm(ad.moveaxis(ad.div(Tensor(np.ones((bank.n_modes, n))),
                                        denom), 0, 1),
                     beta, axis=2)                        # [co, ci, n]
    else:
        denom = ad.sub(ad.reshape(i_omega, (1, 1, 1, n)),
                       ad.reshape(mu, mu.shape + (1,)))
        Kw = ad.tsum(ad.div(ad.reshape(beta, beta.shape + (1,)), denom), axis=2)
    steady_f = ad.pair_mix(ad.expand(ad.reshape(Kw, Kw.shape + (1,)),
                                     (bank.c_out, c_in, n, rest)), alpha)
    return ad.matm(Tensor(np.conj(dft_matrix(n))), steady_f, axis=2)


def lno_kernel_complex(v, bank, step, axis=2):
    """(transient, steady) complex Tensors of the pole-residue kernel."""
    v = _as_tensor(v)
    flat, shape = _flatten_trailing(v, axis)
    if flat.shape[1] != bank.c_in:
        raise ValueError(f"latent has {flat.shape[1]} channels, "
                         f"bank expects {bank.c_in}")
    n = flat.shape[2]
    omega = angular_frequencies(n, step)
    t_nodes = step * np.arange(n)
    alpha = _alpha_coefficients(flat, n)
    transient = _transient_from_alpha(alpha, bank, omega, t_nodes)
    steady = _steady_from_alpha(alpha, bank, omega)
    restore = lambda z: _restore_trailing(z, shape, axis, bank.c_out)
    return restore(transient), restore(steady)


def lno_kernel_apply(v, bank, step, axis=2):
    """Real transient + steady response (Laplace-domain kernel layer)."""
    transient, steady = lno_kernel_complex(v, bank, step, axis=axis)
    return ad.real(ad.add(transient, steady))


def transient_apply(v, bank, step, axis=2):
    """Real part of the transient branch alone (the decoupled layer's pole path)."""
    v = _as_tensor(v)
    flat, shape = _flatten_trailing(v, axis)
    if flat.shape[1] != bank.c_in:
        raise ValueError(f"latent has {flat.shape[1]} channels, "
                         f"bank expects {bank.c_in}")
    n = flat.shape[2]
    alpha = _alpha_coefficients(flat, n)
    transient = _transient_from_alpha(alpha, bank, angular_frequencies(n, step),
                                      step * np.arange(n))
    return ad.real(_restore_trailing(transient, shape, axis, bank.c_out))


def spectral_conv_apply(v, mult, axes, pre_full=None):
    """DFT along axes, multiply kept modes by H, zero the rest, inverse, Re.

    Per axis the kept bins follow the stored signed-mode layout; unkept bins
    are implicitly zero because synthesis only reads the kept columns.
    pre_full optionally supplies the full DFT of v along axes[0] (shared
    with the transient branch); its kept rows are gathered instead of
    re-transformed.
    """
    v = _as_tensor(v)
    axes = tuple(axes)
    if len(axes) != len(mult.modes):
        raise ValueError("one mode count per transformed axis")
    work = v
    used_idx = []
    for k, (ax, m) in enumerate(zip(axes, mult.modes)):
        n = v.shape[ax]
        idx, bins = _mode_maps(m, n)
        used_idx.append(idx)
        if k == 0 and pre_full is not None:
            work = ad.gather(pre_full, bins, axis=ax)
        else:
            _, fwd, _ = dft_submatrices(n, m)
            work = ad.matm(Tensor(fwd), work, axis=ax)
    H = mult.weights()
    for k, idx in enumerate(used_idx):
        if len(idx) != H.shape[2 + k]:
            H = ad.gather(H, idx, axis=2 + k)
    out = ad.pair_mix(H, work)
    for ax, m in zip(reversed(axes), reversed(mult.modes)):
        n = v.shape[ax]
        _, _, syn = dft_submatrices(n, m)
        out = ad.matm(Tensor(syn), out, axis=ax)
    return ad.real(out)


def pair_affine(v, w, bias=None):
    """Pointwise channel map W v + b along axis 1."""
    out = ad.matm(w, v, axis=1)
    if bias is not None:
        extra = (1,) * (len(out.shape) - 2)
        out = ad.add(out, ad.reshape(bias, (1, bias.shape[0]) + extra))
    return out


def alno_layer_apply(v, bank, mult, w, bias=None, activation="gelu",
                     time_axis=2, spectral_axes=(2,), time_step=None):
    """sigma(transient + spectral_conv + W v); any kernel branch may be None.

    When the first spectral axis is the time axis the full time-DFT is
    computed once and shared: the transient reads all bins, the spectral
    branch gathers its kept ones.
    """
    v = _as_tensor(v)
    total = pair_affine(v, w, bias)
    pre_full = None
    if spectral_axes and spectral_axes[0] == time_axis and mult is not None:
        n = v.shape[time_axis]
        pre_full = ad.matm(Tensor(dft_matrix(n)), v, axis=time_axis)
    if mult is not None:
        total = ad.add(total, spectral_conv_apply(v, mult, spectral_axes,
                                                  pre_full=pre_full))
    if bank is not None:
        if time_step is None:
            raise ValueError("transient branch needs the time step")
        if pre_full is not None:
            n = v.shape[time_axis]
            flat, shape = _flatten_trailing(pre_full * (1.0 / n), time_axis)
            trans = _transient_from_alpha(flat, bank,
                                          angular_frequencies(n, time_step),
                                          time_step * np.arange(n))
            total = ad.add(total, ad.real(
                _restore_trailing(trans, shape, time_axis, bank.c_out)))
        else:
            total = ad.add(total, transient_apply(v, bank, time_step,
                                                  axis=time_axis))
    if activation == "gelu":
        return ad.gelu(total)
    if activation in (None, "identity"):
        return total
    raise ValueError(f"unknown activation {activation!r}")


def lno_layer_apply(v, bank, w, bias=None, activation="gelu", time_axis=2,
                    time_step=None):
    """sigma(full pole-residue kernel + W v): the coupled-branch layer."""
    v = _as_tensor(v)
    total = ad.add(pair_affine(v, w, bias),
                   lno_kernel_apply(v, bank, time_step, axis=time_axis))
    if activation == "gelu":
        return ad.gelu(total)
    return total


def bank_steady_multiplier(bank, n, step):
    """K(i w_l) per grid bin as numpy values (oracle/test helper)."""
    with ad.no_grad():
        mu = bank.poles().data
        beta = bank.residues().data
    omega = angular_frequencies(n, step)
    if bank.pole_mode == "shared":
        return np.sum(beta[..., None] / (1j * omega[None, None, None, :]
                                         - mu[None, None, :, None]), axis=2)
    return np.sum(beta[..., None] / (1j * omega[None, None, None, :]
                                     - mu[..., None]), axis=2)


def multiplier_matching_bank(bank, n, step):
    """SpectralMultiplier holding K(i w_l) on every bin of an n-point grid.

    Realizes the steady/spectral equivalence: a conv with these weights (all
    modes kept) reproduces the bank's steady-state branch.
    """
    m = max_modes(n)
    idx, bins = _mode_maps(m, n)
    K = bank_steady_multiplier(bank, n, step)
    vals = np.zeros((bank.c_out, bank.c_in, 2 * m - 1), dtype=np.complex128)
    vals[:, :, idx] = K[:, :, bins]
    return SpectralMultiplier.from_values(vals, (m,))
