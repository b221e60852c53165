"""Physics-informed objective: data + PDE + IC + BC terms, causally weighted.

Norm convention: the squared "discrete L2 norm" of a grid field is the mean
of squares over its nodes, and every loss component is the mean of those
norms over its batch. This keeps component magnitudes comparable across
resolutions (the Darcy residual grid is 31^2..61^2 while its data grid is
11^2) so one set of lambda weights serves all benchmarks.

The PDE component is always assembled from per-time-slice means so that the
causally weighted loss with schedule "none" is bitwise equal to the
unweighted one. Components with zero weight are skipped entirely; in the
physics-only regime label tensors never enter the compute graph.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor
from .derivatives import grid_derivative
from .residuals import pde_residual
from .tcw import TcwSchedule, tcw_weights


@dataclass(frozen=True)
class LossWeights:
    lam_data: float = 10.0
    lam_pde: float = 1.0
    lam_ic: float = 5.0
    lam_bc: float = 5.0

    def __post_init__(self):
        if min(self.lam_data, self.lam_pde, self.lam_ic, self.lam_bc) < 0:
            raise ValueError("loss weights must be non-negative")

    @property
    def physics_on(self):
        return self.lam_pde > 0 or self.lam_ic > 0 or self.lam_bc > 0


# ---------------------------------------------------------------------------
# mollifiers (hard constraints)


@lru_cache(maxsize=32)
def _mollifier_cached(kind, key):
    if kind == "darcy":
        x = np.linspace(0.0, 1.0, key[0])
        m = np.outer(np.sin(np.pi * x), np.sin(np.pi * x))
        m[0, :] = m[-1, :] = 0.0  # sin(pi) is 1e-16, force the hard constraint
        m[:, 0] = m[:, -1] = 0.0
        return m
    if kind == "rd_task_b":
        nt, nx = key
        t = np.linspace(0.0, 1.0, nt)
        x = np.linspace(0.0, 1.0, nx)
        m = np.outer(np.sin(0.5 * np.pi * t), np.sin(np.pi * x))
        m[0, :] = 0.0
        m[:, 0] = m[:, -1] = 0.0
        return m
    raise ValueError(f"no mollifier named {kind!r}")


def mollifier_values(bench, which="phys"):
    if bench.mollifier is None:
        return None
    if bench.mollifier == "darcy":
        n = bench.space[0].n if which == "phys" else bench.data_space[0].n
        return _mollifier_cached("darcy", (n, n))
    return _mollifier_cached("rd_task_b", (bench.time.n, bench.space[0].n))


def apply_mollifier(raw, bench, which="phys"):
    """Multiply by the benchmark's envelope; identity when none is defined."""
    m = mollifier_values(bench, which)
    if m is None:
        return raw
    if isinstance(raw, Tensor):
        return ad.mul(raw, Tensor(m[None, ...] if len(raw.shape) == 3 else m))
    return raw * (m[None, ...] if raw.ndim == 3 else m)


# ---------------------------------------------------------------------------
# component losses


def _msq(x):
    return ad.tmean(ad.square(x))


def _forward_field(model, enc, bench, which="phys"):
    out = model.forward(enc)
    if out.shape[1] != 1:
        raise ValueError("expected a single output channel")
    pred = ad.reshape(out, (out.shape[0],) + out.shape[2:])
    return apply_mollifier(pred, bench, which)


def _pde_loss(pred, bench, raw, weights_t):
    r = pde_residual(pred, bench.spec(), raw, bench.grid_info())
    r2 = ad.square(r)
    if bench.time is None:
        return _msq(r)
    slice_means = ad.tmean(r2, axis=(0, 2))
    return ad.tmean(ad.mul(Tensor(weights_t), slice_means))


def _ic_loss(pred, bench, raw):
    name = bench.name
    if name == "darcy":
        return None
    if name == "rd_task_b":
        return _msq(pred[:, 0, :])
    return _msq(ad.sub(pred[:, 0, :], Tensor(raw["u0"])))


def _bc_loss(pred, bench, raw):
    name = bench.name
    if name in ("burgers", "diffusion"):
        return None  # exclusive periodic grid: the constraint is structural
    if name == "rd_task_a":
        return _msq(ad.sub(pred[:, :, 0], pred[:, :, -1]))
    if name == "rd_task_b":
        return ad.add(_msq(pred[:, :, 0]), _msq(pred[:, :, -1])) * 0.5
    if name == "darcy":
        edges = [pred[:, 0, :], pred[:, -1, :], pred[:, :, 0], pred[:, :, -1]]
        total = _msq(edges[0])
        for e in edges[1:]:
            total = ad.add(total, _msq(e))
        return total * 0.25
    # forced KdV: the three well-posedness traces
    h_x = bench.space[0].step
    ux = grid_derivative(pred, axis=2, order=1, h=h_x)
    parts = [_msq(ad.sub(pred[:, :, -1], Tensor(raw["u_right"]))),
             _msq(ad.sub(pred[:, :, 0], Tensor(raw["u_left"]))),
             _msq(ad.sub(ux[:, :, -1], Tensor(raw["ux_right"])))]
    return (parts[0] + parts[1] + parts[2]) * (1.0 / 3.0)


def _physics_components(pred, batch, weights_t, lam):
    comps = {}
    if lam.lam_pde > 0:
        comps["pde"] = _pde_loss(pred, batch.bench, batch.raw, weights_t)
    if lam.lam_ic > 0:
        ic = _ic_loss(pred, batch.bench, batch.raw)
        if ic is not None:
            comps["ic"] = ic
    if lam.lam_bc > 0:
        bc = _bc_loss(pred, batch.bench, batch.raw)
        if bc is not None:
            comps["bc"] = bc
    return comps


def total_loss(model, paired, virtual, weights, schedule=None):
    """Weighted physics-informed objective over a paired and a virtual batch.

    Returns (scalar Tensor, component floats). Either batch may be None or
    empty, not both. Paired samples contribute the data term and physics
    terms; virtual samples contribute physics terms only. The causal
    schedule reweights every PDE term when set. Both batches share one
    model forward on the physics grid (one big batch beats two small ones
    on a single core).
    """
    paired = paired if paired is not None and paired.size else None
    virtual = virtual if virtual is not None and virtual.size else None
    if paired is None and virtual is None:
        raise ValueError("need at least one non-empty batch")
    bench = (paired or virtual).bench
    schedule = schedule or TcwSchedule("none")
    weights_t = None
    if bench.time is not None:
        weights_t = tcw_weights(schedule, bench.times)

    terms = []
    comps = {"data": 0.0, "pde": 0.0, "ic": 0.0, "bc": 0.0,
             "pde_virtual": 0.0, "ic_virtual": 0.0, "bc_virtual": 0.0}

    pred_paired = pred_virtual = None
    if weights.physics_on:
        parts = [b for b in (paired, virtual) if b is not None]
        enc = parts[0].enc_phys if len(parts) == 1 else np.concatenate(
            [b.enc_phys for b in parts], axis=0)
        pred_all = _forward_field(model, enc, bench)
        if paired is not None and virtual is not None:
            pred_paired = pred_all[:paired.size]
            pred_virtual = pred_all[paired.size:]
        elif paired is not None:
            pred_paired = pred_all
        else:
            pred_virtual = pred_all

    if paired is not None:
        if pred_paired is not None:
            for key, tensor in _physics_components(pred_paired, paired,
                                                   weights_t, weights).items():
                comps[key] = tensor.item()
                terms.append(getattr(weights, f"lam_{key}") * tensor)
        if weights.lam_data > 0:
            if paired.labels is None:
                raise ValueError("data term requested but batch has no labels")
            if paired.enc_data is not None:
                pred_data = _forward_field(model, paired.enc_data, bench, "data")
            elif pred_paired is not None:
                pred_data = pred_paired
            else:
                pred_data = _forward_field(model, paired.enc_phys, bench)
            data = _msq(ad.sub(pred_data, Tensor(paired.labels)))
            comps["data"] = data.item()
            terms.append(weights.lam_data * data)

    if pred_virtual is not None:
        for key, tensor in _physics_components(pred_virtual, virtual,
                                               weights_t, weights).items():
            comps[f"{key}_virtual"] = tensor.item()
            terms.append(getattr(weights, f"lam_{key}") * tensor)

    if not terms:
        raise ValueError("all loss components are switched off")
    total = terms[0]
    for t in terms[1:]:
        total = ad.add(total, t)
    comps["total"] = total.item()
    return total, comps


def predict(model, bench, samples):
    """Mollified predictions on the physics grid, batched, gradient-free."""
    from ..benchmarks import build_batch
    batch = build_batch(bench, samples, with_labels=False)
    with ad.no_grad():
        return _forward_field(model, batch.enc_phys, bench).data
