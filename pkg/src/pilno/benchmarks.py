"""Benchmark registry: grids, specs, input encodings, batches.

Each benchmark couples a PDE spec with the grids the operator sees and the
way raw input fields become model channels. Encoders follow the usual
operator-learning recipe: broadcast 1D inputs over the other axis and append
normalized grid coordinates; the forced KdV uses its seven-channel mapping
[u(L,t), u(-L,t), u_x(L,t), u(x,0), f_x, alpha, beta] (paper-equation
order).

Darcy is the one two-grid benchmark: supervision lives on a coarse data
grid while the residual is collocated on an intermediate grid, both
restricted from the fine solver field by exact node subsampling (the
coefficient is piecewise constant; interpolation would blur the interface).
"""

from dataclasses import dataclass, field

import numpy as np

from .fields import Axis
from .physics.residuals import GridInfo, PdeSpec

BENCHMARKS = ("burgers", "diffusion", "rd_task_a", "rd_task_b", "darcy", "fkdv")


@dataclass
class Sample:
    """One problem instance: named raw input arrays, optional label."""

    benchmark: str
    inputs: dict
    label: np.ndarray | None = None
    aux: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)


@dataclass
class Batch:
    bench: "BenchmarkDef"
    enc_phys: np.ndarray
    raw: dict
    labels: np.ndarray | None = None
    enc_data: np.ndarray | None = None  # only differs on two-grid benchmarks
    size: int = 0


@dataclass(frozen=True)
class BenchmarkDef:
    name: str
    equation: str
    boundary: str
    coefficients: tuple
    mollifier: str | None
    time: Axis | None
    space: tuple
    data_space: tuple | None = None  # darcy's coarse supervision grid
    fine_n: int | None = None        # darcy's fine solver resolution
    in_channels: int = 3

    # -- derived ------------------------------------------------------------

    @property
    def grid(self):
        shape = tuple(ax.n for ax in self.space)
        return shape if self.time is None else (self.time.n,) + shape

    @property
    def data_grid(self):
        if self.data_space is None:
            return self.grid
        return tuple(ax.n for ax in self.data_space)

    def spec(self):
        return PdeSpec(self.equation, dict(self.coefficients), self.boundary)

    def grid_info(self):
        return GridInfo(None if self.time is None else self.time.step,
                        tuple(ax.step for ax in self.space),
                        tuple(not ax.endpoint for ax in self.space))

    @property
    def times(self):
        return None if self.time is None else self.time.coords()

    @property
    def layout(self):
        return "spatial_2d" if self.time is None else "space_time_2d"

    @property
    def seq_step(self):
        return self.space[-1].step if self.time is None else self.time.step


def make_benchmark(name, nt=None, nx=None, n_data=11, n_colloc=61, n_fine=241,
                   L=5.0, T=5.0):
    """Benchmark definition at the requested resolution."""
    if name in ("burgers", "diffusion"):
        nt = nt or 26
        nx = nx or 32
        coeffs = (("nu", 0.01),) if name == "burgers" else (("D", 0.01),)
        return BenchmarkDef(
            name=name, equation="burgers" if name == "burgers" else "diffusion",
            boundary="periodic", coefficients=coeffs, mollifier=None,
            time=Axis(0.0, 1.0, nt), space=(Axis(0.0, 1.0, nx, endpoint=False),))
    if name in ("rd_task_a", "rd_task_b"):
        nt = nt or 51
        nx = nx or 51
        return BenchmarkDef(
            name=name, equation="reaction_diffusion",
            boundary="periodic" if name == "rd_task_a" else "dirichlet",
            coefficients=(("D", 0.01), ("k", 0.01)),
            mollifier="rd_task_b" if name == "rd_task_b" else None,
            time=Axis(0.0, 1.0, nt), space=(Axis(0.0, 1.0, nx),))
    if name == "darcy":
        ax_c = Axis(0.0, 1.0, n_colloc)
        ax_d = Axis(0.0, 1.0, n_data)
        return BenchmarkDef(
            name=name, equation="darcy", boundary="dirichlet", coefficients=(),
            mollifier="darcy", time=None, space=(ax_c, ax_c),
            data_space=(ax_d, ax_d), fine_n=n_fine)
    if name == "fkdv":
        nt = nt or 100
        nx = nx or 100
        return BenchmarkDef(
            name=name, equation="fkdv", boundary="fkdv_traces", coefficients=(),
            mollifier=None, time=Axis(0.0, T, nt),
            space=(Axis(-L, L, nx),), in_channels=7)
    raise ValueError(f"unknown benchmark {name!r}")


# ---------------------------------------------------------------------------
# encoding


def _coords_2d(axis_a, axis_b):
    A, B = np.meshgrid(axis_a.coords(), axis_b.coords(), indexing="ij")
    return A, B


def _restrict(values, n_from, n_to):
    stride = (n_from - 1) // (n_to - 1)
    if stride * (n_to - 1) != n_from - 1:
        raise ValueError(f"cannot restrict {n_from} inclusive nodes to {n_to}")
    return values[..., ::stride, ::stride] if values.ndim >= 2 else values[::stride]


def encode_batch(bench, samples, which="phys"):
    """Stack samples into the (batch, c_in, *grid) model input array."""
    if bench.name in ("burgers", "diffusion", "rd_task_a", "rd_task_b"):
        key = "f" if bench.name == "rd_task_b" else "u0"
        fn = np.stack([np.asarray(s.inputs[key], dtype=np.float64) for s in samples])
        nt, nx = bench.time.n, bench.space[0].n
        if fn.shape[1] != nx:
            raise ValueError(f"{bench.name} input has {fn.shape[1]} nodes, "
                             f"expected {nx}")
        T, X = _coords_2d(bench.time, bench.space[0])
        b = fn.shape[0]
        out = np.empty((b, 3, nt, nx))
        out[:, 0] = fn[:, None, :]
        out[:, 1] = X
        out[:, 2] = T
        return out
    if bench.name == "darcy":
        space = bench.space if which == "phys" else bench.data_space
        n = space[0].n
        a = np.stack([_restrict(np.asarray(s.inputs["a_fine"], dtype=np.float64),
                                bench.fine_n, n) for s in samples])
        Y, X = _coords_2d(space[0], space[1])
        out = np.empty((a.shape[0], 3, n, n))
        out[:, 0] = a
        out[:, 1] = X
        out[:, 2] = Y
        return out
    # forced KdV: seven channels in the operator-mapping order
    nt, nx = bench.time.n, bench.space[0].n
    b = len(samples)
    out = np.empty((b, 7, nt, nx))
    for i, s in enumerate(samples):
        out[i, 0] = np.asarray(s.inputs["u_right"])[:, None]
        out[i, 1] = np.asarray(s.inputs["u_left"])[:, None]
        out[i, 2] = np.asarray(s.inputs["ux_right"])[:, None]
        out[i, 3] = np.asarray(s.inputs["u0"])[None, :]
        out[i, 4] = np.asarray(s.inputs["f_x"])
        out[i, 5] = s.inputs["alpha"]
        out[i, 6] = s.inputs["beta"]
    return out


def physics_inputs(bench, samples):
    """Raw arrays the residual and IC/BC losses read."""
    raw = {}
    name = bench.name
    if name in ("burgers", "diffusion", "rd_task_a"):
        raw["u0"] = np.stack([s.inputs["u0"] for s in samples])
        if name == "rd_task_a":
            raw["f"] = None
    elif name == "rd_task_b":
        raw["f"] = np.stack([s.inputs["f"] for s in samples])
    elif name == "darcy":
        n = bench.space[0].n
        raw["a"] = np.stack([_restrict(np.asarray(s.inputs["a_fine"]),
                                       bench.fine_n, n) for s in samples])
        raw["f"] = 1.0
    else:
        raw["f_x"] = np.stack([s.inputs["f_x"] for s in samples])
        raw["alpha"] = np.array([s.inputs["alpha"] for s in samples])
        raw["beta"] = np.array([s.inputs["beta"] for s in samples])
        raw["u0"] = np.stack([s.inputs["u0"] for s in samples])
        raw["u_right"] = np.stack([s.inputs["u_right"] for s in samples])
        raw["u_left"] = np.stack([s.inputs["u_left"] for s in samples])
        raw["ux_right"] = np.stack([s.inputs["ux_right"] for s in samples])
    return raw


def build_batch(bench, samples, with_labels=True):
    if not samples:
        raise ValueError("empty batch")
    enc_phys = encode_batch(bench, samples, which="phys")
    enc_data = None
    if bench.data_space is not None:
        enc_data = encode_batch(bench, samples, which="data")
    labels = None
    if with_labels:
        if any(s.label is None for s in samples):
            raise ValueError("batch requested labels but samples carry none")
        labels = np.stack([np.asarray(s.label, dtype=np.float64) for s in samples])
    return Batch(bench=bench, enc_phys=enc_phys, raw=physics_inputs(bench, samples),
                 labels=labels, enc_data=enc_data, size=len(samples))
