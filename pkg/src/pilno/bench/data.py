"""Dataset generation and the on-disk container.

Paired samples are produced by the reference solvers on their fine grids
and restricted to the operator grids by node selection; virtual samples
draw the same input priors without ever computing a solution. Everything is
reproducible bit-exactly from (spec, seed): instance i uses the numpy
Generator stream seeded with (seed, i).

Container format: a directory holding manifest.json plus one flat binary
file per tensor (64-bit little-endian, row-major; shapes live in the
manifest). Per-sample provenance (length scale, seed, family, coefficients)
is recorded in the manifest.
"""

import hashlib
import json
import os

import numpy as np

from ..benchmarks import Sample, make_benchmark
from ..grf import ExpSinKernelParams, sample_darcy_coefficient, sample_periodic_field
from ..solvers import downsample, fkdv, solve_burgers, solve_darcy, solve_diffusion, \
    solve_reaction_diffusion
from ..solvers.timestep import solve_burgers_batch, solve_diffusion_batch, \
    solve_rd_batch

FINE_N = {"burgers": 128, "diffusion": 128, "rd_task_a": 151, "rd_task_b": 151}
ELL_GRID = tuple(np.round(np.arange(0.5, 5.01, 0.5), 1))


def _restrict_1d(values, n_from, n_to, endpoint):
    if endpoint:
        stride = (n_from - 1) // (n_to - 1)
        ok = stride * (n_to - 1) == n_from - 1
    else:
        stride = n_from // n_to
        ok = stride * n_to == n_from
    if not ok:
        raise ValueError(f"cannot restrict {n_from} nodes to {n_to}")
    return values[::stride]


def make_paired_sample(bench, index, seed, ell=0.5, sigma=0.2, solve=True,
                       fkdv_ranges=None):
    """One (input, solution) pair for a benchmark at length scale ell."""
    rng_seed = (seed, index)
    name = bench.name
    if name in ("burgers", "diffusion", "rd_task_a", "rd_task_b"):
        n_fine = FINE_N[name]
        endpoint = name.startswith("rd")
        params = ExpSinKernelParams(sigma, ell, 1.0)
        # rd grids store the duplicated periodic endpoint; draw unique nodes
        draw = sample_periodic_field(n_fine - 1 if endpoint else n_fine,
                                     params, rng_seed)
        fine_input = draw.values
        nx = bench.space[0].n
        label = None
        if name == "burgers":
            inp = _restrict_1d(fine_input, n_fine, nx, endpoint=False)
            if solve:
                traj = solve_burgers(fine_input, nu=bench.spec().coefficients["nu"],
                                     n_snapshots=bench.time.n)
                label = downsample(traj, n_space=nx).values
            inputs = {"u0": inp}
        elif name == "diffusion":
            inp = _restrict_1d(fine_input, n_fine, nx, endpoint=False)
            if solve:
                traj = solve_diffusion(fine_input, D=bench.spec().coefficients["D"],
                                       n_snapshots=bench.time.n)
                label = downsample(traj, n_space=nx).values
            inputs = {"u0": inp}
        else:
            # periodic draw on the 150 unique nodes, stored inclusively
            fine_incl = np.concatenate([fine_input, fine_input[:1]])
            inp = _restrict_1d(fine_incl, n_fine, nx, endpoint=True)
            key = "u0" if name == "rd_task_a" else "f"
            if solve:
                task = "A" if name == "rd_task_a" else "B"
                arg = fine_input if task == "A" else fine_incl
                traj = solve_reaction_diffusion(arg, task=task,
                                                n_snapshots=bench.time.n,
                                                **dict(bench.spec().coefficients))
                label = downsample(traj, n_space=nx).values
            inputs = {key: inp}
        return Sample(name, inputs, label,
                      meta={"ell": ell, "seed": list(rng_seed), "sigma": sigma})
    if name == "darcy":
        a = sample_darcy_coefficient(bench.fine_n, rng_seed)
        label = label_c = None
        if solve:
            u = solve_darcy(a)
            label = downsample(u, n_space=bench.data_space[0].n).values
            label_c = downsample(u, n_space=bench.space[0].n).values
        return Sample(name, {"a_fine": a.values}, label,
                      aux={} if label_c is None else {"label_colloc": label_c},
                      meta={"seed": list(rng_seed)})
    if name == "fkdv":
        inst = fkdv.sample_instance(index, seed, n_x=bench.space[0].n,
                                    n_t=bench.time.n, ranges=fkdv_ranges)
        inputs = {"f_x": inst.forcing_dx, "u0": inst.initial,
                  "u_right": inst.trace_u_right, "u_left": inst.trace_u_left,
                  "ux_right": inst.trace_ux_right,
                  "alpha": inst.coeffs["alpha"], "beta": inst.coeffs["beta"]}
        return Sample(name, inputs, inst.solution if solve else None,
                      meta={"family": inst.family, "seed": [seed, index],
                            "coeffs": inst.coeffs})
    raise ValueError(f"unknown benchmark {name!r}")


def make_paired_set(bench, count, seed, ell=0.5, sigma=0.2, start=0, solve=True,
                    fkdv_ranges=None):
    name = bench.name
    if not solve or count == 0 or name in ("darcy", "fkdv"):
        return [make_paired_sample(bench, start + i, seed, ell=ell, sigma=sigma,
                                   solve=solve, fkdv_ranges=fkdv_ranges)
                for i in range(count)]
    # time steppers vectorize across samples (one pass instead of count)
    n_fine = FINE_N[name]
    endpoint = name.startswith("rd")
    params = ExpSinKernelParams(sigma, ell, 1.0)
    draws = np.stack([sample_periodic_field(n_fine - 1 if endpoint else n_fine,
                                            params, (seed, start + i)).values
                      for i in range(count)])
    nx = bench.space[0].n
    coeffs = dict(bench.spec().coefficients)
    if name == "burgers":
        traj = solve_burgers_batch(draws, nu=coeffs["nu"],
                                   n_snapshots=bench.time.n)
        key, inputs = "u0", draws[:, ::n_fine // nx]
    elif name == "diffusion":
        traj = solve_diffusion_batch(draws, D=coeffs["D"],
                                     n_snapshots=bench.time.n)
        key, inputs = "u0", draws[:, ::n_fine // nx]
    else:
        task = "A" if name == "rd_task_a" else "B"
        incl = np.concatenate([draws, draws[:, :1]], axis=1)
        traj = solve_rd_batch(draws if task == "A" else incl, task=task,
                              n_snapshots=bench.time.n, **coeffs)
        key = "u0" if task == "A" else "f"
        inputs = incl[:, ::(n_fine - 1) // (nx - 1)]
    stride_x = n_fine // nx if not endpoint else (n_fine - 1) // (nx - 1)
    labels = traj[:, :, ::stride_x]
    return [Sample(name, {key: inputs[i]}, labels[i],
                   meta={"ell": ell, "seed": [seed, start + i], "sigma": sigma})
            for i in range(count)]


def make_virtual_set(bench, count, seed, ell_set=ELL_GRID, sigma=0.2,
                     fkdv_ranges=None):
    """Label-free inputs; GRF kinds cycle the length-scale set."""
    name = bench.name
    out = []
    if name in ("burgers", "diffusion", "rd_task_a", "rd_task_b"):
        key = "f" if name == "rd_task_b" else "u0"
        endpoint = name.startswith("rd")
        nx = bench.space[0].n
        if count > 0 and not ell_set:
            raise ValueError("GRF virtual inputs need length scales")
        for i in range(count):
            ell = ell_set[i % len(ell_set)]
            f = sample_periodic_field(nx, ExpSinKernelParams(sigma, ell, 1.0),
                                      (seed, i), endpoint=endpoint)
            out.append(Sample(name, {key: f.values}, None,
                              meta={"ell": ell, "seed": [seed, i], "virtual": True}))
        return out
    if name == "darcy":
        for i in range(count):
            a = sample_darcy_coefficient(bench.fine_n, (seed, i))
            out.append(Sample(name, {"a_fine": a.values}, None,
                              meta={"seed": [seed, i], "virtual": True}))
        return out
    if name == "fkdv":
        return [Sample("fkdv",
                       make_paired_sample(bench, i, seed, solve=False,
                                          fkdv_ranges=fkdv_ranges).inputs,
                       None, meta={"seed": [seed, i], "virtual": True,
                                   "family": fkdv.FAMILIES[i % 3]})
                for i in range(count)]
    raise ValueError(f"unknown benchmark {name!r}")


# ---------------------------------------------------------------------------
# container I/O


def _tensor_keys(samples):
    keys = sorted(samples[0].inputs)
    for s in samples:
        if sorted(s.inputs) != keys:
            raise ValueError("samples disagree on input fields")
    return keys


def save_dataset(path, samples, bench_meta=None):
    """Write samples as manifest.json + per-field .bin tensors."""
    os.makedirs(path, exist_ok=True)
    keys = _tensor_keys(samples)
    tensors = {}
    for key in keys:
        tensors[f"input_{key}"] = np.stack(
            [np.asarray(s.inputs[key], dtype=np.float64) for s in samples])
    if all(s.label is not None for s in samples):
        tensors["label"] = np.stack(
            [np.asarray(s.label, dtype=np.float64) for s in samples])
    aux_keys = sorted(samples[0].aux) if samples[0].aux else []
    for key in aux_keys:
        tensors[f"aux_{key}"] = np.stack(
            [np.asarray(s.aux[key], dtype=np.float64) for s in samples])
    entries = {}
    for key, arr in tensors.items():
        fname = f"{key}.bin"
        arr.astype("<f8").tofile(os.path.join(path, fname))
        entries[key] = {"file": fname, "shape": list(arr.shape),
                        "dtype": "<f8", "order": "C"}
    manifest = {
        "format_version": 1,
        "benchmark": samples[0].benchmark,
        "count": len(samples),
        "tensors": entries,
        "per_sample": [s.meta for s in samples],
        "meta": bench_meta or {},
    }
    tmp = os.path.join(path, "manifest.json.tmp")
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=1, default=float)
    os.replace(tmp, os.path.join(path, "manifest.json"))
    return manifest


def load_dataset(path):
    with open(os.path.join(path, "manifest.json")) as fh:
        manifest = json.load(fh)
    arrays = {}
    for key, entry in manifest["tensors"].items():
        flat = np.fromfile(os.path.join(path, entry["file"]), dtype=entry["dtype"])
        arrays[key] = flat.reshape(entry["shape"])
    samples = []
    for i in range(manifest["count"]):
        inputs = {k[len("input_"):]: arrays[k][i] for k in arrays
                  if k.startswith("input_")}
        for name in ("alpha", "beta"):
            if name in inputs and inputs[name].ndim == 0:
                inputs[name] = float(inputs[name])
        aux = {k[len("aux_"):]: arrays[k][i] for k in arrays if k.startswith("aux_")}
        label = arrays["label"][i] if "label" in arrays else None
        samples.append(Sample(manifest["benchmark"], inputs, label, aux=aux,
                              meta=manifest["per_sample"][i]))
    return samples, manifest


def dataset_hash(path):
    """SHA-256 over the manifest and every tensor file (provenance)."""
    h = hashlib.sha256()
    with open(os.path.join(path, "manifest.json"), "rb") as fh:
        h.update(fh.read())
    with open(os.path.join(path, "manifest.json")) as fh:
        manifest = json.load(fh)
    for key in sorted(manifest["tensors"]):
        with open(os.path.join(path, manifest["tensors"][key]["file"]), "rb") as fh:
            while True:
                chunk = fh.read(1 << 20)
                if not chunk:
                    break
                h.update(chunk)
    return h.hexdigest()
