"""Experiment orchestration: training runs, sweeps, heatmaps, reports.

Every cell (one trained model, one evaluation) is a pure function of
(preset, variant, n_train, ell_train, seed, dataset seeds), so sweeps are
resumable: completed cells persist as JSON keyed by their configuration
hash and are skipped on rerun. Reports store raw per-case errors next to
the aggregates; means are recomputable from the raw values exactly.
Datasets are cached on disk by their generation signature and hash-checked
so test pools stay disjoint from training pools.
"""

import hashlib
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import data as dataio
from .metrics import relative_l2
from .presets import benchmark_preset, variant_setup
from ..train import TrainConfig, TrainingDiverged, evaluate, init_params, train_run

def output_root():
    """Default output root; the environment variable wins."""
    return os.environ.get("PILNO_OUTPUT_ROOT", "pilno_runs")


@dataclass
class ExperimentConfig:
    benchmark: str
    variant: str = "PILNO"
    scale: str = "desk"
    n_train: tuple = (25,)
    ell_train: tuple = (0.5,)
    ell_test: tuple = (0.5,)
    seeds: tuple = (0,)
    epochs: int | None = None
    n_virtual: int | None = None
    n_test: int | None = None
    overrides: dict = field(default_factory=dict)
    model_overrides: dict = field(default_factory=dict)
    output_dir: str | None = None
    workers: int = 1

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("need at least one seed")
        if any(n < 1 for n in self.n_train):
            raise ValueError("training-set sizes must be >= 1")

    def preset(self):
        p = benchmark_preset(self.benchmark, self.scale)
        if self.epochs or self.n_test:
            pass
        return p

    def out(self):
        d = self.output_dir or os.path.join(output_root(), self.benchmark)
        os.makedirs(d, exist_ok=True)
        return d


def _hash_obj(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True,
                                     default=repr).encode()).hexdigest()[:16]


def _sample_fingerprints(samples):
    out = []
    for s in samples:
        h = hashlib.sha256()
        for key in sorted(s.inputs):
            h.update(np.ascontiguousarray(
                np.asarray(s.inputs[key], dtype=np.float64)).tobytes())
        out.append(h.hexdigest()[:16])
    return out


# ---------------------------------------------------------------------------
# dataset cache


POOL_SEEDS = {"train": 11_000, "test": 77_000, "val": 55_000, "virtual": 33_000}


def dataset_dir(root, benchmark, scale, kind, count, ell, seed, suffix=""):
    tag = f"{benchmark}_{scale}_{kind}_n{count}_ell{ell}_s{seed}{suffix}"
    return os.path.join(root, "datasets", tag)


def ensure_dataset(preset, kind, count, ell=None, seed=None, root=None,
                   ell_set=None):
    """Load the cached dataset or generate it; returns (samples, path).

    ell_set restricts the virtual ensemble's length-scale cycle (the
    data-efficiency protocol draws virtual inputs from the training prior;
    OOD runs keep the broad default cycle).
    """
    root = root or output_root()
    seed = POOL_SEEDS[kind] if seed is None else seed
    suffix = ""
    if kind == "virtual" and ell_set is not None:
        suffix = "_ells" + "-".join(f"{e:g}" for e in ell_set)
    path = dataset_dir(root, preset.name, preset.scale, kind, count, ell, seed,
                       suffix)
    manifest_path = os.path.join(path, "manifest.json")
    if os.path.exists(manifest_path):
        samples, _ = dataio.load_dataset(path)
        if len(samples) == count:
            return samples, path
    ranges = None
    if preset.fkdv_ranges:
        ranges = {name: (lo, hi) for name, lo, hi in preset.fkdv_ranges}
    if kind == "virtual":
        kw = {} if ell_set is None else {"ell_set": tuple(ell_set)}
        samples = dataio.make_virtual_set(preset.bench, count, seed,
                                          fkdv_ranges=ranges, **kw)
    else:
        ell_eff = 0.5 if ell is None else ell
        samples = dataio.make_paired_set(preset.bench, count, seed, ell=ell_eff,
                                         fkdv_ranges=ranges)
    meta = preset.describe()
    meta.update({"kind": kind, "ell": ell, "seed": seed,
                 "ell_set": None if ell_set is None else list(ell_set)})
    dataio.save_dataset(path, samples, bench_meta=meta)
    return samples, path


# ---------------------------------------------------------------------------
# single training cell


def run_cell(config, preset, variant, n_train, ell_train, seed, test_sets,
             overrides=None, virtual_ells=None):
    """Train one model and evaluate it on one or more test pools.

    test_sets: dict label -> (samples, dataset_path). virtual_ells restricts
    the virtual ensemble's length scales (None keeps the broad cycle).
    Returns the cell record (config echo, per-case errors, provenance).
    """
    if config.model_overrides:
        # matched-parameter variants derive from the overridden backbone
        preset = replace(preset, model=replace(preset.model,
                                               **config.model_overrides))
    model_cfg, train_cfg, n_virtual = variant_setup(preset, variant)
    if config.epochs:
        train_cfg = replace(train_cfg, epochs=config.epochs)
    if config.n_virtual is not None and variant.startswith("PILNO") \
            and variant != "PILNO_noVirtual":
        n_virtual = config.n_virtual
    for key, value in (overrides or {}).items():
        train_cfg = replace(train_cfg, **{key: value})
    train_cfg = replace(train_cfg, seed=seed, batch_size=preset.batch_size)

    train_samples, train_path = ensure_dataset(
        preset, "train", n_train, ell=ell_train,
        seed=POOL_SEEDS["train"] + (0 if ell_train is None else int(ell_train * 10)))
    virtual_samples = []
    if n_virtual:
        virtual_samples, _ = ensure_dataset(preset, "virtual", n_virtual,
                                            ell_set=virtual_ells)

    t0 = time.time()
    model = init_params(model_cfg, seed=seed)
    status = "ok"
    history_tail = None
    try:
        model, history, _ = train_run(preset.bench, model, train_cfg,
                                      train_samples, virtual_samples)
        history_tail = history.rows[-1] if len(history) else None
    except TrainingDiverged as err:
        status = f"diverged: {err}"
    wall = time.time() - t0

    record = {
        "benchmark": preset.name, "scale": preset.scale, "variant": variant,
        "n_train": n_train, "ell_train": ell_train, "seed": seed,
        "status": status, "wall_seconds": wall,
        "train_dataset": train_path,
        "train_hash": dataio.dataset_hash(train_path),
        "config": preset.describe(),
        "train_config": {"epochs": train_cfg.epochs, "batch": train_cfg.batch_size,
                         "weights": vars(train_cfg.weights),
                         "schedule": vars(train_cfg.schedule),
                         "n_virtual": n_virtual,
                         "virtual_ells": None if virtual_ells is None
                         else list(virtual_ells)},
        "final_loss": history_tail,
        "results": {},
    }
    if status == "ok":
        train_fp = set(_sample_fingerprints(train_samples))
        for label, (samples, path) in test_sets.items():
            mean, errs = evaluate(model, preset.bench, samples)
            test_fp = set(_sample_fingerprints(samples))
            record["results"][label] = {
                "mean_rel_l2": mean, "std_rel_l2": float(np.std(errs)),
                "per_case": errs, "n_cases": len(errs),
                "dataset": path, "dataset_hash": dataio.dataset_hash(path),
                "disjoint_from_train": not (train_fp & test_fp),
            }
    return record, model


def _cell_path(outdir, key):
    return os.path.join(outdir, "cells", f"{key}.json")


def _write_json_atomic(path, payload):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=1, default=float)
    os.replace(tmp, path)


def _cached_cell(outdir, key):
    path = _cell_path(outdir, key)
    if os.path.exists(path):
        with open(path) as fh:
            return json.load(fh)
    return None


def _run_cell_job(args):
    (config, variant, n_train, ell_train, seed, test_specs, overrides,
     virtual_ells) = args
    preset = benchmark_preset(config.benchmark, config.scale)
    test_sets = {}
    for label, (kind, count, ell, seed_off) in test_specs.items():
        samples, path = ensure_dataset(preset, kind, count, ell=ell, seed=seed_off)
        test_sets[label] = (samples, path)
    record, _ = run_cell(config, preset, variant, n_train, ell_train, seed,
                         test_sets, overrides, virtual_ells=virtual_ells)
    return record


def _execute_cells(config, jobs, outdir):
    """Run (or reload) each cell; failures are recorded, not raised."""
    records = []
    todo = []
    for key, args in jobs:
        cached = _cached_cell(outdir, key)
        if cached is not None:
            records.append(cached)
            continue
        todo.append((key, args))
    if config.workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = pool.map(_run_cell_job, [a for _, a in todo])
            for (key, _), record in zip(todo, results):
                _write_json_atomic(_cell_path(outdir, key), record)
                records.append(record)
    else:
        for key, args in todo:
            try:
                record = _run_cell_job(args)
            except Exception as err:  # cell failure must not sink the sweep
                record = {"status": f"failed: {err}", "cell": key,
                          "variant": args[1], "n_train": args[2],
                          "ell_train": args[3], "seed": args[4], "results": {}}
            _write_json_atomic(_cell_path(outdir, key), record)
            records.append(record)
    return records


def _aggregate(records, test_label="test"):
    """mean/std over seeds of the per-seed mean errors."""
    cells = {}
    for rec in records:
        if rec.get("status") != "ok" or test_label not in rec.get("results", {}):
            continue
        key = (rec["variant"], rec["n_train"], rec["ell_train"])
        cells.setdefault(key, []).append(rec["results"][test_label]["mean_rel_l2"])
    return {key: {"mean": float(np.mean(v)), "std": float(np.std(v)),
                  "n_seeds": len(v)} for key, v in cells.items()}


# ---------------------------------------------------------------------------
# protocols


def run_data_efficiency(config):
    """Fixed length scale, varying N_train: the data-efficiency protocol."""
    preset = benchmark_preset(config.benchmark, config.scale)
    outdir = config.out()
    ell = config.ell_train[0] if config.ell_train else preset.ell_train
    n_test = config.n_test or preset.n_test
    test_spec = {"test": ("test", n_test, ell, POOL_SEEDS["test"])}
    virtual_ells = None if ell is None else (ell,)
    jobs = []
    for n_train in config.n_train:
        for seed in config.seeds:
            args = (config, config.variant, n_train, ell, seed, test_spec,
                    config.overrides or None, virtual_ells)
            key = _hash_obj(["deff", preset.describe(),
                             config.benchmark, config.scale,
                             config.variant, n_train, ell, seed, config.epochs,
                             config.n_virtual, n_test, virtual_ells,
                             config.overrides, config.model_overrides])
            jobs.append((key, args))
    records = _execute_cells(config, jobs, outdir)
    agg = _aggregate(records)
    report = {
        "protocol": "data_efficiency", "benchmark": config.benchmark,
        "scale": config.scale, "variant": config.variant,
        "ell_train": ell, "n_train": list(config.n_train),
        "seeds": list(config.seeds),
        "curve": [{"n_train": n,
                   **agg.get((config.variant, n, ell),
                             {"mean": None, "std": None, "n_seeds": 0})}
                  for n in config.n_train],
        "cells": records,
    }
    path = os.path.join(outdir, f"data_efficiency_{config.variant}.json")
    _write_json_atomic(path, report)
    _write_curve_csv(os.path.join(outdir, f"data_efficiency_{config.variant}.csv"),
                     report["curve"])
    return report


def run_ood_heatmap(config):
    """Train per ell_train, evaluate on every ell_test: the OOD protocol."""
    preset = benchmark_preset(config.benchmark, config.scale)
    outdir = config.out()
    n_test = config.n_test or preset.n_test
    test_spec = {f"ell={ell}": ("test", n_test, ell,
                                POOL_SEEDS["test"] + int(ell * 10))
                 for ell in config.ell_test}
    n_train = config.n_train[0]
    jobs = []
    for ell_tr in config.ell_train:
        for seed in config.seeds:
            # OOD runs keep the broad virtual length-scale cycle
            args = (config, config.variant, n_train, ell_tr, seed, test_spec,
                    config.overrides or None, None)
            key = _hash_obj(["ood", preset.describe(),
                             config.benchmark, config.scale, config.variant,
                             n_train, ell_tr, sorted(config.ell_test), seed,
                             config.epochs, config.n_virtual, n_test,
                             config.overrides, config.model_overrides])
            jobs.append((key, args))
    records = _execute_cells(config, jobs, outdir)
    matrix = np.full((len(config.ell_train), len(config.ell_test)), np.nan)
    for i, ell_tr in enumerate(config.ell_train):
        for j, ell_te in enumerate(config.ell_test):
            vals = [rec["results"][f"ell={ell_te}"]["mean_rel_l2"]
                    for rec in records
                    if rec.get("status") == "ok"
                    and rec["ell_train"] == ell_tr
                    and f"ell={ell_te}" in rec.get("results", {})]
            if vals:
                matrix[i, j] = float(np.mean(vals))
    report = {
        "protocol": "ood_heatmap", "benchmark": config.benchmark,
        "scale": config.scale, "variant": config.variant, "n_train": n_train,
        "ell_train": list(config.ell_train), "ell_test": list(config.ell_test),
        "seeds": list(config.seeds), "matrix": matrix.tolist(),
        "cells": records,
    }
    path = os.path.join(outdir, f"heatmap_{config.variant}.json")
    _write_json_atomic(path, report)
    csv = os.path.join(outdir, f"heatmap_{config.variant}.csv")
    with open(csv + ".tmp", "w") as fh:
        fh.write("ell_train\\ell_test," + ",".join(map(str, config.ell_test)) + "\n")
        for ell_tr, row in zip(config.ell_train, matrix):
            fh.write(str(ell_tr) + "," + ",".join(f"{v:.6g}" for v in row) + "\n")
    os.replace(csv + ".tmp", csv)
    return report


def run_fkdv_efficiency(config):
    """Balanced subsampling of the analytic A/B/C pool at several N_train."""
    if config.benchmark != "fkdv":
        raise ValueError("this protocol is the forced-KdV one")
    preset = benchmark_preset("fkdv", config.scale)
    outdir = config.out()
    n_test = config.n_test or preset.n_test
    test_spec = {"test": ("test", n_test, None, POOL_SEEDS["test"])}
    jobs = []
    for n_train in config.n_train:
        for seed in config.seeds:
            args = (config, config.variant, n_train, None, seed, test_spec,
                    config.overrides or None, None)
            key = _hash_obj(["fkdv", preset.describe(),
                             config.scale, config.variant, n_train, seed,
                             config.epochs, config.n_virtual, n_test,
                             config.overrides, config.model_overrides])
            jobs.append((key, args))
    records = _execute_cells(config, jobs, outdir)
    agg = _aggregate(records)
    report = {
        "protocol": "fkdv_efficiency", "scale": config.scale,
        "variant": config.variant, "n_train": list(config.n_train),
        "seeds": list(config.seeds),
        "type_balance": {str(n): {"per_type": n // 3, "remainder": n % 3}
                         for n in config.n_train},
        "curve": [{"n_train": n,
                   **agg.get((config.variant, n, None),
                             {"mean": None, "std": None, "n_seeds": 0})}
                  for n in config.n_train],
        "cells": records,
    }
    _write_json_atomic(os.path.join(outdir, f"fkdv_{config.variant}.json"), report)
    return report


def _write_curve_csv(path, curve):
    with open(path + ".tmp", "w") as fh:
        fh.write("n_train,mean_rel_l2,std_rel_l2,n_seeds\n")
        for row in curve:
            fh.write(f"{row['n_train']},{row['mean']},{row['std']},{row['n_seeds']}\n")
    os.replace(path + ".tmp", path)
