"""Command-line harness.

Subcommands: generate-data, train, evaluate, sweep, heatmap, fkdv-bench,
gradcheck, oracle-suite. Reports are written atomically (temp file +
rename); errors exit nonzero with a machine-readable record on stderr.
The default output root comes from $PILNO_OUTPUT_ROOT.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import data as dataio
from .experiments import (ExperimentConfig, ensure_dataset, output_root,
                          run_cell, run_data_efficiency, run_fkdv_efficiency,
                          run_ood_heatmap, _write_json_atomic)
from .oracles import run_oracle_suite
from .presets import VARIANTS, benchmark_preset

BENCH_NAMES = ("burgers", "diffusion", "rd_task_a", "rd_task_b", "darcy", "fkdv")


def _floats(text):
    return tuple(float(x) for x in text.split(","))


def _ints(text):
    return tuple(int(x) for x in text.split(","))


def _error(kind, message):
    json.dump({"error": kind, "message": message}, sys.stderr)
    sys.stderr.write("\n")
    return 2


def build_parser():
    p = argparse.ArgumentParser(prog="pilno",
                                description="physics-informed Laplace operator "
                                            "benchmark harness")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--benchmark", required=True, choices=BENCH_NAMES)
        sp.add_argument("--scale", default="desk", choices=("desk", "paper"))
        sp.add_argument("--out", default=None)

    g = sub.add_parser("generate-data", help="sample a dataset to disk")
    common(g)
    g.add_argument("--ell", type=float, default=0.5)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--kind", default="paired", choices=("paired", "virtual"))

    t = sub.add_parser("train", help="train one variant and checkpoint it")
    common(t)
    t.add_argument("--variant", default="PILNO", choices=VARIANTS)
    t.add_argument("--n-train", type=int, default=25)
    t.add_argument("--ell", type=float, default=0.5)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--n-virtual", type=int, default=None)

    e = sub.add_parser("evaluate", help="evaluate a checkpoint on a test pool")
    common(e)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--n-test", type=int, default=None)
    e.add_argument("--ell", type=float, default=0.5)

    s = sub.add_parser("sweep", help="data-efficiency sweep over N_train")
    common(s)
    s.add_argument("--variant", default="PILNO", choices=VARIANTS)
    s.add_argument("--n-train", type=_ints, default=(25, 50, 100))
    s.add_argument("--ell", type=float, default=0.5)
    s.add_argument("--seeds", type=_ints, default=(0, 1, 2))
    s.add_argument("--epochs", type=int, default=None)
    s.add_argument("--n-virtual", type=int, default=None)
    s.add_argument("--n-test", type=int, default=None)
    s.add_argument("--workers", type=int, default=1)

    h = sub.add_parser("heatmap", help="OOD train/test length-scale grid")
    common(h)
    h.add_argument("--variant", default="PILNO", choices=VARIANTS)
    h.add_argument("--ells", type=_floats,
                   default=tuple(np.round(np.arange(0.5, 5.01, 0.5), 1)))
    h.add_argument("--n-train", type=int, default=None)
    h.add_argument("--seeds", type=_ints, default=(0,))
    h.add_argument("--epochs", type=int, default=None)
    h.add_argument("--n-virtual", type=int, default=None)
    h.add_argument("--n-test", type=int, default=None)
    h.add_argument("--workers", type=int, default=1)

    f = sub.add_parser("fkdv-bench", help="balanced forced-KdV data-efficiency run")
    f.add_argument("--scale", default="desk", choices=("desk", "paper"))
    f.add_argument("--out", default=None)
    f.add_argument("--variant", default="PILNO", choices=VARIANTS)
    f.add_argument("--n-train", type=_ints, default=(27,))
    f.add_argument("--seeds", type=_ints, default=(0,))
    f.add_argument("--epochs", type=int, default=None)
    f.add_argument("--n-test", type=int, default=None)

    gc = sub.add_parser("gradcheck", help="autodiff vs finite differences")
    gc.add_argument("--benchmark", required=True,
                    choices=BENCH_NAMES + ("rd",))  # rd = reaction-diffusion B
    gc.add_argument("--model", default="pilno")
    gc.add_argument("--tolerance", type=float, default=1e-4)

    sub.add_parser("oracle-suite", help="run the deterministic property oracles")
    return p


def cmd_generate_data(args):
    preset = benchmark_preset(args.benchmark, args.scale)
    root = args.out or output_root()
    if args.kind == "virtual":
        samples = dataio.make_virtual_set(preset.bench, args.n, args.seed)
    else:
        samples = dataio.make_paired_set(preset.bench, args.n, args.seed,
                                         ell=args.ell)
    from .experiments import dataset_dir
    path = dataset_dir(root, args.benchmark, args.scale, args.kind, args.n,
                       args.ell if args.kind == "paired" else None, args.seed)
    meta = preset.describe()
    meta.update({"kind": args.kind, "ell": args.ell, "seed": args.seed})
    dataio.save_dataset(path, samples, bench_meta=meta)
    print(json.dumps({"dataset": path, "count": args.n,
                      "hash": dataio.dataset_hash(path)}))
    return 0


def cmd_train(args):
    config = ExperimentConfig(benchmark=args.benchmark, variant=args.variant,
                              scale=args.scale, n_train=(args.n_train,),
                              ell_train=(args.ell,), seeds=(args.seed,),
                              epochs=args.epochs, n_virtual=args.n_virtual,
                              output_dir=args.out)
    preset = benchmark_preset(args.benchmark, args.scale)
    ell = None if args.benchmark in ("darcy", "fkdv") else args.ell
    test, tpath = ensure_dataset(preset, "test", preset.n_test, ell=ell)
    record, model = run_cell(config, preset, args.variant, args.n_train, ell,
                             args.seed, {"test": (test, tpath)},
                             virtual_ells=None if ell is None else (ell,))
    outdir = config.out()
    from ..operator.model import save_checkpoint
    ck = os.path.join(outdir, f"{args.variant}_n{args.n_train}_s{args.seed}.npz")
    save_checkpoint(model, ck)
    record["checkpoint"] = ck
    _write_json_atomic(os.path.join(
        outdir, f"train_{args.variant}_n{args.n_train}_s{args.seed}.json"), record)
    if record["status"] == "ok":
        print(json.dumps({"checkpoint": ck,
                          "test_mean_rel_l2": record["results"]["test"]["mean_rel_l2"]}))
        return 0
    print(json.dumps({"status": record["status"]}))
    return 1


def cmd_evaluate(args):
    from ..operator.model import load_checkpoint
    from ..train import evaluate
    preset = benchmark_preset(args.benchmark, args.scale)
    model = load_checkpoint(args.checkpoint)
    ell = None if args.benchmark in ("darcy", "fkdv") else args.ell
    test, tpath = ensure_dataset(preset, "test", args.n_test or preset.n_test,
                                 ell=ell)
    mean, errs = evaluate(model, preset.bench, test)
    report = {"checkpoint": args.checkpoint, "dataset": tpath,
              "dataset_hash": dataio.dataset_hash(tpath),
              "mean_rel_l2": mean, "std_rel_l2": float(np.std(errs)),
              "per_case": errs}
    outdir = args.out or output_root()
    os.makedirs(outdir, exist_ok=True)
    _write_json_atomic(os.path.join(outdir, "evaluate.json"), report)
    print(json.dumps({"mean_rel_l2": mean, "cases": len(errs)}))
    return 0


def cmd_sweep(args):
    config = ExperimentConfig(benchmark=args.benchmark, variant=args.variant,
                              scale=args.scale, n_train=args.n_train,
                              ell_train=(args.ell,), seeds=args.seeds,
                              epochs=args.epochs, n_virtual=args.n_virtual,
                              n_test=args.n_test, output_dir=args.out,
                              workers=args.workers)
    report = run_data_efficiency(config)
    print(json.dumps({"curve": report["curve"]}, default=float))
    return 0


def cmd_heatmap(args):
    preset = benchmark_preset(args.benchmark, args.scale)
    n_train = args.n_train or (200 if args.scale == "paper" else 50)
    config = ExperimentConfig(benchmark=args.benchmark, variant=args.variant,
                              scale=args.scale, n_train=(n_train,),
                              ell_train=args.ells, ell_test=args.ells,
                              seeds=args.seeds, epochs=args.epochs,
                              n_virtual=args.n_virtual, n_test=args.n_test,
                              output_dir=args.out, workers=args.workers)
    report = run_ood_heatmap(config)
    print(json.dumps({"ells": list(args.ells), "matrix": report["matrix"]},
                     default=float))
    return 0


def cmd_fkdv(args):
    config = ExperimentConfig(benchmark="fkdv", variant=args.variant,
                              scale=args.scale, n_train=args.n_train,
                              ell_train=(None,), seeds=args.seeds,
                              epochs=args.epochs, n_test=args.n_test,
                              output_dir=args.out)
    report = run_fkdv_efficiency(config)
    print(json.dumps({"curve": report["curve"],
                      "type_balance": report["type_balance"]}, default=float))
    return 0


def cmd_gradcheck(args):
    from .oracles import _tiny_preset, _tiny_samples
    from ..autodiff import gradient_check
    from ..benchmarks import build_batch
    from ..operator import build_model
    from ..physics import LossWeights, TcwSchedule, total_loss
    rng = np.random.default_rng(1)
    name = {"rd": "rd_task_b"}.get(args.benchmark, args.benchmark)
    bench, cfg = _tiny_preset(name)
    model = build_model(cfg, seed=1)
    paired = build_batch(bench, _tiny_samples(bench, 2, rng))
    virtual = build_batch(bench, _tiny_samples(bench, 2, rng, labelled=False),
                          with_labels=False)
    sched = TcwSchedule("exp", gamma=2.0) if bench.time is not None \
        else TcwSchedule("none")

    def loss():
        val, _ = total_loss(model, paired, virtual, LossWeights(), sched)
        return val

    disc = gradient_check(loss, model.parameters(), epsilon=1e-5)
    print(f"max relative discrepancy: {disc:.3e} (tolerance {args.tolerance:g})")
    return 0 if disc <= args.tolerance else 1


def cmd_oracles(_args):
    results = run_oracle_suite()
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {
    "generate-data": cmd_generate_data,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "heatmap": cmd_heatmap,
    "fkdv-bench": cmd_fkdv,
    "gradcheck": cmd_gradcheck,
    "oracle-suite": cmd_oracles,
}


def cli_dispatch(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            return _error("usage", "unknown subcommand or malformed arguments")
        return 0
    try:
        return COMMANDS[args.command](args)
    except Exception as err:
        return _error(type(err).__name__, str(err))


def main():
    sys.exit(cli_dispatch())
