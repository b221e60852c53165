"""Acceptance suite.

Fast deterministic property/oracle criteria run first (each also checks its
runtime cap); the training-based criteria run the desk-scale presets through
the experiment harness and assert the directional claims (the binding
clauses) plus the absolute thresholds. One pass/fail line is printed per
criterion (visible with ``pytest -s`` or in captured output).

Training cells cache under the experiment output root, so a re-run only
trains what is missing.
"""

import os
import time
from dataclasses import replace

import numpy as np
import pytest

from pilno.bench.experiments import (ExperimentConfig, run_data_efficiency,
                                     run_fkdv_efficiency, run_ood_heatmap)
from pilno.bench.oracles import ORACLES, run_oracle_suite

ACC_ROOT = os.environ.get(
    "PILNO_ACCEPTANCE_ROOT",
    os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                 "acceptance_runs"))

ORACLE_CAPS = {
    "steady branch / spectral conv equivalence": 10.0,
    "pole-residue kernel vs quadrature convolution": 30.0,
    "gradient check: decoupled layer and total losses": 120.0,
    "causality weights: normalization, monotonicity, none-equality": 30.0,
    "solver convergence orders and Darcy structure": 120.0,
    "random-field statistics": 60.0,
    "analytic forced-KdV pairs satisfy the PDE under refinement": 60.0,
    "mollifier hard constraints for arbitrary parameters": 30.0,
}


def _say(line):
    print("\n" + line, flush=True)


@pytest.fixture(autouse=True)
def _acceptance_root(monkeypatch):
    os.makedirs(ACC_ROOT, exist_ok=True)
    monkeypatch.setenv("PILNO_OUTPUT_ROOT", ACC_ROOT)


@pytest.mark.parametrize("oracle", ORACLES,
                         ids=[fn.oracle_name.replace(" ", "_")[:48]
                              for fn in ORACLES])
def test_property_criteria(oracle):
    t0 = time.time()
    passed, detail = oracle()
    wall = time.time() - t0
    cap = ORACLE_CAPS[oracle.oracle_name]
    ok = passed and wall <= cap
    _say(f"[{'PASS' if ok else 'FAIL'}] {oracle.oracle_name}: {detail} "
         f"[{wall:.1f}s, cap {cap:.0f}s]")
    assert passed, detail
    assert wall <= cap, f"runtime {wall:.1f}s exceeded the {cap:.0f}s cap"


def _cfg(**kw):
    base = dict(scale="desk", output_dir=None)
    base.update(kw)
    base.setdefault("output_dir",
                    os.path.join(ACC_ROOT, "acc_" + base["benchmark"]))
    return ExperimentConfig(**base)


def _mean(report, n_train):
    for row in report["curve"]:
        if row["n_train"] == n_train:
            return row["mean"]
    return None


@pytest.mark.slow
def test_criterion_burgers_small_data_direction():
    """PILNO vs the data-driven twin at N_train = 25 (3 seeds, 300 epochs)."""
    t0 = time.time()
    seeds = (0, 1, 2)
    pilno = run_data_efficiency(_cfg(benchmark="burgers", variant="PILNO",
                                     n_train=(25,), ell_train=(0.5,),
                                     seeds=seeds))
    base = run_data_efficiency(_cfg(benchmark="burgers", variant="ALNO",
                                    n_train=(25,), ell_train=(0.5,),
                                    seeds=seeds))
    p, b = _mean(pilno, 25), _mean(base, 25)
    wall = time.time() - t0
    ok = p is not None and b is not None and p <= 0.05 and b >= 2.0 * p
    _say(f"[{'PASS' if ok else 'FAIL'}] Burgers small-data direction: "
         f"PILNO {p:.4f} (<= 0.05), data-driven twin {b:.4f} (>= 2x) "
         f"[{wall / 60:.0f} min, cap 45 min]")
    assert p is not None and b is not None, "cells failed"
    assert b >= 2.0 * p, "binding ordering clause: baseline >= 2x PILNO"
    assert p <= 0.05, "PILNO absolute threshold"


@pytest.mark.slow
def test_criterion_decoupled_vs_coupled_matched_parameters():
    """Decoupled (ALNO) vs coupled (LNO) kernels, matched parameters."""
    t0 = time.time()
    seeds = (0, 1)
    # a compact matched pair keeps 300 epochs at N_train = 200 inside the cap
    compact = dict(width=24, modes=(8, 8), proj_width=48)
    kw = dict(benchmark="burgers", n_train=(200,), ell_train=(0.5,),
              seeds=seeds, epochs=300, model_overrides=compact)
    alno = run_data_efficiency(_cfg(variant="ALNO", **kw))
    lno = run_data_efficiency(_cfg(variant="LNO", **kw))
    a, l = _mean(alno, 200), _mean(lno, 200)
    wall = time.time() - t0
    ok = a is not None and l is not None and a <= l / 3.0
    _say(f"[{'PASS' if ok else 'FAIL'}] decoupled vs coupled kernel at matched "
         f"parameters: ALNO {a:.4f} <= LNO {l:.4f} / 3 "
         f"[{wall / 60:.0f} min, cap 60 min]")
    assert a is not None and l is not None, "cells failed"
    assert a <= l / 3.0, "binding ordering clause: ALNO <= LNO / 3"


@pytest.mark.slow
def test_criterion_darcy_virtual_input_ablation():
    """Virtual inputs matter at N_train = 10 on Darcy (3 seeds)."""
    t0 = time.time()
    seeds = (0, 1, 2)
    kw = dict(benchmark="darcy", n_train=(10,), ell_train=(None,), seeds=seeds)
    with_v = run_data_efficiency(_cfg(variant="PILNO", **kw))
    without = run_data_efficiency(_cfg(variant="PILNO_noVirtual", **kw))
    base = run_data_efficiency(_cfg(variant="ALNO", **kw))
    wv, wo, b = _mean(with_v, 10), _mean(without, 10), _mean(base, 10)
    wall = time.time() - t0
    ok = None not in (wv, wo, b) and wv < wo and wv < b
    _say(f"[{'PASS' if ok else 'FAIL'}] Darcy virtual-input ablation: "
         f"with {wv:.4f} < without {wo:.4f} and < data-driven {b:.4f} "
         f"[{wall / 60:.0f} min, cap 60 min]")
    assert None not in (wv, wo, b), "cells failed"
    assert wv < wo, "binding: with-virtual < without-virtual"
    assert wv < b, "binding: with-virtual < data-driven baseline"


@pytest.mark.slow
def test_criterion_rd_tcw_ablation():
    """Causality weighting helps mean and stability on RD Task B."""
    t0 = time.time()
    seeds = (0, 1, 2)
    kw = dict(benchmark="rd_task_b", n_train=(25,), ell_train=(0.5,),
              seeds=seeds)
    with_t = run_data_efficiency(_cfg(variant="PILNO", **kw))
    without = run_data_efficiency(_cfg(variant="PILNO_noTCW", **kw))

    def winner(report):
        means = [c["results"]["test"]["mean_rel_l2"] for c in report["cells"]
                 if c.get("status") == "ok"]
        return float(np.mean(means)), float(np.std(means))

    (m_t, s_t), (m_n, s_n) = winner(with_t), winner(without)
    wall = time.time() - t0
    ok = m_t <= m_n and s_t <= s_n
    _say(f"[{'PASS' if ok else 'FAIL'}] RD causality-weighting ablation: "
         f"mean with {m_t:.4f} <= without {m_n:.4f}; "
         f"std with {s_t:.4f} <= without {s_n:.4f} "
         f"[{wall / 60:.0f} min, cap 60 min]")
    assert m_t <= m_n, "binding: with-TCW mean <= without-TCW mean"
    assert s_t <= s_n, "binding: with-TCW std <= without-TCW std"


@pytest.mark.slow
def test_criterion_ood_mini_heatmap():
    """3x3 length-scale grid: PILNO's worst off-diagonal beats the twin's."""
    t0 = time.time()
    ells = (0.5, 2.5, 5.0)
    kw = dict(benchmark="burgers", n_train=(50,), ell_train=ells,
              ell_test=ells, seeds=(0,), epochs=150)
    pilno = run_ood_heatmap(_cfg(variant="PILNO", **kw))
    base = run_ood_heatmap(_cfg(variant="ALNO", **kw))
    mp = np.array(pilno["matrix"])
    mb = np.array(base["matrix"])
    off = ~np.eye(3, dtype=bool)
    worst_p = float(np.nanmax(mp[off]))
    worst_b = float(np.nanmax(mb[off]))
    wall = time.time() - t0
    ok = np.all(np.isfinite(mp[off])) and worst_p < worst_b
    _say(f"[{'PASS' if ok else 'FAIL'}] OOD mini-heatmap: PILNO worst "
         f"off-diagonal {worst_p:.4f} < baseline {worst_b:.4f} "
         f"[{wall / 60:.0f} min, cap 120 min]")
    assert np.all(np.isfinite(mp[off])), "heatmap cells failed"
    assert worst_p < worst_b, "binding: PILNO worst off-diagonal < baseline"


@pytest.mark.slow
def test_fkdv_direction_check():
    """Desk-scale forced-KdV: physics training beats the no-physics run."""
    t0 = time.time()
    kw = dict(benchmark="fkdv", n_train=(27,), ell_train=(None,), seeds=(0,))
    pilno = run_fkdv_efficiency(_cfg(variant="PILNO", **kw))
    base = run_fkdv_efficiency(_cfg(variant="ALNO", **kw))
    p, b = _mean(pilno, 27), _mean(base, 27)
    wall = time.time() - t0
    ok = p is not None and b is not None and p <= 0.25 and b > p
    _say(f"[{'PASS' if ok else 'FAIL'}] forced-KdV direction: PILNO {p:.4f} "
         f"(<= 0.25) vs no-physics {b:.4f} [{wall / 60:.0f} min]")
    assert p is not None and b is not None, "cells failed"
    assert b > p, "binding: no-physics run exceeds PILNO"
    assert p <= 0.25, "PILNO absolute threshold"
