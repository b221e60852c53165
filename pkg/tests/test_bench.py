import json
import os

import numpy as np
import pytest

from pilno.bench.data import (dataset_hash, load_dataset, make_paired_set,
                              make_virtual_set, save_dataset)
from pilno.bench.metrics import mean_relative_l2, relative_l2
from pilno.bench.presets import (VARIANTS, appendix_a_config, appendix_b_config,
                                 appendix_c_config, benchmark_preset,
                                 variant_setup)
from pilno.benchmarks import make_benchmark
from pilno.operator import parameter_count


def test_relative_l2_basics():
    ref = np.arange(1.0, 10.0)
    assert relative_l2(ref, ref) == 0.0
    assert relative_l2(np.zeros(9), ref) == 1.0
    assert relative_l2(1.1 * ref, ref) == pytest.approx(0.1, abs=1e-12)


def test_relative_l2_guards():
    with pytest.raises(ValueError):
        relative_l2(np.ones(3), np.zeros(3))
    with pytest.raises(ValueError):
        relative_l2(np.ones(3), np.ones(4))


def test_mean_relative_l2_matches_recomputation():
    rng = np.random.default_rng(0)
    preds = rng.standard_normal((5, 7))
    refs = preds + 0.1 * rng.standard_normal((5, 7))
    mean, errs = mean_relative_l2(preds, refs)
    assert mean == pytest.approx(np.mean(errs), abs=1e-15)


def test_dataset_round_trip_bit_exact(tmp_path):
    bench = make_benchmark("burgers")
    samples = make_paired_set(bench, 2, seed=5, ell=2.0)
    save_dataset(tmp_path / "ds", samples)
    back, manifest = load_dataset(tmp_path / "ds")
    assert manifest["count"] == 2
    for a, b in zip(samples, back):
        assert np.array_equal(a.inputs["u0"], b.inputs["u0"])
        assert np.array_equal(a.label, b.label)
        assert b.meta["ell"] == 2.0
    # flat little-endian binary tensors, shapes in the manifest
    entry = manifest["tensors"]["input_u0"]
    raw = np.fromfile(tmp_path / "ds" / entry["file"], dtype="<f8")
    assert list(raw.reshape(entry["shape"])[0]) == list(samples[0].inputs["u0"])


def test_dataset_hash_tracks_content(tmp_path):
    bench = make_benchmark("burgers")
    samples = make_paired_set(bench, 2, seed=5, ell=2.0, solve=False)
    save_dataset(tmp_path / "a", samples)
    h1 = dataset_hash(tmp_path / "a")
    assert h1 == dataset_hash(tmp_path / "a")
    samples[0].inputs["u0"] = samples[0].inputs["u0"] + 1e-9
    save_dataset(tmp_path / "b", samples)
    assert dataset_hash(tmp_path / "b") != h1


def test_fkdv_dataset_round_trip(tmp_path):
    bench = make_benchmark("fkdv", nt=12, nx=12)
    samples = make_paired_set(bench, 3, seed=2)
    save_dataset(tmp_path / "f", samples)
    back, _ = load_dataset(tmp_path / "f")
    assert isinstance(back[0].inputs["alpha"], float)
    assert np.array_equal(back[1].inputs["f_x"], samples[1].inputs["f_x"])
    assert back[2].meta["family"] == "C"


def test_virtual_sets_cycle_families_and_scales():
    bench = make_benchmark("fkdv", nt=10, nx=10)
    virt = make_virtual_set(bench, 6, seed=3)
    assert [v.meta["family"] for v in virt] == ["A", "B", "C", "A", "B", "C"]
    assert all(v.label is None for v in virt)


@pytest.mark.parametrize("name", ["burgers", "diffusion", "rd_task_a",
                                  "rd_task_b", "darcy", "fkdv"])
@pytest.mark.parametrize("scale", ["desk", "paper"])
def test_presets_instantiate(name, scale):
    preset = benchmark_preset(name, scale)
    assert preset.model.width == 32
    assert preset.n_virtual >= 0
    desc = preset.describe()
    assert desc["benchmark"] == name and desc["scale"] == scale


@pytest.mark.parametrize("variant", VARIANTS)
def test_variant_setup_covers_enum(variant):
    preset = benchmark_preset("burgers", "desk")
    model_cfg, train_cfg, n_virtual = variant_setup(preset, variant)
    if variant in ("LNO", "ALNO", "FNO"):
        assert train_cfg.weights.lam_pde == 0.0
        assert n_virtual == 0
    if variant == "PILNO_noTCW":
        assert train_cfg.schedule.form == "none"
    if variant == "PILNO_noVirtual":
        assert n_virtual == 0
    if variant == "LNO":
        assert model_cfg.kind == "lno"
        a = parameter_count(preset.model)
        assert abs(parameter_count(model_cfg) - a) <= 0.10 * a
    if variant == "FNO":
        assert model_cfg.kind == "fno"


def test_unknown_variant_rejected():
    with pytest.raises(ValueError):
        variant_setup(benchmark_preset("burgers"), "DEEPO")


def test_appendix_experiments_are_expressible():
    a = appendix_a_config()
    assert set(a["variants"]) == {"ALNO", "LNO", "FNO"}
    assert a["n_train"] == [200]
    b = appendix_b_config()
    assert b["benchmark"] == "diffusion"
    assert len(b["ell_train"]) == 10
    c = appendix_c_config()
    assert all(arm["variant"] == "PILNO_noVirtual" for arm in c["arms"])
    assert c["arms"][1]["overrides"]["schedule"].form == "none"
