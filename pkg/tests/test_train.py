import numpy as np
import pytest

from pilno.autodiff import Tensor
from pilno.benchmarks import make_benchmark
from pilno.bench.data import make_paired_set, make_virtual_set
from pilno.operator import ModelConfig, parameter_count
from pilno.physics import LossWeights, TcwSchedule
from pilno.train import (TrainConfig, TrainingDiverged, adam_init, adam_step,
                         evaluate, init_params, load_training_state, lr_at,
                         save_training_state, train_run)


def test_lr_schedule_values():
    assert lr_at(0, 1e-3) == 1e-3
    assert lr_at(100, 1e-3) == pytest.approx(5e-4)
    assert lr_at(999, 1e-3) == pytest.approx(1e-3 * 0.5 ** 9)
    with pytest.raises(ValueError):
        lr_at(-1, 1e-3)


def test_adam_zero_gradient_keeps_params():
    p = Tensor(np.array([1.0, -2.0]), requires_grad=True, name="p")
    state = adam_init([p])
    adam_step([p], [np.zeros(2)], state, lr=0.1, weight_decay=0.0)
    assert np.array_equal(p.data, [1.0, -2.0])


def test_adam_first_step_hand_value():
    # g = 1 at step 1: bias-corrected update is lr * 1/(1 + eps) ~ lr
    p = Tensor(np.array([1.0]), requires_grad=True, name="p")
    state = adam_init([p])
    adam_step([p], [np.ones(1)], state, lr=0.1, weight_decay=0.0)
    assert p.data[0] == pytest.approx(0.9, abs=1e-8)


def test_adam_weight_decay_is_additive_l2():
    p = Tensor(np.array([2.0]), requires_grad=True, name="p")
    q = Tensor(np.array([2.0]), requires_grad=True, name="q")
    s1, s2 = adam_init([p]), adam_init([q])
    adam_step([p], [np.zeros(1)], s1, lr=0.1, weight_decay=1e-2)
    adam_step([q], [2.0e-2 * np.ones(1)], s2, lr=0.1, weight_decay=0.0)
    assert p.data[0] == pytest.approx(q.data[0], rel=1e-12)


def test_adam_rejects_non_finite_gradient():
    p = Tensor(np.array([1.0]), requires_grad=True, name="p")
    state = adam_init([p])
    with pytest.raises(TrainingDiverged):
        adam_step([p], [np.array([np.nan])], state, lr=0.1)


def small_cfg(bench, **kw):
    base = dict(kind="alno", layout=bench.layout, in_channels=bench.in_channels,
                width=4, depth=1, modes=(2, 2), n_poles=2, pole_mode="shared",
                grid=bench.grid, seq_step=bench.seq_step)
    base.update(kw)
    return ModelConfig(**base)


def test_init_params_deterministic_and_glorot():
    bench = make_benchmark("burgers")
    cfg = small_cfg(bench)
    a = init_params(cfg, seed=5)
    b = init_params(cfg, seed=5)
    for p, q in zip(a.parameters(), b.parameters()):
        assert np.array_equal(p.data, q.data)
    big = ModelConfig(kind="fno", layout="space_time_2d", in_channels=256,
                      width=256, depth=1, modes=(2, 2), grid=(10, 10),
                      seq_step=1.0 / 9)
    m = init_params(big, seed=1)
    var = np.var(m.lift_w.data)
    assert abs(var - 2.0 / 512) <= 0.15 * (2.0 / 512)
    import pilno.autodiff as ad
    alno = init_params(small_cfg(bench), seed=2)
    with ad.no_grad():
        assert np.all(alno.layers[0].bank.poles().data.real < 0)


@pytest.fixture(scope="module")
def burgers_setup():
    bench = make_benchmark("burgers")
    paired = make_paired_set(bench, 6, seed=11, ell=2.0)
    virtual = make_virtual_set(bench, 4, seed=12, ell_set=(1.0, 3.0))
    return bench, paired, virtual


def test_train_single_epoch_smoke(burgers_setup):
    bench, paired, virtual = burgers_setup
    model = init_params(small_cfg(bench), seed=0)
    config = TrainConfig(epochs=1, batch_size=4, seed=0)
    model, history, _ = train_run(bench, model, config, paired, virtual)
    assert len(history) == 1
    assert np.isfinite(history.rows[0]["total"])


def test_training_is_bit_deterministic(burgers_setup):
    bench, paired, virtual = burgers_setup
    runs = []
    for _ in range(2):
        model = init_params(small_cfg(bench), seed=3)
        config = TrainConfig(epochs=2, batch_size=4, seed=3)
        model, _, _ = train_run(bench, model, config, paired, virtual)
        runs.append([p.data.copy() for p in model.parameters()])
    for a, b in zip(*runs):
        assert np.array_equal(a, b)


def test_physics_only_mode_needs_no_labels(burgers_setup):
    bench, _, virtual = burgers_setup
    model = init_params(small_cfg(bench), seed=1)
    config = TrainConfig(epochs=1, batch_size=4, seed=1,
                         weights=LossWeights(lam_data=0.0, lam_pde=1.0,
                                             lam_ic=1.0, lam_bc=1.0))
    # virtual samples carry no labels at all
    model, history, _ = train_run(bench, model, config, paired=[], virtual=virtual)
    assert history.rows[0]["data"] == 0.0
    assert history.rows[0]["pde_virtual"] > 0.0


def test_data_mode_without_paired_rejected(burgers_setup):
    bench, _, virtual = burgers_setup
    model = init_params(small_cfg(bench), seed=1)
    with pytest.raises(ValueError):
        train_run(bench, model, TrainConfig(epochs=1), [], virtual)


def test_parameter_parity_between_regimes(burgers_setup):
    # the baseline regime trains the identical model spec
    bench, paired, virtual = burgers_setup
    cfg = small_cfg(bench)
    pilno_model = init_params(cfg, seed=0)
    base_model = init_params(cfg, seed=0)
    config = TrainConfig(epochs=1, batch_size=4, seed=0,
                         schedule=TcwSchedule("exp", gamma=2.0))
    train_run(bench, pilno_model, config, paired, virtual)
    train_run(bench, base_model, config.data_only(), paired, [])
    assert parameter_count(pilno_model) == parameter_count(base_model)
    assert pilno_model.config == base_model.config


def test_checkpoint_resume_matches_uninterrupted(tmp_path, burgers_setup):
    bench, paired, virtual = burgers_setup
    cfg = small_cfg(bench)
    config4 = TrainConfig(epochs=4, batch_size=4, seed=7)
    straight = init_params(cfg, seed=7)
    straight, _, _ = train_run(bench, straight, config4, paired, virtual)

    config2 = TrainConfig(epochs=2, batch_size=4, seed=7)
    part = init_params(cfg, seed=7)
    part, _, state = train_run(bench, part, config2, paired, virtual)
    save_training_state(tmp_path / "ck", part, state)
    resumed, state2 = load_training_state(tmp_path / "ck")
    resumed, _, _ = train_run(bench, resumed, config4, paired, virtual,
                              resume_state=state2)
    for p, q in zip(straight.parameters(), resumed.parameters()):
        assert np.array_equal(p.data, q.data)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_restores_last_good(burgers_setup):
    # Adam steps are bounded by lr, so the rate must overflow float64 products
    bench, paired, virtual = burgers_setup
    model = init_params(small_cfg(bench), seed=2)
    config = TrainConfig(epochs=5, batch_size=4, seed=2, base_lr=1e160)
    with pytest.raises(TrainingDiverged):
        train_run(bench, model, config, paired, virtual)
    for p in model.parameters():
        assert np.all(np.isfinite(p.data))


def test_data_driven_training_reduces_loss(burgers_setup):
    bench, paired, _ = burgers_setup
    model = init_params(small_cfg(bench, width=8, modes=(4, 4)), seed=4)
    config = TrainConfig(epochs=40, batch_size=6, seed=4).data_only()
    model, history, _ = train_run(bench, model, config, paired, [])
    first = np.mean([r["total"] for r in history.rows[:5]])
    last = np.mean([r["total"] for r in history.rows[-5:]])
    assert last < first


def test_evaluate_returns_per_case_errors(burgers_setup):
    bench, paired, _ = burgers_setup
    model = init_params(small_cfg(bench), seed=0)
    mean, errs = evaluate(model, bench, paired[:3])
    assert len(errs) == 3
    assert mean == pytest.approx(np.mean(errs))


def test_history_csv_round_trip(tmp_path, burgers_setup):
    bench, paired, virtual = burgers_setup
    model = init_params(small_cfg(bench), seed=0)
    config = TrainConfig(epochs=2, batch_size=4, seed=0, val_every=1)
    model, history, _ = train_run(bench, model, config, paired, virtual,
                                  val_samples=paired[:2])
    path = tmp_path / "hist.csv"
    history.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("epoch,lr,data")
