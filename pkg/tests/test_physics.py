import numpy as np
import pytest

from pilno import autodiff as ad
from pilno.autodiff import Tensor, backward
from pilno.benchmarks import build_batch, make_benchmark
from pilno.bench.data import make_paired_sample, make_paired_set, make_virtual_set
from pilno.operator import ModelConfig, build_model
from pilno.physics import (GridInfo, LossWeights, PdeSpec, TcwSchedule,
                           apply_mollifier, grid_derivative, pde_residual,
                           tcw_weights, total_loss)
from pilno.physics.loss import mollifier_values
from pilno.solvers import fkdv


# ---------------------------------------------------------------------------
# grid derivatives


def test_derivative_of_constant_is_zero():
    u = np.full((3, 17), 2.5)
    for order in (1, 2):
        d = grid_derivative(u, axis=1, order=order, h=0.1)
        assert np.max(np.abs(d)) <= 1e-12


def test_derivative_linearity():
    # linear operator: distributes over combinations (to matmul roundoff)
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal((2, 9, 12))
    a, b = 1.3, -0.7
    lhs = grid_derivative(a * u + b * v, axis=1, order=1, h=0.2)
    rhs = a * grid_derivative(u, axis=1, order=1, h=0.2) \
        + b * grid_derivative(v, axis=1, order=1, h=0.2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-13


def test_periodic_first_and_third_derivatives():
    n = 64
    x = np.arange(n) / n
    u = np.sin(2 * np.pi * x)
    # the default wrap stencil is 4th order: truncation (kh)^4 k / 30
    d1 = grid_derivative(u, axis=0, order=1, h=1.0 / n, periodic=True)
    bound = (2 * np.pi / n) ** 4 * 2 * np.pi / 30
    assert np.max(np.abs(d1 - 2 * np.pi * np.cos(2 * np.pi * x))) <= 1.1 * bound
    # a 6th-order stencil reaches the 1e-6 example tolerance
    d1_hi = grid_derivative(u, axis=0, order=1, h=1.0 / n, periodic=True, acc=6)
    assert np.max(np.abs(d1_hi - 2 * np.pi * np.cos(2 * np.pi * x))) <= 1e-6
    # third derivative converges at scheme order
    errs = []
    for m in (64, 128):
        xm = np.arange(m) / m
        d3 = grid_derivative(np.sin(2 * np.pi * xm), axis=0, order=3, h=1.0 / m,
                             periodic=True, acc=4)
        errs.append(np.max(np.abs(d3 + (2 * np.pi) ** 3 * np.cos(2 * np.pi * xm))))
    assert errs[0] <= 2e-3
    assert np.log2(errs[0] / errs[1]) >= 3.5


def test_bounded_second_derivative_order():
    errs = []
    for n in (21, 41, 81):
        x = np.linspace(0, 1, n)
        u = np.sin(np.pi * x)
        d2 = grid_derivative(u, axis=0, order=2, h=x[1] - x[0])
        errs.append(np.max(np.abs(d2 + np.pi ** 2 * u)))
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(slopes >= 1.9)


def test_too_few_nodes_rejected():
    with pytest.raises(ValueError):
        grid_derivative(np.zeros(4), axis=0, order=1, h=0.1)
    with pytest.raises(ValueError):
        grid_derivative(np.zeros(6), axis=0, order=3, h=0.1)


# ---------------------------------------------------------------------------
# TCW


def test_tcw_none_is_all_ones():
    w = tcw_weights(TcwSchedule("none"), np.linspace(0, 1, 26))
    assert np.array_equal(w, np.ones(26))


def test_tcw_exp_hand_values():
    w = tcw_weights(TcwSchedule("exp", gamma=1.0), np.array([0.0, 1.0]))
    e = np.exp(-1.0)
    assert w == pytest.approx([2 / (1 + e), 2 * e / (1 + e)], rel=1e-12)
    assert w[0] == pytest.approx(1.4621, abs=1e-4)
    assert w[1] == pytest.approx(0.5379, abs=1e-4)


def test_tcw_piecewise_degenerate_constant():
    w = tcw_weights(TcwSchedule("piecewise", w_max=2.0, w_min=2.0, t0=0.4),
                    np.linspace(0, 1, 11))
    assert np.allclose(w, 1.0, atol=1e-15)


@pytest.mark.parametrize("K", [1, 25, 50, 99])
@pytest.mark.parametrize("form,kw", [
    ("exp", {"gamma": 2.0}),
    ("inv", {"alpha": 3.0}),
    ("piecewise", {"w_max": 5.0, "w_min": 0.5, "t0": 0.3}),
])
def test_tcw_normalization_and_monotonicity(K, form, kw):
    t = np.linspace(0.0, 1.0, K + 1)
    w = tcw_weights(TcwSchedule(form, **kw), t)
    assert abs(np.mean(w) - 1.0) <= 1e-12
    assert np.all(np.diff(w) <= 1e-15)


def test_tcw_invalid_parameters_rejected():
    with pytest.raises(ValueError):
        TcwSchedule("exp", gamma=-1.0)
    with pytest.raises(ValueError):
        TcwSchedule("piecewise", w_max=1.0, w_min=2.0, t0=0.5)
    with pytest.raises(ValueError):
        tcw_weights(TcwSchedule("none"), np.array([0.0, 0.0, 1.0]))


# ---------------------------------------------------------------------------
# mollifiers


def test_darcy_mollifier_exact_boundary_zeros():
    bench = make_benchmark("darcy", n_data=11, n_colloc=31, n_fine=121)
    rng = np.random.default_rng(0)
    raw = rng.standard_normal((2, 31, 31))
    out = apply_mollifier(raw, bench)
    assert np.all(out[:, 0, :] == 0.0) and np.all(out[:, -1, :] == 0.0)
    assert np.all(out[:, :, 0] == 0.0) and np.all(out[:, :, -1] == 0.0)


def test_rd_b_mollifier_exact_initial_and_boundary_zeros():
    bench = make_benchmark("rd_task_b", nt=26, nx=26)
    raw = np.random.default_rng(1).standard_normal((3, 26, 26))
    out = apply_mollifier(raw, bench)
    assert np.all(out[:, 0, :] == 0.0)
    assert np.all(out[:, :, 0] == 0.0) and np.all(out[:, :, -1] == 0.0)


def test_mollifier_on_ones_reproduces_envelope():
    bench = make_benchmark("darcy", n_data=11, n_colloc=31, n_fine=121)
    out = apply_mollifier(np.ones((1, 31, 31)), bench)
    x = np.linspace(0, 1, 31)
    m = np.outer(np.sin(np.pi * x), np.sin(np.pi * x))
    assert np.allclose(out[0, 1:-1, 1:-1], m[1:-1, 1:-1], atol=1e-15)


def test_mollifier_passthrough_for_other_benchmarks():
    bench = make_benchmark("burgers")
    raw = np.ones((1, 26, 32))
    assert apply_mollifier(raw, bench) is raw
    assert mollifier_values(bench) is None


# ---------------------------------------------------------------------------
# residuals


def test_rd_b_zero_prediction_residual_is_minus_f():
    bench = make_benchmark("rd_task_b", nt=26, nx=26)
    f = np.random.default_rng(2).standard_normal((2, 26))
    pred = Tensor(np.zeros((2, 26, 26)))
    r = pde_residual(pred, bench.spec(), {"f": f}, bench.grid_info())
    expect = -np.broadcast_to(f[:, None, :], (2, 26, 26))
    assert np.array_equal(r.data, expect)


def test_burgers_residual_vanishes_on_solver_output():
    # solver-consistency oracle: residual falls with collocation refinement
    bench_c = make_benchmark("burgers", nt=26, nx=32)
    bench_f = make_benchmark("burgers", nt=51, nx=64)
    norms = []
    for bench in (bench_c, bench_f):
        s = make_paired_sample(bench, 0, seed=42, ell=1.0)
        r = pde_residual(Tensor(s.label[None]), bench.spec(), {},
                         bench.grid_info())
        norms.append(np.sqrt(np.mean(r.data ** 2)))
    assert norms[1] < 0.5 * norms[0]
    assert norms[1] < 0.05


def test_fkdv_residual_refines_to_zero():
    inst = fkdv.fkdv_analytic("B", {"k": 0.9, "beta": 0.35, "alpha": 1.1,
                                    "delta": 1.2, "gamma": 1.0, "d": 1.0,
                                    "a": 0.1, "b": 0.2, "A": 0.4, "b0": 0.1,
                                    "b1": -0.2, "b2": 0.1})
    norms = []
    for n in (100, 200):
        bench = make_benchmark("fkdv", nt=n, nx=n)
        x = bench.space[0].coords()
        t = bench.time.coords()
        f, f_x, u, _ = fkdv.evaluate_family("B", inst.coeffs, x, t)
        r = pde_residual(Tensor(u[None]), bench.spec(),
                         {"f_x": f_x[None], "alpha": [inst.coeffs["alpha"]],
                          "beta": [inst.coeffs["beta"]]}, bench.grid_info())
        norms.append(np.sqrt(np.mean(r.data ** 2)))
    assert norms[1] <= 0.35 * norms[0]


def test_residual_missing_inputs_rejected():
    bench = make_benchmark("rd_task_b")
    with pytest.raises(ValueError, match="needs inputs"):
        pde_residual(Tensor(np.zeros((1, 51, 51))), bench.spec(), {},
                     bench.grid_info())


def test_darcy_residual_shape_guard():
    bench = make_benchmark("darcy", n_data=11, n_colloc=31, n_fine=121)
    with pytest.raises(ValueError, match="does not match"):
        pde_residual(Tensor(np.zeros((1, 31, 31))), bench.spec(),
                     {"a": np.ones((1, 61, 61))}, bench.grid_info())


# ---------------------------------------------------------------------------
# total loss


def tiny_model(bench, seed=0, **kw):
    cfg = ModelConfig(kind="alno", layout=bench.layout,
                      in_channels=bench.in_channels, width=4, depth=1,
                      modes=(2, 2), n_poles=2, pole_mode="shared",
                      grid=bench.grid, seq_step=bench.seq_step, **kw)
    return build_model(cfg, seed=seed)


def test_total_loss_reduces_to_data_loss():
    bench = make_benchmark("burgers")
    samples = make_paired_set(bench, 3, seed=1, ell=2.0)
    batch = build_batch(bench, samples)
    model = tiny_model(bench)
    w = LossWeights(lam_data=1.0, lam_pde=0.0, lam_ic=0.0, lam_bc=0.0)
    loss, comps = total_loss(model, batch, None, w)
    from pilno.physics.loss import _forward_field
    pred = _forward_field(model, batch.enc_phys, bench)
    direct = np.mean((pred.data - batch.labels) ** 2)
    assert loss.item() == pytest.approx(direct, rel=1e-12)
    assert comps["pde"] == 0.0 and comps["ic"] == 0.0


def test_physics_only_loss_never_touches_labels():
    bench = make_benchmark("burgers")
    virt = make_virtual_set(bench, 4, seed=3)
    batch = build_batch(bench, virt, with_labels=False)
    model = tiny_model(bench)
    w = LossWeights(lam_data=0.0, lam_pde=1.0, lam_ic=1.0, lam_bc=1.0)
    loss, comps = total_loss(model, None, batch, w)
    assert batch.labels is None
    assert comps["pde_virtual"] > 0.0
    assert np.isfinite(loss.item())


def test_total_loss_rejects_empty():
    model = tiny_model(make_benchmark("burgers"))
    with pytest.raises(ValueError):
        total_loss(model, None, None, LossWeights())


def test_tcw_none_matches_unweighted_exactly():
    bench = make_benchmark("rd_task_b", nt=26, nx=26)
    virt = make_virtual_set(bench, 2, seed=5)
    batch = build_batch(bench, virt, with_labels=False)
    model = tiny_model(bench)
    w = LossWeights(lam_data=0.0, lam_pde=1.0, lam_ic=0.0, lam_bc=0.0)
    a, _ = total_loss(model, None, batch, w, TcwSchedule("none"))
    b, _ = total_loss(model, None, batch, w, None)
    assert a.item() == b.item()


def test_tcw_biases_early_times():
    bench = make_benchmark("rd_task_b", nt=26, nx=26)
    virt = make_virtual_set(bench, 2, seed=5)
    batch = build_batch(bench, virt, with_labels=False)
    model = tiny_model(bench)
    w = LossWeights(lam_data=0.0, lam_pde=1.0, lam_ic=0.0, lam_bc=0.0)
    causal, _ = total_loss(model, None, batch, w, TcwSchedule("exp", gamma=2.0))
    plain, _ = total_loss(model, None, batch, w)
    assert causal.item() != plain.item()


def test_fkdv_physics_floor_on_exact_solution():
    # exact analytic solution fed as the prediction: components near the
    # discretization floor of the residual stencils
    bench = make_benchmark("fkdv", nt=100, nx=100)
    sample = make_paired_sample(bench, 0, seed=0)
    batch = build_batch(bench, [sample], with_labels=False)
    spec = bench.spec()
    r = pde_residual(Tensor(sample.label[None]), spec, batch.raw,
                     bench.grid_info())
    pde_floor = np.mean(r.data ** 2)
    u0_err = np.mean((sample.label[0] - sample.inputs["u0"]) ** 2)
    bc_err = np.mean((sample.label[:, -1] - sample.inputs["u_right"]) ** 2)
    assert u0_err == 0.0 and bc_err == 0.0
    scale = np.mean(sample.label ** 2)
    assert pde_floor <= 0.05 * scale


def test_total_loss_gradient_flows_to_all_parameters():
    bench = make_benchmark("burgers")
    samples = make_paired_set(bench, 2, seed=7, ell=2.0)
    virt = make_virtual_set(bench, 2, seed=8)
    model = tiny_model(bench)
    loss, _ = total_loss(model, build_batch(bench, samples),
                         build_batch(bench, virt, with_labels=False),
                         LossWeights(), TcwSchedule("exp", gamma=2.0))
    grads = backward(loss, parameters=model.parameters())
    assert len(grads) == len(model.parameters())
    assert all(np.all(np.isfinite(g)) for g in grads.values())
