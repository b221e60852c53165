"""Deterministic property/oracle suite (the fast acceptance checks).

Each oracle re-derives its expectation from an independent route (closed
forms, quadrature, Monte Carlo, manufactured solutions, refinement slopes)
and checks the implementation against it at a fixed tolerance. The CLI
``oracle-suite`` subcommand and the acceptance tests share these.
"""

import time
from dataclasses import dataclass

import numpy as np

from .. import autodiff as ad
from ..autodiff import Tensor, gradient_check
from ..benchmarks import Sample, build_batch, make_benchmark
from ..fourier import angular_frequencies
from ..grf import (ExpSinKernelParams, kernel_eval, sample_darcy_coefficient,
                   sample_periodic_field)
from ..operator import ModelConfig, build_model
from ..operator.layers import (PoleResidueBank, lno_kernel_apply,
                               lno_kernel_complex, multiplier_matching_bank,
                               spectral_conv_apply, stored_modes)
from ..physics import (LossWeights, TcwSchedule, apply_mollifier, pde_residual,
                       tcw_weights, total_loss)
from ..solvers import boundary_flux, fkdv, solve_burgers, solve_darcy
from ..solvers.darcy import discrete_load
from ..solvers.timestep import integrate, integrate_rd_manufactured, \
    _d1_periodic_fd4, _d2_periodic_fd4
from ..physics.derivatives import grid_derivative


@dataclass
class OracleResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _oracle(name):
    def deco(fn):
        fn.oracle_name = name
        ORACLES.append(fn)
        return fn
    return deco


ORACLES = []


def _random_bank(c_out, c_in, n_modes, rng, pole_mode="per_pair"):
    bank = PoleResidueBank(c_out, c_in, n_modes, pole_mode)
    bank.rho.data[...] = rng.uniform(-0.5, 1.0, bank.rho.shape)
    bank.theta.data[...] = rng.uniform(-6.0, 6.0, bank.theta.shape)
    bank.beta_re.data[...] = rng.standard_normal((c_out, c_in, n_modes))
    bank.beta_im.data[...] = rng.standard_normal((c_out, c_in, n_modes))
    return bank


@_oracle("steady branch / spectral conv equivalence")
def oracle_steady_equivalence():
    rng = np.random.default_rng(101)
    worst = 0.0
    for trial in range(50):
        n = (26, 64, 100)[trial % 3]
        step = 1.0 / n
        bank = _random_bank(2, 2, 4, rng)
        v = rng.standard_normal((2, 2, n))
        mult = multiplier_matching_bank(bank, n, step)
        conv = spectral_conv_apply(Tensor(v), mult, axes=(2,)).data
        _, steady = lno_kernel_complex(Tensor(v), bank, step)
        worst = max(worst, float(np.max(np.abs(conv - steady.data.real))))
    return worst <= 1e-10, f"max abs gap {worst:.2e} (tol 1e-10, 50 banks)"


@_oracle("pole-residue kernel vs quadrature convolution")
def oracle_quadrature_convolution():
    rng = np.random.default_rng(202)
    n, refine, period = 64, 16, 1.0
    step = period / n
    t_coarse = step * np.arange(n)
    t_fine = period / (n * refine) * np.arange(n * refine)
    h = t_fine[1] - t_fine[0]
    worst = 0.0
    for trial in range(20):
        c = 2
        bank = _random_bank(c, c, 4, rng, "per_pair" if trial % 2 else "shared")
        m = 9
        coeff = (rng.standard_normal((1, c, 2 * m - 1))
                 + 1j * rng.standard_normal((1, c, 2 * m - 1)))
        modes = stored_modes(m)

        def signal(t):
            ph = np.exp(2j * np.pi * np.outer(t / period, modes))
            return np.real(coeff @ ph.T)

        v_c, v_f = signal(t_coarse), signal(t_fine)
        out = lno_kernel_apply(Tensor(v_c), bank, step).data
        with ad.no_grad():
            mu = bank.poles().data
            beta = bank.residues().data
        if bank.pole_mode == "shared":
            mu = np.broadcast_to(mu[None, None, :], beta.shape)
        ref = np.zeros((1, c, n))
        for j in range(1, n):
            tau = t_fine[:j * refine + 1]
            kern = np.sum(beta[..., None]
                          * np.exp(mu[..., None] * (t_coarse[j] - tau)), axis=2)
            integrand = np.einsum("oil,bil->bol", kern, v_f[:, :, :len(tau)])
            ref[:, :, j] = np.real(np.trapezoid(integrand, dx=h, axis=-1))
        scale = max(np.max(np.abs(ref)), 1e-12)
        worst = max(worst, float(np.max(np.abs(out - ref)) / scale))
    # single-exponential closed form
    worst_cf = 0.0
    for trial in range(5):
        mu = complex(-rng.uniform(0.2, 2.0), rng.uniform(-5, 5))
        beta = complex(*rng.standard_normal(2))
        ell = int(rng.integers(1, 8))
        omega = angular_frequencies(n, step)[ell]
        bank = PoleResidueBank(1, 1, 1)
        bank.rho.data[...] = np.log(np.expm1(-mu.real))
        bank.theta.data[...] = mu.imag
        bank.beta_re.data[...] = beta.real
        bank.beta_im.data[...] = beta.imag
        v = np.exp(1j * omega * t_coarse)[None, None, :]
        tr, st = lno_kernel_complex(Tensor(v), bank, step)
        conv = beta * (np.exp(1j * omega * t_coarse) - np.exp(mu * t_coarse)) \
            / (1j * omega - mu)
        gap = np.max(np.abs(tr.data[0, 0] + st.data[0, 0] - conv))
        worst_cf = max(worst_cf, float(gap))
    ok = worst <= 1e-4 and worst_cf <= 1e-8
    return ok, (f"quadrature rel gap {worst:.2e} (tol 1e-4), "
                f"closed form {worst_cf:.2e} (tol 1e-8)")


def _tiny_preset(name):
    if name in ("burgers", "diffusion"):
        bench = make_benchmark(name, nt=8, nx=8)
    elif name.startswith("rd"):
        bench = make_benchmark(name, nt=8, nx=9)
    elif name == "darcy":
        bench = make_benchmark("darcy", n_data=5, n_colloc=7, n_fine=13)
    else:
        bench = make_benchmark("fkdv", nt=8, nx=9)
    cfg = ModelConfig(kind="alno", layout=bench.layout,
                      in_channels=bench.in_channels, width=3, depth=1,
                      modes=(2, 2), n_poles=2, pole_mode="per_pair",
                      grid=bench.grid, seq_step=bench.seq_step, proj_width=6)
    return bench, cfg


def _tiny_samples(bench, count, rng, labelled=True):
    out = []
    for _ in range(count):
        if bench.name in ("burgers", "diffusion", "rd_task_a", "rd_task_b"):
            key = "f" if bench.name == "rd_task_b" else "u0"
            inputs = {key: 0.3 * rng.standard_normal(bench.space[0].n)}
        elif bench.name == "darcy":
            inputs = {"a_fine": np.where(rng.standard_normal((13, 13)) > 0,
                                         12.0, 3.0)}
        else:
            nt, nx = bench.time.n, bench.space[0].n
            inputs = {"f_x": 0.3 * rng.standard_normal((nt, nx)),
                      "u0": 0.3 * rng.standard_normal(nx),
                      "u_right": 0.3 * rng.standard_normal(nt),
                      "u_left": 0.3 * rng.standard_normal(nt),
                      "ux_right": 0.3 * rng.standard_normal(nt),
                      "alpha": 1.1, "beta": 0.4}
        label = None
        if labelled:
            label = 0.3 * rng.standard_normal(bench.data_grid)
        out.append(Sample(bench.name, inputs, label))
    return out


@_oracle("gradient check: decoupled layer and total losses")
def oracle_gradient_checks():
    rng = np.random.default_rng(303)
    worst = {}
    # (a) one decoupled kernel layer
    from ..operator.layers import alno_layer_apply, SpectralMultiplier
    c, nt, nx = 2, 6, 5
    v = Tensor(rng.standard_normal((1, c, nt, nx)))
    bank = _random_bank(c, c, 2, rng)
    mult = SpectralMultiplier.from_values(
        0.3 * (rng.standard_normal((c, c, 3, 3))
               + 1j * rng.standard_normal((c, c, 3, 3))), (2, 2))
    w = Tensor(0.4 * rng.standard_normal((c, c)), requires_grad=True)

    def layer_loss():
        out = alno_layer_apply(v, bank, mult, w, time_axis=2,
                               spectral_axes=(2, 3), time_step=1.0 / (nt - 1))
        return ad.tmean(ad.square(out))

    worst["layer"] = gradient_check(layer_loss, bank.parameters()
                                    + mult.parameters() + [w], epsilon=1e-5)
    # (b) the full physics-informed objective for each benchmark spec
    for name in ("burgers", "diffusion", "rd_task_a", "rd_task_b", "darcy",
                 "fkdv"):
        bench, cfg = _tiny_preset(name)
        model = build_model(cfg, seed=5)
        paired = build_batch(bench, _tiny_samples(bench, 2, rng))
        virtual = build_batch(bench, _tiny_samples(bench, 2, rng, labelled=False),
                              with_labels=False)
        weights = LossWeights(10.0, 1.0, 5.0, 5.0)
        sched = TcwSchedule("exp", gamma=2.0) if bench.time is not None \
            else TcwSchedule("none")

        def loss():
            val, _ = total_loss(model, paired, virtual, weights, sched)
            return val

        worst[name] = gradient_check(loss, model.parameters(), epsilon=1e-5)
    bad = {k: v for k, v in worst.items() if v > 1e-4}
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
    return not bad, f"max relative discrepancies: {detail} (tol 1e-4)"


@_oracle("causality weights: normalization, monotonicity, none-equality")
def oracle_tcw():
    ok = True
    worst = 0.0
    for K in (1, 25, 50, 99):
        t = np.linspace(0.0, 1.0, K + 1)
        for sched in (TcwSchedule("exp", gamma=2.0),
                      TcwSchedule("inv", alpha=3.0),
                      TcwSchedule("piecewise", w_max=5.0, w_min=0.5, t0=0.3)):
            w = tcw_weights(sched, t)
            worst = max(worst, abs(float(np.mean(w)) - 1.0))
            ok &= bool(np.all(np.diff(w) <= 1e-15))
    ok &= worst <= 1e-12
    # schedule none reproduces the unweighted PDE loss bitwise
    rng = np.random.default_rng(404)
    bench, cfg = _tiny_preset("rd_task_b")
    model = build_model(cfg, seed=1)
    batch = build_batch(bench, _tiny_samples(bench, 2, rng, labelled=False),
                        with_labels=False)
    w_only_pde = LossWeights(0.0, 1.0, 0.0, 0.0)
    a, _ = total_loss(model, None, batch, w_only_pde, TcwSchedule("none"))
    b, _ = total_loss(model, None, batch, w_only_pde, None)
    ok &= a.item() == b.item()
    return ok, f"normalization gap {worst:.1e} (tol 1e-12); none == unweighted"


@_oracle("solver convergence orders and Darcy structure")
def oracle_solver_convergence():
    # linearized Burgers (heat) against the analytic decay: spatial slope
    errs = []
    for n in (64, 128):
        x = np.arange(n) / n
        u0 = np.sin(2 * np.pi * x)
        out = solve_burgers(u0, nu=0.05, dt=5e-5, t_end=0.25, n_snapshots=2,
                            advect=False)
        exact = np.exp(-4 * np.pi ** 2 * 0.05 * 0.25) * u0
        errs.append(np.linalg.norm(out.values[-1] - exact) / np.sqrt(n))
    slope_burgers = float(np.log2(errs[0] / errs[1]))

    # reaction-diffusion manufactured solution: spatial slope
    D, k = 0.01, 0.01

    def u_star(x, t):
        return np.sin(np.pi * x) * np.sin(0.5 * np.pi * t)

    def forcing(x, t):
        u = u_star(x, t)
        return D * (-np.pi ** 2 * u) + k * u * u \
            - 0.5 * np.pi * np.sin(np.pi * x) * np.cos(0.5 * np.pi * t)

    errs = []
    for n in (26, 51, 101):
        traj = integrate_rd_manufactured(D, k, forcing, n, dt=1e-4, t_end=1.0,
                                         n_snapshots=2)
        x = np.linspace(0, 1, n)
        errs.append(np.linalg.norm(traj[-1] - u_star(x, 1.0)) / np.sqrt(n))
    slope_rd = float(np.polyfit(np.log([1 / 25, 1 / 50, 1 / 100]),
                                np.log(errs), 1)[0])

    # RK4 temporal slope by dt halving
    ref = integrate_rd_manufactured(D, k, forcing, 51, dt=1e-4, t_end=0.8,
                                    n_snapshots=2)[-1]
    terrs = [np.linalg.norm(integrate_rd_manufactured(
        D, k, forcing, 51, dt=dt, t_end=0.8, n_snapshots=2)[-1] - ref)
        for dt in (8e-3, 4e-3)]
    slope_rk4 = float(np.log2(terrs[0] / terrs[1]))

    # Darcy manufactured: second order; maximum principle; flux balance
    derrs = []
    for n in (17, 33, 65):
        x = np.linspace(0, 1, n)
        X, Y = np.meshgrid(x, x, indexing="ij")
        u_ref = np.sin(np.pi * X) * np.sin(np.pi * Y)
        u = solve_darcy(np.ones((n, n)), f=2 * np.pi ** 2 * u_ref).values
        derrs.append(np.linalg.norm(u - u_ref) / np.linalg.norm(u_ref))
    slope_darcy = float(np.polyfit(np.log([1 / 16, 1 / 32, 1 / 64]),
                                   np.log(derrs), 1)[0])
    a = sample_darcy_coefficient(65, seed=3).values
    u = solve_darcy(a)
    max_principle = bool(np.all(u.values >= 0.0))
    flux = boundary_flux(u, a)
    load = discrete_load(1.0, 65)
    flux_gap = abs(flux - load) / abs(load)

    ok = (slope_burgers >= 3.5 and slope_rd >= 3.5 and slope_rk4 >= 3.5
          and slope_darcy >= 1.8 and max_principle and flux_gap <= 1e-8)
    return ok, (f"slopes: heat {slope_burgers:.2f}, rd {slope_rd:.2f}, "
                f"rk4 {slope_rk4:.2f} (tol 3.5), darcy {slope_darcy:.2f} "
                f"(tol 1.8); max principle {max_principle}; "
                f"flux balance {flux_gap:.1e} (tol 1e-8)")


@_oracle("random-field statistics")
def oracle_grf_statistics():
    p = ExpSinKernelParams(sigma=0.2, length_scale=0.5)
    n, draws = 32, 10_000
    samples = np.stack([sample_periodic_field(n, p, seed=(9090, i)).values
                        for i in range(draws)])
    emp = samples.T @ samples / draws
    x = np.arange(n) / n
    K = kernel_eval(x[:, None], x[None, :], p)
    cov_gap = float(np.max(np.abs(emp - K)))
    fracs = [np.mean(sample_darcy_coefficient(65, seed=(8080, i)).values == 12.0)
             for i in range(1000)]
    frac_gap = abs(float(np.mean(fracs)) - 0.5)
    ok = cov_gap <= 0.005 and frac_gap <= 0.02
    return ok, (f"covariance max abs err {cov_gap:.4f} (tol 0.005); "
                f"permeability fraction off by {frac_gap:.4f} (tol 0.02)")


@_oracle("analytic forced-KdV pairs satisfy the PDE under refinement")
def oracle_fkdv_residual():
    coeffs = {"k": 1.0, "beta": 0.4, "alpha": 1.2, "delta": 0.9, "gamma": 1.1,
              "d": 1.0, "a": 0.3, "b": -0.4, "A": 0.7, "b0": 0.2, "b1": -0.3,
              "b2": 0.15}
    ok = True
    details = []
    for family in ("A", "B", "C"):
        norms = []
        for n in (100, 200, 400):
            x = np.linspace(-5.0, 5.0, n)
            t = np.linspace(0.0, 5.0, n)
            f, f_x, u, _ = fkdv.evaluate_family(family, coeffs, x, t)
            r = (grid_derivative(u, axis=0, order=1, h=t[1] - t[0])
                 + u * grid_derivative(u, axis=1, order=1, h=x[1] - x[0])
                 + coeffs["beta"] * grid_derivative(u, axis=1, order=3,
                                                    h=x[1] - x[0])
                 - coeffs["alpha"] * f_x)
            norms.append(np.sqrt(np.mean(r * r)))
        slopes = np.log2(np.array(norms[:-1]) / np.array(norms[1:]))
        ok &= bool(np.all(np.diff(norms) < 0) and np.all(slopes >= 1.5))
        details.append(f"{family}: slopes {slopes[0]:.2f}/{slopes[1]:.2f}")
    return ok, "; ".join(details) + " (scheme order 2, tol slope 1.5)"


@_oracle("mollifier hard constraints for arbitrary parameters")
def oracle_mollifier_constraints():
    rng = np.random.default_rng(606)
    ok = True
    bench = make_benchmark("darcy", n_data=11, n_colloc=31, n_fine=121)
    for trial in range(3):
        raw = rng.standard_normal((2, 31, 31))
        out = apply_mollifier(raw, bench)
        ok &= bool(np.all(out[:, 0, :] == 0.0) and np.all(out[:, -1, :] == 0.0)
                   and np.all(out[:, :, 0] == 0.0) and np.all(out[:, :, -1] == 0.0))
    bench_b = make_benchmark("rd_task_b", nt=26, nx=26)
    for trial in range(3):
        out = apply_mollifier(rng.standard_normal((2, 26, 26)), bench_b)
        ok &= bool(np.all(out[:, 0, :] == 0.0) and np.all(out[:, :, 0] == 0.0)
                   and np.all(out[:, :, -1] == 0.0))
    return ok, "boundary/initial slices exactly zero on random fields"


def run_oracle_suite(names=None):
    results = []
    for fn in ORACLES:
        if names and not any(s in fn.oracle_name for s in names):
            continue
        t0 = time.time()
        passed, detail = fn()
        results.append(OracleResult(fn.oracle_name, bool(passed), detail,
                                    time.time() - t0))
    return results
