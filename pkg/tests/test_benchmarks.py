import numpy as np
import pytest

from pilno.benchmarks import Sample, build_batch, encode_batch, make_benchmark
from pilno.bench.data import make_paired_sample


def test_burgers_encoding_channels():
    bench = make_benchmark("burgers")
    u0 = np.linspace(-1, 1, 32)
    enc = encode_batch(bench, [Sample("burgers", {"u0": u0})])
    assert enc.shape == (1, 3, 26, 32)
    # channel 0: the input broadcast over time
    assert np.array_equal(enc[0, 0, 0], u0)
    assert np.array_equal(enc[0, 0, -1], u0)
    # channels 1/2: space and time coordinates
    assert enc[0, 1, 0, 0] == 0.0 and enc[0, 1, 0, -1] == pytest.approx(31 / 32)
    assert enc[0, 2, 0, 0] == 0.0 and enc[0, 2, -1, 0] == 1.0


def test_fkdv_encoding_channel_order():
    # operator-mapping order: u(L,t), u(-L,t), u_x(L,t), u(x,0), f_x, alpha, beta
    bench = make_benchmark("fkdv", nt=6, nx=7)
    inputs = {"u_right": np.arange(6.0), "u_left": 10 + np.arange(6.0),
              "ux_right": 20 + np.arange(6.0), "u0": 30 + np.arange(7.0),
              "f_x": np.arange(42.0).reshape(6, 7), "alpha": 1.5, "beta": 0.25}
    enc = encode_batch(bench, [Sample("fkdv", inputs)])
    assert enc.shape == (1, 7, 6, 7)
    assert np.array_equal(enc[0, 0, :, 3], inputs["u_right"])
    assert np.array_equal(enc[0, 1, :, 0], inputs["u_left"])
    assert np.array_equal(enc[0, 2, :, 5], inputs["ux_right"])
    assert np.array_equal(enc[0, 3, 2, :], inputs["u0"])
    assert np.array_equal(enc[0, 4], inputs["f_x"])
    assert np.all(enc[0, 5] == 1.5) and np.all(enc[0, 6] == 0.25)


def test_darcy_two_grid_encoding():
    bench = make_benchmark("darcy", n_data=5, n_colloc=7, n_fine=13)
    a = np.arange(169.0).reshape(13, 13)
    sample = Sample("darcy", {"a_fine": a})
    phys = encode_batch(bench, [sample], which="phys")
    data = encode_batch(bench, [sample], which="data")
    assert phys.shape == (1, 3, 7, 7) and data.shape == (1, 3, 5, 5)
    # nearest-node restriction: stride 2 and 3 subsampling of the fine field
    assert np.array_equal(phys[0, 0], a[::2, ::2])
    assert np.array_equal(data[0, 0], a[::3, ::3])


def test_build_batch_label_guard():
    bench = make_benchmark("burgers")
    s = Sample("burgers", {"u0": np.zeros(32)})
    with pytest.raises(ValueError, match="labels"):
        build_batch(bench, [s], with_labels=True)
    batch = build_batch(bench, [s], with_labels=False)
    assert batch.labels is None and batch.size == 1


def test_wrong_resolution_rejected():
    bench = make_benchmark("burgers")
    with pytest.raises(ValueError, match="nodes"):
        encode_batch(bench, [Sample("burgers", {"u0": np.zeros(17)})])


def test_paired_sample_consistency_rd():
    bench = make_benchmark("rd_task_b", nt=26, nx=26)
    s = make_paired_sample(bench, 0, seed=3, ell=2.0)
    assert s.inputs["f"].shape == (26,)
    assert s.label.shape == (26, 26)
    # forcing-driven task starts from rest
    assert np.array_equal(s.label[0], np.zeros(26))
