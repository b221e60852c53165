import numpy as np
import pytest

from pilno.fourier import dft_1d, dft_matrix, mode_to_bin, signed_modes


def naive_dft(x, inverse=False):
    n = len(x)
    sign = 2j if inverse else -2j
    M = np.exp(sign * np.pi * np.outer(np.arange(n), np.arange(n)) / n)
    return (M @ x) / (n if inverse else 1)


def test_constant_signal_only_dc():
    X = dft_1d(np.array([1.0, 1.0, 1.0, 1.0]))
    assert np.allclose(X, [4, 0, 0, 0], atol=1e-14)


def test_hand_evaluated_four_point():
    # X_k = sum_j x_j e^{-2 pi i jk/4} for x = [1, 0, -1, 0]
    X = dft_1d(np.array([1.0, 0.0, -1.0, 0.0]))
    assert np.allclose(X, [0, 2, 0, 2], atol=1e-14)


@pytest.mark.parametrize("n", [4, 26, 32, 51, 100, 128, 241])
def test_round_trip_identity(n):
    rng = np.random.default_rng(n)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    back = dft_1d(dft_1d(x), inverse=True)
    assert np.max(np.abs(back - x)) <= 1e-12


@pytest.mark.parametrize("n", [4, 32, 100, 128])
def test_parseval(n):
    rng = np.random.default_rng(n + 7)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    X = dft_1d(x)
    lhs = np.sum(np.abs(x) ** 2)
    rhs = np.sum(np.abs(X) ** 2) / n
    assert abs(lhs - rhs) <= 1e-10 * lhs


@pytest.mark.parametrize("n", [1, 2, 13, 17, 26, 51, 64])
@pytest.mark.parametrize("inverse", [False, True])
def test_matches_definition_sum(n, inverse):
    rng = np.random.default_rng(n * 3 + inverse)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    ref = naive_dft(x, inverse)
    got = dft_1d(x, inverse=inverse)
    assert np.max(np.abs(got - ref)) <= 1e-10 * max(1.0, np.max(np.abs(ref)))


@pytest.mark.parametrize("n", [13, 26, 51, 100, 241, 300])
def test_engines_agree(n):
    rng = np.random.default_rng(n)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    a = dft_1d(x, engine="matrix")
    b = dft_1d(x, engine="bluestein")
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(a))
    ia = dft_1d(x, inverse=True, engine="matrix")
    ib = dft_1d(x, inverse=True, engine="bluestein")
    assert np.max(np.abs(ia - ib)) <= 1e-12


def test_batched_axis_transform():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((3, 26, 5))
    X = dft_1d(x, axis=1)
    for i in range(3):
        for j in range(5):
            assert np.allclose(X[i, :, j], naive_dft(x[i, :, j]), atol=1e-10)


def test_inverse_matrix_carries_normalization():
    M = dft_matrix(8) @ dft_matrix(8, inverse=True)
    assert np.allclose(M, np.eye(8), atol=1e-13)


def test_signed_modes_fftfreq_layout():
    assert list(signed_modes(6)) == [0, 1, 2, -3, -2, -1]
    assert list(signed_modes(5)) == [0, 1, 2, -2, -1]
    assert mode_to_bin(-3, 6) == 3
    assert mode_to_bin(3, 6) is None  # even-n Nyquist is the negative bin
    assert mode_to_bin(2, 5) == 2
    assert mode_to_bin(-2, 5) == 3
