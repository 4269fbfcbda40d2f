import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sok.spectral_ops import (
    NyquistError,
    aliasing_fold,
    low_pass,
    nonlinearity_bandwidth_probe,
    spectral_derivative,
    spectral_interpolate,
    spectral_resample,
    spectral_truncate,
    stride_downsample,
    validate_nyquist,
)
from sok.tensor_core import GridSpec, Layout, fft, fftn, fftshift, mode_indices, power_spectrum


def nodes(n, length=2 * np.pi):
    return np.arange(n) * length / n


def band_limited(rng, n, kmax):
    """Real signal built from explicit sines and cosines with |k| <= kmax."""
    x = nodes(n)
    out = np.full(n, rng.standard_normal())
    for k in range(1, kmax + 1):
        out += rng.standard_normal() * np.cos(k * x) + rng.standard_normal() * np.sin(k * x)
    return out


def fold_oracle(fine, coarse):
    """c_k = sum_m f_{k + m M} / sqrt(N / M), by explicit loops."""
    n = len(fine)
    s = n // coarse
    out = np.zeros(coarse, complex)
    for k in range(coarse):
        for m in range(s):
            out[k] += fine[k + m * coarse]
    return out / np.sqrt(s)


# interpolation and truncation ------------------------------------------------


def test_interpolation_40_to_120_reproduces_nodes():
    f = lambda x: np.cos(2 * x) + np.exp(np.sin(4 * x))  # noqa: E731
    coarse = f(nodes(40))
    fine = spectral_interpolate(coarse, GridSpec((40,)), 120)
    assert fine.shape == (120,)
    assert np.max(np.abs(fine[::3] - coarse)) <= 1e-10


def test_interpolation_exact_for_band_limited_sine():
    fine = spectral_interpolate(np.sin(3 * nodes(16)), GridSpec((16,)), 64)
    assert np.max(np.abs(fine - np.sin(3 * nodes(64)))) <= 1e-12


def test_down_then_up_is_identity_for_band_limited_signal():
    x = band_limited(np.random.default_rng(0), 64, 7)
    back = spectral_resample(spectral_resample(x, 32), 64)
    assert np.max(np.abs(back - x)) <= 1e-12


def test_interpolation_needs_periodic_grid():
    with pytest.raises(ValueError, match="periodic"):
        spectral_interpolate(np.zeros(8), GridSpec((8,), (1.0,), (False,)), 16)


def test_truncate_pure_mode():
    out = spectral_truncate(np.sin(3 * nodes(64)), 16)
    assert np.max(np.abs(out - np.sin(3 * nodes(16)))) <= 1e-12


def test_truncate_keeps_retained_block_of_white_noise():
    x = np.random.default_rng(1).standard_normal(64)
    out = spectral_truncate(x, 32)
    fine = fftn(x) / np.sqrt(64)
    coarse = fftn(out) / np.sqrt(32)
    k = np.arange(-15, 16)  # the coarse Nyquist bin is shared and handled separately
    np.testing.assert_allclose(coarse[k % 32], fine[k % 64], atol=1e-14)


def test_truncate_equals_lowpass_then_stride_on_band_limited_signal():
    x = band_limited(np.random.default_rng(2), 64, 12)
    via_stride = stride_downsample(low_pass(x, 15), 2)
    assert np.max(np.abs(spectral_truncate(x, 32) - via_stride)) <= 1e-12


def test_truncate_refuses_to_grow():
    with pytest.raises(ValueError, match="spectral_interpolate"):
        spectral_truncate(np.zeros(16), 32)


# derivatives -------------------------------------------------------------------


def test_derivative_of_sine():
    g = GridSpec((64,))
    x = nodes(64)
    assert np.max(np.abs(spectral_derivative(np.sin(3 * x), g) - 3 * np.cos(3 * x))) <= 1e-12


@pytest.mark.parametrize("k", [1, 5, 17])
def test_second_derivative_of_cosine(k):
    g = GridSpec((64,))
    x = nodes(64)
    err = np.max(np.abs(spectral_derivative(np.cos(k * x), g, order=2) + k * k * np.cos(k * x)))
    assert err <= 1e-12 * k * k


def test_derivative_of_exp_sin_against_analytic():
    g = GridSpec((64,))
    x = nodes(64)
    err = np.max(np.abs(spectral_derivative(np.exp(np.sin(x)), g) - np.cos(x) * np.exp(np.sin(x))))
    assert err <= 1e-10


def test_derivative_respects_domain_length():
    g = GridSpec((32,), (1.0,))
    x = nodes(32, 1.0)
    d = spectral_derivative(np.sin(2 * np.pi * 3 * x), g)
    np.testing.assert_allclose(d, 6 * np.pi * np.cos(2 * np.pi * 3 * x), atol=1e-11)


def test_derivative_along_second_axis_of_batch():
    g = GridSpec((16, 32))
    xx, yy = g.mesh()
    f = np.sin(xx) * np.cos(2 * yy)
    d = spectral_derivative(np.stack([f, 2 * f]), g, axis=1)
    np.testing.assert_allclose(d[1], -4 * np.sin(xx) * np.sin(2 * yy), atol=1e-12)


def test_negative_order_is_rejected():
    with pytest.raises(ValueError):
        spectral_derivative(np.zeros(8), GridSpec((8,)), order=-1)


def test_odd_derivative_zeroes_nyquist_bin():
    n = 16
    alternating = np.cos(np.pi * np.arange(n))  # pure Nyquist mode
    assert np.max(np.abs(spectral_derivative(alternating, GridSpec((n,))))) == 0.0
    second = spectral_derivative(alternating, GridSpec((n,)), order=2)
    np.testing.assert_allclose(second, -(n / 2) ** 2 * alternating, atol=1e-9)


def test_derivative_of_constant_is_exactly_zero():
    assert np.all(spectral_derivative(np.full(32, 3.7), GridSpec((32,))) == 0.0)


# low pass ----------------------------------------------------------------------


def test_low_pass_examples():
    x = nodes(64)
    np.testing.assert_allclose(low_pass(np.full(64, 2.0), 3), 2.0, atol=1e-15)
    assert np.max(np.abs(low_pass(np.sin(20 * x), 10))) <= 1e-12
    r = np.random.default_rng(3).standard_normal(64)
    once = low_pass(r, 9)
    np.testing.assert_allclose(low_pass(once, 9), once, atol=1e-14)


def test_low_pass_above_nyquist_is_rejected():
    with pytest.raises(NyquistError):
        low_pass(np.zeros(16), 9)


# aliasing ------------------------------------------------------------------------


def test_fold_of_high_cosine_peaks_at_six():
    x = np.arange(128) / 128
    f = np.cos(2 * np.pi * 10 * x)
    coarse = aliasing_fold(fft(f), 16).coeffs
    k = mode_indices(16)
    assert abs(k[np.argmax(np.abs(coarse))]) == 6


def test_fold_of_band_limited_signal_equals_truncation():
    x = band_limited(np.random.default_rng(4), 64, 7)
    folded = aliasing_fold(fft(x), 16).coeffs
    truncated = fftn(spectral_truncate(x, 16))
    assert np.max(np.abs(folded - truncated)) <= 1e-12


@pytest.mark.parametrize("s", [2, 4, 8])
def test_fold_equals_transform_of_strided_signal(s):
    x = np.random.default_rng(s).standard_normal(128)
    lhs = fftn(stride_downsample(x, s))
    rhs = aliasing_fold(fft(x), 128 // s).coeffs
    assert np.max(np.abs(lhs - rhs)) <= 1e-12
    np.testing.assert_allclose(rhs, fold_oracle(fftn(x), 128 // s), atol=1e-12)


def test_fold_accepts_centered_spectra():
    x = np.random.default_rng(5).standard_normal(32)
    centered = aliasing_fold(fftshift(fft(x)), 8)
    assert centered.layout is Layout.CENTERED
    natural = aliasing_fold(fft(x), 8)
    np.testing.assert_allclose(np.roll(centered.coeffs, -4), natural.coeffs, atol=1e-14)


def test_fold_rejects_non_divisor():
    with pytest.raises(ValueError):
        aliasing_fold(fft(np.zeros(12)), 5)


# nonlinearity probe -----------------------------------------------------------------


def test_gelu_broadens_and_aliases():
    sig = lambda x: 0.5 * np.sin(5 * x) + 0.5 * np.cos(20 * x)  # noqa: E731
    rep = nonlinearity_bandwidth_probe(sig, "gelu", [64, 128])
    fine = rep.spectra[128]
    beyond = np.abs(mode_indices(128)) > 32
    assert fine[beyond].sum() > 1e-12
    assert rep.max_mode[128] > 32
    assert rep.aliased_energy > 1e-6


def test_square_doubles_the_band():
    x = nodes(64)
    sig = np.cos(5 * x) + 0.3 * np.sin(2 * x)
    rep = nonlinearity_bandwidth_probe(sig, "square", [64])
    assert rep.max_mode[64] == 10


def test_constant_signal_never_broadens():
    rep = nonlinearity_bandwidth_probe(lambda x: np.full_like(x, 0.7), "tanh", [16, 32, 64])
    assert all(v == 0 for v in rep.max_mode.values())
    assert rep.aliased_energy == 0.0
    rows = list(rep.rows())
    assert len(rows) == 16 + 32 + 64 and rows[0][2] == "N=16"


def test_probe_rejects_unknown_activation():
    with pytest.raises(ValueError):
        nonlinearity_bandwidth_probe(np.zeros(8), "relu6", [8])


# nyquist validation ------------------------------------------------------------------


def test_validate_nyquist_cases():
    g = GridSpec((64,))
    assert validate_nyquist(16, g).clean
    hard = validate_nyquist(65, g)
    assert not hard.ok and hard.hard == [0]
    with pytest.raises(NyquistError):
        hard.raise_if_hard()
    soft = validate_nyquist(48, g)
    assert soft.ok and not soft.clean and soft.soft == [0]
    assert validate_nyquist(48, g, soft_ratio=0.8).clean


# invariants ----------------------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(
    st.integers(4, 48),
    st.integers(1, 4),
    st.integers(0, 2**31 - 1),
)
def test_interpolate_then_resample_at_original_nodes(n, factor, seed):
    x = np.random.default_rng(seed).standard_normal(n)
    up = spectral_interpolate(x, GridSpec((n,)), n * factor)
    assert np.max(np.abs(up[::factor] - x)) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2**31 - 1))
def test_derivative_orders_compose(a, b, seed):
    g = GridSpec((64,))
    x = band_limited(np.random.default_rng(seed), 64, 20)
    lhs = spectral_derivative(spectral_derivative(x, g, order=a), g, order=b)
    rhs = spectral_derivative(x, g, order=a + b)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * max(1.0, 20.0 ** (a + b))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([1, 2, 3, 4, 6, 8, 12, 16, 24, 48]), st.integers(0, 2**31 - 1))
def test_fold_commutes_with_stride_for_every_divisor(s, seed):
    x = np.random.default_rng(seed).standard_normal(48) + 1j * np.random.default_rng(seed + 1).standard_normal(48)
    lhs = fftn(stride_downsample(x, s))
    rhs = aliasing_fold(fft(x), 48 // s).coeffs
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([16, 32, 64, 128]), st.data())
def test_squared_signal_support_is_twice_the_band(n, data):
    k = data.draw(st.integers(1, n // 4 - 1 if n // 4 > 1 else 1))
    seed = data.draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    coeffs = np.zeros(n, complex)
    for m in range(-k, k + 1):
        coeffs[m % n] = rng.standard_normal() + 1j * rng.standard_normal()
    coeffs[k % n] = 1.0 + rng.random()  # the top mode is present on both sides
    coeffs[-k % n] = 1.0 - 0.5j
    signal = np.fft.ifft(coeffs)
    power = power_spectrum(signal * signal)
    modes = np.abs(mode_indices(n))
    assert power[modes > 2 * k].sum() <= 1e-12 * power.sum()
    top = power[modes == 2 * k].sum()
    assert top > 1e-6 * power.sum()
