import numpy as np
import pytest
import scipy.sparse.linalg as spla
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import BarycentricInterpolator

from sok.extension import (
    ConditioningError,
    ExtensionMethod,
    blend_weight,
    build_extension,
    build_fc_gram,
    build_fc_legendre,
    build_mirror_pad,
    build_spectrum_opt,
    build_zero_pad,
    extend_1d,
    extend_nd,
    extend_spectrum_opt,
    extended_derivative,
    restrict,
    restrict_nd,
    seam_jump,
    sobolev_energy,
)


def wrap_positions(n, d, c):
    """Sample positions (in units of h) of the right stencil, gap and wrapped left stencil."""
    right = np.arange(n - d, n, dtype=float)
    gap = np.arange(n, n + c, dtype=float)
    left = np.arange(n + c, n + c + d, dtype=float)
    return right, gap, left


def gap_values(extended, n, c):
    """Extension values in order from just after f[-1] around to just before f[0]."""
    half = c // 2
    return np.concatenate([extended[half + n:], extended[:half]])


def signal_from_polynomial(p, n, d, c, rng):
    """Random interior whose two boundary stencils sample ``p`` at wrap positions."""
    f = rng.standard_normal(n)
    right, _, left = wrap_positions(n, d, c)
    f[n - d:] = p(right)
    f[:d] = p(left)
    return f


def sobolev_oracle(x, s, include_mean=True):
    k = np.fft.fftfreq(len(x), 1.0 / len(x))
    w = (1 + k * k) ** s if include_mean else np.where(k == 0, 0.0, np.abs(k) ** (2 * s))
    coeffs = np.fft.fft(x, norm="ortho")
    return float(np.sum(w * np.abs(coeffs) ** 2))


# padding --------------------------------------------------------------------------------


def test_zero_pad_example():
    assert extend_1d([1, 2, 3], build_zero_pad(2)).tolist() == [0, 1, 2, 3, 0]


def test_mirror_pad_example():
    assert extend_1d([1, 2, 3], build_mirror_pad(2)).tolist() == [2, 1, 2, 3, 2]


def test_mirror_pad_longer_reflection():
    f = np.arange(1.0, 7.0)
    out = extend_1d(f, build_mirror_pad(6))
    assert out.tolist() == [4, 3, 2, 1, 2, 3, 4, 5, 6, 5, 4, 3]


def test_mirror_needs_enough_samples():
    with pytest.raises(ValueError):
        extend_1d([1.0, 2.0], build_mirror_pad(4))


@pytest.mark.parametrize("c", [0, 3, -2])
def test_bad_extension_length(c):
    with pytest.raises(ValueError):
        build_zero_pad(c)
    with pytest.raises(ValueError):
        build_fc_legendre(2, c)


# FC-Legendre --------------------------------------------------------------------------------


def test_fc_legendre_reproduces_interpolating_polynomial_for_linear_data():
    n, d, c = 20, 3, 8
    x = np.linspace(0, 1, n)
    out = extend_1d(x, build_fc_legendre(d, c, n))
    right, gap, left = wrap_positions(n, d, c)
    interp = BarycentricInterpolator(np.concatenate([right, left]), np.concatenate([x[n - d:], x[:d]]))
    assert np.max(np.abs(gap_values(out, n, c) - interp(gap))) <= 1e-8
    np.testing.assert_array_equal(restrict(out, n, c), x)


def test_fc_legendre_d1_is_linear_blend():
    n, c = 10, 6
    f = np.random.default_rng(0).standard_normal(n)
    out = gap_values(extend_1d(f, build_fc_legendre(1, c)), n, c)
    j = np.arange(1, c + 1)
    expected = f[-1] + (f[0] - f[-1]) * j / (c + 1)
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_fc_legendre_reproduces_quintic():
    n, d, c = 24, 3, 10
    p = lambda t: ((t - n) / 10.0) ** 5  # noqa: E731
    f = signal_from_polynomial(p, n, d, c, np.random.default_rng(1))
    out = gap_values(extend_1d(f, build_fc_legendre(d, c, n)), n, c)
    _, gap, _ = wrap_positions(n, d, c)
    assert np.max(np.abs(out - p(gap))) <= 1e-8


def test_fc_legendre_continuation_of_two_tone_signal_is_smooth_at_the_seam():
    # 101 points on [0, 1] with 25 extension points per side spans [-0.25, 1.25]
    n, c, d = 101, 50, 6
    x = np.linspace(0, 1, n)
    f = np.sin(16 * x) - np.cos(8 * x)
    out = extend_1d(f, build_fc_legendre(d, c, n))
    assert out.size == n + c
    span = np.ptp(f)
    # a difference of order 2d vanishes on the degree 2d-1 continuation
    assert seam_jump(out, 0, 2 * d - 1) <= 1e-6 * span
    # no jump where the continuation meets the data
    interior = max(seam_jump(out, p, 0) for p in range(c // 2 + 1, c // 2 + n))
    assert seam_jump(out, c // 2, 0) <= interior
    assert seam_jump(out, c // 2 + n, 0) <= interior


def test_fc_legendre_rejects_short_signals_and_bad_stencils():
    with pytest.raises(ValueError):
        build_fc_legendre(4, 8, n=7)
    with pytest.raises(ValueError):
        extend_1d(np.zeros(5), build_fc_legendre(3, 4))
    with pytest.raises(ValueError):
        build_fc_legendre(0, 4)


def test_fc_legendre_rank_deficient_fit_reports_conditioning():
    with pytest.raises(ConditioningError, match="condition number"):
        build_fc_legendre(30, 2)


# FC-Gram --------------------------------------------------------------------------------------


def test_fc_gram_constant_stays_constant():
    out = extend_1d(np.full(16, 2.5), build_fc_gram(4, 10))
    np.testing.assert_allclose(out, 2.5, atol=1e-12)


def test_fc_gram_linear_signal_blends_boundary_lines():
    n, d, c = 12, 2, 8
    rng = np.random.default_rng(2)
    f = rng.standard_normal(n)
    out = gap_values(extend_1d(f, build_fc_gram(d, c)), n, c)
    right, gap, left = wrap_positions(n, d, c)
    right_line = np.polyval(np.polyfit(right, f[n - d:], 1), gap)
    left_line = np.polyval(np.polyfit(left, f[:d], 1), gap)
    w = 0.5 * (1 + np.cos(np.pi * (gap - (n - 1)) / (c + 1)))
    np.testing.assert_allclose(out, w * right_line + (1 - w) * left_line, atol=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_fc_gram_reproduces_shared_polynomials(d):
    n, c = 20, 10
    coeffs = np.random.default_rng(d).standard_normal(d)
    p = lambda t: np.polyval(coeffs, (t - n) / 8.0)  # noqa: E731
    f = signal_from_polynomial(p, n, d, c, np.random.default_rng(10 + d))
    out = gap_values(extend_1d(f, build_fc_gram(d, c, n)), n, c)
    _, gap, _ = wrap_positions(n, d, c)
    assert np.max(np.abs(out - p(gap))) <= 1e-9


def test_blend_weight_is_monotone_from_one_to_zero():
    t = np.linspace(0, 1, 50)
    w = blend_weight(t)
    assert w[0] == 1.0 and abs(w[-1]) < 1e-15
    assert np.all(np.diff(w) <= 0)


# spectrum optimization ----------------------------------------------------------------------------


def test_spectrum_opt_constant_is_its_own_extension_without_mean_term():
    out = extend_spectrum_opt(np.full(12, -1.25), 8, s=1.5, include_mean=False)
    np.testing.assert_allclose(out, -1.25, atol=1e-10)


def test_spectrum_opt_matches_iterative_minimizer():
    n, c, s = 32, 16, 1.0
    f = np.sin(3 * np.linspace(0, 1, n)) + 0.2 * np.random.default_rng(3).standard_normal(n)
    closed = extend_spectrum_opt(f, c, s)
    total = n + c
    half = c // 2
    interior = np.arange(half, half + n)
    free = np.concatenate([np.arange(half + n, total), np.arange(half)])
    k = np.fft.fftfreq(total, 1.0 / total)
    w2 = (1 + k * k) ** s

    def hessian(v):
        x = np.zeros(total)
        x[free] = v
        return np.fft.ifft(w2 * np.fft.fft(x, norm="ortho"), norm="ortho").real[free]

    base = np.zeros(total)
    base[interior] = f
    rhs = -np.fft.ifft(w2 * np.fft.fft(base, norm="ortho"), norm="ortho").real[free]
    op = spla.LinearOperator((c, c), matvec=hessian, dtype=float)
    v, info = spla.cg(op, rhs, rtol=1e-14, atol=0.0, maxiter=10_000)
    assert info == 0
    assert np.max(np.abs(closed[free] - v)) <= 1e-8


def test_spectrum_opt_beats_random_perturbations():
    n, c, s = 64, 32, 1.0
    x = np.linspace(0, 1, n)
    f = np.sin(16 * x) - np.cos(8 * x)
    best = extend_spectrum_opt(f, c, s)
    energy = sobolev_energy(best, s)
    assert energy == pytest.approx(sobolev_oracle(best, s), rel=1e-12)
    rng = np.random.default_rng(4)
    half = c // 2
    free = np.r_[0:half, half + n:n + c]
    for _ in range(100):
        trial = best.copy()
        trial[free] += rng.standard_normal(c) * 10 ** rng.uniform(-6, 0)
        assert energy <= sobolev_oracle(trial, s)


def test_spectrum_opt_gradient_vanishes():
    n, c, s = 40, 20, 2.0
    f = np.cos(5 * np.linspace(0, 1, n)) + np.linspace(0, 1, n) ** 2
    x = extend_spectrum_opt(f, c, s)
    total = n + c
    k = np.fft.fftfreq(total, 1.0 / total)
    grad = 2 * np.fft.ifft((1 + k * k) ** s * np.fft.fft(x, norm="ortho"), norm="ortho").real
    half = c // 2
    free = np.r_[0:half, half + n:total]
    assert np.max(np.abs(grad[free])) <= 1e-8 * np.max(np.abs(grad))


def test_spectrum_opt_validation():
    with pytest.raises(ValueError):
        build_spectrum_opt(10, 4, s=-1)
    with pytest.raises(ValueError):
        build_extension("spectrum-opt", c=4)
    op = build_spectrum_opt(10, 4)
    with pytest.raises(ValueError):
        extend_1d(np.zeros(11), op)


# restriction and n-d ----------------------------------------------------------------------------------


@pytest.mark.parametrize("method", list(ExtensionMethod))
def test_restrict_inverts_extend(method):
    n = 30
    f = np.random.default_rng(5).standard_normal(n)
    op = build_extension(method, d=4, c=12, n=n)
    out = extend_1d(f, op)
    np.testing.assert_array_equal(restrict(out, n, 12), f)


def test_restrict_length_mismatch():
    with pytest.raises(ValueError):
        restrict(np.zeros(10), 6, 2)


def test_extend_nd_separable_field():
    nx, ny, c = 10, 14, 6
    fx = np.linspace(-1, 2, nx)
    gy = np.linspace(0.5, 1, ny)
    op = build_fc_legendre(2, c)
    out = extend_nd(np.outer(fx, gy), op)
    expected = np.outer(extend_1d(fx, op), extend_1d(gy, op))
    np.testing.assert_allclose(out, expected, atol=1e-12)


def test_extend_nd_constant_and_round_trip():
    ops = [build_fc_legendre(3, 8), build_fc_gram(2, 4)]
    const = extend_nd(np.full((12, 9), 0.75), ops)
    assert const.shape == (20, 13)
    np.testing.assert_allclose(const, 0.75, atol=1e-11)
    field = np.random.default_rng(6).standard_normal((12, 9))
    np.testing.assert_array_equal(restrict_nd(extend_nd(field, ops), field.shape, ops), field)


def test_extend_nd_needs_one_operator_per_axis():
    with pytest.raises(ValueError):
        extend_nd(np.zeros((8, 8)), [build_zero_pad(2)])


# derivatives through extensions ---------------------------------------------------------------------------


def test_extension_suppresses_boundary_oscillation():
    n = 128
    h = 1.0 / n
    x = np.arange(n) * h
    f = np.exp(-x) + np.sin(3 * x)
    exact = -np.exp(-x) + 3 * np.cos(3 * x)
    fc = np.max(np.abs(extended_derivative(f, h, build_fc_legendre(6, 32, n)) - exact))
    zero = np.max(np.abs(extended_derivative(f, h, build_zero_pad(32)) - exact))
    none = np.max(np.abs(extended_derivative(f, h) - exact))
    assert zero / fc >= 100
    assert none / fc >= 1000


# invariants ----------------------------------------------------------------------------------------------


operators = st.sampled_from(
    [
        build_zero_pad(6),
        build_mirror_pad(6),
        build_fc_legendre(3, 10),
        build_fc_gram(3, 10),
        build_spectrum_opt(24, 8, 1.0),
    ]
)


@settings(max_examples=60, deadline=None)
@given(operators, st.integers(0, 2**31 - 1))
def test_interior_is_preserved_exactly(op, seed):
    f = np.random.default_rng(seed).standard_normal(24)
    out = extend_1d(f, op)
    half = op.c // 2
    np.testing.assert_array_equal(out[half:half + 24], f)


@settings(max_examples=60, deadline=None)
@given(operators, st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**31 - 1))
def test_extension_is_linear(op, a, b, seed):
    rng = np.random.default_rng(seed)
    f, g = rng.standard_normal(24), rng.standard_normal(24)
    lhs = extend_1d(a * f + b * g, op)
    rhs = a * extend_1d(f, op) + b * extend_1d(g, op)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), st.sampled_from([4, 8, 16]), st.integers(0, 2**31 - 1))
def test_prebuilt_operator_equals_fresh_one(d, c, seed):
    batch = np.random.default_rng(seed).standard_normal((5, 3 * d + 4))
    shared = build_fc_legendre(d, c)
    together = extend_1d(batch, shared)
    for row, got in zip(batch, together):
        fresh = build_fc_legendre(d, c)
        np.testing.assert_array_equal(fresh.matrices[0], shared.matrices[0])
        np.testing.assert_allclose(got, extend_1d(row, fresh), rtol=1e-14, atol=1e-14)
