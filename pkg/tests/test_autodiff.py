import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sok import autodiff as ad
from sok.tensor_core import fftn, ifftn

STEP = 1e-5


def central_gradient(fn, x):
    """Central differences of a real scalar function; complex x is probed along 1 and i."""
    x = np.asarray(x)
    grad = np.zeros(x.shape, dtype=x.dtype)
    units = (1.0, 1j) if np.iscomplexobj(x) else (1.0,)
    for unit in units:
        for i in np.ndindex(x.shape):
            up, down = x.copy(), x.copy()
            up[i] += unit * STEP
            down[i] -= unit * STEP
            grad[i] += unit * (fn(up) - fn(down)) / (2 * STEP)
    return grad


def tape_gradient(fn, x):
    tape = ad.Tape()
    v = tape.watch(x)
    (g,) = tape.gradient(fn(v), [v])
    return g


def rel_err(a, b):
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return np.linalg.norm(a - b) / scale


rng = np.random.default_rng(0)
REAL = rng.standard_normal((3, 8))
CPLX = rng.standard_normal((3, 8)) + 1j * rng.standard_normal((3, 8))
PROBE = rng.standard_normal((3, 8)) + 1j * rng.standard_normal((3, 8))
MATRIX = rng.standard_normal((8, 5))


def scalarize(y):
    """Real scalar that touches every entry, so cotangents are generic."""
    yv = ad.value_of(y)
    weights = np.cos(np.arange(yv.size)).reshape(yv.shape) + 0.5
    if np.iscomplexobj(yv):
        return ad.sum(ad.real(ad.mul(y, weights * (1 - 0.3j))))
    return ad.sum(ad.mul(y, weights))


PRIMITIVES = {
    "add": (REAL, lambda x: ad.add(x, ad.mul(x, x))),
    "sub": (REAL, lambda x: ad.sub(ad.square(x), x)),
    "neg": (REAL, lambda x: ad.neg(ad.square(x))),
    "mul_broadcast": (REAL, lambda x: ad.mul(x, ad.sum(x, 0, keepdims=True))),
    "div": (REAL, lambda x: ad.square(x) / 3.0),
    "einsum": (REAL, lambda x: ad.einsum("ij,jk->ik", x, MATRIX)),
    "einsum_both": (REAL, lambda x: ad.einsum("ij,kj->ik", x, x)),
    "fftn": (CPLX, lambda x: ad.fftn(x, 1)),
    "ifftn": (CPLX, lambda x: ad.ifftn(x, (0, 1))),
    "fftn_real_input": (REAL, lambda x: ad.fftn(x, 1)),
    "fftshift": (CPLX, lambda x: ad.mul(ad.fftshift(x, 1), PROBE)),
    "ifftshift": (CPLX, lambda x: ad.mul(ad.ifftshift(x, (0, 1)), PROBE)),
    "getitem": (REAL, lambda x: ad.square(ad.getitem(x, (slice(1, 3), slice(2, 7))))),
    "embed": (REAL, lambda x: ad.square(ad.embed(x, (4, 10), (slice(1, 4), slice(1, 9))))),
    "real": (CPLX, lambda x: ad.square(ad.real(x))),
    "imag": (CPLX, lambda x: ad.square(ad.imag(x))),
    "gelu": (REAL, ad.gelu),
    "relu": (REAL + 0.05, ad.relu),
    "tanh": (REAL, ad.tanh),
    "identity": (REAL, ad.identity),
    "square": (REAL, ad.square),
    "abs2": (CPLX, ad.abs2),
    "abs_pow": (REAL, lambda x: ad.abs_pow(x, 1.5)),
    "abs_pow_complex": (CPLX, lambda x: ad.abs_pow(x, 3.0)),
    "power": (np.abs(REAL) + 0.5, lambda x: ad.power(x, -0.5)),
    "sum": (REAL, lambda x: ad.square(ad.sum(x, 1))),
    "mean": (REAL, lambda x: ad.square(ad.mean(x, 0, keepdims=True))),
    "reshape": (REAL, lambda x: ad.mul(ad.reshape(x, (4, 6)), np.arange(24.0).reshape(4, 6))),
    "transpose": (REAL, lambda x: ad.mul(ad.transpose(x, (1, 0)), MATRIX[:, :3])),
    "complex_scale": (REAL, lambda x: ad.mul(x, 2 - 1j)),
}


@pytest.mark.parametrize("name", sorted(PRIMITIVES))
def test_primitive_gradient_matches_central_differences(name):
    x0, fn = PRIMITIVES[name]
    loss = lambda v: scalarize(fn(v))  # noqa: E731
    fd = central_gradient(lambda v: float(ad.value_of(loss(v))), x0)
    assert rel_err(tape_gradient(loss, x0), fd) <= 1e-5


def test_linear_loss_gradient_is_the_weight_vector():
    w = np.array([0.5, -2.0, 3.25, 1e-3])
    g = tape_gradient(lambda x: ad.sum(ad.mul(x, w)), np.ones(4))
    np.testing.assert_array_equal(g, w)


def test_fft_adjoint_is_inverse_transform():
    x = CPLX[0]
    y = PROBE[0]
    lhs = np.vdot(y, fftn(x))
    rhs = np.vdot(ifftn(y), x)
    assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(x) * np.linalg.norm(y)
    # tape cotangent of Re<y, F x> with respect to x is F^H y
    g = tape_gradient(lambda v: ad.sum(ad.real(ad.mul(ad.fftn(v), np.conj(y)))), x)
    np.testing.assert_allclose(g, ifftn(y), atol=1e-12)


def test_reused_value_accumulates():
    g = tape_gradient(lambda x: ad.sum(ad.mul(x, x)), np.array([1.0, -2.0, 3.0]))
    np.testing.assert_array_equal(g, [2.0, -4.0, 6.0])


def test_gelu_derivative_at_zero_is_one_half():
    g = tape_gradient(lambda x: ad.sum(ad.gelu(x)), np.zeros(3))
    np.testing.assert_allclose(g, 0.5, atol=1e-15)


def test_non_scalar_root_is_rejected():
    tape = ad.Tape()
    x = tape.watch(np.ones(3))
    with pytest.raises(ValueError, match="scalar"):
        tape.gradient(ad.square(x), [x])


def test_complex_root_is_rejected():
    tape = ad.Tape()
    x = tape.watch(np.ones(2) + 0j)
    with pytest.raises(ValueError, match="real"):
        tape.gradient(ad.sum(x), [x])


def test_foreign_tape_is_rejected():
    a, b = ad.Tape(), ad.Tape()
    x = a.watch(1.0)
    y = b.watch(2.0)
    with pytest.raises(ValueError):
        a.gradient(ad.square(x), [y])


def test_tape_is_topologically_ordered():
    tape = ad.Tape()
    x = tape.watch(np.arange(3.0))
    y = ad.sum(ad.square(ad.add(x, 1.0)))
    assert len(tape) == y.index + 1
    for i, node in enumerate(tape.nodes):
        assert all(p.index < i for p in node.parents if p is not None)


def test_unused_source_gets_zero_gradient():
    tape = ad.Tape()
    x = tape.watch(np.ones(2))
    y = tape.watch(np.ones(3))
    gx, gy = tape.gradient(ad.sum(x), [x, y])
    np.testing.assert_array_equal(gx, 1.0)
    np.testing.assert_array_equal(gy, 0.0)


def test_plain_arrays_pass_through_without_tape():
    out = ad.sum(ad.gelu(np.array([0.0, 1.0])))
    assert isinstance(out, np.ndarray) or np.isscalar(out)


def test_library_finite_difference_check_reports_small_errors():
    params = {"a": REAL.copy(), "b": CPLX.copy()}

    def loss(p):
        return ad.sum(ad.abs2(ad.add(ad.fftn(p["a"], 1), ad.mul(p["b"], 0.5))))

    errors = ad.finite_difference_check(loss, params)
    assert max(errors.values()) <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(1.0, 4.0))
def test_lp_style_chain_gradient(seed, p):
    r = np.random.default_rng(seed)
    target = r.standard_normal(16)
    x0 = r.standard_normal(16)
    loss = lambda v: ad.sum(ad.abs_pow(ad.sub(ad.real(ad.ifftn(ad.fftn(v))), target), p))  # noqa: E731
    fd = central_gradient(lambda v: float(ad.value_of(loss(v))), x0)
    assert rel_err(tape_gradient(loss, x0), fd) <= 1e-5


def test_division_by_recorded_value_points_to_power():
    tape = ad.Tape()
    x = tape.watch(np.ones(2))
    with pytest.raises(TypeError, match="power"):
        x / x
