"""Reverse-mode differentiation over numpy arrays.

Values are recorded on a :class:`Tape` as they are computed. Each
operation below accepts plain arrays or :class:`Var` objects; when none of
its inputs is a ``Var`` it simply returns the array result, so the same
model code runs with or without recording.

Complex values follow the convention that the gradient of a real loss L
with respect to z is ``dL/dRe(z) + 1j * dL/dIm(z)``. Under it the adjoint of
a linear map A is its conjugate transpose, so the adjoint of the unitary
``fftn`` is ``ifftn`` and the adjoint of ``y = a * b`` with respect to ``a``
is ``g * conj(b)``. Gradients of real inputs are the real part.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import erf

from . import tensor_core as tc

__all__ = [
    "Tape",
    "Var",
    "value_of",
    "add",
    "sub",
    "mul",
    "neg",
    "einsum",
    "fftn",
    "ifftn",
    "fftshift",
    "ifftshift",
    "getitem",
    "embed",
    "real",
    "imag",
    "gelu",
    "relu",
    "tanh",
    "identity",
    "square",
    "abs2",
    "abs_pow",
    "power",
    "sum",
    "mean",
    "reshape",
    "transpose",
    "finite_difference_check",
]


class _Node:
    __slots__ = ("op", "parents", "vjp")

    def __init__(self, op, parents, vjp):
        self.op = op
        self.parents = parents
        self.vjp = vjp


class Tape:
    """Linear record of operations in evaluation order."""

    def __init__(self):
        self.nodes: list[_Node] = []

    def __len__(self):
        return len(self.nodes)

    def watch(self, value) -> "Var":
        """Register a leaf whose gradient can be requested."""
        arr = np.array(value, dtype=np.result_type(value, np.float64), copy=True)
        return self._record(arr, "leaf", (), None)

    def _record(self, value, op, parents, vjp) -> "Var":
        self.nodes.append(_Node(op, parents, vjp))
        return Var(value, self, len(self.nodes) - 1)

    def gradient(self, loss: "Var", sources: Sequence["Var"]) -> list[np.ndarray]:
        """Gradients of a scalar ``loss`` with respect to each of ``sources``."""
        if not isinstance(loss, Var) or loss.tape is not self:
            raise ValueError("loss was not recorded on this tape")
        if loss.value.size != 1:
            raise ValueError(f"gradient needs a scalar root, got shape {loss.value.shape}")
        if np.iscomplexobj(loss.value):
            raise ValueError("gradient needs a real-valued root")
        grads: list = [None] * len(self.nodes)
        grads[loss.index] = np.ones_like(loss.value)
        for i in range(loss.index, -1, -1):
            g = grads[i]
            node = self.nodes[i]
            if g is None or node.vjp is None:
                continue
            for parent, ct in zip(node.parents, node.vjp(g)):
                if parent is None or ct is None:
                    continue
                ct = _fit(ct, parent.value)
                j = parent.index
                grads[j] = ct if grads[j] is None else grads[j] + ct
        out = []
        for s in sources:
            if s.tape is not self:
                raise ValueError("source was not recorded on this tape")
            g = grads[s.index]
            out.append(np.zeros_like(s.value) if g is None else g)
        return out


class Var:
    """A recorded value."""

    __slots__ = ("value", "tape", "index")
    __array_ufunc__ = None

    def __init__(self, value, tape: Tape, index: int):
        self.value = value
        self.tape = tape
        self.index = index

    shape = property(lambda self: self.value.shape)
    ndim = property(lambda self: self.value.ndim)
    dtype = property(lambda self: self.value.dtype)
    real = property(lambda self: real(self))
    imag = property(lambda self: imag(self))

    def __repr__(self):
        return f"Var(shape={self.value.shape}, dtype={self.value.dtype})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        if isinstance(other, Var):
            raise TypeError("division by a recorded value is not supported; use power(x, -1)")
        return mul(self, 1.0 / np.asarray(other))

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __getitem__(self, index):
        return getitem(self, index)

    def sum(self, axis=None, keepdims=False):
        return sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and not np.isscalar(shape[0]):
            shape = tuple(shape[0])
        return reshape(self, shape)


def value_of(x):
    return x.value if isinstance(x, Var) else np.asarray(x)


def _fit(ct, target: np.ndarray) -> np.ndarray:
    ct = np.asarray(ct)
    if ct.shape != target.shape:
        extra = ct.ndim - target.ndim
        if extra > 0:
            ct = ct.sum(axis=tuple(range(extra)))
        axes = tuple(i for i, (a, b) in enumerate(zip(ct.shape, target.shape)) if b == 1 and a != 1)
        if axes:
            ct = ct.sum(axis=axes, keepdims=True)
    if not np.iscomplexobj(target) and np.iscomplexobj(ct):
        ct = ct.real
    elif np.iscomplexobj(target) and not np.iscomplexobj(ct):
        ct = ct.astype(target.dtype)
    return ct


def _apply(op: str, value, inputs: Sequence, vjp: Callable):
    tape = None
    for x in inputs:
        if isinstance(x, Var):
            if tape is None:
                tape = x.tape
            elif x.tape is not tape:
                raise ValueError("inputs were recorded on different tapes")
    if tape is None:
        return value
    parents = tuple(x if isinstance(x, Var) else None for x in inputs)
    return tape._record(value, op, parents, vjp)


def add(a, b):
    av, bv = value_of(a), value_of(b)
    return _apply("add", av + bv, (a, b), lambda g: (g, g))


def sub(a, b):
    av, bv = value_of(a), value_of(b)
    return _apply("sub", av - bv, (a, b), lambda g: (g, -g))


def neg(a):
    return _apply("neg", -value_of(a), (a,), lambda g: (-g,))


def mul(a, b):
    av, bv = value_of(a), value_of(b)
    return _apply("mul", av * bv, (a, b), lambda g: (g * np.conj(bv), g * np.conj(av)))


def einsum(subscripts: str, a, b):
    """Two-operand contraction; every index of an operand must appear in the output or the other operand."""
    inputs, out = subscripts.replace(" ", "").split("->")
    sa, sb = inputs.split(",")
    av, bv = value_of(a), value_of(b)
    value = np.einsum(subscripts, av, bv, optimize=True)

    def vjp(g):
        ga = np.einsum(f"{out},{sb}->{sa}", g, np.conj(bv), optimize=True) if isinstance(a, Var) else None
        gb = np.einsum(f"{out},{sa}->{sb}", g, np.conj(av), optimize=True) if isinstance(b, Var) else None
        return ga, gb

    return _apply("einsum", value, (a, b), vjp)


def fftn(x, axes=None):
    xv = value_of(x)
    ax = tc._normalize_axes(xv.ndim, axes)
    return _apply("fft", tc.fftn(xv, ax), (x,), lambda g: (tc.ifftn(g, ax),))


def ifftn(x, axes=None):
    xv = value_of(x)
    ax = tc._normalize_axes(xv.ndim, axes)
    return _apply("ifft", tc.ifftn(xv, ax), (x,), lambda g: (tc.fftn(g, ax),))


def fftshift(x, axes):
    return _apply("fftshift", tc.shift_array(value_of(x), axes), (x,), lambda g: (tc.unshift_array(g, axes),))


def ifftshift(x, axes):
    return _apply("ifftshift", tc.unshift_array(value_of(x), axes), (x,), lambda g: (tc.shift_array(g, axes),))


def getitem(x, index):
    """Basic (slice) indexing."""
    xv = value_of(x)

    def vjp(g):
        full = np.zeros(xv.shape, dtype=np.result_type(g, xv))
        full[index] += g
        return (full,)

    return _apply("slice", xv[index], (x,), vjp)


def embed(x, shape, index):
    """Place ``x`` at ``index`` inside a zero array of ``shape``."""
    xv = value_of(x)
    out = np.zeros(shape, dtype=xv.dtype)
    out[index] = xv
    return _apply("pad", out, (x,), lambda g: (g[index],))


def real(x):
    xv = value_of(x)
    return _apply("real", np.real(xv).copy(), (x,), lambda g: (g,))


def imag(x):
    xv = value_of(x)
    return _apply("imag", np.imag(xv).copy(), (x,), lambda g: (1j * g,))


_SQRT1_2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def gelu(x):
    """Exact GELU, 0.5 x (1 + erf(x / sqrt 2))."""
    xv = value_of(x)
    cdf = 0.5 * (1.0 + erf(xv * _SQRT1_2))
    return _apply("gelu", xv * cdf, (x,), lambda g: (g * (cdf + xv * _INV_SQRT_2PI * np.exp(-0.5 * xv * xv)),))


def relu(x):
    xv = value_of(x)
    return _apply("relu", np.maximum(xv, 0.0), (x,), lambda g: (g * (xv > 0),))


def tanh(x):
    xv = value_of(x)
    t = np.tanh(xv)
    return _apply("tanh", t, (x,), lambda g: (g * (1.0 - t * t),))


def identity(x):
    return x


def square(x):
    xv = value_of(x)
    return _apply("square", xv * xv, (x,), lambda g: (g * np.conj(2.0 * xv),))


def abs2(x):
    """|x|^2, real-valued for complex input."""
    xv = value_of(x)
    return _apply("abs2", xv.real**2 + xv.imag**2 if np.iscomplexobj(xv) else xv * xv, (x,), lambda g: (2.0 * g * xv,))


def abs_pow(x, p: float):
    """|x|^p for p >= 1."""
    if p < 1:
        raise ValueError("abs_pow needs p >= 1")
    xv = value_of(x)
    mag = np.abs(xv)
    if p == 2:
        return abs2(x)

    def vjp(g):
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(mag > 0, p * mag ** (p - 2.0), 0.0)
        return (g * scale * xv,)

    return _apply("power", mag**p, (x,), vjp)


def power(x, exponent: float):
    """x**exponent for real positive x (or integer exponents)."""
    xv = value_of(x)
    return _apply("power", xv**exponent, (x,), lambda g: (g * exponent * xv ** (exponent - 1.0),))


def sum(x, axis=None, keepdims=False):
    xv = value_of(x)
    value = np.sum(xv, axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, xv.shape),)

    return _apply("sum", value, (x,), vjp)


def mean(x, axis=None, keepdims=False):
    xv = value_of(x)
    count = xv.size if axis is None else int(np.prod([xv.shape[a] for a in np.atleast_1d(axis)]))
    return mul(sum(x, axis, keepdims), 1.0 / count)


def reshape(x, shape):
    xv = value_of(x)
    return _apply("reshape", xv.reshape(shape), (x,), lambda g: (g.reshape(xv.shape),))


def transpose(x, axes):
    xv = value_of(x)
    inverse = np.argsort(axes)
    return _apply("transpose", np.transpose(xv, axes), (x,), lambda g: (np.transpose(g, inverse),))


def finite_difference_check(
    loss_fn: Callable[[dict], object],
    params: dict[str, np.ndarray],
    step: float = 1e-5,
    names: Iterable[str] | None = None,
    floor: float = 1e-8,
) -> dict[str, float]:
    """Compare tape gradients with central differences.

    Returns, per parameter, ``||g_fd - g_tape|| / max(||g_fd||, ||g_tape||, s)``
    where ``s`` is ``floor`` times the norm of the full tape gradient; the
    floor keeps parameters whose exact gradient is zero (a bias followed by
    a normalization, say) from dividing noise by noise. Complex parameters
    are perturbed along their real and imaginary parts.
    """
    tape = Tape()
    watched = {k: tape.watch(v) for k, v in params.items()}
    loss = loss_fn(watched)
    keys = list(params) if names is None else list(names)
    grads = dict(zip(keys, tape.gradient(loss, [watched[k] for k in keys])))
    overall = float(np.sqrt(np.sum([np.linalg.norm(g) ** 2 for g in grads.values()])))
    errors = {}
    for k in keys:
        base = params[k]
        directions = [1.0, 1j] if np.iscomplexobj(base) else [1.0]
        fd = np.zeros(base.shape, dtype=base.dtype)
        for unit in directions:
            flat = np.zeros(base.size, dtype=fd.dtype)
            for i in range(base.size):
                probe = dict(params)
                bumped = base.astype(base.dtype, copy=True).reshape(-1)
                bumped[i] += unit * step
                probe[k] = bumped.reshape(base.shape)
                up = float(np.real(value_of(loss_fn(probe))))
                bumped[i] -= 2 * unit * step
                probe[k] = bumped.reshape(base.shape)
                down = float(np.real(value_of(loss_fn(probe))))
                flat[i] = (up - down) / (2 * step)
            fd = fd + (unit * flat).reshape(base.shape) if np.iscomplexobj(base) else flat.reshape(base.shape)
        g = grads[k]
        scale = max(np.linalg.norm(fd), np.linalg.norm(g), floor * overall)
        errors[k] = 0.0 if scale == 0 else float(np.linalg.norm(fd - g) / scale)
    return errors
