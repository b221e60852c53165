"""Reverse-mode automatic differentiation on dense 64-bit tensors.

Everything is float64 or complex128. A Tensor wraps a numpy array; operations
record closures on the output node and ``backward`` replays them in reverse
topological order (micrograd style, vectorized).

Complex convention: the gradient stored for a complex tensor z is

    z.grad = dL/d(Re z) + i * dL/d(Im z)

i.e. real and imaginary parts are treated as independent real parameters
(poles and residues are complex learnables and this sidesteps holomorphicity
questions). For a holomorphic elementary op w = f(z) the chain rule under
this convention is grad_z = conj(f'(z)) * grad_w; non-holomorphic primitives
(real, imag, conj, abs2) carry their own rules. Gradients accumulated into a
real-dtype tensor keep only their real part, which is exactly dL/d(param).

Hot paths (DFT application, channel mixing, per-mode spectral weights) are
expressed through three GEMM-backed primitives: ``matm``, ``pair_mix`` and
``dft_1d``; numpy einsum is avoided because it is ~10x slower than BLAS here.
"""

import contextlib
from functools import lru_cache

import numpy as np
from scipy import special

from . import fourier

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording (evaluation mode)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


def _as_data(x):
    a = np.asarray(x)
    if np.iscomplexobj(a):
        return a.astype(np.complex128, copy=False)
    return a.astype(np.float64, copy=False)


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name", "_parents", "_bw", "_needs")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = _as_data(data)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name
        self._parents = ()
        self._bw = None
        self._needs = self.requires_grad

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def is_complex(self):
        return np.iscomplexobj(self.data)

    def zero_grad(self):
        self.grad = None

    def item(self):
        return self.data.reshape(()).item()

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}{flag})"

    # operator sugar; scalars and arrays lift to constant tensors
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __getitem__(self, key):
        return getitem(self, key)


def tensor(data, requires_grad=False, name=None):
    return Tensor(data, requires_grad=requires_grad, name=name)


def _lift(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _track(*parents):
    return _GRAD_ENABLED and any(p._needs for p in parents)


def _register(out, parents, bw):
    out._parents = parents
    out._bw = bw
    out._needs = True


def _accumulate(t, g):
    # grads are never mutated in place, so storing views is safe
    if not t._needs:
        return
    if not np.iscomplexobj(t.data) and np.iscomplexobj(g):
        g = g.real
    g = np.asarray(g, dtype=t.data.dtype)
    if t.grad is None:
        t.grad = g
    else:
        t.grad = t.grad + g


def _unbroadcast(g, shape):
    """Sum a gradient down to the shape it was broadcast from."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a, b):
    a, b = _lift(a), _lift(b)
    out = Tensor(a.data + b.data)
    if _track(a, b):
        def bw(g):
            _accumulate(a, _unbroadcast(g, a.shape))
            _accumulate(b, _unbroadcast(g, b.shape))
        _register(out, (a, b), bw)
    return out


def sub(a, b):
    a, b = _lift(a), _lift(b)
    out = Tensor(a.data - b.data)
    if _track(a, b):
        def bw(g):
            _accumulate(a, _unbroadcast(g, a.shape))
            _accumulate(b, _unbroadcast(-g, b.shape))
        _register(out, (a, b), bw)
    return out


def mul(a, b):
    a, b = _lift(a), _lift(b)
    out = Tensor(a.data * b.data)
    if _track(a, b):
        def bw(g):
            _accumulate(a, _unbroadcast(g * np.conj(b.data), a.shape))
            _accumulate(b, _unbroadcast(g * np.conj(a.data), b.shape))
        _register(out, (a, b), bw)
    return out


def div(a, b):
    a, b = _lift(a), _lift(b)
    out = Tensor(a.data / b.data)
    if _track(a, b):
        def bw(g):
            inv = 1.0 / b.data
            _accumulate(a, _unbroadcast(g * np.conj(inv), a.shape))
            _accumulate(b, _unbroadcast(-g * np.conj(a.data * inv * inv), b.shape))
        _register(out, (a, b), bw)
    return out


def neg(a):
    a = _lift(a)
    out = Tensor(-a.data)
    if _track(a):
        _register(out, (a,), lambda g: _accumulate(a, -g))
    return out


def exp(a):
    a = _lift(a)
    out = Tensor(np.exp(a.data))
    if _track(a):
        val = out.data
        _register(out, (a,), lambda g: _accumulate(a, g * np.conj(val)))
    return out


def square(a):
    a = _lift(a)
    out = Tensor(a.data * a.data)
    if _track(a):
        _register(out, (a,), lambda g: _accumulate(a, g * np.conj(2.0 * a.data)))
    return out


def softplus(a):
    a = _lift(a)
    out = Tensor(np.logaddexp(0.0, a.data))
    if _track(a):
        _register(out, (a,), lambda g: _accumulate(a, g * special.expit(a.data)))
    return out


_GELU_C0 = np.sqrt(2.0 / np.pi)
_GELU_C1 = 0.044715


def gelu(a):
    """GELU in the tanh form (real input); in-place chains keep it cheap."""
    a = _lift(a)
    x = a.data
    x2 = x * x
    inner = x2 * _GELU_C1
    inner += 1.0
    inner *= x
    inner *= _GELU_C0
    t = np.tanh(inner, out=inner)
    val = t + 1.0
    val *= 0.5
    val *= x
    out = Tensor(val)
    if _track(a):
        # local = 0.5(1+t) + 0.5 c0 x (1-t^2)(1+3 c1 x^2), one multiply in bw
        local = t * t
        np.subtract(1.0, local, out=local)
        local *= x
        local *= 0.5 * _GELU_C0
        x2 *= 3.0 * _GELU_C1
        x2 += 1.0
        local *= x2
        local += 0.5
        half_t = t * 0.5
        local += half_t
        _register(out, (a,), lambda g: _accumulate(a, g * local))
    return out


# ---------------------------------------------------------------------------
# complex structure


def real(a):
    a = _lift(a)
    out = Tensor(a.data.real if a.is_complex else a.data)
    if _track(a):
        _register(out, (a,), lambda g: _accumulate(a, g.real if np.iscomplexobj(g) else g))
    return out


def imag(a):
    a = _lift(a)
    out = Tensor(a.data.imag if a.is_complex else np.zeros_like(a.data))
    if _track(a):
        def bw(g):
            gr = g.real if np.iscomplexobj(g) else g
            _accumulate(a, 1j * gr)
        _register(out, (a,), bw)
    return out


def conj(a):
    a = _lift(a)
    out = Tensor(np.conj(a.data))
    if _track(a):
        _register(out, (a,), lambda g: _accumulate(a, np.conj(g)))
    return out


def as_complex(re, im):
    re, im = _lift(re), _lift(im)
    out = Tensor(re.data + 1j * im.data)
    if _track(re, im):
        def bw(g):
            _accumulate(re, _unbroadcast(g.real, re.shape))
            _accumulate(im, _unbroadcast(g.imag, im.shape))
        _register(out, (re, im), bw)
    return out


def abs2(a):
    """|z|^2 as a real tensor."""
    a = _lift(a)
    d = a.data
    out = Tensor((d * np.conj(d)).real if a.is_complex else d * d)
    if _track(a):
        def bw(g):
            gr = g.real if np.iscomplexobj(g) else g
            _accumulate(a, 2.0 * gr * d)
        _register(out, (a,), bw)
    return out


# ---------------------------------------------------------------------------
# reductions and shape


def tsum(a, axis=None, keepdims=False):
    a = _lift(a)
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))
    if _track(a):
        def bw(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            _accumulate(a, np.broadcast_to(g, a.shape))
        _register(out, (a,), bw)
    return out


def tmean(a, axis=None, keepdims=False):
    a = _lift(a)
    count = a.size if axis is None else np.prod(
        [a.shape[ax] for ax in (axis if isinstance(axis, tuple) else (axis,))])
    out = Tensor(a.data.mean(axis=axis, keepdims=keepdims))
    if _track(a):
        def bw(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            _accumulate(a, np.broadcast_to(g, a.shape) / count)
        _register(out, (a,), bw)
    return out


def reshape(a, shape):
    a = _lift(a)
    out = Tensor(a.data.reshape(shape))
    if _track(a):
        _register(out, (a,), lambda g: _accumulate(a, g.reshape(a.shape)))
    return out


def moveaxis(a, src, dst):
    a = _lift(a)
    out = Tensor(np.moveaxis(a.data, src, dst))
    if _track(a):
        _register(out, (a,), lambda g: _accumulate(a, np.moveaxis(g, dst, src)))
    return out


def expand(a, shape):
    """Broadcast to a larger shape (view); backward sums the extra axes."""
    a = _lift(a)
    out = Tensor(np.broadcast_to(a.data, shape))
    if _track(a):
        _register(out, (a,), lambda g: _accumulate(a, _unbroadcast(g, a.shape)))
    return out


def getitem(a, key):
    a = _lift(a)
    out = Tensor(a.data[key])
    if _track(a):
        def bw(g):
            full = np.zeros(a.shape, dtype=g.dtype if np.iscomplexobj(g) or not a.is_complex
                            else a.data.dtype)
            np.add.at(full, key, g)
            _accumulate(a, full)
        _register(out, (a,), bw)
    return out


def gather(a, idx, axis):
    """Take unique indices along an axis (mode selection)."""
    a = _lift(a)
    idx = np.asarray(idx, dtype=np.intp)
    if len(np.unique(idx)) != len(idx):
        raise ValueError("gather requires unique indices")
    out = Tensor(np.take(a.data, idx, axis=axis))
    if _track(a):
        def bw(g):
            full = np.zeros(a.shape, dtype=g.dtype)
            np.moveaxis(full, axis, 0)[idx] = np.moveaxis(g, axis, 0)
            _accumulate(a, full)
        _register(out, (a,), bw)
    return out


def concat(parts, axis):
    parts = [_lift(p) for p in parts]
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
    if _track(*parts):
        sizes = [p.shape[axis] for p in parts]
        splits = np.cumsum(sizes)[:-1]
        def bw(g):
            for p, piece in zip(parts, np.split(g, splits, axis=axis)):
                _accumulate(p, piece)
        _register(out, tuple(parts), bw)
    return out


# ---------------------------------------------------------------------------
# GEMM-backed linear primitives


def _bmm(M, x3):
    """Batched matmul M @ x3 over the leading axis of x3 (lead, n, rest).

    Complex matrix on real data goes through two batched dgemms whose
    results are assigned into a complex array; that is ~4x faster than
    promoting the data to complex (and writing with out= into the strided
    .real/.imag views would fall off the BLAS path entirely).
    """
    if np.iscomplexobj(M) and not np.iscomplexobj(x3):
        re = np.matmul(np.ascontiguousarray(M.real), x3)
        im = np.matmul(np.ascontiguousarray(M.imag), x3)
        out = np.empty(re.shape, dtype=np.complex128)
        out.real = re
        out.imag = im
        return out
    return np.matmul(M, x3)


def _as3(data, axis):
    """Reshape (view) so ``axis`` becomes the middle of (lead, n, rest)."""
    shape = data.shape
    axis = axis % data.ndim
    lead = int(np.prod(shape[:axis], dtype=np.int64)) if axis else 1
    rest = int(np.prod(shape[axis + 1:], dtype=np.int64)) if axis + 1 < data.ndim else 1
    return np.reshape(data, (lead, shape[axis], rest))


def _rmm(x2, Mt):
    """(lead, n) @ (n, r) with the mixed real/complex split fast path."""
    if np.iscomplexobj(Mt) and not np.iscomplexobj(x2):
        re = np.matmul(x2, np.ascontiguousarray(Mt.real))
        im = np.matmul(x2, np.ascontiguousarray(Mt.imag))
        out = np.empty(re.shape, dtype=np.complex128)
        out.real = re
        out.imag = im
        return out
    return np.matmul(x2, Mt)


def matm(M, x, axis):
    """Apply a matrix along one axis: out[..,r,..] = sum_k M[r,k] x[..,k,..].

    Backs the DFT submatrix applications, finite-difference stencils and
    pointwise channel transforms; gradients flow to both operands. The data
    is viewed as (lead, n, rest) without transposition copies; the last axis
    goes through a single right-multiplied GEMM (the batched form would
    degenerate into per-row matvecs there).
    """
    M, x = _lift(M), _lift(x)
    axis = axis % len(x.shape)
    last = axis == len(x.shape) - 1
    out_shape = x.shape[:axis] + (M.shape[0],) + x.shape[axis + 1:]
    if last:
        x2 = np.reshape(x.data, (-1, x.shape[axis]))
        out = Tensor(_rmm(x2, M.data.T).reshape(out_shape))
    else:
        x3 = _as3(x.data, axis)
        out = Tensor(_bmm(M.data, x3).reshape(out_shape))
    if _track(M, x):
        def bw(g):
            g = np.asarray(g)
            if last:
                g2 = np.reshape(g, (-1, M.shape[0]))
                if x._needs:
                    _accumulate(x, _rmm(g2, np.conj(M.data)).reshape(x.shape))
                if M._needs:
                    _accumulate(M, np.matmul(g2.T, np.conj(x2)))
            else:
                g3 = _as3(g, axis)
                if x._needs:
                    gx = _bmm(np.conj(M.data).T, g3)
                    _accumulate(x, gx.reshape(x.shape))
                if M._needs:
                    gM = np.matmul(g3, np.conj(x3).transpose(0, 2, 1)).sum(axis=0)
                    _accumulate(M, gM)
        _register(out, (M, x), bw)
    return out


def pair_mix(H, x):
    """Per-slot channel mixing: out[b,o,K] = sum_i H[o,i,K] x[b,i,K].

    K may span several trailing axes (Fourier bins, pole indices); H and x
    must agree on them exactly.
    """
    H, x = _lift(H), _lift(x)
    co, ci = H.shape[0], H.shape[1]
    bins = H.shape[2:]
    if x.shape[1] != ci or x.shape[2:] != bins:
        raise ValueError(f"pair_mix shape mismatch: H {H.shape} vs x {x.shape}")
    b = x.shape[0]
    k = int(np.prod(bins)) if bins else 1
    Ht = np.ascontiguousarray(H.data.reshape(co, ci, k).transpose(2, 0, 1))
    xt = np.ascontiguousarray(x.data.reshape(b, ci, k).transpose(2, 1, 0))
    yt = np.matmul(Ht, xt)  # (k, co, b)
    out = Tensor(yt.transpose(2, 1, 0).reshape((b, co) + bins))
    if _track(H, x):
        def bw(g):
            gt = np.ascontiguousarray(g.reshape(b, co, k).transpose(2, 1, 0))
            if H._needs:
                gH = np.matmul(gt, np.conj(xt).transpose(0, 2, 1))
                _accumulate(H, gH.transpose(1, 2, 0).reshape(H.shape))
            if x._needs:
                gx = np.matmul(np.conj(Ht).transpose(0, 2, 1), gt)
                _accumulate(x, gx.transpose(2, 1, 0).reshape(x.shape))
        _register(out, (H, x), bw)
    return out


def einsum2(spec, a, b):
    """Two-operand einsum with gradients (slow generic path).

    Every subscript of each operand must appear in the output or the other
    operand (plain contractions, no internal traces). Used by the per-pair
    pole-residue path where shapes are small.
    """
    a, b = _lift(a), _lift(b)
    ins, out_sub = spec.split("->")
    a_sub, b_sub = ins.split(",")
    out = Tensor(np.einsum(spec, a.data, b.data, optimize=True))
    if _track(a, b):
        def bw(g):
            if a._needs:
                ga = np.einsum(f"{out_sub},{b_sub}->{a_sub}", g, np.conj(b.data),
                               optimize=True)
                _accumulate(a, ga)
            if b._needs:
                gb = np.einsum(f"{a_sub},{out_sub}->{b_sub}", np.conj(a.data), g,
                               optimize=True)
                _accumulate(b, gb)
        _register(out, (a, b), bw)
    return out


def dft_1d(x, inverse=False, axis=-1):
    """DFT along an axis; Tensor in, Tensor out (arrays pass through numpy).

    Forward X[k] = sum_j x[j] e^{-2 pi i jk/n}; inverse carries 1/n. The
    adjoint identities W^H g = conj(W conj(g)) and V^H g = W g / n give the
    backward pass for either engine.
    """
    if not isinstance(x, Tensor):
        return fourier.dft_1d(x, inverse=inverse, axis=axis)
    n = x.shape[axis]
    out = Tensor(fourier.dft_1d(x.data, inverse=inverse, axis=axis))
    if _track(x):
        def bw(g):
            g = np.asarray(g, dtype=np.complex128)
            if inverse:
                _accumulate(x, fourier.dft_1d(g, axis=axis) / n)
            else:
                _accumulate(x, np.conj(fourier.dft_1d(np.conj(g), axis=axis)))
        _register(out, (x,), bw)
    return out


# ---------------------------------------------------------------------------
# backward pass


def _toposort(root):
    order, stack, seen = [], [(root, False)], set()
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss, parameters=None):
    """Backpropagate from a scalar loss.

    Returns a mapping Tensor -> gradient array for every reachable tensor
    with requires_grad (restricted to ``parameters`` when given); gradients
    are also left on ``.grad``. Complex parameters receive
    dL/dRe + i dL/dIm per the module convention.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    order = _toposort(loss)
    for node in order:
        node.grad = None
    loss.grad = np.ones_like(loss.data)
    result = {}
    for node in reversed(order):
        if node._bw is not None and node.grad is not None:
            node._bw(node.grad)
        if node.requires_grad and node.grad is not None:
            result[node] = node.grad
        else:
            # free grads and captured forward arrays as soon as they are used;
            # peak memory would otherwise hold the whole graph twice
            node.grad = None
        node._bw = None
        node._parents = ()
    if parameters is not None:
        return {t: result[t] for t in parameters if t in result}
    return result


# ---------------------------------------------------------------------------
# finite-difference verification


class GradientCheckError(ValueError):
    """Non-finite values hit while probing a parameter component."""

    def __init__(self, param_index, component, message):
        super().__init__(message)
        self.param_index = param_index
        self.component = component


def gradient_check(f, params, epsilon=1e-5):
    """Max relative gap between autodiff and central differences.

    f is a zero-argument callable returning the scalar loss Tensor built from
    ``params`` (a list of Tensors with requires_grad). Complex parameters are
    probed component-wise in their real and imaginary parts. Returns
    max over components of |ad - fd| / max(|fd|, 1e-12).
    """
    if not (0.0 < epsilon <= 1e-3):
        raise ValueError("epsilon must lie in (0, 1e-3]")
    loss = f()
    grads = backward(loss, parameters=params)

    def probe(p, flat_idx, delta):
        # index tuple keeps the write in place even for non-contiguous data
        idx = np.unravel_index(flat_idx, p.shape) if p.data.ndim else ()
        old = p.data[idx]
        p.data[idx] = old + delta
        try:
            with no_grad():
                val = f().item()
        finally:
            p.data[idx] = old
        return val

    worst = 0.0
    for pi, p in enumerate(params):
        g = grads.get(p)
        if g is None:
            g = np.zeros_like(p.data)
        gflat = np.asarray(g).reshape(-1)
        steps = (1.0, 1j) if p.is_complex else (1.0,)
        for idx in range(p.size):
            for step in steps:
                hi = probe(p, idx, epsilon * step)
                lo = probe(p, idx, -epsilon * step)
                if not (np.isfinite(hi) and np.isfinite(lo)):
                    raise GradientCheckError(
                        pi, idx,
                        f"non-finite loss probing param {pi} component {idx}")
                fd = (hi - lo) / (2.0 * epsilon)
                ad = gflat[idx].real if step == 1.0 else gflat[idx].imag
                rel = abs(ad - fd) / max(abs(fd), 1e-12)
                worst = max(worst, rel)
    return worst
