"""Reverse-mode automatic differentiation over numpy arrays.

A ``Tensor`` wraps a row-major float array together with an optional gradient
accumulator and the closure needed to propagate adjoints to its parents.
Training runs in float32; the gradient-check harness builds float64 graphs
with the same ops.

Gradients accumulate across backward calls until ``zero_grad`` / manual reset;
tensors not reachable from the loss simply keep their current (zero) gradient.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _sum_to_shape(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back down to `shape`."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjps")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data)
        if arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad: np.ndarray | None = np.zeros_like(arr) if requires_grad else None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._vjps: tuple = ()

    # ---- graph plumbing ----------------------------------------------------

    @staticmethod
    def _result(data: np.ndarray, parents, vjps) -> "Tensor":
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        tracked = [(p, v) for p, v in zip(parents, vjps) if p.requires_grad]
        out.requires_grad = bool(tracked)
        out._parents = tuple(p for p, _ in tracked)
        out._vjps = tuple(v for _, v in tracked)
        return out

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def backward(self) -> None:
        """Accumulate d(self)/d(param) into every reachable tensor's .grad."""
        if self.data.size != 1:
            raise ValueError(f"backward requires a scalar loss, got shape {self.shape}")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            gout = grads.pop(id(node), None)
            if gout is None:
                continue
            if node.grad is not None:
                node.grad = node.grad + gout
            for parent, vjp in zip(node._parents, node._vjps):
                contrib = vjp(gout)
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + contrib
                else:
                    grads[key] = contrib

    # ---- elementwise arithmetic ---------------------------------------------

    @staticmethod
    def _coerce(other, like=None) -> "Tensor":
        if isinstance(other, Tensor):
            return other
        arr = np.asarray(other)
        # python scalars adopt the operand's float dtype so float32 graphs
        # are not silently promoted to float64 by constants like eps or 0.5
        if like is not None and arr.ndim == 0 and np.issubdtype(like, np.floating):
            arr = arr.astype(like)
        return Tensor(arr)

    def __add__(self, other):
        other = self._coerce(other, self.data.dtype)
        data = self.data + other.data
        return Tensor._result(
            data,
            (self, other),
            (lambda g: _sum_to_shape(g, self.data.shape),
             lambda g: _sum_to_shape(g, other.data.shape)),
        )

    __radd__ = __add__

    def __neg__(self):
        return Tensor._result(-self.data, (self,), (lambda g: -g,))

    def __sub__(self, other):
        return self + (-self._coerce(other, self.data.dtype))

    def __rsub__(self, other):
        return self._coerce(other, self.data.dtype) + (-self)

    def __mul__(self, other):
        other = self._coerce(other, self.data.dtype)
        data = self.data * other.data
        return Tensor._result(
            data,
            (self, other),
            (lambda g: _sum_to_shape(g * other.data, self.data.shape),
             lambda g: _sum_to_shape(g * self.data, other.data.shape)),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other, self.data.dtype)
        return self * other ** -1.0

    def __pow__(self, exponent: float):
        data = self.data ** exponent
        base = self.data
        return Tensor._result(
            data,
            (self,),
            (lambda g: g * exponent * base ** (exponent - 1.0),),
        )

    # ---- shape ops -----------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old = self.data.shape
        return Tensor._result(
            self.data.reshape(shape), (self,), (lambda g: g.reshape(old),)
        )

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inv = np.argsort(axes)
        return Tensor._result(
            self.data.transpose(axes), (self,), (lambda g: g.transpose(inv),)
        )

    def __getitem__(self, index):
        data = self.data[index]
        shape = self.data.shape

        def vjp(g):
            out = np.zeros(shape, dtype=g.dtype)
            out[index] = g
            return out

        return Tensor._result(np.ascontiguousarray(data), (self,), (vjp,))

    # ---- reductions ----------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        data = self.data.sum(axis=axis, keepdims=keepdims)
        shape = self.data.shape

        def vjp(g):
            if axis is None:
                return np.broadcast_to(g, shape).copy()
            ax = axis if isinstance(axis, tuple) else (axis,)
            if not keepdims:
                g = np.expand_dims(g, ax)
            return np.broadcast_to(g, shape).copy()

        return Tensor._result(np.asarray(data), (self,), (vjp,))

    def mean(self, axis=None, keepdims: bool = False):
        if axis is None:
            count = self.data.size
        else:
            ax = axis if isinstance(axis, tuple) else (axis,)
            count = int(np.prod([self.data.shape[a] for a in ax]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    # ---- matmul ----------------------------------------------------------------

    def __matmul__(self, other):
        other = self._coerce(other)
        a, b = self.data, other.data
        data = a @ b

        def vjp_a(g):
            if b.ndim == 1:
                ga = np.multiply.outer(g, b) if a.ndim > 1 else g * b
            else:
                ga = g @ np.swapaxes(b, -1, -2)
            return _sum_to_shape(ga, a.shape)

        def vjp_b(g):
            if a.ndim == 1:
                gb = np.multiply.outer(a, g)
            else:
                gb = np.swapaxes(a, -1, -2) @ g
            return _sum_to_shape(gb, b.shape)

        return Tensor._result(data, (self, other), (vjp_a, vjp_b))


# ---- nonlinearities ------------------------------------------------------


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return Tensor._result(x.data * mask, (x,), (lambda g: g * mask,))


def silu(x: Tensor) -> Tensor:
    sig = 1.0 / (1.0 + np.exp(-x.data))
    data = x.data * sig
    grad_local = sig * (1.0 + x.data * (1.0 - sig))
    return Tensor._result(data, (x,), (lambda g: g * grad_local,))


def exp(x: Tensor) -> Tensor:
    data = np.exp(x.data)
    return Tensor._result(data, (x,), (lambda g: g * data,))


def log(x: Tensor) -> Tensor:
    return Tensor._result(np.log(x.data), (x,), (lambda g: g / x.data,))


def tanh(x: Tensor) -> Tensor:
    data = np.tanh(x.data)
    return Tensor._result(data, (x,), (lambda g: g * (1.0 - data * data),))


# ---- structural ops --------------------------------------------------------


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    datas = [t.data for t in tensors]
    data = np.concatenate(datas, axis=axis)
    sizes = [d.shape[axis] for d in datas]
    offsets = np.cumsum([0] + sizes)

    def make_vjp(i):
        lo, hi = offsets[i], offsets[i + 1]

        def vjp(g):
            index = [slice(None)] * g.ndim
            index[axis] = slice(lo, hi)
            return np.ascontiguousarray(g[tuple(index)])

        return vjp

    return Tensor._result(data, tuple(tensors), tuple(make_vjp(i) for i in range(len(tensors))))


# ---- convolutions -----------------------------------------------------------


def conv1d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlation over the last axis. x: (B,Cin,L), w: (Cout,Cin,k)."""
    B, cin, L = x.data.shape
    cout, cin_w, k = w.data.shape
    if cin != cin_w:
        raise ValueError(f"conv1d channel mismatch: input {cin}, kernel {cin_w}")
    lout = (L + 2 * pad - k) // stride + 1
    if lout < 1:
        raise ValueError(f"conv1d geometry invalid: L={L}, k={k}, stride={stride}, pad={pad}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad))) if pad else x.data
    windows = sliding_window_view(xp, k, axis=2)[:, :, ::stride, :]  # (B,Cin,L',k)
    data = np.einsum("bclk,ock->bol", windows, w.data, optimize=True)

    def vjp_x(g):
        gxp = np.zeros_like(xp)
        for j in range(k):
            gxp[:, :, j:j + stride * lout:stride] += np.einsum(
                "bol,oc->bcl", g, w.data[:, :, j], optimize=True)
        return gxp[:, :, pad:pad + L] if pad else gxp

    def vjp_w(g):
        return np.einsum("bol,bclk->ock", g, windows, optimize=True)

    out = Tensor._result(data, (x, w), (vjp_x, vjp_w))
    if b is not None:
        out = out + b.reshape(1, cout, 1)
    return out


def conv_transpose1d(x: Tensor, w: Tensor, b: Tensor | None = None,
                     stride: int = 1, pad: int = 0) -> Tensor:
    """Adjoint of conv1d. x: (B,C1,L), w: (C1,C2,k) -> (B,C2,(L-1)*stride+k-2*pad)."""
    B, c1, L = x.data.shape
    c1_w, c2, k = w.data.shape
    if c1 != c1_w:
        raise ValueError(f"conv_transpose1d channel mismatch: input {c1}, kernel {c1_w}")
    lfull = (L - 1) * stride + k
    lout = lfull - 2 * pad
    if lout < 1:
        raise ValueError(f"conv_transpose1d geometry invalid: L={L}, k={k}, stride={stride}, pad={pad}")
    data_full = np.zeros((B, c2, lfull), dtype=x.data.dtype)
    for j in range(k):
        data_full[:, :, j:j + stride * L:stride] += np.einsum(
            "bcl,co->bol", x.data, w.data[:, :, j], optimize=True)
    data = data_full[:, :, pad:pad + lout].copy() if pad else data_full

    def vjp_x(g):
        gfull = np.pad(g, ((0, 0), (0, 0), (pad, pad))) if pad else g
        gx = np.zeros_like(x.data)
        for j in range(k):
            gx += np.einsum("bol,co->bcl",
                            gfull[:, :, j:j + stride * L:stride], w.data[:, :, j],
                            optimize=True)
        return gx

    def vjp_w(g):
        gfull = np.pad(g, ((0, 0), (0, 0), (pad, pad))) if pad else g
        gw = np.zeros_like(w.data)
        for j in range(k):
            gw[:, :, j] = np.einsum("bcl,bol->co", x.data,
                                    gfull[:, :, j:j + stride * L:stride], optimize=True)
        return gw

    out = Tensor._result(data, (x, w), (vjp_x, vjp_w))
    if b is not None:
        out = out + b.reshape(1, c2, 1)
    return out


def conv2d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1, pad: int = 0) -> Tensor:
    """Cross-correlation over the last two axes. x: (B,Cin,H,W), w: (Cout,Cin,kh,kw)."""
    B, cin, H, W = x.data.shape
    cout, cin_w, kh, kw = w.data.shape
    if cin != cin_w:
        raise ValueError(f"conv2d channel mismatch: input {cin}, kernel {cin_w}")
    hout = (H + 2 * pad - kh) // stride + 1
    wout = (W + 2 * pad - kw) // stride + 1
    if hout < 1 or wout < 1:
        raise ValueError(f"conv2d geometry invalid: HxW={H}x{W}, k={kh}x{kw}, stride={stride}, pad={pad}")
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x.data
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    data = np.einsum("bchwij,ocij->bohw", windows, w.data, optimize=True)

    def vjp_x(g):
        gxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                gxp[:, :, i:i + stride * hout:stride, j:j + stride * wout:stride] += np.einsum(
                    "bohw,oc->bchw", g, w.data[:, :, i, j], optimize=True)
        return gxp[:, :, pad:pad + H, pad:pad + W] if pad else gxp

    def vjp_w(g):
        return np.einsum("bohw,bchwij->ocij", g, windows, optimize=True)

    out = Tensor._result(data, (x, w), (vjp_x, vjp_w))
    if b is not None:
        out = out + b.reshape(1, cout, 1, 1)
    return out


# ---- composites -------------------------------------------------------------


def affine(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """y = x @ w + b with inner-dimension validation."""
    if x.data.shape[-1] != w.data.shape[0]:
        raise ValueError(f"affine shape mismatch: x {x.data.shape} vs w {w.data.shape}")
    return x @ w + b


def film_modulate(h: Tensor, gamma: Tensor, beta: Tensor) -> Tensor:
    """Channel-wise feature modulation h' = gamma * h + beta.

    gamma/beta of shape (C,) or (B, C) broadcast over the channel axis of
    h (B, C, ...).
    """
    c = h.data.shape[1]
    if gamma.data.shape[-1] != c or beta.data.shape[-1] != c:
        raise ValueError(
            f"film shapes incompatible: h channels {c}, gamma {gamma.data.shape}, beta {beta.data.shape}")
    extra = (1,) * (h.data.ndim - 2)
    g = gamma.reshape(gamma.data.shape + extra)
    bt = beta.reshape(beta.data.shape + extra)
    return g * h + bt


def group_norm(x: Tensor, weight: Tensor, bias: Tensor, groups: int, eps: float = 1e-5) -> Tensor:
    """Normalize (B, C, *spatial) per sample over channel groups; affine per channel."""
    shape = x.data.shape
    B, C = shape[0], shape[1]
    if C % groups:
        raise ValueError(f"channels {C} not divisible by groups {groups}")
    spatial = int(np.prod(shape[2:])) if len(shape) > 2 else 1
    xg = x.reshape(B, groups, (C // groups) * spatial)
    mu = xg.mean(axis=2, keepdims=True)
    centered = xg - mu
    var = (centered * centered).mean(axis=2, keepdims=True)
    norm = centered * (var + eps) ** -0.5
    norm = norm.reshape(shape)
    extra = (1,) * (len(shape) - 2)
    return norm * weight.reshape((C,) + extra) + bias.reshape((C,) + extra)


def mse(pred: Tensor, target: Tensor) -> Tensor:
    diff = pred - target
    return (diff * diff).mean()
