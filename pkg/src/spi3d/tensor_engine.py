"""Minimal reverse-mode autodiff engine on numpy arrays.

Every operation builds the output eagerly, checks it for NaN/Inf (a
FloatingPointError fires the moment an op goes non-finite), and records a
backward closure. Tensor.backward() walks the graph in reverse
topological order and accumulates gradients into leaf tensors that have
requires_grad set; repeated backward calls accumulate additively.

The op set is exactly what the encoder-decoder networks need: broadcast
arithmetic, reductions, conv2d, leaky ReLU, sigmoid, dropout, nearest
upsampling, channel concat, MSE and a global-statistics differentiable
SSIM. Training runs in float32; gradient checks use float64 inputs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

SSIM_C1 = 0.01**2  # (k1 * dynamic_range)^2 for unit range
SSIM_C2 = 0.03**2

CHECKPOINT_MAGIC = b"SPX1"
CHECKPOINT_VERSION = 1


class Tensor:
    """A numpy array plus a gradient slot and a backward-graph edge."""

    __slots__ = ("data", "grad", "requires_grad", "_ctx")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype)
        elif arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float32)
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._ctx = None

    # ── introspection ──

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.item())

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, dtype=self.data.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}, grad={self.requires_grad})"

    # ── autodiff ──

    def backward(self) -> None:
        """Accumulate d(self)/d(leaf) into every reachable leaf's grad."""
        if self.data.size != 1:
            raise ValueError("backward requires a scalar loss tensor")

        topo, visited = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node._ctx is not None:
                for parent in node._ctx[0]:
                    stack.append((parent, False))

        flowing = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = flowing.pop(id(node), None)
            if g is None:
                continue
            if node._ctx is None:
                if node.requires_grad:
                    node.grad = g if node.grad is None else node.grad + g
                continue
            parents, backward_fn = node._ctx
            for parent, pg in zip(parents, backward_fn(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                flowing[key] = pg if key not in flowing else flowing[key] + pg

    # ── operator sugar ──

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis=axis, keepdims=keepdims)

    def sum(self, axis=None, keepdims=False):
        return tensor_sum(self, axis=axis, keepdims=keepdims)


def _as_tensor(value, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=like.data.dtype))


def _make(data: np.ndarray, parents: tuple, backward_fn) -> Tensor:
    if not np.isfinite(data).all():
        raise FloatingPointError("tensor op produced non-finite values")
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = any(p.requires_grad for p in parents)
    out._ctx = (parents, backward_fn) if out.requires_grad else None
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    # Collapse a broadcast gradient back to the operand's shape.
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ── arithmetic ──


def add(a, b) -> Tensor:
    a = a if isinstance(a, Tensor) else _as_tensor(a, b)
    b = _as_tensor(b, a)
    out = a.data + b.data
    return _make(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a = a if isinstance(a, Tensor) else _as_tensor(a, b)
    b = _as_tensor(b, a)
    out = a.data - b.data
    return _make(out, (a, b), lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a = a if isinstance(a, Tensor) else _as_tensor(a, b)
    b = _as_tensor(b, a)
    out = a.data * b.data
    return _make(
        out,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def div(a, b) -> Tensor:
    a = a if isinstance(a, Tensor) else _as_tensor(a, b)
    b = _as_tensor(b, a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data  # the finiteness guard in _make reports these
    return _make(
        out,
        (a, b),
        lambda g: (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        ),
    )


def _normalize_axes(axis, ndim) -> tuple:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def _expand_reduced(g: np.ndarray, shape: tuple, axes: tuple, keepdims: bool) -> np.ndarray:
    if not keepdims:
        g = np.expand_dims(g, axes)
    return np.broadcast_to(g, shape)


def tensor_sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, x.ndim)
    out = x.data.sum(axis=axes, keepdims=keepdims)
    return _make(
        np.asarray(out),
        (x,),
        lambda g: (_expand_reduced(g, x.shape, axes, keepdims).copy(),),
    )


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if x.ndim else 1
    out = x.data.mean(axis=axes, keepdims=keepdims)
    return _make(
        np.asarray(out),
        (x,),
        lambda g: (_expand_reduced(g, x.shape, axes, keepdims) / count,),
    )


# ── nonlinearities ──


def leaky_relu(x: Tensor, slope: float) -> Tensor:
    if not 0.0 <= slope < 1.0:
        raise ValueError(f"leaky_relu slope must be in [0, 1), got {slope}")
    positive = x.data >= 0
    scale = np.where(positive, 1.0, slope).astype(x.data.dtype)
    return _make(x.data * scale, (x,), lambda g: (g * scale,))


def relu(x: Tensor) -> Tensor:
    return leaky_relu(x, 0.0)


def sigmoid(x: Tensor) -> Tensor:
    # Branch on sign to keep exp() in the underflow-safe regime.
    d = x.data
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    ex = np.exp(d[~pos])
    out[~pos] = ex / (1.0 + ex)
    return _make(out, (x,), lambda g: (g * out * (1.0 - out),))


def dropout(x: Tensor, p: float, training: bool, seed: int) -> Tensor:
    """Zero units with probability p and rescale survivors by 1/(1 - p)."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    rng = np.random.default_rng(seed)
    mask = (rng.random(x.shape) >= p).astype(x.data.dtype) / (1.0 - p)
    return _make(x.data * mask, (x,), lambda g: (g * mask,))


# ── structure ops ──


def conv2d(x: Tensor, kernels: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Batched 2-D cross-correlation: (B,Cin,H,W) x (Cout,Cin,kh,kw)."""
    if x.ndim != 4 or kernels.ndim != 4:
        raise ValueError(
            f"conv2d expects 4-D input and kernels, got {x.shape} and {kernels.shape}"
        )
    batch, cin, height, width = x.shape
    cout, kcin, kh, kw = kernels.shape
    if cin != kcin:
        raise ValueError(f"input has {cin} channels but kernels expect {kcin}")
    if stride < 1 or padding < 0:
        raise ValueError(f"bad stride {stride} or padding {padding}")
    if height + 2 * padding < kh or width + 2 * padding < kw:
        raise ValueError("kernel larger than padded input")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]
    out_h, out_w = windows.shape[2], windows.shape[3]
    cols = np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5)).reshape(
        batch, out_h * out_w, cin * kh * kw
    )
    wmat = kernels.data.reshape(cout, -1)
    out = (cols @ wmat.T).transpose(0, 2, 1).reshape(batch, cout, out_h, out_w)

    padded_shape = xp.shape

    def backward(g):
        go = g.transpose(0, 2, 3, 1).reshape(batch, out_h * out_w, cout)
        grad_w = np.einsum("bpo,bpk->ok", go, cols).reshape(kernels.shape)
        dcols = go @ wmat
        dwin = dcols.reshape(batch, out_h, out_w, cin, kh, kw).transpose(0, 3, 1, 2, 4, 5)
        dxp = np.zeros(padded_shape, dtype=g.dtype)
        for i in range(kh):
            for j in range(kw):
                dxp[:, :, i : i + stride * out_h : stride, j : j + stride * out_w : stride] += (
                    dwin[:, :, :, :, i, j]
                )
        if padding:
            dx = dxp[:, :, padding : padding + height, padding : padding + width]
        else:
            dx = dxp
        return dx, grad_w

    return _make(out, (x, kernels), backward)


def upsample_nearest(x: Tensor, factor: int) -> Tensor:
    """Repeat each spatial cell factor x factor times on a 4-D tensor."""
    if factor < 1:
        raise ValueError(f"upsample factor must be >= 1, got {factor}")
    if x.ndim != 4:
        raise ValueError(f"upsample expects a 4-D tensor, got shape {x.shape}")
    if factor == 1:
        return x
    out = x.data.repeat(factor, axis=2).repeat(factor, axis=3)
    batch, chans, height, width = x.shape

    def backward(g):
        blocks = g.reshape(batch, chans, height, factor, width, factor)
        return (blocks.sum(axis=(3, 5)),)

    return _make(out, (x,), backward)


def concat(a: Tensor, b: Tensor, axis: int = 1) -> Tensor:
    out = np.concatenate((a.data, b.data), axis=axis)
    split_at = a.shape[axis]

    def backward(g):
        ga, gb = np.split(g, [split_at], axis=axis)
        return ga, gb

    return _make(out, (a, b), backward)


# ── losses ──


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Mean squared elementwise difference as a scalar tensor."""
    if a.shape != b.shape:
        raise ValueError(f"mse shape mismatch: {a.shape} vs {b.shape}")
    d = sub(a, b)
    return mean(mul(d, d))


def ssim(u: Tensor, v: Tensor, sample_axes=None) -> Tensor:
    """Global-statistics structural similarity (differentiable).

    Statistics are means over the whole tensor by default; passing
    sample_axes (e.g. (1, 2, 3) for NCHW batches) computes one SSIM value
    per sample, keeping reduced axes as size-1 dims.
    """
    if u.shape != v.shape:
        raise ValueError(f"ssim shape mismatch: {u.shape} vs {v.shape}")
    mu_u = mean(u, axis=sample_axes, keepdims=True)
    mu_v = mean(v, axis=sample_axes, keepdims=True)
    du = sub(u, mu_u)
    dv = sub(v, mu_v)
    var_u = mean(mul(du, du), axis=sample_axes, keepdims=True)
    var_v = mean(mul(dv, dv), axis=sample_axes, keepdims=True)
    cov = mean(mul(du, dv), axis=sample_axes, keepdims=True)

    lum = add(mul(mul(mu_u, mu_v), 2.0), SSIM_C1)
    struct_num = add(mul(cov, 2.0), SSIM_C2)
    lum_den = add(add(mul(mu_u, mu_u), mul(mu_v, mu_v)), SSIM_C1)
    struct_den = add(add(var_u, var_v), SSIM_C2)
    score = div(mul(lum, struct_num), mul(lum_den, struct_den))
    if sample_axes is None:
        return mean(score)
    return score


# ── optimizer ──


@dataclass
class OptimizerState:
    """ADAM accumulators; moments are allocated on the first step."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moments: list = field(default_factory=list)
    second_moments: list = field(default_factory=list)


def adam_step(state: OptimizerState, params: list, grads: list | None = None) -> list:
    """One bias-corrected ADAM update, in place on the parameter tensors."""
    if grads is None:
        grads = [p.grad for p in params]
    if len(grads) != len(params):
        raise ValueError("one gradient per parameter required")
    if not state.first_moments:
        state.first_moments = [np.zeros_like(p.data) for p in params]
        state.second_moments = [np.zeros_like(p.data) for p in params]
    if len(state.first_moments) != len(params):
        raise ValueError("optimizer state tracks a different parameter count")

    state.step_count += 1
    correct1 = 1.0 - state.beta1**state.step_count
    correct2 = 1.0 - state.beta2**state.step_count
    for p, g, m, v in zip(params, grads, state.first_moments, state.second_moments):
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} != param shape {p.data.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        m_hat = m / correct1
        v_hat = v / correct2
        p.data = p.data - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params


def zero_grads(params: list) -> None:
    for p in params:
        p.grad = None


# ── checkpoint I/O ──


def save_checkpoint(path: str | Path, named_params: dict) -> None:
    """Write parameters as the SPX1 binary format (float32 little-endian)."""
    blob = bytearray()
    blob += CHECKPOINT_MAGIC
    blob += struct.pack("<II", CHECKPOINT_VERSION, len(named_params))
    for name, value in named_params.items():
        arr = value.data if isinstance(value, Tensor) else np.asarray(value)
        arr = arr.astype("<f4", copy=False)  # asarray keeps 0-d shapes intact
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise ValueError(f"parameter name too long: {name!r}")
        blob += struct.pack("<H", len(encoded))
        blob += encoded
        blob += struct.pack("<B", arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
        blob += arr.tobytes(order="C")
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path: str | Path) -> dict:
    raw = Path(path).read_bytes()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise ValueError("not a checkpoint file (bad magic)")
    version, count = struct.unpack_from("<II", raw, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    offset = 12
    out = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        name = raw[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<B", raw, offset)
        offset += 1
        dims = struct.unpack_from(f"<{rank}I", raw, offset)
        offset += 4 * rank
        n_values = int(np.prod(dims)) if rank else 1
        values = np.frombuffer(raw, dtype="<f4", count=n_values, offset=offset)
        offset += 4 * n_values
        out[name] = values.reshape(dims).astype(np.float32)
    if offset != len(raw):
        raise ValueError("trailing bytes after last checkpoint record")
    return out
