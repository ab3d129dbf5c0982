"""Minimal reverse-mode automatic differentiation over dense numpy arrays.

Ops build an eager computation graph of :class:`Tensor` nodes; calling
``backward()`` on a scalar root accumulates d(root)/d(leaf) into the
``grad`` of every reachable leaf with ``requires_grad``.  Each backward
pass contributes independently, so two passes without zeroing yield
exactly twice the gradient of one pass.

64-bit floats are the default; 32-bit is available for speed by passing
float32 arrays in (ops preserve the input dtype).
"""

import warnings

import numpy as np

from . import kernels

DEFAULT_DTYPE = np.float64

LOG_FLOOR = 1e-12


class ShapeMismatch(ValueError):
    """An op received operands whose shapes cannot be combined."""


class NonFiniteError(FloatingPointError):
    """A value or gradient stopped being finite."""


class Tensor:
    """Dense array with a gradient slot and an optional graph history."""

    def __init__(self, values, requires_grad=False, _parents=(), _backward=None, _op="leaf"):
        values = np.asarray(values)
        if not np.issubdtype(values.dtype, np.floating):
            values = values.astype(DEFAULT_DTYPE)
        self.values = values
        self.requires_grad = bool(requires_grad) or any(p.requires_grad for p in _parents)
        self._grad = None
        self._parents = tuple(_parents)
        self._backward = _backward
        self._op = _op

    @property
    def shape(self):
        return self.values.shape

    @property
    def grad(self):
        if self._grad is None:
            self._grad = np.zeros_like(self.values)
        return self._grad

    @grad.setter
    def grad(self, value):
        value = np.asarray(value, dtype=self.values.dtype)
        if value.shape != self.values.shape:
            value = value.reshape(self.values.shape)
        self._grad = value

    def zero_grad(self):
        if self._grad is not None:
            self._grad[...] = 0.0

    def item(self):
        return float(self.values)

    def backward(self):
        """Accumulate d(self)/d(leaf) into every reachable parameter's grad."""
        if self.values.size != 1:
            raise ValueError(f"backward requires a scalar root, got shape {self.shape}")
        topo = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        flows = {id(self): np.ones_like(self.values)}
        for node in reversed(topo):
            g = flows.pop(id(node), None)
            if g is None:
                continue
            if node._parents:
                for parent, pg in zip(node._parents, node._backward(g)):
                    if pg is None or not parent.requires_grad:
                        continue
                    acc = flows.get(id(parent))
                    flows[id(parent)] = pg if acc is None else acc + pg
            elif node.requires_grad:
                node.grad = node.grad + g

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op!r}, requires_grad={self.requires_grad})"


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _as_operand(x, ref):
    """Coerce ``x`` for a binary op with ``ref``; plain scalars follow the
    tensor's dtype so float32 graphs stay float32."""
    if isinstance(x, Tensor):
        return x
    if np.isscalar(x):
        return Tensor(np.asarray(x, dtype=ref.values.dtype))
    return Tensor(x)


def _unbroadcast(g, shape):
    """Sum g down to ``shape`` (the inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _broadcast_guard(op, a, b):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeMismatch(f"{op}: cannot combine shapes {a.shape} and {b.shape}") from None


def add(a, b):
    if isinstance(a, Tensor):
        a, b = a, _as_operand(b, a)
    else:
        b = _as_tensor(b)
        a = _as_operand(a, b)
    _broadcast_guard("add", a, b)
    out = Tensor(a.values + b.values, _parents=(a, b), _op="add")
    out._backward = lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape))
    return out


def sub(a, b):
    if isinstance(a, Tensor):
        a, b = a, _as_operand(b, a)
    else:
        b = _as_tensor(b)
        a = _as_operand(a, b)
    _broadcast_guard("sub", a, b)
    out = Tensor(a.values - b.values, _parents=(a, b), _op="sub")
    out._backward = lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape))
    return out


def mul(a, b):
    if isinstance(a, Tensor):
        a, b = a, _as_operand(b, a)
    else:
        b = _as_tensor(b)
        a = _as_operand(a, b)
    _broadcast_guard("mul", a, b)
    out = Tensor(a.values * b.values, _parents=(a, b), _op="mul")
    out._backward = lambda g: (
        _unbroadcast(g * b.values, a.shape),
        _unbroadcast(g * a.values, b.shape),
    )
    return out


def matmul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.values.ndim != 2 or b.values.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")
    out = Tensor(a.values @ b.values, _parents=(a, b), _op="matmul")
    out._backward = lambda g: (g @ b.values.T, a.values.T @ g)
    return out


def concat(tensors, axis=-1):
    tensors = [_as_tensor(t) for t in tensors]
    ref = tensors[0].values
    for t in tensors[1:]:
        if t.values.ndim != ref.ndim:
            raise ShapeMismatch(
                f"concat: ranks differ, {ref.shape} vs {t.shape}"
            )
    try:
        values = np.concatenate([t.values for t in tensors], axis=axis)
    except ValueError:
        raise ShapeMismatch(
            f"concat: shapes {[t.shape for t in tensors]} on axis {axis}"
        ) from None
    out = Tensor(values, _parents=tuple(tensors), _op="concat")
    sizes = [t.values.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    out._backward = lambda g: tuple(np.split(g, splits, axis=axis))
    return out


def sigmoid(x):
    x = _as_tensor(x)
    y = 1.0 / (1.0 + np.exp(-x.values))
    out = Tensor(y, _parents=(x,), _op="sigmoid")
    out._backward = lambda g: (g * y * (1.0 - y),)
    return out


def tanh(x):
    x = _as_tensor(x)
    y = np.tanh(x.values)
    out = Tensor(y, _parents=(x,), _op="tanh")
    out._backward = lambda g: (g * (1.0 - y * y),)
    return out


def relu(x):
    x = _as_tensor(x)
    out = Tensor(np.maximum(x.values, 0.0), _parents=(x,), _op="relu")
    out._backward = lambda g: (g * (x.values > 0.0),)
    return out


def softmax(x, axis=-1):
    """Softmax along ``axis``, computed with max subtraction."""
    x = _as_tensor(x)
    shifted = x.values - x.values.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(y, _parents=(x,), _op="softmax")

    def _back(g):
        dot = (g * y).sum(axis=axis, keepdims=True)
        return ((g - dot) * y,)

    out._backward = _back
    return out


def log(x):
    x = _as_tensor(x)
    out = Tensor(np.log(x.values), _parents=(x,), _op="log")
    out._backward = lambda g: (g / x.values,)
    return out


def exp(x):
    x = _as_tensor(x)
    y = np.exp(x.values)
    out = Tensor(y, _parents=(x,), _op="exp")
    out._backward = lambda g: (g * y,)
    return out


def absolute(x):
    x = _as_tensor(x)
    out = Tensor(np.abs(x.values), _parents=(x,), _op="abs")
    # subgradient at 0 is 0, which np.sign provides
    out._backward = lambda g: (g * np.sign(x.values),)
    return out


def clamp_min(x, floor):
    x = _as_tensor(x)
    out = Tensor(np.maximum(x.values, floor), _parents=(x,), _op="clamp_min")
    out._backward = lambda g: (g * (x.values > floor),)
    return out


def clip(x, lo, hi):
    x = _as_tensor(x)
    out = Tensor(np.clip(x.values, lo, hi), _parents=(x,), _op="clip")
    out._backward = lambda g: (g * ((x.values > lo) & (x.values < hi)),)
    return out


def reduce_sum(x, axis=None, keepdims=False):
    x = _as_tensor(x)
    out = Tensor(x.values.sum(axis=axis, keepdims=keepdims), _parents=(x,), _op="sum")

    def _back(g):
        if axis is None:
            return (np.broadcast_to(g, x.shape).copy(),)
        gg = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, x.shape).copy(),)

    out._backward = _back
    return out


def take_per_row(x, idx):
    """Select one column per row: out[b] = x[b, idx[b]]."""
    x = _as_tensor(x)
    idx = np.asarray(idx, dtype=np.int64)
    if x.values.ndim != 2 or idx.ndim != 1 or idx.shape[0] != x.shape[0]:
        raise ShapeMismatch(f"take_per_row: {x.shape} with index shape {idx.shape}")
    rows = np.arange(x.shape[0])
    out = Tensor(x.values[rows, idx], _parents=(x,), _op="take_per_row")

    def _back(g):
        dx = np.zeros_like(x.values)
        np.add.at(dx, (rows, idx), g)
        return (dx,)

    out._backward = _back
    return out


def take_time(x, t):
    """Select one step from a (B, T, H) sequence: out = x[:, t, :]."""
    x = _as_tensor(x)
    if x.values.ndim != 3:
        raise ShapeMismatch(f"take_time: expected rank 3, got {x.shape}")
    out = Tensor(x.values[:, t, :].copy(), _parents=(x,), _op="take_time")

    def _back(g):
        dx = np.zeros_like(x.values)
        dx[:, t, :] = g
        return (dx,)

    out._backward = _back
    return out


def embedding_lookup(table, ids):
    """Gather rows of a (V, E) table; output shape is ids.shape + (E,)."""
    table = _as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if table.values.ndim != 2:
        raise ShapeMismatch(f"embedding_lookup: table shape {table.shape}")
    out = Tensor(table.values[ids], _parents=(table,), _op="embedding_lookup")

    def _back(g):
        dt = np.zeros_like(table.values)
        np.add.at(dt, ids.reshape(-1), g.reshape(-1, table.shape[1]))
        return (dt,)

    out._backward = _back
    return out


def lstm_sequence(x, w_in, w_rec, bias, reverse=False):
    """Fused LSTM scan over x (B, T, E) returning all hidden states (B, T, H).

    ``reverse=True`` scans right to left; outputs stay aligned with the
    input order, so out[:, t] is the state after consuming tokens T-1..t.
    The heavy lifting happens in :mod:`noisylab.kernels`.
    """
    x, w_in, w_rec, bias = map(_as_tensor, (x, w_in, w_rec, bias))
    if x.values.ndim != 3 or x.shape[2] != w_in.shape[0]:
        raise ShapeMismatch(f"lstm_sequence: input {x.shape} with w_in {w_in.shape}")
    if w_in.shape[1] != 4 * w_rec.shape[0] or w_rec.shape[1] != w_in.shape[1]:
        raise ShapeMismatch(f"lstm_sequence: w_in {w_in.shape} with w_rec {w_rec.shape}")
    if bias.values.ndim != 1 or bias.shape[0] != w_in.shape[1]:
        raise ShapeMismatch(f"lstm_sequence: bias {bias.shape} with w_in {w_in.shape}")
    xv = x.values if not reverse else x.values[:, ::-1, :]
    xv = np.ascontiguousarray(xv)
    h_all, c_all, tc_all, gates = kernels.lstm_forward(
        xv, w_in.values, w_rec.values, bias.values
    )
    values = h_all if not reverse else h_all[:, ::-1, :]
    out = Tensor(np.ascontiguousarray(values), _parents=(x, w_in, w_rec, bias), _op="lstm")

    def _back(g):
        dh_all = g if not reverse else g[:, ::-1, :]
        dh_all = np.ascontiguousarray(dh_all, dtype=xv.dtype)
        dx, dw_in, dw_rec, dbias = kernels.lstm_backward(
            xv, w_in.values, w_rec.values, h_all, c_all, tc_all, gates,
            dh_all, x.requires_grad,
        )
        if x.requires_grad:
            dx = dx if not reverse else np.ascontiguousarray(dx[:, ::-1, :])
        else:
            dx = None
        return (dx, dw_in, dw_rec, dbias)

    out._backward = _back
    return out


def cross_entropy(predicted, targets):
    """Mean negative log probability of the target classes.

    ``predicted`` holds probability distributions (rows summing to 1 within
    1e-9); ``targets`` are class indices.  Probabilities below 1e-12 are
    clamped before the log, and each clamping event is counted on
    ``cross_entropy.clamp_events`` and reported as a RuntimeWarning.
    """
    predicted = _as_tensor(predicted)
    single = predicted.values.ndim == 1
    p = predicted if not single else _reshape_row(predicted)
    targets = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    n, k = p.shape
    if targets.shape != (n,):
        raise ShapeMismatch(f"cross_entropy: {p.shape} with targets {targets.shape}")
    sums = p.values.sum(axis=1)
    # 1e-9 in 64-bit mode; 32-bit rounding needs the looser bound
    tol = 1e-9 if p.values.dtype == np.float64 else 1e-5
    if np.abs(sums - 1.0).max() > tol:
        raise ValueError("cross_entropy: rows are not probability distributions")
    if targets.min() < 0 or targets.max() >= k:
        raise ValueError(f"cross_entropy: target out of range for {k} classes")
    picked = take_per_row(p, targets)
    clamped = int((picked.values < LOG_FLOOR).sum())
    if clamped:
        cross_entropy.clamp_events += clamped
        warnings.warn(
            f"cross_entropy clamped {clamped} probabilities at {LOG_FLOOR}",
            RuntimeWarning,
            stacklevel=2,
        )
    return mul(reduce_sum(log(clamp_min(picked, LOG_FLOOR))), -1.0 / n)


cross_entropy.clamp_events = 0


def _reshape_row(t):
    out = Tensor(t.values.reshape(1, -1), _parents=(t,), _op="row")
    out._backward = lambda g: (g.reshape(t.shape),)
    return out


def absolute_error(predicted, target):
    """Sum of componentwise absolute differences (over all elements)."""
    predicted, target = _as_tensor(predicted), _as_tensor(target)
    if predicted.shape != target.shape:
        raise ShapeMismatch(f"absolute_error: {predicted.shape} vs {target.shape}")
    return reduce_sum(absolute(sub(predicted, target)))


def gradient_check(loss_fn, params, h=1e-5):
    """Max relative error between analytic and central-difference gradients.

    ``loss_fn`` rebuilds the scalar loss from the current parameter values;
    ``params`` is a Tensor or list of Tensors whose gradients are checked.
    Runs in 64-bit only.  Gradients of the checked parameters are zeroed
    before and after.
    """
    if not 1e-6 <= h <= 1e-4:
        raise ValueError(f"gradient_check: h={h} outside [1e-6, 1e-4]")
    if isinstance(params, Tensor):
        params = [params]
    for p in params:
        if p.values.dtype != np.float64:
            raise ValueError("gradient_check requires 64-bit parameters")
        p.zero_grad()
    loss = loss_fn()
    if not np.isfinite(loss.values).all():
        raise NonFiniteError("gradient_check: loss is not finite")
    loss.backward()
    analytic = [p.grad.copy() for p in params]
    if any(not np.isfinite(a).all() for a in analytic):
        raise NonFiniteError("gradient_check: analytic gradient is not finite")
    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.values.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = float(loss_fn().values)
            flat[i] = orig - h
            down = float(loss_fn().values)
            flat[i] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                raise NonFiniteError("gradient_check: perturbed loss is not finite")
            numeric = (up - down) / (2.0 * h)
            ana = a.reshape(-1)[i]
            err = abs(ana - numeric) / max(abs(ana), abs(numeric), 1e-12)
            worst = max(worst, err)
    for p in params:
        p.zero_grad()
    return worst
