"""Feed-forward cost-to-go approximator with hand-written gradients.

Architecture: dense(input -> hidden1), dense(hidden1 -> hidden2), then
n_res_blocks residual blocks (dense hidden2 -> res_width -> hidden2 with a
skip connection), then a single output neuron. Leaky ReLU activations;
batch normalization after every dense layer except the output. A residual
block whose second dense layer is zero-initialized reduces to the identity
map, which pins down the block wiring.

Everything runs on float64 numpy. Parameters live in one flat vector;
per-layer arrays are views into it, so optimizer steps on the flat vector
are visible everywhere. Checkpoints are JSON text with named arrays;
Python's shortest-repr float serialization makes the round trip exact for
binary64.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (CorruptCheckpoint, ShapeMismatch, SpecMismatch,
                     UninitializedNetwork)
from .su2 import quaternion_to_unitary

BN_EPS = 1e-5
BN_MOMENTUM = 0.99
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture hyperparameters; the parameter count is a function of these."""

    input_dim: int = 4
    hidden1: int = 512
    hidden2: int = 256
    n_res_blocks: int = 2
    res_width: int = 256
    leaky_slope: float = 0.01
    use_batchnorm: bool = True

    def __post_init__(self):
        if min(self.input_dim, self.hidden1, self.hidden2, self.res_width) < 1:
            raise ValueError("layer widths must be positive")
        if self.n_res_blocks < 0:
            raise ValueError("n_res_blocks must be nonnegative")
        if not 0.0 < self.leaky_slope < 1.0:
            raise ValueError("leaky_slope must lie in (0, 1)")


def desk_spec() -> NetworkSpec:
    """Small preset suitable for a workstation run."""
    return NetworkSpec(4, 512, 256, 2, 256)


def paper_spec() -> NetworkSpec:
    """Full-scale preset (hidden sizes 5000 and 1000, six residual blocks)."""
    return NetworkSpec(4, 5000, 1000, 6, 1000)


def _segments(spec: NetworkSpec):
    """Yield (name, shape) for every trainable array, in storage order."""
    def dense(name, out_d, in_d, bn_d=None):
        yield (f"{name}_W", (out_d, in_d))
        yield (f"{name}_b", (out_d,))
        if spec.use_batchnorm and bn_d is not None:
            yield (f"{name}_gamma", (bn_d,))
            yield (f"{name}_beta", (bn_d,))

    yield from dense("dense0", spec.hidden1, spec.input_dim, spec.hidden1)
    yield from dense("dense1", spec.hidden2, spec.hidden1, spec.hidden2)
    for k in range(spec.n_res_blocks):
        yield from dense(f"res{k}a", spec.res_width, spec.hidden2, spec.res_width)
        yield from dense(f"res{k}b", spec.hidden2, spec.res_width, spec.hidden2)
    yield from dense("out", 1, spec.hidden2)


def _bn_names(spec: NetworkSpec):
    """Yield (name, dim) for every batchnorm layer, in storage order."""
    if not spec.use_batchnorm:
        return
    yield ("dense0", spec.hidden1)
    yield ("dense1", spec.hidden2)
    for k in range(spec.n_res_blocks):
        yield (f"res{k}a", spec.res_width)
        yield (f"res{k}b", spec.hidden2)


def parameter_count(spec: NetworkSpec) -> int:
    """Total number of trainable parameters for a spec."""
    return sum(int(np.prod(shape)) for _, shape in _segments(spec))


def encode_quaternions(states, input_dim: int) -> np.ndarray:
    """Encode UnitQuaternion states as network input rows.

    input_dim 4: the canonical quaternion components. input_dim 8: the
    flattened SU(2) matrix as interleaved (re, im) pairs, for ablation.
    """
    if input_dim == 4:
        return np.stack([q.components for q in states])
    if input_dim == 8:
        rows = []
        for q in states:
            m = quaternion_to_unitary(q).matrix.ravel()
            rows.append(np.column_stack([m.real, m.imag]).ravel())
        return np.stack(rows)
    raise ShapeMismatch(f"no quaternion encoding for input_dim {input_dim}")


# ---------------------------------------------------------------------------
# Layer primitives
# ---------------------------------------------------------------------------

def _bn_forward(x, gamma, beta, mean, var, train, update_stats):
    if train:
        mu = x.mean(axis=0)
        v = x.var(axis=0)
        if update_stats:
            mean *= BN_MOMENTUM
            mean += (1.0 - BN_MOMENTUM) * mu
            var *= BN_MOMENTUM
            var += (1.0 - BN_MOMENTUM) * v
    else:
        mu, v = mean, var
    inv_std = 1.0 / np.sqrt(v + BN_EPS)
    xhat = (x - mu) * inv_std
    return gamma * xhat + beta, (xhat, inv_std)


def _bn_backward(dy, cache, gamma):
    xhat, inv_std = cache
    n = dy.shape[0]
    dgamma = (dy * xhat).sum(axis=0)
    dbeta = dy.sum(axis=0)
    dxhat = dy * gamma
    dx = (inv_std / n) * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
    return dx, dgamma, dbeta


def _lrelu(x, slope):
    return np.where(x >= 0.0, x, slope * x)


def _lrelu_backward(dy, x, slope):
    return np.where(x >= 0.0, dy, slope * dy)


class MLPNetwork:
    """Cost-to-go network. Construct, then initialize() or load a checkpoint."""

    def __init__(self, spec: NetworkSpec):
        self.spec = spec
        self.mode = "eval"
        self.params = None
        self._views = {}
        self._stats = {}
        self._adam_m = None
        self._adam_v = None
        self._adam_t = 0

    # -- allocation ---------------------------------------------------------

    def _build_views(self):
        self._views = {}
        offset = 0
        for name, shape in _segments(self.spec):
            size = int(np.prod(shape))
            self._views[name] = self.params[offset:offset + size].reshape(shape)
            offset += size
        self._stats = {}
        for name, dim in _bn_names(self.spec):
            self._stats[f"{name}_mean"] = np.zeros(dim)
            self._stats[f"{name}_var"] = np.ones(dim)

    def initialize(self, seed: int = 0) -> "MLPNetwork":
        """Allocate parameters: fan-in-scaled uniform, output layer damped x0.1."""
        rng = np.random.default_rng(seed)
        self.params = np.zeros(parameter_count(self.spec))
        self._build_views()
        for name, shape in _segments(self.spec):
            v = self._views[name]
            if name.endswith("_gamma"):
                v[:] = 1.0
            elif name.endswith("_beta"):
                v[:] = 0.0
            else:
                fan_in = shape[1] if len(shape) == 2 else self._fan_in_for(name)
                bound = 1.0 / np.sqrt(fan_in)
                v[:] = rng.uniform(-bound, bound, size=shape)
                if name.startswith("out_"):
                    v *= 0.1
        return self

    def _fan_in_for(self, bias_name: str) -> int:
        w = self._views[bias_name[:-2] + "_W"]
        return w.shape[1]

    # -- bookkeeping ---------------------------------------------------------

    def train(self):
        self.mode = "train"
        return self

    def eval(self):
        self.mode = "eval"
        return self

    def _require_params(self):
        if self.params is None:
            raise UninitializedNetwork("network parameters are unset; call "
                                       "initialize() or load a checkpoint")

    def _encode(self, batch) -> np.ndarray:
        if isinstance(batch, np.ndarray):
            x = np.asarray(batch, dtype=np.float64)
            if x.ndim != 2 or x.shape[1] != self.spec.input_dim:
                raise ShapeMismatch(f"expected (n, {self.spec.input_dim}) input, "
                                    f"got {x.shape}")
            return x
        if len(batch) == 0:
            raise ShapeMismatch("empty batch")
        return encode_quaternions(batch, self.spec.input_dim)

    # -- forward / backward --------------------------------------------------

    def _run(self, x, want_cache, update_stats):
        p = self._views
        train = self.mode == "train"
        bn = self.spec.use_batchnorm
        slope = self.spec.leaky_slope
        cache = {"x": x} if want_cache else None

        def stage(name, h):
            pre = h @ p[f"{name}_W"].T + p[f"{name}_b"]
            if bn:
                normed, c = _bn_forward(pre, p[f"{name}_gamma"], p[f"{name}_beta"],
                                        self._stats[f"{name}_mean"],
                                        self._stats[f"{name}_var"],
                                        train, update_stats)
            else:
                normed, c = pre, None
            if want_cache:
                cache[name] = (h, pre, normed, c)
            return normed

        h = _lrelu(stage("dense0", x), slope)
        h = _lrelu(stage("dense1", h), slope)
        for k in range(self.spec.n_res_blocks):
            y = _lrelu(stage(f"res{k}a", h), slope)
            z = stage(f"res{k}b", y)
            h = h + z
        out = h @ p["out_W"].T + p["out_b"]
        if want_cache:
            cache["out_in"] = h
        return out.ravel(), cache

    def forward(self, batch) -> np.ndarray:
        """Evaluate J for a batch; (n,) float64 output."""
        self._require_params()
        x = self._encode(batch)
        out, _ = self._run(x, want_cache=False, update_stats=(self.mode == "train"))
        return out

    def backward(self, batch, loss_grad) -> np.ndarray:
        """Gradient of sum(loss_grad * output) w.r.t. the flat parameter vector.

        Runs its own forward pass in train mode (batch statistics), without
        touching the running statistics.
        """
        self._require_params()
        if self.mode != "train":
            raise ShapeMismatch("backward requires train mode")
        x = self._encode(batch)
        loss_grad = np.asarray(loss_grad, dtype=np.float64)
        if loss_grad.shape != (x.shape[0],):
            raise ShapeMismatch(f"loss_grad shape {loss_grad.shape} does not "
                                f"match batch size {x.shape[0]}")
        _, cache = self._run(x, want_cache=True, update_stats=False)
        return self._backward_from_cache(cache, loss_grad)

    def loss_and_gradient(self, batch, targets):
        """Mean-squared-error loss and its gradient in one cached pass.

        Equivalent to forward + backward with loss_grad = 2 (out - t) / n but
        reuses the forward intermediates; train mode, updates running stats.
        """
        self._require_params()
        if self.mode != "train":
            raise ShapeMismatch("loss_and_gradient requires train mode")
        x = self._encode(batch)
        targets = np.asarray(targets, dtype=np.float64)
        if targets.shape != (x.shape[0],):
            raise ShapeMismatch("targets do not match batch size")
        out, cache = self._run(x, want_cache=True, update_stats=True)
        n = x.shape[0]
        resid = out - targets
        loss = float(resid @ resid) / n
        loss_grad = (2.0 / n) * resid
        grads = self._backward_from_cache(cache, loss_grad)
        return loss, grads

    def _backward_from_cache(self, cache, loss_grad):
        p = self._views
        bn = self.spec.use_batchnorm
        slope = self.spec.leaky_slope
        grads = np.zeros_like(self.params)
        gview = {}
        offset = 0
        for name, shape in _segments(self.spec):
            size = int(np.prod(shape))
            gview[name] = grads[offset:offset + size].reshape(shape)
            offset += size

        def stage_backward(name, d_normed):
            h, pre, _, c = cache[name]
            if bn:
                d_pre, dgamma, dbeta = _bn_backward(d_normed, c, p[f"{name}_gamma"])
                gview[f"{name}_gamma"][:] += dgamma
                gview[f"{name}_beta"][:] += dbeta
            else:
                d_pre = d_normed
            gview[f"{name}_W"][:] += d_pre.T @ h
            gview[f"{name}_b"][:] += d_pre.sum(axis=0)
            return d_pre @ p[f"{name}_W"]

        dout = np.asarray(loss_grad, dtype=np.float64)[:, None]
        gview["out_W"][:] += dout.T @ cache["out_in"]
        gview["out_b"][:] += dout.sum(axis=0)
        dh = dout @ p["out_W"]

        for k in reversed(range(self.spec.n_res_blocks)):
            # skip path keeps dh as-is; block path goes through both stages
            dy = stage_backward(f"res{k}b", dh)
            dy = _lrelu_backward(dy, cache[f"res{k}a"][2], slope)
            dh = dh + stage_backward(f"res{k}a", dy)

        d1 = _lrelu_backward(dh, cache["dense1"][2], slope)
        dh = stage_backward("dense1", d1)
        d0 = _lrelu_backward(dh, cache["dense0"][2], slope)
        stage_backward("dense0", d0)
        return grads

    # -- optimizers -----------------------------------------------------------

    def sgd_step(self, grads, lr: float):
        self._require_params()
        grads = np.asarray(grads)
        if grads.shape != self.params.shape:
            raise ShapeMismatch("gradient length does not match parameter count")
        self.params -= lr * grads

    def adam_step(self, grads, lr: float, betas=(0.9, 0.999), eps: float = 1e-8):
        self._require_params()
        grads = np.asarray(grads)
        if grads.shape != self.params.shape:
            raise ShapeMismatch("gradient length does not match parameter count")
        if self._adam_m is None:
            self._adam_m = np.zeros_like(self.params)
            self._adam_v = np.zeros_like(self.params)
            self._adam_t = 0
        self._adam_t += 1
        b1, b2 = betas
        self._adam_m = b1 * self._adam_m + (1 - b1) * grads
        self._adam_v = b2 * self._adam_v + (1 - b2) * grads * grads
        mhat = self._adam_m / (1 - b1 ** self._adam_t)
        vhat = self._adam_v / (1 - b2 ** self._adam_t)
        self.params -= lr * mhat / (np.sqrt(vhat) + eps)

    # -- persistence -----------------------------------------------------------

    def save_checkpoint(self, path: str):
        self._require_params()
        doc = {
            "version": CHECKPOINT_VERSION,
            "spec": asdict(self.spec),
            "arrays": {name: self._views[name].tolist()
                       for name, _ in _segments(self.spec)},
            "stats": {name: arr.tolist() for name, arr in self._stats.items()},
        }
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(doc, fh)
        os.replace(tmp, path)


def load_checkpoint(path: str) -> MLPNetwork:
    """Load a checkpoint written by save_checkpoint; returns an Eval-mode net."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptCheckpoint(f"cannot read checkpoint {path}: {exc}") from exc
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CorruptCheckpoint(f"unsupported checkpoint version {doc.get('version')!r}")
    try:
        spec = NetworkSpec(**doc["spec"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptCheckpoint(f"bad spec in checkpoint: {exc}") from exc
    net = MLPNetwork(spec)
    net.params = np.zeros(parameter_count(spec))
    net._build_views()
    arrays = doc.get("arrays", {})
    for name, shape in _segments(spec):
        if name not in arrays:
            raise CorruptCheckpoint(f"checkpoint missing array {name!r}")
        arr = np.asarray(arrays[name], dtype=np.float64)
        if arr.shape != shape:
            raise CorruptCheckpoint(f"array {name!r} has shape {arr.shape}, "
                                    f"expected {shape}")
        net._views[name][:] = arr
    for name, ref in net._stats.items():
        if name not in doc.get("stats", {}):
            raise CorruptCheckpoint(f"checkpoint missing statistics array {name!r}")
        arr = np.asarray(doc["stats"][name], dtype=np.float64)
        if arr.shape != ref.shape:
            raise CorruptCheckpoint(f"statistics array {name!r} has wrong shape")
        ref[:] = arr
    return net


def copy_parameters(src: MLPNetwork, dst: MLPNetwork):
    """Copy parameters and running statistics; specs must match exactly."""
    if src.spec != dst.spec:
        raise SpecMismatch(f"cannot copy between specs {src.spec} and {dst.spec}")
    src._require_params()
    if dst.params is None:
        dst.params = np.zeros_like(src.params)
        dst._build_views()
    dst.params[:] = src.params
    for name, arr in src._stats.items():
        dst._stats[name][:] = arr
