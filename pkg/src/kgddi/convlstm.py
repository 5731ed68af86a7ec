"""Convolutional LSTM classifier with hand-written backpropagation.

Data flow for a batch of pair vectors ``x`` of length ``n``::

    reshape (seq_len, n / seq_len)
    -> conv1d (filters, kernel) -> ReLU -> noise -> dropout
    -> max-pool (pool) along positions                 T = seq_len // pool steps
    -> ConvLSTM over the T steps                       each step is (positions, filters / positions)
    -> noise -> max over time -> dropout
    -> dense -> ReLU -> noise
    -> linear (2) -> softmax

The recurrent cell convolves along the ``positions`` axis inside every
gate.  Peephole weights are elementwise maps of shape
``(positions, hidden)``.  With ``cell_kernel=1`` and ``positions=1`` the cell
is a plain peephole LSTM.  Noise and dropout are active only in train mode.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .baselines._base import check_training_data
from .exceptions import ConfigError, TrainingError
from .optim import Optimizer, rng_stream

logger = logging.getLogger(__name__)

GATES = ("i", "f", "c", "o")


def binary_cross_entropy(y_true, y_prob, eps: float = 0.0) -> np.ndarray:
    """Per-example ``-sum_j y_j log p_j`` for one-hot or 0/1 labels.

    ``y_prob`` holds either the probability of class 1 (1-D) or a row of
    class probabilities (2-D).
    """
    p = np.asarray(y_prob, dtype=np.float64)
    y = np.asarray(y_true)
    if p.ndim == 1:
        p = np.column_stack([1.0 - p, p])
    if y.ndim == 1:
        y = np.column_stack([1 - y, y])
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(y > 0, y * np.log(np.maximum(p, eps) if eps else p), 0.0)
    return -terms.sum(axis=1)


def _glorot(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def conv1d_same(x, W, b=None):
    """``y[:, s] = sum_k xpad[:, s + k] @ W[k]`` with 'same' padding.

    ``x`` is ``(batch, positions, in)`` and ``W`` is ``(kernel, in, out)``.
    The left pad is ``(kernel - 1) // 2``.  Returns ``y`` and the padded
    input for the backward pass.
    """
    K = W.shape[0]
    left = (K - 1) // 2
    xpad = np.pad(x, ((0, 0), (left, K - 1 - left), (0, 0)))
    S = x.shape[1]
    y = xpad[:, 0:S] @ W[0]
    for k in range(1, K):
        y += xpad[:, k:k + S] @ W[k]
    if b is not None:
        y += b
    return y, xpad


def conv1d_same_backward(xpad, W, dy):
    K = W.shape[0]
    left = (K - 1) // 2
    S = dy.shape[1]
    dW = np.empty_like(W)
    dxpad = np.zeros_like(xpad)
    dy2 = dy.reshape(-1, dy.shape[-1])
    for k in range(K):
        dW[k] = xpad[:, k:k + S].reshape(-1, xpad.shape[-1]).T @ dy2
        dxpad[:, k:k + S] += dy @ W[k].T
    return dW, dxpad[:, left:left + S]


class ConvLstmCell:
    """One recurrent layer.  ``params`` maps ``prefix + name`` to arrays.

    Kernels ``W_x*`` are ``(kernel, in, hidden)``, ``W_h*`` are
    ``(kernel, hidden, hidden)``, peepholes ``W_ci, W_cf, W_co`` are
    ``(positions, hidden)`` and biases ``b_*`` are ``(hidden,)``.
    """

    def __init__(self, params: dict, prefix: str = ""):
        self.params = params
        self.prefix = prefix

    def __getitem__(self, name):
        return self.params[self.prefix + name]

    @property
    def hidden(self) -> int:
        return self["b_i"].shape[0]

    @property
    def positions(self) -> int:
        return self["W_ci"].shape[0]

    @staticmethod
    def init_params(rng, n_in, hidden, positions, kernel, prefix=""):
        p = {}
        for g in GATES:
            p[f"{prefix}W_x{g}"] = _glorot(rng, (kernel, n_in, hidden), kernel * n_in, hidden)
            p[f"{prefix}W_h{g}"] = _glorot(rng, (kernel, hidden, hidden), kernel * hidden, hidden)
        for g in ("i", "f", "o"):
            p[f"{prefix}W_c{g}"] = _glorot(rng, (positions, hidden), hidden, hidden)
        for g in GATES:
            p[f"{prefix}b_{g}"] = np.zeros(hidden)
        return p

    def _stacked(self):
        Wx = np.concatenate([self[f"W_x{g}"] for g in GATES], axis=2)
        Wh = np.concatenate([self[f"W_h{g}"] for g in GATES], axis=2)
        b = np.concatenate([self[f"b_{g}"] for g in GATES])
        return Wx, Wh, b

    def step(self, X, H_prev, C_prev, stacked=None):
        """Advance one timestep.  Returns ``(H, C, cache)``."""
        if X.ndim != 3 or X.shape[1] != self.positions or X.shape[2] != self["W_xi"].shape[1]:
            raise ValueError(
                f"cell input must be (batch, {self.positions}, {self['W_xi'].shape[1]}), got {X.shape}"
            )
        Wx, Wh, b = stacked or self._stacked()
        h = self.hidden
        zx, xpad = conv1d_same(X, Wx)
        zh, hpad = conv1d_same(H_prev, Wh)
        Z = zx + zh + b
        i = expit(Z[..., :h] + self["W_ci"] * C_prev)
        f = expit(Z[..., h:2 * h] + self["W_cf"] * C_prev)
        g = np.tanh(Z[..., 2 * h:3 * h])
        C = f * C_prev + i * g
        o = expit(Z[..., 3 * h:] + self["W_co"] * C)
        tC = np.tanh(C)
        H = o * tC
        return H, C, (xpad, hpad, C_prev, i, f, g, o, C, tC)

    def step_backward(self, cache, dH, dC_next, grads, stacked):
        """Backpropagate one timestep, accumulating into ``grads``.

        Returns gradients with respect to the step input, ``H_prev`` and
        ``C_prev``.
        """
        Wx, Wh, _ = stacked
        xpad, hpad, C_prev, i, f, g, o, C, tC = cache
        pre = self.prefix
        do = dH * tC
        dzo = do * o * (1 - o)
        dC = dC_next + dH * o * (1 - tC**2) + dzo * self["W_co"]
        di, dg, df = dC * g, dC * i, dC * C_prev
        dzi = di * i * (1 - i)
        dzf = df * f * (1 - f)
        dzc = dg * (1 - g**2)
        dC_prev = dC * f + dzi * self["W_ci"] + dzf * self["W_cf"]
        grads[pre + "W_co"] += np.sum(dzo * C, axis=0)
        grads[pre + "W_ci"] += np.sum(dzi * C_prev, axis=0)
        grads[pre + "W_cf"] += np.sum(dzf * C_prev, axis=0)
        dZ = np.concatenate([dzi, dzf, dzc, dzo], axis=-1)
        dWx, dX = conv1d_same_backward(xpad, Wx, dZ)
        dWh, dH_prev = conv1d_same_backward(hpad, Wh, dZ)
        db = dZ.sum(axis=(0, 1))
        h = self.hidden
        for n, g_ in enumerate(GATES):
            sl = slice(n * h, (n + 1) * h)
            grads[f"{pre}W_x{g_}"] += dWx[..., sl]
            grads[f"{pre}W_h{g_}"] += dWh[..., sl]
            grads[f"{pre}b_{g_}"] += db[sl]
        return dX, dH_prev, dC_prev


def cell_step(cell: ConvLstmCell, X, state=None):
    """Single ConvLSTM step from ``state = (H_prev, C_prev)`` (zeros if omitted)."""
    X = np.asarray(X, dtype=np.float64)
    if state is None:
        z = np.zeros(X.shape[:2] + (cell.hidden,))
        state = (z, z)
    H, C, _ = cell.step(X, *state)
    return H, C


@dataclass
class NetworkConfig:
    """Architecture and training settings.

    ``seq_len=None`` picks the largest divisor of the input length that is
    at most 100.
    """

    seq_len: int | None = 100
    filters: int = 100
    kernel: int = 4
    pool: int = 4
    hidden: int = 25
    positions: int = 4
    cell_kernel: int = 3
    layers: int = 1
    dense: int = 64
    dropout: float = 0.25
    noise: float = 0.05
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    batch_size: int = 128
    epochs: int = 30
    validation_fraction: float = 0.1
    seed: int = 0

    def resolve(self, n_features: int) -> "NetworkConfig":
        """Check the shape arithmetic against the input length."""
        cfg = NetworkConfig(**asdict(self))
        if cfg.seq_len is None:
            cfg.seq_len = max(d for d in range(1, min(100, n_features) + 1) if n_features % d == 0)
        if n_features % cfg.seq_len:
            raise ConfigError(f"input length {n_features} is not divisible by seq_len {cfg.seq_len}")
        if cfg.seq_len // cfg.pool < 1:
            raise ConfigError(f"pool {cfg.pool} exceeds seq_len {cfg.seq_len}")
        if cfg.filters % cfg.positions:
            raise ConfigError(f"filters {cfg.filters} not divisible by positions {cfg.positions}")
        if not 0 <= cfg.dropout < 1:
            raise ConfigError("dropout must lie in [0, 1)")
        if min(cfg.filters, cfg.kernel, cfg.pool, cfg.hidden, cfg.cell_kernel, cfg.layers) < 1:
            raise ConfigError("layer sizes must be >= 1")
        return cfg


class ConvLSTMNetwork:
    """Parameters plus forward and backward passes for one resolved config."""

    def __init__(self, config: NetworkConfig, n_features: int, params: dict | None = None):
        self.config = config.resolve(n_features)
        self.n_features = n_features
        self.params = params if params is not None else self._init_params(rng_stream(config.seed, 0))

    @property
    def channels(self) -> int:
        return self.n_features // self.config.seq_len

    @property
    def steps(self) -> int:
        return self.config.seq_len // self.config.pool

    def _init_params(self, rng):
        c = self.config
        p = {
            "conv_W": _glorot(rng, (c.kernel, self.channels, c.filters), c.kernel * self.channels, c.filters),
            "conv_b": np.zeros(c.filters),
        }
        n_in = c.filters // c.positions
        for layer in range(c.layers):
            p.update(ConvLstmCell.init_params(rng, n_in, c.hidden, c.positions, c.cell_kernel, f"lstm{layer}."))
            n_in = c.hidden
        width = c.positions * c.hidden
        if c.dense:
            p["dense_W"] = _glorot(rng, (width, c.dense), width, c.dense)
            p["dense_b"] = np.zeros(c.dense)
            width = c.dense
        p["out_W"] = np.zeros((width, 2))
        p["out_b"] = np.zeros(2)
        return p

    def cells(self):
        return [ConvLstmCell(self.params, f"lstm{layer}.") for layer in range(self.config.layers)]

    def draw_masks(self, batch: int, rng) -> dict:
        """Noise and inverted-dropout masks for one train-mode pass."""
        c = self.config
        keep = 1.0 - c.dropout
        width = c.positions * c.hidden

        def drop(shape):
            return (rng.random(shape) < keep) / keep

        m = {
            "conv_noise": rng.normal(0.0, c.noise, (batch, c.seq_len, c.filters)),
            "conv_drop": drop((batch, c.seq_len, c.filters)),
            "lstm_noise": rng.normal(0.0, c.noise, (batch, self.steps, c.positions, c.hidden)),
            "pool_drop": drop((batch, width)),
        }
        if c.dense:
            m["dense_noise"] = rng.normal(0.0, c.noise, (batch, c.dense))
        return m

    def forward(self, X, masks: dict | None = None):
        """Class probabilities; ``masks`` switches on train mode.  Returns ``(probs, cache)``."""
        c, p = self.config, self.params
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected (batch, {self.n_features}) input, got {X.shape}")
        B = len(X)
        x = X.reshape(B, c.seq_len, self.channels)
        z1, xpad = conv1d_same(x, p["conv_W"], p["conv_b"])
        a1 = np.maximum(z1, 0.0)
        if masks is not None:
            a1 = (a1 + masks["conv_noise"]) * masks["conv_drop"]
        T = self.steps
        win = a1[:, :T * c.pool].reshape(B, T, c.pool, c.filters)
        pool_arg = win.argmax(axis=2)
        pooled = np.take_along_axis(win, pool_arg[:, :, None, :], axis=2)[:, :, 0, :]
        seq = pooled.reshape(B, T, c.positions, c.filters // c.positions)
        layer_caches = []
        for cell in self.cells():
            stacked = cell._stacked()
            H = np.zeros((B, c.positions, c.hidden))
            C = np.zeros_like(H)
            outs, caches = [], []
            for t in range(T):
                H, C, cache = cell.step(seq[:, t], H, C, stacked)
                outs.append(H)
                caches.append(cache)
            seq = np.stack(outs, axis=1)
            layer_caches.append((stacked, caches))
        hseq = seq + masks["lstm_noise"] if masks is not None else seq
        flat = hseq.reshape(B, T, -1)
        time_arg = flat.argmax(axis=1)
        g = np.take_along_axis(flat, time_arg[:, None, :], axis=1)[:, 0, :]
        if masks is not None:
            g = g * masks["pool_drop"]
        feat, dense_pre = g, None
        if c.dense:
            dense_pre = g @ p["dense_W"] + p["dense_b"]
            feat = np.maximum(dense_pre, 0.0)
            if masks is not None:
                feat = feat + masks["dense_noise"]
        logits = feat @ p["out_W"] + p["out_b"]
        logits = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        probs = e / e.sum(axis=1, keepdims=True)
        cache = dict(B=B, xpad=xpad, z1=z1, win_shape=win.shape, pool_arg=pool_arg,
                     layer_caches=layer_caches, time_arg=time_arg, flat_shape=flat.shape,
                     g=g, dense_pre=dense_pre, feat=feat, masks=masks)
        return probs, cache

    def backward(self, probs, y, cache) -> dict:
        """Gradients of the mean cross-entropy for 0/1 labels ``y``."""
        c, p = self.config, self.params
        B = cache["B"]
        masks = cache["masks"]
        grads = {k: np.zeros_like(v) for k, v in p.items()}
        Y = np.column_stack([1 - y, y]).astype(np.float64)
        dlogits = (probs - Y) / B
        grads["out_W"] = cache["feat"].T @ dlogits
        grads["out_b"] = dlogits.sum(axis=0)
        dfeat = dlogits @ p["out_W"].T
        if c.dense:
            dpre = dfeat * (cache["dense_pre"] > 0)
            grads["dense_W"] = cache["g"].T @ dpre
            grads["dense_b"] = dpre.sum(axis=0)
            dg = dpre @ p["dense_W"].T
        else:
            dg = dfeat
        if masks is not None:
            dg = dg * masks["pool_drop"]
        dflat = np.zeros(cache["flat_shape"])
        np.put_along_axis(dflat, cache["time_arg"][:, None, :], dg[:, None, :], axis=1)
        T = self.steps
        dseq = dflat.reshape(B, T, c.positions, c.hidden)
        for cell, (stacked, caches) in zip(reversed(self.cells()), reversed(cache["layer_caches"])):
            dH_carry = np.zeros((B, c.positions, c.hidden))
            dC = np.zeros_like(dH_carry)
            dinput = [None] * T
            for t in reversed(range(T)):
                dX, dH_carry, dC = cell.step_backward(caches[t], dseq[:, t] + dH_carry, dC, grads, stacked)
                dinput[t] = dX
            dseq = np.stack(dinput, axis=1)
        dpooled = dseq.reshape(B, T, c.filters)
        dwin = np.zeros(cache["win_shape"])
        np.put_along_axis(dwin, cache["pool_arg"][:, :, None, :], dpooled[:, :, None, :], axis=2)
        da1 = np.zeros_like(cache["z1"])
        da1[:, :T * c.pool] = dwin.reshape(B, T * c.pool, c.filters)
        if masks is not None:
            da1 = da1 * masks["conv_drop"]
        dz1 = da1 * (cache["z1"] > 0)
        grads["conv_W"], _ = conv1d_same_backward(cache["xpad"], p["conv_W"], dz1)
        grads["conv_b"] = dz1.sum(axis=(0, 1))
        return grads

    def loss(self, X, y, masks=None) -> float:
        probs, _ = self.forward(X, masks)
        return float(np.mean(binary_cross_entropy(y, probs)))

    def loss_and_grads(self, X, y, masks=None):
        probs, cache = self.forward(X, masks)
        y = np.asarray(y, dtype=np.int64)
        return float(np.mean(binary_cross_entropy(y, probs))), self.backward(probs, y, cache)

    def gate_activations(self, X) -> dict:
        """Eval-mode gate values of every layer and step, for range checks."""
        out = {}
        _, cache = self.forward(X)
        for layer, (_, caches) in enumerate(cache["layer_caches"]):
            for name, pos in (("i", 3), ("f", 4), ("o", 6)):
                out[f"lstm{layer}.{name}"] = np.stack([cc[pos] for cc in caches])
        return out


class ConvLSTMClassifier(ClassifierMixin, BaseEstimator):
    """Scikit-learn wrapper training :class:`ConvLSTMNetwork` on cross-entropy.

    A ``validation_fraction`` share of the training rows is held out to
    report ``val_loss_curve_`` alongside ``loss_curve_``.
    """

    def __init__(self, seq_len=100, filters=100, kernel=4, pool=4, hidden=25, positions=4,
                 cell_kernel=3, layers=1, dense=64, dropout=0.25, noise=0.05, optimizer="adam",
                 learning_rate=1e-3, batch_size=128, epochs=30, validation_fraction=0.1, seed=0):
        self.seq_len = seq_len
        self.filters = filters
        self.kernel = kernel
        self.pool = pool
        self.hidden = hidden
        self.positions = positions
        self.cell_kernel = cell_kernel
        self.layers = layers
        self.dense = dense
        self.dropout = dropout
        self.noise = noise
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.validation_fraction = validation_fraction
        self.seed = seed

    def _config(self) -> NetworkConfig:
        return NetworkConfig(**self.get_params())

    def fit(self, X, y):
        X, y = check_training_data(X, y)
        cfg = self._config()
        self.network_ = net = ConvLSTMNetwork(cfg, X.shape[1])
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        order = rng_stream(cfg.seed, 1).permutation(len(X))
        n_val = int(round(cfg.validation_fraction * len(X)))
        val, train = order[:n_val], order[n_val:]
        shuffle, noise = rng_stream(cfg.seed, 2), rng_stream(cfg.seed, 3)
        opt = Optimizer(cfg.optimizer, lr=cfg.learning_rate)
        self.loss_curve_, self.val_loss_curve_ = [], []
        for epoch in range(int(cfg.epochs)):
            perm = train[shuffle.permutation(len(train))]
            total = 0.0
            for start in range(0, len(perm), cfg.batch_size):
                idx = perm[start:start + cfg.batch_size]
                masks = net.draw_masks(len(idx), noise)
                loss, grads = net.loss_and_grads(X[idx], y[idx], masks)
                if not np.isfinite(loss):
                    raise TrainingError("loss became non-finite", epoch)
                opt.step(net.params, grads)
                total += loss * len(idx)
            self.loss_curve_.append(total / max(len(perm), 1))
            if n_val:
                vloss = net.loss(X[val], y[val])
                if not np.isfinite(vloss):
                    raise TrainingError("validation loss became non-finite", epoch)
                self.val_loss_curve_.append(vloss)
        self.epochs_trained_ = int(cfg.epochs)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "network_")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features per row, got shape {X.shape}")
        out = []
        for start in range(0, len(X), 1024):
            out.append(self.network_.forward(X[start:start + 1024])[0])
        return np.concatenate(out) if out else np.zeros((0, 2))

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(np.int64)

    def save(self, path) -> None:
        """Write ``path`` (JSON manifest) and ``path + '.bin'`` (little-endian float64)."""
        check_is_fitted(self, "network_")
        net = self.network_
        names = sorted(net.params)
        manifest = {
            "config": self.get_params(),
            "n_features": net.n_features,
            "seed": self.seed,
            "epoch": self.epochs_trained_,
            "parameters": [{"name": n, "shape": list(net.params[n].shape)} for n in names],
        }
        Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        blob = np.concatenate([net.params[n].ravel() for n in names]).astype("<f8")
        Path(str(path) + ".bin").write_bytes(blob.tobytes())

    @classmethod
    def load(cls, path) -> "ConvLSTMClassifier":
        manifest = json.loads(Path(path).read_text())
        flat = np.frombuffer(Path(str(path) + ".bin").read_bytes(), dtype="<f8")
        params, pos = {}, 0
        for entry in manifest["parameters"]:
            size = int(np.prod(entry["shape"]))
            params[entry["name"]] = flat[pos:pos + size].reshape(entry["shape"]).astype(np.float64)
            pos += size
        model = cls(**manifest["config"])
        model.network_ = ConvLSTMNetwork(model._config(), manifest["n_features"], params)
        model.classes_ = np.array([0, 1])
        model.n_features_in_ = manifest["n_features"]
        model.epochs_trained_ = manifest["epoch"]
        return model
