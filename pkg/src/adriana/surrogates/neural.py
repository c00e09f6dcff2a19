"""MLP, GRU and LSTM regressors in plain numpy.

Every network has three hidden layers of ``neurons`` units and a single linear
output unit. Parameters live in one flat float64 vector; layers hold views into
it, which keeps gradient checking and serialization trivial.

Recurrent models read the window as a sequence of scalars, the MLP reads it as
a vector. Dropout (inverted scaling) follows each hidden layer during training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyTrainingSet, NonFiniteLoss, ValidationError

HIDDEN_LAYERS = 3


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True)
class NetworkConfig:
    kind: str  # "MLP" | "GRU" | "LSTM"
    input_width: int
    neurons: int
    dropout_rate: float = 0.2
    hidden_layers: int = HIDDEN_LAYERS

    def __post_init__(self):
        if self.kind not in ("MLP", "GRU", "LSTM"):
            raise ValidationError(f"not a neural kind: {self.kind}")
        if self.neurons < 1 or self.input_width < 1:
            raise ValidationError("neurons and input width must be positive")
        if not 0 <= self.dropout_rate < 1:
            raise ValidationError("dropout_rate must lie in [0, 1)")


class Network:
    """Parameter layout plus forward/backward passes for one architecture."""

    def __init__(self, config: NetworkConfig):
        self.config = config
        h, w = config.neurons, config.input_width
        gates = {"MLP": 0, "GRU": 3, "LSTM": 4}[config.kind]
        layout = []
        for layer in range(config.hidden_layers):
            if config.kind == "MLP":
                fan_in = w if layer == 0 else h
                layout += [(f"W{layer}", (fan_in, h)), (f"b{layer}", (h,))]
            else:
                fan_in = 1 if layer == 0 else h
                layout += [(f"Wx{layer}", (fan_in, gates * h)),
                           (f"Wh{layer}", (h, gates * h)),
                           (f"b{layer}", (gates * h,))]
        layout += [("Wout", (h, 1)), ("bout", (1,))]
        self.layout = layout
        self.offsets = {}
        pos = 0
        for name, shape in layout:
            size = int(np.prod(shape))
            self.offsets[name] = (pos, pos + size, shape)
            pos += size
        self.size = pos

    # parameters --------------------------------------------------------
    def views(self, theta: np.ndarray) -> dict:
        return {name: theta[a:b].reshape(shape) for name, (a, b, shape) in self.offsets.items()}

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        theta = np.zeros(self.size)
        p = self.views(theta)
        for name, (_, _, shape) in self.offsets.items():
            if len(shape) == 2:
                limit = math.sqrt(6.0 / (shape[0] + shape[1]))
                p[name][...] = rng.uniform(-limit, limit, size=shape)
        if self.config.kind == "LSTM":
            h = self.config.neurons
            for layer in range(self.config.hidden_layers):
                p[f"b{layer}"][h:2 * h] = 1.0  # forget gate starts open
        return theta

    def sample_masks(self, rng: np.random.Generator, batch: int, steps: int):
        rate = self.config.dropout_rate
        if rate == 0:
            return None
        shape = (batch, self.config.neurons) if self.config.kind == "MLP" else \
            (batch, steps, self.config.neurons)
        keep = 1.0 - rate
        return [(rng.random(shape) < keep) / keep for _ in range(self.config.hidden_layers)]

    # passes ------------------------------------------------------------
    def predict(self, theta: np.ndarray, X: np.ndarray) -> np.ndarray:
        out, _ = self._forward(theta, np.asarray(X, dtype=float), None)
        return out

    def loss_and_grad(self, theta: np.ndarray, X: np.ndarray, y: np.ndarray, masks=None):
        """Mean squared error over the batch and its gradient w.r.t. ``theta``."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        out, cache = self._forward(theta, X, masks)
        err = out - y
        loss = float(np.mean(err ** 2))
        grad = np.zeros_like(theta)
        self._backward(theta, grad, cache, 2.0 * err / len(y))
        return loss, grad

    def loss(self, theta, X, y, masks=None) -> float:
        out, _ = self._forward(theta, np.asarray(X, dtype=float), masks)
        return float(np.mean((out - np.asarray(y, dtype=float)) ** 2))

    def _forward(self, theta, X, masks):
        kind = self.config.kind
        if kind == "MLP":
            return self._mlp_forward(theta, X, masks)
        return self._rnn_forward(theta, X, masks, kind)

    def _backward(self, theta, grad, cache, dout):
        if self.config.kind == "MLP":
            self._mlp_backward(theta, grad, cache, dout)
        else:
            self._rnn_backward(theta, grad, cache, dout)

    # MLP ---------------------------------------------------------------
    def _mlp_forward(self, theta, X, masks):
        p = self.views(theta)
        acts = [X]
        pre = []
        a = X
        for layer in range(self.config.hidden_layers):
            z = a @ p[f"W{layer}"] + p[f"b{layer}"]
            pre.append(z)
            a = np.maximum(z, 0.0)
            if masks is not None:
                a = a * masks[layer]
            acts.append(a)
        out = (a @ p["Wout"] + p["bout"])[:, 0]
        return out, (acts, pre, masks)

    def _mlp_backward(self, theta, grad, cache, dout):
        acts, pre, masks = cache
        p = self.views(theta)
        g = self.views(grad)
        d = dout[:, None]
        g["Wout"][...] = acts[-1].T @ d
        g["bout"][...] = d.sum(axis=0)
        da = d @ p["Wout"].T
        for layer in reversed(range(self.config.hidden_layers)):
            if masks is not None:
                da = da * masks[layer]
            dz = da * (pre[layer] > 0)
            g[f"W{layer}"][...] = acts[layer].T @ dz
            g[f"b{layer}"][...] = dz.sum(axis=0)
            da = dz @ p[f"W{layer}"].T

    # recurrent ---------------------------------------------------------
    def _rnn_forward(self, theta, X, masks, kind):
        p = self.views(theta)
        h = self.config.neurons
        B, T = X.shape
        seq = X[:, :, None]
        caches = []
        for layer in range(self.config.hidden_layers):
            Wx, Wh, b = p[f"Wx{layer}"], p[f"Wh{layer}"], p[f"b{layer}"]
            xw = seq @ Wx + b  # (B, T, gates*h), input contribution for all steps
            hs = np.zeros((B, T, h))
            hprev = np.zeros((B, h))
            steps = []
            if kind == "LSTM":
                cprev = np.zeros((B, h))
                for t in range(T):
                    a = xw[:, t] + hprev @ Wh
                    i = _sigmoid(a[:, :h])
                    f = _sigmoid(a[:, h:2 * h])
                    g = np.tanh(a[:, 2 * h:3 * h])
                    o = _sigmoid(a[:, 3 * h:])
                    c = f * cprev + i * g
                    tc = np.tanh(c)
                    hnew = o * tc
                    steps.append((hprev, cprev, i, f, g, o, tc))
                    hs[:, t] = hnew
                    hprev, cprev = hnew, c
            else:
                Whzr, Whn = Wh[:, :2 * h], Wh[:, 2 * h:]
                for t in range(T):
                    azr = xw[:, t, :2 * h] + hprev @ Whzr
                    z = _sigmoid(azr[:, :h])
                    r = _sigmoid(azr[:, h:])
                    rh = r * hprev
                    n = np.tanh(xw[:, t, 2 * h:] + rh @ Whn)
                    hnew = (1.0 - z) * n + z * hprev
                    steps.append((hprev, z, r, rh, n))
                    hs[:, t] = hnew
                    hprev = hnew
            out_seq = hs * masks[layer] if masks is not None else hs
            caches.append((seq, steps))
            seq = out_seq
        last = seq[:, -1]
        out = (last @ p["Wout"] + p["bout"])[:, 0]
        return out, (caches, last, masks)

    def _rnn_backward(self, theta, grad, cache, dout):
        caches, last, masks = cache
        kind = self.config.kind
        p = self.views(theta)
        g = self.views(grad)
        h = self.config.neurons
        d = dout[:, None]
        g["Wout"][...] = last.T @ d
        g["bout"][...] = d.sum(axis=0)
        B = last.shape[0]
        T = caches[0][0].shape[1]
        dseq = np.zeros((B, T, h))
        dseq[:, -1] = d @ p["Wout"].T
        for layer in reversed(range(self.config.hidden_layers)):
            if masks is not None:
                dseq = dseq * masks[layer]
            seq_in, steps = caches[layer]
            Wx, Wh = p[f"Wx{layer}"], p[f"Wh{layer}"]
            dWx, dWh, db = g[f"Wx{layer}"], g[f"Wh{layer}"], g[f"b{layer}"]
            gates = Wx.shape[1]
            da_all = np.zeros((B, T, gates))
            dh_next = np.zeros((B, h))
            if kind == "LSTM":
                dc_next = np.zeros((B, h))
                for t in reversed(range(T)):
                    hprev, cprev, i, f, gg, o, tc = steps[t]
                    dh = dseq[:, t] + dh_next
                    do = dh * tc
                    dc = dh * o * (1.0 - tc * tc) + dc_next
                    da = np.concatenate([
                        dc * gg * i * (1.0 - i),
                        dc * cprev * f * (1.0 - f),
                        dc * i * (1.0 - gg * gg),
                        do * o * (1.0 - o),
                    ], axis=1)
                    dWh += hprev.T @ da
                    dh_next = da @ Wh.T
                    dc_next = dc * f
                    da_all[:, t] = da
            else:
                Whzr, Whn = Wh[:, :2 * h], Wh[:, 2 * h:]
                for t in reversed(range(T)):
                    hprev, z, r, rh, n = steps[t]
                    dh = dseq[:, t] + dh_next
                    dn = dh * (1.0 - z)
                    dz = dh * (hprev - n)
                    dan = dn * (1.0 - n * n)
                    drh = dan @ Whn.T
                    dr = drh * hprev
                    dazr = np.concatenate([dz * z * (1.0 - z), dr * r * (1.0 - r)], axis=1)
                    dWh[:, :2 * h] += hprev.T @ dazr
                    dWh[:, 2 * h:] += rh.T @ dan
                    dh_next = dh * z + drh * r + dazr @ Whzr.T
                    da_all[:, t] = np.concatenate([dazr, dan], axis=1)
            flat_in = seq_in.reshape(B * T, -1)
            flat_da = da_all.reshape(B * T, gates)
            dWx += flat_in.T @ flat_da
            db += flat_da.sum(axis=0)
            dseq = (flat_da @ Wx.T).reshape(B, T, -1)


def count_params(config: NetworkConfig) -> int:
    """Closed-form parameter count for the three-hidden-layer stack."""
    h, w = config.neurons, config.input_width
    total = 0
    for layer in range(config.hidden_layers):
        if config.kind == "MLP":
            i = w if layer == 0 else h
            total += i * h + h
        else:
            i = 1 if layer == 0 else h
            gates = 4 if config.kind == "LSTM" else 3
            total += gates * (h * (i + h) + h)
    return total + h + 1


class Adam:
    def __init__(self, size: int, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> None:
        """In-place update of ``theta``."""
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad * grad
        mhat = self.m / (1 - self.beta1 ** self.t)
        vhat = self.v / (1 - self.beta2 ** self.t)
        theta -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


@dataclass
class TrainingReport:
    epochs_run: int
    final_loss: float
    best_valid_rmse: float
    best_epoch: int
    early_stopped: bool
    history: list

    def to_mapping(self) -> dict:
        return {
            "epochs_run": self.epochs_run,
            "final_loss": self.final_loss,
            # null when training ran without validation data
            "best_valid_rmse": self.best_valid_rmse if math.isfinite(self.best_valid_rmse) else None,
            "best_epoch": self.best_epoch,
            "early_stopped": self.early_stopped,
        }


def train_network(net: Network, X, y, X_valid=None, y_valid=None, *, learning_rate=1e-3,
                  batch_size=32, max_epochs=200, patience=10, seed=0):
    """Mini-batch Adam with optional early stopping on validation RMSE.

    Returns the parameters of the best validation epoch (or the last epoch when
    no validation data is given) and a :class:`TrainingReport`.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise EmptyTrainingSet("no training samples")
    rng = np.random.default_rng(seed)
    theta = net.init_params(rng)
    opt = Adam(net.size, lr=learning_rate)
    has_valid = X_valid is not None and len(X_valid) > 0
    best_theta, best_rmse, best_epoch = theta.copy(), math.inf, 0
    history = []
    early = False
    epoch = 0
    steps = X.shape[1]
    for epoch in range(1, max_epochs + 1):
        order = rng.permutation(len(y))
        total = 0.0
        for start in range(0, len(y), batch_size):
            idx = order[start:start + batch_size]
            masks = net.sample_masks(rng, len(idx), steps)
            loss, grad = net.loss_and_grad(theta, X[idx], y[idx], masks)
            if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
                raise NonFiniteLoss(f"loss diverged at epoch {epoch}")
            opt.step(theta, grad)
            total += loss * len(idx)
        train_loss = total / len(y)
        if has_valid:
            v = math.sqrt(net.loss(theta, X_valid, y_valid))
            if not math.isfinite(v):
                raise NonFiniteLoss(f"validation loss diverged at epoch {epoch}")
            history.append((train_loss, v))
            if v < best_rmse:
                best_theta, best_rmse, best_epoch = theta.copy(), v, epoch
            elif patience is not None and epoch - best_epoch >= patience:
                early = True
                break
        else:
            history.append((train_loss, math.nan))
    if not has_valid:
        best_theta, best_epoch = theta.copy(), epoch
    final = net.loss(best_theta, X, y)
    return best_theta, TrainingReport(epoch, final, best_rmse, best_epoch, early, history)
