"""Toy conditional score network with hand-written backpropagation, trained
by denoising score matching against the forward SDE's conditional score.

The network is applied frame by frame. Its input is the concatenation of
one X_t frame, the matching Xbar frame, a sinusoidal embedding of t and
the conditioning embedding e_ir.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DimensionMismatchError, ValidationError
from .schedule import DEFAULT_T_MIN, NoiseSchedule, forward_marginal

Item = tuple[np.ndarray, np.ndarray, np.ndarray]  # (X0, Xbar, e_ir)


def time_embedding(t: float | np.ndarray, dim: int) -> np.ndarray:
    """[sin(w_k t), cos(w_k t)] with w_k geometric from 1 to 100."""
    half = dim // 2
    freqs = np.exp(np.linspace(0.0, math.log(100.0), half)) if half > 1 else np.ones(half)
    ang = np.multiply.outer(np.asarray(t, dtype=np.float64), freqs)
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=-1)


class ScoreNet:
    """Per-frame MLP: ``tanh`` hidden layers, linear output of ``channels``."""

    def __init__(self, channels: int = 80, cond_dim: int = 256, time_dim: int = 16,
                 hidden: Sequence[int] = (256, 256), seed: int = 0,
                 params: list[tuple[np.ndarray, np.ndarray]] | None = None):
        if time_dim < 2 or time_dim % 2:
            raise ValidationError(f"time_dim must be an even number >= 2, got {time_dim}")
        self.channels = channels
        self.cond_dim = cond_dim
        self.time_dim = time_dim
        self.hidden = tuple(int(h) for h in hidden)
        widths = [self.in_dim, *self.hidden, channels]
        if params is None:
            rng = np.random.default_rng(seed)
            params = [(rng.standard_normal((a, b)) / math.sqrt(a), np.zeros(b))
                      for a, b in zip(widths[:-1], widths[1:])]
        shapes = [(a, b) for a, b in zip(widths[:-1], widths[1:])]
        if [w.shape for w, _ in params] != shapes or any(b.shape != (w.shape[1],) for w, b in params):
            raise DimensionMismatchError(f"parameter shapes do not match layer widths {widths}")
        self.params = [(np.asarray(w, dtype=np.float64), np.asarray(b, dtype=np.float64))
                       for w, b in params]

    @property
    def in_dim(self) -> int:
        return 2 * self.channels + self.time_dim + self.cond_dim

    @property
    def layer_shapes(self) -> list[tuple[int, int]]:
        return [w.shape for w, _ in self.params]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in self.params)

    def copy(self) -> ScoreNet:
        return ScoreNet(self.channels, self.cond_dim, self.time_dim, self.hidden,
                        params=[(w.copy(), b.copy()) for w, b in self.params])

    def features(self, x_t, xbar, t: float, cond) -> np.ndarray:
        x_t = np.atleast_2d(np.asarray(x_t, dtype=np.float64))
        xbar = np.atleast_2d(np.asarray(xbar, dtype=np.float64))
        if x_t.shape != xbar.shape or x_t.shape[1] != self.channels:
            raise DimensionMismatchError(
                f"X_t {x_t.shape} / Xbar {xbar.shape} must be (T, {self.channels})")
        cond = np.zeros(self.cond_dim) if cond is None else np.asarray(cond, dtype=np.float64).ravel()
        if cond.shape[0] != self.cond_dim:
            raise DimensionMismatchError(f"condition has dim {cond.shape[0]}, expected {self.cond_dim}")
        T = x_t.shape[0]
        temb = np.broadcast_to(time_embedding(t, self.time_dim), (T, self.time_dim))
        return np.concatenate([x_t, xbar, temb, np.broadcast_to(cond, (T, self.cond_dim))], axis=1)

    def _forward(self, inp: np.ndarray):
        acts = [inp]
        h = inp
        for w, b in self.params[:-1]:
            h = np.tanh(h @ w + b)
            acts.append(h)
        w, b = self.params[-1]
        return h @ w + b, acts

    def _backward(self, acts, grad_out: np.ndarray):
        grads = [None] * len(self.params)
        g = grad_out
        for layer in range(len(self.params) - 1, -1, -1):
            w, _ = self.params[layer]
            a = acts[layer]
            grads[layer] = (a.T @ g, g.sum(axis=0))
            if layer:
                g = (g @ w.T) * (1.0 - a * a)  # a = tanh(pre-activation)
        return grads

    def forward(self, x_t, xbar, t: float, cond=None) -> np.ndarray:
        shape = np.shape(x_t)
        out, _ = self._forward(self.features(x_t, xbar, t, cond))
        return out.reshape(shape)

    __call__ = forward


@dataclass(frozen=True)
class DsmDraws:
    t: np.ndarray          # one diffusion time per batch item
    noise: list[np.ndarray]


def dsm_draws(batch: Sequence[Item], seed, t_min: float = DEFAULT_T_MIN) -> DsmDraws:
    if not batch:
        raise ValidationError("DSM batch is empty")
    rng = np.random.default_rng(seed)
    ts = rng.uniform(t_min, 1.0, size=len(batch))
    noise = [rng.standard_normal(np.shape(x0)) for x0, _, _ in batch]
    return DsmDraws(ts, noise)


def _dsm_terms(batch: Sequence[Item], s: NoiseSchedule, draws: DsmDraws):
    """Per item: noised state, DSM regression target and weight var(t)."""
    for (x0, xbar, cond), t, eps in zip(batch, draws.t, draws.noise):
        mean, var = forward_marginal(x0, xbar, float(t), s)
        x_t = mean + math.sqrt(var) * eps
        yield x_t, np.asarray(xbar, dtype=np.float64), float(t), cond, -eps / math.sqrt(var), var


def dsm_loss(net, batch: Sequence[Item], s: NoiseSchedule = NoiseSchedule(), seed=0,
             t_min: float = DEFAULT_T_MIN) -> float:
    """Mean over items of var(t) * ||score(X_t) + eps / sqrt(var(t))||^2.

    *net* may be any score callable; with the data's oracle score the loss is 0.
    """
    draws = dsm_draws(batch, seed, t_min)
    total = 0.0
    for x_t, xbar, t, cond, target, var in _dsm_terms(batch, s, draws):
        r = np.asarray(net(x_t, xbar, t, cond)) - target
        total += var * float((r * r).sum())
    return total / len(batch)


def regression_loss_and_grad(net: ScoreNet, inputs: Sequence[np.ndarray], targets: Sequence[np.ndarray],
                             weights: Sequence[float]):
    """(1/B) sum_b w_b ||net(inputs_b) - targets_b||^2 and its parameter gradients."""
    B = len(inputs)
    inp = np.concatenate(inputs, axis=0)
    tgt = np.concatenate([np.atleast_2d(y) for y in targets], axis=0)
    row_w = np.concatenate([np.full(x.shape[0], w) for x, w in zip(inputs, weights)])
    out, acts = net._forward(inp)
    r = out - tgt
    loss = float((row_w * (r * r).sum(axis=1)).sum() / B)
    grads = net._backward(acts, (2.0 / B) * row_w[:, None] * r)
    return loss, grads


def dsm_loss_and_grad(net: ScoreNet, batch: Sequence[Item], s: NoiseSchedule = NoiseSchedule(),
                      seed=0, t_min: float = DEFAULT_T_MIN):
    draws = dsm_draws(batch, seed, t_min)
    inputs, targets, weights = [], [], []
    for x_t, xbar, t, cond, target, var in _dsm_terms(batch, s, draws):
        inputs.append(net.features(x_t, xbar, t, cond))
        targets.append(np.atleast_2d(target))
        weights.append(var)
    return regression_loss_and_grad(net, inputs, targets, weights)


def dsm_grad(net: ScoreNet, batch: Sequence[Item], s: NoiseSchedule = NoiseSchedule(), seed=0,
             t_min: float = DEFAULT_T_MIN) -> list[tuple[np.ndarray, np.ndarray]]:
    """Exact gradient of :func:`dsm_loss` for the same seed, as [(dW, db), ...]."""
    return dsm_loss_and_grad(net, batch, s, seed, t_min)[1]


def train_scorenet(net: ScoreNet, items: Sequence[Item], s: NoiseSchedule = NoiseSchedule(),
                   steps: int = 500, batch_size: int = 32, lr: float = 1e-3, seed: int = 0,
                   t_min: float = DEFAULT_T_MIN) -> tuple[ScoreNet, list[float]]:
    """Adam on the DSM loss; returns a trained copy and the per-step losses.

    Step ``n`` draws its minibatch and noise from ``seed + n``.
    """
    if not items:
        raise ValidationError("no training items")
    net = net.copy()
    b1, b2, eps = 0.9, 0.999, 1e-8
    m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in net.params]
    v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in net.params]
    losses = []
    for step in range(steps):
        rng = np.random.default_rng(seed + step)
        batch = [items[j] for j in rng.integers(len(items), size=batch_size)]
        loss, grads = dsm_loss_and_grad(net, batch, s, rng, t_min)
        losses.append(loss)
        c1 = 1.0 - b1 ** (step + 1)
        c2 = 1.0 - b2 ** (step + 1)
        for layer, (gw, gb) in enumerate(grads):
            new = []
            for j, (p, g) in enumerate(zip(net.params[layer], (gw, gb))):
                m[layer][j][...] = b1 * m[layer][j] + (1 - b1) * g
                v[layer][j][...] = b2 * v[layer][j] + (1 - b2) * g * g
                new.append(p - lr * (m[layer][j] / c1) / (np.sqrt(v[layer][j] / c2) + eps))
            net.params[layer] = tuple(new)
    return net, losses
