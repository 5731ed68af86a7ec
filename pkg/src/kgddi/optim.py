"""Optimizers, seeded random streams and a finite-difference gradient checker.

Every trainable model in the package keeps its parameters in a ``dict`` of
float64 arrays and hands them, together with a same-keyed ``dict`` of
gradients, to :meth:`Optimizer.step`.  Swapping ``"adam"`` for ``"rmsprop"``
is therefore a constructor argument everywhere.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

logger = logging.getLogger(__name__)

OPTIMIZERS = ("sgd", "adagrad", "rmsprop", "adam", "adamax")


class GradCheckError(ValueError):
    """Raised when the loss under test returns a non-finite value."""


class Optimizer:
    """First-order optimizer updating a parameter dict in place.

    Parameters
    ----------
    kind : str
        One of ``sgd``, ``adagrad``, ``rmsprop``, ``adam``, ``adamax``.
    lr : float
        Step size.  May be reassigned between steps (linear decay etc.).
    beta1, beta2 : float
        Moment decay rates for Adam and AdaMax.
    decay : float
        Squared-gradient decay for RMSprop.
    eps : float
        Denominator guard.
    """

    def __init__(self, kind="adam", lr=1e-3, beta1=0.9, beta2=0.999, decay=0.9, eps=1e-8):
        if kind not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {kind!r}; expected one of {OPTIMIZERS}")
        self.kind = kind
        self.lr = float(lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.decay = decay
        self.eps = eps
        self.t = 0
        self.state: dict[str, tuple[np.ndarray, ...]] = {}

    def _buffers(self, name, shape):
        if name not in self.state:
            n = 2 if self.kind in ("adam", "adamax") else 1
            self.state[name] = tuple(np.zeros(shape) for _ in range(n))
        return self.state[name]

    def step(self, params: dict, grads: Mapping[str, np.ndarray]) -> dict:
        for name, g in grads.items():
            p = params[name]
            if p.shape != np.shape(g):
                raise ValueError(
                    f"gradient shape {np.shape(g)} does not match parameter "
                    f"{name!r} of shape {p.shape}"
                )
        self.t += 1
        t = self.t
        for name, g in grads.items():
            p = params[name]
            if self.kind == "sgd":
                p -= self.lr * g
            elif self.kind == "adagrad":
                (acc,) = self._buffers(name, p.shape)
                acc += g * g
                p -= self.lr * g / (np.sqrt(acc) + self.eps)
            elif self.kind == "rmsprop":
                (acc,) = self._buffers(name, p.shape)
                acc *= self.decay
                acc += (1.0 - self.decay) * g * g
                p -= self.lr * g / (np.sqrt(acc) + self.eps)
            elif self.kind == "adam":
                m, v = self._buffers(name, p.shape)
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * g * g
                m_hat = m / (1.0 - self.beta1**t)
                v_hat = v / (1.0 - self.beta2**t)
                p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            else:  # adamax
                m, u = self._buffers(name, p.shape)
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                np.maximum(self.beta2 * u, np.abs(g), out=u)
                step = self.lr / (1.0 - self.beta1**t)
                p -= step * m / (u + self.eps)
        return params


def make_optimizer(kind="adam", lr=1e-3, **kwargs) -> Optimizer:
    return Optimizer(kind, lr=lr, **kwargs)


def rng_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Independent generator keyed by ``(seed, stream_id)``.

    Equal keys give equal draw sequences, so per-entity or per-draw streams
    do not depend on evaluation order.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1),
                                spawn_key=(int(stream_id) & (2**64 - 1),))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(master: int, name: str) -> int:
    """Stable 63-bit seed for a named stage, independent of ``PYTHONHASHSEED``."""
    digest = hashlib.sha256(f"{int(master)}:{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    worst_index: tuple
    passed: bool
    n_checked: int


def grad_check(
    loss: Callable[[], float],
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
    eps: float = 1e-5,
    tol: float = 1e-4,
    max_per_param: int | None = None,
    seed: int = 0,
    floor: float = 1e-12,
) -> GradCheckReport:
    """Compare analytic gradients against central differences.

    ``loss`` is evaluated with no arguments after perturbing ``params`` in
    place, so it must read the very arrays passed here.  The relative error
    per coordinate is ``|a - n| / max(|a|, |n|, floor)``.  Raising ``floor``
    keeps coordinates whose true gradient is (nearly) zero from being judged
    on finite-difference round-off alone.

    ``max_per_param`` limits the number of coordinates probed per tensor
    (sampled without replacement); ``None`` checks all of them.
    """
    rng = np.random.default_rng(seed)
    worst = (0.0, "", ())
    count = 0
    for name, p in params.items():
        if name not in grads:
            continue
        g = np.asarray(grads[name])
        flat_idx = np.arange(p.size)
        if max_per_param is not None and p.size > max_per_param:
            flat_idx = rng.choice(p.size, size=max_per_param, replace=False)
        for fi in flat_idx:
            idx = np.unravel_index(fi, p.shape)
            orig = p[idx]
            p[idx] = orig + eps
            fp = loss()
            p[idx] = orig - eps
            fm = loss()
            p[idx] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise GradCheckError(f"non-finite loss while perturbing {name}{idx}")
            num = (fp - fm) / (2.0 * eps)
            ana = float(g[idx])
            rel = abs(ana - num) / max(abs(ana), abs(num), floor)
            count += 1
            if rel > worst[0]:
                worst = (rel, name, tuple(int(i) for i in idx))
    return GradCheckReport(worst[0], worst[1], worst[2], worst[0] < tol, count)
