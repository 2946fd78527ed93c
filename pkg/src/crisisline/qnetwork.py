"""Trainable value head: three linear layers mapping a 770-dim observation
to the two action values (index 0 = keep, index 1 = discard).

The math lives in the kernel backends (compiled extension with a numpy
fallback); this module owns parameter lifecycle: init, Adam state,
checkpoint serialization (bit-exact round trip), and the loss contract
(Huber or squared error on the taken action's Q-value).
"""
from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels

OBS_DIM = 770
N_ACTIONS = 2
DEFAULT_HIDDEN = (256, 256)

PARAM_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3")


def _init_params(sizes: Sequence[int], seed: int, dtype) -> tuple[np.ndarray, ...]:
    # Uniform fan-in scaling per layer, drawn in float64 then cast.
    rng = np.random.default_rng(seed)
    params = []
    for din, dout in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(din)
        params.append(rng.uniform(-bound, bound, size=(din, dout)).astype(dtype))
        params.append(rng.uniform(-bound, bound, size=dout).astype(dtype))
    return tuple(params)


class QNetwork:
    """3-layer fully connected value function with rectifier hidden units."""

    def __init__(self, params, hidden, dtype, loss="huber", huber_delta=1.0, init_seed=None):
        self.params = tuple(np.ascontiguousarray(p, dtype=dtype) for p in params)
        self.hidden = tuple(int(h) for h in hidden)
        self.dtype = np.dtype(dtype)
        self.loss = loss
        self.huber_delta = float(huber_delta)
        self.init_seed = init_seed
        self.obs_dim = self.params[0].shape[0]
        self.n_actions = self.params[-1].shape[0]

    @classmethod
    def create(cls, hidden=DEFAULT_HIDDEN, seed=0, dtype=np.float32, obs_dim=OBS_DIM,
               n_actions=N_ACTIONS, loss="huber", huber_delta=1.0) -> "QNetwork":
        sizes = (obs_dim, *hidden, n_actions)
        if len(sizes) != 4:
            raise ValueError("exactly two hidden layers expected")
        params = _init_params(sizes, seed, np.dtype(dtype))
        return cls(params, hidden, dtype, loss=loss, huber_delta=huber_delta, init_seed=seed)

    # ------------------------------------------------------------------ math

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Q-values for one observation (obs_dim,) or a batch (B, obs_dim)."""
        x = np.asarray(x)
        if x.shape[-1] != self.obs_dim:
            raise ValueError(f"expected observation dim {self.obs_dim}, got {x.shape[-1]}")
        if not np.isfinite(x).all():
            raise ValueError("non-finite observation")
        q, _ = _kernels.mlp_forward(self.params, x.astype(self.dtype, copy=False))
        return q

    def act(self, x: np.ndarray) -> tuple[int, np.ndarray]:
        """Greedy action with ties broken toward keep (action 0)."""
        q = self.forward(x)
        return (0 if q[0] >= q[1] else 1), q

    def loss_value(self, x, actions, targets) -> float:
        """Mean loss on the taken actions, via the forward path only.

        Kept separate from loss_and_grads so finite-difference checks never
        touch the backward implementation they are validating.
        """
        q = self.forward(np.atleast_2d(x))
        r = q[np.arange(q.shape[0]), np.asarray(actions)] - np.asarray(
            targets, dtype=np.float64
        )
        if self.loss == "huber":
            d = self.huber_delta
            absr = np.abs(r)
            per = np.where(absr <= d, 0.5 * r * r, d * (absr - 0.5 * d))
        elif self.loss == "squared":
            per = 0.5 * r * r
        else:
            raise ValueError(f"unknown loss {self.loss!r}")
        return float(per.mean())

    def loss_and_grads(self, x, actions, targets):
        if np.shape(x)[0] == 0 or np.ndim(x) < 2 and np.size(x) == 0:
            raise ValueError("empty batch")
        return _kernels.mlp_loss_grads(
            self.params, np.atleast_2d(np.asarray(x)), actions, targets,
            loss=self.loss, delta=self.huber_delta,
        )

    # --------------------------------------------------------------- copies

    def copy(self) -> "QNetwork":
        return QNetwork([p.copy() for p in self.params], self.hidden, self.dtype,
                        loss=self.loss, huber_delta=self.huber_delta, init_seed=self.init_seed)

    def load_params_from(self, other: "QNetwork") -> None:
        for dst, src in zip(self.params, other.params):
            np.copyto(dst, src)

    def astype(self, dtype) -> "QNetwork":
        return QNetwork([p.astype(dtype) for p in self.params], self.hidden, dtype,
                        loss=self.loss, huber_delta=self.huber_delta, init_seed=self.init_seed)

    def config_dict(self) -> dict:
        return {
            "obs_dim": self.obs_dim,
            "hidden": list(self.hidden),
            "n_actions": self.n_actions,
            "dtype": self.dtype.name,
            "loss": self.loss,
            "huber_delta": self.huber_delta,
            "init_seed": self.init_seed,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.config_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass
class AdamState:
    """Decoupled-weight-decay Adam (moments shaped like the parameters)."""

    lr: float = 1e-3
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: tuple = field(default=())
    v: tuple = field(default=())

    @classmethod
    def for_net(cls, net: QNetwork, lr=1e-3, weight_decay=1e-4,
                beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        return cls(lr=lr, weight_decay=weight_decay, beta1=beta1, beta2=beta2, eps=eps,
                   t=0,
                   m=tuple(np.zeros_like(p) for p in net.params),
                   v=tuple(np.zeros_like(p) for p in net.params))

    def step(self, net: QNetwork, grads) -> None:
        if len(grads) != len(net.params):
            raise ValueError("gradient/parameter structure mismatch")
        for g, p in zip(grads, net.params):
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        self.t += 1
        for p, g, m, v in zip(net.params, grads, self.m, self.v):
            _kernels.adam_update(p, g, m, v, self.t, self.lr, self.weight_decay,
                                 self.beta1, self.beta2, self.eps)


# ------------------------------------------------------------- checkpointing

CHECKPOINT_FORMAT = "crisisline-qnet-v1"


def _encode_array(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "dtype": a.dtype.name,
            "data": base64.b64encode(np.ascontiguousarray(a).tobytes()).decode("ascii")}


def _decode_array(d: dict) -> np.ndarray:
    a = np.frombuffer(base64.b64decode(d["data"]), dtype=np.dtype(d["dtype"]))
    return a.reshape(d["shape"]).copy()


def save_checkpoint(path, net: QNetwork, adam: AdamState | None = None,
                    training_step: int = 0, meta: dict | None = None) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "config": net.config_dict(),
        "config_hash": net.config_hash(),
        "training_step": int(training_step),
        "params": {n: _encode_array(p) for n, p in zip(PARAM_NAMES, net.params)},
        "meta": meta or {},
    }
    if adam is not None:
        doc["adam"] = {
            "lr": adam.lr, "weight_decay": adam.weight_decay,
            "beta1": adam.beta1, "beta2": adam.beta2, "eps": adam.eps, "t": adam.t,
            "m": {n: _encode_array(a) for n, a in zip(PARAM_NAMES, adam.m)},
            "v": {n: _encode_array(a) for n, a in zip(PARAM_NAMES, adam.v)},
        }
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(doc, sort_keys=True, indent=1))
    tmp.replace(path)


def load_checkpoint(path) -> tuple[QNetwork, AdamState | None, int, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {doc.get('format')!r}")
    cfg = doc["config"]
    params = [_decode_array(doc["params"][n]) for n in PARAM_NAMES]
    net = QNetwork(params, cfg["hidden"], np.dtype(cfg["dtype"]), loss=cfg["loss"],
                   huber_delta=cfg["huber_delta"], init_seed=cfg["init_seed"])
    if net.config_hash() != doc["config_hash"]:
        raise ValueError("checkpoint config hash mismatch")
    adam = None
    if "adam" in doc:
        ad = doc["adam"]
        adam = AdamState(lr=ad["lr"], weight_decay=ad["weight_decay"], beta1=ad["beta1"],
                         beta2=ad["beta2"], eps=ad["eps"], t=ad["t"],
                         m=tuple(_decode_array(ad["m"][n]) for n in PARAM_NAMES),
                         v=tuple(_decode_array(ad["v"][n]) for n in PARAM_NAMES))
    return net, adam, doc["training_step"], doc.get("meta", {})
