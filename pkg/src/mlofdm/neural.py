"""Fully connected network trained with Adam on an MSE loss.

The network maps the received pilot and data OFDM symbols (real and
imaginary parts, concatenated) straight to the transmitted bits. Everything
here is plain numpy: forward pass, reverse-mode gradients, Adam and the
training loop.

Weights are stored as ``(fan_in, fan_out)`` matrices so a batch ``X`` of
shape ``(B, fan_in)`` propagates as ``X @ W + b``.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .numerics import RngStream

log = logging.getLogger(__name__)

DEFAULT_SIZES = (256, 500, 250, 120, 64)
CHECKPOINT_FORMAT = "mlofdm-mlp/1"


class TrainingError(RuntimeError):
    """Training hit NaN gradients or diverged."""


def _relu(z):
    return np.maximum(z, 0.0)


def _linear(z):
    return z


ACTIVATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "relu": _relu,
    "sigmoid": expit,
    "linear": _linear,
}


def _act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Derivative of the activation at pre-activation ``z`` (output ``a``)."""
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


@dataclass
class MlpModel:
    """Layer sizes, per-layer activation tags and parameters (theta)."""

    sizes: tuple[int, ...]
    activations: tuple[str, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        self.sizes = tuple(int(s) for s in self.sizes)
        self.activations = tuple(self.activations)
        n = len(self.sizes) - 1
        if n < 1 or any(s < 1 for s in self.sizes):
            raise ValueError("need at least two positive layer sizes")
        if len(self.activations) != n or len(self.weights) != n or len(self.biases) != n:
            raise ValueError("one activation, weight and bias per layer")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (self.sizes[i], self.sizes[i + 1]) or b.shape != (self.sizes[i + 1],):
                raise ValueError(f"layer {i} parameter shapes do not chain")
        for a in self.activations:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")

    @classmethod
    def init(cls, sizes: Sequence[int] = DEFAULT_SIZES, rng: RngStream | None = None,
             activations: Sequence[str] | None = None) -> "MlpModel":
        """Gaussian weights with std ``1/sqrt(fan_in)``, zero biases.

        Hidden layers default to ReLU and the output layer to sigmoid.
        """
        rng = rng or RngStream(0)
        sizes = tuple(sizes)
        if activations is None:
            activations = ("relu",) * (len(sizes) - 2) + ("sigmoid",)
        Ws = [rng.normal((i, o)) / np.sqrt(i) for i, o in zip(sizes[:-1], sizes[1:])]
        bs = [np.zeros(o) for o in sizes[1:]]
        return cls(sizes, tuple(activations), Ws, bs)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def params(self) -> list[np.ndarray]:
        """Parameters in document order: W1, b1, W2, b2, ..."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params())

    def copy(self) -> "MlpModel":
        return MlpModel(self.sizes, self.activations,
                        [W.copy() for W in self.weights], [b.copy() for b in self.biases])


def forward(m: MlpModel, features, return_cache: bool = False):
    """Affine-then-activation through every layer.

    ``features`` is ``(B, sizes[0])`` or a single vector.
    """
    X = np.asarray(features, dtype=m.weights[0].dtype)
    single = X.ndim == 1
    if single:
        X = X[None]
    if X.shape[-1] != m.sizes[0]:
        raise ValueError(f"expected {m.sizes[0]} features, got {X.shape[-1]}")
    a = X
    cache = [(None, X)]
    for W, b, act in zip(m.weights, m.biases, m.activations):
        z = a @ W + b
        a = ACTIVATIONS[act](z)
        cache.append((z, a))
    out = a[0] if single else a
    return (out, cache) if return_cache else out


def loss(predictions, labels) -> float:
    """Mean squared error over batch and output dimension."""
    p = np.asarray(predictions, dtype=float)
    y = np.asarray(labels, dtype=float)
    if p.shape != y.shape:
        raise ValueError("predictions and labels differ in shape")
    if p.size == 0:
        raise ValueError("empty batch")
    return float(np.mean((p - y) ** 2))


def backward(m: MlpModel, features, labels) -> tuple[float, list[np.ndarray]]:
    """MSE loss and its gradient w.r.t. every parameter (document order)."""
    Y = np.asarray(labels, dtype=float)
    out, cache = forward(m, features, return_cache=True)
    if Y.ndim == 1:
        Y = Y[None]
    if out.ndim == 1:
        out = out[None]
    if out.shape != Y.shape:
        raise ValueError("label shape does not match the output layer")
    if out.shape[0] == 0:
        raise ValueError("empty batch")
    value = float(np.mean((out - Y) ** 2))
    delta = 2.0 * (out - Y) / Y.size
    grads: list[np.ndarray] = []
    for i in range(m.n_layers - 1, -1, -1):
        z, a = cache[i + 1]
        a_prev = cache[i][1]
        dz = delta * _act_grad(m.activations[i], z, a)
        gW = a_prev.T @ dz
        gb = dz.sum(axis=0)
        grads = [gW, gb] + grads
        if i:
            delta = dz @ m.weights[i].T
    return value, grads


@dataclass
class TrainConfig:
    """Offline training settings.

    ``snr_train_db`` is the SNR at which the training set is simulated;
    ``seed`` drives both weight init and the per-epoch shuffles.
    """

    epochs: int = 1000
    batch_size: int = 250
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    snr_train_db: float = 20.0
    dataset_size: int = 100_000
    seed: int = 1
    divergence_loss: float = 1e3

    def __post_init__(self):
        for name in ("epochs", "batch_size", "learning_rate", "eps", "dataset_size"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.batch_size > self.dataset_size:
            raise ValueError("batch size exceeds the dataset size")


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "AdamState":
        ps = model.params()
        return cls([np.zeros_like(p) for p in ps], [np.zeros_like(p) for p in ps])


def adam_step(m: MlpModel, grads: list[np.ndarray], state: AdamState,
              cfg: TrainConfig) -> MlpModel:
    """One bias-corrected Adam update, applied to ``m`` in place."""
    state.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, mo, ve in zip(m.params(), grads, state.m, state.v):
        mo *= b1
        mo += (1.0 - b1) * g
        ve *= b2
        ve += (1.0 - b2) * g * g
        p -= cfg.learning_rate * (mo / c1) / (np.sqrt(ve / c2) + cfg.eps)
    return m


@dataclass
class TrainingSet:
    """Feature/label matrices, one training example per row.

    Features are the real and imaginary parts of the received pilot and data
    symbols; labels are the transmitted bits of the supervised subcarrier
    group.
    """

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.ndim != 2:
            raise ValueError("features and labels must be 2-D")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("feature and label counts differ")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise ValueError("labels must be bits")

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass
class TrainResult:
    model: MlpModel
    loss_curve: list[float] = field(default_factory=list)


def train(cfg: TrainConfig, data: TrainingSet | Callable[[int, RngStream], TrainingSet],
          sizes: Sequence[int] = DEFAULT_SIZES, model: MlpModel | None = None,
          progress: Callable[[int, float], None] | None = None) -> TrainResult:
    """Mini-batch Adam on the MSE loss.

    ``data`` is a :class:`TrainingSet` or a callable ``(n, rng) -> TrainingSet``
    that simulates ``cfg.dataset_size`` examples. The returned loss curve
    holds the mean training loss of each epoch.
    """
    if callable(data):
        data = data(cfg.dataset_size, RngStream(cfg.seed, 0xDA7A))
    if model is None:
        model = MlpModel.init(sizes, RngStream(cfg.seed, 0x1417))
    if data.features.shape[1] != model.sizes[0] or data.labels.shape[1] != model.sizes[-1]:
        raise ValueError("training set does not match the network's input/output sizes")
    if cfg.batch_size > len(data):
        raise ValueError("batch size exceeds the dataset size")
    state = AdamState.zeros_like(model)
    shuffle = RngStream(cfg.seed, 0x5EED)
    n = len(data)
    curve: list[float] = []
    for epoch in range(cfg.epochs):
        order = shuffle.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            X = data.features[idx].astype(np.float64, copy=False)
            Y = data.labels[idx].astype(np.float64, copy=False)
            value, grads = backward(model, X, Y)
            if not all(np.all(np.isfinite(g)) for g in grads):
                raise TrainingError(
                    f"non-finite gradient at epoch {epoch + 1}, batch offset {start}"
                )
            adam_step(model, grads, state, cfg)
            total += value * idx.size
        epoch_loss = total / n
        curve.append(epoch_loss)
        if not np.isfinite(epoch_loss) or epoch_loss > cfg.divergence_loss:
            raise TrainingError(f"training diverged at epoch {epoch + 1} (loss {epoch_loss:g})")
        if progress is not None:
            progress(epoch + 1, epoch_loss)
    return TrainResult(model, curve)


def detect(m: MlpModel, features) -> np.ndarray:
    """Hard bits: output > 0.5 -> 1, otherwise 0 (so exactly 0.5 -> 0)."""
    return (np.asarray(forward(m, features)) > 0.5).astype(np.int8)


def threshold(outputs) -> np.ndarray:
    return (np.asarray(outputs) > 0.5).astype(np.int8)


def save_checkpoint(path, models: MlpModel | Sequence[MlpModel], meta: dict | None = None) -> None:
    """Write one or more models to a self-describing ``.npz`` container.

    The header records layer sizes, activation tags and the parameter key
    order; parameters are stored as float64 in document order.
    """
    if isinstance(models, MlpModel):
        models = [models]
    arrays = {}
    header = {"format": CHECKPOINT_FORMAT, "models": [], "meta": meta or {}}
    for j, m in enumerate(models):
        keys = []
        for i, (W, b) in enumerate(zip(m.weights, m.biases)):
            for name, arr in ((f"m{j}_W{i}", W), (f"m{j}_b{i}", b)):
                arrays[name] = np.asarray(arr, dtype=np.float64)
                keys.append(name)
        header["models"].append({"sizes": list(m.sizes),
                                 "activations": list(m.activations),
                                 "params": keys})
    arrays["header"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> tuple[list[MlpModel], dict]:
    with np.load(path) as z:
        header = json.loads(bytes(z["header"]).decode())
        if header.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not an MLP checkpoint")
        models = []
        for spec in header["models"]:
            ps = [z[k].copy() for k in spec["params"]]
            models.append(MlpModel(tuple(spec["sizes"]), tuple(spec["activations"]),
                                   ps[0::2], ps[1::2]))
    return models, header.get("meta", {})


def append_loss_curve(path, curve: Sequence[float], tag: str) -> None:
    """Append ``tag, epoch, loss`` rows to a CSV (header written once)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(["tag", "epoch", "loss"])
        for e, v in enumerate(curve, start=1):
            w.writerow([tag, e, repr(float(v))])


def config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)


def frame_features(Y, pilot_indices=None) -> np.ndarray:
    """Network input for each frame: ``[Re Yp, Im Yp, Re Yd, Im Yd]``.

    ``Y`` is the received grid ``(..., 2, n_c)`` holding the pilot symbol
    and one data symbol. With ``pilot_indices`` only the pilot slots of the
    pilot symbol are kept, giving ``2 * (n_pilots + n_c)`` features.
    """
    Y = np.asarray(Y)
    if Y.shape[-2] != 2:
        raise ValueError("expected a pilot symbol followed by one data symbol")
    Yp, Yd = Y[..., 0, :], Y[..., 1, :]
    if pilot_indices is not None:
        Yp = Yp[..., np.asarray(pilot_indices)]
    return np.concatenate([Yp.real, Yp.imag, Yd.real, Yd.imag], axis=-1)


def input_size(n_c: int, n_pilots: int | None = None) -> int:
    return 2 * ((n_c if n_pilots is None else n_pilots) + n_c)


@dataclass
class DnnDetector:
    """One network per contiguous subcarrier group.

    Network ``g`` predicts the bits carried by subcarriers
    ``[g * group, (g + 1) * group)`` of the data symbol, where
    ``group = outputs / bits_per_symbol``.
    """

    models: list[MlpModel]
    bits_per_symbol: int
    pilot_indices: np.ndarray | None = None

    @property
    def group_size(self) -> int:
        return self.models[0].sizes[-1] // self.bits_per_symbol

    @property
    def n_c(self) -> int:
        return self.group_size * len(self.models)

    def features(self, Y) -> np.ndarray:
        return frame_features(Y, self.pilot_indices)

    def detect(self, Y) -> np.ndarray:
        """Bits of the first data symbol, subcarrier-major, ``(..., n_c * k)``."""
        feats = self.features(Y)
        flat = feats.reshape(-1, feats.shape[-1])
        parts = [detect(m, flat) for m in self.models]
        out = np.concatenate(parts, axis=-1)
        return out.reshape(feats.shape[:-1] + (out.shape[-1],))


def group_labels(bits, n_c: int, bits_per_symbol: int, group_size: int, group: int) -> np.ndarray:
    """Slice the first data symbol's bits that belong to subcarrier ``group``."""
    bits = np.asarray(bits)
    per_symbol = n_c * bits_per_symbol
    lo = group * group_size * bits_per_symbol
    hi = lo + group_size * bits_per_symbol
    if hi > per_symbol:
        raise ValueError("subcarrier group exceeds the OFDM symbol")
    return bits[..., lo:hi]
