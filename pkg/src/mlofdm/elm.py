"""Per-subcarrier extreme learning machine detector.

Each subcarrier gets its own single-hidden-layer network with two inputs
(real and imaginary part of the received sample), ``L`` radial-basis hidden
nodes with random fixed weights, and two linear outputs. Only the output
weights are learned, in one shot, as ``pinv(O) @ X_pilot``.

The bank stores every subnet's parameters stacked along a leading
subcarrier axis so training and detection run over all subcarriers at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .modem import QamConstellation, demap_symbols
from .numerics import RngStream
from .opcount import NULL, FlopCounter, charge_svd

CHECKPOINT_FORMAT = "mlofdm-elm/1"


def radbas(x):
    return np.exp(-np.square(x))


class UntrainedError(RuntimeError):
    pass


@dataclass
class ElmConfig:
    hidden: int = 50
    pilots: int = 100
    data: int = 400
    normalize: bool = True

    def __post_init__(self):
        if min(self.hidden, self.pilots, self.data) < 1:
            raise ValueError("hidden, pilots and data must be >= 1")


@dataclass
class ElmSubnet:
    """One subcarrier's network.

    ``a`` is ``(L, 2)`` (row ``l`` is the input weight vector of hidden node
    ``l``), ``b`` is ``(L,)`` and ``B`` is the ``(L, 2)`` output weight
    matrix, ``None`` until trained. ``scale`` multiplies the inputs before
    the hidden layer.
    """

    a: np.ndarray
    b: np.ndarray
    B: np.ndarray | None = None
    scale: float = 1.0

    @property
    def hidden(self) -> int:
        return self.b.shape[0]

    @classmethod
    def random(cls, hidden: int, rng: RngStream) -> "ElmSubnet":
        return cls(rng.uniform(-1.0, 1.0, (hidden, 2)), rng.uniform(-1.0, 1.0, hidden))


def as_pairs(z) -> np.ndarray:
    """Complex samples -> ``(..., 2)`` real ``[Re, Im]`` pairs."""
    z = np.asarray(z)
    return np.stack([z.real, z.imag], axis=-1)


def from_pairs(p) -> np.ndarray:
    p = np.asarray(p)
    return p[..., 0] + 1j * p[..., 1]


def hidden_matrix(subnet: ElmSubnet, inputs, counter: FlopCounter = NULL) -> np.ndarray:
    """``O[i, l] = radbas(a_l . y_i + b_l)`` for inputs of shape ``(I, 2)``."""
    Y = np.asarray(inputs, dtype=float) * subnet.scale
    O = radbas(Y @ subnet.a.T + subnet.b)
    _charge_hidden(counter, Y.shape[0], subnet.hidden)
    return O


def _charge_hidden(counter: FlopCounter, n: int, hidden: int) -> None:
    # 2 mul + 2 add for a.y + b, 1 mul for the square, 1 exp
    counter.add("rmul", 3 * n * hidden)
    counter.add("radd", 2 * n * hidden)
    counter.add("act", n * hidden)


def _charge_output(counter: FlopCounter, n: int, hidden: int) -> None:
    counter.add("rmul", 2 * n * hidden)
    counter.add("radd", 2 * n * (hidden - 1))


def _input_scale(pilots_rx) -> float:
    rms = float(np.sqrt(np.mean(np.sum(np.square(pilots_rx), axis=-1))))
    return 1.0 / rms if rms > 0 else 1.0


def _solve_output(O: np.ndarray, X: np.ndarray, counter: FlopCounter) -> np.ndarray:
    """Minimum-norm least squares ``pinv(O) @ X`` through one thin SVD.

    Singular values below ``max(I, L) * eps * s_max`` are dropped, matching
    :func:`mlofdm.numerics.pinv`; ``V diag(1/s) (U^T X)`` avoids forming the
    pseudoinverse explicitly. Radbas hidden matrices are badly conditioned,
    so one refinement pass ``B += pinv(O) (X - O B)`` reuses the same
    factors to recover the accuracy lost to rounding.
    """
    U, s, Vt = np.linalg.svd(O, full_matrices=False)
    tol = max(O.shape[-2:]) * np.finfo(float).eps
    keep = s > tol * s[..., :1]
    s_inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    Ut = np.swapaxes(U, -1, -2)
    V = np.swapaxes(Vt, -1, -2)

    def apply_pinv(R):
        return V @ (s_inv[..., None] * (Ut @ R))

    B = apply_pinv(X)
    B = B + apply_pinv(X - O @ B)
    I, L = O.shape[-2:]
    n_sub = int(np.prod(O.shape[:-2], dtype=int))
    r = min(I, L)
    for _ in range(n_sub):
        charge_svd(counter, I, L)
        counter.event("pinv")
    # two pinv applications plus the residual O @ B - X, two columns each
    counter.add("rmul", n_sub * 2 * (2 * I * r + 2 * r + 2 * L * r) + n_sub * 2 * I * L)
    counter.add("radd", n_sub * 2 * (2 * (I - 1) * r + 2 * L * (r - 1) + 2 * L) + n_sub * 2 * I * L)
    return B


def train_subnet(subnet: ElmSubnet, received, transmitted, normalize: bool = True,
                 counter: FlopCounter = NULL) -> np.ndarray:
    """Fit ``B`` so that ``O @ B`` best matches the transmitted pilots.

    ``received`` and ``transmitted`` are ``(I, 2)`` real pairs. The hidden
    weights are left untouched; ``subnet.B`` (and ``subnet.scale`` when
    normalising) are set and ``B`` is returned.
    """
    Yp = np.asarray(received, dtype=float)
    Xp = np.asarray(transmitted, dtype=float)
    if Yp.ndim != 2 or Yp.shape[1] != 2 or Yp.shape != Xp.shape or Yp.shape[0] < 1:
        raise ValueError("pilots must be matching (I, 2) arrays with I >= 1")
    subnet.scale = _input_scale(Yp) if normalize else 1.0
    O = hidden_matrix(subnet, Yp, counter)
    subnet.B = _solve_output(O, Xp, counter)
    return subnet.B


def detect_subnet(subnet: ElmSubnet, received, counter: FlopCounter = NULL) -> np.ndarray:
    """``O @ B`` on ``(K, 2)`` received pairs."""
    if subnet.B is None:
        raise UntrainedError("subnet has not been trained")
    O = hidden_matrix(subnet, received, counter)
    _charge_output(counter, O.shape[0], subnet.hidden)
    return O @ subnet.B


@dataclass
class ElmBank:
    """``n_c`` subnets sharing hidden size and activation.

    Stacked arrays: ``a`` ``(n_c, L, 2)``, ``b`` ``(n_c, L)``, ``B``
    ``(n_c, L, 2)``, ``scale`` ``(n_c,)``.
    """

    a: np.ndarray
    b: np.ndarray
    B: np.ndarray | None = None
    scale: np.ndarray | None = None
    seed: int = 0
    normalize: bool = True

    @classmethod
    def create(cls, n_c: int, hidden: int, seed: int, normalize: bool = True) -> "ElmBank":
        """Random hidden layers, uniform on [-1, 1], one stream per subcarrier."""
        a = np.empty((n_c, hidden, 2))
        b = np.empty((n_c, hidden))
        for k in range(n_c):
            sub = ElmSubnet.random(hidden, RngStream(seed, (0xE1, k)))
            a[k], b[k] = sub.a, sub.b
        return cls(a, b, None, np.ones(n_c), seed, normalize)

    @property
    def n_c(self) -> int:
        return self.a.shape[0]

    @property
    def hidden(self) -> int:
        return self.a.shape[1]

    @property
    def trained(self) -> bool:
        return self.B is not None

    def __len__(self) -> int:
        return self.n_c

    def subnet(self, k: int) -> ElmSubnet:
        """View of subcarrier ``k`` (arrays are shared, not copied)."""
        B = None if self.B is None else self.B[k]
        return ElmSubnet(self.a[k], self.b[k], B, float(self.scale[k]))

    def hidden_outputs(self, received, counter: FlopCounter = NULL) -> np.ndarray:
        """``(n_c, n, L)`` hidden matrices for received samples ``(n, n_c)``."""
        pairs = np.swapaxes(as_pairs(received), 0, 1) * self.scale[:, None, None]
        O = radbas(pairs @ np.swapaxes(self.a, 1, 2) + self.b[:, None, :])
        _charge_hidden(counter, pairs.shape[0] * pairs.shape[1], self.hidden)
        return O

    def train(self, received, transmitted, counter: FlopCounter = NULL) -> "ElmBank":
        """Train every subnet from one coherence block of pilots.

        ``received``/``transmitted`` are complex ``(I, n_c)``: row ``i`` is
        the ``i``-th pilot OFDM symbol.
        """
        Yp = np.asarray(received)
        Xp = np.asarray(transmitted)
        if Yp.shape != Xp.shape or Yp.ndim != 2 or Yp.shape[1] != self.n_c:
            raise ValueError(f"pilots must be (I, {self.n_c}) arrays")
        if self.normalize:
            rms = np.sqrt(np.mean(np.abs(Yp) ** 2, axis=0))
            self.scale = np.where(rms > 0, 1.0 / np.where(rms > 0, rms, 1.0), 1.0)
        else:
            self.scale = np.ones(self.n_c)
        O = self.hidden_outputs(Yp, counter)
        target = np.swapaxes(as_pairs(Xp), 0, 1)
        self.B = _solve_output(O, target, counter)
        return self

    def estimate(self, received, counter: FlopCounter = NULL) -> np.ndarray:
        """Complex symbol estimates ``(K, n_c)`` for received data ``(K, n_c)``."""
        if self.B is None:
            raise UntrainedError("bank has not been trained for this block")
        Yd = np.asarray(received)
        if Yd.ndim != 2 or Yd.shape[1] != self.n_c:
            raise ValueError(f"data must be (K, {self.n_c})")
        O = self.hidden_outputs(Yd, counter)
        _charge_output(counter, Yd.shape[0] * self.n_c, self.hidden)
        est = O @ self.B
        return np.swapaxes(from_pairs(est), 0, 1)

    def save(self, path, config: dict | None = None) -> None:
        header = {"format": CHECKPOINT_FORMAT, "seed": self.seed,
                  "normalize": self.normalize, "config": config or {}}
        arrays = {"a": self.a, "b": self.b, "scale": self.scale,
                  "header": np.frombuffer(json.dumps(header, sort_keys=True).encode(), np.uint8)}
        if self.B is not None:
            arrays["B"] = self.B
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path) -> tuple["ElmBank", dict]:
        with np.load(path) as z:
            header = json.loads(bytes(z["header"]).decode())
            if header.get("format") != CHECKPOINT_FORMAT:
                raise ValueError(f"{path}: not an ELM bank checkpoint")
            B = z["B"].copy() if "B" in z.files else None
            bank = cls(z["a"].copy(), z["b"].copy(), B, z["scale"].copy(),
                       header["seed"], header["normalize"])
        return bank, header.get("config", {})


def detect_bank(bank: ElmBank, received, c: QamConstellation,
                counter: FlopCounter = NULL) -> tuple[np.ndarray, np.ndarray]:
    """Symbol estimates and hard bits for a ``(K, n_c)`` block of data.

    Bits come back as ``(K, n_c * log2 M)``, subcarrier-major within each
    OFDM symbol.
    """
    X = bank.estimate(received, counter)
    counter.add("radd", 2 * X.size * c.order)
    counter.add("rmul", 2 * X.size * c.order)
    return X, demap_symbols(X, c)
