"""Multipath Rayleigh block fading with distance path loss and AWGN.

Conventions
-----------
* Taps ``h`` are i.i.d. CN(0, p_l) with ``sum(p_l) == 1`` before path loss.
* The subcarrier response is the un-normalised DFT of the zero-padded taps,
  ``H[k] = sum_l h[l] exp(-2j pi k l / N)``, i.e. ``sqrt(N) * dft(h_pad)``,
  so ``Y = H * X + Z`` holds per subcarrier when the CP covers the taps.
* Path loss is a power gain ``d ** eta`` (``eta = -3``) folded into the
  taps as the amplitude ``d ** (eta / 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import RngStream, dft


@dataclass(frozen=True)
class ChannelProfile:
    """Power-delay profile and large-scale parameters.

    The default PDP is exponential over ``n_taps`` taps with the last tap
    ``decay_db`` below the first.
    """

    n_taps: int = 8
    decay_db: float = 20.0
    path_loss_exponent: float = -3.0
    cell_radius_m: float = 500.0
    min_radius_m: float = 10.0
    coherence_time_ms: float = 5.0
    pdp: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n_taps < 1:
            raise ValueError("n_taps must be >= 1")
        if not 0 < self.min_radius_m < self.cell_radius_m:
            raise ValueError("need 0 < min_radius_m < cell_radius_m")
        if self.pdp is not None:
            w = np.asarray(self.pdp, dtype=float)
            if w.shape != (self.n_taps,) or np.any(w < 0) or w.sum() <= 0:
                raise ValueError("pdp must hold n_taps nonnegative weights")

    @property
    def weights(self) -> np.ndarray:
        if self.pdp is not None:
            w = np.asarray(self.pdp, dtype=float)
        elif self.n_taps == 1:
            w = np.ones(1)
        else:
            step = self.decay_db / (self.n_taps - 1)
            w = 10.0 ** (-step * np.arange(self.n_taps) / 10.0)
        return w / w.sum()

    def check_cp(self, cp_len: int) -> None:
        if cp_len and self.n_taps > cp_len:
            raise ValueError(
                f"{self.n_taps} taps exceed the cyclic prefix of {cp_len} samples"
            )


@dataclass(frozen=True)
class NoiseSpec:
    """Per-subcarrier (equivalently per-sample) complex noise power."""

    sigma2: float

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("noise power must be positive")

    @classmethod
    def from_snr(cls, snr_db: float, receive_power: float) -> "NoiseSpec":
        """``sigma2 = P / snr`` for the pre-processing SNR ``P / sigma2``."""
        return cls(receive_power / 10.0 ** (snr_db / 10.0))


def frequency_response(taps, n_c: int) -> np.ndarray:
    """Subcarrier response of tap vectors (last axis) over ``n_c`` bins."""
    taps = np.asarray(taps)
    if taps.shape[-1] > n_c:
        raise ValueError("more taps than subcarriers")
    pad = np.zeros(taps.shape[:-1] + (n_c,), dtype=complex)
    pad[..., : taps.shape[-1]] = taps
    return np.sqrt(n_c) * dft(pad, axis=-1)


def received_power(distances, total_power: float, n_c: int, eta: float) -> np.ndarray:
    """Mean receive power per subcarrier, ``d ** eta * P_T / N_c``."""
    d = np.asarray(distances, dtype=float)
    return d ** eta * total_power / n_c


@dataclass
class ChannelRealization:
    """Per-user taps for one coherence block.

    ``small_scale`` holds the unit-power Rayleigh taps; ``taps`` and
    ``response`` include the path-loss amplitude.
    """

    small_scale: np.ndarray
    distances: np.ndarray
    eta: float
    n_c: int
    response_small: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.response_small = frequency_response(self.small_scale, self.n_c)

    @property
    def gain(self) -> np.ndarray:
        """Large-scale power gain ``d ** eta`` per user."""
        return self.distances ** self.eta

    @property
    def taps(self) -> np.ndarray:
        return self.small_scale * np.sqrt(self.gain)[..., None]

    @property
    def response(self) -> np.ndarray:
        return self.response_small * np.sqrt(self.gain)[..., None]

    @property
    def n_users(self) -> int:
        return self.small_scale.shape[0]


def draw_taps(profile: ChannelProfile, shape, rng: RngStream) -> np.ndarray:
    """Unit-power Rayleigh taps of shape ``shape + (n_taps,)``."""
    if isinstance(shape, int):
        shape = (shape,)
    w = profile.weights
    g = rng.complex_normal(shape + (profile.n_taps,))
    return g * np.sqrt(w)


def draw_realization(profile: ChannelProfile, distances, rng: RngStream,
                     n_c: int = 64) -> ChannelRealization:
    """One block-fading draw for every user in ``distances``."""
    d = np.atleast_1d(np.asarray(distances, dtype=float))
    if d.size == 0:
        raise ValueError("at least one user distance is required")
    if np.any(d <= 0) or np.any(d > profile.cell_radius_m):
        raise ValueError("distances must lie in (0, cell radius]")
    taps = draw_taps(profile, (d.size,), rng)
    return ChannelRealization(taps, d, profile.path_loss_exponent, n_c)


def place_users(n_users: int, rng: RngStream, profile: ChannelProfile | None = None) -> np.ndarray:
    """Distances of users dropped uniformly over the cell annulus."""
    if n_users < 1:
        raise ValueError("need at least one user")
    profile = profile or ChannelProfile()
    r0, r1 = profile.min_radius_m, profile.cell_radius_m
    u = rng.uniform(size=n_users)
    return np.sqrt(r0 ** 2 + u * (r1 ** 2 - r0 ** 2))


def convolve_batch(x, taps) -> np.ndarray:
    """Row-wise linear convolution, truncated to ``x.shape[-1]`` samples.

    ``x`` is ``(..., T)``, ``taps`` is ``(..., L)`` with matching batch axes.
    """
    x = np.asarray(x)
    taps = np.asarray(taps)
    y = np.zeros(np.broadcast_shapes(x.shape[:-1], taps.shape[:-1]) + x.shape[-1:],
                 dtype=np.result_type(x, taps))
    T = x.shape[-1]
    for l in range(min(taps.shape[-1], T)):
        y[..., l:] += taps[..., l:l + 1] * x[..., : T - l]
    return y


def apply(x_time, real: ChannelRealization, noise: NoiseSpec | None,
          rng: RngStream | None = None, user: int = 0) -> np.ndarray:
    """Time-domain channel: full linear convolution with the user's taps plus noise.

    The output has ``len(x) + n_taps - 1`` samples.
    """
    x = np.asarray(x_time)
    if x.size == 0:
        raise ValueError("empty signal")
    y = np.convolve(x, real.taps[user])
    if noise is not None:
        y = y + rng.complex_normal(y.shape, noise.sigma2)
    return y


def apply_frequency(X, real: ChannelRealization, noise: NoiseSpec | None,
                    rng: RngStream | None = None, user: int = 0) -> np.ndarray:
    """Subcarrier-domain fast path ``Y = X * H + Z``; valid when CP >= taps - 1."""
    X = np.asarray(X)
    Y = X * real.response[user]
    if noise is not None:
        Y = Y + rng.complex_normal(Y.shape, noise.sigma2)
    return Y


def superpose(signals: dict[int, np.ndarray], real: ChannelRealization,
              noise: NoiseSpec | None, rng: RngStream | None = None) -> np.ndarray:
    """Sum of each user's channel-filtered signal at the single receive antenna."""
    if not signals:
        raise ValueError("no transmitted signals")
    length = max(len(s) for s in signals.values()) + real.small_scale.shape[-1] - 1
    y = np.zeros(length, dtype=complex)
    for u, s in signals.items():
        part = np.convolve(np.asarray(s), real.taps[u])
        y[: part.size] += part
    if noise is not None:
        y = y + rng.complex_normal(y.shape, noise.sigma2)
    return y
