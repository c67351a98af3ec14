"""Batched link-level simulation of the desired user's frames.

Each frame is sent in the time domain: the symbols are preceded by one
random data symbol of the same user, so a cyclic prefix shorter than the
channel leaks inter-symbol interference into the pilot symbol. Overlay
users (beyond ``n_c // n_cpu``) transmit random symbols on the block they
share and reach the receiver through their own channel and path loss.

The receiver applies an ideal AGC that divides by the desired user's mean
receive power, so after it ``E|H|^2 = 1`` and the noise variance is
``1 / snr``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import ChannelProfile, convolve_batch, draw_taps, frequency_response, place_users
from ..modem import PilotPattern, QamConstellation, grid_to_time, make_pilot_pattern, map_bits, qam, time_to_grid
from ..neural import TrainingSet, frame_features, group_labels
from ..numerics import RngStream
from .config import ExperimentConfig


@dataclass(frozen=True)
class LinkSetup:
    n_c: int
    constellation: QamConstellation
    pattern: PilotPattern
    cp_len: int
    profile: ChannelProfile
    users: int = 1
    n_cpu: int = 16
    total_power: float = 1e-3

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> "LinkSetup":
        pattern = make_pilot_pattern(cfg.n_subcarriers, cfg.n_pilots, cfg.pilot_seed)
        return cls(cfg.n_subcarriers, qam(cfg.modulation), pattern, cfg.cp_len,
                   cfg.channel, cfg.users, cfg.n_cpu, cfg.total_power_w)

    @property
    def bits_per_symbol(self) -> int:
        return self.constellation.bits_per_symbol

    @property
    def bits_per_ofdm_symbol(self) -> int:
        return self.n_c * self.bits_per_symbol

    @property
    def overlay_blocks(self) -> list[np.ndarray]:
        """Subcarrier blocks shared with an overlay interferer."""
        base = self.n_c // self.n_cpu
        n_overlay = max(0, self.users - base)
        return [np.arange(j * self.n_cpu, (j + 1) * self.n_cpu) for j in range(n_overlay)]


@dataclass
class LinkBatch:
    """Received frames after AGC.

    ``Y`` is ``(n, n_symbols, n_c)``; ``H`` the true normalised response of
    the desired user ``(n, n_c)``; ``bits`` the payload bits of the data
    symbols ``(n, n_data * n_c * k)``.
    """

    Y: np.ndarray
    H: np.ndarray
    bits: np.ndarray
    snr: float


def _random_symbols(setup: LinkSetup, shape, rng: RngStream) -> np.ndarray:
    b = rng.bits(shape + (setup.n_c * setup.bits_per_symbol,))
    return map_bits(b, setup.constellation).reshape(shape + (setup.n_c,))


def propagate(setup: LinkSetup, grid, snr_db: float, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Send ``grid`` ``(n, n_sym, n_c)`` over fresh channels; return ``(Y, H)`` after AGC."""
    grid = np.asarray(grid)
    n, n_sym, n_c = grid.shape
    sym_len = n_c + setup.cp_len
    amp_tx = np.sqrt(setup.total_power / n_c)
    eta = setup.profile.path_loss_exponent

    prev = _random_symbols(setup, (n, 1), rng)
    x = grid_to_time(np.concatenate([prev, grid], axis=1) * amp_tx, setup.cp_len)
    d = place_users(n, rng, setup.profile)
    taps = draw_taps(setup.profile, n, rng)
    gain = d ** eta
    y = convolve_batch(x, taps * np.sqrt(gain)[:, None])

    for block in setup.overlay_blocks:
        sym = np.zeros((n, n_sym + 1, n_c), dtype=complex)
        sym[..., block] = _random_symbols(setup, (n, n_sym + 1), rng)[..., block]
        xi = grid_to_time(sym * amp_tx, setup.cp_len)
        di = place_users(n, rng, setup.profile)
        ti = draw_taps(setup.profile, n, rng) * np.sqrt(di ** eta)[:, None]
        y += convolve_batch(xi, ti)

    power = gain * setup.total_power / n_c
    sigma2 = power / 10.0 ** (snr_db / 10.0)
    y = y + rng.complex_normal(y.shape) * np.sqrt(sigma2)[:, None]
    Y = time_to_grid(y[:, sym_len:], n_c, setup.cp_len, n_sym)
    Y = Y / np.sqrt(power)[:, None, None]
    return Y, frequency_response(taps, n_c)


def simulate_frames(setup: LinkSetup, n: int, snr_db: float, rng: RngStream,
                    n_data_symbols: int = 1) -> LinkBatch:
    """``n`` frames of one pilot symbol followed by ``n_data_symbols`` data symbols."""
    bits = rng.bits((n, n_data_symbols * setup.bits_per_ofdm_symbol))
    data = map_bits(bits, setup.constellation).reshape(n, n_data_symbols, setup.n_c)
    pilot = np.broadcast_to(setup.pattern.symbol(), (n, 1, setup.n_c))
    Y, H = propagate(setup, np.concatenate([pilot, data], axis=1), snr_db, rng)
    return LinkBatch(Y, H, bits, 10.0 ** (snr_db / 10.0))


@dataclass
class ElmBlock:
    """One coherence block for the ELM: ``I`` pilot symbols then ``K`` data symbols."""

    pilots_tx: np.ndarray
    pilots_rx: np.ndarray
    data_rx: np.ndarray
    bits: np.ndarray
    H: np.ndarray


def simulate_elm_blocks(setup: LinkSetup, n_blocks: int, n_pilots: int, n_data: int,
                        snr_db: float, rng: RngStream) -> list[ElmBlock]:
    """Fresh pilots, data and channel per block; pilots are random constellation points."""
    k = setup.bits_per_ofdm_symbol
    bits = rng.bits((n_blocks, n_pilots + n_data, k))
    grid = map_bits(bits, setup.constellation).reshape(n_blocks, n_pilots + n_data, setup.n_c)
    Y, H = propagate(setup, grid, snr_db, rng)
    return [ElmBlock(grid[b, :n_pilots], Y[b, :n_pilots], Y[b, n_pilots:],
                     bits[b, n_pilots:].reshape(n_data, k), H[b]) for b in range(n_blocks)]


def dnn_training_sets(setup: LinkSetup, n: int, snr_db: float, rng: RngStream,
                      group_size: int, chunk: int = 5000) -> list[TrainingSet]:
    """Simulated examples for every subcarrier group, one set per group.

    Features are stored as float32 to bound memory; training promotes each
    mini-batch to float64.
    """
    n_groups = setup.n_c // group_size
    pilot_idx = None if setup.pattern.arrangement == "block" else setup.pattern.pilot_indices
    feats, labels = [], [[] for _ in range(n_groups)]
    for start in range(0, n, chunk):
        m = min(chunk, n - start)
        batch = simulate_frames(setup, m, snr_db, rng.child(start // chunk))
        feats.append(frame_features(batch.Y, pilot_idx).astype(np.float32))
        for g in range(n_groups):
            labels[g].append(group_labels(batch.bits, setup.n_c, setup.bits_per_symbol, group_size, g))
    X = np.concatenate(feats)
    return [TrainingSet(X, np.concatenate(lab)) for lab in labels]
