"""QAM mapping, OFDM framing with cyclic prefix, and pilot patterns.

All grids are frequency-domain arrays of shape ``(..., n_symbols, n_c)``;
leading axes are treated as a batch of independent frames.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .numerics import RngStream, dft, idft

SUPPORTED_ORDERS = (4, 16, 32)

# symbols per demapping chunk; bounds the (chunk x M) distance matrix
_DEMAP_CHUNK = 1 << 16


def _gray(n: int) -> int:
    return n ^ (n >> 1)


def _pam_levels(bits_per_axis: int) -> dict[int, float]:
    """Gray label -> amplitude for a 2**b-PAM axis with levels +-1, +-3, ..."""
    n = 1 << bits_per_axis
    levels = {}
    for pos in range(n):
        levels[_gray(pos)] = float(2 * pos - (n - 1))
    return levels


def _square_table(order: int) -> np.ndarray:
    k = int(np.log2(order))
    half = k // 2
    axis = _pam_levels(half)
    pts = np.empty(order, dtype=complex)
    for label in range(order):
        i_bits = label >> half
        q_bits = label & ((1 << half) - 1)
        pts[label] = axis[i_bits] + 1j * axis[q_bits]
    return pts


def _cross32_table() -> np.ndarray:
    # 8x4 Gray rectangle, outer columns (|I| = 7) folded onto the |Q| = 5 rows
    i_axis = _pam_levels(3)
    q_axis = _pam_levels(2)
    pts = np.empty(32, dtype=complex)
    for label in range(32):
        i = i_axis[label >> 2]
        q = q_axis[label & 0b11]
        if abs(i) == 7:
            i, q = np.sign(i) * (4 - abs(q)), np.sign(q) * 5
        pts[label] = i + 1j * q
    return pts


@dataclass(frozen=True)
class QamConstellation:
    """Unit-average-energy M-QAM table indexed by bit label.

    ``points[label]`` is the symbol for the bit group whose MSB-first integer
    value is ``label``. Square orders are Gray labelled; 32-QAM is the cross
    constellation with a folded (quasi-Gray) labelling.
    """

    order: int
    points: np.ndarray = field(repr=False)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def min_distance(self) -> float:
        d = np.abs(self.points[:, None] - self.points[None, :])
        return float(d[d > 0].min())

    def labels(self) -> np.ndarray:
        """Bit matrix, row ``i`` is the label of ``points[i]``."""
        k = self.bits_per_symbol
        idx = np.arange(self.order)
        return ((idx[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.int8)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "bits", "real", "imag"])
            for i, (p, lab) in enumerate(zip(self.points, self.labels())):
                w.writerow([i, "".join(map(str, lab)), repr(p.real), repr(p.imag)])


@lru_cache(maxsize=None)
def qam(order: int) -> QamConstellation:
    """Constellation for ``order`` in {4, 16, 32}."""
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported QAM order {order}; use one of {SUPPORTED_ORDERS}")
    pts = _cross32_table() if order == 32 else _square_table(order)
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    pts.setflags(write=False)
    return QamConstellation(order, pts)


def bits_to_indices(bits, c: QamConstellation) -> np.ndarray:
    bits = np.asarray(bits)
    k = c.bits_per_symbol
    if bits.shape[-1] % k:
        raise ValueError(
            f"bit count {bits.shape[-1]} is not a multiple of log2(M) = {k}"
        )
    groups = bits.reshape(bits.shape[:-1] + (-1, k)).astype(np.int64)
    weights = 1 << np.arange(k - 1, -1, -1)
    return groups @ weights


def indices_to_bits(idx, c: QamConstellation) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    k = c.bits_per_symbol
    out = (idx[..., None] >> np.arange(k - 1, -1, -1)) & 1
    return out.reshape(idx.shape[:-1] + (-1,)).astype(np.int8)


def map_bits(bits, c: QamConstellation) -> np.ndarray:
    """Map bits (last axis) to constellation symbols."""
    return c.points[bits_to_indices(bits, c)]


def nearest_indices(Y, c: QamConstellation) -> np.ndarray:
    """Nearest constellation index per symbol; ties go to the lower index."""
    Y = np.asarray(Y, dtype=complex)
    flat = Y.reshape(-1)
    out = np.empty(flat.shape[0], dtype=np.int64)
    for s in range(0, flat.shape[0], _DEMAP_CHUNK):
        blk = flat[s:s + _DEMAP_CHUNK]
        d = np.abs(blk[:, None] - c.points[None, :]) ** 2
        out[s:s + _DEMAP_CHUNK] = np.argmin(d, axis=1)
    return out.reshape(Y.shape)


def demap_symbols(Y, c: QamConstellation) -> np.ndarray:
    """Hard-decision demapping to bits (concatenated along the last axis)."""
    Y = np.asarray(Y)
    if Y.ndim == 0:
        Y = Y[None]
    return indices_to_bits(nearest_indices(Y, c), c)


@dataclass(frozen=True)
class PilotPattern:
    """Pilot placement inside the pilot OFDM symbol.

    ``block``: every subcarrier of the pilot symbol carries a pilot.
    ``comb``: ``n_pilots`` evenly spaced subcarriers carry pilots; the other
    positions of the pilot symbol are left empty and are reached by
    interpolation.
    """

    n_c: int
    pilot_indices: np.ndarray
    values: np.ndarray
    arrangement: str

    def __post_init__(self):
        p = np.asarray(self.pilot_indices)
        if p.size == 0 or p.min() < 0 or p.max() >= self.n_c:
            raise ValueError("pilot indices must lie in [0, n_c)")
        if len(np.unique(p)) != p.size:
            raise ValueError("duplicate pilot indices")
        if np.asarray(self.values).shape != p.shape:
            raise ValueError("one pilot value per pilot index required")
        if self.arrangement not in ("block", "comb"):
            raise ValueError(f"unknown arrangement {self.arrangement!r}")
        if self.arrangement == "block" and p.size != self.n_c:
            raise ValueError("block-type pilots occupy every subcarrier")

    @property
    def n_pilots(self) -> int:
        return int(np.asarray(self.pilot_indices).size)

    @property
    def data_indices(self) -> np.ndarray:
        mask = np.ones(self.n_c, dtype=bool)
        mask[self.pilot_indices] = False
        return np.flatnonzero(mask)

    def symbol(self) -> np.ndarray:
        """Frequency-domain pilot OFDM symbol (zeros off the pilot grid)."""
        s = np.zeros(self.n_c, dtype=complex)
        s[self.pilot_indices] = self.values
        return s

    def to_csv(self, path) -> None:
        role = np.full(self.n_c, "empty" if self.arrangement == "comb" else "pilot", dtype=object)
        role[self.pilot_indices] = "pilot"
        sym = self.symbol()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["subcarrier", "role", "real", "imag"])
            for k in range(self.n_c):
                w.writerow([k, role[k], repr(sym[k].real), repr(sym[k].imag)])


def pilot_values(n: int, seed: int = 2024) -> np.ndarray:
    """Known unit-modulus QPSK pilot sequence (fixed for a given seed)."""
    rng = RngStream(seed, 0xB10C)
    return map_bits(rng.bits(2 * n), qam(4))


def make_pilot_pattern(n_c: int, n_pilots: int | None = None, seed: int = 2024) -> PilotPattern:
    """Block pattern when ``n_pilots`` is None or ``n_c``, else a comb from 0 to ``n_c - 1``."""
    values = pilot_values(n_c, seed)
    if n_pilots is None or n_pilots == n_c:
        return PilotPattern(n_c, np.arange(n_c), values, "block")
    if not 1 <= n_pilots < n_c:
        raise ValueError(f"n_pilots must be in [1, {n_c}]")
    if n_pilots == 1:
        idx = np.zeros(1, dtype=int)
    else:
        # span both band edges so interpolation never extrapolates
        idx = np.round(np.arange(n_pilots) * (n_c - 1) / (n_pilots - 1)).astype(int)
    return PilotPattern(n_c, idx, values[idx], "comb")


def cp_length(n_c: int, cp_fraction: float) -> int:
    return int(round(cp_fraction * n_c))


@dataclass
class OfdmFrame:
    """One coherence-block frame: pilot symbol followed by data symbols."""

    grid: np.ndarray
    pattern: PilotPattern
    constellation: QamConstellation
    cp_fraction: float
    bits: np.ndarray

    @property
    def n_c(self) -> int:
        return self.grid.shape[-1]

    @property
    def n_symbols(self) -> int:
        return self.grid.shape[-2]

    @property
    def cp_len(self) -> int:
        return cp_length(self.n_c, self.cp_fraction)

    @property
    def data(self) -> np.ndarray:
        return self.grid[..., 1:, :]


def build_frame(bits, pattern: PilotPattern, c: QamConstellation,
                cp_fraction: float = 0.25, n_data_symbols: int = 1) -> OfdmFrame:
    """Assemble the frequency grid for one frame (or a batch of frames).

    ``bits`` has shape ``(..., n_data_symbols * n_c * log2(M))``.
    """
    bits = np.asarray(bits)
    need = n_data_symbols * pattern.n_c * c.bits_per_symbol
    if bits.shape[-1] != need:
        raise ValueError(f"expected {need} payload bits, got {bits.shape[-1]}")
    if cp_length(pattern.n_c, cp_fraction) > pattern.n_c:
        raise ValueError("cyclic prefix longer than the OFDM symbol")
    batch = bits.shape[:-1]
    data = map_bits(bits, c).reshape(batch + (n_data_symbols, pattern.n_c))
    pilot = np.broadcast_to(pattern.symbol(), batch + (1, pattern.n_c))
    grid = np.concatenate([pilot, data], axis=-2)
    return OfdmFrame(grid, pattern, c, cp_fraction, bits)


def grid_to_time(grid, cp_len: int) -> np.ndarray:
    """Per-symbol IDFT, prepend the cyclic prefix, serialise symbols."""
    grid = np.asarray(grid)
    n_c = grid.shape[-1]
    if cp_len > n_c:
        raise ValueError("cyclic prefix longer than the OFDM symbol")
    x = idft(grid, axis=-1)
    if cp_len:
        x = np.concatenate([x[..., n_c - cp_len:], x], axis=-1)
    return x.reshape(grid.shape[:-2] + (-1,))


def time_to_grid(y, n_c: int, cp_len: int, n_symbols: int) -> np.ndarray:
    """Inverse of :func:`grid_to_time`: drop each CP and apply the DFT."""
    y = np.asarray(y)
    sym_len = n_c + cp_len
    if y.shape[-1] < n_symbols * sym_len:
        raise ValueError("received signal shorter than the frame")
    y = y[..., : n_symbols * sym_len]
    y = y.reshape(y.shape[:-1] + (n_symbols, sym_len))[..., cp_len:]
    return dft(y, axis=-1)


def to_time_domain(frame: OfdmFrame) -> np.ndarray:
    return grid_to_time(frame.grid, frame.cp_len)


def strip_cp_and_dft(y, frame: OfdmFrame) -> np.ndarray:
    return time_to_grid(y, frame.n_c, frame.cp_len, frame.n_symbols)


def dump_tables(directory, orders=SUPPORTED_ORDERS, n_c: int = 64,
                pilot_counts=(64, 32, 16, 8)) -> list[Path]:
    """Write constellation and pilot-pattern CSVs for inspection."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for m in orders:
        p = out / f"qam{m}.csv"
        qam(m).to_csv(p)
        written.append(p)
    for n in pilot_counts:
        p = out / f"pilots_{n}.csv"
        make_pilot_pattern(n_c, n).to_csv(p)
        written.append(p)
    return written
