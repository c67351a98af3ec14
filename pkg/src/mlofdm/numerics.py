"""Numerical kernel shared by every other module.

Transforms use the unitary convention: both ``dft`` and ``idft`` carry a
``1/sqrt(N)`` factor, so Parseval holds exactly and ``idft(dft(x)) == x``.
Under this convention the circular-convolution theorem reads
``dft(cconv(x, h)) == sqrt(N) * dft(x) * dft(h)``.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "dft",
    "idft",
    "conv",
    "cconv",
    "pinv",
    "lstsq",
    "RngStream",
]


def _as_vector(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x)
    if arr.size == 0:
        raise ValueError(f"{name} must be nonempty")
    return arr


def dft(x, axis: int = -1) -> np.ndarray:
    """Unitary discrete Fourier transform along ``axis``.

    Any length is supported; numpy's pocketfft handles non-power-of-two
    sizes with Bluestein/mixed-radix plans.
    """
    arr = _as_vector(x)
    return np.fft.fft(arr, axis=axis, norm="ortho")


def idft(X, axis: int = -1) -> np.ndarray:
    """Unitary inverse DFT along ``axis``; exact inverse of :func:`dft`."""
    arr = _as_vector(X, "X")
    return np.fft.ifft(arr, axis=axis, norm="ortho")


def conv(x, h) -> np.ndarray:
    """Linear convolution, output length ``len(x) + len(h) - 1``."""
    x = _as_vector(x)
    h = _as_vector(h, "h")
    if x.ndim != 1 or h.ndim != 1:
        raise ValueError("conv expects 1-D inputs")
    return np.convolve(x, h)


def cconv(x, h) -> np.ndarray:
    """Circular convolution of period ``len(x)``.

    ``h`` may be shorter than ``x`` (it is zero padded); longer kernels are
    wrapped modulo ``len(x)``.
    """
    x = _as_vector(x)
    h = _as_vector(h, "h")
    n = x.shape[0]
    full = np.convolve(x, h)
    out = np.zeros(n, dtype=full.dtype)
    # fold the tail back onto the head
    for start in range(0, full.shape[0], n):
        chunk = full[start:start + n]
        out[: chunk.shape[0]] += chunk
    return out


def pinv(A, tol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse through the SVD.

    Singular values below ``tol * sigma_max`` are treated as zero. The
    default relative cut-off is ``max(m, n) * eps``.

    Parameters
    ----------
    A : array_like, shape (m, n)
        Real or complex matrix.
    tol : float, optional
        Relative singular-value cut-off.

    Returns
    -------
    np.ndarray, shape (n, m)
    """
    A = np.asarray(A)
    if A.ndim != 2:
        raise ValueError("pinv expects a 2-D matrix")
    m, n = A.shape
    if not np.all(np.isfinite(A)):
        raise ValueError("pinv input must be finite")
    if A.size == 0 or not np.any(A):
        return np.zeros((n, m), dtype=A.dtype)
    if tol is None:
        tol = max(m, n) * np.finfo(np.float64).eps
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    cutoff = tol * s[0]
    keep = s > cutoff
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vh.conj().T * s_inv) @ U.conj().T


def lstsq(A, Y, tol: float | None = None) -> np.ndarray:
    """Minimum-norm least-squares solution of ``A @ B ~= Y``.

    ``Y`` may be a vector or a matrix with one right-hand side per column.
    """
    A = np.asarray(A)
    Y = np.asarray(Y)
    if A.ndim != 2:
        raise ValueError("lstsq expects a 2-D coefficient matrix")
    if Y.shape[0] != A.shape[0]:
        raise ValueError(
            f"row mismatch: A has {A.shape[0]} rows, Y has {Y.shape[0]}"
        )
    return pinv(A, tol) @ Y


class RngStream:
    """Seeded random stream addressed by ``(seed, stream_id)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys,
    so two streams with different ids are statistically independent and a
    given ``(seed, stream_id)`` always replays the same variates. The
    stream id may be an int or a tuple of ints (e.g. ``(snr_index, batch)``).

    A stream is single-owner; hand out distinct ids for parallel work.
    """

    def __init__(self, seed: int, stream_id: int | tuple[int, ...] = 0):
        if isinstance(stream_id, (int, np.integer)):
            key = (int(stream_id),)
        else:
            key = tuple(int(k) for k in stream_id)
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = key
        ss = np.random.SeedSequence(self.seed, spawn_key=key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def child(self, *key: int) -> "RngStream":
        """Independent stream whose id extends this one's."""
        return RngStream(self.seed, self.stream_id + tuple(key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def normal(self, size=None, scale: float = 1.0) -> np.ndarray:
        return self._gen.normal(0.0, scale, size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self._gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def complex_normal(self, size=None, var: float = 1.0) -> np.ndarray:
        """CN(0, var): independent N(0, var/2) real and imaginary parts."""
        s = np.sqrt(var / 2.0)
        return s * (self._gen.standard_normal(size) + 1j * self._gen.standard_normal(size))

    def bits(self, size) -> np.ndarray:
        return self._gen.integers(0, 2, size=size, dtype=np.int8)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)
