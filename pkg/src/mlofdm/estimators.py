"""Pilot-based LS and MMSE channel estimation, one-tap equalisation, NMSE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .channel import ChannelProfile, draw_taps, frequency_response
from .modem import PilotPattern
from .numerics import RngStream
from .opcount import NULL, FlopCounter, charge_lu_solve

# |H| below this is treated as a dead subcarrier by `equalize`
EQ_FLOOR = 1e-12


@dataclass
class ChannelEstimate:
    """Estimated response on every subcarrier.

    ``at_pilots`` keeps the pre-interpolation values on the pilot grid.
    Arrays may carry leading batch axes.
    """

    H: np.ndarray
    at_pilots: np.ndarray
    method: str
    pattern: PilotPattern


def interpolation_matrix(pilot_indices, n_c: int) -> np.ndarray:
    """Real ``(n_c, n_p)`` matrix of linear-interpolation weights.

    Inner subcarriers interpolate linearly between neighbouring pilots;
    subcarriers outside the pilot span hold the nearest pilot value.
    """
    p = np.asarray(pilot_indices, dtype=float)
    P = np.zeros((n_c, p.size))
    for j in range(p.size):
        e = np.zeros(p.size)
        e[j] = 1.0
        P[:, j] = np.interp(np.arange(n_c), p, e)
    return P


def interpolate(values, pattern: PilotPattern, counter: FlopCounter = NULL) -> np.ndarray:
    """Fill every subcarrier from pilot-position values (last axis)."""
    values = np.asarray(values)
    if pattern.arrangement == "block":
        return values.copy()
    P = interpolation_matrix(pattern.pilot_indices, pattern.n_c)
    # two real weights per interpolated subcarrier, each on re and im
    n_fill = pattern.n_c - pattern.n_pilots
    counter.add("rmul", 4 * n_fill)
    counter.add("radd", 2 * n_fill)
    return values @ P.T


def ls_estimate(Y_p, X_p, pattern: PilotPattern, counter: FlopCounter = NULL) -> ChannelEstimate:
    """``H = Y_p / X_p`` on the pilots, then interpolated to all subcarriers.

    Parameters
    ----------
    Y_p : array_like, shape (..., n_pilots)
        Received values at the pilot subcarriers.
    X_p : array_like, shape (n_pilots,)
        Known transmitted pilots (nonzero).
    """
    Y_p = np.asarray(Y_p)
    X_p = np.asarray(X_p)
    if Y_p.shape[-1] != X_p.shape[-1]:
        raise ValueError("received and transmitted pilot lengths differ")
    if np.any(X_p == 0):
        raise ValueError("pilot values must be nonzero")
    h = Y_p / X_p
    counter.add("cdiv", X_p.size)
    return ChannelEstimate(interpolate(h, pattern, counter), h, "LS", pattern)


@dataclass(frozen=True)
class CorrelationModel:
    """Channel correlation among the pilot subcarriers.

    The cross-correlation between the true channel and its LS estimate
    equals ``R_HH`` because the noise is independent of the channel.
    """

    R_HH: np.ndarray

    def __post_init__(self):
        R = self.R_HH
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError("R_HH must be square")
        if not np.allclose(R, R.conj().T, atol=1e-10):
            raise ValueError("R_HH must be Hermitian")

    @property
    def R_H_Hls(self) -> np.ndarray:
        return self.R_HH

    @property
    def size(self) -> int:
        return self.R_HH.shape[0]

    @classmethod
    def from_profile(cls, profile: ChannelProfile, pilot_indices, n_c: int) -> "CorrelationModel":
        """Analytic ``E[H H^H]`` from the PDP: ``sum_l p_l exp(-2j pi (k-m) l / N)``."""
        k = np.asarray(pilot_indices, dtype=float)
        w = profile.weights
        lags = np.arange(w.size)
        diff = k[:, None] - k[None, :]
        R = (w * np.exp(-2j * np.pi * diff[..., None] * lags / n_c)).sum(axis=-1)
        return cls(R)

    @classmethod
    def empirical(cls, profile: ChannelProfile, pilot_indices, n_c: int,
                  rng: RngStream, n_samples: int = 10_000) -> "CorrelationModel":
        """Sample covariance of simulated responses (fallback when no PDP is known)."""
        H = frequency_response(draw_taps(profile, n_samples, rng), n_c)
        Hp = H[:, np.asarray(pilot_indices)]
        R = Hp.T @ Hp.conj() / n_samples
        return cls(0.5 * (R + R.conj().T))


def mmse_weights(corr: CorrelationModel, snr: float) -> np.ndarray:
    """``R (R + I / snr)^{-1}``; for inspection and tests, not for the hot path."""
    A = corr.R_HH + np.eye(corr.size) / snr
    # R and A commute, so R A^{-1} == A^{-1} R
    return scipy.linalg.solve(A, corr.R_HH, assume_a="her")


def mmse_estimate(hls: ChannelEstimate, corr: CorrelationModel, snr: float,
                  counter: FlopCounter = NULL) -> ChannelEstimate:
    """Wiener-filter the LS pilot estimate, then interpolate.

    ``snr`` is the linear pre-processing SNR. The linear system
    ``(R_HH + I/snr) z = H_ls`` is solved by LU once per call; every
    leading batch entry is a right-hand side.
    """
    if not snr > 0:
        raise ValueError("snr must be positive")
    h = np.asarray(hls.at_pilots)
    n = corr.size
    if h.shape[-1] != n:
        raise ValueError("correlation model does not match the pilot count")
    A = corr.R_HH + np.eye(n) / snr
    counter.add("radd", n)
    lu = scipy.linalg.lu_factor(A, check_finite=False)
    # PSD R plus a positive ridge cannot be singular
    assert np.all(np.abs(np.diag(lu[0])) > 0), "singular MMSE system"
    rhs = h.reshape(-1, n).T
    z = scipy.linalg.lu_solve(lu, rhs, check_finite=False)
    hm = (corr.R_H_Hls @ z).T.reshape(h.shape)
    nrhs = rhs.shape[1]
    charge_lu_solve(counter, n, nrhs)
    counter.add("cmul", nrhs * n * n)
    counter.add("cadd", nrhs * n * (n - 1))
    return ChannelEstimate(interpolate(hm, hls.pattern, counter), hm, "MMSE", hls.pattern)


def equalize(Y_d, est: ChannelEstimate | np.ndarray, floor: float = EQ_FLOOR,
             counter: FlopCounter = NULL, return_flags: bool = False):
    """One-tap zero-forcing ``Y_d / H``.

    Subcarriers whose estimate magnitude is below ``floor`` are flagged and
    their symbol is set to 0, so the demapper decides the constellation
    point nearest the origin. ``H`` must broadcast against ``Y_d`` (pass
    ``H[..., None, :]`` for several data symbols per frame).
    """
    H = est.H if isinstance(est, ChannelEstimate) else np.asarray(est)
    Y_d = np.asarray(Y_d)
    Hb = np.broadcast_to(H, np.broadcast_shapes(H.shape, Y_d.shape))
    flags = np.abs(Hb) < floor
    safe = np.where(flags, 1.0, Hb)
    X = np.where(flags, 0.0, Y_d / safe)
    counter.add("cdiv", Y_d.size)
    if return_flags:
        return X, flags
    return X


def nmse(H_true, H_est) -> float:
    """``sum_i ||H(i) - H_est(i)||^2 / (S * ||vec(H)||^2)`` over S samples.

    Inputs are sequences (or ``(S, n_c)`` arrays) of matched samples.
    """
    Ht = np.asarray(H_true)
    He = np.asarray(H_est)
    if Ht.ndim == 1:
        Ht, He = Ht[None], He[None]
    if Ht.shape != He.shape or Ht.shape[0] < 1:
        raise ValueError("need S >= 1 matched sample pairs")
    S = Ht.shape[0]
    energy = float(np.sum(np.abs(Ht) ** 2))
    if energy == 0:
        raise ValueError("true channel has zero energy")
    return float(np.sum(np.abs(Ht - He) ** 2)) / (S * energy)
