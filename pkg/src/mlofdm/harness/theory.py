"""Closed-form reference BER over flat Rayleigh fading."""

from __future__ import annotations

import numpy as np

from ..modem import SUPPORTED_ORDERS


def qam_coefficients(order: int) -> tuple[float, float]:
    """Nearest-neighbour coefficients ``(alpha, beta)`` of square-QAM bit error approximations.

    ``alpha = 4 (1 - 1/sqrt(M)) / log2 M`` and ``beta = 3 / (M - 1)``; the
    same expressions are used for the 32-point cross constellation.
    """
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported modulation order {order}")
    alpha = 4.0 * (1.0 - 1.0 / np.sqrt(order)) / np.log2(order)
    beta = 3.0 / (order - 1)
    return float(alpha), float(beta)


def theoretical_ber(snr, order: int = 4):
    """Average BER ``(alpha/2) [1 - sqrt(0.5 beta snr / (1 + 0.5 beta snr))]``.

    ``snr`` is the linear average SNR per symbol (scalar or array). For
    4-QAM this is ``0.5 [1 - sqrt(g / (1 + g))]`` with ``g = snr / 2``.
    """
    alpha, beta = qam_coefficients(order)
    s = np.asarray(snr, dtype=float)
    if np.any(~(s > 0)):
        raise ValueError("snr must be positive")
    g = 0.5 * beta * s
    out = 0.5 * alpha * (1.0 - np.sqrt(g / (1.0 + g)))
    return float(out) if out.ndim == 0 else out


def theoretical_ber_db(snr_db, order: int = 4):
    return theoretical_ber(10.0 ** (np.asarray(snr_db, dtype=float) / 10.0), order)
