"""Receiver chains run by the campaign, the operation counter and the timer.

Each chain maps a received :class:`~.link.LinkBatch` (or ELM block) to hard
bits of the data symbols, charging an optional counter on the way.
"""

from __future__ import annotations

import numpy as np

from ..elm import ElmBank, detect_bank
from ..estimators import ChannelEstimate, CorrelationModel, equalize, ls_estimate, mmse_estimate
from ..modem import QamConstellation, demap_symbols
from ..neural import DnnDetector, forward
from ..opcount import NULL, FlopCounter, charge_matmul
from .link import ElmBlock, LinkBatch, LinkSetup

CLASSICAL = ("perfect", "ls", "mmse")


def _demap(X, c: QamConstellation, counter: FlopCounter) -> np.ndarray:
    # squared distance to every point: 2 mul + 2 add (re/im) per candidate
    counter.add("rmul", 2 * X.size * c.order)
    counter.add("radd", 2 * X.size * c.order)
    bits = demap_symbols(X, c)
    return bits.reshape(bits.shape[:-2] + (-1,))


def correlation_for(setup: LinkSetup) -> CorrelationModel:
    return CorrelationModel.from_profile(setup.profile, setup.pattern.pilot_indices, setup.n_c)


def estimate_channel(kind: str, setup: LinkSetup, batch: LinkBatch,
                     corr: CorrelationModel | None = None,
                     counter: FlopCounter = NULL) -> ChannelEstimate:
    """LS or MMSE estimate from the pilot symbol of every frame."""
    p = setup.pattern
    ls = ls_estimate(batch.Y[:, 0, p.pilot_indices], p.values, p, counter)
    if kind == "ls":
        return ls
    if kind == "mmse":
        return mmse_estimate(ls, corr if corr is not None else correlation_for(setup), batch.snr, counter)
    raise ValueError(f"no channel estimator {kind!r}")


def classical_bits(kind: str, setup: LinkSetup, batch: LinkBatch,
                   corr: CorrelationModel | None = None,
                   counter: FlopCounter = NULL) -> tuple[np.ndarray, np.ndarray]:
    """Matched-filter detection with perfect, LS or MMSE CSI.

    Returns the hard bits ``(n, n_data * n_c * k)`` and the channel used.
    """
    if kind == "perfect":
        H = batch.H
    else:
        H = estimate_channel(kind, setup, batch, corr, counter).H
    X = equalize(batch.Y[:, 1:], H[:, None, :], counter=counter)
    return _demap(X, setup.constellation, counter), H


def dnn_bits(det: DnnDetector, batch: LinkBatch, counter: FlopCounter = NULL) -> np.ndarray:
    """Bits of the first data symbol from the per-group networks."""
    n = batch.Y.shape[0]
    for m in det.models:
        for i in range(m.n_layers):
            charge_matmul(counter, n, m.sizes[i], m.sizes[i + 1])
            counter.add("radd", n * m.sizes[i + 1])
            counter.add("act", n * m.sizes[i + 1])
    return det.detect(batch.Y[:, :2])


def dnn_outputs(det: DnnDetector, batch: LinkBatch) -> np.ndarray:
    feats = det.features(batch.Y[:, :2])
    return np.concatenate([forward(m, feats) for m in det.models], axis=-1)


def elm_bits(block: ElmBlock, hidden: int, seed: int, c: QamConstellation,
             normalize: bool = True, counter: FlopCounter = NULL) -> np.ndarray:
    """Train a fresh bank on the block's pilots and detect its data symbols.

    The hidden layer is drawn from ``seed`` and therefore identical across
    blocks; only the output weights are refit per coherence block.
    """
    bank = ElmBank.create(block.pilots_rx.shape[1], hidden, seed, normalize)
    bank.train(block.pilots_rx, block.pilots_tx, counter)
    _, bits = detect_bank(bank, block.data_rx, c, counter)
    return bits.reshape(block.data_rx.shape[0], -1)
