"""Wall-clock timing of per-frame detection."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..elm import ElmBank, detect_bank
from ..neural import DnnDetector
from ..numerics import RngStream
from .config import ExperimentConfig
from .link import LinkSetup, simulate_elm_blocks, simulate_frames
from .receivers import CLASSICAL, classical_bits, correlation_for


@dataclass(frozen=True)
class TimingStats:
    """Per-call wall-clock statistics in milliseconds."""

    label: str
    median_ms: float
    iqr_ms: float
    repetitions: int

    @property
    def relative_iqr(self) -> float:
        return self.iqr_ms / self.median_ms


def measure(fn: Callable[[], object], repetitions: int = 50, warmup: int = 5,
            label: str = "") -> TimingStats:
    """Median and IQR of ``fn()`` over ``repetitions`` calls after ``warmup`` discarded calls."""
    if repetitions < 1:
        raise ValueError("need at least one repetition")
    for _ in range(warmup):
        fn()
    samples = np.empty(repetitions)
    for i in range(repetitions):
        t0 = time.perf_counter()
        fn()
        samples[i] = (time.perf_counter() - t0) * 1e3
    q1, med, q3 = np.percentile(samples, [25, 50, 75])
    return TimingStats(label, float(med), float(q3 - q1), repetitions)


def time_inference(detector: str, cfg: ExperimentConfig, repetitions: int = 50,
                   dnn: DnnDetector | None = None, warmup: int = 5,
                   snr_db: float = 20.0) -> dict[str, TimingStats]:
    """Per-frame detection time.

    The DNN and classical receivers process a single OFDM frame. The ELM
    frame is ``cfg.elm.pilots`` pilot symbols plus one data symbol across
    all subcarriers; its training (hidden layer plus pseudoinverse) and its
    detection are timed separately under the keys ``"train"`` and
    ``"detect"``.
    """
    setup = LinkSetup.from_config(cfg)
    rng = RngStream(cfg.seed, 0x7133)
    if detector in CLASSICAL:
        batch = simulate_frames(setup, 1, snr_db, rng)
        corr = correlation_for(setup)
        return {"detect": measure(lambda: classical_bits(detector, setup, batch, corr),
                                  repetitions, warmup, detector)}
    if detector == "dnn":
        if dnn is None:
            raise ValueError("timing the DNN requires a trained detector")
        batch = simulate_frames(setup, 1, snr_db, rng)
        return {"detect": measure(lambda: dnn.detect(batch.Y[:, :2]), repetitions, warmup, "dnn")}
    if detector == "elm":
        (block,) = simulate_elm_blocks(setup, 1, cfg.elm.pilots, 1, snr_db, rng)
        bank = ElmBank.create(setup.n_c, cfg.elm.hidden, cfg.seed, cfg.elm.normalize)
        train = measure(lambda: bank.train(block.pilots_rx, block.pilots_tx),
                        repetitions, warmup, "elm-train")
        detect = measure(lambda: detect_bank(bank, block.data_rx, setup.constellation),
                         repetitions, warmup, "elm-detect")
        return {"train": train, "detect": detect}
    raise ValueError(f"unknown detector {detector!r}")
