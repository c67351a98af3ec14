"""Monte Carlo BER/NMSE campaigns over an SNR grid.

Every SNR point and batch draws from its own stream ``(seed, tag, snr_index,
batch)``, so a run is fully determined by the configuration and seed, and
all detectors see the same received frames (common random numbers).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..estimators import nmse
from ..neural import (DnnDetector, MlpModel, append_loss_curve, input_size, load_checkpoint,
                      save_checkpoint, train)
from ..numerics import RngStream
from .config import ExperimentConfig
from .flops import count_flops
from .link import LinkSetup, dnn_training_sets, simulate_elm_blocks, simulate_frames
from .receivers import CLASSICAL, classical_bits, correlation_for, dnn_bits, elm_bits

SCHEMA = "mlofdm-metrics/1"
FIELDS = ("schema", "run_id", "scenario", "detector", "snr_db", "ber", "ber_ci95", "nmse",
          "flops", "time_ms", "trials", "bit_errors", "bits")

_FRAME_TAG = 0xCA
_ELM_TAG = 0xE1B
_ELM_BLOCKS_PER_BATCH = 10


@dataclass(frozen=True)
class MetricRecord:
    """One (scenario, detector, SNR) result row.

    ``nmse`` is NaN for detectors without an explicit channel estimate and
    ``time_ms`` is NaN unless timing was measured separately.
    """

    scenario: str
    detector: str
    snr_db: float
    ber: float
    ber_ci95: float
    nmse: float
    flops: float
    time_ms: float
    trials: int
    bit_errors: int
    bits: int
    run_id: str = ""

    def row(self) -> list[str]:
        def num(x):
            return "" if isinstance(x, float) and math.isnan(x) else repr(x)

        return [SCHEMA, self.run_id, self.scenario, self.detector, repr(float(self.snr_db)),
                repr(self.ber), repr(self.ber_ci95), num(self.nmse), num(self.flops),
                num(self.time_ms), str(self.trials), str(self.bit_errors), str(self.bits)]


def ber_ci(errors: int, n: int, z: float = 1.96) -> float:
    """Normal-approximation binomial half-width ``z sqrt(p (1 - p) / n)``."""
    if n < 1:
        raise ValueError("no bits counted")
    p = errors / n
    return float(z * math.sqrt(p * (1.0 - p) / n))


def count_errors(detected, sent) -> tuple[int, int]:
    detected = np.asarray(detected)
    sent = np.asarray(sent)
    if detected.shape != sent.shape:
        raise ValueError("detected and sent bit arrays differ in shape")
    return int(np.count_nonzero(detected != sent)), int(sent.size)


def run_id(cfg: ExperimentConfig, detectors: Sequence[str]) -> str:
    blob = json.dumps({"config": cfg.digest(), "detectors": list(detectors)}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


# --- DNN provisioning -------------------------------------------------------

def _dnn_key(cfg: ExperimentConfig) -> str:
    relevant = {k: v for k, v in cfg.to_dict().items()
                if k in ("modulation", "n_subcarriers", "n_pilots", "cp_fraction", "channel",
                         "users", "n_cpu", "total_power_mw", "pilot_seed", "dnn")}
    blob = json.dumps(relevant, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def dnn_checkpoint_path(cfg: ExperimentConfig, directory=None) -> Path:
    base = Path(directory) if directory is not None else cfg.resolved_output_dir() / "checkpoints"
    return base / f"dnn-{_dnn_key(cfg)}.npz"


def train_dnn(cfg: ExperimentConfig, directory=None, progress: Callable[[int, int, float], None] | None = None,
              reuse: bool = True) -> DnnDetector:
    """Train (or load from checkpoint) one network per subcarrier group.

    The checkpoint name hashes every setting that affects training, so a
    cached model is only reused for an identical scenario.
    """
    setup = LinkSetup.from_config(cfg)
    path = dnn_checkpoint_path(cfg, directory)
    block = setup.pattern.arrangement == "block"
    pidx = None if block else setup.pattern.pilot_indices
    if reuse and path.exists():
        models, _ = load_checkpoint(path)
        return DnnDetector(models, setup.bits_per_symbol, pidx)
    tc = cfg.dnn.train
    k = setup.bits_per_symbol
    if cfg.dnn.outputs % k or setup.n_c % (cfg.dnn.outputs // k):
        raise ValueError("DNN outputs must cover whole subcarriers and tile the symbol")
    group = cfg.dnn.outputs // k
    sizes = (input_size(setup.n_c, None if block else setup.pattern.n_pilots),
             *cfg.dnn.hidden, cfg.dnn.outputs)
    sets = dnn_training_sets(setup, tc.dataset_size, tc.snr_train_db,
                             RngStream(tc.seed, 0xDA7A), group)
    models = []
    for g, ts in enumerate(sets):
        init = MlpModel.init(sizes, RngStream(tc.seed, (0x1417, g)))
        cb = None if progress is None else (lambda e, v, g=g: progress(g, e, v))
        result = train(tc, ts, sizes, init, cb)
        append_loss_curve(path.with_suffix(".loss.csv"), result.loss_curve, f"group{g}")
        models.append(result.model)
    save_checkpoint(path, models, {"key": _dnn_key(cfg), "config": cfg.to_dict()})
    return DnnDetector(models, k, pidx)


# --- campaign ---------------------------------------------------------------

@dataclass
class _Tally:
    errors: int = 0
    bits: int = 0
    nmse_sum: float = 0.0
    nmse_count: int = 0

    def add_nmse(self, H, H_est, group: int) -> None:
        for s in range(0, H.shape[0] - group + 1, group):
            self.nmse_sum += nmse(H[s:s + group], H_est[s:s + group])
            self.nmse_count += 1


def run_campaign(cfg: ExperimentConfig, detectors: Sequence[str] | None = None,
                 dnn: DnnDetector | None = None, output: str | Path | None = None,
                 progress: Callable[[str], None] | None = None) -> list[MetricRecord]:
    """BER (and NMSE for LS/MMSE) of each detector at each SNR point.

    Classical and DNN receivers run ``cfg.trials`` independent frames per
    point; the ELM runs ``cfg.elm_trials`` coherence blocks of
    ``cfg.elm.pilots`` pilot and ``cfg.elm.data`` data symbols. Only data
    bits are counted. Rows are appended to ``output`` in one write when it
    is given.
    """
    detectors = list(detectors if detectors is not None else cfg.detectors)
    unknown = set(detectors) - set(cfg.detectors) - {"perfect"}
    if unknown:
        raise ValueError(f"detectors {sorted(unknown)} are not enabled in the config")
    if "dnn" in detectors and dnn is None:
        dnn = train_dnn(cfg)
    setup = LinkSetup.from_config(cfg)
    corr = correlation_for(setup)
    rid = run_id(cfg, detectors)
    frame_dets = [d for d in detectors if d != "elm"]
    flops = {d: count_flops(d, cfg, dnn if d == "dnn" else None).total for d in detectors}

    records: list[MetricRecord] = []
    for i, snr_db in enumerate(cfg.snr_db):
        tallies = {d: _Tally() for d in detectors}
        if frame_dets:
            n_batches = math.ceil(cfg.trials / cfg.batch_frames)
            for b in range(n_batches):
                m = min(cfg.batch_frames, cfg.trials - b * cfg.batch_frames)
                batch = simulate_frames(setup, m, snr_db, RngStream(cfg.seed, (_FRAME_TAG, i, b)))
                for d in frame_dets:
                    t = tallies[d]
                    if d == "dnn":
                        e, n = count_errors(dnn_bits(dnn, batch), batch.bits[:, :setup.bits_per_ofdm_symbol])
                    else:
                        bits, H = classical_bits(d, setup, batch, corr)
                        e, n = count_errors(bits, batch.bits)
                        if d != "perfect":
                            t.add_nmse(batch.H, H, cfg.nmse_samples)
                    t.errors += e
                    t.bits += n
        if "elm" in detectors:
            t = tallies["elm"]
            n_batches = math.ceil(cfg.elm_trials / _ELM_BLOCKS_PER_BATCH)
            for b in range(n_batches):
                m = min(_ELM_BLOCKS_PER_BATCH, cfg.elm_trials - b * _ELM_BLOCKS_PER_BATCH)
                blocks = simulate_elm_blocks(setup, m, cfg.elm.pilots, cfg.elm.data, snr_db,
                                             RngStream(cfg.seed, (_ELM_TAG, i, b)))
                for blk in blocks:
                    bits = elm_bits(blk, cfg.elm.hidden, cfg.seed, setup.constellation, cfg.elm.normalize)
                    e, n = count_errors(bits, blk.bits)
                    t.errors += e
                    t.bits += n
        for d in detectors:
            t = tallies[d]
            trials = cfg.elm_trials if d == "elm" else cfg.trials
            records.append(MetricRecord(
                cfg.scenario, d, float(snr_db), t.errors / t.bits, ber_ci(t.errors, t.bits),
                t.nmse_sum / t.nmse_count if t.nmse_count else float("nan"),
                flops[d], float("nan"), trials, t.errors, t.bits, rid))
            if progress is not None:
                progress(f"{cfg.scenario} {d} {snr_db:g} dB: BER {records[-1].ber:.4g}")
    if output is not None:
        write_records(output, records)
    return records


def write_records(path, records: Sequence[MetricRecord]) -> None:
    """Append rows (header once) with a single write call."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if not path.exists() or path.stat().st_size == 0:
        w.writerow(FIELDS)
    for r in records:
        w.writerow(r.row())
    with open(path, "a", newline="") as fh:
        fh.write(buf.getvalue())


def read_records(path) -> list[MetricRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["schema"] != SCHEMA:
                raise ValueError(f"{path}: unsupported schema {row['schema']!r}")

            def f(key):
                return float(row[key]) if row[key] else float("nan")

            out.append(MetricRecord(row["scenario"], row["detector"], float(row["snr_db"]),
                                    float(row["ber"]), float(row["ber_ci95"]), f("nmse"),
                                    f("flops"), f("time_ms"), int(row["trials"]),
                                    int(row["bit_errors"]), int(row["bits"]), row["run_id"]))
    return out


def with_timing(records: Sequence[MetricRecord], times_ms: dict[str, float]) -> list[MetricRecord]:
    """Copy of ``records`` with ``time_ms`` filled in per detector."""
    return [dataclasses.replace(r, time_ms=float(times_ms.get(r.detector, r.time_ms))) for r in records]
