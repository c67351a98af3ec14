"""Per-frame operation counts and their scaling under parameter doubling."""

from __future__ import annotations

import dataclasses

from ..elm import ElmConfig
from ..neural import DnnDetector, MlpModel, input_size
from ..numerics import RngStream
from ..opcount import FlopCounter
from .config import ExperimentConfig
from .link import LinkSetup, simulate_elm_blocks, simulate_frames
from .receivers import CLASSICAL, classical_bits, dnn_bits, elm_bits

# snr at which the counted frame is simulated; counts do not depend on it
_COUNT_SNR_DB = 20.0


def _untrained_dnn(cfg: ExperimentConfig, setup: LinkSetup) -> DnnDetector:
    n_in = input_size(setup.n_c, None if setup.pattern.arrangement == "block" else setup.pattern.n_pilots)
    sizes = (n_in, *cfg.dnn.hidden, cfg.dnn.outputs)
    group = cfg.dnn.outputs // setup.bits_per_symbol
    models = [MlpModel.init(sizes, RngStream(cfg.seed, (0xF1, g))) for g in range(setup.n_c // group)]
    pidx = None if setup.pattern.arrangement == "block" else setup.pattern.pilot_indices
    return DnnDetector(models, setup.bits_per_symbol, pidx)


def count_flops(detector: str, cfg: ExperimentConfig, dnn: DnnDetector | None = None) -> FlopCounter:
    """Operations spent detecting one frame.

    For the ELM a frame is one coherence block of ``cfg.elm.pilots`` pilot
    symbols (training) plus one data symbol (detection). The DNN count
    covers inference only; weights do not affect it, so an untrained
    network of the configured shape is used when ``dnn`` is omitted.
    """
    setup = LinkSetup.from_config(cfg)
    rng = RngStream(cfg.seed, 0xF10)
    counter = FlopCounter()
    if detector in CLASSICAL:
        batch = simulate_frames(setup, 1, _COUNT_SNR_DB, rng)
        classical_bits(detector, setup, batch, counter=counter)
    elif detector == "dnn":
        batch = simulate_frames(setup, 1, _COUNT_SNR_DB, rng)
        dnn_bits(dnn or _untrained_dnn(cfg, setup), batch, counter)
    elif detector == "elm":
        (block,) = simulate_elm_blocks(setup, 1, cfg.elm.pilots, 1, _COUNT_SNR_DB, rng)
        elm_bits(block, cfg.elm.hidden, cfg.seed, setup.constellation, cfg.elm.normalize, counter)
    else:
        raise ValueError(f"unknown detector {detector!r}")
    return counter


def doubled(cfg: ExperimentConfig, axis: str) -> ExperimentConfig:
    """``cfg`` with the subcarrier count (``"n_c"``) or ELM hidden size (``"hidden"``) doubled.

    Doubling ``n_c`` keeps the pilot density, so full-pilot scenarios stay
    full-pilot.
    """
    if axis == "n_c":
        return dataclasses.replace(cfg, n_subcarriers=2 * cfg.n_subcarriers,
                                   n_pilots=2 * cfg.n_pilots)
    if axis == "hidden":
        elm = ElmConfig(2 * cfg.elm.hidden, cfg.elm.pilots, cfg.elm.data, cfg.elm.normalize)
        return dataclasses.replace(cfg, elm=elm)
    raise ValueError(f"unknown doubling axis {axis!r}")


def scaling_ratio(detector: str, cfg: ExperimentConfig, axis: str) -> float:
    """``count(doubled) / count(cfg)`` in real-flop equivalents."""
    return count_flops(detector, doubled(cfg, axis)).total / count_flops(detector, cfg).total
