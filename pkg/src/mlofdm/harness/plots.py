"""BER-vs-SNR plots rendered deterministically to SVG."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .campaign import MetricRecord  # noqa: E402
from .theory import theoretical_ber_db  # noqa: E402

_RC = {"svg.hashsalt": "mlofdm", "svg.fonttype": "path"}
_STYLE = {"perfect": "k:", "ls": "s-", "mmse": "o-", "dnn": "^-", "elm": "d-"}


def curves(records: Sequence[MetricRecord]) -> dict[str, dict[str, tuple[np.ndarray, np.ndarray]]]:
    """``scenario -> detector -> (snr_db, ber)`` sorted by SNR."""
    grouped: dict = defaultdict(lambda: defaultdict(list))
    for r in records:
        grouped[r.scenario][r.detector].append((r.snr_db, r.ber))
    out = {}
    for scen, dets in grouped.items():
        out[scen] = {}
        for det, pts in sorted(dets.items()):
            pts.sort()
            out[scen][det] = (np.array([p[0] for p in pts]), np.array([p[1] for p in pts]))
    return out


def ber_figure(scenario: str, dets: dict[str, tuple[np.ndarray, np.ndarray]], order: int = 4):
    """Figure with one BER curve per detector over the closed-form reference.

    Each line carries the SVG id ``curve-<detector>`` (``curve-theory`` for
    the reference), so rendered files can be inspected.
    """
    fig, ax = plt.subplots(figsize=(6, 4.5))
    grid = np.unique(np.concatenate([snr for snr, _ in dets.values()]))
    ax.semilogy(grid, theoretical_ber_db(grid, order), "k--", label="theory", gid="curve-theory")
    for det, (snr, ber) in dets.items():
        shown = np.where(ber > 0, ber, np.nan)
        ax.semilogy(snr, shown, _STYLE.get(det, "x-"), label=det, fillstyle="none", gid=f"curve-{det}")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("BER")
    ax.set_title(scenario)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    return fig


def emit_plots(records: Sequence[MetricRecord], directory, order: int = 4) -> list[Path]:
    """One log-scale SVG per scenario with every detector and the theory overlay."""
    if not records:
        raise ValueError("no records to plot")
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    with plt.rc_context(_RC):
        for scen, dets in sorted(curves(records).items()):
            fig = ber_figure(scen, dets, order)
            path = out_dir / f"ber_{scen}.svg"
            fig.savefig(path, format="svg", metadata={"Date": None})
            plt.close(fig)
            paths.append(path)
    return paths
