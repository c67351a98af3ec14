"""SINR evaluation and greedy per-user subcarrier selection.

Users are numbered from 1. Primary users ``1 .. n_c // n_cpu`` own disjoint
contiguous blocks of ``n_cpu`` subcarriers; any further user ``base + i``
is overlaid on primary user ``i``'s block, so at most two users ever share
a subcarrier.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class AllocationState:
    """Who transmits where, who interferes with whom, and what was selected.

    ``allocations[u]`` are the subcarriers (0-based) of user ``u``;
    ``interferers[u]`` is the set of users sharing those subcarriers;
    ``selected[u]`` holds the ``n_cpu_eq`` chosen subcarriers once
    :func:`select_subcarriers` has run.
    """

    n_c: int
    n_cpu: int
    n_cpu_eq: int
    allocations: dict[int, np.ndarray]
    interferers: dict[int, frozenset[int]]
    selected: dict[int, np.ndarray] = field(default_factory=dict)
    sinr_values: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def users(self) -> list[int]:
        return sorted(self.allocations)

    @property
    def overlay_users(self) -> frozenset[int]:
        base = self.n_c // self.n_cpu
        return frozenset(u for u in self.users if u > base)

    @property
    def primary_users(self) -> list[int]:
        """Users outside every interferer set (the outer loop of the selection)."""
        return [u for u in self.users if u not in self.overlay_users]

    def occupancy(self) -> np.ndarray:
        occ = np.zeros(self.n_c, dtype=int)
        for ks in self.allocations.values():
            occ[ks] += 1
        return occ


def build_interference_map(n_users: int, n_c: int = 64, n_cpu: int = 16,
                           n_cpu_eq: int = 4) -> AllocationState:
    """Contiguous blocks for the primary users, pairwise overlay for the rest."""
    if n_cpu < 1 or n_c % n_cpu:
        raise ValueError("n_cpu must divide n_c")
    if n_cpu_eq > n_cpu:
        raise ValueError("n_cpu_eq cannot exceed n_cpu")
    base = n_c // n_cpu
    if not 1 <= n_users <= 2 * base:
        raise ValueError(f"{n_users} users do not fit {n_c} subcarriers at 2 users per subcarrier")
    alloc, inter = {}, {}
    for u in range(1, n_users + 1):
        block = (u - 1) % base
        alloc[u] = np.arange(block * n_cpu, (block + 1) * n_cpu)
    for u in range(1, n_users + 1):
        partner = u + base if u <= base else u - base
        inter[u] = frozenset({partner}) if partner in alloc else frozenset()
    return AllocationState(n_c, n_cpu, n_cpu_eq, alloc, inter)


def sinr(u: int, k: int, channels, powers, sigma2: float,
         interferers: frozenset[int] | set[int] = frozenset()) -> float:
    """``P_u |H_u(k)|^2 / (sum_{j in J_u} P_j |H_j(k)|^2 + sigma2)``.

    ``channels`` is indexed ``[user - 1, k]`` (complex responses) and
    ``powers`` ``[user - 1]``.
    """
    if not sigma2 > 0:
        raise ValueError("noise power must be positive")
    H = np.asarray(channels)
    P = np.asarray(powers, dtype=float)
    num = P[u - 1] * abs(H[u - 1, k]) ** 2
    den = sigma2 + sum(P[j - 1] * abs(H[j - 1, k]) ** 2 for j in interferers)
    return float(num / den)


def user_sinrs(state: AllocationState, u: int, channels, powers, sigma2: float) -> np.ndarray:
    """SINR on every subcarrier of user ``u``'s allocation (vectorised)."""
    if not sigma2 > 0:
        raise ValueError("noise power must be positive")
    H2 = np.abs(np.asarray(channels)) ** 2
    P = np.asarray(powers, dtype=float)
    ks = state.allocations[u]
    interf = sum((P[j - 1] * H2[j - 1, ks] for j in state.interferers[u]), np.zeros(ks.size))
    return P[u - 1] * H2[u - 1, ks] / (interf + sigma2)


def select_subcarriers(state: AllocationState, channels, sigma2: float,
                       powers=None) -> AllocationState:
    """Keep each primary user's ``n_cpu_eq`` highest-SINR subcarriers.

    Sorting is descending in SINR with ties resolved toward the lower
    subcarrier index. ``powers`` defaults to equal power for every user.
    """
    if state.n_cpu_eq > state.n_cpu:
        raise ValueError("n_cpu_eq cannot exceed n_cpu")
    H = np.asarray(channels)
    P = np.ones(H.shape[0]) if powers is None else np.asarray(powers, dtype=float)
    selected, values = {}, {}
    for u in state.primary_users:
        ks = state.allocations[u]
        s = user_sinrs(state, u, H, P, sigma2)
        order = np.lexsort((ks, -s))
        selected[u] = ks[order[: state.n_cpu_eq]]
        values[u] = s
    return replace(state, selected=selected, sinr_values=values)


def write_selection_csv(path, state: AllocationState, block: int) -> None:
    """Append ``block, user, subcarrier, sinr, selected`` rows."""
    path = Path(path)
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(["block", "user", "subcarrier", "sinr", "selected"])
        for u in sorted(state.selected):
            chosen = set(state.selected[u].tolist())
            for k, s in zip(state.allocations[u], state.sinr_values[u]):
                w.writerow([block, u, int(k), repr(float(s)), int(k in chosen)])
