"""Neighbour measurement reports, UFD eligibility and carrier-sense threshold adaptation.

The AP builds a :class:`MeasurementTable` from link reports (RSSI of the AP at
each STA, ``A``) and frame reports (RSSI of each audible neighbour, ``B``).
A STA that cannot hear the primary transmitter at all is a *natural* UFD
target. A STA that hears it, but whose AP is at least ``C`` dB louder, can be
made deaf to the primary by raising its threshold to ``min(B + C, A)``; such
targets are *created*.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_CST = -82.0


@dataclass
class MeasurementTable:
    rssi_ap: dict[int, float]  # A_i
    rssi_neighbor: dict[int, dict[int, float]]  # B_{i,j}, only neighbours heard at or above the default CST
    tolerance: float = 5.0  # C, dB

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")

    @property
    def stations(self) -> list[int]:
        return sorted(self.rssi_ap)

    def hears(self, node: int, neighbor: int) -> bool:
        return neighbor in self.rssi_neighbor.get(node, {})

    def rows(self):
        """(node, A, neighbour, B, C, max CST) rows in the layout of the AP's audit table."""
        out = []
        for i in self.stations:
            a = self.rssi_ap[i]
            for j, b in sorted(self.rssi_neighbor.get(i, {}).items()):
                out.append((i, a, j, b, self.tolerance, max_cst(a, b, self.tolerance)))
        return out

    def dump(self, fh, cell: int | None = None) -> None:
        for node, a, nb, b, c, m in self.rows():
            prefix = "" if cell is None else f"{cell}\t"
            fh.write(f"{prefix}{node}\t{a:.2f}\t{nb}\t{b:.2f}\t{c:.2f}\t{m:.2f}\n")


@dataclass
class CstState:
    default_cst: float = DEFAULT_CST
    current_cst: float = DEFAULT_CST
    revert_at: float | None = None

    def revert_if_due(self, now: float) -> None:
        if self.revert_at is not None and now >= self.revert_at:
            self.current_cst = self.default_cst
            self.revert_at = None


def collect_reports(rx_power: np.ndarray, ap: int, stations, tolerance: float = 5.0,
                    default_cst: float = DEFAULT_CST) -> MeasurementTable:
    """Build one cell's table from large-scale received powers (no fading).

    ``rx_power[i, j]`` is the power node ``j`` receives from node ``i``.
    """
    stations = [int(s) for s in stations]
    rssi_ap = {s: float(rx_power[ap, s]) for s in stations}
    neigh: dict[int, dict[int, float]] = {}
    for s in stations:
        heard = {}
        for j in stations:
            if j != s and rx_power[j, s] >= default_cst:
                heard[j] = float(rx_power[j, s])
        neigh[s] = heard
    return MeasurementTable(rssi_ap, neigh, tolerance)


def natural_eligible_pairs(table: MeasurementTable, default_cst: float = DEFAULT_CST) -> set[tuple[int, int]]:
    """Ordered (primary, secondary target) pairs where the target cannot sense the primary."""
    pairs = set()
    for s in table.stations:
        heard = table.rssi_neighbor.get(s, {})
        for p in table.stations:
            if p == s:
                continue
            b = heard.get(p)
            if b is None or b < default_cst:
                pairs.add((p, s))
    return pairs


def max_cst(a: float, b: float, c: float) -> float:
    if not c > 0:
        raise ValueError("tolerance must be positive")
    return min(b + c, a)


def created_eligible_targets(table: MeasurementTable, primary: int, capable=None) -> dict[int, float]:
    """Targets that can be made deaf to ``primary`` while still hearing the AP.

    Returns ``{target: adapted CST}``. A target qualifies iff ``B + C <= A``;
    ``capable`` optionally restricts targets to nodes able to adapt (ECA nodes).
    """
    out = {}
    c = table.tolerance
    for t in table.stations:
        if t == primary or (capable is not None and t not in capable):
            continue
        b = table.rssi_neighbor.get(t, {}).get(primary)
        if b is None:
            continue
        a = table.rssi_ap[t]
        if b + c <= a:
            out[t] = max_cst(a, b, c)
    return out


def apply_and_revert(states: dict[int, CstState], adapted: dict[int, float], t_start: float, t_end: float,
                     capable=None) -> dict[int, CstState]:
    """Raise thresholds of the adapted targets for the primary's interval [t_start, t_end).

    A node already adapted keeps the larger threshold and the earlier revert time.
    Nodes outside ``capable`` are left untouched.
    """
    for node, cst in adapted.items():
        if capable is not None and node not in capable:
            continue
        st = states.setdefault(node, CstState())
        if st.revert_at is not None:
            st.current_cst = max(st.current_cst, cst)
            st.revert_at = min(st.revert_at, t_end)
        else:
            st.current_cst = max(st.default_cst, cst)
            st.revert_at = t_end
    return states


def revert_all(states: dict[int, CstState], now: float) -> None:
    for st in states.values():
        st.revert_if_due(now)


@dataclass
class CellEligibility:
    """Per-primary secondary-target sets for one cell, precomputed once per drop."""

    natural: dict[int, list[int]] = field(default_factory=dict)
    created: dict[int, dict[int, float]] = field(default_factory=dict)

    @classmethod
    def build(cls, table: MeasurementTable, eca_nodes, default_cst: float = DEFAULT_CST):
        nat: dict[int, list[int]] = {p: [] for p in table.stations}
        for p, s in sorted(natural_eligible_pairs(table, default_cst)):
            nat[p].append(s)
        eca = set(eca_nodes)
        created = {p: created_eligible_targets(table, p, capable=eca) for p in table.stations}
        return cls(nat, created)
