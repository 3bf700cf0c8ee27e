"""Simultaneous transmit-and-receive logic at the AP and its STAs.

An ECA station that has just succeeded will transmit again after exactly
``B_d`` idle slots, so the AP can arm a secondary (downlink) frame to start
together with that primary (uplink) frame:

* BFD: the secondary goes back to the full-duplex primary sender and must
  end no later than the primary;
* UFD: the secondary goes to another STA that cannot sense the primary
  (naturally, or after raising its CST) and must end exactly with the primary.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .channel import resolve_links
from .mac import Access, BackoffState, MacParams, deterministic_backoff, frame_airtime
from .sensitivity import CellEligibility, MeasurementTable

BFD = "BFD"
UFD = "UFD"


@dataclass(frozen=True)
class Capabilities:
    fd: bool = False
    eca: bool = False


@dataclass(frozen=True)
class FrameHeader:
    duration: float  # seconds, source of the NAV
    d_next: float | None = None  # airtime of the sender's next frame, in a reserved field

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("data frames carry a positive duration")


@dataclass(frozen=True)
class Secondary:
    target: int
    mode: str  # BFD | UFD
    duration: float
    start_offset: float
    payload_bits: int
    origin: str  # "bfd" | "natural" | "created"
    queue_index: int = 0  # position of the chosen packet in the AP's queue for the target


@dataclass(frozen=True)
class TransmissionPlan:
    sender: int
    receiver: int
    start: float
    duration: float
    secondary: Secondary | None = None

    def __post_init__(self):
        sec = self.secondary
        if sec is None:
            return
        end_p = self.start + self.duration
        end_s = self.start + sec.start_offset + sec.duration
        tol = 1e-12
        if sec.start_offset < -tol:
            raise ValueError("secondary cannot start before the primary")
        if sec.mode == BFD:
            if sec.target != self.sender:
                raise ValueError("a BFD secondary goes back to the primary sender")
            if end_s > end_p + tol:
                raise ValueError("a BFD secondary must end no later than the primary")
        elif sec.mode == UFD:
            if sec.target == self.sender:
                raise ValueError("a UFD secondary targets a different STA")
            if abs(end_s - end_p) > tol:
                raise ValueError("a UFD secondary must end with the primary")
        else:
            raise ValueError(f"unknown secondary mode {sec.mode!r}")

    @property
    def end(self) -> float:
        return self.start + self.duration


class PacketQueue:
    """Saturated FIFO of payload sizes (bits); refilled from ``source`` on demand."""

    def __init__(self, source, depth: int = 1):
        self._source = source
        self._q: deque[int] = deque()
        self.depth = depth
        self._fill()

    def _fill(self):
        while len(self._q) < self.depth:
            self._q.append(int(self._source()))

    def head(self) -> int:
        return self._q[0]

    def peek(self) -> list[int]:
        return list(self._q)

    def pop(self, index: int = 0) -> int:
        if index == 0:
            bits = self._q.popleft()
        else:
            bits = self._q[index]
            del self._q[index]
        self._fill()
        return bits

    def longest_fitting(self, max_airtime: float, params: MacParams):
        """(index, bits) of the longest queued payload whose airtime fits, else None."""
        best = None
        for i, bits in enumerate(self._q):
            if frame_airtime(bits, params) <= max_airtime + 1e-15:
                if best is None or bits > best[1]:
                    best = (i, bits)
        return best


def predict_next_tx(caps: Capabilities, state: BackoffState, params: MacParams) -> int | None:
    """Idle slots (after the post-success DIFS) until an ECA node's next attempt.

    ``None`` when no prediction is possible: the node is CA or its last attempt failed.
    """
    if not caps.eca or state.mode is not Access.ECA or state.last_outcome != "success":
        return None
    return deterministic_backoff(params)


def embed_next_duration(caps: Capabilities, queue: PacketQueue | None, params: MacParams) -> float | None:
    """D_next: airtime of the next queued frame (the one behind the frame being sent).

    Call after the current frame has left ``queue``; the MCS is assumed unchanged.
    """
    if not caps.eca or queue is None or not queue.peek():
        return None
    return frame_airtime(queue.head(), params)


def schedule_secondary(d_primary: float, d_secondary: float, mode: str) -> float:
    """Start offset of the secondary relative to the primary start."""
    if d_secondary > d_primary + 1e-15:
        raise ValueError(f"secondary ({d_secondary}) longer than primary ({d_primary})")
    if mode == BFD:
        return 0.0
    if mode == UFD:
        return max(d_primary - d_secondary, 0.0)
    raise ValueError(f"unknown mode {mode!r}")


def _margin(table: MeasurementTable | None, target: int, primary: int, default_cst: float) -> float:
    if table is None:
        return 0.0
    a = table.rssi_ap.get(target, float("-inf"))
    b = table.rssi_neighbor.get(target, {}).get(primary, default_cst)
    return a - b


def select_secondary(ap_fd: bool, primary: int, primary_caps: Capabilities, d_primary: float,
                     queues: dict[int, PacketQueue], eligibility: CellEligibility | None, params: MacParams,
                     adaptation: bool = True, table: MeasurementTable | None = None,
                     default_cst: float = -82.0, tie_break: str = "margin") -> Secondary | None:
    """Choose the AP's secondary frame for a predicted primary of length ``d_primary``.

    Preference: BFD to the primary sender, then a natural UFD target, then a
    created one. Within a class the longest fitting queued packet wins; ties go
    to the largest reported AP-over-primary RSSI margin (``tie_break="margin"``)
    or straight to the lowest node id (``"lowest_id"``).
    """
    if not ap_fd:
        return None

    if primary_caps.fd and primary in queues:
        fit = queues[primary].longest_fitting(d_primary, params)
        if fit is not None:
            d_s = frame_airtime(fit[1], params)
            return Secondary(primary, BFD, d_s, schedule_secondary(d_primary, d_s, BFD), fit[1], "bfd", fit[0])

    if eligibility is None:
        return None
    classes = [("natural", eligibility.natural.get(primary, []))]
    if adaptation:
        classes.append(("created", sorted(eligibility.created.get(primary, {}))))
    for origin, targets in classes:
        best = None
        for t in targets:
            q = queues.get(t)
            if q is None:
                continue
            fit = q.longest_fitting(d_primary, params)
            if fit is None:
                continue
            m = _margin(table, t, primary, default_cst) if tie_break == "margin" else 0.0
            key = (fit[1], m, -t)
            if best is None or key > best[0]:
                best = (key, t, fit)
        if best is not None:
            _, t, (idx, bits) = best
            d_s = frame_airtime(bits, params)
            return Secondary(t, UFD, d_s, schedule_secondary(d_primary, d_s, UFD), bits, origin, idx)
    return None


def resolve_str_outcome(plan: TransmissionPlan, ap: int, rx_power_mw: np.ndarray, gains, noise_dbm: float,
                        beta: float, rsi_dbm: float | None, other_transmitters=(), fd_nodes=None):
    """Per-link success of a plan (primary, and secondary if any) amid other transmitters.

    Carrier-sense adaptation plays no part here: the primary's energy always
    reaches the secondary target.
    """
    links = [(plan.sender, plan.receiver)]
    if plan.secondary is not None:
        links.append((ap, plan.secondary.target))
    # other cells' transmitters only contribute interference; give them dummy self-links
    extra = [(t, t) for t in other_transmitters]
    ok, sinrs = resolve_links(links + extra, rx_power_mw, gains, noise_dbm, beta, rsi_dbm, fd_nodes)
    primary_ok = ok[0]
    secondary_ok = ok[1] if plan.secondary is not None else None
    return primary_ok, secondary_ok, sinrs[: len(links)]
