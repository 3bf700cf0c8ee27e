"""Slot-synchronous multi-cell simulation of legacy and STR operation.

Time advances in global contention slots. A slot is empty (``slot_time``)
when no node's counter has expired; otherwise every expired node transmits
and the slot lasts as long as the longest frame exchange in it
(frame + SIFS + ACK + DIFS; a failed exchange waits out its ACK timeout, which
is the same length).

Backoff counting follows one of two rules. With ``slot_counting="virtual"``
(default) every contention slot, empty or busy, is one backoff step: a
counter is frozen through the busy airtime and steps once at the slot
boundary that closes the DIFS. With ``"freeze"`` only slots a node observes
as idle count; nodes that sense any frame of the slot (data, secondary or
ACK) at or above their current CST do not decrement.

All internal times are integer nanoseconds so slot accounting is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from .config import SimConfig
from .duplex import BFD, Capabilities, PacketQueue, select_secondary
from .mac import Access, BackoffState, deterministic_backoff, frame_airtime, on_outcome, random_backoff, to_ns
from .metrics import GainSample, str_gain
from .sensitivity import CellEligibility, collect_reports
from .topology import Topology, generate_hex_grid, place_stations

COUNTER_KEYS = (
    "primary_attempts", "primary_ok", "uplink_ok", "downlink_ok", "collisions", "sinr_failures",
    "predicted", "predicted_with_created", "lost_opportunities", "no_secondary",
    "bfd_attempts", "bfd_ok", "ufd_natural_attempts", "ufd_natural_ok",
    "ufd_created_attempts", "ufd_created_ok", "busy_slots",
)


@dataclass
class SimResult:
    delivered_bits: np.ndarray  # per sending node
    primary_bits: int
    secondary_bits: int
    elapsed_ns: int
    empty_slots: int
    busy_ns: int
    slot_ns: int
    counters: dict = field(default_factory=dict)
    n_cells: int = 1
    data_rate: float = 54e6

    @property
    def elapsed(self) -> float:
        return self.elapsed_ns * 1e-9

    @property
    def total_bits(self) -> int:
        return self.primary_bits + self.secondary_bits

    def check_conservation(self) -> None:
        if self.elapsed_ns != self.empty_slots * self.slot_ns + self.busy_ns:
            raise AssertionError("virtual time is not the sum of its slots")
        # at most two concurrent frames per cell at the data rate
        if self.total_bits > 2 * self.n_cells * self.data_rate * self.elapsed + 1e-6:
            raise AssertionError("delivered more bits than the airtime allows")


@dataclass
class Drop:
    """Everything fixed for one Monte Carlo drop: geometry, capabilities, reports."""

    topology: Topology
    cell_of: np.ndarray
    ap_of_cell: np.ndarray
    stas_of_cell: list[list[int]]
    is_ap: np.ndarray
    eca: np.ndarray
    fd: np.ndarray
    rx_dbm: np.ndarray
    rx_mw: np.ndarray
    tables: list
    eligibility: list[CellEligibility]

    def caps(self, n: int) -> Capabilities:
        return Capabilities(fd=bool(self.fd[n]), eca=bool(self.eca[n]))


def _streams(seed: int):
    ss = np.random.SeedSequence(int(seed) & ((1 << 64) - 1))
    return [np.random.default_rng(s) for s in ss.spawn(6)]


def _assign(rng, n: int, frac: float) -> np.ndarray:
    order = rng.permutation(n)
    k = int(math.floor(frac * n + 1e-9))
    flag = np.zeros(n, dtype=bool)
    flag[order[:k]] = True
    return flag


def build_drop(cfg: SimConfig, seed: int) -> Drop:
    rng_topo, rng_caps = _streams(seed)[:2]
    grid = generate_hex_grid(cfg.rings, cfg.cell_radius, cfg.ap_spacing)
    topo = place_stations(grid, cfg.n_per_cell, cfg.cell_radius, rng_topo)
    n_cells = topo.n_cells
    cell_of = topo.cells()
    n = len(cell_of)
    is_ap = np.zeros(n, dtype=bool)
    is_ap[:n_cells] = True
    stas_of_cell = [[] for _ in range(n_cells)]
    for node in range(n_cells, n):
        stas_of_cell[cell_of[node]].append(node)

    eca = np.zeros(n, dtype=bool)
    fd = np.zeros(n, dtype=bool)
    fd[:n_cells] = True  # every AP is full duplex; APs contend with CA
    for c in range(n_cells):
        stas = np.array(stas_of_cell[c])
        # two independent orderings, so the ECA set is nested across lambda_eca values
        eca[stas] = _assign(rng_caps, len(stas), cfg.lambda_eca)
        fd[stas] = _assign(rng_caps, len(stas), cfg.lambda_fd)

    rx_dbm = ch.rx_power_matrix(topo.positions(), cfg.channel)
    rx_mw = ch.dbm_to_mw(rx_dbm)
    tables, elig = [], []
    for c in range(n_cells):
        t = collect_reports(rx_dbm, c, stas_of_cell[c], cfg.tolerance, cfg.default_cst)
        tables.append(t)
        elig.append(CellEligibility.build(t, [s for s in stas_of_cell[c] if eca[s]], cfg.default_cst))
    return Drop(topo, cell_of, np.arange(n_cells), stas_of_cell, is_ap, eca, fd, rx_dbm, rx_mw, tables, elig)


def ridable_destinations(drop: Drop, cell: int, adaptation: bool) -> set[int]:
    """STAs whose downlink can travel as a secondary frame in STR mode.

    BFD covers FD+ECA STAs. UFD happens only on predicted primaries from
    ECA STAs that are half duplex (an FD primary always gets BFD instead).
    """
    out = set()
    el = drop.eligibility[cell]
    stas = drop.stas_of_cell[cell]
    for s in stas:
        if drop.fd[s] and drop.eca[s]:
            out.add(s)
    for p in stas:
        if not drop.eca[p] or drop.fd[p]:
            continue
        out.update(el.natural.get(p, []))
        if adaptation:
            out.update(el.created.get(p, {}))
    return out


class _Sim:
    def __init__(self, cfg: SimConfig, seed: int, drop: Drop | None = None, trace=None, slot_log=None):
        self.cfg = cfg
        self.mac = cfg.mac
        self.chp = cfg.channel
        streams = _streams(seed)
        self.rng_backoff, self.rng_fade, self.rng_fade2, rng_traffic = streams[2:]
        self.drop = drop if drop is not None else build_drop(cfg, seed)
        self.trace = trace
        self.slot_log = slot_log
        self.str_mode = cfg.mode == "str"

        d = self.drop
        n = len(d.cell_of)
        self.n = n
        self.n_cells = len(d.ap_of_cell)

        mac = self.mac
        if cfg.payload_min is None:
            fixed = mac.payload_bits
            source = lambda: fixed  # noqa: E731
            depth = 1
        else:
            lo, hi = cfg.payload_min, mac.payload
            source = lambda: 8 * int(rng_traffic.integers(lo, hi + 1))  # noqa: E731
            depth = 4
        self.up_q = {s: PacketQueue(source, depth) for s in range(self.n_cells, n)}
        self.down_q = [{s: PacketQueue(source, depth) for s in d.stas_of_cell[c]} for c in range(self.n_cells)]

        # Downlink the AP contends for. Ridable traffic never contends, in either
        # mode, so both runs of a pair share one primary schedule and STR only adds.
        self.down_dest = []
        for c in range(self.n_cells):
            stas = d.stas_of_cell[c]
            if not cfg.downlink:
                dest = []
            else:
                ride = ridable_destinations(d, c, cfg.adaptation)
                dest = [s for s in stas if s not in ride]
            self.down_dest.append(dest)
        self.down_ptr = [0] * self.n_cells

        self.active = np.ones(n, dtype=bool)
        for c in range(self.n_cells):
            self.active[c] = bool(self.down_dest[c])
        self.act_idx = np.flatnonzero(self.active)

        self.stage = np.zeros(n, dtype=np.int64)
        self.counter = np.zeros(n, dtype=np.int64)
        self.armed = np.zeros(n, dtype=bool)
        self.last_outcome = ["none"] * n
        for node in self.act_idx:
            self.counter[node] = random_backoff(0, mac, self.rng_backoff)

        self.cst = np.full(n, cfg.default_cst)
        self.slot_ns = to_ns(mac.slot_time)
        self.tail_ns = to_ns(mac.sifs) + to_ns(mac.ack_time) + to_ns(mac.difs)
        self._air_ns: dict[int, int] = {}
        self.noise_mw = float(ch.dbm_to_mw(self.chp.noise_floor))
        self.rsi_mw = float(ch.dbm_to_mw(self.chp.rsi_dbm))

        self.delivered = np.zeros(n, dtype=np.int64)
        self.primary_bits = 0
        self.secondary_bits = 0
        self.counters = dict.fromkeys(COUNTER_KEYS, 0)

    def air_ns(self, bits: int) -> int:
        v = self._air_ns.get(bits)
        if v is None:
            v = self._air_ns[bits] = to_ns(frame_airtime(bits, self.mac))
        return v

    def _downlink_target(self, c: int) -> int:
        dest = self.down_dest[c]
        return dest[self.down_ptr[c] % len(dest)]

    def _gains(self, rng, shape):
        if self.chp.fading:
            return ch.draw_fading(rng, shape)
        return np.ones(shape)

    def run(self) -> SimResult:
        cfg, mac, d = self.cfg, self.mac, self.drop
        dur_ns = to_ns(cfg.sim_duration)
        elapsed = 0
        empty = 0
        busy_ns = 0
        slot_ns = self.slot_ns
        counter = self.counter
        act_idx = self.act_idx
        cnt = self.counters
        beta = self.chp.beta
        bd = deterministic_backoff(mac)
        rx_dbm, rx_mw = d.rx_dbm, d.rx_mw
        cell_of = d.cell_of
        is_ap = d.is_ap
        slot_index = 0
        virtual = cfg.slot_counting == "virtual"

        if len(act_idx) == 0:
            dur_ns = 0
        while elapsed < dur_ns:
            cur = counter[act_idx]
            k = int(cur.min())
            if k > 0:
                k = min(k, -(-(dur_ns - elapsed) // slot_ns))
                counter[act_idx] -= k
                elapsed += k * slot_ns
                empty += k
                if self.slot_log is not None:
                    self.slot_log.append((slot_index, "E", k))
                slot_index += k
                continue

            tx_nodes = act_idx[cur == 0]
            by_cell: dict[int, list[int]] = {}
            for node in tx_nodes:
                by_cell.setdefault(int(cell_of[node]), []).append(int(node))

            prim = {}  # cell -> (tx, rx, bits)
            sec = {}  # cell -> Secondary
            adapted: list[int] = []
            max_air = 0
            for c, txs in by_cell.items():
                for node in txs:
                    if is_ap[node]:
                        rx = self._downlink_target(c)
                        bits = self.down_q[c][rx].head()
                    else:
                        rx = c
                        bits = self.up_q[node].head()
                    max_air = max(max_air, self.air_ns(bits))
                    if len(txs) == 1:
                        prim[c] = (node, rx, bits)
                if not self.str_mode:
                    continue
                for node in txs:
                    if not self.armed[node]:
                        continue
                    el = d.eligibility[c]
                    created = el.created.get(node, {})
                    cnt["predicted"] += 1
                    if created:
                        cnt["predicted_with_created"] += 1
                    if len(txs) > 1:
                        cnt["lost_opportunities"] += 1
                        continue
                    bits = prim[c][2]
                    d_p = frame_airtime(bits, mac)
                    choice = select_secondary(
                        True, node, d.caps(node), d_p, self.down_q[c], el, mac,
                        adaptation=cfg.adaptation, table=d.tables[c], default_cst=cfg.default_cst,
                        tie_break=cfg.tie_break,
                    )
                    if choice is None:
                        cnt["no_secondary"] += 1
                        continue
                    sec[c] = choice
                    if choice.origin == "created":
                        # the target turns deaf to the primary for this slot; max CST on overlap
                        t = choice.target
                        self.cst[t] = max(self.cst[t], created[t])
                        adapted.append(t)

            # SINR for every frame that can still succeed
            p_cells = sorted(prim)
            p_tx = sorted(int(x) for x in tx_nodes)
            p_rx = sorted({prim[c][1] for c in p_cells})
            s_tx = sorted(sec)
            s_rx = sorted({sec[c].target for c in s_tx})
            rows = p_tx + s_tx
            cols = p_rx + s_rx
            ok_primary = {}
            ok_secondary = {}
            if cols:
                g = np.empty((len(rows), len(cols)))
                g[: len(p_tx), : len(p_rx)] = self._gains(self.rng_fade, (len(p_tx), len(p_rx)))
                if s_tx or s_rx:
                    g[len(p_tx):, : len(p_rx)] = self._gains(self.rng_fade2, (len(s_tx), len(p_rx)))
                    g[:, len(p_rx):] = self._gains(self.rng_fade2, (len(rows), len(s_rx)))
                pw = rx_mw[np.ix_(rows, cols)] * g
                total = pw.sum(axis=0)
                row_of = {r: i for i, r in enumerate(rows)}
                radiating_set = set(rows)

                def decide(tx, rx, j):
                    sig = pw[row_of[tx], j]
                    denom = total[j] - sig + self.noise_mw
                    if rx in radiating_set:
                        if not d.fd[rx]:
                            return False
                        denom += self.rsi_mw
                    return sig >= denom * 10 ** (beta / 10)

                col_p = {r: j for j, r in enumerate(p_rx)}
                for c in p_cells:
                    tx, rx, _ = prim[c]
                    ok_primary[c] = decide(tx, rx, col_p[rx])
                col_s = {r: len(p_rx) + j for j, r in enumerate(s_rx)}
                for c in s_tx:
                    ok_secondary[c] = decide(c, sec[c].target, col_s[sec[c].target])

            # Carrier sensing over the whole exchange: data frames, secondaries and
            # the ACKs of frames that got through. Whoever senses none of it counts
            # the slot as idle.
            acks = [prim[c][1] for c in p_cells if ok_primary[c]]
            acks += [sec[c].target for c in s_tx if ok_secondary[c]]
            radiating = p_tx + s_tx  # secondary senders are the cell APs
            sense = rx_dbm[radiating + acks].max(axis=0) >= self.cst
            sense[radiating] = True
            if virtual:
                idle = act_idx[counter[act_idx] > 0]
            else:
                idle = act_idx[~sense[act_idx]]
            counter[idle] -= 1
            if adapted:
                self.cst[adapted] = cfg.default_cst

            # MAC outcomes, in node order so backoff draws are reproducible
            cnt["busy_slots"] += 1
            for node in p_tx:
                c = int(cell_of[node])
                cnt["primary_attempts"] += 1
                success = ok_primary.get(c, False) if c in prim else False
                if c not in prim and node == min(by_cell[c]):
                    cnt["collisions"] += 1
                elif c in prim and not success:
                    cnt["sinr_failures"] += 1
                mode = Access.ECA if d.eca[node] and not is_ap[node] else Access.CA
                st = on_outcome(BackoffState(mode, int(self.stage[node]), 0), "success" if success else "collision",
                                mac, self.rng_backoff)
                self.stage[node] = st.stage
                counter[node] = st.counter
                self.last_outcome[node] = st.last_outcome
                self.armed[node] = self.str_mode and success and mode is Access.ECA
                if success:
                    _, rx, bits = prim[c]
                    if is_ap[node]:
                        self.down_q[c][rx].pop()
                        self.down_ptr[c] += 1
                        cnt["downlink_ok"] += 1
                    else:
                        self.up_q[node].pop()
                        cnt["uplink_ok"] += 1
                    cnt["primary_ok"] += 1
                    self.delivered[node] += bits
                    self.primary_bits += bits

            for c in s_tx:
                s = sec[c]
                key = "bfd" if s.mode == BFD else f"ufd_{s.origin}"
                cnt[f"{key}_attempts"] += 1
                if ok_secondary[c]:
                    cnt[f"{key}_ok"] += 1
                    self.down_q[c][s.target].pop(s.queue_index)
                    self.delivered[c] += s.payload_bits
                    self.secondary_bits += s.payload_bits

            if self.trace is not None:
                for c, txs in sorted(by_cell.items()):
                    s = sec.get(c)
                    self.trace.append((
                        elapsed, c, ";".join(map(str, txs)),
                        prim[c][1] if c in prim else "",
                        "success" if ok_primary.get(c) else ("collision" if len(txs) > 1 else "failed"),
                        s.mode if s else "", s.origin if s else "", s.target if s else "",
                        "" if s is None else int(bool(ok_secondary[c])),
                    ))
            if self.slot_log is not None:
                self.slot_log.append((slot_index, "B", tuple(int(x) for x in p_tx)))
            slot_index += 1

            dur = max_air + self.tail_ns
            elapsed += dur
            busy_ns += dur

        self.counter = counter
        res = SimResult(
            delivered_bits=self.delivered.copy(), primary_bits=int(self.primary_bits),
            secondary_bits=int(self.secondary_bits), elapsed_ns=int(elapsed), empty_slots=int(empty),
            busy_ns=int(busy_ns), slot_ns=slot_ns, counters=dict(cnt), n_cells=self.n_cells,
            data_rate=mac.data_rate,
        )
        return res


def run(cfg: SimConfig, seed: int | None = None, drop: Drop | None = None, trace=None, slot_log=None) -> SimResult:
    """One simulation of ``cfg``; a deterministic function of (cfg, seed)."""
    seed = cfg.seed if seed is None else seed
    return _Sim(cfg, seed, drop, trace, slot_log).run()


def run_paired(cfg: SimConfig, seed: int | None = None, trace=None) -> tuple[SimResult, SimResult]:
    """Legacy baseline and ``cfg.mode`` run on the same drop and random streams."""
    seed = cfg.seed if seed is None else seed
    drop = build_drop(cfg, seed)
    legacy = run(cfg.with_(mode="legacy"), seed, drop)
    other = run(cfg, seed, drop, trace=trace)
    return legacy, other


@dataclass
class MonteCarloResult:
    samples: list[GainSample]
    legacy: list[SimResult]
    str_results: list[SimResult]

    @property
    def thetas(self) -> list[float]:
        return [s.theta for s in self.samples]

    def totals(self) -> dict:
        out = dict.fromkeys(COUNTER_KEYS, 0)
        for r in self.str_results:
            for k, v in r.counters.items():
                out[k] += v
        return out


def monte_carlo(cfg: SimConfig, n_drops: int, base_seed: int | None = None, seeds=None) -> MonteCarloResult:
    """Independent drops with seeds ``base_seed + i`` (or explicit ``seeds``)."""
    if n_drops < 1:
        raise ValueError("n_drops must be >= 1")
    base_seed = cfg.seed if base_seed is None else base_seed
    seeds = list(seeds) if seeds is not None else [base_seed + i for i in range(n_drops)]
    samples, leg, strs = [], [], []
    for i, s in enumerate(seeds[:n_drops]):
        a, b = run_paired(cfg, s)
        samples.append(str_gain(a, b, drop_id=i))
        leg.append(a)
        strs.append(b)
    return MonteCarloResult(samples, leg, strs)
