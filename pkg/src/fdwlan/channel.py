"""Link budget, residual self-interference and SINR-based reception."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

NEG_INF = float("-inf")


@dataclass(frozen=True)
class ChannelParams:
    tx_power: float = 14.0  # dBm, APs and STAs alike
    pathloss_ref: float = 46.4  # dB at 1 m
    pathloss_exp: float = 3.5
    breakpoint: float = 5.0  # m; free-space (exponent 2) slope below it
    noise_floor: float = -95.0  # dBm
    beta: float = 20.0  # dB, SINR threshold
    sic_capability: float = 110.0  # dB
    rho: float = 1.0
    fading: bool = True  # Rayleigh block fading per link per attempt

    def __post_init__(self):
        if not math.isfinite(self.tx_power):
            raise ConfigError("tx_power must be finite")
        if self.pathloss_exp < 2:
            raise ConfigError(f"pathloss_exp must be >= 2, got {self.pathloss_exp}")
        if not 0 < self.rho <= 1:
            raise ConfigError(f"rho must lie in (0, 1], got {self.rho}")
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if self.sic_capability <= 0:
            raise ConfigError(f"sic_capability must be positive, got {self.sic_capability}")
        if self.breakpoint < 1:
            raise ConfigError(f"breakpoint must be >= 1 m, got {self.breakpoint}")

    @classmethod
    def ideal(cls, **overrides) -> "ChannelParams":
        """No fading, negligible noise, practically perfect cancellation."""
        base = dict(fading=False, noise_floor=-200.0, sic_capability=400.0)
        base.update(overrides)
        return cls(**base)

    def with_(self, **kw) -> "ChannelParams":
        return replace(self, **kw)

    def path_loss_db(self, distance):
        return path_loss_db(distance, self.pathloss_ref, self.pathloss_exp, self.breakpoint)

    @property
    def rsi_dbm(self) -> float:
        return residual_self_interference_dbm(self.tx_power, self.sic_capability, self.rho)


def dbm_to_mw(dbm):
    return np.power(10.0, np.asarray(dbm, dtype=float) / 10.0)


def mw_to_dbm(mw):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(mw, dtype=float))


def path_loss_db(distance, pathloss_ref: float = 46.4, pathloss_exp: float = 3.5, breakpoint: float = 1.0):
    """Log-distance path loss; distances under 1 m are clamped to 1 m.

    Below ``breakpoint`` the loss grows at the free-space slope, beyond it at
    ``pathloss_exp``. With the default breakpoint of 1 m this is the plain
    single-slope model ``ref + 10 n log10(d)``.
    """
    d = np.asarray(distance, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("distance must be positive")
    d = np.maximum(d, 1.0)
    near = np.minimum(d, breakpoint)
    pl = pathloss_ref + 20.0 * np.log10(near) + 10.0 * pathloss_exp * np.log10(d / near)
    return float(pl) if pl.ndim == 0 else pl


def draw_fading(rng: np.random.Generator, shape=None):
    """Rayleigh block fading: unit-mean exponential power gain."""
    return rng.exponential(1.0, size=shape)


def rssi_dbm(tx_power: float, distance, params: ChannelParams | None = None, gain=1.0):
    params = params or ChannelParams()
    g = np.asarray(gain, dtype=float)
    with np.errstate(divide="ignore"):
        out = tx_power - params.path_loss_db(distance) + 10.0 * np.log10(g)
    return float(out) if np.ndim(out) == 0 else out


def residual_self_interference_dbm(tx_power: float, sic_capability: float, rho: float) -> float:
    """Leftover self-interference after ``rho * sic_capability`` dB of cancellation."""
    if not 0 < rho <= 1:
        raise ConfigError(f"rho must lie in (0, 1], got {rho}")
    if sic_capability <= 0:
        raise ConfigError(f"sic_capability must be positive, got {sic_capability}")
    return tx_power - rho * sic_capability


def sinr_db(signal: float, interferer_powers=(), noise: float = -95.0, rsi: float | None = None) -> float:
    if not math.isfinite(signal):
        raise ValueError("signal power must be finite")
    denom = float(np.sum(dbm_to_mw(list(interferer_powers)))) + float(dbm_to_mw(noise))
    if rsi is not None:
        denom += float(dbm_to_mw(rsi))
    if denom == 0.0:
        return math.inf
    return signal - 10.0 * math.log10(denom)


def reception_success(sinr: float, beta: float) -> bool:
    return sinr >= beta


def rx_power_matrix(positions: np.ndarray, params: ChannelParams) -> np.ndarray:
    """Large-scale received power (dBm) from every node (row) to every node (column).

    The diagonal is -inf: a node never senses itself.
    """
    pos = np.asarray(positions, dtype=float)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, 1.0)
    p = params.tx_power - params.path_loss_db(dist)
    np.fill_diagonal(p, NEG_INF)
    return p


def resolve_links(links, rx_power_mw: np.ndarray, gains, noise_dbm: float, beta: float,
                  rsi_dbm: float | None = None, fd_nodes=None):
    """Decide every link of one slot at once.

    ``links`` is a sequence of (tx, rx). Every transmitter in ``links`` radiates
    into every receiver. ``gains[(tx, rx)]`` (or a callable) supplies the fading
    power gain of each pair; missing pairs default to 1. A receiver that is itself
    transmitting suffers ``rsi_dbm`` when it is full duplex and cannot receive
    otherwise. Returns (success flags, SINR values in dB).
    """
    txs = sorted({t for t, _ in links})
    tx_set = set(txs)
    noise_mw = float(dbm_to_mw(noise_dbm))
    rsi_mw = 0.0 if rsi_dbm is None else float(dbm_to_mw(rsi_dbm))
    get = gains if callable(gains) else (lambda t, r: gains.get((t, r), 1.0))
    ok, sinrs = [], []
    for tx, rx in links:
        sig = rx_power_mw[tx, rx] * get(tx, rx)
        interf = sum(rx_power_mw[y, rx] * get(y, rx) for y in txs if y != tx and y != rx)
        denom = interf + noise_mw
        if rx in tx_set:
            if fd_nodes is not None and rx not in fd_nodes:
                ok.append(False)
                sinrs.append(float("-inf"))
                continue
            denom += rsi_mw
        s = float("inf") if denom == 0 else (10 * np.log10(sig / denom) if sig > 0 else float("-inf"))
        sinrs.append(float(s))
        ok.append(bool(s >= beta))
    return ok, sinrs
