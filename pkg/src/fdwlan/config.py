"""Simulation configuration and its flat key/value representation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .channel import ChannelParams
from .errors import ConfigError
from .mac import MacParams

CHANNEL_KEYS = {f.name for f in fields(ChannelParams)}
MAC_KEYS = {f.name for f in fields(MacParams)}


@dataclass(frozen=True)
class SimConfig:
    rings: int = 2
    cell_radius: float = 35.0
    n_per_cell: int = 15
    ap_spacing: float | None = None  # default sqrt(3) * cell_radius
    channel: ChannelParams = field(default_factory=ChannelParams)
    mac: MacParams = field(default_factory=MacParams)
    lambda_eca: float = 1.0
    lambda_fd: float = 1.0
    tolerance: float = 5.0  # C, dB
    default_cst: float = -82.0
    mode: str = "str"  # "legacy" | "str"
    adaptation: bool = True
    downlink: bool = True  # AP carries saturated downlink traffic
    payload_min: int | None = None  # bytes; uniform payloads in [payload_min, payload] when set
    tie_break: str = "margin"
    slot_counting: str = "virtual"  # "virtual" | "freeze"
    sim_duration: float = 2.0  # virtual seconds
    seed: int = 0

    def __post_init__(self):
        if self.rings not in (0, 1, 2):
            raise ConfigError(f"rings: must be 0, 1 or 2, got {self.rings!r}")
        if not self.cell_radius > 0:
            raise ConfigError(f"cell_radius: must be positive, got {self.cell_radius!r}")
        if self.n_per_cell < 1:
            raise ConfigError(f"n_per_cell: must be >= 1, got {self.n_per_cell!r}")
        for name in ("lambda_eca", "lambda_fd"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}: must lie in [0, 1], got {v!r}")
        if not self.tolerance > 0:
            raise ConfigError(f"tolerance: must be positive, got {self.tolerance!r}")
        if self.mode not in ("legacy", "str"):
            raise ConfigError(f"mode: must be 'legacy' or 'str', got {self.mode!r}")
        if self.tie_break not in ("margin", "lowest_id"):
            raise ConfigError(f"tie_break: must be 'margin' or 'lowest_id', got {self.tie_break!r}")
        if self.slot_counting not in ("virtual", "freeze"):
            raise ConfigError(f"slot_counting: must be 'virtual' or 'freeze', got {self.slot_counting!r}")
        if not self.sim_duration >= 0 or not math.isfinite(self.sim_duration):
            raise ConfigError(f"sim_duration: must be >= 0, got {self.sim_duration!r}")
        if self.payload_min is not None and not 0 <= self.payload_min <= self.mac.payload:
            raise ConfigError(f"payload_min: must lie in [0, payload], got {self.payload_min!r}")

    @property
    def lambda_ca(self) -> float:
        return 1.0 - self.lambda_eca

    @property
    def lambda_hd(self) -> float:
        return 1.0 - self.lambda_fd

    def to_flat(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name in ("channel", "mac"):
                continue
            out[f.name] = getattr(self, f.name)
        for f in fields(ChannelParams):
            out[f.name] = getattr(self.channel, f.name)
        for f in fields(MacParams):
            out[f.name] = getattr(self.mac, f.name)
        return out

    def with_(self, **kw) -> "SimConfig":
        """Copy with flat keys replaced; channel and MAC keys are routed to their groups."""
        return from_flat({**self.to_flat(), **kw})


TOP_KEYS = {f.name for f in fields(SimConfig)} - {"channel", "mac"}
KNOWN_KEYS = TOP_KEYS | CHANNEL_KEYS | MAC_KEYS | {"lambda_ca", "lambda_hd"}

_BOOL_KEYS = {"adaptation", "downlink", "fading", "eca_stage_reset"}
_INT_KEYS = {"rings", "n_per_cell", "seed", "cw_min", "max_stage", "phy_header", "mac_header", "payload",
             "ack_bits", "payload_min"}
_STR_KEYS = {"mode", "tie_break", "slot_counting"}
_OPTIONAL = {"ap_spacing", "payload_min"}


def _coerce(key: str, value):
    if value is None:
        if key in _OPTIONAL:
            return None
        raise ConfigError(f"{key}: a value is required")
    try:
        if key in _BOOL_KEYS:
            if isinstance(value, str):
                low = value.strip().lower()
                if low in ("on", "true", "yes", "1"):
                    return True
                if low in ("off", "false", "no", "0"):
                    return False
                raise ValueError(value)
            return bool(value)
        if key in _STR_KEYS:
            return str(value)
        if key in _INT_KEYS:
            f = float(value)
            if f != int(f):
                raise ValueError(value)
            return int(f)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {value!r}") from None


def _complement(flat: dict, key: str, comp: str):
    if comp in flat:
        if key in flat and abs(flat[key] + flat[comp] - 1.0) > 1e-9:
            raise ConfigError(f"{key}: {key} + {comp} must equal 1, got {flat[key]} + {flat[comp]}")
        if key not in flat:
            flat[key] = 1.0 - flat[comp]
        del flat[comp]


def from_flat(flat: dict) -> SimConfig:
    unknown = sorted(set(flat) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown configuration key")
    flat = {k: _coerce(k, v) for k, v in flat.items()}
    for key in ("lambda_eca", "lambda_fd", "lambda_ca", "lambda_hd"):
        if key in flat and not 0.0 <= flat[key] <= 1.0:
            raise ConfigError(f"{key}: must lie in [0, 1], got {flat[key]!r}")
    _complement(flat, "lambda_eca", "lambda_ca")
    _complement(flat, "lambda_fd", "lambda_hd")
    ch = {k: flat.pop(k) for k in list(flat) if k in CHANNEL_KEYS}
    mc = {k: flat.pop(k) for k in list(flat) if k in MAC_KEYS}
    try:
        channel = ChannelParams(**ch)
        mac = MacParams(**mc)
    except ConfigError as exc:
        msg = str(exc)
        key = next((k for k in (*ch, *mc) if msg.startswith(k)), None)
        raise ConfigError(msg if key else f"{next(iter({**ch, **mc}), 'channel')}: {msg}") from None
    return SimConfig(channel=channel, mac=mac, **flat)


def ideal_cell(**kw) -> SimConfig:
    """Isolated single cell on an ideal channel (no fading, no noise, perfect cancellation)."""
    base = dict(rings=0, channel=ChannelParams.ideal())
    base.update(kw)
    return SimConfig(**base)


def replace_config(cfg: SimConfig, **kw) -> SimConfig:
    return replace(cfg, **kw)
