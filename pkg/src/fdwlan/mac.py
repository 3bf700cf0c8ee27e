"""DCF backoff state machines (CSMA/CA and CSMA/ECA) and frame timing."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError


class Access(enum.Enum):
    CA = "CA"
    ECA = "ECA"


class SlotKind(enum.Enum):
    EMPTY = "empty"
    SUCCESS = "success"
    COLLISION = "collision"


@dataclass(frozen=True)
class MacParams:
    cw_min: int = 16
    max_stage: int = 5
    slot_time: float = 9e-6
    sifs: float = 16e-6
    difs: float = 34e-6
    phy_header: int = 128  # bits, sent at basic_rate
    mac_header: int = 272  # bits
    payload: int = 1000  # bytes
    data_rate: float = 54e6
    basic_rate: float = 6e6
    ack_bits: int = 112
    eca_stage_reset: bool = True  # False keeps the backoff stage across ECA successes

    def __post_init__(self):
        if self.cw_min < 2:
            raise ConfigError(f"cw_min must be >= 2, got {self.cw_min}")
        if self.max_stage < 0:
            raise ConfigError(f"max_stage must be >= 0, got {self.max_stage}")
        for name in ("slot_time", "sifs", "difs", "data_rate", "basic_rate"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not self.difs > self.sifs:
            raise ConfigError("difs must exceed sifs")
        if self.payload < 0:
            raise ConfigError("payload must be >= 0")

    def with_(self, **kw) -> "MacParams":
        return replace(self, **kw)

    @property
    def payload_bits(self) -> int:
        return 8 * self.payload

    @property
    def ack_time(self) -> float:
        return (self.phy_header + self.ack_bits) / self.basic_rate


@dataclass
class BackoffState:
    mode: Access = Access.CA
    stage: int = 0
    counter: int = 0
    last_outcome: str = "none"  # "success" | "collision" | "none"


@dataclass
class SlotOutcome:
    """What happened in one cell during one contention slot."""

    kind: SlotKind
    transmitters: frozenset = field(default_factory=frozenset)
    str_mode: str | None = None  # "BFD" | "UFD"
    secondary_target: int | None = None
    primary_ok: bool | None = None
    secondary_ok: bool | None = None

    def __post_init__(self):
        if self.kind is SlotKind.EMPTY and self.transmitters:
            raise ValueError("an empty slot has no transmitters")
        if self.kind is SlotKind.SUCCESS and len(self.transmitters) != 1:
            raise ValueError("a success slot has exactly one primary transmitter")
        if self.kind is SlotKind.COLLISION and len(self.transmitters) < 2:
            raise ValueError("a collision needs at least two transmitters")


def contention_window(stage: int, params: MacParams) -> int:
    return (2 ** stage) * params.cw_min


def random_backoff(state: BackoffState | int, params: MacParams, rng: np.random.Generator) -> int:
    """Uniform draw from [0, 2^k * CWmin - 1]."""
    stage = state.stage if isinstance(state, BackoffState) else int(state)
    if stage > params.max_stage:
        raise ValueError(f"stage {stage} exceeds max_stage {params.max_stage}")
    return int(rng.integers(0, contention_window(stage, params)))


def deterministic_backoff(params: MacParams) -> int:
    """Post-success backoff of CSMA/ECA: ceil(CWmin / 2) - 1."""
    return math.ceil(params.cw_min / 2) - 1


def on_outcome(state: BackoffState, outcome: str, params: MacParams, rng: np.random.Generator) -> BackoffState:
    if outcome == "success":
        if state.mode is Access.ECA:
            stage = 0 if params.eca_stage_reset else state.stage
            return replace(state, stage=stage, counter=deterministic_backoff(params), last_outcome="success")
        return replace(state, stage=0, counter=random_backoff(0, params, rng), last_outcome="success")
    if outcome == "collision":
        stage = min(state.stage + 1, params.max_stage)
        return replace(state, stage=stage, counter=random_backoff(stage, params, rng), last_outcome="collision")
    raise ValueError(f"unknown outcome {outcome!r}")


def frame_airtime(payload_bits: float, params: MacParams) -> float:
    """Seconds on air for a data frame: PHY header at basic rate, the rest at data rate."""
    if payload_bits < 0:
        raise ValueError("payload_bits must be >= 0")
    return params.phy_header / params.basic_rate + (params.mac_header + payload_bits) / params.data_rate


def ack_timeout(t_data: float, params: MacParams, t_ack: float | None = None, sifs: float | None = None) -> float:
    """Data time + SIFS + ACK time, applied at both ends of a full-duplex exchange."""
    if t_data <= 0:
        raise ValueError("t_data must be positive")
    t_ack = params.ack_time if t_ack is None else t_ack
    sifs = params.sifs if sifs is None else sifs
    return t_data + sifs + t_ack


def to_ns(seconds: float) -> int:
    # round first so 174.5185...e-6 style values do not pick up float fuzz
    return int(math.ceil(round(seconds * 1e9, 6)))
