"""Physical layer for a two-tier downlink cellular topology.

Geometry is static for the lifetime of a simulation run: stations and users
keep their positions, so per-channel rates are constants that can be computed
once and reused every auction round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MBS = "MBS"
SBS = "SBS"

FULL_COCHANNEL = "full_cochannel"
NO_INTERFERENCE = "none"


@dataclass(frozen=True)
class BaseStation:
    """One station selling identical downlink sub-channels."""

    id: int
    tier: str
    position: tuple[float, float]
    tx_power_watts: float
    num_channels: int
    power_unit_price: float

    def __post_init__(self) -> None:
        if self.tier not in (MBS, SBS):
            raise ValueError(f"unknown tier {self.tier!r}")
        if self.tx_power_watts <= 0:
            raise ValueError("tx_power_watts must be positive")
        if self.num_channels < 1:
            raise ValueError("num_channels must be at least 1")
        if self.power_unit_price < 0:
            raise ValueError("power_unit_price must be nonnegative")


@dataclass(frozen=True)
class UserEquipment:
    """A downlink user with a rate requirement and a fixed cash endowment."""

    id: int
    position: tuple[float, float]
    qos_rate_bps: float
    initial_budget: float

    def __post_init__(self) -> None:
        if self.qos_rate_bps <= 0:
            raise ValueError("qos_rate_bps must be positive")
        if self.initial_budget <= 0:
            raise ValueError("initial_budget must be positive")


@dataclass(frozen=True)
class ChannelModel:
    """Log-distance path loss plus thermal noise, per-tier exponents."""

    bandwidth_hz: float = 1e6
    noise_density_w_per_hz: float = 4e-21
    mbs_pathloss_exponent: float = 3.0
    sbs_pathloss_exponent: float = 3.5
    reference_distance_m: float = 1.0
    interference_mode: str = FULL_COCHANNEL

    def __post_init__(self) -> None:
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")
        if self.noise_density_w_per_hz <= 0:
            raise ValueError("noise_density_w_per_hz must be positive")
        if self.reference_distance_m <= 0:
            raise ValueError("reference_distance_m must be positive")
        if self.mbs_pathloss_exponent < 2 or self.sbs_pathloss_exponent < 2:
            raise ValueError("pathloss exponents below 2 are not supported")
        if self.interference_mode not in (FULL_COCHANNEL, NO_INTERFERENCE):
            raise ValueError(f"unknown interference_mode {self.interference_mode!r}")

    def pathloss_exponent(self, tier: str) -> float:
        return self.mbs_pathloss_exponent if tier == MBS else self.sbs_pathloss_exponent


@dataclass(frozen=True)
class Topology:
    """All stations plus the shared channel model."""

    stations: tuple[BaseStation, ...]
    channel: ChannelModel

    def __post_init__(self) -> None:
        ids = [bs.id for bs in self.stations]
        if len(ids) != len(set(ids)):
            raise ValueError("station ids must be distinct")
        macros = [bs for bs in self.stations if bs.tier == MBS]
        if len(macros) != 1:
            raise ValueError("topology needs exactly one macro station")
        smalls = [bs for bs in self.stations if bs.tier == SBS]
        if any(bs.tx_power_watts >= macros[0].tx_power_watts for bs in smalls):
            raise ValueError("macro tx power must exceed every small-cell tx power")

    def station(self, station_id: int) -> BaseStation:
        for bs in self.stations:
            if bs.id == station_id:
                return bs
        raise KeyError(station_id)


def distance(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def path_gain(bs: BaseStation, ue: UserEquipment, channel: ChannelModel) -> float:
    """Log-distance gain, flat inside the reference distance."""
    d = distance(bs.position, ue.position)
    if d == 0.0:
        raise ValueError(f"UE {ue.id} is coincident with station {bs.id}")
    effective = max(d, channel.reference_distance_m)
    exponent = channel.pathloss_exponent(bs.tier)
    return (effective / channel.reference_distance_m) ** (-exponent)


def sinr(bs: BaseStation, ue: UserEquipment, topology: Topology) -> float:
    """Signal-to-interference-plus-noise ratio on one sub-channel.

    Under ``full_cochannel`` every other station contributes interference at
    full transmit power; under ``none`` the result reduces to plain SNR.
    """
    channel = topology.channel
    signal = bs.tx_power_watts * path_gain(bs, ue, channel)
    noise = channel.noise_density_w_per_hz * channel.bandwidth_hz
    interference = 0.0
    if channel.interference_mode == FULL_COCHANNEL:
        for other in topology.stations:
            if other.id == bs.id:
                continue
            interference += other.tx_power_watts * path_gain(other, ue, channel)
    return signal / (interference + noise)


def achievable_rate_bps(bs: BaseStation, ue: UserEquipment, topology: Topology) -> float:
    """Shannon rate of one sub-channel in bits per second."""
    return topology.channel.bandwidth_hz * math.log2(1.0 + sinr(bs, ue, topology))


def channel_demand(ue: UserEquipment, rate_per_channel_bps: float) -> int | None:
    """Fewest whole sub-channels covering the QoS rate; None if unservable."""
    if rate_per_channel_bps <= 0.0:
        return None
    return math.ceil(ue.qos_rate_bps / rate_per_channel_bps)
