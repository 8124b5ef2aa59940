"""Urgency-scaled channel valuations.

A user values one sub-channel in proportion to the rate it delivers.  The
proportionality factor starts at a baseline and climbs linearly with each
consecutive round the user walked away empty-handed, saturating at a ceiling
after a fixed number of losses.  Any win snaps the factor back to baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class UrgencyState:
    """Loss streak plus the parameters mapping it to a value factor."""

    base_value_per_mbps: float
    max_value_per_mbps: float
    consecutive_losses: int = 0
    saturation_losses: int = 5

    def __post_init__(self) -> None:
        if self.base_value_per_mbps <= 0:
            raise ValueError("base_value_per_mbps must be positive")
        if self.max_value_per_mbps < self.base_value_per_mbps:
            raise ValueError("max_value_per_mbps must be at least the base value")
        if self.saturation_losses < 1:
            raise ValueError("saturation_losses must be at least 1")
        if self.consecutive_losses < 0:
            raise ValueError("consecutive_losses cannot be negative")

    @property
    def per_loss_increment(self) -> float:
        return (self.max_value_per_mbps - self.base_value_per_mbps) / self.saturation_losses


def urgency_factor(state: UrgencyState) -> float:
    """Current value per Mbps: baseline plus one increment per loss, capped."""
    raw = state.base_value_per_mbps + state.per_loss_increment * state.consecutive_losses
    return min(state.max_value_per_mbps, raw)


def channel_valuation(state: UrgencyState, rate_mbps: float) -> float:
    """Willingness to pay for one sub-channel delivering ``rate_mbps``."""
    if rate_mbps < 0:
        raise ValueError("rate_mbps cannot be negative")
    return urgency_factor(state) * rate_mbps


def record_outcome(state: UrgencyState, won_any_channel: bool) -> UrgencyState:
    """Next round's state: a win resets the streak, anything else extends it."""
    if won_any_channel:
        return replace(state, consecutive_losses=0)
    return replace(state, consecutive_losses=state.consecutive_losses + 1)
