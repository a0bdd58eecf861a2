"""Sampled virtual-wall controller: contact test, spring-damper law, pullback.

One controller instance renders one wall on one cable.  Each tick it reads the
quantized position ``q``, estimates the speed by backward difference, and
commands

    F = b*qdot + k*(q - q_lim) + F0      while q >= q_lim (in contact)
    F = F0                               otherwise

where ``F0`` is the pullback force: zero while the cable pays out
(``qdot >= 0``) and ``F_offset`` while it retracts, keeping the cable wound.
Inside contact the command is floored at zero because the cable cannot push.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .plant import ForceCalib

__all__ = [
    "WallParams",
    "ControllerState",
    "estimate_velocity",
    "pullback_force",
    "wall_tick",
    "force_to_current",
]


@dataclass
class WallParams:
    """Wall gains and position: spring k (N/m), damper b (Ns/m), pullback
    F_offset (N), and the contact threshold q_lim (m, motor coordinates)."""

    k: float = 0.0
    b: float = 0.0
    F_offset: float = 0.0
    q_lim: float = 0.0

    def validate(self) -> None:
        if self.k < 0 or self.b < 0 or self.F_offset < 0:
            raise ValueError("wall gains k, b and F_offset must be >= 0")


@dataclass
class ControllerState:
    """Memory for the backward-difference speed estimate.

    ``qdot_filt`` holds the low-pass state when filtering is enabled.
    """

    q_prev: float = 0.0
    initialized: bool = False
    qdot_filt: float = 0.0


def estimate_velocity(
    q: float,
    state: ControllerState,
    T: float,
    lowpass_cutoff_hz: float | None = None,
) -> float:
    """Backward difference of the quantized position, 0 on the first tick.

    Raw differences are the default deliberately: no filtering means the
    worst-case derivative noise that limits stable gains.  Passing a cutoff
    enables an optional first-order low-pass on the estimate.
    """
    if T <= 0:
        raise ValueError(f"controller period must be > 0, got {T}")
    if not state.initialized:
        state.q_prev = q
        state.initialized = True
        state.qdot_filt = 0.0
        return 0.0
    qdot = (q - state.q_prev) / T
    state.q_prev = q
    if lowpass_cutoff_hz is not None:
        alpha = 1.0 - math.exp(-2.0 * math.pi * lowpass_cutoff_hz * T)
        state.qdot_filt += alpha * (qdot - state.qdot_filt)
        return state.qdot_filt
    state.qdot_filt = qdot
    return qdot


def pullback_force(qdot: float, F_offset: float) -> float:
    """Cable-rewind force: zero while paying out (qdot >= 0, equality
    included), F_offset while retracting."""
    return 0.0 if qdot >= 0.0 else F_offset


def wall_tick(q: float, qdot: float, p: WallParams) -> tuple[float, bool]:
    """One controller tick: returns (force command, contact flag).

    ``q`` and ``p.q_lim`` share one origin; penetration is ``q - q_lim``.
    The in-contact command is floored at 0 (a strongly negative qdot can make
    the raw law negative, but the cable cannot push).
    """
    F0 = pullback_force(qdot, p.F_offset)
    c = q >= p.q_lim
    if c:
        F_set = p.b * qdot + p.k * (q - p.q_lim) + F0
        if F_set < 0.0:
            F_set = 0.0
    else:
        F_set = F0
    return F_set, c


def force_to_current(F_set: float, calib: ForceCalib) -> float:
    """Desired force to current command; clamping happens drive-side."""
    if F_set < 0.0:
        raise ValueError(f"force command must be >= 0, got {F_set}")
    return F_set / calib.K_F
