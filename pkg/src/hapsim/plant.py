"""Continuous mechanics of the cable-driven load and its sensor/actuator quantization.

The plant is a single mechanical degree of freedom in cable space: ``x`` is the
cable payout in meters (positive in the falling / closing direction) and ``v``
its rate.  A cable can only pull, so the actuation force at the plant boundary
is non-negative by contract.

Quantization models:

* motor position is read through a quadrature encoder (counts per revolution
  over a pulley radius gives the position step),
* the current command is rounded to the drive's resolvable step and clamped to
  the peak current,
* the current monitor adds uniform peak-to-peak noise before quantizing.

The dataglove joint-angle channel (about 11 stable bits end to end) has no
consumer in this simulation; it is noted here for completeness only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "PlantState",
    "PlantParams",
    "QuantizerSpec",
    "ForceCalib",
    "step_plant",
    "read_encoder",
    "apply_current",
    "quantize_current",
    "monitor_force",
]


@dataclass
class PlantState:
    """Cable-space position (m) and velocity (m/s)."""

    x: float = 0.0
    v: float = 0.0


@dataclass
class PlantParams:
    """Mechanical parameters of the load.

    ``c_visc`` and ``F_coulomb`` lump the transmission losses of the sheathed
    cable; they are placeholders, not identified values.  ``m_reflected`` is
    the motor rotor inertia reflected through the pulley.
    """

    m: float = 0.5
    g: float = 9.81
    c_visc: float = 2.0
    F_coulomb: float = 0.2
    m_reflected: float = 0.0

    def validate(self) -> None:
        if self.m <= 0:
            raise ValueError(f"plant mass must be > 0, got {self.m}")
        if self.c_visc < 0 or self.F_coulomb < 0 or self.m_reflected < 0:
            raise ValueError("c_visc, F_coulomb and m_reflected must be >= 0")


@dataclass
class QuantizerSpec:
    """Sensor/actuator resolutions.

    Defaults: 1000-pulse quadrature encoder decoded 4x (4000 counts/rev) on a
    10 mm pulley, 47.2 mA resolvable current step with the same peak-to-peak
    monitor noise, 6.6 A peak drive current.
    """

    encoder_counts_per_rev: int = 4000
    pulley_radius: float = 0.01
    current_step: float = 0.0472
    current_max: float = 6.6
    monitor_noise_pp: float = 0.0472

    @property
    def encoder_step(self) -> float:
        """Position step in meters: one encoder count at the pulley rim."""
        return 2.0 * math.pi * self.pulley_radius / self.encoder_counts_per_rev

    def validate(self) -> None:
        if self.encoder_counts_per_rev <= 0 or self.pulley_radius <= 0:
            raise ValueError("encoder geometry must be positive")
        if self.current_step <= 0 or self.current_max <= 0:
            raise ValueError("current step and max must be positive")
        if self.monitor_noise_pp < 0:
            raise ValueError("monitor noise must be >= 0")


@dataclass
class ForceCalib:
    """Linear cable-force-per-ampere model replacing a hardware lookup table."""

    K_F: float = 10.0

    def validate(self) -> None:
        if self.K_F <= 0:
            raise ValueError(f"K_F must be > 0, got {self.K_F}")


def _step_xv(
    x: float,
    v: float,
    F_cable: float,
    weight: float,
    m_total: float,
    c_visc: float,
    F_coulomb: float,
    F_ext: float,
    dt: float,
) -> tuple[float, float]:
    """Semi-implicit Euler core shared by :func:`step_plant` and the runners.

    Velocity is updated from all non-friction forces first; the Coulomb term
    then removes at most the remaining speed, so friction alone never drives
    the velocity through zero within a step (and a load held by friction
    stays at rest until the net force exceeds the Coulomb level).
    """
    v_star = v + dt * (weight + F_ext - F_cable - c_visc * v) / m_total
    dv_fric = dt * F_coulomb / m_total
    if v_star > dv_fric:
        v_new = v_star - dv_fric
    elif v_star < -dv_fric:
        v_new = v_star + dv_fric
    else:
        v_new = 0.0
    return x + dt * v_new, v_new


def step_plant(
    s: PlantState,
    F_cable: float,
    p: PlantParams,
    dt: float,
    F_ext: float = 0.0,
) -> PlantState:
    """Advance the plant one substep under a held cable force.

    Force balance: ``(m + m_reflected) * a = m*g + F_ext - F_cable
    - c_visc*v - F_coulomb*sign(v)``.  ``F_ext`` is an optional extra
    external force (zero for a free mass; the bilateral runner uses it for
    the operator's drive).  Cables only pull: negative ``F_cable`` signals a
    controller sign bug and is rejected.
    """
    if F_cable < 0.0:
        raise ValueError(f"cable force must be >= 0 (got {F_cable}); cables only pull")
    x, v = _step_xv(
        s.x,
        s.v,
        F_cable,
        p.m * p.g,
        p.m + p.m_reflected,
        p.c_visc,
        p.F_coulomb,
        F_ext,
        dt,
    )
    return PlantState(x, v)


def read_encoder(x: float, spec: QuantizerSpec) -> float:
    """Quantized position reading: floor to the encoder step, no noise."""
    step = spec.encoder_step
    return math.floor(x / step) * step


def quantize_current(i: float, step: float) -> float:
    # round half away from zero, so the result is independent of banker's
    # rounding and stable across platforms
    return math.floor(i / step + 0.5) * step if i >= 0.0 else -math.floor(-i / step + 0.5) * step


def apply_current(
    I_des: float, spec: QuantizerSpec, calib: ForceCalib
) -> tuple[float, float]:
    """Round the current command to the drive step and clamp to [0, peak].

    Returns ``(I_applied, F_cable)`` with ``F_cable = K_F * I_applied``.
    Clamping is the contract, not an error: the drive saturates silently.
    """
    i = quantize_current(I_des, spec.current_step)
    if i < 0.0:
        i = 0.0
    elif i > spec.current_max:
        i = spec.current_max
    return i, calib.K_F * i


def monitor_force(
    I_applied: float,
    spec: QuantizerSpec,
    calib: ForceCalib,
    rng,
) -> float:
    """Force seen through the current-monitor path.

    Uniform noise of the configured peak-to-peak width is added to the applied
    current before quantization; ``rng`` must be the run's seeded generator so
    the noise sequence is reproducible.
    """
    u = rng.uniform(-0.5 * spec.monitor_noise_pp, 0.5 * spec.monitor_noise_pp)
    return calib.K_F * quantize_current(I_applied + u, spec.current_step)
