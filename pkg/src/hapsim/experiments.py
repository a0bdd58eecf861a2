"""Deterministic fixed-step co-simulation and the two experiment runners.

Everything advances on one base grid (the plant substep, default 50 us, at
least 10x faster than the fastest 2 kHz controller).  Within a base step the
processing order is fixed: plant substep, then channel deliveries (messages
become visible to polls), then a world tick if due, then a controller tick if
due.  Controller ticks are scheduled at multiples of the controller period
and fire on the first grid instant at or past each multiple; logged tick
times are the nominal multiples.  The world period is redrawn per tick,
uniformly over the configured frame-rate range, from a seeded stream.

Randomness is split into independent seeded streams (current-monitor noise,
world frame rate, and the channel's own seed), so two runs that differ only
in link parameters keep every other draw identical -- the root of the
delay-independence property of pre-contact rendering.

The drop experiment fixes the wall at the free-fall height and lets the mass
fall onto it; between falls the plant is teleported back to rest instead of
being rewound, keeping the falls statistically independent.  The bilateral
experiment drives a finger plant along a scripted straight-line task-space
trajectory through a spring-damper stand-in for the operator's grip, while
the wall position comes from the pre-contact protocol over the lossy link.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import Channel, ChannelConfig, ThetaMsg
from .geometry import CollisionPlane, FingerChain, Scene, fk_fingertip
from .plant import (
    ForceCalib,
    PlantParams,
    QuantizerSpec,
    _step_xv,
    apply_current,
    monitor_force,
    read_encoder,
)
from .precontact import WallTracker, update_wall, world_tick
from .runlog import RunLog
from .trajectory import FingerTrajectory, TrajectoryProfile
from .wall import (
    ControllerState,
    WallParams,
    estimate_velocity,
    force_to_current,
    pullback_force,
    wall_tick,
)

__all__ = [
    "SimClock",
    "DropConfig",
    "OperatorModel",
    "BilateralConfig",
    "run_drop_experiment",
    "run_bilateral_experiment",
    "DEFAULT_SUBSTEP",
]

DEFAULT_SUBSTEP = 5e-5
_MONITOR_STREAM = 101
_WORLD_STREAM = 202
_TIME_EPS = 1e-12


@dataclass
class SimClock:
    """Base-grid bookkeeping: all event times are multiples of the substep."""

    t_now: float = 0.0
    plant_substep: float = DEFAULT_SUBSTEP
    controller_period: float = 0.0005
    worldsim_period: float | None = None

    def validate(self) -> None:
        if self.plant_substep <= 0 or self.controller_period <= 0:
            raise ValueError("periods must be > 0")
        if self.plant_substep > self.controller_period / 10 + _TIME_EPS:
            raise ValueError(
                f"plant substep {self.plant_substep} must be <= one tenth of the "
                f"controller period {self.controller_period}"
            )
        if self.worldsim_period is not None and self.worldsim_period <= 0:
            raise ValueError("world period must be > 0")


@dataclass
class DropConfig:
    """Mass-drop step-response experiment.

    The wall sits at the free-fall height ``h``; the contact gains come from
    ``wall`` (``wall.q_lim`` is overridden by ``h``).  ``m`` overrides the
    plant mass.
    """

    m: float = 0.5
    h: float = 0.07
    f_loop: float = 2000.0
    wall: WallParams = field(default_factory=lambda: WallParams(F_offset=1.0))
    n_falls: int = 10
    seed: int = 0
    fall_duration: float = 2.0
    plant: PlantParams = field(default_factory=PlantParams)
    quantizer: QuantizerSpec = field(default_factory=QuantizerSpec)
    calib: ForceCalib = field(default_factory=ForceCalib)
    substep: float = DEFAULT_SUBSTEP
    velocity_lowpass_hz: float | None = None

    def validate(self) -> None:
        if self.m <= 0:
            raise ValueError(f"mass must be > 0, got {self.m}")
        if self.h <= 0:
            raise ValueError(f"drop height must be > 0, got {self.h}")
        if not 90.0 <= self.f_loop <= 2000.0:
            raise ValueError(f"loop frequency must be in [90, 2000] Hz, got {self.f_loop}")
        if self.n_falls < 1:
            raise ValueError(f"need at least one fall, got {self.n_falls}")
        if self.fall_duration <= 0:
            raise ValueError("fall duration must be > 0")
        self.wall.validate()
        self.plant.validate()
        self.quantizer.validate()
        self.calib.validate()
        SimClock(
            plant_substep=self.substep, controller_period=1.0 / self.f_loop
        ).validate()
        # a pullback beyond drive saturation can never be realized at zero
        # penetration: flag the misconfiguration instead of running
        F_sat = self.calib.K_F * self.quantizer.current_max
        if self.wall.F_offset > F_sat:
            raise ValueError(
                f"commanded force at zero penetration (F_offset = {self.wall.F_offset} N) "
                f"exceeds actuator saturation ({F_sat} N)"
            )

    def meta(self) -> dict:
        return {
            "experiment": "drop",
            "seed": self.seed,
            "drop": {
                "m": self.m,
                "h": self.h,
                "f_loop": self.f_loop,
                "n_falls": self.n_falls,
                "fall_duration": self.fall_duration,
            },
            "wall": _wall_meta(self.wall),
            "plant": _plant_meta(replace(self.plant, m=self.m)),
            "quantizer": _quant_meta(self.quantizer),
            "calib": {"K_F": self.calib.K_F},
            "sim": {
                "substep": self.substep,
                "controller_period": 1.0 / self.f_loop,
                "velocity_lowpass_hz": self.velocity_lowpass_hz,
            },
        }


@dataclass
class OperatorModel:
    """Spring-damper stand-in for the operator's grip: it drags the finger
    plant along the scripted reference instead of imposing the position,
    so contact forces push the finger back the way a fingertip yields."""

    k: float = 500.0
    b: float = 22.0

    def validate(self) -> None:
        if self.k <= 0 or self.b < 0:
            raise ValueError("operator coupling needs k > 0 and b >= 0")


@dataclass
class BilateralConfig:
    """Master-slave contact-rendering experiment over a lossy link."""

    f_loop: float = 2000.0
    wall: WallParams = field(default_factory=lambda: WallParams(k=20000.0, b=60.0))
    d_lim: float = -0.005
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    worldsim_rate: tuple[float, float] = (100.0, 400.0)
    trajectory: TrajectoryProfile = field(default_factory=TrajectoryProfile)
    scene: Scene = field(default_factory=Scene)
    seed: int = 0
    plant: PlantParams = field(default_factory=lambda: PlantParams(g=0.0))
    chain: FingerChain = field(default_factory=FingerChain)
    operator: OperatorModel = field(default_factory=OperatorModel)
    quantizer: QuantizerSpec = field(default_factory=QuantizerSpec)
    calib: ForceCalib = field(default_factory=ForceCalib)
    scale: float = 1.0
    hysteresis: float = 0.002
    substep: float = DEFAULT_SUBSTEP
    duration: float | None = None
    velocity_lowpass_hz: float | None = None

    def validate(self) -> None:
        if not 90.0 <= self.f_loop <= 2000.0:
            raise ValueError(f"loop frequency must be in [90, 2000] Hz, got {self.f_loop}")
        if self.d_lim >= 0:
            raise ValueError(f"d_lim must be negative, got {self.d_lim}")
        lo, hi = self.worldsim_rate
        if not (100.0 <= lo <= hi <= 400.0):
            raise ValueError(
                f"world frame rate range must lie within [100, 400] Hz, got {self.worldsim_rate}"
            )
        if self.duration is not None and self.duration <= 0:
            raise ValueError("duration must be > 0")
        self.wall.validate()
        self.channel.validate()
        self.trajectory.validate()
        self.plant.validate()
        self.chain.validate()
        self.operator.validate()
        self.quantizer.validate()
        self.calib.validate()
        WallTracker(d_lim=self.d_lim, scale=self.scale, hysteresis=self.hysteresis).validate()
        SimClock(
            plant_substep=self.substep, controller_period=1.0 / self.f_loop
        ).validate()

    def meta(self) -> dict:
        lo, hi = self.worldsim_rate
        return {
            "experiment": "bilateral",
            "seed": self.seed,
            "bilateral": {
                "f_loop": self.f_loop,
                "d_lim": self.d_lim,
                "scale": self.scale,
                "hysteresis": self.hysteresis,
                "worldsim_rate_min": lo,
                "worldsim_rate_max": hi,
                "duration": self.duration,
            },
            "wall": _wall_meta(self.wall),
            "plant": _plant_meta(self.plant),
            "quantizer": _quant_meta(self.quantizer),
            "calib": {"K_F": self.calib.K_F},
            "channel": {
                "base_delay": self.channel.base_delay,
                "jitter_max": self.channel.jitter_max,
                "drop_prob": self.channel.drop_prob,
                "allow_reorder": self.channel.allow_reorder,
                "seed": self.channel.seed,
            },
            "trajectory": {
                "approach_speed": self.trajectory.approach_speed,
                "theta0": list(self.trajectory.theta0),
                "dwell": self.trajectory.dwell,
                "retract": self.trajectory.retract,
                "approach_dist": self.trajectory.approach_dist,
            },
            "operator": {"k": self.operator.k, "b": self.operator.b},
            "chain": {
                "link_lengths": list(self.chain.link_lengths),
                "fingerpad_radius": self.chain.fingerpad_radius,
            },
            "sim": {
                "substep": self.substep,
                "controller_period": 1.0 / self.f_loop,
                "velocity_lowpass_hz": self.velocity_lowpass_hz,
            },
        }


def _wall_meta(w: WallParams) -> dict:
    return {"k": w.k, "b": w.b, "F_offset": w.F_offset, "q_lim": w.q_lim}


def _plant_meta(p: PlantParams) -> dict:
    return {
        "m": p.m,
        "g": p.g,
        "c_visc": p.c_visc,
        "F_coulomb": p.F_coulomb,
        "m_reflected": p.m_reflected,
    }


def _quant_meta(q: QuantizerSpec) -> dict:
    return {
        "encoder_counts_per_rev": q.encoder_counts_per_rev,
        "pulley_radius": q.pulley_radius,
        "current_step": q.current_step,
        "current_max": q.current_max,
        "monitor_noise_pp": q.monitor_noise_pp,
        "encoder_step": q.encoder_step,
    }


def run_drop_experiment(cfg: DropConfig) -> RunLog:
    """Simulate ``n_falls`` fall/contact cycles; one log record per tick."""
    cfg.validate()
    plant = replace(cfg.plant, m=cfg.m)
    wall = replace(cfg.wall, q_lim=cfg.h)
    quant = cfg.quantizer
    calib = cfg.calib
    T = 1.0 / cfg.f_loop
    dt = cfg.substep
    lowpass = cfg.velocity_lowpass_hz
    rng_mon = np.random.default_rng([cfg.seed, _MONITOR_STREAM])

    weight = plant.m * plant.g
    m_total = plant.m + plant.m_reflected
    c_visc = plant.c_visc
    f_coul = plant.F_coulomb

    total = cfg.n_falls * cfg.fall_duration
    n_steps = int(round(total / dt))
    cols: dict[str, list] = {k: [] for k in ("t", "q", "qdot", "F_des", "I_des", "c", "F_mon")}

    x = 0.0
    v = 0.0
    f_cable = 0.0
    ctrl = ControllerState()
    next_fall = 1
    tick_k = 0

    def controller_tick(tick_t: float) -> None:
        nonlocal f_cable
        q = read_encoder(x, quant)
        qdot = estimate_velocity(q, ctrl, T, lowpass)
        F_set, c = wall_tick(q, qdot, wall)
        I_des = force_to_current(F_set, calib)
        I_app, f_cable = apply_current(I_des, quant, calib)
        F_mon = monitor_force(I_app, quant, calib, rng_mon)
        cols["t"].append(tick_t)
        cols["q"].append(q)
        cols["qdot"].append(qdot)
        cols["F_des"].append(F_set)
        cols["I_des"].append(I_des)
        cols["c"].append(c)
        cols["F_mon"].append(F_mon)

    controller_tick(0.0)
    tick_k = 1
    next_tick_t = T
    next_reset_t = cfg.fall_duration

    for i in range(1, n_steps + 1):
        t = i * dt
        x, v = _step_xv(x, v, f_cable, weight, m_total, c_visc, f_coul, 0.0, dt)
        if x < 0.0:
            # the retracted stop: a bounced mass cannot rise above its
            # release position; hitting the stop is inelastic
            x = 0.0
            if v < 0.0:
                v = 0.0
        if next_fall < cfg.n_falls and t >= next_reset_t - _TIME_EPS:
            # teleport back to rest: independent falls, no physical rewind
            x = 0.0
            v = 0.0
            f_cable = 0.0
            ctrl = ControllerState()
            next_fall += 1
            next_reset_t = next_fall * cfg.fall_duration
        if t >= next_tick_t - _TIME_EPS:
            controller_tick(tick_k * T)
            tick_k += 1
            next_tick_t = tick_k * T

    return RunLog.from_lists(cols, cfg.meta())


def run_bilateral_experiment(cfg: BilateralConfig) -> RunLog:
    """Simulate the bilateral contact scenario; one log record per master tick."""
    cfg.validate()
    plant = cfg.plant
    wall = cfg.wall
    quant = cfg.quantizer
    calib = cfg.calib
    T = 1.0 / cfg.f_loop
    dt = cfg.substep
    lowpass = cfg.velocity_lowpass_hz
    s = cfg.scale
    rng_mon = np.random.default_rng([cfg.seed, _MONITOR_STREAM])
    rng_world = np.random.default_rng([cfg.seed, _WORLD_STREAM])
    chan_down = Channel(cfg.channel, stream=0)  # joint angles, master -> world
    chan_up = Channel(cfg.channel, stream=1)  # collision planes, world -> master

    traj = FingerTrajectory(cfg.trajectory, cfg.chain)
    duration = cfg.duration if cfg.duration is not None else cfg.trajectory.duration
    n_steps = int(round(duration / dt))

    weight = plant.m * plant.g
    m_total = plant.m + plant.m_reflected
    c_visc = plant.c_visc
    f_coul = plant.F_coulomb
    k_op = cfg.operator.k
    b_op = cfg.operator.b
    rate_lo, rate_hi = cfg.worldsim_rate

    cols: dict[str, list] = {
        k: [] for k in ("t", "q", "qdot", "F_des", "I_des", "c", "F_mon", "d", "q_lim")
    }
    meta = cfg.meta()
    meta["bilateral"]["duration"] = duration

    # the operator is already in steady approach when the log starts: the
    # plant moves at the reference rate and the reference leads by the drag
    # lag, so no startup transient pollutes the contact entry speed
    v0 = s * cfg.trajectory.approach_speed
    ref_lead = (c_visc * v0 + f_coul) / k_op
    x = 0.0
    v = v0
    f_cable = 0.0
    ctrl = ControllerState()
    tracker = WallTracker(d_lim=cfg.d_lim, scale=s, hysteresis=cfg.hysteresis)
    theta_world: tuple[float, float, float] | None = None
    latest_plane: CollisionPlane | None = None
    plane_seq = 0
    theta_seq = 0
    freeze_time: float | None = None

    def world_step(t: float) -> None:
        nonlocal theta_world, plane_seq
        incoming = chan_down.receive_latest(t)
        if incoming is not None:
            theta_world = incoming.theta
        if theta_world is not None:
            msg = world_tick(theta_world, cfg.scene, cfg.chain, seq=plane_seq + 1, t_now=t)
            if msg is not None:
                plane_seq += 1
                chan_up.send(msg, t)

    def controller_tick(tick_t: float, t: float) -> None:
        nonlocal f_cable, latest_plane, tracker, theta_seq, freeze_time
        q = read_encoder(x, quant)
        qdot = estimate_velocity(q, ctrl, T, lowpass)
        theta_act = traj.theta_at_arclen(x / s)
        pm = chan_up.receive_latest(t)
        if pm is not None:
            latest_plane = CollisionPlane(pm.point, pm.normal, cfg.chain.fingerpad_radius)
        if latest_plane is not None:
            tip, _ = fk_fingertip(theta_act, cfg.chain)
            d_val = (
                float((latest_plane.point - tip) @ latest_plane.normal)
                - latest_plane.pad_radius
            )
            tracker = update_wall(tracker, d_val, q)
            if tracker.frozen and freeze_time is None:
                freeze_time = tick_t
        else:
            d_val = math.nan
        if tracker.q_lim is not None:
            F_set, c = wall_tick(q, qdot, replace(wall, q_lim=tracker.q_lim))
        else:
            F_set, c = pullback_force(qdot, wall.F_offset), False
        I_des = force_to_current(F_set, calib)
        I_app, f_cable = apply_current(I_des, quant, calib)
        F_mon = monitor_force(I_app, quant, calib, rng_mon)
        theta_seq += 1
        chan_down.send(ThetaMsg(tuple(theta_act), theta_seq, tick_t), t)
        cols["t"].append(tick_t)
        cols["q"].append(q)
        cols["qdot"].append(qdot)
        cols["F_des"].append(F_set)
        cols["I_des"].append(I_des)
        cols["c"].append(c)
        cols["F_mon"].append(F_mon)
        cols["d"].append(d_val)
        cols["q_lim"].append(tracker.q_lim if tracker.q_lim is not None else math.nan)

    # t = 0: world first (nothing received yet), then the controller
    world_step(0.0)
    next_world_t = 1.0 / rng_world.uniform(rate_lo, rate_hi)
    controller_tick(0.0, 0.0)
    tick_k = 1
    next_tick_t = T

    for i in range(1, n_steps + 1):
        t = i * dt
        x_ref = s * traj.arclen(t) + ref_lead
        v_ref = s * traj.arclen_rate(t)
        F_op = k_op * (x_ref - x) + b_op * (v_ref - v)
        x, v = _step_xv(x, v, f_cable, weight, m_total, c_visc, f_coul, F_op, dt)
        if t >= next_world_t - _TIME_EPS:
            world_step(t)
            next_world_t = t + 1.0 / rng_world.uniform(rate_lo, rate_hi)
        if t >= next_tick_t - _TIME_EPS:
            controller_tick(tick_k * T, t)
            tick_k += 1
            next_tick_t = tick_k * T

    if freeze_time is not None:
        meta["result"] = {"freeze_time": freeze_time}
    return RunLog.from_lists(cols, meta)
