"""Structured run configuration: YAML text to validated experiment configs.

The file is a mapping with an ``experiment`` kind (``drop``, ``bilateral`` or
``sweep``), a top-level ``seed``, and one named section per module.  All units
are SI throughout: meters, seconds, newtons, amperes, hertz.  Every field has
a documented default; unknown keys are rejected with their full path, and
violations name the offending field.  The resolved values (defaults included)
are echoed into the header of every output file.

Section reference (defaults in parentheses):

    seed         integer (0); channel.seed defaults to seed + 1
    drop         m (0.5), h (0.07), f_loop (2000), n_falls (10),
                 fall_duration (2.0)
    bilateral    f_loop (2000), d_lim (-0.005), scale (1.0),
                 hysteresis (0.002), worldsim_rate ([100, 400]),
                 duration (trajectory duration)
    sweep        frequencies, k_grid, b_grid (required lists, ascending)
    wall         k (0), b (0), F_offset (1.0 for drop, 0.0 otherwise)
    plant        m (0.5), g (9.81 drop / 0.0 bilateral), c_visc (2.0),
                 F_coulomb (0.2), m_reflected (0.0)
    quantizer    encoder_counts_per_rev (4000), pulley_radius (0.01),
                 current_step (0.0472), current_max (6.6),
                 monitor_noise_pp (0.0472)
    calib        K_F (10.0)
    channel      base_delay (0.001), jitter_max (0.005), drop_prob (0.0),
                 allow_reorder (true), seed
    trajectory   approach_speed (0.1), theta0 ([0.5, 0.5, 0.5]), dwell (1.0),
                 retract (false), approach_dist (0.06)
    operator     k (500.0), b (22.0)
    chain        link_lengths ([0.04, 0.03, 0.02]), fingerpad_radius (0.01)
    scene        objects: list of {type: plane, point, normal} or
                 {type: sphere, center, radius}; hand_translation ([0,0,0])
    sim          substep (5e-5), velocity_lowpass_hz (null)
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import yaml

from .channel import ChannelConfig
from .experiments import (
    DEFAULT_SUBSTEP,
    BilateralConfig,
    DropConfig,
    OperatorModel,
)
from .geometry import FingerChain, Plane, RigidTransform, Scene, Sphere
from .plant import ForceCalib, PlantParams, QuantizerSpec
from .trajectory import TrajectoryProfile
from .analysis import SweepConfig
from .wall import WallParams

__all__ = ["ConfigError", "RunConfigFile", "parse_config", "load_config"]

_KINDS = ("drop", "bilateral", "sweep")


class ConfigError(ValueError):
    """Configuration text violates the schema."""


@dataclass
class RunConfigFile:
    """Parsed and validated run configuration."""

    experiment: str
    seed: int
    drop: DropConfig | None = None
    bilateral: BilateralConfig | None = None
    sweep: SweepConfig | None = None

    @property
    def config(self):
        return {"drop": self.drop, "bilateral": self.bilateral, "sweep": self.sweep}[
            self.experiment
        ]


class _Section:
    """One mapping node; tracks consumed keys so leftovers can be rejected."""

    def __init__(self, data, path: str):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'top level'} must be a mapping")
        self.data = dict(data)
        self.path = path

    def _key(self, name: str) -> str:
        return f"{self.path}.{name}" if self.path else name

    def child(self, name: str) -> "_Section":
        return _Section(self.data.pop(name, None), self._key(name))

    def take(self, name: str, typ, default, check=None, rule: str = ""):
        if name in self.data:
            raw = self.data.pop(name)
        else:
            raw = default
        key = self._key(name)
        try:
            if typ is bool:
                if not isinstance(raw, bool):
                    raise TypeError
                val = raw
            elif typ is int:
                if isinstance(raw, bool) or not isinstance(raw, int):
                    raise TypeError
                val = raw
            elif typ is float:
                if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                    raise TypeError
                val = float(raw)
            else:
                val = typ(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected {typ.__name__}, got {raw!r}") from None
        if check is not None and not check(val):
            raise ConfigError(f"{key} = {val!r} violates: {rule}")
        return val

    def take_optional_float(self, name: str, check=None, rule: str = ""):
        if name not in self.data or self.data[name] is None:
            self.data.pop(name, None)
            return None
        return self.take(name, float, None, check, rule)

    def take_floats(self, name: str, default, length: int | None = None):
        raw = self.data.pop(name, default)
        key = self._key(name)
        if not isinstance(raw, (list, tuple)) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw
        ):
            raise ConfigError(f"{key}: expected a list of numbers, got {raw!r}")
        if length is not None and len(raw) != length:
            raise ConfigError(f"{key}: expected {length} numbers, got {len(raw)}")
        return tuple(float(v) for v in raw)

    def finish(self) -> None:
        if self.data:
            name = sorted(self.data)[0]
            raise ConfigError(f"unknown key: {self._key(name)}")


def _wall(sec: _Section, default_offset: float) -> WallParams:
    w = WallParams(
        k=sec.take("k", float, 0.0, lambda v: v >= 0, "k must be >= 0"),
        b=sec.take("b", float, 0.0, lambda v: v >= 0, "b must be >= 0"),
        F_offset=sec.take(
            "F_offset", float, default_offset, lambda v: v >= 0, "F_offset must be >= 0"
        ),
        q_lim=sec.take("q_lim", float, 0.0),
    )
    sec.finish()
    return w


def _plant(sec: _Section, default_g: float) -> PlantParams:
    p = PlantParams(
        m=sec.take("m", float, 0.5, lambda v: v > 0, "mass must be > 0"),
        g=sec.take("g", float, default_g),
        c_visc=sec.take("c_visc", float, 2.0, lambda v: v >= 0, "c_visc must be >= 0"),
        F_coulomb=sec.take(
            "F_coulomb", float, 0.2, lambda v: v >= 0, "F_coulomb must be >= 0"
        ),
        m_reflected=sec.take(
            "m_reflected", float, 0.0, lambda v: v >= 0, "m_reflected must be >= 0"
        ),
    )
    sec.finish()
    return p


def _quantizer(sec: _Section) -> QuantizerSpec:
    q = QuantizerSpec(
        encoder_counts_per_rev=sec.take(
            "encoder_counts_per_rev", int, 4000, lambda v: v > 0, "must be > 0"
        ),
        pulley_radius=sec.take("pulley_radius", float, 0.01, lambda v: v > 0, "must be > 0"),
        current_step=sec.take("current_step", float, 0.0472, lambda v: v > 0, "must be > 0"),
        current_max=sec.take("current_max", float, 6.6, lambda v: v > 0, "must be > 0"),
        monitor_noise_pp=sec.take(
            "monitor_noise_pp", float, 0.0472, lambda v: v >= 0, "must be >= 0"
        ),
    )
    sec.finish()
    return q


def _calib(sec: _Section) -> ForceCalib:
    c = ForceCalib(K_F=sec.take("K_F", float, 10.0, lambda v: v > 0, "K_F must be > 0"))
    sec.finish()
    return c


def _channel(sec: _Section, default_seed: int) -> ChannelConfig:
    ch = ChannelConfig(
        base_delay=sec.take("base_delay", float, 0.001, lambda v: v >= 0, "must be >= 0"),
        jitter_max=sec.take("jitter_max", float, 0.005, lambda v: v >= 0, "must be >= 0"),
        drop_prob=sec.take(
            "drop_prob", float, 0.0, lambda v: 0 <= v <= 1, "must be in [0, 1]"
        ),
        allow_reorder=sec.take("allow_reorder", bool, True),
        seed=sec.take("seed", int, default_seed),
    )
    sec.finish()
    return ch


def _trajectory(sec: _Section) -> TrajectoryProfile:
    prof = TrajectoryProfile(
        approach_speed=sec.take(
            "approach_speed", float, 0.1, lambda v: v > 0, "approach_speed must be > 0"
        ),
        theta0=sec.take_floats("theta0", [0.5, 0.5, 0.5], length=3),
        dwell=sec.take("dwell", float, 1.0, lambda v: v >= 0, "dwell must be >= 0"),
        retract=sec.take("retract", bool, False),
        approach_dist=sec.take(
            "approach_dist", float, 0.06, lambda v: v > 0, "approach_dist must be > 0"
        ),
    )
    sec.finish()
    return prof


def _operator(sec: _Section) -> OperatorModel:
    op = OperatorModel(
        k=sec.take("k", float, 500.0, lambda v: v > 0, "operator k must be > 0"),
        b=sec.take("b", float, 22.0, lambda v: v >= 0, "operator b must be >= 0"),
    )
    sec.finish()
    return op


def _chain(sec: _Section) -> FingerChain:
    ch = FingerChain(
        link_lengths=sec.take_floats("link_lengths", [0.04, 0.03, 0.02], length=3),
        fingerpad_radius=sec.take(
            "fingerpad_radius", float, 0.01, lambda v: v > 0, "must be > 0"
        ),
    )
    sec.finish()
    return ch


def _scene(sec: _Section) -> Scene:
    objects_raw = sec.data.pop("objects", [])
    if not isinstance(objects_raw, list):
        raise ConfigError("scene.objects must be a list")
    objects = []
    for i, entry in enumerate(objects_raw):
        osec = _Section(entry, f"scene.objects[{i}]")
        kind = osec.take("type", str, None)
        try:
            if kind == "plane":
                objects.append(
                    Plane(
                        point=np.array(osec.take_floats("point", None, length=3)),
                        normal=np.array(osec.take_floats("normal", None, length=3)),
                    )
                )
            elif kind == "sphere":
                objects.append(
                    Sphere(
                        center=np.array(osec.take_floats("center", None, length=3)),
                        radius=osec.take("radius", float, None, lambda v: v > 0, "must be > 0"),
                    )
                )
            else:
                raise ConfigError(
                    f"scene.objects[{i}].type must be 'plane' or 'sphere', got {kind!r}"
                )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"scene.objects[{i}]: {exc}") from None
        osec.finish()
    translation = sec.take_floats("hand_translation", [0.0, 0.0, 0.0], length=3)
    sec.finish()
    return Scene(objects=objects, hand_pose=RigidTransform(translation=np.array(translation)))


def _sim(sec: _Section) -> tuple[float, float | None]:
    substep = sec.take(
        "substep", float, DEFAULT_SUBSTEP, lambda v: v > 0, "substep must be > 0"
    )
    lowpass = sec.take_optional_float(
        "velocity_lowpass_hz", lambda v: v > 0, "cutoff must be > 0"
    )
    sec.finish()
    return substep, lowpass


def parse_config(text: str) -> RunConfigFile:
    """Parse and validate YAML configuration text."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"invalid YAML{where}: {exc}") from None
    top = _Section(raw, "")
    kind = top.take("experiment", str, None)
    if kind not in _KINDS:
        raise ConfigError(f"experiment must be one of {_KINDS}, got {kind!r}")
    seed = top.take("seed", int, 0)

    quantizer = _quantizer(top.child("quantizer"))
    calib = _calib(top.child("calib"))
    substep, lowpass = _sim(top.child("sim"))

    out = RunConfigFile(experiment=kind, seed=seed)
    if kind in ("drop", "sweep"):
        wall = _wall(top.child("wall"), default_offset=1.0)
        plant = _plant(top.child("plant"), default_g=9.81)
        dsec = top.child("drop")
        drop = DropConfig(
            m=dsec.take("m", float, 0.5, lambda v: v > 0, "mass must be > 0"),
            h=dsec.take("h", float, 0.07, lambda v: v > 0, "height must be > 0"),
            f_loop=dsec.take(
                "f_loop",
                float,
                2000.0,
                lambda v: 90 <= v <= 2000,
                "loop frequency must be in [90, 2000] Hz",
            ),
            n_falls=dsec.take("n_falls", int, 10, lambda v: v >= 1, "need at least one fall"),
            fall_duration=dsec.take(
                "fall_duration", float, 2.0, lambda v: v > 0, "must be > 0"
            ),
            wall=wall,
            plant=plant,
            quantizer=quantizer,
            calib=calib,
            seed=seed,
            substep=substep,
            velocity_lowpass_hz=lowpass,
        )
        dsec.finish()
        if kind == "drop":
            out.drop = drop
            _validate(drop)
        else:
            ssec = top.child("sweep")
            sweep = SweepConfig(
                frequencies=ssec.take_floats("frequencies", None),
                k_grid=ssec.take_floats("k_grid", None),
                b_grid=ssec.take_floats("b_grid", None),
                plant=plant,
                drop=drop,
            )
            ssec.finish()
            for name, grid in (
                ("sweep.frequencies", sweep.frequencies),
                ("sweep.k_grid", sweep.k_grid),
                ("sweep.b_grid", sweep.b_grid),
            ):
                if any(b < a for a, b in zip(grid, grid[1:])):
                    raise ConfigError(f"{name} must be ascending")
                if any(v < 0 for v in grid):
                    raise ConfigError(f"{name} must be non-negative")
            if any(not 90 <= f <= 2000 for f in sweep.frequencies):
                raise ConfigError("sweep.frequencies must lie within [90, 2000] Hz")
            out.sweep = sweep
            _validate(sweep)
    else:
        wall = _wall(top.child("wall"), default_offset=0.0)
        plant = _plant(top.child("plant"), default_g=0.0)
        bsec = top.child("bilateral")
        rate = bsec.take_floats("worldsim_rate", [100.0, 400.0], length=2)
        bilateral = BilateralConfig(
            f_loop=bsec.take(
                "f_loop",
                float,
                2000.0,
                lambda v: 90 <= v <= 2000,
                "loop frequency must be in [90, 2000] Hz",
            ),
            d_lim=bsec.take(
                "d_lim",
                float,
                -0.005,
                lambda v: v < 0,
                "d_lim must be negative (the freeze threshold sits outside the surface)",
            ),
            scale=bsec.take("scale", float, 1.0, lambda v: v > 0, "scale must be > 0"),
            hysteresis=bsec.take(
                "hysteresis", float, 0.002, lambda v: v >= 0, "hysteresis must be >= 0"
            ),
            worldsim_rate=rate,
            duration=bsec.take_optional_float(
                "duration", lambda v: v > 0, "duration must be > 0"
            ),
            wall=wall,
            plant=plant,
            quantizer=quantizer,
            calib=calib,
            channel=_channel(top.child("channel"), default_seed=seed + 1),
            trajectory=_trajectory(top.child("trajectory")),
            operator=_operator(top.child("operator")),
            chain=_chain(top.child("chain")),
            scene=_scene(top.child("scene")),
            seed=seed,
            substep=substep,
            velocity_lowpass_hz=lowpass,
        )
        bsec.finish()
        out.bilateral = bilateral
        _validate(bilateral)
    top.finish()
    return out


def _validate(cfg) -> None:
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfigFile:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
