"""Pre-contact detection: remote raycast messages and the wall freeze rule.

The remote world process raycasts from the fingertip along the palmar normal
and reports the tangent contact plane.  The local controller recomputes the
signed distance ``d`` to that plane every tick from fresh kinematics and moves
the wall position with

    q_lim = q - s*d        while d < d_lim   (tracking, wall |d| ahead)
    q_lim frozen           once d >= d_lim   (close: render locally)

so after the freeze instant, contact rendering no longer depends on the link.
``s`` converts task-space meters to cable meters.  Leaving contact unfreezes
with hysteresis: tracking resumes only below ``d_lim - hysteresis``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    CollisionPlane,
    FingerChain,
    Scene,
    fk_fingertip,
    raycast,
    to_hand_frame,
)

__all__ = ["WallTracker", "PrecontactMsg", "world_tick", "update_wall"]


@dataclass
class WallTracker:
    """Evolving wall position in motor coordinates.

    ``q_lim`` is None until the first distance update; ``frozen`` implies it
    is set.  ``d_lim`` must be negative: the freeze fires while still outside
    the surface.
    """

    d_lim: float = -0.005
    scale: float = 1.0
    hysteresis: float = 0.002
    q_lim: float | None = None
    frozen: bool = False

    def validate(self) -> None:
        if self.d_lim >= 0:
            raise ValueError(f"d_lim must be negative, got {self.d_lim}")
        if self.scale <= 0:
            raise ValueError(f"scale must be > 0, got {self.scale}")
        if self.hysteresis < 0:
            raise ValueError("hysteresis must be >= 0")
        if self.frozen and self.q_lim is None:
            raise ValueError("frozen tracker must have q_lim set")


@dataclass
class PrecontactMsg:
    """Contact-plane payload sent world -> controller: plane point and unit
    normal in the hand frame, plus a per-sender sequence number."""

    point: np.ndarray
    normal: np.ndarray
    seq: int
    t_send: float

    def __post_init__(self) -> None:
        self.point = np.asarray(self.point, dtype=float)
        self.normal = np.asarray(self.normal, dtype=float)


def world_tick(
    theta_latest,
    scene: Scene,
    chain: FingerChain,
    seq: int = 0,
    t_now: float = 0.0,
) -> PrecontactMsg | None:
    """One world-process step: raycast from the (possibly stale) pose.

    Output is a pure function of its inputs: a delayed pose yields a plane for
    that pose, not the current one.  Returns None when the ray misses.
    """
    tip_R, distal = fk_fingertip(theta_latest, chain)
    ray_R = distal.rotation[:, 1]  # palmar normal of the distal frame
    origin_w = scene.hand_pose.transform_point(tip_R)
    ray_w = scene.hand_pose.transform_direction(ray_R)
    hit = raycast(origin_w, ray_w, scene)
    if hit is None:
        return None
    point_R = to_hand_frame(hit.point, scene.hand_pose, "point")
    normal_R = to_hand_frame(hit.normal, scene.hand_pose, "direction")
    return PrecontactMsg(point=point_R, normal=normal_R, seq=seq, t_send=t_now)


def update_wall(w: WallTracker, d: float, q: float) -> WallTracker:
    """Apply the freeze rule for one controller tick.

    ``d`` comes from the latest received plane and fresh local kinematics;
    ``q`` is the current quantized motor position.  Far away the wall tracks
    ``q - s*d``; at or inside the threshold it freezes (set once from the
    current pair if it was never tracked).  Once frozen, it stays frozen
    until ``d`` retreats past the hysteresis band.
    """
    tracking_threshold = w.d_lim - (w.hysteresis if w.frozen else 0.0)
    if d < tracking_threshold:
        return replace(w, q_lim=q - w.scale * d, frozen=False)
    q_lim = w.q_lim if w.q_lim is not None else q - w.scale * d
    return replace(w, q_lim=q_lim, frozen=True)
