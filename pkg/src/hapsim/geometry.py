"""Finger kinematics, scene raycasting, frame transforms, signed plane distance.

The finger is a planar 3-link serial chain living in the xy-plane of the hand
frame {R}; joints rotate about +z, so increasing angles curl the fingertip
"palm-ward" (+y at the straight pose).  The raycast direction is the palmar
normal of the distal frame: the +y axis of the frame attached after the last
link, i.e. ``z_hat x link_direction``.

The signed fingertip-plane distance is

    d = (P_C - P_F) . n_C - t

with ``t`` the fingerpad radius: negative on approach, zero at contact,
positive inside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RigidTransform",
    "FingerChain",
    "Plane",
    "Sphere",
    "Scene",
    "CollisionPlane",
    "RayHit",
    "fk_fingertip",
    "fingertip_jacobian",
    "raycast",
    "signed_distance",
    "to_hand_frame",
]

_UNIT_TOL = 1e-9


def _as_vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


@dataclass
class RigidTransform:
    """Rotation + translation; maps local coordinates to parent coordinates."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform()

    @staticmethod
    def from_z_rotation(angle: float, translation=(0.0, 0.0, 0.0)) -> "RigidTransform":
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return RigidTransform(rot, _as_vec3(translation))

    def transform_point(self, p) -> np.ndarray:
        return self.rotation @ _as_vec3(p) + self.translation

    def transform_direction(self, d) -> np.ndarray:
        return self.rotation @ _as_vec3(d)

    def inverse(self) -> "RigidTransform":
        rt = self.rotation.T
        return RigidTransform(rt, -rt @ self.translation)

    def compose(self, other: "RigidTransform") -> "RigidTransform":
        """self applied after other: (self * other)(p) = self(other(p))."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )


@dataclass
class FingerChain:
    """Planar 3-link chain standing in for a dexterous-hand finger.

    ``base_pose`` places the chain's base in the hand frame {R};
    ``fingerpad_radius`` is the pad offset used in the contact distance.
    """

    link_lengths: tuple[float, float, float] = (0.04, 0.03, 0.02)
    base_pose: RigidTransform = field(default_factory=RigidTransform.identity)
    fingerpad_radius: float = 0.01

    def validate(self) -> None:
        if len(self.link_lengths) != 3 or any(l <= 0 for l in self.link_lengths):
            raise ValueError("need 3 positive link lengths")
        if self.fingerpad_radius <= 0:
            raise ValueError("fingerpad radius must be > 0")


@dataclass
class Plane:
    """Infinite plane through ``point`` with outward unit ``normal``."""

    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self) -> None:
        self.point = _as_vec3(self.point)
        self.normal = _as_vec3(self.normal)
        if abs(np.linalg.norm(self.normal) - 1.0) > _UNIT_TOL:
            raise ValueError("plane normal must be unit length")


@dataclass
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        self.center = _as_vec3(self.center)
        if self.radius <= 0:
            raise ValueError("sphere radius must be > 0")


@dataclass
class Scene:
    """Immutable collision world: primitives plus the pose of {R} in world."""

    objects: list = field(default_factory=list)
    hand_pose: RigidTransform = field(default_factory=RigidTransform.identity)


@dataclass
class CollisionPlane:
    """Tangent contact plane in the hand frame: point, unit normal, pad radius."""

    point: np.ndarray
    normal: np.ndarray
    pad_radius: float

    def __post_init__(self) -> None:
        self.point = _as_vec3(self.point)
        self.normal = _as_vec3(self.normal)
        if abs(np.linalg.norm(self.normal) - 1.0) > _UNIT_TOL:
            raise ValueError("collision plane normal must be unit length")


@dataclass
class RayHit:
    point: np.ndarray
    normal: np.ndarray
    distance: float


def fk_fingertip(theta, chain: FingerChain) -> tuple[np.ndarray, RigidTransform]:
    """Fingertip position in {R} and the distal frame (x along the last link,
    y the palmar normal / ray direction)."""
    if len(theta) != 3:
        raise ValueError("theta must have 3 joint angles")
    for a in theta:
        if abs(a) > math.pi:
            raise ValueError(f"joint angle {a} outside +-pi")
    l1, l2, l3 = chain.link_lengths
    a1 = theta[0]
    a2 = a1 + theta[1]
    a3 = a2 + theta[2]
    x = l1 * math.cos(a1) + l2 * math.cos(a2) + l3 * math.cos(a3)
    y = l1 * math.sin(a1) + l2 * math.sin(a2) + l3 * math.sin(a3)
    tip_local = np.array([x, y, 0.0])
    distal_local = RigidTransform.from_z_rotation(a3, tip_local)
    tip = chain.base_pose.transform_point(tip_local)
    distal = chain.base_pose.compose(distal_local)
    return tip, distal


def fingertip_jacobian(theta, chain: FingerChain) -> np.ndarray:
    """2x3 planar Jacobian of the fingertip (in the chain's base plane)."""
    l1, l2, l3 = chain.link_lengths
    a1 = theta[0]
    a2 = a1 + theta[1]
    a3 = a2 + theta[2]
    s1, s2, s3 = math.sin(a1), math.sin(a2), math.sin(a3)
    c1, c2, c3 = math.cos(a1), math.cos(a2), math.cos(a3)
    return np.array(
        [
            [-l1 * s1 - l2 * s2 - l3 * s3, -l2 * s2 - l3 * s3, -l3 * s3],
            [l1 * c1 + l2 * c2 + l3 * c3, l2 * c2 + l3 * c3, l3 * c3],
        ]
    )


def _ray_plane(origin: np.ndarray, r: np.ndarray, plane: Plane) -> float | None:
    denom = float(r @ plane.normal)
    if abs(denom) < 1e-12:
        return None
    t = float((plane.point - origin) @ plane.normal) / denom
    return t if t > 1e-12 else None


def _ray_sphere(origin: np.ndarray, r: np.ndarray, sph: Sphere) -> float | None:
    oc = origin - sph.center
    b = 2.0 * float(r @ oc)
    c = float(oc @ oc) - sph.radius * sph.radius
    disc = b * b - 4.0 * c
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    t0 = (-b - sq) / 2.0
    if t0 > 1e-12:
        return t0
    t1 = (-b + sq) / 2.0
    return t1 if t1 > 1e-12 else None


def raycast(origin, r, scene: Scene) -> RayHit | None:
    """Nearest forward intersection of the ray with any scene primitive.

    A miss is a value (None), not an error.  The returned normal is the
    primitive's outward surface normal at the hit point.
    """
    origin = _as_vec3(origin)
    r = _as_vec3(r)
    if abs(np.linalg.norm(r) - 1.0) > 1e-9:
        raise ValueError("ray direction must be unit length")
    best: RayHit | None = None
    for obj in scene.objects:
        if isinstance(obj, Plane):
            t = _ray_plane(origin, r, obj)
            n = obj.normal
        elif isinstance(obj, Sphere):
            t = _ray_sphere(origin, r, obj)
            n = None
        else:
            raise TypeError(f"unsupported scene primitive: {type(obj)!r}")
        if t is None:
            continue
        if best is None or t < best.distance:
            point = origin + t * r
            if n is None:
                n = (point - obj.center) / obj.radius
            best = RayHit(point=point, normal=n.copy(), distance=t)
    return best


def signed_distance(P_F, plane: CollisionPlane) -> float:
    """Signed fingertip-plane distance: (P_C - P_F).n - pad_radius.

    Negative before contact, zero at contact, positive inside.
    """
    return float((plane.point - _as_vec3(P_F)) @ plane.normal) - plane.pad_radius


def to_hand_frame(entity, world_pose_of_R: RigidTransform, kind: str = "point") -> np.ndarray:
    """Express a world-frame point or direction in the hand frame {R}.

    ``world_pose_of_R`` maps {R} coordinates to world coordinates; this
    applies its inverse.  Directions rotate only.
    """
    inv = world_pose_of_R.inverse()
    if kind == "point":
        return inv.transform_point(entity)
    if kind == "direction":
        return inv.transform_direction(entity)
    raise ValueError(f"kind must be 'point' or 'direction', got {kind!r}")
