"""Scripted finger motion standing in for the human operator.

The fingertip follows a straight line in task space, starting at the pose
``theta0`` and heading along the palmar normal (the raycast direction) at
that pose: approach at constant speed, dwell, optional retract along the same
line.  Joint angles come from a resolved-rate inverse-kinematics table built
once per trajectory: the line is discretized by arc length and each sample is
Newton-corrected onto the line, so the stored poses track it to machine
precision and the fingertip speed equals the commanded approach speed.

Because the pose table is indexed by arc length, the same table converts an
actual cable position back into the actual finger pose: the cable coordinate
(scaled by the task-to-cable factor) *is* the progress along the line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import FingerChain, fingertip_jacobian

__all__ = ["TrajectoryProfile", "FingerTrajectory", "finger_trajectory"]

_GRID_STEP = 2.5e-4  # arc-length table resolution, m
_DLS_DAMPING = 1e-4


@dataclass(frozen=True)
class TrajectoryProfile:
    """Approach/dwell/retract profile, all phases at one task-space speed.

    ``approach_speed`` is the fingertip speed (m/s); ``approach_dist`` the
    straight-line travel (m); ``dwell`` the hold time at the far end (s).
    ``reentries`` repeats the contact: lift off by ``lift_dist``, come back,
    hold for ``reentry_dwell`` -- the way a subject enters a contact several
    times in one recording.  With ``retract`` the finger finally returns to
    the start and holds there.
    """

    approach_speed: float = 0.1
    theta0: tuple[float, float, float] = (0.5, 0.5, 0.5)
    dwell: float = 1.0
    retract: bool = False
    approach_dist: float = 0.06
    reentries: int = 0
    lift_dist: float = 0.02
    reentry_dwell: float = 0.2

    def validate(self) -> None:
        if self.approach_speed <= 0:
            raise ValueError(f"approach_speed must be > 0, got {self.approach_speed}")
        if self.approach_dist <= 0:
            raise ValueError(f"approach_dist must be > 0, got {self.approach_dist}")
        if self.dwell < 0 or self.reentry_dwell < 0:
            raise ValueError("dwell times must be >= 0")
        if len(self.theta0) != 3:
            raise ValueError("theta0 must have 3 joint angles")
        if self.reentries < 0:
            raise ValueError("reentries must be >= 0")
        if self.reentries and not 0.0 < self.lift_dist <= self.approach_dist:
            raise ValueError("lift_dist must be in (0, approach_dist]")

    @property
    def approach_time(self) -> float:
        return self.approach_dist / self.approach_speed

    def _knots(self) -> list[tuple[float, float]]:
        """(time, arc length) corners of the piecewise-linear schedule."""
        v = self.approach_speed
        pts = [(0.0, 0.0), (self.approach_time, self.approach_dist)]
        t = self.approach_time + self.dwell
        pts.append((t, self.approach_dist))
        for _ in range(self.reentries):
            t += self.lift_dist / v
            pts.append((t, self.approach_dist - self.lift_dist))
            t += self.lift_dist / v
            pts.append((t, self.approach_dist))
            t += self.reentry_dwell
            pts.append((t, self.approach_dist))
        if self.retract:
            t += self.approach_time
            pts.append((t, 0.0))
        return pts

    @property
    def duration(self) -> float:
        """Time until the profile becomes stationary for good."""
        return self._knots()[-1][0]


class FingerTrajectory:
    """Pose table for one profile on one finger chain."""

    def __init__(self, profile: TrajectoryProfile, chain: FingerChain):
        profile.validate()
        chain.validate()
        self.profile = profile
        self.chain = chain
        knots = profile._knots()
        self._knot_t = np.array([p[0] for p in knots])
        self._knot_s = np.array([p[1] for p in knots])
        self._build_table()

    def _build_table(self) -> None:
        prof = self.profile
        theta = np.asarray(prof.theta0, dtype=float)
        # straight line along the palmar normal of the start pose, expressed
        # in the chain's planar coordinates (base_pose cancels out of the IK)
        phi = prof.theta0[0] + prof.theta0[1] + prof.theta0[2]
        direction = np.array([-math.sin(phi), math.cos(phi)])
        p = self._tip2d(theta)
        n = max(2, int(math.ceil(prof.approach_dist / _GRID_STEP)) + 1)
        sigmas = np.linspace(0.0, prof.approach_dist, n)
        table = np.empty((n, 3))
        table[0] = theta
        for i in range(1, n):
            target = p + sigmas[i] * direction
            theta = self._solve_pose(theta, target, sigmas[i] - sigmas[i - 1], direction)
            table[i] = theta
        self._sigmas = sigmas
        self._table = table

    def _solve_pose(
        self, theta: np.ndarray, target: np.ndarray, dsigma: float, direction: np.ndarray
    ) -> np.ndarray:
        th = theta + self._dls_step(theta, direction * dsigma)
        for _ in range(20):
            err = target - self._tip2d(th)
            if float(err @ err) < 1e-24:
                break
            th = th + self._dls_step(th, err)
        else:
            raise ValueError(
                "finger trajectory leaves the reachable workspace; shorten "
                "approach_dist or start from a more flexed pose"
            )
        if np.any(np.abs(th) > math.pi):
            raise ValueError("finger trajectory drives a joint past +-pi")
        return th

    def _tip2d(self, theta: np.ndarray) -> np.ndarray:
        l1, l2, l3 = self.chain.link_lengths
        a1 = theta[0]
        a2 = a1 + theta[1]
        a3 = a2 + theta[2]
        return np.array(
            [
                l1 * math.cos(a1) + l2 * math.cos(a2) + l3 * math.cos(a3),
                l1 * math.sin(a1) + l2 * math.sin(a2) + l3 * math.sin(a3),
            ]
        )

    def _dls_step(self, theta: np.ndarray, dp: np.ndarray) -> np.ndarray:
        j = fingertip_jacobian(theta, self.chain)
        jjt = j @ j.T
        jjt[0, 0] += _DLS_DAMPING
        jjt[1, 1] += _DLS_DAMPING
        det = jjt[0, 0] * jjt[1, 1] - jjt[0, 1] * jjt[1, 0]
        inv = np.array([[jjt[1, 1], -jjt[0, 1]], [-jjt[1, 0], jjt[0, 0]]]) / det
        return j.T @ (inv @ dp)

    def arclen(self, t: float) -> float:
        """Nominal progress along the line at time t (the operator's script)."""
        kt = self._knot_t
        ks = self._knot_s
        if t <= 0.0:
            return 0.0
        if t >= kt[-1]:
            return float(ks[-1])
        i = int(np.searchsorted(kt, t, side="right") - 1)
        span = kt[i + 1] - kt[i]
        w = (t - kt[i]) / span
        return float(ks[i] + w * (ks[i + 1] - ks[i]))

    def arclen_rate(self, t: float) -> float:
        kt = self._knot_t
        ks = self._knot_s
        if t < 0.0 or t >= kt[-1]:
            return 0.0
        i = int(np.searchsorted(kt, t, side="right") - 1)
        span = kt[i + 1] - kt[i]
        return float((ks[i + 1] - ks[i]) / span)

    def theta_at_arclen(self, sigma: float) -> np.ndarray:
        """Pose at a given progress along the line (clamped to the table)."""
        sigmas = self._sigmas
        if sigma <= 0.0:
            return self._table[0].copy()
        if sigma >= sigmas[-1]:
            return self._table[-1].copy()
        i = int(np.searchsorted(sigmas, sigma) - 1)
        w = (sigma - sigmas[i]) / (sigmas[i + 1] - sigmas[i])
        return (1.0 - w) * self._table[i] + w * self._table[i + 1]

    def theta(self, t: float) -> np.ndarray:
        return self.theta_at_arclen(self.arclen(t))


def finger_trajectory(
    profile: TrajectoryProfile, t: float, chain: FingerChain | None = None
) -> np.ndarray:
    """Scripted joint angles at time t.

    Convenience wrapper that builds the pose table on every call; loops should
    construct a :class:`FingerTrajectory` once and query it instead.
    """
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    return FingerTrajectory(profile, chain if chain is not None else FingerChain()).theta(t)
