import math

import numpy as np
import pytest

from hapsim.geometry import FingerChain, Plane, Scene, fk_fingertip
from hapsim.plant import QuantizerSpec, read_encoder
from hapsim.precontact import WallTracker, update_wall, world_tick

CHAIN = FingerChain()


def tracker(**kw):
    return WallTracker(d_lim=-0.005, scale=1.0, hysteresis=0.002, **kw)


class TestUpdateWall:
    def test_tracking_far_away(self):
        w = update_wall(tracker(), d=-0.020, q=0.000)
        assert not w.frozen
        assert w.q_lim == pytest.approx(0.020)

    def test_freeze_sequence(self):
        # hand-stepped: track at -0.020 and -0.006, freeze from -0.003 on
        w = tracker()
        seq = [(-0.020, 0.000), (-0.006, 0.014), (-0.003, 0.017), (-0.001, 0.019)]
        states = []
        for d, q in seq:
            w = update_wall(w, d, q)
            states.append((w.q_lim, w.frozen))
        assert states[0] == (pytest.approx(0.020), False)
        assert states[1] == (pytest.approx(0.020), False)
        assert states[2] == (pytest.approx(0.020), True)
        assert states[3] == (pytest.approx(0.020), True)

    def test_first_update_already_close(self):
        # no prior value and d >= d_lim: place once, then freeze
        w = tracker()
        w = update_wall(w, d=-0.004, q=0.010)
        assert w.frozen
        assert w.q_lim == pytest.approx(0.014)
        w2 = update_wall(w, d=-0.002, q=0.012)
        assert w2.frozen
        assert w2.q_lim == pytest.approx(0.014)

    def test_unfreeze_needs_hysteresis(self):
        w = update_wall(tracker(), d=-0.004, q=0.010)
        assert w.frozen
        # just below the threshold but inside the hysteresis band: stay frozen
        w = update_wall(w, d=-0.006, q=0.008)
        assert w.frozen
        assert w.q_lim == pytest.approx(0.014)
        # beyond the band: resume tracking
        w = update_wall(w, d=-0.0075, q=0.006)
        assert not w.frozen
        assert w.q_lim == pytest.approx(0.0135)

    def test_frozen_value_ignores_later_distances(self):
        w = update_wall(tracker(), d=-0.001, q=0.0)
        for d in (-0.003, 0.002, 0.004):
            w = update_wall(w, d, q=0.123)
            assert w.frozen
            assert w.q_lim == pytest.approx(0.001)

    def test_validation(self):
        with pytest.raises(ValueError):
            WallTracker(d_lim=0.001).validate()
        with pytest.raises(ValueError):
            WallTracker(scale=0.0).validate()

    def test_tracked_wall_position_invariant_on_rigid_approach(self):
        # while tracking, q - s*d is constant within one encoder quantum even
        # as the quantized q advances
        quant = QuantizerSpec()
        w = tracker()
        wall_x = 0.05
        estimates = []
        for x in np.linspace(0.0, 0.04, 200):
            q = read_encoder(x, quant)
            d = x - wall_x
            w = update_wall(w, d, q)
            assert not w.frozen
            estimates.append(w.q_lim)
        assert max(estimates) - min(estimates) <= quant.encoder_step + 1e-15


class TestWorldTick:
    def test_empty_scene(self):
        assert world_tick((0.5, 0.5, 0.5), Scene(), CHAIN) is None

    def test_plane_ahead_along_ray(self):
        theta = (0.5, 0.5, 0.5)
        tip, distal = fk_fingertip(theta, CHAIN)
        ray = distal.rotation[:, 1]
        plane = Plane(point=tip + 0.1 * ray, normal=-ray)
        msg = world_tick(theta, Scene(objects=[plane]), CHAIN, seq=3, t_now=1.5)
        assert msg is not None
        assert msg.seq == 3
        assert msg.t_send == 1.5
        # hit point lies on the plane, normal matches
        assert abs((msg.point - plane.point) @ plane.normal) < 1e-9
        np.testing.assert_allclose(msg.normal, -ray, atol=1e-12)

    def test_stale_pose_is_used_verbatim(self):
        # the message is a pure function of the pose it was given
        theta_old = (0.4, 0.4, 0.4)
        tip, distal = fk_fingertip(theta_old, CHAIN)
        ray = distal.rotation[:, 1]
        plane = Plane(point=tip + 0.1 * ray, normal=-ray)
        scene = Scene(objects=[plane])
        m1 = world_tick(theta_old, scene, CHAIN)
        m2 = world_tick(theta_old, scene, CHAIN)
        np.testing.assert_array_equal(m1.point, m2.point)
        m3 = world_tick((0.6, 0.6, 0.6), scene, CHAIN)
        assert m3 is None or not np.allclose(m3.point, m1.point)

    def test_ray_points_away(self):
        theta = (0.5, 0.5, 0.5)
        tip, distal = fk_fingertip(theta, CHAIN)
        ray = distal.rotation[:, 1]
        plane = Plane(point=tip - 0.1 * ray, normal=ray)  # behind the pad
        assert world_tick(theta, Scene(objects=[plane]), CHAIN) is None
