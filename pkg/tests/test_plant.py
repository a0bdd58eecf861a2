import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hapsim.plant import (
    ForceCalib,
    PlantParams,
    PlantState,
    QuantizerSpec,
    apply_current,
    monitor_force,
    quantize_current,
    read_encoder,
    step_plant,
)

DT = 5e-5


def test_free_fall_velocity_exact():
    p = PlantParams(m=0.5, c_visc=0.0, F_coulomb=0.0)
    s = PlantState()
    for n in range(1, 201):
        s = step_plant(s, 0.0, p, DT)
        assert s.v == pytest.approx(p.g * n * DT, abs=1e-15)


def test_equilibrium_hold():
    p = PlantParams(m=0.5, c_visc=0.0, F_coulomb=0.0)
    s = PlantState(x=0.1, v=0.0)
    for _ in range(100):
        s = step_plant(s, p.m * p.g, p, DT)
    assert s.x == 0.1
    assert s.v == 0.0


def test_terminal_velocity():
    # steady state of m*g = F_coulomb + c_visc*v
    p = PlantParams(m=0.5, c_visc=2.0, F_coulomb=0.2)
    v_term = (p.m * p.g - p.F_coulomb) / p.c_visc
    s = PlantState()
    for _ in range(int(3.0 / DT)):
        s = step_plant(s, 0.0, p, DT)
    assert s.v == pytest.approx(v_term, rel=1e-6)


def test_friction_does_not_reverse_velocity():
    # gravity-free: friction alone must stop the load, never push it back
    p = PlantParams(m=0.1, g=0.0, c_visc=0.0, F_coulomb=5.0)
    s = PlantState(x=0.0, v=0.001)
    for _ in range(100):
        s = step_plant(s, 0.0, p, DT)
        assert s.v >= 0.0
    assert s.v == 0.0


def test_negative_cable_force_rejected():
    with pytest.raises(ValueError, match="cables only pull"):
        step_plant(PlantState(), -1.0, PlantParams(), DT)


def test_free_fall_position_matches_kinematics():
    # x = g t^2 / 2 within 0.1% after 0.1 s at the default substep
    p = PlantParams(m=0.5, c_visc=0.0, F_coulomb=0.0)
    s = PlantState()
    n = int(round(0.1 / DT))
    for _ in range(n):
        s = step_plant(s, 0.0, p, DT)
    t = n * DT
    assert abs(s.x - 0.5 * p.g * t * t) / (0.5 * p.g * t * t) < 1e-3


def test_energy_drift_free_fall():
    # conservative setup: kinetic energy tracks released potential to < 0.01%
    p = PlantParams(m=0.5, c_visc=0.0, F_coulomb=0.0)
    s = PlantState()
    for _ in range(int(1.0 / DT)):
        s = step_plant(s, 0.0, p, DT)
    kinetic = 0.5 * s.v**2
    released = p.g * s.x
    assert abs(kinetic - released) / released < 1e-4


class TestEncoder:
    spec = QuantizerSpec()

    def test_step_value(self):
        assert self.spec.encoder_step == pytest.approx(
            2 * math.pi * 0.01 / 4000, rel=1e-12
        )

    def test_zero(self):
        assert read_encoder(0.0, self.spec) == 0.0

    def test_derived_six_steps(self):
        # 1e-4 m lies between the 6th and 7th encoder step
        step = self.spec.encoder_step
        assert read_encoder(1e-4, self.spec) == pytest.approx(6 * step, rel=1e-12)
        assert read_encoder(1e-4, self.spec) == pytest.approx(9.4248e-5, rel=1e-4)

    def test_just_below_one_step(self):
        assert read_encoder(self.spec.encoder_step * 0.999, self.spec) == 0.0

    @given(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False))
    def test_idempotent(self, x):
        q = read_encoder(x, self.spec)
        assert read_encoder(q, self.spec) == q

    @given(
        st.floats(min_value=-1.0, max_value=1.0, allow_nan=False),
        st.floats(min_value=0.0, max_value=0.1, allow_nan=False),
    )
    def test_monotone(self, x, dx):
        assert read_encoder(x + dx, self.spec) >= read_encoder(x, self.spec)


class TestCurrent:
    spec = QuantizerSpec()
    calib = ForceCalib()

    def test_zero(self):
        assert apply_current(0.0, self.spec, self.calib) == (0.0, 0.0)

    def test_clamp_at_peak(self):
        i, f = apply_current(7.0, self.spec, self.calib)
        assert i == 6.6
        assert f == pytest.approx(66.0)

    def test_rounding(self):
        i, _ = apply_current(0.100, self.spec, self.calib)
        assert i == pytest.approx(2 * 0.0472, rel=1e-12)

    def test_negative_clamps_to_zero(self):
        assert apply_current(-0.3, self.spec, self.calib)[0] == 0.0

    @given(st.floats(min_value=0.0, max_value=10.0, allow_nan=False))
    def test_quantize_idempotent(self, i):
        q = quantize_current(i, self.spec.current_step)
        assert quantize_current(q, self.spec.current_step) == pytest.approx(q, abs=1e-12)


class TestMonitor:
    calib = ForceCalib()

    def test_no_noise_passthrough(self):
        spec = QuantizerSpec(monitor_noise_pp=0.0)
        rng = np.random.default_rng(0)
        i_app, _ = apply_current(1.0, spec, self.calib)
        assert monitor_force(i_app, spec, self.calib, rng) == pytest.approx(
            self.calib.K_F * i_app
        )

    def test_enumerated_outputs(self):
        # 1.0 A with +-0.0236 A of noise quantizes to 21 or 22 steps only
        spec = QuantizerSpec()
        expected = {21 * 0.0472, 22 * 0.0472}
        rng = np.random.default_rng(3)
        seen = set()
        for _ in range(2000):
            f = monitor_force(1.0, spec, self.calib, rng) / self.calib.K_F
            assert any(abs(f - e) < 1e-12 for e in expected)
            seen.add(round(f, 6))
        assert len(seen) == 2
        assert 0.9912 in seen and 1.0384 in seen

    def test_seeded_sequence_repeats(self):
        spec = QuantizerSpec()
        a = [monitor_force(1.0, spec, self.calib, np.random.default_rng([7, i]))
             for i in range(20)]
        b = [monitor_force(1.0, spec, self.calib, np.random.default_rng([7, i]))
             for i in range(20)]
        assert a == b
