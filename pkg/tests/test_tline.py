"""Transmission-line primitives: ABCD algebra, stubs, standing waves."""

import math

import numpy as np
import pytest

from purcellkit.tline import (
    INFINITE_IMPEDANCE,
    AbcdMatrix,
    LineSpec,
    abcd_line,
    abcd_series_capacitor,
    cascade,
    open_line_voltage_ratio,
    open_stub_impedance,
    propagation_constant,
)


def test_propagation_constant_zero_frequency():
    assert propagation_constant(0.0, 1.19e8) == 0.0


def test_propagation_constant_quarter_wave_identity():
    l = 0.00595
    v = 1.19e8
    f = v / (4.0 * l)
    assert propagation_constant(f, v) * l == pytest.approx(math.pi / 2, rel=1e-12)


def test_propagation_constant_hand_value():
    # 2*pi*5e9/1.19e8
    assert propagation_constant(5e9, 1.19e8) == pytest.approx(264.0, rel=1e-3)


def test_propagation_constant_rejects_bad_velocity():
    with pytest.raises(ValueError):
        propagation_constant(1e9, 0.0)
    with pytest.raises(ValueError):
        propagation_constant(-1e9, 1e8)


def test_series_capacitor_matrix():
    omega = 2 * math.pi * 5e9
    m = abcd_series_capacitor(10e-15, omega)
    assert m.a == 1 and m.d == 1 and m.c == 0
    assert m.b == pytest.approx(-1j * 3183.1, rel=1e-4)
    assert m.det() == pytest.approx(1.0)


def test_series_capacitor_short_circuit_limit():
    m = abcd_series_capacitor(1.0, 2 * math.pi * 5e9)
    assert abs(m.b) < 1e-10


def test_series_capacitor_rejects_dc():
    with pytest.raises(ValueError):
        abcd_series_capacitor(1e-15, 0.0)


def test_abcd_line_zero_length_is_identity():
    m = abcd_line(LineSpec(50.0, 1.19e8, 0.0), 2 * math.pi * 5e9)
    assert (m.a, m.b, m.c, m.d) == (1.0, 0.0, 0.0, 1.0)


def test_abcd_line_quarter_wave():
    v, l = 1.19e8, 0.00595
    f = v / (4.0 * l)
    m = abcd_line(LineSpec(50.0, v, l), 2 * math.pi * f)
    assert abs(m.a) < 1e-12 and abs(m.d) < 1e-12
    assert m.b == pytest.approx(1j * 50.0, rel=1e-12)
    assert m.c == pytest.approx(1j / 50.0, rel=1e-12)


def test_cascade_identity_and_determinant():
    m = abcd_line(LineSpec(50.0, 1.19e8, 0.003), 2 * math.pi * 4e9)
    out = cascade(AbcdMatrix.identity(), m)
    assert (out.a, out.b, out.c, out.d) == (m.a, m.b, m.c, m.d)
    m2 = abcd_series_capacitor(5e-15, 2 * math.pi * 4e9)
    assert cascade(m, m2).det() == pytest.approx(m.det() * m2.det(), rel=1e-12)


def test_cascade_additivity():
    rng = np.random.default_rng(3)
    for _ in range(50):
        l1, l2 = rng.uniform(1e-4, 0.02, 2)
        f = rng.uniform(1e9, 9e9)
        omega = 2 * math.pi * f
        spec = lambda l: LineSpec(50.0, 1.19e8, l)  # noqa: E731
        lhs = cascade(abcd_line(spec(l1), omega), abcd_line(spec(l2), omega))
        rhs = abcd_line(spec(l1 + l2), omega)
        for attr in "abcd":
            got, want = getattr(lhs, attr), getattr(rhs, attr)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_unit_determinant_property():
    rng = np.random.default_rng(11)
    for _ in range(200):
        omega = 2 * math.pi * rng.uniform(1e8, 1e10)
        if rng.random() < 0.5:
            m = abcd_line(LineSpec(rng.uniform(10, 200), 1.19e8, rng.uniform(0, 0.05)), omega)
        else:
            m = abcd_series_capacitor(rng.uniform(1e-16, 1e-12), omega)
        assert abs(m.det() - 1.0) < 1e-12


def test_open_stub_quarter_wave_short():
    v, l = 1.19e8, 0.00595
    f = v / (4.0 * l)
    assert open_stub_impedance(LineSpec(50.0, v, l), 2 * math.pi * f) == 0j


def test_open_stub_eighth_wave():
    v, l = 1.19e8, 0.00595
    f = v / (8.0 * l)  # beta*l = pi/4
    z = open_stub_impedance(LineSpec(50.0, v, l), 2 * math.pi * f)
    assert z == pytest.approx(-50j, rel=1e-12)


def test_open_stub_pole_at_half_wave():
    v, l = 1.19e8, 0.00595
    f = v / (2.0 * l)  # beta*l = pi
    assert open_stub_impedance(LineSpec(50.0, v, l), 2 * math.pi * f) is INFINITE_IMPEDANCE


def test_open_stub_capacitive_asymptote():
    v, l = 1.19e8, 0.00595
    f = 1e5  # beta*l tiny
    z = open_stub_impedance(LineSpec(50.0, v, l), 2 * math.pi * f)
    bl = 2 * math.pi * f * l / v
    assert z == pytest.approx(-1j * 50.0 / bl, rel=1e-3)


def test_open_stub_matches_abcd_reduction():
    # 1-port reduction of the line terminated in an open: Z_in = A/C
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 1000:
        l = rng.uniform(1e-4, 0.03)
        f = rng.uniform(1e8, 1e10)
        omega = 2 * math.pi * f
        spec = LineSpec(50.0, 1.19e8, l)
        z = open_stub_impedance(spec, omega)
        if z is INFINITE_IMPEDANCE:
            continue
        m = abcd_line(spec, omega)
        if abs(m.c) < 1e-30:
            continue
        assert complex(z) == pytest.approx(m.a / m.c, rel=1e-10, abs=1e-10)
        checked += 1


def test_voltage_ratio_examples():
    spec = LineSpec(50.0, 1.19e8, 0.02)
    omega = 2 * math.pi * 3e9
    beta = omega / spec.v_phase
    assert open_line_voltage_ratio(0.004, 0.004, spec, omega) == pytest.approx(1.0)
    z_quarter = (math.pi / 2) / beta
    assert open_line_voltage_ratio(z_quarter, 0.001, spec, omega) == pytest.approx(0.0, abs=1e-9)
    z_third = (math.pi / 3) / beta
    assert open_line_voltage_ratio(z_third, 0.0, spec, omega) == pytest.approx(0.5, rel=1e-9)


def test_voltage_ratio_pole_sentinel():
    spec = LineSpec(50.0, 1.19e8, 0.02)
    omega = 2 * math.pi * 3e9
    beta = omega / spec.v_phase
    z_quarter = (math.pi / 2) / beta
    assert open_line_voltage_ratio(0.001, z_quarter, spec, omega) is INFINITE_IMPEDANCE


def test_linespec_validation():
    with pytest.raises(ValueError):
        LineSpec(-50.0, 1.19e8, 0.01)
    with pytest.raises(ValueError):
        LineSpec(50.0, 0.0, 0.01)
    with pytest.raises(ValueError):
        LineSpec(50.0, 1.19e8, -0.01)
