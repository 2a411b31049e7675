"""Lossless transmission-line primitives and two-port ABCD algebra.

All public functions take ordinary frequency in Hz or angular frequency in
rad/s as indicated by the argument name; lines are lossless by design.
Impedance functions return the INFINITE_IMPEDANCE sentinel at genuine poles
instead of raising or overflowing, so callers can branch explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class InfiniteImpedance:
    """Sentinel marking an impedance pole (open-circuit condition)."""

    def __repr__(self):
        return "InfiniteImpedance"


INFINITE_IMPEDANCE = InfiniteImpedance()

# Distance (in units of pi) from a trig singularity below which we report a
# pole rather than returning a huge finite number.
_POLE_TOL = 1e-12


@dataclass(frozen=True)
class LineSpec:
    """Geometry and electrical parameters of a lossless line segment.

    z0       characteristic impedance, ohm
    v_phase  phase velocity, m/s
    length   physical length, m
    """

    z0: float
    v_phase: float
    length: float

    def __post_init__(self):
        if self.z0 <= 0:
            raise ValueError(f"z0 must be positive, got {self.z0}")
        if self.v_phase <= 0:
            raise ValueError(f"v_phase must be positive, got {self.v_phase}")
        if self.length < 0:
            raise ValueError(f"length must be non-negative, got {self.length}")


@dataclass(frozen=True)
class AbcdMatrix:
    """Chain (ABCD) matrix of a reciprocal two-port: det = a*d - b*c = 1."""

    a: complex
    b: complex
    c: complex
    d: complex

    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    @staticmethod
    def identity() -> "AbcdMatrix":
        return AbcdMatrix(1.0, 0.0, 0.0, 1.0)


def propagation_constant(f: float, v_phase: float) -> float:
    """Propagation constant beta = 2*pi*f / v_phase in rad/m."""
    if v_phase <= 0:
        raise ValueError(f"v_phase must be positive, got {v_phase}")
    if f < 0:
        raise ValueError(f"frequency must be non-negative, got {f}")
    return 2.0 * math.pi * f / v_phase


def abcd_series_capacitor(c: float, omega: float) -> AbcdMatrix:
    """ABCD matrix [[1, 1/(j*omega*C)], [0, 1]] of a series capacitor."""
    if c <= 0:
        raise ValueError(f"capacitance must be positive, got {c}")
    if omega <= 0:
        raise ValueError("series capacitor is an open circuit at DC (omega <= 0)")
    return AbcdMatrix(1.0, 1.0 / (1j * omega * c), 0.0, 1.0)


def abcd_line(line: LineSpec, omega: float) -> AbcdMatrix:
    """ABCD matrix of a lossless line: [[cos bl, jZ0 sin bl], [j sin bl / Z0, cos bl]]."""
    bl = omega * line.length / line.v_phase
    cos_bl = math.cos(bl)
    sin_bl = math.sin(bl)
    return AbcdMatrix(cos_bl, 1j * line.z0 * sin_bl, 1j * sin_bl / line.z0, cos_bl)


def cascade(m1: AbcdMatrix, m2: AbcdMatrix) -> AbcdMatrix:
    """Matrix product m1 * m2 (m1 nearest the input port)."""
    return AbcdMatrix(
        m1.a * m2.a + m1.b * m2.c,
        m1.a * m2.b + m1.b * m2.d,
        m1.c * m2.a + m1.d * m2.c,
        m1.c * m2.b + m1.d * m2.d,
    )


def _near_multiple_of_pi(x: float) -> bool:
    return abs(x / math.pi - round(x / math.pi)) < _POLE_TOL


def _near_odd_multiple_of_half_pi(x: float) -> bool:
    # x close to (2k+1)*pi/2  <=>  x/pi close to k + 1/2
    frac = x / math.pi - math.floor(x / math.pi)
    return abs(frac - 0.5) < _POLE_TOL


def open_stub_impedance(line: LineSpec, omega: float):
    """Input impedance Z0 / (j tan(beta*l)) of an open-circuited stub.

    Returns exactly 0j at the quarter-wave condition beta*l = (2k+1)*pi/2
    and INFINITE_IMPEDANCE at beta*l = k*pi.
    """
    if omega <= 0:
        raise ValueError("omega must be positive")
    bl = omega * line.length / line.v_phase
    if _near_multiple_of_pi(bl):
        return INFINITE_IMPEDANCE
    if _near_odd_multiple_of_half_pi(bl):
        return 0j
    return line.z0 / (1j * math.tan(bl))


def open_line_voltage_ratio(
    l_from_open_1: float, l_from_open_2: float, line: LineSpec, omega: float
):
    """Standing-wave voltage ratio cos(beta*z1)/cos(beta*z2) on an open line.

    z1 and z2 are distances from the open end. Returns INFINITE_IMPEDANCE as
    a pole sentinel where the denominator voltage has a node.
    """
    if l_from_open_1 < 0 or l_from_open_2 < 0:
        raise ValueError("distances from the open end must be non-negative")
    beta = omega / line.v_phase
    bz1 = beta * l_from_open_1
    bz2 = beta * l_from_open_2
    if _near_odd_multiple_of_half_pi(bz2):
        return INFINITE_IMPEDANCE
    if _near_odd_multiple_of_half_pi(bz1):
        return 0.0
    return math.cos(bz1) / math.cos(bz2)
