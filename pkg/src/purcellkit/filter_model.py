"""Multi-mode Purcell filter topology, closed-form transfer impedance,
notch placement, and Purcell-limited relaxation time.

The filter is an open-ended transmission-line resonator tapped at two
points: the qubit couples at a distance l_p1 from the input end, and the
output capacitor sits l_p3 from the far open end, turning that final
segment into an open quarter-wave stub with a notch at f = v/(4*l_p3).

Geometry presets shipped here are derived, not measured: the source
experiment never discloses its coupling capacitances or phase velocity, so
the defaults are tuned once so that the fundamental mode lands near
3.6 GHz and the notch contrast targets hold.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from . import network
from .network import Netlist, NetlistBuilder
from .tline import INFINITE_IMPEDANCE, LineSpec, propagation_constant

VARIANTS = ("with_stub", "without_stub")

# Re[Y] below this is treated as "no measurable dissipation": the T_p value
# is tagged above-ceiling rather than reported as a finite number.
RE_Y_FLOOR = 1e-15


@dataclass(frozen=True)
class FilterGeometry:
    """Physical description of the filter circuit (all lengths m, caps F)."""

    l_p1: float
    l_p2: float
    l_p3: float
    line: LineSpec
    c_in: float
    c_out: float
    c_qf: float
    c_qr: float
    c_fr: float
    c_q: float
    resonator: LineSpec

    def __post_init__(self):
        for name in ("l_p1", "l_p2", "l_p3"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.total_length <= 0:
            raise ValueError("total filter length must be positive")
        for name in ("c_in", "c_out", "c_qf", "c_qr", "c_fr", "c_q"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def total_length(self) -> float:
        return self.l_p1 + self.l_p2 + self.l_p3


@dataclass
class TpCurve:
    """Purcell-limited relaxation time vs frequency.

    Entries where Re[Y] fell below RE_Y_FLOOR carry tp = inf and
    ceiling[i] = True (above the model's measurement ceiling).
    """

    frequencies: np.ndarray
    tp: np.ndarray
    ceiling: np.ndarray
    variant: str

    def to_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["f_hz", "tp_seconds", "ceiling_flag"])
            for f, tp, flag in zip(self.frequencies, self.tp, self.ceiling):
                writer.writerow([repr(float(f)), repr(float(tp)), int(flag)])


def build_netlist(
    geom: FilterGeometry, variant: str, terminated: bool = True
) -> Netlist:
    """Netlist of the full readout chain for one filter variant.

    Ports: "1" input feedline, "2" output feedline, "3" qubit. The
    'without_stub' variant folds l_p3 to zero with the total length
    preserved, placing the output capacitor at the open end. When
    `terminated`, both feedline ports carry their reference impedance to
    ground (needed for dissipation, hence for T_p).
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    b = NetlistBuilder()
    z0 = geom.line.z0
    v = geom.line.v_phase

    stub = variant == "with_stub" and geom.l_p3 > 0
    if stub:
        segments = [("f0", "fa", geom.l_p1), ("fa", "fb", geom.l_p2), ("fb", "fc", geom.l_p3)]
    else:
        segments = [("f0", "fa", geom.l_p1), ("fa", "fb", geom.l_p2 + geom.l_p3)]
    # zero-length segments collapse: their endpoints are the same node
    alias: dict = {}
    for n1, n2, length in segments:
        start = alias.get(n1, n1)
        if length > 0:
            b.tline(start, n2, LineSpec(z0, v, length))
        else:
            alias[n2] = start
    fa = alias.get("fa", "fa")
    fb = alias.get("fb", "fb")
    b.capacitor("in", alias.get("f0", "f0"), geom.c_in)
    b.capacitor("out", fb, geom.c_out)

    # readout resonator: quarter-wave line shorted at the far end,
    # coupled capacitively to the qubit and to the filter tap
    b.tline("r", b.ground, geom.resonator)
    b.capacitor("q", "r", geom.c_qr)
    b.capacitor(fa, "r", geom.c_fr)
    b.capacitor("q", fa, geom.c_qf)
    b.capacitor("q", b.ground, geom.c_q)

    if terminated:
        b.resistor("in", b.ground, 50.0)
        b.resistor("out", b.ground, 50.0)
    b.port("1", "in", 50.0)
    b.port("2", "out", 50.0)
    b.port("3", "q", 50.0)
    return b.build()


def build_transfer_model(geom: FilterGeometry) -> Netlist:
    """Bare three-segment line used to derive the closed-form Z23.

    The coupling capacitors drop out of the transfer-impedance derivation,
    leaving the open-open line with the qubit tap ("3") at l_p1 from the
    input end and the output tap ("2") at l_p3 from the far end.
    """
    b = NetlistBuilder()
    z0, v = geom.line.z0, geom.line.v_phase
    b.tline("f0", "fa", LineSpec(z0, v, geom.l_p1))
    b.tline("fa", "fb", LineSpec(z0, v, geom.l_p2))
    b.tline("fb", "fc", LineSpec(z0, v, geom.l_p3))
    b.port("2", "fb", 50.0)
    b.port("3", "fa", 50.0)
    return b.build()


def z23_closed_form(geom: FilterGeometry, f: float):
    """Closed-form transfer impedance between the output tap and qubit tap.

    Z23 = -j Z0 cos(b l_p1) cos(b l_p3) / sin(b l_p),

    derived by injecting current at the qubit tap of the open-open line and
    reading the standing-wave voltage at the output tap. Zeros sit exactly
    where cos(b l_p1) = 0 or cos(b l_p3) = 0 (either tap a quarter wave
    from its open end); poles sit at the bare-line resonances
    sin(b l_p) = 0 and are reported as a sentinel.
    """
    if f <= 0:
        raise ValueError(f"frequency must be positive, got {f}")
    beta = propagation_constant(f, geom.line.v_phase)
    b1 = beta * geom.l_p1
    b3 = beta * geom.l_p3
    num = math.cos(b1) * math.cos(b3)
    den = math.sin(beta * geom.total_length)
    if abs(den) < 1e-12 * (1.0 + abs(num)):
        return INFINITE_IMPEDANCE
    return -1j * geom.line.z0 * num / den


def notch_frequencies(geom: FilterGeometry, band) -> list:
    """All notch frequencies in (f_lo, f_hi), with their family.

    Stub notches satisfy beta*l_p3 = (2k+1)*pi/2; input-segment notches
    satisfy beta*l_p1 = (2k+1)*pi/2. Returned sorted ascending as
    (frequency_hz, family) tuples.
    """
    f_lo, f_hi = band
    if not f_hi > f_lo:
        raise ValueError(f"band must be a nonempty (lo, hi) range, got {band}")
    v = geom.line.v_phase
    out = []
    for length, family in ((geom.l_p3, "stub"), (geom.l_p1, "input_segment")):
        if length <= 0:
            continue
        k = 0
        while True:
            fk = (2 * k + 1) * v / (4.0 * length)
            if fk > f_hi:
                break
            if fk > f_lo:
                out.append((fk, family))
            k += 1
    out.sort(key=lambda item: item[0])
    return out


def tp_curve(
    geom: FilterGeometry,
    variant: str,
    band,
    n_points: int,
    method: str = "full_admittance",
) -> TpCurve:
    """Purcell-limited T_p = C_q / Re[Y] over a frequency band.

    `method` selects how Re[Y] is obtained: 'full_admittance' uses the
    driving-point admittance at the qubit port; 'output_power' uses the
    output-port voltage ratio (valid for strongly asymmetric c_out >> c_in).
    Solver singularities become NaN gaps, not failures.
    """
    if method not in ("full_admittance", "output_power"):
        raise ValueError(f"unknown method {method!r}")
    f_lo, f_hi = band
    freqs = np.linspace(f_lo, f_hi, n_points)
    netlist = build_netlist(geom, variant, terminated=True)
    tp = np.empty(n_points)
    ceiling = np.zeros(n_points, dtype=bool)
    for i, f in enumerate(freqs):
        try:
            if method == "full_admittance":
                re_y = network.driving_point_admittance(netlist, "3", f).real
            else:
                re_y = network.re_y_via_output_power(netlist, "3", "2", f)
        except network.SingularFrequencyError:
            tp[i] = np.nan
            continue
        if re_y < RE_Y_FLOOR:
            tp[i] = np.inf
            ceiling[i] = True
        else:
            tp[i] = geom.c_q / re_y
    return TpCurve(freqs, tp, ceiling, variant)


def single_mode_purcell_rate(g: float, kappa: float, delta: float) -> float:
    """Dispersive single-mode Purcell rate kappa * (g/delta)^2.

    All arguments are ordinary frequencies in Hz; units cancel so the
    result is a rate in Hz of the same convention.
    """
    if delta == 0:
        raise ValueError("delta must be nonzero (resonant case is outside the dispersive formula)")
    return kappa * (g / delta) ** 2


# --- geometry presets ----------------------------------------------------

_C = 2.998e8
_V_PHASE = _C / math.sqrt(6.35)  # coplanar waveguide on sapphire, ~1.19e8 m/s


def _preset_default() -> FilterGeometry:
    # lambda/2 fundamental near 3.6 GHz with l_p = 16.5 mm; stub notch at
    # 5 GHz; coupling point at 1% of the total length from the input end
    l_p = 16.5e-3
    l_p3 = _V_PHASE / (4.0 * 5.0e9)
    l_p1 = 0.01 * l_p
    return FilterGeometry(
        l_p1=l_p1,
        l_p2=l_p - l_p1 - l_p3,
        l_p3=l_p3,
        line=LineSpec(50.0, _V_PHASE, l_p),
        c_in=1e-15,
        c_out=150e-15,
        c_qf=1.3e-15,
        c_qr=4e-15,
        c_fr=6e-15,
        c_q=90e-15,
        resonator=LineSpec(50.0, _V_PHASE, _V_PHASE / (4.0 * 6.486e9)),
    )


def _preset_tapped() -> FilterGeometry:
    # coupling point at 39% of the total length, placing the input-segment
    # notch near 4.2 GHz in addition to the 5 GHz stub notch
    l_p1 = _V_PHASE / (4.0 * 4.2e9)
    l_p = l_p1 / 0.39
    l_p3 = _V_PHASE / (4.0 * 5.0e9)
    base = _preset_default()
    return replace(
        base,
        l_p1=l_p1,
        l_p2=l_p - l_p1 - l_p3,
        l_p3=l_p3,
        line=LineSpec(50.0, _V_PHASE, l_p),
    )


PRESETS = {
    "default": _preset_default,
    "tapped": _preset_tapped,
}


def preset(name: str) -> FilterGeometry:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r} (have {sorted(PRESETS)})") from None


def geometry_to_dict(geom: FilterGeometry) -> dict:
    return {
        "l_p1": geom.l_p1,
        "l_p2": geom.l_p2,
        "l_p3": geom.l_p3,
        "z0": geom.line.z0,
        "v_phase": geom.line.v_phase,
        "c_in": geom.c_in,
        "c_out": geom.c_out,
        "c_qf": geom.c_qf,
        "c_qr": geom.c_qr,
        "c_fr": geom.c_fr,
        "c_q": geom.c_q,
        "resonator_z0": geom.resonator.z0,
        "resonator_v_phase": geom.resonator.v_phase,
        "resonator_length": geom.resonator.length,
    }


def geometry_from_dict(data: dict) -> FilterGeometry:
    d = dict(data)
    line = LineSpec(d.pop("z0"), d.pop("v_phase"), d["l_p1"] + d["l_p2"] + d["l_p3"])
    resonator = LineSpec(
        d.pop("resonator_z0"), d.pop("resonator_v_phase"), d.pop("resonator_length")
    )
    return FilterGeometry(line=line, resonator=resonator, **d)


def load_geometry(path) -> FilterGeometry:
    with open(path) as fh:
        return geometry_from_dict(json.load(fh))


def save_geometry(geom: FilterGeometry, path):
    with open(path, "w") as fh:
        json.dump(geometry_to_dict(geom), fh, indent=2)
        fh.write("\n")
