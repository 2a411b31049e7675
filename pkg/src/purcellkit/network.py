"""Exact frequency-domain nodal analysis of lumped + transmission-line netlists.

Transmission lines are stamped with their exact trigonometric two-port
admittances (y11 = y22 = -j cot(bl)/z0, y12 = y21 = j/(z0 sin bl)); no lumped
discretization is used anywhere in the production path. Singular frequencies
are detected by a condition-number threshold and reported, never silently
regularized.

Netlists are immutable after construction; every frequency point solves
independently, so sweeps are trivially data-parallel.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .tline import INFINITE_IMPEDANCE, LineSpec

COND_LIMIT = 1e12

ELEMENT_KINDS = ("resistor", "capacitor", "inductor", "tline")


class NetlistError(ValueError):
    """Malformed netlist: undeclared node, bad value, duplicate port name."""


class SingularFrequencyError(ArithmeticError):
    """The admittance matrix is numerically singular at a given frequency."""

    def __init__(self, f: float, detail: str = ""):
        self.frequency = f
        msg = f"singular network at f = {f:.9g} Hz"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


@dataclass(frozen=True)
class Element:
    """One circuit element between two named nodes.

    kind is one of 'resistor' (ohm), 'capacitor' (farad), 'inductor' (henry)
    or 'tline'. Lumped elements carry `value`; tline elements carry `line`.
    """

    kind: str
    nodes: tuple
    value: float = 0.0
    line: LineSpec | None = None

    def __post_init__(self):
        if self.kind not in ELEMENT_KINDS:
            raise NetlistError(f"unknown element kind {self.kind!r}")
        if len(self.nodes) != 2:
            raise NetlistError(f"element needs exactly two nodes, got {self.nodes}")
        if self.kind == "tline":
            if self.line is None:
                raise NetlistError("tline element requires a LineSpec")
            if self.line.length <= 0:
                raise NetlistError("tline element must have positive length")
        elif self.value <= 0:
            raise NetlistError(
                f"{self.kind} value must be positive, got {self.value}"
            )


@dataclass(frozen=True)
class Port:
    name: str
    node: str
    z0: float = 50.0

    def __post_init__(self):
        if self.z0 <= 0:
            raise NetlistError(f"port reference impedance must be positive, got {self.z0}")


@dataclass(frozen=True)
class Netlist:
    """Node/element graph with declared ports and a distinguished ground."""

    nodes: tuple
    elements: tuple
    ports: tuple
    ground: str = "gnd"

    def __post_init__(self):
        if self.ground not in self.nodes:
            raise NetlistError(f"ground node {self.ground!r} not declared")
        declared = set(self.nodes)
        for el in self.elements:
            for n in el.nodes:
                if n not in declared:
                    raise NetlistError(f"element references undeclared node {n!r}")
        names = [p.name for p in self.ports]
        if len(names) != len(set(names)):
            raise NetlistError(f"duplicate port names in {names}")
        for p in self.ports:
            if p.node not in declared:
                raise NetlistError(f"port {p.name!r} references undeclared node {p.node!r}")

    def port(self, name: str) -> Port:
        for p in self.ports:
            if p.name == name:
                return p
        raise NetlistError(f"no port named {name!r} (have {[p.name for p in self.ports]})")

    @property
    def unknown_nodes(self) -> tuple:
        """Non-ground nodes, in declaration order (matrix row/col order)."""
        return tuple(n for n in self.nodes if n != self.ground)


@dataclass
class NetlistBuilder:
    """Mutable helper that accumulates elements and freezes into a Netlist."""

    ground: str = "gnd"
    _nodes: list = field(default_factory=list)
    _elements: list = field(default_factory=list)
    _ports: list = field(default_factory=list)

    def node(self, name: str) -> str:
        if name not in self._nodes:
            self._nodes.append(name)
        return name

    def resistor(self, n1, n2, ohm):
        self._elements.append(Element("resistor", (self.node(n1), self.node(n2)), ohm))

    def capacitor(self, n1, n2, farad):
        self._elements.append(Element("capacitor", (self.node(n1), self.node(n2)), farad))

    def inductor(self, n1, n2, henry):
        self._elements.append(Element("inductor", (self.node(n1), self.node(n2)), henry))

    def tline(self, n1, n2, line: LineSpec):
        self._elements.append(Element("tline", (self.node(n1), self.node(n2)), line=line))

    def port(self, name, node, z0=50.0):
        self._ports.append(Port(name, self.node(node), z0))

    def build(self) -> Netlist:
        self.node(self.ground)
        return Netlist(tuple(self._nodes), tuple(self._elements), tuple(self._ports), self.ground)


@dataclass
class AcSolution:
    """Solved node voltages for a unit voltage drive at one port."""

    frequency: float
    node_voltages: dict
    source_current: complex

    def voltage(self, node: str) -> complex:
        return self.node_voltages[node]


def _node_index(netlist: Netlist) -> dict:
    return {n: i for i, n in enumerate(netlist.unknown_nodes)}


def assemble_admittance(netlist: Netlist, f: float) -> np.ndarray:
    """Complex node-admittance matrix over non-ground nodes at frequency f."""
    if f <= 0:
        raise ValueError(f"frequency must be positive, got {f}")
    omega = 2.0 * math.pi * f
    idx = _node_index(netlist)
    n = len(idx)
    y = np.zeros((n, n), dtype=complex)

    def stamp(na, nb, yaa, yab, yba, ybb):
        ia = idx.get(na)
        ib = idx.get(nb)
        if ia is not None:
            y[ia, ia] += yaa
        if ib is not None:
            y[ib, ib] += ybb
        if ia is not None and ib is not None:
            y[ia, ib] += yab
            y[ib, ia] += yba

    for el in netlist.elements:
        na, nb = el.nodes
        if el.kind == "resistor":
            g = 1.0 / el.value
            stamp(na, nb, g, -g, -g, g)
        elif el.kind == "capacitor":
            yc = 1j * omega * el.value
            stamp(na, nb, yc, -yc, -yc, yc)
        elif el.kind == "inductor":
            yl = 1.0 / (1j * omega * el.value)
            stamp(na, nb, yl, -yl, -yl, yl)
        else:  # tline: exact lossless two-port, both ends referenced to ground
            line = el.line
            bl = omega * line.length / line.v_phase
            s = math.sin(bl)
            if abs(s) < 1e-12:
                raise SingularFrequencyError(f, f"sin(beta*l) = 0 for line of length {line.length}")
            y0 = 1.0 / line.z0
            y_self = -1j * y0 * math.cos(bl) / s
            y_mut = 1j * y0 / s
            stamp(na, nb, y_self, y_mut, y_mut, y_self)
    return y


def _check_cond(y: np.ndarray, f: float):
    if y.size == 0:
        raise SingularFrequencyError(f, "empty matrix")
    c = np.linalg.cond(y)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise SingularFrequencyError(f, f"condition number {c:.3g}")


def solve_ac(netlist: Netlist, drive_port: str, f: float) -> AcSolution:
    """Node voltages for a unit (1 V) voltage source at `drive_port`."""
    port = netlist.port(drive_port)
    y = assemble_admittance(netlist, f)
    idx = _node_index(netlist)
    k = idx[port.node]
    others = [i for i in range(y.shape[0]) if i != k]
    y_oo = y[np.ix_(others, others)]
    y_ok = y[others, k]
    if others:
        _check_cond(y_oo, f)
        v_o = np.linalg.solve(y_oo, -y_ok)
        resid = y_oo @ v_o + y_ok
        scale = max(np.abs(y_oo).max(), np.abs(y_ok).max(), 1.0)
        if np.abs(resid).max() > 1e-10 * scale:
            raise SingularFrequencyError(f, "KCL residual above tolerance")
    else:
        v_o = np.zeros(0, dtype=complex)
    voltages = {netlist.ground: 0j, port.node: 1.0 + 0j}
    for j, i in enumerate(others):
        voltages[netlist.unknown_nodes[i]] = complex(v_o[j])
    i_src = complex(y[k, k] + (y[k, others] @ v_o if others else 0.0))
    return AcSolution(f, voltages, i_src)


def _impedance_matrix(netlist: Netlist, f: float) -> np.ndarray:
    """Open-circuit impedance matrix Z[i, j] = V_i per unit current at port j."""
    y = assemble_admittance(netlist, f)
    _check_cond(y, f)
    idx = _node_index(netlist)
    cols = [idx[p.node] for p in netlist.ports]
    rhs = np.zeros((y.shape[0], len(cols)), dtype=complex)
    for j, c in enumerate(cols):
        rhs[c, j] = 1.0
    v = np.linalg.solve(y, rhs)
    return v[cols, :]


def transfer_impedance(netlist: Netlist, v_port: str, i_port: str, f: float):
    """V(v_port) per unit current injected at i_port, all other ports open.

    Returns INFINITE_IMPEDANCE at network poles.
    """
    vp = netlist.port(v_port)
    ip = netlist.port(i_port)
    try:
        y = assemble_admittance(netlist, f)
        _check_cond(y, f)
    except SingularFrequencyError:
        return INFINITE_IMPEDANCE
    idx = _node_index(netlist)
    rhs = np.zeros(y.shape[0], dtype=complex)
    rhs[idx[ip.node]] = 1.0
    v = np.linalg.solve(y, rhs)
    return complex(v[idx[vp.node]])


def driving_point_admittance(netlist: Netlist, port: str, f: float) -> complex:
    """Y = I/V looking from `port` into the network (port's own source removed)."""
    z = transfer_impedance(netlist, port, port, f)
    if z is INFINITE_IMPEDANCE:
        return 0j
    if z == 0:
        raise SingularFrequencyError(f, f"port {port!r} is shorted")
    return 1.0 / z


def re_y_via_output_power(
    netlist: Netlist, source_port: str, out_port: str, f: float
) -> float:
    """Re[Y] at the source port from the power dissipated in the output load.

    Computes |V_out / V_q|^2 / Z0 for a unit source drive. Valid when the
    power leaking to the input port is negligible compared with the output
    (strongly asymmetric coupling capacitors). The output port must be
    terminated in its reference impedance inside the netlist.
    """
    out = netlist.port(out_port)
    terminated = any(
        el.kind == "resistor"
        and set(el.nodes) == {out.node, netlist.ground}
        and math.isclose(el.value, out.z0, rel_tol=1e-6)
        for el in netlist.elements
    )
    if not terminated:
        raise NetlistError(
            f"output port {out_port!r} is not terminated in its reference "
            f"impedance {out.z0} ohm inside the netlist"
        )
    sol = solve_ac(netlist, source_port, f)
    v_out = sol.voltage(out.node)
    return abs(v_out) ** 2 / out.z0


def s_parameters(netlist: Netlist, f: float) -> np.ndarray:
    """Port scattering matrix from the open-circuit impedance matrix.

    S = (B - I)(B + I)^-1 with B = R^-1/2 Z R^-1/2, which reduces to
    (Z - Zref)(Z + Zref)^-1 for a uniform reference impedance and keeps S
    symmetric for reciprocal networks with mixed references.
    """
    if not netlist.ports:
        raise NetlistError("s_parameters requires at least one declared port")
    z = _impedance_matrix(netlist, f)
    r_inv_sqrt = np.diag([1.0 / math.sqrt(p.z0) for p in netlist.ports])
    b = r_inv_sqrt @ z @ r_inv_sqrt
    eye = np.eye(len(netlist.ports))
    return (b - eye) @ np.linalg.inv(b + eye)


def sweep(func, netlist: Netlist, frequencies, *args):
    """Evaluate `func(netlist, *args, f)` over a frequency list, in order.

    Singular points are returned as None so callers can flag gaps instead of
    aborting a whole sweep.
    """
    out = []
    for f in frequencies:
        try:
            out.append(func(netlist, *args, f))
        except SingularFrequencyError:
            out.append(None)
    return out


# --- JSON netlist schema -------------------------------------------------
#
# {
#   "ground": "gnd",
#   "nodes": ["in", "a", "gnd"],
#   "elements": [
#     {"kind": "resistor",  "nodes": ["in", "gnd"], "value": 50.0},
#     {"kind": "capacitor", "nodes": ["in", "a"],   "value": 1e-15},
#     {"kind": "tline",     "nodes": ["a", "gnd"],
#      "z0": 50.0, "v_phase": 1.19e8, "length": 0.00595}
#   ],
#   "ports": [{"name": "1", "node": "in", "z0": 50.0}]
# }


def netlist_to_dict(netlist: Netlist) -> dict:
    elements = []
    for el in netlist.elements:
        d = {"kind": el.kind, "nodes": list(el.nodes)}
        if el.kind == "tline":
            d.update(z0=el.line.z0, v_phase=el.line.v_phase, length=el.line.length)
        else:
            d["value"] = el.value
        elements.append(d)
    return {
        "ground": netlist.ground,
        "nodes": list(netlist.nodes),
        "elements": elements,
        "ports": [{"name": p.name, "node": p.node, "z0": p.z0} for p in netlist.ports],
    }


def netlist_from_dict(data: dict) -> Netlist:
    try:
        elements = []
        for d in data["elements"]:
            if d["kind"] == "tline":
                line = LineSpec(d["z0"], d["v_phase"], d["length"])
                elements.append(Element("tline", tuple(d["nodes"]), line=line))
            else:
                elements.append(Element(d["kind"], tuple(d["nodes"]), d["value"]))
        ports = tuple(Port(p["name"], p["node"], p.get("z0", 50.0)) for p in data["ports"])
        return Netlist(tuple(data["nodes"]), tuple(elements), ports, data.get("ground", "gnd"))
    except KeyError as exc:
        raise NetlistError(f"netlist document missing key {exc}") from exc


def load_netlist(path) -> Netlist:
    with open(path) as fh:
        return netlist_from_dict(json.load(fh))


def save_netlist(netlist: Netlist, path):
    with open(path, "w") as fh:
        json.dump(netlist_to_dict(netlist), fh, indent=2)
        fh.write("\n")
