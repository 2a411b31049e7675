"""Damped qubit-reset dynamics through a lossy filter mode.

The residual excitation of a qubit tuned into resonance with the filter
follows a piecewise closed form with three regimes (overdamped, critically
damped, underdamped) set by the coupling strength against a quarter of the
filter linewidth. An independent fixed-step ODE integrator of the
two-mode non-Hermitian system serves as the verification oracle.

All user-facing frequencies are ordinary frequencies in Hz; the evaluators
insert the 2*pi internally.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .fitting import levenberg_marquardt

# relative tolerance for deciding the critically damped boundary
REGIME_EPS = 1e-9

OVERDAMPED = "overdamped"
CRITICALLY_DAMPED = "critically_damped"
UNDERDAMPED = "underdamped"


@dataclass(frozen=True)
class ResetParams:
    """Coupling g_qf and filter linewidth kappa_f in Hz, plus the
    steady-state residual-excitation floor."""

    g_qf: float
    kappa_f: float
    p_exc_ss: float = 0.0

    def __post_init__(self):
        if self.g_qf < 0:
            raise ValueError(f"g_qf must be non-negative, got {self.g_qf}")
        if self.kappa_f <= 0:
            raise ValueError(f"kappa_f must be positive, got {self.kappa_f}")
        if not 0.0 <= self.p_exc_ss < 1.0:
            raise ValueError(f"p_exc_ss must be in [0, 1), got {self.p_exc_ss}")


@dataclass(frozen=True)
class QubitParams:
    """Static transmon parameters: max e-g frequency, anharmonicity, T1."""

    omega_eg_max: float
    anharmonicity: float
    t1: float

    def __post_init__(self):
        for name in ("omega_eg_max", "anharmonicity", "t1"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def fe_reset_drive_frequency(self, omega_fe: float) -> float:
        """e-g drive frequency whose f-e transition sits at omega_fe.

        For a weakly anharmonic transmon omega_fe = omega_eg - alpha, so
        the flux pulse must target omega_eg = omega_fe + alpha.
        """
        return omega_fe + self.anharmonicity


@dataclass(frozen=True)
class CascadeSchedule:
    """Timing plan of the f-e then e-g cascaded reset."""

    t_rst_f: float
    t_rst_e: float
    omega_rst_f: float
    omega_rst_e: float
    qubit: QubitParams | None = None

    def __post_init__(self):
        if self.t_rst_f < 0 or self.t_rst_e < 0:
            raise ValueError("reset durations must be non-negative")

    @property
    def total_duration(self) -> float:
        return self.t_rst_f + self.t_rst_e


def classify_regime(params: ResetParams) -> str:
    g = abs(params.g_qf)
    boundary = params.kappa_f / 4.0
    if g < boundary * (1.0 - REGIME_EPS):
        return OVERDAMPED
    if g > boundary * (1.0 + REGIME_EPS):
        return UNDERDAMPED
    return CRITICALLY_DAMPED


def _p_decay(params: ResetParams, t):
    """Bare three-branch decay (no steady-state floor), p(0) = 1."""
    g = 2.0 * math.pi * abs(params.g_qf)
    kappa = 2.0 * math.pi * params.kappa_f
    t = np.asarray(t, dtype=float)
    regime = classify_regime(params)
    if regime == OVERDAMPED:
        m1 = math.sqrt(kappa**2 - 16.0 * g**2) / 4.0
        # evaluate through exponentials to avoid cosh overflow cancellation
        ep = np.exp((m1 - kappa / 4.0) * t)
        em = np.exp((-m1 - kappa / 4.0) * t)
        amp = 0.5 * (1.0 + kappa / (4.0 * m1)) * ep + 0.5 * (1.0 - kappa / (4.0 * m1)) * em
        p = amp**2
    elif regime == CRITICALLY_DAMPED:
        p = np.exp(-kappa * t / 2.0) * (kappa * t / 4.0 + 1.0) ** 2
    else:
        m2 = math.sqrt(16.0 * g**2 - kappa**2) / 4.0
        p = (
            np.exp(-kappa * t / 2.0)
            * (np.cos(m2 * t) + kappa / (4.0 * m2) * np.sin(m2 * t)) ** 2
        )
    return p


def residual_excitation(params: ResetParams, t):
    """Residual excitation p_e(t) including the steady-state floor.

    Composed as p_ss + (1 - p_ss) * p_decay(t), which preserves p(0) = 1
    and p(inf) = p_ss. Accepts scalar or array t >= 0.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be non-negative")
    p = params.p_exc_ss + (1.0 - params.p_exc_ss) * _p_decay(params, t_arr)
    return float(p) if p.ndim == 0 else p


def oracle_residual(params: ResetParams, t):
    """Independent check of the closed form: integrate the resonant
    two-mode non-Hermitian system dc_q/dt = -i g c_f,
    dc_f/dt = -i g c_q - (kappa/2) c_f with a fixed-step RK4 scheme and
    return |c_q(t)|^2, floor-composed like residual_excitation.

    Accepts a scalar or a sorted array of times.
    """
    g = 2.0 * math.pi * abs(params.g_qf)
    kappa = 2.0 * math.pi * params.kappa_f
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0):
        raise ValueError("t must be non-negative")
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be sorted ascending")

    h_max = 1.0 / (200.0 * max(g, kappa))

    def deriv(cq, cf):
        return -1j * g * cf, -1j * g * cq - (kappa / 2.0) * cf

    cq, cf = 1.0 + 0j, 0j
    t_now = 0.0
    out = np.empty(times.size)
    for i, t_target in enumerate(times):
        span = t_target - t_now
        if span > 0:
            n_steps = max(1, math.ceil(span / h_max))
            h = span / n_steps
            for _ in range(n_steps):
                k1q, k1f = deriv(cq, cf)
                k2q, k2f = deriv(cq + 0.5 * h * k1q, cf + 0.5 * h * k1f)
                k3q, k3f = deriv(cq + 0.5 * h * k2q, cf + 0.5 * h * k2f)
                k4q, k4f = deriv(cq + h * k3q, cf + h * k3f)
                cq += h / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
                cf += h / 6.0 * (k1f + 2 * k2f + 2 * k3f + k4f)
            t_now = t_target
        p = min(max(abs(cq) ** 2, 0.0), 1.0 + 1e-9)
        out[i] = params.p_exc_ss + (1.0 - params.p_exc_ss) * p
    return float(out[0]) if np.isscalar(t) or np.ndim(t) == 0 else out


def _decay_bound(params: ResetParams, t: float) -> float:
    """Monotone upper bound on the bare decay at time t."""
    g = 2.0 * math.pi * abs(params.g_qf)
    kappa = 2.0 * math.pi * params.kappa_f
    regime = classify_regime(params)
    if regime == UNDERDAMPED:
        m2 = math.sqrt(16.0 * g**2 - kappa**2) / 4.0
        return math.exp(-kappa * t / 2.0) * (1.0 + kappa / (4.0 * m2)) ** 2
    # over/critically damped curves are monotone: the curve is its own bound
    return float(_p_decay(params, t))


class UnreachableThresholdError(ValueError):
    """The requested residual-excitation threshold can never be met."""


def time_to_threshold(params: ResetParams, threshold: float) -> float:
    """Smallest t with p_e(t') <= threshold for all t' >= t.

    For underdamped curves this is the *last* crossing of the oscillating
    decay. Located by dense sampling followed by bisection to 0.1 ns.
    """
    if threshold <= params.p_exc_ss:
        raise UnreachableThresholdError(
            f"threshold {threshold} is at or below the steady-state floor "
            f"{params.p_exc_ss}"
        )
    if threshold >= 1.0:
        return 0.0
    target = (threshold - params.p_exc_ss) / (1.0 - params.p_exc_ss)

    g = 2.0 * math.pi * abs(params.g_qf)
    kappa = 2.0 * math.pi * params.kappa_f
    t_char = 1.0 / (100.0 * max(g, kappa))

    # expand until the envelope is safely below the target
    t_end = 100.0 * t_char
    for _ in range(200):
        if _decay_bound(params, t_end) < 0.5 * target:
            break
        t_end *= 2.0
    else:
        raise UnreachableThresholdError(
            "decay envelope never falls below the threshold (is g_qf zero?)"
        )

    times = np.arange(0.0, t_end + t_char, t_char)
    p = residual_excitation(params, times)
    above = np.nonzero(p > threshold)[0]
    if above.size == 0:
        return 0.0
    i = above[-1]
    lo, hi = times[i], times[i + 1]
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if residual_excitation(params, mid) > threshold:
            lo = mid
        else:
            hi = mid
    return hi


@dataclass
class ResetFitResult:
    params: ResetParams
    residual_rms: float
    converged: bool
    iterations: int
    regime: str

    def to_dict(self) -> dict:
        return {
            "g_qf_hz": self.params.g_qf,
            "kappa_f_hz": self.params.kappa_f,
            "p_exc_ss": self.params.p_exc_ss,
            "residual_rms": self.residual_rms,
            "converged": self.converged,
            "iterations": self.iterations,
            "regime": self.regime,
        }


def _initial_guess(times: np.ndarray, p_e: np.ndarray) -> ResetParams:
    tail = max(3, times.size // 10)
    p_ss = float(np.clip(np.median(p_e[-tail:]), 1e-6, 0.5))
    q = np.clip((p_e - p_ss) / (1.0 - p_ss), 1e-12, None)

    # envelope from the running maximum taken from the right; only the part
    # safely above the noise/floor level carries usable shape information
    env = np.maximum.accumulate(q[::-1])[::-1]
    mask = env > 0.05
    if np.count_nonzero(mask) < 3:
        mask = env > 1e-6
    slope = np.polyfit(times[mask], np.log(env[mask]), 1)[0]
    kappa0 = max(-2.0 * slope / (2.0 * math.pi), 1.0 / (2.0 * math.pi * times[-1]))

    # locate oscillation minima on a lightly smoothed curve so noise wiggles
    # do not masquerade as extra oscillations
    from scipy.signal import find_peaks

    width = max(3, q.size // 100)
    q_smooth = np.convolve(q, np.ones(width) / width, mode="same")
    minima, _ = find_peaks(-q_smooth, prominence=0.02, distance=width)
    deep = [i for i in minima if q_smooth[i] < 0.5 * env[i] and env[i] > 0.05]
    if len(deep) >= 2:
        m2 = math.pi / (times[deep[1]] - times[deep[0]]) / (2.0 * math.pi)
        g0 = math.hypot(m2, kappa0 / 4.0)
    elif len(deep) == 1:
        m2 = 2.0 / times[deep[0]] / (2.0 * math.pi)
        g0 = math.hypot(m2, kappa0 / 4.0)
    else:
        g0 = kappa0 / 8.0
    return ResetParams(g0, kappa0, p_ss)


def fit_reset_curve(times, p_e, initial: ResetParams | None = None) -> ResetFitResult:
    """Least-squares fit of (g_qf, kappa_f, p_exc_ss) to a decay curve.

    The regime branch is re-selected on every evaluation, so the fit can
    move freely across the critical-damping boundary.
    """
    times = np.asarray(times, dtype=float)
    p_e = np.asarray(p_e, dtype=float)
    if times.size < 10:
        raise ValueError("need at least 10 points to fit a reset curve")
    if np.any((p_e < -0.05) | (p_e > 1.05)):
        raise ValueError("p_e values must lie in [0, 1]")
    if initial is None:
        initial = _initial_guess(times, p_e)

    def unpack(vec):
        return ResetParams(abs(vec[0]), abs(vec[1]), float(np.clip(abs(vec[2]), 0.0, 0.999)))

    def residual(vec):
        return residual_excitation(unpack(vec), times) - p_e

    p0 = np.array([initial.g_qf, initial.kappa_f, max(initial.p_exc_ss, 1e-4)])
    out = levenberg_marquardt(
        residual, p0, x_scale=[max(p0[0], p0[1] / 8), p0[1], 0.01]
    )
    params = unpack(out.params)
    return ResetFitResult(
        params, out.residual_rms, out.converged, out.iterations, classify_regime(params)
    )


@dataclass
class CascadeResult:
    p_g: float
    p_e: float
    p_f: float
    total_duration: float

    def to_dict(self) -> dict:
        return {
            "p_g": self.p_g,
            "p_e": self.p_e,
            "p_f": self.p_f,
            "total_duration_s": self.total_duration,
        }


def cascade_evaluate(
    schedule: CascadeSchedule,
    fe_params: ResetParams,
    eg_params: ResetParams,
    initial_state: str,
) -> CascadeResult:
    """Final (p_g, p_e, p_f) after the f-e stage then the e-g stage.

    Each stage is an independent damped-decay process on its two-level
    manifold: the f-e stage moves |f> population to |e> with survival
    given by residual_excitation(fe_params, t_rst_f), then the e-g stage
    moves |e> to |g>. Setting t_rst_e = 0 yields the bare LRU operation,
    which leaves |e> untouched in this model.
    """
    pops = {"g": 0.0, "e": 0.0, "f": 0.0}
    if initial_state not in pops:
        raise ValueError(f"initial_state must be one of g/e/f, got {initial_state!r}")
    pops[initial_state] = 1.0

    surv_f = residual_excitation(fe_params, schedule.t_rst_f) if schedule.t_rst_f > 0 else 1.0
    transferred = pops["f"] * (1.0 - surv_f)
    pops["f"] -= transferred
    pops["e"] += transferred

    surv_e = residual_excitation(eg_params, schedule.t_rst_e) if schedule.t_rst_e > 0 else 1.0
    transferred = pops["e"] * (1.0 - surv_e)
    pops["e"] -= transferred
    pops["g"] += transferred

    total = pops["g"] + pops["e"] + pops["f"]
    if abs(total - 1.0) > 1e-9:
        raise AssertionError(f"populations sum to {total}, expected 1")
    return CascadeResult(pops["g"], pops["e"], pops["f"], schedule.total_duration)


# --- curve and schedule I/O ----------------------------------------------


def save_curve_csv(path, times, p_e):
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t_seconds", "p_e"])
        for t, p in zip(times, p_e):
            writer.writerow([repr(float(t)), repr(float(p))])


def load_curve_csv(path):
    times, p_e = [], []
    with open(path) as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            try:
                t, p = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if times:
                    raise
                continue
            times.append(t)
            p_e.append(p)
    if not times:
        raise ValueError(f"no data rows in {path}")
    return np.array(times), np.array(p_e)


def schedule_to_dict(schedule: CascadeSchedule) -> dict:
    d = {
        "t_rst_f_s": schedule.t_rst_f,
        "t_rst_e_s": schedule.t_rst_e,
        "omega_rst_f_hz": schedule.omega_rst_f,
        "omega_rst_e_hz": schedule.omega_rst_e,
    }
    if schedule.qubit is not None:
        d["qubit"] = {
            "omega_eg_max_hz": schedule.qubit.omega_eg_max,
            "anharmonicity_hz": schedule.qubit.anharmonicity,
            "t1_s": schedule.qubit.t1,
        }
    return d


def schedule_from_dict(data: dict) -> CascadeSchedule:
    qubit = None
    if "qubit" in data:
        q = data["qubit"]
        qubit = QubitParams(q["omega_eg_max_hz"], q["anharmonicity_hz"], q["t1_s"])
    return CascadeSchedule(
        data["t_rst_f_s"],
        data["t_rst_e_s"],
        data["omega_rst_f_hz"],
        data["omega_rst_e_hz"],
        qubit,
    )


def load_schedule(path) -> CascadeSchedule:
    with open(path) as fh:
        return schedule_from_dict(json.load(fh))
