"""Input-output S21 model of a bandpass filter loaded by readout
resonators, plus a damped least-squares fitter for extracting mode
parameters from measured (or synthetic) magnitude spectra.

The fit domain is dB magnitude with a linear background
20*log10|S21| + k*f + b; the two filter modes are fitted in separate
frequency windows, one at a time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .fitting import levenberg_marquardt

DB_FLOOR = -200.0

# initial guess for resonator intrinsic loss; small compared with any
# linewidth this model is expected to fit
GAMMA_R_GUESS = 1e5


@dataclass
class S21ModelParams:
    """Filter mode + resonator loading parameters, all frequencies in Hz.

    resonators is a list of (omega_r_i, g_fr_i, gamma_r_i) tuples;
    background_k is in dB/Hz and background_b in dB.
    """

    omega_f: float
    kappa_f: float
    resonators: list = field(default_factory=list)
    background_k: float = 0.0
    background_b: float = 0.0

    def __post_init__(self):
        if self.kappa_f <= 0:
            raise ValueError(f"kappa_f must be positive, got {self.kappa_f}")
        for _, _, gamma in self.resonators:
            if gamma < 0:
                raise ValueError("resonator gamma must be non-negative")


@dataclass
class SpectrumData:
    frequencies: np.ndarray
    s21_db: np.ndarray

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.s21_db = np.asarray(self.s21_db, dtype=float)
        if self.frequencies.shape != self.s21_db.shape:
            raise ValueError("frequencies and s21_db must have equal length")
        if self.frequencies.size >= 2 and not np.all(np.diff(self.frequencies) > 0):
            raise ValueError("frequencies must be strictly increasing")

    def window(self, f_lo: float, f_hi: float) -> "SpectrumData":
        mask = (self.frequencies >= f_lo) & (self.frequencies <= f_hi)
        return SpectrumData(self.frequencies[mask], self.s21_db[mask])

    @classmethod
    def from_csv(cls, path) -> "SpectrumData":
        freqs, vals = [], []
        with open(path) as fh:
            for row in csv.reader(fh):
                if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
                    continue
                try:
                    f, v = float(row[0]), float(row[1])
                except (ValueError, IndexError):
                    if freqs:
                        raise
                    continue  # header line
                freqs.append(f)
                vals.append(v)
        if not freqs:
            raise ValueError(f"no data rows in {path}")
        return cls(np.array(freqs), np.array(vals))


@dataclass
class FitResult:
    params: S21ModelParams
    residual_rms: float
    std_errors: dict
    converged: bool
    iterations: int

    def to_dict(self) -> dict:
        return {
            "omega_f_hz": self.params.omega_f,
            "kappa_f_hz": self.params.kappa_f,
            "resonators": [
                {"omega_r_hz": w, "g_fr_hz": g, "gamma_r_hz": gam}
                for w, g, gam in self.params.resonators
            ],
            "background_k_db_per_hz": self.params.background_k,
            "background_b_db": self.params.background_b,
            "residual_rms_db": self.residual_rms,
            "std_errors": self.std_errors,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def s21_model(params: S21ModelParams, f_probe) -> complex:
    """Complex S21 of the driven filter mode at probe frequency f_probe.

    S21 = (-j kappa/2) / [(j Dfd + kappa/2) + sum_i g_i^2/(j Dri + gamma_i/2)]
    with all detunings formed internally (the expression is invariant under
    a common 2*pi rescaling, so Hz inputs are used directly).
    """
    scalar = np.ndim(f_probe) == 0
    f_arr = np.atleast_1d(np.asarray(f_probe, dtype=float))
    den = 1j * (params.omega_f - f_arr) + params.kappa_f / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        for omega_r, g, gamma in params.resonators:
            den = den + abs(g) ** 2 / (1j * (omega_r - f_arr) + gamma / 2.0)
        # a lossless resonator probed exactly on resonance blocks transmission
        result = np.where(np.isfinite(den), (-1j * params.kappa_f / 2.0) / den, 0j)
    return complex(result[0]) if scalar else result


def s21_db_with_background(params: S21ModelParams, f_probe):
    """20*log10|S21| + k*f + b, floored at DB_FLOOR where |S21| vanishes."""
    mag = np.abs(s21_model(params, f_probe))
    db = np.where(
        mag > 0, 20.0 * np.log10(np.maximum(mag, 1e-300)), DB_FLOOR
    )
    db = np.maximum(db, DB_FLOOR)
    out = db + params.background_k * np.asarray(f_probe) + params.background_b
    return float(out) if out.ndim == 0 else out


def auto_initial_guess(data: SpectrumData, n_resonators: int = 0) -> S21ModelParams:
    """Starting parameters from the data: peak position/width, background
    from the outer 10% of the band, resonators at the deepest local minima.

    The data window must cover exactly one filter mode.
    """
    f = data.frequencies
    y = data.s21_db
    if f.size < 10:
        raise ValueError("need at least 10 points for an initial guess")

    edge = max(2, int(0.05 * f.size))
    f_bg = np.concatenate([f[:edge], f[-edge:]])
    y_bg = np.concatenate([y[:edge], y[-edge:]])
    k, b = np.polyfit(f_bg, y_bg, 1)
    detrended = y - (k * f + b)

    i_peak = int(np.argmax(detrended))
    peak = detrended[i_peak]
    if peak - np.median(detrended) < 1.0:
        raise ValueError("no filter peak found in the data window")
    omega_f = f[i_peak]

    # -3 dB width around the peak
    half = peak - 3.0
    i_lo = i_peak
    while i_lo > 0 and detrended[i_lo] > half:
        i_lo -= 1
    i_hi = i_peak
    while i_hi < f.size - 1 and detrended[i_hi] > half:
        i_hi += 1
    kappa_f = max(f[i_hi] - f[i_lo], f[1] - f[0])

    resonators = []
    if n_resonators > 0:
        # dips must rise at least 1 dB above their surroundings so isolated
        # noise minima do not qualify
        from scipy.signal import find_peaks

        minima, props = find_peaks(-detrended, prominence=1.0, width=1, rel_height=0.5)
        order = np.argsort(detrended[minima])[:n_resonators]
        if order.size < n_resonators:
            found = [f[i] for i in minima]
            raise ValueError(
                f"requested {n_resonators} resonators but found only "
                f"{minima.size} prominent dips at {found}"
            )
        df = f[1] - f[0]
        for j in sorted(order, key=lambda j: minima[j]):
            i = minima[j]
            width_hz = max(props["widths"][j] * df, df)
            d0 = np.hypot(f[i] - omega_f, kappa_f / 2.0)
            # a resonator dug into the filter flank produces a dip of width
            # ~2 g^2/d0 whose floor sits gamma*d0/(2 g^2) below the flank
            filter_db = peak + 20.0 * np.log10((kappa_f / 2.0) / d0)
            depth_rel = 10.0 ** (min(detrended[i] - filter_db, -0.1) / 20.0)
            g = np.sqrt(width_hz * d0 / 2.0)
            gamma = max(depth_rel * width_hz, GAMMA_R_GUESS)
            resonators.append((f[i], g, gamma))
    return S21ModelParams(omega_f, kappa_f, resonators, k, b)


def _pack(params: S21ModelParams) -> np.ndarray:
    vec = [params.omega_f, params.kappa_f, params.background_k, params.background_b]
    for w, g, gamma in params.resonators:
        vec.extend([w, g, gamma])
    return np.array(vec)


def _unpack(vec: np.ndarray) -> S21ModelParams:
    resonators = [
        (vec[i], abs(vec[i + 1]), abs(vec[i + 2])) for i in range(4, vec.size, 3)
    ]
    return S21ModelParams(vec[0], abs(vec[1]), resonators, vec[2], vec[3])


_PARAM_NAMES = ("omega_f", "kappa_f", "background_k", "background_b")


def fit_s21(data: SpectrumData, initial: S21ModelParams) -> FitResult:
    """Damped least squares on the dB-domain residual.

    Linewidths and couplings are fitted through their absolute value, so a
    sign-flipped excursion cannot produce an invalid parameter set.
    """
    p0 = _pack(initial)

    def residual(vec):
        return s21_db_with_background(_unpack(vec), data.frequencies) - data.s21_db

    scale = [initial.omega_f, initial.kappa_f, 1.0 / np.ptp(data.frequencies), 1.0]
    for _w, _g, _gamma in initial.resonators:
        scale.extend([initial.omega_f, initial.kappa_f, initial.kappa_f])

    out = levenberg_marquardt(
        residual, p0, max_iter=500, step_tol=1e-8, cost_tol=1e-10, x_scale=scale
    )
    params = _unpack(out.params)
    names = list(_PARAM_NAMES)
    for i in range(len(initial.resonators)):
        names.extend([f"omega_r_{i}", f"g_fr_{i}", f"gamma_r_{i}"])
    errors = {name: float(err) for name, err in zip(names, out.std_errors)}
    return FitResult(params, out.residual_rms, errors, out.converged, out.iterations)
