"""Single-shot IQ readout analysis: Gaussian blob fits, assignment
matrices, and the separation/state error decomposition.

Each prepared state is fitted with a single Gaussian (sample mean and
covariance); shots are classified by maximum Gaussian likelihood. The
separation error is the probability mass of one fitted Gaussian falling in
the other's decision region; the remainder of the assignment error is the
state error caused by transitions before or during the measurement.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import constants
from scipy.stats import norm

STATE_ORDER = ("g", "e", "f")

# Reference error budget of the device this toolkit was modeled on, kept
# for synthetic regression generators (assignment errors and separation
# errors of two-level discrimination).
REFERENCE_ERRORS = {
    "epsilon_0": 0.0108,
    "epsilon_1": 0.0886,
    "epsilon_s_0": 0.0038,
    "epsilon_s_1": 0.0008,
}


class MalformedShotFileError(ValueError):
    pass


@dataclass
class IQShotSet:
    """Labeled single-shot readout points: (prepared label, I, Q)."""

    shots: list

    def labels(self) -> list:
        present = {label for label, _, _ in self.shots}
        ordered = [s for s in STATE_ORDER if s in present]
        ordered += sorted(present - set(STATE_ORDER))
        return ordered

    def points(self, label: str) -> np.ndarray:
        pts = [(i, q) for lab, i, q in self.shots if lab == label]
        return np.array(pts, dtype=float).reshape(-1, 2)

    def counts(self) -> dict:
        out: dict = {}
        for label, _, _ in self.shots:
            out[label] = out.get(label, 0) + 1
        return out

    def validate(self, min_shots: int = 100):
        for label, count in self.counts().items():
            if count < min_shots:
                raise ValueError(
                    f"label {label!r} has {count} shots, need at least {min_shots}"
                )

    @classmethod
    def from_csv(cls, path) -> "IQShotSet":
        shots = []
        with open(path) as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or not row[0].strip() or row[0].lstrip().startswith("#"):
                    continue
                if lineno == 1 and row[0].strip().lower() == "label":
                    continue
                try:
                    shots.append((row[0].strip(), float(row[1]), float(row[2])))
                except (ValueError, IndexError) as exc:
                    raise MalformedShotFileError(
                        f"{path}: malformed row at line {lineno}: {row!r}"
                    ) from exc
        if not shots:
            raise MalformedShotFileError(f"{path}: no shot rows found")
        return cls(shots)


@dataclass
class GaussianBlob:
    mean: np.ndarray
    covariance: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)
        eigvals = np.linalg.eigvalsh(self.covariance)
        if eigvals.min() <= 0:
            raise ValueError(f"covariance is not positive-definite: eigvals {eigvals}")
        if not 0 < self.weight <= 1:
            raise ValueError(f"weight must be in (0, 1], got {self.weight}")

    def log_pdf(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        prec = np.linalg.inv(self.covariance)
        d = points - self.mean
        quad = np.einsum("ni,ij,nj->n", d, prec, d)
        log_norm = -0.5 * (2 * math.log(2 * math.pi) + math.log(np.linalg.det(self.covariance)))
        return log_norm - 0.5 * quad


def fit_blobs(shots: IQShotSet, min_shots: int = 2) -> dict:
    """Per-label sample mean and covariance as a single Gaussian each."""
    shots.validate(min_shots)
    n_total = len(shots.shots)
    blobs = {}
    for label in shots.labels():
        pts = shots.points(label)
        mean = pts.mean(axis=0)
        if pts.shape[0] < 2:
            raise ValueError(f"label {label!r}: degenerate covariance (single shot)")
        cov = np.cov(pts.T)
        try:
            blobs[label] = GaussianBlob(mean, cov, pts.shape[0] / n_total)
        except ValueError as exc:
            raise ValueError(f"label {label!r}: degenerate covariance") from exc
    return blobs


@dataclass
class AssignmentMatrix:
    labels: list
    matrix: np.ndarray

    def error(self, label: str) -> float:
        i = self.labels.index(label)
        return 1.0 - float(self.matrix[i, i])

    def to_dict(self) -> dict:
        return {"labels": self.labels, "matrix": self.matrix.tolist()}


def classify(points: np.ndarray, blobs: dict, labels: list) -> np.ndarray:
    """Index (into labels) of the maximum-likelihood blob per point."""
    ll = np.stack([blobs[label].log_pdf(points) for label in labels], axis=1)
    return np.argmax(ll, axis=1)


def assignment_matrix(shots: IQShotSet, blobs: dict) -> AssignmentMatrix:
    """P(assigned | prepared), rows ordered like shots.labels()."""
    labels = shots.labels()
    missing = [label for label in labels if label not in blobs]
    if missing:
        raise ValueError(f"no blob fitted for labels {missing}")
    n = len(labels)
    matrix = np.zeros((n, n))
    for row, label in enumerate(labels):
        pts = shots.points(label)
        assigned = classify(pts, blobs, labels)
        for col in range(n):
            matrix[row, col] = np.count_nonzero(assigned == col) / pts.shape[0]
    return AssignmentMatrix(labels, matrix)


def _quadratic_coeffs(blob: GaussianBlob):
    """Coefficients of log pdf as c_yy*y^2 + c_y(x)*y + c_0(x)."""
    prec = np.linalg.inv(blob.covariance)
    pxx, pxy, pyy = prec[0, 0], prec[0, 1], prec[1, 1]
    mx, my = blob.mean
    c0 = -0.5 * (2 * math.log(2 * math.pi) + math.log(np.linalg.det(blob.covariance)))
    return pxx, pxy, pyy, mx, my, c0


def separation_error(blob_a: GaussianBlob, blob_b: GaussianBlob):
    """(eps_a, eps_b): mass of each Gaussian inside the other's
    maximum-likelihood decision region.

    Computed by reducing the quadratic decision boundary to y-intervals for
    each x and integrating the conditional Gaussian mass over a dense x
    grid (absolute error well below 1e-5); y-independent boundaries are
    reduced to exact Gaussian x-probabilities instead.
    """
    return (
        _mass_in_other_region(blob_a, blob_b),
        _mass_in_other_region(blob_b, blob_a),
    )


def _vertical_boundary_mass(blob: GaussianBlob, coeffs_a, coeffs_b) -> float:
    """Mass of `blob` where q(x) = A x^2 + B x + C > 0 (y-independent boundary)."""
    pxx_a, pxy_a, pyy_a, mx_a, my_a, c0_a = coeffs_a
    pxx_b, pxy_b, pyy_b, mx_b, my_b, c0_b = coeffs_b
    a_coef = 0.5 * (pxx_a - pxx_b)
    b_coef = pxx_b * mx_b - pxx_a * mx_a + pxy_b * my_b - pxy_a * my_a
    c_coef = (
        c0_b
        - c0_a
        - 0.5 * (pxx_b * mx_b**2 - pxx_a * mx_a**2)
        - (pxy_b * my_b * mx_b - pxy_a * my_a * mx_a)
        - 0.5 * (pyy_b * my_b**2 - pyy_a * my_a**2)
    )
    sx = math.sqrt(blob.covariance[0, 0])
    mx = blob.mean[0]
    a_tol = 1e-12 * (abs(pxx_a) + abs(pxx_b) + 1.0)
    b_tol = 1e-12 * (
        abs(pxx_b * mx_b) + abs(pxx_a * mx_a) + abs(pxy_b * my_b) + abs(pxy_a * my_a) + 1.0
    )
    c_tol = 1e-12 * (
        abs(c0_b) + abs(c0_a) + abs(pxx_b * mx_b**2) + abs(pxx_a * mx_a**2)
        + abs(pxy_b * my_b * mx_b) + abs(pxy_a * my_a * mx_a)
        + abs(pyy_b * my_b**2) + abs(pyy_a * my_a**2) + 1.0
    )
    if abs(a_coef) < a_tol:
        if abs(b_coef) < b_tol:
            if abs(c_coef) < c_tol:
                return 0.5  # exact tie: identical blobs
            return 1.0 if c_coef > 0 else 0.0
        root = -c_coef / b_coef
        mass = norm.sf(root, mx, sx)
        return float(mass if b_coef > 0 else 1.0 - mass)
    disc = b_coef**2 - 4 * a_coef * c_coef
    if disc <= 0:
        return 1.0 if a_coef > 0 else 0.0
    sq = math.sqrt(disc)
    r1 = (-b_coef - sq) / (2 * a_coef)
    r2 = (-b_coef + sq) / (2 * a_coef)
    lo, hi = min(r1, r2), max(r1, r2)
    inside = float(norm.cdf(hi, mx, sx) - norm.cdf(lo, mx, sx))
    return 1.0 - inside if a_coef > 0 else inside


def _mass_in_other_region(blob: GaussianBlob, other: GaussianBlob, n_x: int = 4001) -> float:
    """Probability mass of `blob` where `other` has higher likelihood."""
    pxx_a, pxy_a, pyy_a, mx_a, my_a, c0_a = _quadratic_coeffs(blob)
    pxx_b, pxy_b, pyy_b, mx_b, my_b, c0_b = _quadratic_coeffs(other)

    sx = math.sqrt(blob.covariance[0, 0])
    x = np.linspace(blob.mean[0] - 9 * sx, blob.mean[0] + 9 * sx, n_x)

    # q(x, y) = log pdf_other - log pdf_blob = alpha y^2 + beta(x) y + gamma(x)
    alpha = -0.5 * (pyy_b - pyy_a)
    beta = -(pxy_b * (x - mx_b) - pxy_a * (x - mx_a)) + (pyy_b * my_b - pyy_a * my_a)
    gamma_b = -0.5 * (
        pxx_b * (x - mx_b) ** 2 - 2 * pxy_b * my_b * (x - mx_b) + pyy_b * my_b**2
    )
    gamma_a = -0.5 * (
        pxx_a * (x - mx_a) ** 2 - 2 * pxy_a * my_a * (x - mx_a) + pyy_a * my_a**2
    )
    gamma = (c0_b - c0_a) + (gamma_b - gamma_a)
    # exact ties (identical blobs) leave gamma as pure cancellation noise
    gamma_tol = 1e-12 * (abs(c0_b) + abs(c0_a) + np.abs(gamma_b) + np.abs(gamma_a) + 1.0)
    gamma = np.where(np.abs(gamma) < gamma_tol, 0.0, gamma)

    beta_tol = 1e-12 * (
        np.abs(pxy_b * (x - mx_b)).max()
        + np.abs(pxy_a * (x - mx_a)).max()
        + abs(pyy_b * my_b)
        + abs(pyy_a * my_a)
        + 1.0
    )
    if abs(alpha) < 1e-300 and np.abs(beta).max() < beta_tol:
        # boundary independent of y: q(x) = A x^2 + B x + C, so the mass is
        # an exact Gaussian x-probability of the q > 0 region (Simpson on
        # the resulting step function would lose ~1e-4 here)
        return _vertical_boundary_mass(
            blob, (pxx_a, pxy_a, pyy_a, mx_a, my_a, c0_a),
            (pxx_b, pxy_b, pyy_b, mx_b, my_b, c0_b),
        )

    # conditional distribution of y given x under `blob`
    sxx = blob.covariance[0, 0]
    sxy = blob.covariance[0, 1]
    syy = blob.covariance[1, 1]
    mu_y = my_a + sxy / sxx * (x - mx_a)
    sig_y = math.sqrt(syy - sxy**2 / sxx)

    mass_y = np.empty_like(x)
    if abs(alpha) < 1e-300:
        with np.errstate(divide="ignore", invalid="ignore"):
            root = -gamma / beta
        mass_y = np.where(
            beta > 0,
            1.0 - norm.cdf(root, mu_y, sig_y),
            np.where(
                beta < 0,
                norm.cdf(root, mu_y, sig_y),
                # beta = 0: membership decided by gamma alone; an exact tie
                # (identical blobs) splits the mass evenly
                np.where(gamma > 0, 1.0, np.where(gamma < 0, 0.0, 0.5)),
            ),
        )
    else:
        disc = beta**2 - 4 * alpha * gamma
        sq = np.sqrt(np.clip(disc, 0.0, None))
        r1 = (-beta - sq) / (2 * alpha)
        r2 = (-beta + sq) / (2 * alpha)
        lo = np.minimum(r1, r2)
        hi = np.maximum(r1, r2)
        inside = norm.cdf(hi, mu_y, sig_y) - norm.cdf(lo, mu_y, sig_y)
        if alpha < 0:
            # q > 0 between the roots; nowhere if no real roots
            mass_y = np.where(disc > 0, inside, 0.0)
        else:
            # q > 0 outside the roots; everywhere if no real roots
            mass_y = np.where(disc > 0, 1.0 - inside, 1.0)

    fx = norm.pdf(x, blob.mean[0], sx)
    from scipy.integrate import simpson

    return float(simpson(fx * mass_y, x=x))


@dataclass
class ErrorBreakdown:
    """Per-state assignment error and its separation/state decomposition."""

    epsilon: dict
    epsilon_s: dict
    epsilon_t: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.epsilon_t:
            for label, eps in self.epsilon.items():
                eps_t = eps - self.epsilon_s[label]
                if eps_t < 0:
                    warnings.warn(
                        f"state error for {label!r} clipped to 0 "
                        f"(separation fit exceeds measured error by {-eps_t:.2e})"
                    )
                    eps_t = 0.0
                self.epsilon_t[label] = eps_t

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "epsilon_separation": self.epsilon_s,
            "epsilon_state": self.epsilon_t,
        }


def error_breakdown(shots: IQShotSet, blobs: dict | None = None) -> ErrorBreakdown:
    """Assignment errors split into separation and state contributions.

    With more than two states, the per-state separation error is the union
    bound over pairwise overlaps (exact in the two-state case).
    """
    if blobs is None:
        blobs = fit_blobs(shots)
    matrix = assignment_matrix(shots, blobs)
    epsilon = {label: matrix.error(label) for label in matrix.labels}
    epsilon_s = {}
    for label in matrix.labels:
        eps = 0.0
        for other in matrix.labels:
            if other != label:
                eps += _mass_in_other_region(blobs[label], blobs[other])
        epsilon_s[label] = min(eps, 1.0)
    return ErrorBreakdown(epsilon, epsilon_s)


def t1_error_bound(t1: float, tau_m: float) -> float:
    """Decay-during-measurement error bound 1 - exp(-tau_m / T1)."""
    if t1 <= 0:
        raise ValueError(f"t1 must be positive, got {t1}")
    if tau_m < 0:
        raise ValueError(f"tau_m must be non-negative, got {tau_m}")
    return 1.0 - math.exp(-tau_m / t1)


def effective_temperature(p_e: float, p_g: float, f_eg: float) -> float:
    """Bath temperature from the thermal ratio p_e/p_g = exp(-h f / kB T).

    Requires 0 < p_e < p_g (no population inversion).
    """
    if not 0 < p_e < p_g:
        raise ValueError(
            f"need 0 < p_e < p_g for a positive temperature, got p_e={p_e}, p_g={p_g}"
        )
    if f_eg <= 0:
        raise ValueError(f"f_eg must be positive, got {f_eg}")
    return constants.h * f_eg / (constants.k * math.log(p_g / p_e))
