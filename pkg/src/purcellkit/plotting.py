"""Figure rendering for the CLI report path.

Every figure function takes an output path and writes the file directly
(PNG or SVG decided by the extension); nothing is shown interactively.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_spectrum(frequencies, s21_db, path, fit_db=None):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(np.asarray(frequencies) / 1e9, s21_db, lw=0.9, label="data")
    if fit_db is not None:
        ax.plot(np.asarray(frequencies) / 1e9, fit_db, "--", lw=1.2, label="fit")
        ax.legend()
    ax.set_xlabel("Frequency (GHz)")
    ax.set_ylabel(r"$|S_{21}|$ (dB)")
    _finish(fig, path)


def plot_tp(curves, path):
    """Plot one or more TpCurve objects on a log-scale lifetime axis."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for curve in curves:
        tp_ms = np.where(np.isfinite(curve.tp), curve.tp, np.nan) * 1e3
        ax.semilogy(curve.frequencies / 1e9, tp_ms, lw=1.0, label=curve.variant)
    ax.set_xlabel("Frequency (GHz)")
    ax.set_ylabel(r"$T_p$ (ms)")
    ax.legend()
    _finish(fig, path)


def plot_reset_curve(times, p_e, path, fit=None, threshold=None):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(np.asarray(times) * 1e9, p_e, ".", ms=3, label="data")
    if fit is not None:
        from .reset import residual_excitation

        dense = np.linspace(times[0], times[-1], 1000)
        ax.semilogy(dense * 1e9, residual_excitation(fit, dense), "--", label="fit")
    if threshold is not None:
        ax.axhline(threshold, color="gray", ls=":", lw=1)
    ax.set_xlabel("Reset time (ns)")
    ax.set_ylabel("Residual excitation")
    ax.legend()
    _finish(fig, path)


def plot_iq_blobs(shots, blobs, path):
    """Scatter of labeled IQ shots with 3-sigma ellipses of the fits."""
    fig, ax = plt.subplots(figsize=(5.5, 5))
    colors = {"g": "tab:blue", "e": "tab:red", "f": "tab:green"}
    for idx, label in enumerate(shots.labels()):
        pts = shots.points(label)
        color = colors.get(label, f"C{idx}")
        ax.plot(pts[:, 0], pts[:, 1], ".", ms=1.5, alpha=0.35, color=color, label=f"|{label}>")
        blob = blobs.get(label)
        if blob is not None:
            vals, vecs = np.linalg.eigh(blob.covariance)
            theta = np.linspace(0, 2 * np.pi, 200)
            circle = np.stack([np.cos(theta), np.sin(theta)])
            ellipse = blob.mean[:, None] + vecs @ (3.0 * np.sqrt(vals)[:, None] * circle)
            ax.plot(ellipse[0], ellipse[1], "-", lw=1.2, color=color)
    ax.set_xlabel("I (arb.)")
    ax.set_ylabel("Q (arb.)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(markerscale=6)
    _finish(fig, path)
