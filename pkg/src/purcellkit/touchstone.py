"""Touchstone v1 reader/writer (frequency in GHz, real/imaginary format)."""

from __future__ import annotations

import numpy as np


def write_touchstone(path, frequencies, s_matrices, z_ref: float = 50.0):
    """Write an N-port Touchstone v1 file (.s2p/.sNp), RI format, GHz.

    `s_matrices` is a sequence of (n, n) complex arrays, one per frequency.
    Two-port files follow the Touchstone column order S11 S21 S12 S22;
    larger networks are written row-major, four matrix entries per line.
    """
    frequencies = np.asarray(frequencies, dtype=float)
    mats = [np.atleast_2d(np.asarray(m)) for m in s_matrices]
    if len(mats) != frequencies.size:
        raise ValueError("one S matrix per frequency point required")
    n = mats[0].shape[0]
    with open(path, "w", newline="\n") as fh:
        fh.write(f"! {n}-port S-parameters\n")
        fh.write(f"# GHz S RI R {z_ref:g}\n")
        for f, s in zip(frequencies, mats):
            if n <= 2:
                # two-port convention: S11 S21 S12 S22
                order = [(0, 0)] if n == 1 else [(0, 0), (1, 0), (0, 1), (1, 1)]
                entries = [s[i, j] for i, j in order]
                parts = [f"{f / 1e9:.9f}"]
                for val in entries:
                    parts.append(f"{val.real:.12e} {val.imag:.12e}")
                fh.write(" ".join(parts) + "\n")
            else:
                fh.write(f"{f / 1e9:.9f}")
                count = 0
                for i in range(n):
                    for j in range(n):
                        fh.write(f" {s[i, j].real:.12e} {s[i, j].imag:.12e}")
                        count += 1
                        if count % 4 == 0 and count < n * n:
                            fh.write("\n ")
                fh.write("\n")


def read_touchstone(path):
    """Read a 1- or 2-port Touchstone file; returns (frequencies_hz, s_matrices).

    Supports RI and MA/DB formats and the standard frequency units.
    """
    unit_scale = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}
    scale = 1e9
    fmt = "ri"
    values = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("!")[0].strip()
            if not line:
                continue
            if line.startswith("#"):
                tokens = line[1:].lower().split()
                for tok in tokens:
                    if tok in unit_scale:
                        scale = unit_scale[tok]
                    elif tok in ("ri", "ma", "db"):
                        fmt = tok
                continue
            values.extend(float(tok) for tok in line.split())
    if not values:
        raise ValueError(f"no data in touchstone file {path}")
    # infer number of columns: 1-port rows have 3 values, 2-port rows 9
    for ncols, nports in ((9, 2), (3, 1)):
        if len(values) % ncols == 0:
            break
    else:
        raise ValueError(f"unrecognized touchstone layout in {path}")
    rows = np.array(values).reshape(-1, ncols)
    freqs = rows[:, 0] * scale

    def to_complex(a, b):
        if fmt == "ri":
            return a + 1j * b
        if fmt == "ma":
            return a * np.exp(1j * np.deg2rad(b))
        return 10.0 ** (a / 20.0) * np.exp(1j * np.deg2rad(b))

    mats = []
    for row in rows:
        pairs = [to_complex(row[k], row[k + 1]) for k in range(1, ncols, 2)]
        if nports == 1:
            mats.append(np.array([[pairs[0]]]))
        else:
            s11, s21, s12, s22 = pairs
            mats.append(np.array([[s11, s12], [s21, s22]]))
    return freqs, mats
