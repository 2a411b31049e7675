"""S21 input-output model, initial guessing, and the dB-domain fit."""

import numpy as np
import pytest

from purcellkit.spectrum import (
    DB_FLOOR,
    FitResult,
    S21ModelParams,
    SpectrumData,
    auto_initial_guess,
    fit_s21,
    s21_db_with_background,
    s21_model,
)


def _synthetic(truth: S21ModelParams, freqs, noise=0.0, seed=0):
    db = s21_db_with_background(truth, freqs)
    if noise:
        db = db + np.random.default_rng(seed).normal(0.0, noise, freqs.size)
    return SpectrumData(freqs, db)


def test_bare_mode_on_resonance():
    p = S21ModelParams(6.0e9, 20e6)
    assert s21_model(p, 6.0e9) == pytest.approx(-1j)
    assert abs(s21_model(p, 6.0e9 + 10e6)) == pytest.approx(1 / np.sqrt(2), rel=1e-12)


def test_lorentzian_tail():
    p = S21ModelParams(6.0e9, 20e6)
    detuning = 500e6
    assert abs(s21_model(p, 6.0e9 + detuning)) == pytest.approx(
        (20e6 / 2) / detuning, rel=1e-3
    )


def test_common_scale_invariance():
    # multiplying every frequency-like quantity by a common factor leaves
    # S21 unchanged, so Hz and rad/s conventions give identical spectra
    p1 = S21ModelParams(6.0e9, 20e6, [(6.1e9, 5e6, 1e6)])
    c = 2 * np.pi
    p2 = S21ModelParams(c * 6.0e9, c * 20e6, [(c * 6.1e9, c * 5e6, c * 1e6)])
    f = np.linspace(5.9e9, 6.2e9, 7)
    np.testing.assert_allclose(s21_model(p2, c * f), s21_model(p1, f), rtol=1e-12)


def test_lossless_resonator_blocks_transmission():
    p = S21ModelParams(6.0e9, 20e6, [(6.05e9, 5e6, 0.0)])
    assert s21_model(p, 6.05e9) == 0
    db = s21_db_with_background(p, 6.05e9)
    assert db == DB_FLOOR


def test_resonator_dip_depth():
    # on the resonator, S21 = (-j k/2) / (j D + k/2 + g^2/(gamma/2))
    p = S21ModelParams(6.0e9, 20e6, [(6.0e9, 5e6, 1e6)])
    expected = (20e6 / 2) / (20e6 / 2 + (5e6) ** 2 / (1e6 / 2))
    assert abs(s21_model(p, 6.0e9)) == pytest.approx(expected, rel=1e-12)


def test_background_is_additive_in_db():
    p0 = S21ModelParams(6.0e9, 20e6)
    p1 = S21ModelParams(6.0e9, 20e6, [], background_k=1e-9, background_b=-3.0)
    f = np.linspace(5.8e9, 6.2e9, 11)
    np.testing.assert_allclose(
        s21_db_with_background(p1, f),
        s21_db_with_background(p0, f) + 1e-9 * f - 3.0,
        rtol=1e-12,
    )


def test_model_params_validation():
    with pytest.raises(ValueError):
        S21ModelParams(6e9, -1e6)
    with pytest.raises(ValueError):
        S21ModelParams(6e9, 1e6, [(6.1e9, 1e6, -1.0)])


def test_spectrum_data_validation_and_window():
    with pytest.raises(ValueError):
        SpectrumData([1.0, 2.0], [0.0])
    with pytest.raises(ValueError):
        SpectrumData([2.0, 1.0], [0.0, 0.0])
    data = SpectrumData(np.arange(10.0), np.zeros(10))
    win = data.window(3.0, 6.0)
    assert win.frequencies.tolist() == [3.0, 4.0, 5.0, 6.0]


def test_spectrum_data_from_csv(tmp_path):
    path = tmp_path / "spec.csv"
    path.write_text("# comment\nf_hz,s21_db\n1.0e9,-3.5\n2.0e9,-4.5\n")
    data = SpectrumData.from_csv(path)
    assert data.frequencies.tolist() == [1.0e9, 2.0e9]
    assert data.s21_db.tolist() == [-3.5, -4.5]
    empty = tmp_path / "empty.csv"
    empty.write_text("# nothing\n")
    with pytest.raises(ValueError):
        SpectrumData.from_csv(empty)


def test_auto_initial_guess_bare_mode():
    truth = S21ModelParams(3.567e9, 5.4e6, [], background_k=0.0, background_b=-1.0)
    freqs = np.linspace(3.467e9, 3.667e9, 801)
    guess = auto_initial_guess(_synthetic(truth, freqs))
    assert guess.omega_f == pytest.approx(truth.omega_f, abs=2 * truth.kappa_f)
    assert 0.2 * truth.kappa_f < guess.kappa_f < 5 * truth.kappa_f


def test_auto_initial_guess_counts_dips():
    truth = S21ModelParams(6.583e9, 20.2e6, [(6.42e9, 8e6, 1e6), (6.47e9, 8e6, 1e6)])
    freqs = np.linspace(6.35e9, 6.75e9, 1201)
    data = _synthetic(truth, freqs, noise=0.05, seed=4)
    guess = auto_initial_guess(data, n_resonators=2)
    got = sorted(w for w, _, _ in guess.resonators)
    assert got[0] == pytest.approx(6.42e9, abs=2e6)
    assert got[1] == pytest.approx(6.47e9, abs=2e6)
    with pytest.raises(ValueError, match="found only"):
        auto_initial_guess(data, n_resonators=5)


def test_auto_initial_guess_requires_a_peak():
    data = SpectrumData(np.linspace(1e9, 2e9, 101), np.zeros(101))
    with pytest.raises(ValueError, match="no filter peak"):
        auto_initial_guess(data)
    with pytest.raises(ValueError, match="at least 10"):
        auto_initial_guess(SpectrumData(np.arange(5.0), np.zeros(5)))


def test_fit_noiseless_round_trip():
    truth = S21ModelParams(3.567e9, 5.4e6, [], background_k=0.0, background_b=-2.0)
    freqs = np.linspace(3.467e9, 3.667e9, 801)
    data = _synthetic(truth, freqs)
    result = fit_s21(data, auto_initial_guess(data))
    assert result.converged
    assert result.residual_rms < 1e-6
    assert result.params.omega_f == pytest.approx(truth.omega_f, rel=1e-9)
    assert result.params.kappa_f == pytest.approx(truth.kappa_f, rel=1e-6)
    assert result.params.background_b == pytest.approx(-2.0, abs=1e-4)


def test_fit_noisy_mode_with_resonators():
    truth = S21ModelParams(
        6.583e9, 20.2e6, [(6.45e9, 8e6, 1e6), (6.52e9, 8e6, 1e6)], 0.0, -1.0
    )
    freqs = np.linspace(6.35e9, 6.75e9, 1201)
    data = _synthetic(truth, freqs, noise=0.1, seed=11)
    result = fit_s21(data, auto_initial_guess(data, 2))
    assert result.converged
    assert result.params.omega_f == pytest.approx(truth.omega_f, rel=1e-4)
    assert result.params.kappa_f == pytest.approx(truth.kappa_f, rel=0.05)
    fitted = sorted(result.params.resonators)
    for (w, g, _), (tw, tg, _) in zip(fitted, truth.resonators):
        assert w == pytest.approx(tw, rel=1e-4)
        assert g == pytest.approx(tg, rel=0.1)


def test_fit_result_to_dict():
    truth = S21ModelParams(3.567e9, 5.4e6)
    freqs = np.linspace(3.467e9, 3.667e9, 401)
    data = _synthetic(truth, freqs)
    result = fit_s21(data, auto_initial_guess(data))
    d = result.to_dict()
    assert set(d) == {
        "omega_f_hz", "kappa_f_hz", "resonators", "background_k_db_per_hz",
        "background_b_db", "residual_rms_db", "std_errors", "converged",
        "iterations",
    }
    assert isinstance(result, FitResult)
    assert d["converged"] is True
    assert set(d["std_errors"]) == {"omega_f", "kappa_f", "background_k", "background_b"}
