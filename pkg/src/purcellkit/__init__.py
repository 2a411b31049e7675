"""Frequency-domain microwave-network toolkit for multi-mode Purcell
filter design: exact transmission-line circuit solving, Purcell-limited
lifetime prediction, S21 spectrum fitting, qubit reset/LRU scheduling,
and dispersive-readout error budgeting."""

from .tline import (
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
from .network import (
    AcSolution,
    Element,
    Netlist,
    NetlistBuilder,
    Port,
    SingularFrequencyError,
    assemble_admittance,
    driving_point_admittance,
    load_netlist,
    re_y_via_output_power,
    s_parameters,
    save_netlist,
    solve_ac,
    transfer_impedance,
)
from .filter_model import (
    FilterGeometry,
    TpCurve,
    build_netlist,
    build_transfer_model,
    load_geometry,
    notch_frequencies,
    preset,
    save_geometry,
    single_mode_purcell_rate,
    tp_curve,
    z23_closed_form,
)
from .spectrum import (
    FitResult,
    S21ModelParams,
    SpectrumData,
    auto_initial_guess,
    fit_s21,
    s21_db_with_background,
    s21_model,
)
from .reset import (
    CascadeSchedule,
    QubitParams,
    ResetParams,
    UnreachableThresholdError,
    cascade_evaluate,
    classify_regime,
    fit_reset_curve,
    oracle_residual,
    residual_excitation,
    time_to_threshold,
)
from .readout import (
    ErrorBreakdown,
    GaussianBlob,
    IQShotSet,
    assignment_matrix,
    effective_temperature,
    error_breakdown,
    fit_blobs,
    separation_error,
    t1_error_bound,
)

__version__ = "0.1.0"
