"""Flux-tunable transmons under parametric modulation: dephasing physics,
AC sweet spots, and parametric entangling-gate fidelity."""

from .errors import (
    BracketError,
    CalibrationError,
    ConfigError,
    ConvergenceError,
    DomainError,
    FitQualityError,
    FluxmodError,
)
from .specialfn import SeriesTolerance, bessel_j, erf, hyp2f1, rising_factorial
from .transmon import (
    PERTURBATION_TABLE,
    QubitBand,
    StaticCoeffs,
    TransmonParams,
    anharmonicity,
    calibrate,
    effective_ej,
    frequency,
    static_coeffs,
    xi_parameter,
)
from .modulation import (
    FourierSeries,
    ModulationSpec,
    average_anharmonicity,
    average_frequency,
    find_ac_sweet_spot,
    flux_waveform,
    fourier_series,
    instantaneous_frequency,
)
from .noise import NoiseSpec, NoiseTrace, estimate_psd, lowpass, synth_pink, synth_white
from .dephasing import (
    CoherenceCurve,
    DecayFit,
    DephasingRates,
    analytic_rates,
    fit_decay,
    lambda_factor,
    lambda_self_consistent,
    ramsey_mc,
    sweep_dephasing,
)
from .twoqubit import (
    DecoherenceConfig,
    GateResult,
    ProcessMatrix,
    TwoQubitSystem,
    asymptotic_fidelity,
    average_fidelity,
    coherent_noise_average,
    effective_coupling,
    evolve_process,
    fidelity_sweep,
    gate_frequencies,
    gate_time,
    lambda_weight,
)

__version__ = "0.1.0"
