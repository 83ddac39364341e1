"""Forward simulation and inverse inference for surface-spin magnetic
resonance read out through a shallow NV center.

The package provides analytic signal models for the NV/reporter pulse
sequences (DEER, Rabi, T1, reporter echo with coherent protons and a
semiclassical bath), a brute-force density-matrix oracle that validates
them, and the inverse problems: trace fitting, reporter localization from
multi-angle DEER, and proton localization from hyperfine couplings.
"""

from .constants import CONSTANTS, PhysicalConstants, load_constants
from .errors import (
    ConvergenceError,
    DegenerateAbscissaError,
    DegenerateRadiusError,
    DimensionLimitError,
    FieldMisalignmentError,
    NoSolutionError,
    OptimizerBudgetError,
    ReporterSpinError,
    SchemaError,
    UnknownChannelError,
    VersionMismatchError,
    ZeroDofError,
)
from .experiment_io import (
    NoiseModel,
    load_config,
    load_dataset,
    load_fit_result,
    load_probability_map,
    load_table,
    load_trace,
    save_dataset,
    save_fit_result,
    save_probability_map,
    save_table,
    save_trace,
    synthesize_trace,
)
from .inference import (
    FitResult,
    GyroFitResult,
    MultiAngleDataset,
    PlaneGrid,
    ProbabilityMap,
    ProtonLocalization,
    ReporterLocalization,
    fit_gyromagnetic,
    fit_trace,
    localize_protons,
    localize_reporters,
    reduced_chi2,
)
from .oracle import (
    Delay,
    OracleEngine,
    OracleResult,
    OracleSystem,
    PairCoupling,
    Pulse,
    PulseSequence,
    Readout,
    SpinSpec,
    build_hamiltonian,
    deer_sequence,
    echo_sequence,
    oracle_bath_limit,
    oracle_deer_trace,
    oracle_echo_trace,
    run_sequence,
    system_from_scene,
    thermal_initial,
)
from .physics import (
    MAGIC_ANGLE_DEG,
    EseemBranches,
    FieldSetting,
    GeometrySolution,
    HyperfineParams,
    SpinSystem,
    dipolar_coupling_ee,
    eseem_frequencies,
    geometry_from_hyperfine,
    hyperfine_from_eseem,
    hyperfine_from_geometry,
    larmor_proton,
    min_separation_from_t1,
    zeeman_diagram,
    zeeman_nv,
    zeeman_reporter,
)
from .signals import (
    MODELS,
    NO_DECAY,
    BathParams,
    DecoherenceParams,
    SignalTrace,
    bath_echo,
    deer_signal,
    deer_spectrum,
    eseem_multi,
    eseem_single,
    evaluate_model,
    make_trace,
    nv_echo,
    reporter_echo_combined,
    reporter_rabi,
    reporter_t1,
)

__version__ = "0.1.0"
