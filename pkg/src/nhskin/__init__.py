"""1D non-Hermitian lattice dynamics: models, spectral topology,
skin-channel wavepacket evolution, and Loschmidt-echo diagnostics."""

from .grids import KGrid, Window, wrap_to_window
from .models import (
    OBC,
    PBC,
    BlochModel,
    BoundaryCondition,
    ModelParams,
    RealSpaceHamiltonian,
    Suppress,
    SymmetryDescriptor,
    SymmetryKind,
    bloch_matrix,
    bloch_matrices,
    build_custom,
    build_ordinary_model,
    build_symplectic_hn,
    check_symmetry,
    real_space_hamiltonian,
    winding_control,
)
from .spectral import (
    BandStructure,
    ContourDegenerateError,
    GbzReport,
    WindingResult,
    band_structure,
    band_windings,
    char_poly_roots,
    hausdorff_distance,
    obc_spectrum,
    per_band_winding,
    real_space_spectrum,
    scan_winding,
    set_distance,
    winding_control_spectrum,
    winding_number,
)
from .wavepacket import (
    FixedPointError,
    GaussianSpec,
    OverlapKernel,
    SeparationReport,
    WavepacketRun,
    channel_separation_check,
    circular_com,
    com_analytic,
    com_numeric,
    com_velocity,
    evolve,
    gaussian_envelope,
    initial_state,
    kmax_branches,
    kmax_selfconsistent,
    kmax_trajectory,
    kramers_partner,
    overlap_kernel,
)
from .dqpt import (
    CriticalPointSet,
    LoschmidtSeries,
    ScalingReport,
    detect_critical_points,
    loschmidt,
    predict_intervals,
    scaling_study,
)
from .config import (
    AnalysisConfig,
    ExperimentConfig,
    GridConfig,
    ModelConfig,
    PRESET_NAMES,
    build_kgrid,
    build_model,
    build_times,
    load_config,
    parse_config,
    preset,
    save_config,
    serialize_config,
)

__version__ = "0.1.0"
