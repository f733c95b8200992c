"""Block orthogonal matching pursuit toolkit.

Recovery of block-sparse signals from noisy linear measurements: the BOMP
solver and plain-OMP baseline, dictionary coherence analysis, sufficient
recovery-condition certificates, and a reproducible Monte Carlo harness.
"""

from .linalg import (
    BlockPartition,
    PartitionError,
    RankDeficiencyError,
    least_squares,
    load_matrix_csv,
    load_vector_csv,
    mixed_operator_norm_lower,
    mixed_operator_norm_upper,
    mixed_vector_norm,
    project_onto_nullspace,
    project_onto_range,
    save_matrix_csv,
    spectral_norm,
)
from .coherence import (
    BlockDictionary,
    CoherenceProfile,
    DegenerateDictionaryError,
    block_coherence,
    coherence,
    coherence_profile,
    gershgorin_gram_floor,
    orthogonalize_blocks,
    sub_coherence,
)
from .recovery import (
    BlockSparseSignal,
    BlockSupport,
    DegenerateResidualError,
    RecoveryTrace,
    StopReason,
    StoppingRule,
    bomp,
    greedy_selection_ratio,
    omp,
)
from .certificates import (
    AppendixReport,
    BoundCheck,
    CertificateKind,
    ChainReport,
    NoiseDecomposition,
    RecoveryCertificate,
    certify_instance,
    check_appendix_bounds,
    check_bomp_orthonormal,
    check_comparison_chain,
    check_noiseless,
    check_omp_tropp,
    check_theorem1,
    decompose_noise,
)
from .experiments import (
    DEFAULT_SIGMA_GRID,
    CellResult,
    ExperimentConfig,
    SweepError,
    SweepResult,
    TrialResult,
    emit_results,
    gen_dictionary,
    gen_noise,
    gen_signal,
    normalize_columns,
    parse_csv_results,
    run_sweep,
    run_trial,
    trial_seed,
    wilson_halfwidth,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
