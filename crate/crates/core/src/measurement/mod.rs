//! Probe-based reconstruction of the vibronic state.
//!
//! A probe cycle displaces the motion, drives the weak carrier transition
//! for a time τ and keeps the no-fluorescence outcome. Sequences of cycles
//! determine the displaced diagonal elements `ρ_ij^{nn}(α)`, which give the
//! Wigner-function matrix, its characteristic functions, the moments
//! entering the nonclassicality criteria and the regularized P-matrix.
//!
//! Electronic level indices are 0 for |1⟩ and 1 for |2⟩.

mod pipeline;
mod pmatrix;
mod probe;
mod vibronic;
mod wigner;

pub use pipeline::{run_pipeline, PipelineConfig, PipelineOutput, DEFAULT_ALPHA_HALF_EXTENT, DEFAULT_ALPHA_SPACING};
pub use pmatrix::{p_matrix_integral, p_matrix_series, p_matrix_series_from, PMatrixMaps};
pub use probe::{
    design_condition, design_matrix, extract_rho_nn, probe_cycle, probe_cycle_split, probe_mode_function, probe_unitary_blocks, run_schedule, schedules_from_ladder,
    schedule_family, DesignBasis, ProbeRotation, ProbeSchedule, RhoNnTable, Statistics, COND_LIMIT, FULL_TAU0, LEVEL2_TAU0,
};
pub use vibronic::{displace_vibronic, VibronicState, LEVEL_1, LEVEL_2};
pub use wigner::{
    moment_set_from_cf, moments_from_cf, normal_moment_fd, wigner_matrix, DisplacedDiagonals, FdOptions, MomentErrors, QuadratureMoments,
    WignerMatrixGrid, WignerMatrixSample, WIGNER_CF_RADIUS,
};
