//! Symmetric decreasing rearrangement and polarization of nonnegative functions sampled
//! on uniform, origin-centred grids, with numerical checks of the Polya-Szegő inequality.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below fix `f64`
//! and `f32` for the common types.

pub mod error;
pub mod functional;
pub mod grid;
pub mod polarize;
pub mod rearrange;
pub mod scalar;
pub mod scheduler;
pub mod verify;

pub use error::{Error, Result};
pub use functional::{
    check_admissibility, evaluate_anisotropic, evaluate_functional, gradient, uniform_samples,
    AdmissibilityReport, GradientField, Integrand, IntegrandTable,
};
pub use grid::{
    distribution_function, generate_test_function, lp_distance, lp_norm, lp_norm_values, read_grid_function,
    value_multiset, write_grid_function, FunctionKind, GeneratorParams, GridFunction, GridSpec, ValueMultiset,
};
pub use polarize::{
    exact_family, generate_schedule, is_grid_compatible, polarize, read_schedule, reflect, shuffled_exact_family,
    write_schedule, CompatibilityCertificate, ExactMap, HalfSpace, LatticeReflection, PolarizationMode,
    ScheduleFamily,
};
pub use rearrange::{esssup, is_radially_nonincreasing, schwarz_symmetrize, RadialOrder};
pub use scalar::{compensated_sum, CompensatedSum, Scalar};
pub use scheduler::{
    run_iteration, verify_report, verify_step_invariants, ConvergenceReport, IterationConfig, PolarizationSchedule,
    ScheduledHalfSpace, StepRecord, StepTolerances, StepViolation, Strategy, TerminalStatus,
};
pub use verify::{
    analyze_equality_case, check_anisotropic, check_polya_szego, EqualityCaseFinding, EqualityStatus,
    InequalityVerdict, VerdictStatus,
};

pub type GridSpecF64 = GridSpec<f64>;
pub type GridFunctionF64 = GridFunction<f64>;
pub type HalfSpaceF64 = HalfSpace<f64>;
pub type IntegrandF64 = Integrand<f64>;
pub type PolarizationScheduleF64 = PolarizationSchedule<f64>;
pub type ConvergenceReportF64 = ConvergenceReport<f64>;

pub type GridSpecF32 = GridSpec<f32>;
pub type GridFunctionF32 = GridFunction<f32>;
pub type HalfSpaceF32 = HalfSpace<f32>;
pub type IntegrandF32 = Integrand<f32>;
pub type PolarizationScheduleF32 = PolarizationSchedule<f32>;
pub type ConvergenceReportF32 = ConvergenceReport<f32>;
