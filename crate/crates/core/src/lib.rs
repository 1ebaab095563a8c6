//! Chess billiards on convex planar domains: boundary dynamics, rotation
//! numbers, Diophantine diagnostics, a spectral solver for the forced
//! internal-wave (Poincaré) equation on the unit square, and staircase
//! dimension estimates.

// negated float comparisons deliberately treat NaN as invalid input
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arithmetic;
pub mod billiard;
pub mod fractal;
pub mod geometry;
pub mod io;
pub mod rotation;
pub mod spectral;

pub use arithmetic::{
    beta_estimate, continued_fraction, convergents, diophantine_margin, nearby_rational,
    ArithmeticError, ContinuedFraction, Convergent, ConvergentError, DiophantineReport,
};
pub use billiard::{half_step, orbit, step, BilliardError, Orbit, Trajectory};
pub use fractal::{
    box_count, dimension_vs_tilt, polyfit, staircase_dimension, tilt_dimensions, FractalError,
    StaircaseAnalysis, TiltConfig, TiltStudy,
};
pub use geometry::{BoundaryPoint, ChessParams, ChordSign, Domain, DomainSpec, GeometryError};
pub use rotation::{
    detect_plateaus, estimate_rotation, lambda_for_rotation, r_square_exact, sweep,
    EstimateStatus, Plateau, PlateauDetection, RotationError, RotationEstimate, SweepResult,
    SweepSample,
};
pub use spectral::{
    analyze, denominator_margin, derivative_field, regularity_report, residual_check,
    sobolev_weighted_sum, solve, synthesize, Basis, FourierField, SolverConfig, SolverMode,
    SpectralError,
};
