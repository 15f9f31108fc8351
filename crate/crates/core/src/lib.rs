//! Solver and analysis toolkit for a two-dimensional ferronematic model
//! with coupled Q-tensor and magnetization order parameters.
//!
//! The crate evolves the L2 gradient flow of the rescaled free energy
//!
//! ```text
//! F[Q, M] = ∫ ( ½|∇Q|² + (ε/2)|∇M|² + ε⁻² f(Q, M) ) dx
//! ```
//!
//! on the unit square to steady state, and provides the variational
//! machinery needed to interpret the resulting defect structures:
//! minimal connections between point defects, canonical harmonic maps
//! and their renormalized energy, the Modica-Mortola interface profile,
//! and the Ginzburg-Landau core energy.

pub mod config;
pub mod diagnostics;
pub mod fields;
pub mod flow;
pub mod geometry;
pub mod potential;
pub mod profile1d;
mod solver;

pub use fields::{FieldState, Grid};
pub use potential::{ModelParams, PotentialConstants};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("root search for X_eps did not converge (beta={beta}, eps={eps})")]
    RootSolve { beta: f64, eps: f64 },
    #[error("Picard iteration failed to converge after {halvings} tau halvings at t={time} (residual {residual:.3e})")]
    PicardFailure {
        time: f64,
        halvings: u32,
        residual: f64,
    },
    #[error("too many points for exhaustive matching: {n} (max {max})")]
    MatchingCapacity { n: usize, max: usize },
    #[error("defect point {point:?} too close to the boundary (margin {margin})")]
    PointNearBoundary { point: (f64, f64), margin: f64 },
    #[error("sigma ball of radius {sigma} around {point:?} touches the boundary or another ball")]
    SigmaBallInvalid { point: (f64, f64), sigma: f64 },
    #[error("boundary angle trace has nonzero residual winding {winding}; inconsistent inputs")]
    BoundaryWinding { winding: i64 },
    #[error("flood fill could not reach {unreached} nodes; connection disconnects the domain")]
    FloodFillDisconnected { unreached: usize },
    #[error("Newton iteration for the core-energy profile diverged (eps={eps}, last residual {residual:.3e})")]
    CoreNewtonDiverged { eps: f64, residual: f64 },
    #[error("no feasible optimizer start")]
    NoFeasibleStart,
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
