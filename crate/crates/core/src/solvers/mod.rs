//! Reference solutions and optimizers.

pub mod kfold;
pub mod radial;
pub mod reference;
pub mod screwdriver;

use serde::Serialize;

use crate::geometry::BodySpec;

pub use kfold::{optimize_kfold, project_slopes, KfoldOptions};
pub use radial::{pmp_control, pmp_hamiltonian, radial_limit_solution, RadialSolution};
pub use reference::{asymptotic_gap, e1_reference_audit, e_body_reference_audit, footnote_arc_width, GapRow};
pub use screwdriver::{optimize_screwdriver, screwdriver_limit_value};

/// Outcome of an optimizer run.
#[derive(Clone, Debug, Serialize)]
pub struct OptimizationReport {
    /// Objective value of `body`.
    pub value: f64,
    /// Free parameters at the optimum: the half-length `a`, or the break radii
    /// and cell slopes of a k-fold profile.
    pub argument: Vec<f64>,
    pub body: BodySpec,
    /// Objective value after each accepted step.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `"C"`/`"N"` flags of the final body.
    pub flags: String,
}
