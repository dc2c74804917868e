//! Simulation warnings.
//!
//! Truncation effects are reported as data attached to states and run
//! results rather than as errors: reproducing the reference protocols
//! requires continuing past mild leakage.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SimWarning {
    /// Population in the guard band exceeded the configured threshold.
    Truncation {
        context: String,
        leakage: f64,
        threshold: f64,
    },
    /// An operator advertised as unitary has a measurable defect on the
    /// interior subspace.
    UnitarityDefect {
        context: String,
        defect: f64,
        threshold: f64,
    },
    /// Weight lost when truncating a state to a smaller mode shape.
    TruncatedWeight { context: String, lost: f64 },
    /// A validity assumption was violated but computation continued
    /// (e.g. a beam that is not far-detuned).
    Assumption { context: String, detail: String },
}

impl SimWarning {
    pub fn describe(&self) -> String {
        match self {
            SimWarning::Truncation {
                context,
                leakage,
                threshold,
            } => format!("truncation in {context}: guard-band population {leakage:.3e} > {threshold:.3e}"),
            SimWarning::UnitarityDefect {
                context,
                defect,
                threshold,
            } => format!("unitarity defect in {context}: {defect:.3e} > {threshold:.3e}"),
            SimWarning::TruncatedWeight { context, lost } => {
                format!("state truncation in {context}: lost weight {lost:.3e}")
            }
            SimWarning::Assumption { context, detail } => {
                format!("assumption violated in {context}: {detail}")
            }
        }
    }
}
