use num_complex::Complex64;
use thiserror::Error;

use crate::trajectory::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field evaluated at z = {z} (t = {t}) within the node tolerance: |psi| = {psi_abs:e}")]
    PoleProximity { z: Complex64, t: f64, psi_abs: f64 },

    #[error("superposition is not a symmetric counter-propagating pair: {0}")]
    ScenarioShape(String),

    #[error("degenerate scenario: {0}")]
    DegenerateScenario(String),

    #[error("Newton iteration did not converge after {iterations} iterations (last z = {last})")]
    NoConvergence { iterations: usize, last: Complex64 },

    #[error("stagnation search converged onto a node at z = {0}")]
    ConvergedToNode(Complex64),

    #[error("contour passes through or too close to a pole near z = {0}")]
    ContourThroughPole(Complex64),

    #[error("pole-local expansion undefined at zero offset")]
    DivideByZero,

    #[error("trajectory hit the pole guard at t = {t}, z = {z}")]
    PoleEncounter {
        t: f64,
        z: Complex64,
        partial: Box<Trajectory>,
    },

    #[error("isochrone round trip missed its target by {0:e} at the tightest tolerance")]
    RoundTrip(f64),

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64, partial: Box<Trajectory> },

    #[error("point z = {z} at t = {t} is not a stagnation point: |p| = {p_abs:e}")]
    NotStagnation { z: Complex64, t: f64, p_abs: f64 },

    #[error("linearized trajectory undefined: |alpha| = {0:e}")]
    AlphaZero(f64),

    #[error("trajectory too short for wrapping analysis: {0}")]
    TooShort(String),

    #[error("no valid wrapping records in ensemble ({invalid} invalid)")]
    EmptyEnsemble { invalid: usize },

    #[error("nodal line never reaches {0} degrees")]
    NeverEnters(f64),

    #[error("grid of {points} points exceeds budget of {budget}")]
    GridTooLarge { points: u128, budget: u128 },

    #[error("scenario file: {0}")]
    Scenario(String),

    #[error("volume file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable identifier for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::PoleProximity { .. } => "PoleProximity",
            Error::ScenarioShape(_) => "ScenarioShape",
            Error::DegenerateScenario(_) => "DegenerateScenario",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::ConvergedToNode(_) => "ConvergedToNode",
            Error::ContourThroughPole(_) => "ContourThroughPole",
            Error::DivideByZero => "DivideByZero",
            Error::PoleEncounter { .. } => "PoleEncounter",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::RoundTrip(_) => "RoundTrip",
            Error::NotStagnation { .. } => "NotStagnation",
            Error::AlphaZero(_) => "AlphaZero",
            Error::TooShort(_) => "TooShort",
            Error::EmptyEnsemble { .. } => "EmptyEnsemble",
            Error::NeverEnters(_) => "NeverEnters",
            Error::GridTooLarge { .. } => "GridTooLarge",
            Error::Scenario(_) => "ScenarioError",
            Error::Format(_) => "FormatError",
            Error::Io(_) => "IoFailure",
        }
    }
}
