// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong in the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside a non-periodic domain.
    Domain { parameter: usize, value: f64, lo: f64, hi: f64 },
    /// The embedding is not an immersion at the given parameter.
    Immersion { at: alloc::vec::Vec<f64> },
    /// A covector was zero where a direction was required.
    DegenerateCovector,
    /// The point sits on the source surface, where the travel time is not smooth.
    SingularTime,
    /// A footpoint was passed that is not critical for the time function.
    NotCritical { residual: f64 },
    /// Input rejected by validation.
    Invalid(String),
    /// The scene has more surfaces than the ambient space allows.
    Overdetermined { surfaces: usize, ambient_dim: usize },
    /// Newton iteration failed to reach the residual tolerance.
    NoConvergence { residual: f64, iterations: usize },
    /// The Jacobian lost rank and damping could not recover.
    SingularJacobian { sigma_min: f64 },
    /// A solver precondition did not hold.
    Precondition(String),
    /// The tangent planes at a conflict point do not meet in a single point.
    DegenerateKite { condition: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { parameter, value, lo, hi } => {
                write!(f, "parameter {parameter} = {value} outside domain [{lo}, {hi}]")
            }
            Error::Immersion { at } => write!(f, "surface is not immersive at {at:?}"),
            Error::DegenerateCovector => f.write_str("degenerate (zero) covector"),
            Error::SingularTime => f.write_str("point lies on the source surface"),
            Error::NotCritical { residual } => {
                write!(f, "footpoint is not critical (|grad_s F| = {residual:e})")
            }
            Error::Invalid(msg) => write!(f, "invalid input: {msg}"),
            Error::Overdetermined { surfaces, ambient_dim } => write!(
                f,
                "{surfaces} surfaces in R^{ambient_dim}: at most {} allowed",
                ambient_dim + 1
            ),
            Error::NoConvergence { residual, iterations } => {
                write!(f, "no convergence after {iterations} iterations (residual {residual:e})")
            }
            Error::SingularJacobian { sigma_min } => {
                write!(f, "singular jacobian (sigma_min = {sigma_min:e})")
            }
            Error::Precondition(msg) => write!(f, "precondition failed: {msg}"),
            Error::DegenerateKite { condition } => {
                write!(f, "tangent planes nearly parallel (condition {condition:e})")
            }
        }
    }
}

impl core::error::Error for Error {}
