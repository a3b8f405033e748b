// Copyright 2026 the Frontier Authors
// SPDX-License-Identifier: Apache-2.0

//! Conflict sets of wavefronts.
//!
//! Fronts leave `l` hypersurfaces of `R^n` (`n` = 2 or 3) at speeds fixed by
//! translation-invariant quadratic Finsler metrics `H(xi) = sqrt(xi^T Q xi)`.
//! The conflict set is where fronts of equal travel time meet at critical
//! footpoints. This crate solves for it and traces it by continuation, and
//! derives related sets from the same machinery:
//!
//! - [`conflict`]: conflict sets, oriented conflict sets and symmetry sets,
//! - [`kite`]: kite curves and the Gauss image of the lifted conflict set,
//! - [`center`]: parallel-normal pairs, (weighted) center sets and normal chords,
//! - [`classify`]: germ codimensions, ADE labels, transversality margins and the
//!   multi-germ partition calculus.
//!
//! The crate is `no_std` (with `alloc`) when built without the `std` feature;
//! enable `libm` in that case.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_debug_implementations)]
// `!(a < b)` comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod math;

pub mod center;
pub mod classify;
pub mod conflict;
pub mod error;
pub mod family;
pub mod kite;
pub mod linalg;
pub mod propagation;
pub mod scene;
pub mod series;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{smallest_singular_value, Matrix};
pub use scene::{FinslerMetric, Interval, ParametricHypersurface, Scene, SceneSurface, SurfaceKind};
pub use solver::{ContinuationSettings, NonlinearSystem, Termination, TraceResult};
