//! Symbolic computation for Lie algebroids presented over a single coordinate chart.
//!
//! The coefficient ring is [`ScalarFn`], the exact trigonometric/exponential
//! polynomials with rational coefficients. On top of it the crate builds
//! algebroid presentations with their graded calculus, representations and
//! characteristic cocycles, morphisms and relative modular cocycles,
//! pull-back algebroids, ansatz-based cohomology decisions, extensions and
//! cochains on finite diagrams.

#![allow(clippy::needless_range_loop)]

pub mod algebroid;
pub mod category;
pub mod cohomology;
pub mod error;
pub mod extension;
pub mod linalg;
pub mod morphism;
pub mod pullback;
pub mod report;
pub mod representation;
pub mod sampling;
pub mod symexpr;

pub use algebroid::{lie_top, AlgebroidPresentation, Co, Contra, FormField, Graded, Multivector, VolumeForm};
pub use error::{Error, Result};
pub use morphism::Morphism;
pub use representation::{LineSection, Representation};
pub use symexpr::{Chart, ScalarFn, Q};
