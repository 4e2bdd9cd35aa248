//! Exact-arithmetic homological algebra for closed embeddings, at desk scale.
//!
//! Everything here is computed over the rationals with no tolerances: Koszul
//! resolutions of complete intersections, the relative de Rham / Chevalley-
//! Eilenberg complex of the resolution's tangent algebroid, truncated
//! enveloping and jet algebras, Thom-Whitney totalization of cosimplicial
//! complexes, Maurer-Cartan gauge theory for nilpotent dg-Lie algebras, and
//! the obstruction classes attached to splitting and linearizing formal
//! neighborhoods.  Infinite objects are cut down to finite-dimensional slices
//! by an auxiliary weight grading (or a Laurent-degree window on chart
//! covers), and every claim is decided by exact sparse linear algebra on
//! those slices.
//!
//! The crate is `no_std` + `alloc`; IO, scenario files and the command-line
//! front end live in the companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
#[macro_use]
extern crate std;

pub mod exactlin;
pub mod gca;
pub mod liealgebroid;
pub mod mcgauge;
pub mod neighborhoods;
pub mod obstructions;
pub mod resolve;
pub mod thomwhitney;

pub use exactlin::{RatMatrix, SlicedComplex};
pub use gca::{Algebra, BaseRing, Derivation, GcaElement, Rat};
