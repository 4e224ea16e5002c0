//! Correctness kernels for finite abstract domains.
//!
//! An abstract domain can be simplified, without losing analysis precision,
//! by removing every element that never influences the best correct
//! approximation of the functions under analysis. The most abstract domain
//! that keeps those approximations intact is the domain's correctness
//! kernel. This crate computes kernels over explicit finite lattices and
//! applies them in two settings: partition-based abstractions of transition
//! systems (where the kernel merges blocks and interacts with CEGAR-style
//! refinement) and Boolean predicate abstraction of simple programs.
//!
//! The building blocks are explicit: lattices are tables, abstract domains
//! are meet-closed images, functions are vectors. Everything is exhaustively
//! checkable, and the expensive definitional constructions ship with
//! brute-force oracles so the optimized paths can be cross-validated.

pub mod absdom;
pub mod ats;
pub mod bits;
pub mod cegar;
pub mod dot;
pub mod fixtures;
pub mod gen;
pub mod kernel;
pub mod lattice;
pub mod predabs;
