//! Numerical certification of membership in Γ-convex hulls of free
//! semialgebraic sets.
//!
//! The crate implements the moment/SOS semidefinite hierarchy for Γ-convexity:
//! free noncommutative polynomials and their evaluations ([`freealg`]), dense
//! Hermitian linear algebra ([`hermlin`]), a block-diagonal SDP model with a
//! primal-dual interior-point solver and SDPA text codec ([`sdp`]), truncated
//! Γ-moment sequences with Hankel and localizing matrices ([`moments`]),
//! Γ-pencils, spectrahedral inclusion and polar duals ([`convexity`]), the
//! truncated hull lift with GNS witness extraction and the hierarchy driver
//! ([`hull`]), and quadratic-module certificates ([`certify`]).
//!
//! The crate is `no_std` (alloc required); IO, file formats and the CLI live
//! in the companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod certify;
pub mod convexity;
pub mod freealg;
pub mod hermlin;
pub mod hull;
mod lmi;
pub mod mat;
pub mod moments;
pub mod sdp;

pub use num_complex::Complex64;
