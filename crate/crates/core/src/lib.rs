//! A threshold detector driven by signal plus white noise, treated as a
//! first-passage problem: closed form, Fokker–Planck solver, Monte Carlo
//! simulation and the counting statistics built on them.

// Negated comparisons such as `!(x > 0.0)` are used on purpose: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod pde;
pub mod rng;
pub mod special;
pub mod stats;
pub mod verify;
