//! Intention-aware dynamic Bayesian network for inferring the intentions of
//! a target vessel and scoring candidate trajectories against them.

pub mod bn;
pub mod extract;
pub mod geometry;
pub mod io;
pub mod intention;
pub mod runtime;
pub mod selftest;
pub mod trajgen;
