//! Synchronization analysis for networks of piecewise-smooth systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`matgraph`]: dense symmetric eigensolver, matrix norms, graph Laplacians.
//! - [`dynamics`]: the node vector fields (relay, piecewise-linear oscillator,
//!   Sprott circuit, bistable system, generic affine-plus-relay).
//! - [`quad`]: sampled falsification of QUAD-type conditions and the
//!   closed-form coupling-gain thresholds.
//! - [`integrator`]: fixed-step RK4/Euler for discontinuous right-hand sides.
//! - [`network`]: multiplex (diffusive + sign) network assembly, simulation and
//!   synchronization error.
//! - [`sweep`]: parallel, reproducible `(c, c_d)` grid sweeps.
//! - [`cli`]: configuration schema and the `pwsync` subcommands.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod matgraph;
pub mod network;
pub mod quad;
pub mod seed;
pub mod sweep;

pub use error::{Error, Result};
