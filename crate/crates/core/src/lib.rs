//! Relaxation dynamics of two collective spin domains coupled to one shared
//! bosonic reservoir.
//!
//! The crate offers independent routes to the same physics:
//!
//! * [`lindblad`] integrates the collective master equation exactly, with the
//!   density matrix stored as one dense block per total magnetization `M`.
//! * [`closure`] integrates the four-moment closure system, which scales to
//!   domains of 10^4 spins.
//! * [`oracle`] predicts steady states without integrating anything, from
//!   the Clebsch–Gordan decomposition of the initial product state into
//!   total-spin sectors.
//!
//! [`experiments`] runs scenarios, detects steady states and fits relaxation
//! times. [`io`] holds the scenario file format and CSV output.

pub mod closure;
pub mod error;
pub mod experiments;
pub mod io;
pub mod lindblad;
pub mod ode;
pub mod oracle;
pub mod reservoir;
pub mod series;
pub mod spin;

pub use error::{Error, Result};
pub use reservoir::ReservoirSpec;
pub use series::{EvolveOptions, Method, Observables, Solver, TimeSeries};
pub use spin::{HalfInt, InitialConfig, SpinDomain};
