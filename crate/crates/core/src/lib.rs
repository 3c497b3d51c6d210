//! Numerical core for Schrödinger evolution with a Bohmian-sourced,
//! partly anti-Hermitian gravitational term.
//!
//! Everything here is `no_std` with `alloc`. Units are simulation units
//! with `ħ = 1`; masses are per particle and default to one.

#![no_std]
// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bohm;
pub mod error;
pub mod evolve;
pub mod fft;
pub mod fock;
pub mod gravity;
pub mod grid;
pub mod observables;
pub mod potential;
pub mod wavefunction;

pub use bohm::{BohmianPoint, BranchRegion, Ensemble, EquilibriumReport, GuidanceField};
pub use error::{Error, Result};
pub use evolve::{EvolutionSetup, EvolutionState, Propagator, Snapshot};
pub use fock::{ModeFamily, ModeSet, SiParams};
pub use gravity::{GravityParams, GravitySample};
pub use grid::{Field, Grid};
pub use num_complex::Complex64;
pub use observables::{CorrelationData, CorrelationKind, RateField, RateMethod};
pub use potential::{ExternalPotentialSpec, PotentialTerm};
pub use wavefunction::{Orbital, WaveFunction};
