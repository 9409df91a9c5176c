//! Shape optimization over deformation vector fields for a 2D conductivity
//! inclusion problem.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: interface-fitted triangulations of the unit square, deformation
//!   and invertibility checks, legacy VTK I/O.
//! * [`fem`]: P1 fields, sparse operators, assembly of the scalar and vector
//!   bilinear forms and constrained solves.
//! * [`model`]: the interface identification problem (state, adjoint,
//!   objective, target transfer).
//! * [`shape_calculus`]: volume-form shape derivative, Riesz gradients and
//!   finite-difference oracles.
//! * [`kkt`]: linear second shape derivative, the full KKT system, the
//!   regularized Newton step and the projected gradient step.
//! * [`pseudoinverse`]: dense minimum-norm and Tikhonov solves in a general
//!   inner product.
//! * [`driver`]: steepest descent and the two-phase gradient/Newton schedule.
//! * [`config`], [`history`], [`verify`]: run configuration, history files and
//!   the oracle suites behind the `verify` subcommand.

pub mod config;
pub mod driver;
pub mod error;
pub mod fem;
pub mod history;
pub mod kkt;
pub mod mesh;
pub mod model;
pub mod pseudoinverse;
pub mod shape_calculus;
pub mod verify;

pub use error::{Error, Result};
