//! Simulation and control of a cable-suspended aerial platform carrying a
//! cable-suspended load.
//!
//! - [`model`]: physical parameters of the five-joint chain and its planar
//!   double-pendulum reduction
//! - [`dynamics`]: inertia, Coriolis, gravity and input maps, forward
//!   dynamics, and an independent energy oracle
//! - [`control`]: partial feedback linearization, standard and with
//!   output/internal coupling terms
//! - [`sim`]: fixed-step closed-loop simulation with wind, sensor noise and
//!   plant/controller mismatch
//! - [`analysis`]: closed-loop linearization, limit-cycle detection, KPIs
//! - [`config`], [`csvlog`], [`cli`]: scenario files, CSV logs, command line

pub mod analysis;
pub mod cli;
pub mod config;
pub mod control;
pub mod csvlog;
pub mod dual;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod sim;

pub use dynamics::{DynamicsTerms, FullModel, Model, Multibody, PlanarModel, Wrench};
pub use error::{Error, Result};
pub use model::{default_params, planar_reduction, uncertain_params, JointState, ModelParams, PlanarParams};
