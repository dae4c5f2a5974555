//! Correlated cascades: a marked multivariate Hawkes model of users adopting one of
//! several competing or cooperating products.
//!
//! A user's adoption rate is a baseline plus exponentially decaying excitation from
//! the adoptions of the users that influence them. Which product is adopted is a
//! soft-max over per-product tendencies, so `beta` moves the model between
//! cooperation (uniform marks) and competition (winner takes all); the linear mark
//! recovers independent per-product cascades.
//!
//! - [`model`]: events, parameters, decayed sufficient statistics, intensities.
//! - [`likelihood`]: exact per-user negative log-likelihood and its gradient.
//! - [`inference`]: log-barrier maximum likelihood, parallel over users.
//! - [`simulation`]: Ogata thinning, the incentivization scenario, curves.
//! - [`metrics`] and [`diagnostics`]: evaluation and goodness of fit.
//! - [`io`], [`experiments`], [`cli`]: file formats and end-to-end pipelines.

// NaN must fail these guards, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod io;
pub mod likelihood;
pub mod metrics;
pub mod model;
pub mod simulation;

pub use error::{Error, Result};
pub use inference::{fit_all, fit_user, FitConfig, FitReport};
pub use model::{DecayState, Event, EventLog, MarkModel, ModelParams};
pub use simulation::{simulate, SimConfig};
