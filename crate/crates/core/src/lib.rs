//! Adversarial oracles, first-order solvers and stationarity certifiers for
//! nonsmooth nonconvex optimization.
//!
//! The crate is organised bottom up: [`vectorspace`] supplies dense vectors
//! and frames, [`zoo`] the test functions, [`oracle_game`] the query
//! protocol, [`adversaries`] the hard instances, [`solvers`] the algorithms,
//! [`stationarity`] the certificates and [`harness`] the experiments behind
//! the `nearstat` command line tool.

pub mod adversaries;
pub mod error;
pub mod harness;
pub mod oracle_game;
pub mod rng;
pub mod solvers;
pub mod stationarity;
pub mod vectorspace;
pub mod zoo;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use vectorspace::Vector;
pub use zoo::{FirstOrderReply, Function};
