//! Quantities built on the quadrature engine: the BBM constant and sweeps,
//! the slicing oracle and the Hajłasz-route bound.

pub mod bbm;
pub mod hajlasz;
pub mod slicing;

pub use bbm::{bbm_constant, bbm_sweep, bbm_sweep_in, BbmSweep};
pub use hajlasz::{hajlasz_bbm_bound, HajlaszBound, PairCheck};
pub use slicing::slicing_seminorm;
