//! Numerical toolkit for fractional Sobolev seminorms on irregular domains.
//!
//! The crate is organised bottom-up:
//!
//! | module        | contents                                                        |
//! |---------------|-----------------------------------------------------------------|
//! | `geometry`    | implicit domains, dyadic cubes, Whitney covers, partitions of unity |
//! | `quadrature`  | grid sampling and the panel engine for singular double integrals |
//! | `norms`       | BBM constant and sweeps, slicing oracle, Hajłasz-route bound      |
//! | `measure`     | ball measures, Ahlfors regularity, dyadic Hausdorff content       |
//! | `extension`   | Whitney-average extension operators and their bound checks        |
//! | `experiments` | configs, the Poincaré check, the dichotomy table, reports         |

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod error;
pub mod experiments;
pub mod extension;
pub mod geometry;
pub mod measure;
pub mod norms;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
