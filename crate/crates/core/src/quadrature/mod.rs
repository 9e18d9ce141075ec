//! Grid sampling of functions on a domain and the panel engine for the
//! singular double integrals behind fractional seminorms.

pub mod functions;
pub mod gauss;
pub mod grid;
pub mod line;
pub mod nearfield;
pub mod panels;
pub mod seminorm;

pub use functions::{BoundFunction, FunctionSpec};
pub use grid::{sample, sample_on, GridFunction, Lattice};
pub use line::{line_restrict, LineSegment};
pub use panels::{PanelPair, PanelTree};
pub use seminorm::{gagliardo, gagliardo_rows, lp_norm, w1p_seminorm, Region, SeminormEstimate};
