//! Config-driven experiments and their reports.

pub mod config;
pub mod dichotomy;
pub mod poincare;
pub mod report;
pub mod run;

pub use config::{BallSpec, ExperimentConfig, Kind};
pub use dichotomy::{dichotomy_table, DichotomyPlan, DichotomyRow, Trend};
pub use poincare::{poincare_check, poincare_constant, PoincareRecord};
pub use report::{emit_csv, emit_svg, Check, ExperimentReport, Plot, Series, Table};
pub use run::run;
