//! Ball measures, Ahlfors regularity checks and dyadic Hausdorff content.

pub mod ahlfors;
pub mod ball;
pub mod content;

pub use ahlfors::{ahlfors_check, ahlfors_check_seeded, RatioSample, RegularityReport, Verdict};
pub use ball::{ball_measure, ball_measure_seeded};
pub use content::{
    boundary_hypothesis_check, hausdorff_content, BoundarySampler, CircleSampler, ContentEstimate,
    ContentTrend, FinitePoints, SegmentSampler, SetSampler,
};
