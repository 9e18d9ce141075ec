//! The domain classification table: measure density, BBM behaviour and
//! extension behaviour side by side on the catalog domains.

use serde::Serialize;

use super::config::ExperimentConfig;
use super::report::{Check, ExperimentReport, Plot, Series, Table};
use crate::extension::{extend_e, fractional_sweep, matched_cover, BoundCheck};
use crate::geometry::{catalog_domain, norm, BBox, ImplicitDomain};
use crate::measure::{ahlfors_check_seeded, RegularityReport, Verdict};
use crate::norms::{bbm_sweep, hajlasz_bbm_bound, BbmSweep, HajlaszBound};
use crate::quadrature::sample;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    /// No scaled value exceeds the BBM limit by more than the errors.
    Bounded,
    /// The growth flag of the sweep is set and the largest scaled value
    /// exceeds the limit by more than the errors.
    Growing,
    /// Above the limit without the growth flag.
    Neither,
}

impl Trend {
    pub fn as_str(self) -> &'static str {
        match self {
            Trend::Bounded => "bounded",
            Trend::Growing => "growing",
            Trend::Neither => "neither",
        }
    }
}

/// Classify a sweep, with the margin the decision rests on. A monotone
/// approach to the limit from below sets the growth flag too, so growth
/// also needs the limit to be exceeded. The margin is the smaller of the
/// growth steps and the excess when growing, otherwise the headroom
/// `reference + errors - scaled` at its smallest.
pub fn classify(sw: &BbmSweep) -> (Trend, f64) {
    let step = sw
        .scaled
        .windows(2)
        .zip(sw.err.windows(2))
        .map(|(v, e)| v[1] - v[0] - e[0] - e[1])
        .fold(f64::INFINITY, f64::min);
    let room = sw
        .scaled
        .iter()
        .zip(&sw.err)
        .map(|(v, e)| sw.reference + sw.reference_err + e - v)
        .fold(f64::INFINITY, f64::min);
    if room >= 0.0 {
        (Trend::Bounded, room)
    } else if sw.growing {
        (Trend::Growing, step.min(-room))
    } else {
        (Trend::Neither, room)
    }
}

/// Resolutions and windows for the table. Growth near a cusp tip or a slit
/// only shows on a window refined far below the full-domain grid.
#[derive(Clone, Debug, Serialize)]
pub struct DichotomyPlan {
    pub s: Vec<f64>,
    pub c: f64,
    pub x_samples: usize,
    pub budget: usize,
    pub seed: u64,
    /// Full-domain BBM sweeps at `p = 2`.
    pub h_sweep: f64,
    /// Fractional bound sweeps of the extension.
    pub h_extension: f64,
    /// Hajłasz-route bound on the exterior cusp.
    pub h_hajlasz: f64,
    pub growth_p: f64,
    pub cusp_window: BBox,
    pub cusp_h: f64,
    pub cusp_candidates: Vec<String>,
    pub slit_window: BBox,
    pub slit_h: f64,
    pub slit_candidates: Vec<String>,
}

impl DichotomyPlan {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        let h = cfg.h;
        DichotomyPlan {
            s: cfg.s.clone(),
            c: cfg.c.unwrap_or(0.5),
            x_samples: cfg.x_samples.unwrap_or(64),
            budget: cfg.budget,
            seed: cfg.seed,
            h_sweep: h,
            h_extension: 2.0 * h,
            h_hajlasz: 0.5 * h,
            growth_p: 4.0,
            cusp_window: BBox::new([-0.125, -0.125, 0.0], [0.125, 0.125, 0.0]),
            cusp_h: h / 32.0,
            cusp_candidates: vec!["cusppow:1.2".into(), "cusppow:1.3".into(), "cusppow:1.5".into()],
            slit_window: BBox::new([0.4, -0.1, 0.0], [0.6, 0.1, 0.0]),
            slit_h: h / 16.0,
            slit_candidates: vec!["cusppow:1".into()],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthSearch {
    pub window: BBox,
    pub h: f64,
    pub p: f64,
    /// Every candidate's sweep, in plan order.
    pub candidates: Vec<BbmSweep>,
    /// Index of the growing candidate with the largest `max_ratio`.
    pub best: Option<usize>,
    /// Growth on a finite grid is evidence, not a proof of failure.
    pub label: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtensionStability {
    pub function: String,
    pub h: f64,
    pub checks: Vec<BoundCheck>,
    /// `max ratio / min ratio` over the `s` grid.
    pub spread: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyRow {
    pub domain: String,
    pub ahlfors: RegularityReport,
    /// Full-domain `p = 2` sweep of `x_1`.
    pub sweep: BbmSweep,
    pub growth: Option<GrowthSearch>,
    pub hajlasz: Option<Vec<HajlaszBound>>,
    pub extension: Option<ExtensionStability>,
}

/// What the table is expected to show per domain.
pub struct RowExpectation {
    pub domain: &'static str,
    pub ahlfors: Verdict,
    pub bbm: Trend,
    pub extension: bool,
    pub growth: bool,
    pub hajlasz: bool,
}

pub const ROWS: [RowExpectation; 5] = [
    RowExpectation { domain: "disk", ahlfors: Verdict::Pass, bbm: Trend::Bounded, extension: true, growth: false, hajlasz: false },
    RowExpectation { domain: "square", ahlfors: Verdict::Pass, bbm: Trend::Bounded, extension: true, growth: false, hajlasz: false },
    RowExpectation { domain: "cusp-interior:2", ahlfors: Verdict::Pass, bbm: Trend::Growing, extension: false, growth: true, hajlasz: false },
    RowExpectation { domain: "cusp-exterior:2", ahlfors: Verdict::Fail, bbm: Trend::Bounded, extension: false, growth: false, hajlasz: true },
    RowExpectation { domain: "slit-disk", ahlfors: Verdict::Pass, bbm: Trend::Growing, extension: true, growth: true, hajlasz: false },
];

/// Radii for the measure-density test: a unit first radius when the domain
/// allows it, then three decades.
pub fn default_radii(dom: &ImplicitDomain) -> Vec<f64> {
    let r0 = if 0.5 * dom.diam_upper() >= 1.0 { 1.0 } else { 0.5 };
    vec![r0, 0.1, 0.01, 0.001]
}

fn growth_search(dom: &ImplicitDomain, window: &BBox, h: f64, p: f64, s: &[f64], fns: &[String]) -> Result<GrowthSearch> {
    let sub = dom
        .intersect_box(window)
        .ok_or_else(|| Error::Parameter(format!("window {window:?} misses {}", dom.name())))?;
    let mut candidates = Vec::new();
    for f in fns {
        let g = sample(&sub, f, h)?;
        candidates.push(bbm_sweep(&g, p, s)?);
    }
    let best = candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.growing)
        .max_by(|a, b| a.1.max_ratio.total_cmp(&b.1.max_ratio))
        .map(|(i, _)| i);
    Ok(GrowthSearch { window: *window, h, p, candidates, best, label: "evidence" })
}

fn extension_stability(dom: &ImplicitDomain, h: f64, s: &[f64]) -> Result<ExtensionStability> {
    let g = sample(dom, "coord:1", h)?;
    let cover = matched_cover(&g)?;
    let ef = extend_e(&g, &cover)?;
    let checks = fractional_sweep(&ef, 2.0, s)?;
    let ratios: Vec<f64> = checks.iter().filter_map(|c| c.ratio).collect();
    let spread = if ratios.len() == checks.len() && !ratios.is_empty() {
        ratios.iter().copied().fold(0.0, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        f64::INFINITY
    };
    Ok(ExtensionStability { function: "coord:1".into(), h, checks, spread })
}

pub fn dichotomy_row(plan: &DichotomyPlan, exp: &RowExpectation) -> Result<DichotomyRow> {
    let dom = catalog_domain(exp.domain)?;
    let ahlfors = ahlfors_check_seeded(&dom, plan.c, plan.x_samples, &default_radii(&dom), plan.budget, plan.seed)?;
    let sweep = bbm_sweep(&sample(&dom, "coord:1", plan.h_sweep)?, 2.0, &plan.s)?;
    let growth = if exp.growth {
        let (w, h, fns) = if exp.domain == "slit-disk" {
            (&plan.slit_window, plan.slit_h, &plan.slit_candidates)
        } else {
            (&plan.cusp_window, plan.cusp_h, &plan.cusp_candidates)
        };
        Some(growth_search(&dom, w, h, plan.growth_p, &plan.s, fns)?)
    } else {
        None
    };
    let hajlasz = if exp.hajlasz {
        let g = sample(&dom, "coord:1", plan.h_hajlasz)?;
        Some(plan.s.iter().map(|&s| hajlasz_bbm_bound(&g, s, 2.0)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let extension = if exp.extension { Some(extension_stability(&dom, plan.h_extension, &plan.s)?) } else { None };
    Ok(DichotomyRow { domain: exp.domain.to_string(), ahlfors, sweep, growth, hajlasz, extension })
}

/// Verdict check plus, for an expected failure, the tip-witness and
/// decreasing-decades checks.
pub fn ahlfors_checks(d: &str, a: &RegularityReport, expected: Verdict) -> Vec<Check> {
    let verdict = serde_json::to_value(a.verdict).unwrap();
    let exp = serde_json::to_value(expected).unwrap();
    let margin = if a.verdict == Verdict::Pass { a.inf_ratio - a.c } else { a.c - a.inf_ratio };
    let mut out = vec![Check::new(format!("{d}/ahlfors"), exp.as_str().unwrap(), verdict.as_str().unwrap(), margin)];
    if expected == Verdict::Fail {
        let at_tip = norm(&a.witness.x) <= 2.0 * a.witness.r;
        out.push(Check::new(
            format!("{d}/witness"),
            "tip",
            if at_tip { "tip" } else { "elsewhere" },
            2.0 * a.witness.r - norm(&a.witness.x),
        ));
        out.push(Check::new(
            format!("{d}/decades"),
            "decreasing",
            if a.decreasing_decades >= 2.0 - 1e-9 { "decreasing" } else { "flat" },
            a.decreasing_decades - 2.0,
        ));
    }
    out
}

/// Checks for one row against its expectation.
pub fn row_checks(row: &DichotomyRow, exp: &RowExpectation) -> Vec<Check> {
    let d = &row.domain;
    let mut out = ahlfors_checks(d, &row.ahlfors, exp.ahlfors);
    let (trend, margin) = match (&row.growth, &row.hajlasz) {
        (Some(gs), _) => match gs.best {
            Some(i) => classify(&gs.candidates[i]),
            None => {
                let m = gs.candidates.iter().map(|c| classify(c).1).fold(f64::NEG_INFINITY, f64::max);
                (Trend::Neither, -m.abs())
            }
        },
        (None, Some(hb)) => {
            let m = hb.iter().map(|b| b.rhs + b.rhs_err - (b.lhs - b.lhs_err)).fold(f64::INFINITY, f64::min);
            (if hb.iter().all(|b| b.holds) { Trend::Bounded } else { Trend::Neither }, m)
        }
        (None, None) => classify(&row.sweep),
    };
    out.push(Check::new(format!("{d}/bbm"), exp.bbm.as_str(), trend.as_str(), margin));
    if let Some(e) = &row.extension {
        let ok = e.spread < 2.0;
        out.push(Check::new(format!("{d}/extension"), "bounded", if ok { "bounded" } else { "spread" }, 2.0 - e.spread));
    }
    out
}

/// Run every row and assemble the report: checks, one CSV per row and a
/// plot of the BBM sweeps behind the BBM column.
pub fn dichotomy_table(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let plan = DichotomyPlan::from_config(cfg);
    let mut report = ExperimentReport::new(cfg);
    let mut rows = Vec::new();
    let mut summary = Table::new("dichotomy", &["row", "ahlfors_inf_ratio", "bbm_max_ratio", "bbm_growing", "extension_spread"]);
    let mut plot = Plot {
        name: "dichotomy-bbm".into(),
        title: "(1-s)-scaled seminorm over the BBM limit".into(),
        x_label: "s".into(),
        y_label: "ratio".into(),
        log_x: false,
        series: Vec::new(),
    };
    for (k, exp) in ROWS.iter().enumerate() {
        let row = dichotomy_row(&plan, exp)?;
        report.checks.extend(row_checks(&row, exp));
        let shown = match &row.growth {
            Some(gs) => &gs.candidates[gs.best.unwrap_or(0)],
            None => &row.sweep,
        };
        summary.push(vec![
            k as f64,
            row.ahlfors.inf_ratio,
            shown.max_ratio,
            if shown.growing { 1.0 } else { 0.0 },
            row.extension.as_ref().map_or(f64::NAN, |e| e.spread),
        ]);
        let rr = shown.reference.max(f64::MIN_POSITIVE);
        plot.series.push(Series {
            label: format!("{} {}", row.domain, shown.function),
            x: shown.s.clone(),
            y: shown.ratio.clone(),
            err: shown.err.iter().map(|e| e / rr).collect(),
        });
        rows.push(row);
    }
    report.tables.push(summary);
    report.plots.push(plot);
    report.records = serde_json::json!({ "plan": plan, "rows": rows });
    report.apply_expectations();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sweep(scaled: Vec<f64>, err: Vec<f64>, reference: f64, growing: bool) -> BbmSweep {
        BbmSweep {
            domain: "d".into(),
            function: "f".into(),
            p: 2.0,
            s: vec![0.8, 0.9, 0.95],
            ratio: scaled.iter().map(|v| v / reference).collect(),
            max_ratio: 0.0,
            scaled,
            err,
            reference,
            reference_err: 0.0,
            growing,
        }
    }

    #[test]
    fn classification_and_margins() {
        let (t, m) = classify(&sweep(vec![1.0, 1.2, 1.4], vec![0.0; 3], 1.5, false));
        assert_eq!(t, Trend::Bounded);
        assert!((m - 0.1).abs() < 1e-12);
        // Increasing towards the limit is not growth.
        let (t, _) = classify(&sweep(vec![1.0, 1.2, 1.4], vec![0.0; 3], 1.5, true));
        assert_eq!(t, Trend::Bounded);
        let (t, m) = classify(&sweep(vec![1.0, 2.0, 4.0], vec![0.1; 3], 1.5, true));
        assert_eq!(t, Trend::Growing);
        assert!((m - 0.8).abs() < 1e-12);
        let (t, _) = classify(&sweep(vec![2.0, 1.9, 2.1], vec![0.0; 3], 1.5, false));
        assert_eq!(t, Trend::Neither);
    }

    #[test]
    fn radii_start_at_unit_when_allowed() {
        assert_eq!(default_radii(&catalog_domain("disk").unwrap())[0], 1.0);
        assert_eq!(default_radii(&catalog_domain("square").unwrap())[0], 0.5);
    }
}
