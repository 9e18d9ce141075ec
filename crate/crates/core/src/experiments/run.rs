//! Dispatch a config to its experiment and assemble the report.

use std::time::Instant;

use super::config::{ExperimentConfig, Kind};
use super::dichotomy::{ahlfors_checks, classify, default_radii, dichotomy_table};
use super::poincare::poincare_check;
use super::report::{Check, ExperimentReport, Plot, Series, Table};
use crate::extension::{exterior_probes, extend_e, extend_e2, fractional_sweep, gradient_bound_check, matched_cover};
use crate::geometry::{catalog_domain, ImplicitDomain};
use crate::measure::{ahlfors_check_seeded, boundary_hypothesis_check, Verdict};
use crate::norms::bbm_sweep;
use crate::quadrature::sample;
use crate::Result;

/// Probes for the maximum-principle check of `extend-check`.
pub const MAX_PRINCIPLE_PROBES: usize = 10_000;

/// Allowed relative change of the gradient ratio between two resolutions.
pub const GRADIENT_TOLERANCE: f64 = 0.25;

pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut report = match cfg.kind {
        Kind::Dichotomy => dichotomy_table(cfg)?,
        kind => {
            let dom = catalog_domain(cfg.domain_name())?;
            let mut r = ExperimentReport::new(cfg);
            match kind {
                Kind::BbmSweep => run_bbm(cfg, &dom, &mut r)?,
                Kind::Poincare => run_poincare(cfg, &dom, &mut r)?,
                Kind::Ahlfors => run_ahlfors(cfg, &dom, &mut r)?,
                Kind::ExtendCheck => run_extend(cfg, &dom, &mut r)?,
                Kind::ContentTrend => run_content(cfg, &dom, &mut r)?,
                Kind::Dichotomy => unreachable!(),
            }
            r.apply_expectations();
            r
        }
    };
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

/// `(1-s) [x]^p` on the unit interval.
fn interval_closed_form(p: f64, s: f64) -> f64 {
    2.0 / (p * (p * (1.0 - s) + 1.0))
}

fn run_bbm(cfg: &ExperimentConfig, dom: &ImplicitDomain, r: &mut ExperimentReport) -> Result<()> {
    let mut sweeps = Vec::new();
    let mut plot = Plot {
        name: "bbm".into(),
        title: format!("BBM sweep on {}", dom.name()),
        x_label: "s".into(),
        y_label: "(1-s) seminorm / limit".into(),
        log_x: false,
        series: Vec::new(),
    };
    let closed = dom.name() == "interval";
    for f in &cfg.functions {
        let g = sample(dom, f, cfg.h)?;
        for &p in &cfg.p {
            let sw = bbm_sweep(&g, p, &cfg.s)?;
            let tag = format!("{f}/p={p}");
            let exact = (closed && f == "coord:1").then(|| cfg.s.iter().map(|&s| interval_closed_form(p, s)).collect::<Vec<_>>());
            let mut cols = vec!["s", "scaled", "err", "reference", "ratio"];
            if exact.is_some() {
                cols.push("closed_form");
            }
            let mut t = Table::new(format!("bbm-{f}-p{p}"), &cols);
            for i in 0..sw.s.len() {
                let mut row = vec![sw.s[i], sw.scaled[i], sw.err[i], sw.reference, sw.ratio[i]];
                if let Some(e) = &exact {
                    row.push(e[i]);
                }
                t.push(row);
            }
            r.tables.push(t);
            let (trend, margin) = classify(&sw);
            r.checks.push(Check::new(format!("{tag}/trend"), "bounded", trend.as_str(), margin));
            if let Some(e) = &exact {
                let m = (0..e.len()).map(|i| sw.err[i] - (sw.scaled[i] - e[i]).abs()).fold(f64::INFINITY, f64::min);
                let obs = if m >= 0.0 { "within-err" } else { "off" };
                r.checks.push(Check::new(format!("{tag}/closed-form"), "within-err", obs, m));
            }
            let rr = sw.reference.max(f64::MIN_POSITIVE);
            plot.series.push(Series {
                label: tag,
                x: sw.s.clone(),
                y: sw.ratio.clone(),
                err: sw.err.iter().map(|e| e / rr).collect(),
            });
            sweeps.push(sw);
        }
    }
    r.plots.push(plot);
    r.records = serde_json::json!({ "sweeps": sweeps });
    Ok(())
}

fn run_poincare(cfg: &ExperimentConfig, dom: &ImplicitDomain, r: &mut ExperimentReport) -> Result<()> {
    let ball = cfg.ball.as_ref().map(|b| (b.center_point(), b.radius));
    let mut records = Vec::new();
    for f in &cfg.functions {
        let g = sample(dom, f, cfg.h)?;
        let mut t = Table::new(format!("poincare-{f}"), &["p", "q", "s", "lhs", "lhs_err", "rhs", "rhs_err", "margin"]);
        for &p in &cfg.p {
            let q = cfg.q.unwrap_or(p);
            for &s in &cfg.s {
                let rec = poincare_check(&g, p, q, s, ball)?;
                t.push(vec![p, q, s, rec.lhs, rec.lhs_err, rec.rhs, rec.rhs_err, rec.margin]);
                let obs = if rec.holds { "holds" } else { "violated" };
                r.checks.push(Check::new(format!("{f}/p={p}/q={q}/s={s}/poincare"), "holds", obs, rec.margin));
                records.push(rec);
            }
        }
        r.tables.push(t);
    }
    r.records = serde_json::json!({ "poincare": records });
    Ok(())
}

fn run_ahlfors(cfg: &ExperimentConfig, dom: &ImplicitDomain, r: &mut ExperimentReport) -> Result<()> {
    let radii = cfg.radii.clone().unwrap_or_else(|| default_radii(dom));
    let rep = ahlfors_check_seeded(dom, cfg.c.unwrap_or(0.5), cfg.x_samples.unwrap_or(64), &radii, cfg.budget, cfg.seed)?;
    let expected = if dom.name().starts_with("cusp-exterior") { Verdict::Fail } else { Verdict::Pass };
    r.checks.extend(ahlfors_checks(dom.name(), &rep, expected));
    let mut t = Table::new("ahlfors", &["r", "min_ratio", "ci", "x1", "x2"]);
    for s in &rep.per_radius {
        t.push(vec![s.r, s.ratio, s.ci, s.x[0], s.x[1]]);
    }
    r.tables.push(t);
    r.plots.push(Plot {
        name: "ahlfors".into(),
        title: format!("Smallest density ratio on {}", dom.name()),
        x_label: "r".into(),
        y_label: "min |B(x,r) ∩ Ω| / r^n".into(),
        log_x: true,
        series: vec![Series {
            label: "min ratio".into(),
            x: rep.per_radius.iter().map(|s| s.r).collect(),
            y: rep.per_radius.iter().map(|s| s.ratio).collect(),
            err: rep.per_radius.iter().map(|s| s.ci).collect(),
        }],
    });
    r.records = serde_json::json!({ "summary": rep.to_json(), "per_radius": rep.per_radius, "decreasing_decades": rep.decreasing_decades });
    Ok(())
}

fn run_extend(cfg: &ExperimentConfig, dom: &ImplicitDomain, r: &mut ExperimentReport) -> Result<()> {
    let mut records = Vec::new();
    let s_grad = cfg.s[0];
    for f in &cfg.functions {
        let g = sample(dom, f, cfg.h)?;
        let ef = extend_e(&g, &matched_cover(&g)?)?;

        let mismatched = (0..g.len()).filter(|&k| ef.eval(&g.node_point(k)).to_bits() != g.node_value(k).to_bits()).count();
        let obs = if mismatched == 0 { "exact" } else { "inexact" };
        r.checks.push(Check::new(format!("{f}/restriction"), "exact", obs, -(mismatched as f64)));

        let vals = g.values();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let slack = exterior_probes(&ef, MAX_PRINCIPLE_PROBES, cfg.seed)
            .iter()
            .map(|x| {
                let v = ef.eval(x);
                (v - lo).min(hi - v)
            })
            .fold(f64::INFINITY, f64::min);
        let tol = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        let obs = if slack >= -tol { "holds" } else { "violated" };
        r.checks.push(Check::new(format!("{f}/max-principle"), "holds", obs, slack + tol));

        for &p in &cfg.p {
            let sweep = fractional_sweep(&ef, p, &cfg.s)?;
            let mut t = Table::new(format!("extension-{f}-p{p}"), &["s", "lhs", "lhs_err", "rhs", "rhs_err", "ratio"]);
            for c in &sweep {
                t.push(vec![c.s, c.lhs, c.lhs_err, c.rhs, c.rhs_err, c.ratio.unwrap_or(f64::NAN)]);
            }
            r.tables.push(t);
            let ratios: Vec<f64> = sweep.iter().filter_map(|c| c.ratio).collect();
            let spread = if ratios.len() == sweep.len() && !ratios.is_empty() {
                ratios.iter().copied().fold(0.0, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min)
            } else {
                f64::INFINITY
            };
            let obs = if spread < 2.0 { "bounded" } else { "spread" };
            r.checks.push(Check::new(format!("{f}/p={p}/extension"), "bounded", obs, 2.0 - spread));
            r.plots.push(Plot {
                name: format!("extension-{f}-p{p}"),
                title: format!("[Ef]^p / [f]^p on {}", dom.name()),
                x_label: "s".into(),
                y_label: "ratio".into(),
                log_x: false,
                series: vec![Series {
                    label: f.clone(),
                    x: sweep.iter().map(|c| c.s).collect(),
                    y: sweep.iter().map(|c| c.ratio.unwrap_or(f64::NAN)).collect(),
                    err: sweep
                        .iter()
                        .map(|c| if c.rhs > 0.0 { c.lhs_err / c.rhs + c.lhs * c.rhs_err / (c.rhs * c.rhs) } else { 0.0 })
                        .collect(),
                }],
            });

            let mut grads = Vec::new();
            for hh in [0.5 * cfg.h, 0.25 * cfg.h] {
                let gf = sample(dom, f, hh)?;
                let e1 = extend_e(&gf, &matched_cover(&gf)?)?;
                let e2 = extend_e2(&gf, e1.cover(), &|x| e1.eval(x), s_grad)?;
                grads.push((hh, gradient_bound_check(&e2, p)?));
            }
            let (a, b) = (grads[0].1.ratio, grads[1].1.ratio);
            let (obs, margin) = match (a, b) {
                (Some(a), Some(b)) => {
                    let rel = (a - b).abs() / a.abs().max(b.abs());
                    (if rel <= GRADIENT_TOLERANCE { "stable" } else { "unstable" }, GRADIENT_TOLERANCE - rel)
                }
                _ => ("undefined", f64::NAN),
            };
            r.checks.push(Check::new(format!("{f}/p={p}/gradient"), "stable", obs, margin));
            records.push(serde_json::json!({ "function": f, "p": p, "fractional": sweep, "gradient_s": s_grad, "gradient": grads }));
        }
    }
    r.records = serde_json::json!({ "extension": records });
    Ok(())
}

fn run_content(cfg: &ExperimentConfig, dom: &ImplicitDomain, r: &mut ExperimentReport) -> Result<()> {
    let deltas = cfg.deltas.clone().unwrap_or_else(|| vec![0.1, 0.05, 0.025, 0.0125]);
    let mut trends = Vec::new();
    let mut plot = Plot {
        name: "content".into(),
        title: format!("Boundary content of {}", dom.name()),
        x_label: "delta".into(),
        y_label: "log10 content".into(),
        log_x: true,
        series: Vec::new(),
    };
    for &p in &cfg.p {
        for &s in &cfg.s {
            if s * p <= 1.0 {
                continue;
            }
            let tr = boundary_hypothesis_check(dom, s, p, &deltas)?;
            let mut t = Table::new(format!("content-s{s}-p{p}"), &["delta", "value", "cover_count"]);
            for e in &tr.estimates {
                t.push(vec![e.delta, e.value, e.cover_count as f64]);
            }
            r.tables.push(t);
            let obs = if tr.consistent_with_zero { "vanishing" } else { "not-vanishing" };
            let margin = tr.fitted_exponent - 0.5 * tr.expected_exponent;
            r.checks.push(Check::new(format!("s={s}/p={p}/content"), "vanishing", obs, margin));
            plot.series.push(Series {
                label: format!("s={s}, p={p}"),
                x: tr.estimates.iter().map(|e| e.delta).collect(),
                y: tr.estimates.iter().map(|e| e.value.log10()).collect(),
                err: vec![0.0; tr.estimates.len()],
            });
            trends.push(tr);
        }
    }
    r.plots.push(plot);
    r.records = serde_json::json!({ "trends": trends });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    #[test]
    fn interval_sweep_matches_closed_form() {
        let c = cfg(r#"{"kind": "bbm-sweep", "domain": "interval", "h": 0.00390625, "s": [0.5, 0.75, 0.9]}"#);
        let r = run(&c).unwrap();
        assert!(r.all_match(), "{:?}", r.checks);
        let csv = r.tables[0].to_csv();
        assert!(csv.starts_with("s,scaled,err,reference,ratio,closed_form\n"));
    }

    #[test]
    fn same_seed_gives_identical_files() {
        let c = cfg(r#"{"kind": "ahlfors", "domain": "square", "radii": [0.5, 0.1], "x_samples": 16, "budget": 512, "seed": 3}"#);
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.tables[0].to_csv(), b.tables[0].to_csv());
    }

    #[test]
    fn poincare_report_on_the_interval() {
        let c = cfg(r#"{"kind": "poincare", "domain": "interval", "h": 0.00390625, "s": [0.75]}"#);
        let r = run(&c).unwrap();
        assert_eq!(r.checks.len(), 1);
        assert!(r.all_match());
    }

    #[test]
    fn content_skips_small_sp() {
        let c = cfg(r#"{"kind": "content-trend", "domain": "disk", "s": [0.4, 0.9], "p": [2]}"#);
        let r = run(&c).unwrap();
        assert_eq!(r.checks.len(), 1);
        assert_eq!(r.checks[0].name, "s=0.9/p=2/content");
    }
}
