//! Experiment reports and their file outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::Result;

/// One numeric surrogate decision.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: String,
    /// Signed distance from the decision threshold, positive on the side of
    /// `observed`.
    pub margin: f64,
    pub matches: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, expected: &str, observed: &str, margin: f64) -> Self {
        Check {
            name: name.into(),
            expected: expected.to_string(),
            observed: observed.to_string(),
            margin,
            matches: expected == observed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Half-width of the error band at each point.
    pub err: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub version: String,
    pub records: serde_json::Value,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub tables: Vec<Table>,
    #[serde(skip)]
    pub plots: Vec<Plot>,
    /// Seconds; written to `timing.json` so `report.json` stays reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

impl ExperimentReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        ExperimentReport {
            config: config.clone(),
            version: crate::VERSION.to_string(),
            records: serde_json::Value::Null,
            checks: Vec::new(),
            tables: Vec::new(),
            plots: Vec::new(),
            wall_time: 0.0,
        }
    }

    /// Replace expectations named in the config's `expect` map.
    pub fn apply_expectations(&mut self) {
        for c in &mut self.checks {
            if let Some(e) = self.config.expect.get(&c.name) {
                c.expected = e.clone();
                c.matches = c.expected == c.observed;
            }
        }
    }

    pub fn all_match(&self) -> bool {
        self.checks.iter().all(|c| c.matches)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// `report.json`, every table, every plot and `timing.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let p = dir.join("report.json");
        std::fs::write(&p, self.to_json()?)?;
        out.push(p);
        out.extend(emit_csv(self, dir)?);
        out.extend(emit_svg(self, dir)?);
        let p = dir.join("timing.json");
        std::fs::write(&p, serde_json::to_string_pretty(&serde_json::json!({ "wall_time_s": self.wall_time }))?)?;
        out.push(p);
        Ok(out)
    }
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

pub fn emit_csv(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for t in &report.tables {
        let p = dir.join(format!("{}.csv", file_stem(&t.name)));
        std::fs::write(&p, t.to_csv())?;
        out.push(p);
    }
    Ok(out)
}

pub fn emit_svg(report: &ExperimentReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for plot in &report.plots {
        let p = dir.join(format!("{}.svg", file_stem(&plot.name)));
        std::fs::write(&p, render_svg(plot))?;
        out.push(p);
    }
    Ok(out)
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + lo.abs()) {
        let pad = 0.5 * (1.0 + lo.abs()) * 1e-2;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Line chart with one shaded `y +- err` band per series.
pub fn render_svg(plot: &Plot) -> String {
    let tx = |x: f64| if plot.log_x { x.log10() } else { x };
    let (x0, x1) = range(plot.series.iter().flat_map(|s| s.x.iter().map(|&x| tx(x))));
    let (y0, y1) = range(plot.series.iter().flat_map(|s| {
        s.y.iter().zip(&s.err).flat_map(|(y, e)| [y - e, y + e])
    }));
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |x: f64| LEFT + (tx(x) - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(&plot.title));
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = x0 + t * (x1 - x0);
        let gx = LEFT + t * pw;
        let label = if plot.log_x { format!("1e{xv:.2}") } else { format!("{xv:.3}") };
        let _ = writeln!(s, r#"<line x1="{gx:.1}" y1="{:.1}" x2="{gx:.1}" y2="{:.1}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<text x="{gx:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#, TOP + ph + 18.0);
        let yv = y0 + t * (y1 - y0);
        let gy = TOP + (1.0 - t) * ph;
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{gy:.1}" x2="{LEFT}" y2="{gy:.1}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{yv:.4e}</text>"#, LEFT - 8.0, gy + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 15.0, escape(&plot.x_label));
    let _ = writeln!(s, r#"<text x="15" y="{:.1}" text-anchor="middle" transform="rotate(-90 15 {:.1})">{}</text>"#, TOP + ph / 2.0, TOP + ph / 2.0, escape(&plot.y_label));

    for (i, ser) in plot.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64, f64)> = ser
            .x
            .iter()
            .zip(&ser.y)
            .zip(&ser.err)
            .filter(|((x, y), e)| tx(**x).is_finite() && y.is_finite() && e.is_finite())
            .map(|((x, y), e)| (*x, *y, *e))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let mut band = String::new();
        for &(x, y, e) in &pts {
            let _ = write!(band, "{:.2},{:.2} ", px(x), py(y + e));
        }
        for &(x, y, e) in pts.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", px(x), py(y - e));
        }
        let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band.trim_end());
        let line: Vec<String> = pts.iter().map(|&(x, y, _)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        for &(x, y, _) in &pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(x), py(y));
        }
        let ly = TOP + 12.0 + 18.0 * i as f64;
        let lx = W - RIGHT + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::Kind;

    fn plot() -> Plot {
        Plot {
            name: "a/b".into(),
            title: "t <1>".into(),
            x_label: "s".into(),
            y_label: "v".into(),
            log_x: false,
            series: vec![Series { label: "f".into(), x: vec![0.8, 0.9], y: vec![1.0, 2.0], err: vec![0.1, 0.2] }],
        }
    }

    #[test]
    fn svg_has_band_line_and_escaped_text() {
        let s = render_svg(&plot());
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert_eq!(s.matches("<polygon").count(), 1);
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains("t &lt;1&gt;"));
    }

    #[test]
    fn expectations_override_defaults() {
        let mut cfg = ExperimentConfig::new(Kind::Ahlfors, "disk");
        cfg.expect.insert("disk/ahlfors".into(), "fail".into());
        let mut r = ExperimentReport::new(&cfg);
        r.checks.push(Check::new("disk/ahlfors", "pass", "pass", 0.7));
        assert!(r.all_match());
        r.apply_expectations();
        assert!(!r.all_match());
    }

    #[test]
    fn files_are_written() {
        let dir = std::env::temp_dir().join(format!("fracsob-report-{}", std::process::id()));
        let mut r = ExperimentReport::new(&ExperimentConfig::new(Kind::Ahlfors, "disk"));
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec![1.0, 0.5]);
        r.tables.push(t);
        r.plots.push(plot());
        let files = r.write(&dir).unwrap();
        let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["report.json", "x.csv", "a_b.svg", "timing.json"]);
        assert_eq!(std::fs::read_to_string(dir.join("x.csv")).unwrap(), "a,b\n1e0,5e-1\n");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
