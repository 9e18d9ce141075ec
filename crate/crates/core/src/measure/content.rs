use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::geometry::{boundary_points_fine, lerp, ImplicitDomain, Point};
use crate::{Error, Result};

/// Finest dyadic level used for covers; `delta` must allow cubes of side
/// `2^-MAX_LEVEL`.
pub const MAX_LEVEL: u32 = 12;

/// A set given through samples: `points(spacing)` must return points of the
/// set such that every point of the set lies within about `spacing` of one.
pub trait SetSampler: Sync {
    fn dim(&self) -> usize;
    fn points(&self, spacing: f64) -> Vec<Point>;
}

/// A fixed finite set.
pub struct FinitePoints {
    pub dim: usize,
    pub points: Vec<Point>,
}

impl SetSampler for FinitePoints {
    fn dim(&self) -> usize {
        self.dim
    }

    fn points(&self, _spacing: f64) -> Vec<Point> {
        self.points.clone()
    }
}

/// The closed segment `[a, b]` in the plane.
pub struct SegmentSampler {
    pub a: Point,
    pub b: Point,
}

impl SetSampler for SegmentSampler {
    fn dim(&self) -> usize {
        2
    }

    fn points(&self, spacing: f64) -> Vec<Point> {
        let m = (crate::geometry::dist(&self.a, &self.b) / spacing).ceil().max(1.0) as usize;
        (0..=m).map(|k| lerp(&self.a, &self.b, k as f64 / m as f64)).collect()
    }
}

pub struct CircleSampler {
    pub center: Point,
    pub radius: f64,
}

impl SetSampler for CircleSampler {
    fn dim(&self) -> usize {
        2
    }

    fn points(&self, spacing: f64) -> Vec<Point> {
        let m = (std::f64::consts::TAU * self.radius / spacing).ceil().max(3.0) as usize;
        (0..m)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / m as f64;
                [self.center[0] + self.radius * t.cos(), self.center[1] + self.radius * t.sin(), 0.0]
            })
            .collect()
    }
}

/// The boundary of a domain, located by bisection between inside and
/// outside probes plus points along the cuts.
pub struct BoundarySampler<'a>(pub &'a ImplicitDomain);

impl SetSampler for BoundarySampler<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn points(&self, spacing: f64) -> Vec<Point> {
        boundary_points_fine(self.0, spacing)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ContentEstimate {
    pub lambda: f64,
    pub delta: f64,
    /// Side of the dyadic cubes used.
    pub side: f64,
    pub value: f64,
    pub cover_count: usize,
}

/// Dyadic estimate of the `lambda`-dimensional Hausdorff `delta`-content:
/// the set is covered by the cubes of side `2^-k`, `k` the smallest level with
/// cube diameter at most `delta`, that contain a sample, and each cube
/// contributes its diameter to the power `lambda`.
pub fn hausdorff_content(sampler: &dyn SetSampler, lambda: f64, delta: f64) -> Result<ContentEstimate> {
    let n = sampler.dim();
    if !(lambda >= 0.0) {
        return Err(Error::Parameter(format!("content dimension must be non-negative, got {lambda}")));
    }
    let rn = (n as f64).sqrt();
    let k = (rn / delta).log2().ceil().max(0.0);
    if !(delta > 0.0) || k > MAX_LEVEL as f64 {
        return Err(Error::Parameter(format!(
            "delta = {delta} is below the finest dyadic scale 2^-{MAX_LEVEL} sqrt({n})"
        )));
    }
    let side = (-k).exp2();
    let mut cells = HashSet::new();
    for p in sampler.points(0.25 * side) {
        let mut c = [0i64; 3];
        for i in 0..n {
            c[i] = (p[i] / side).floor() as i64;
        }
        cells.insert(c);
    }
    let diam = side * rn;
    Ok(ContentEstimate {
        lambda,
        delta,
        side,
        value: cells.len() as f64 * diam.powf(lambda),
        cover_count: cells.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ContentTrend {
    pub domain: String,
    pub s: f64,
    pub p: f64,
    pub lambda: f64,
    /// Exponent `lambda - (n - 1)` expected for a boundary of dimension `n - 1`.
    pub expected_exponent: f64,
    /// Least-squares slope of `log value` against `log delta`.
    pub fitted_exponent: f64,
    pub estimates: Vec<ContentEstimate>,
    pub consistent_with_zero: bool,
}

impl ContentTrend {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,value\n");
        for e in &self.estimates {
            s.push_str(&format!("{:e},{:e}\n", e.delta, e.value));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Content of the boundary at `lambda = n - 1 + (sp - 1)/p` over `deltas`.
/// Consistent with zero iff the values strictly decrease as `delta` shrinks
/// and the fitted exponent reaches half the expected one.
pub fn boundary_hypothesis_check(domain: &ImplicitDomain, s: f64, p: f64, deltas: &[f64]) -> Result<ContentTrend> {
    if !(s > 0.0 && s <= 1.0 && p >= 1.0) {
        return Err(Error::Parameter(format!("need 0 < s <= 1 <= p, got s = {s}, p = {p}")));
    }
    if s * p <= 1.0 {
        return Err(Error::Parameter(format!("the boundary hypothesis needs sp > 1, got sp = {}", s * p)));
    }
    if deltas.len() < 2 {
        return Err(Error::Parameter("need at least two scales".into()));
    }
    let n = domain.dim() as f64;
    let lambda = n - 1.0 + (s * p - 1.0) / p;
    let mut ds = deltas.to_vec();
    ds.sort_by(|a, b| b.total_cmp(a));
    let sampler = BoundarySampler(domain);
    let estimates: Vec<ContentEstimate> = ds
        .iter()
        .map(|&d| hausdorff_content(&sampler, lambda, d))
        .collect::<Result<_>>()?;
    let expected = lambda - (n - 1.0);
    let fitted = slope(&estimates);
    let decreasing = estimates.windows(2).all(|w| w[1].value < w[0].value);
    Ok(ContentTrend {
        domain: domain.name().to_string(),
        s,
        p,
        lambda,
        expected_exponent: expected,
        fitted_exponent: fitted,
        consistent_with_zero: decreasing && fitted >= 0.5 * expected,
        estimates,
    })
}

fn slope(e: &[ContentEstimate]) -> f64 {
    let xs: Vec<f64> = e.iter().map(|e| e.side.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|e| e.value.max(f64::MIN_POSITIVE).ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}
