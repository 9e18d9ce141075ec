//! Restriction of a sampled function to a line.

use serde::Serialize;

use super::grid::GridFunction;
use crate::geometry::{add, scale, ImplicitDomain, Point};
use crate::{Error, Result};

/// A maximal open interval of the line inside the domain, resampled on a
/// uniform cell-centred grid: sample `k` sits at parameter
/// `t0 + step (k + 1/2)`.
#[derive(Clone, Debug, Serialize)]
pub struct LineSegment {
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl LineSegment {
    pub fn len(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn param(&self, k: usize) -> f64 {
        self.t0 + self.step * (k as f64 + 0.5)
    }
}

fn at(offset: &Point, dir: &Point, t: f64) -> Point {
    add(offset, &scale(dir, t))
}

/// Restrict `f` to `{offset + t dir}`: the line is split into maximal
/// segments inside the domain (membership changes and cut crossings), and
/// each segment is resampled at spacing at most `h` by interpolation.
/// An empty vector when the line misses the domain.
pub fn line_restrict(f: &GridFunction, dir: &Point, offset: &Point) -> Result<Vec<LineSegment>> {
    let h = f.h();
    let dim = f.dim();
    let mut out = Vec::new();
    for (a, b) in line_intervals(f.domain(), h, dir, offset)? {
        let n = ((b - a) / h).ceil().max(1.0) as usize;
        let step = (b - a) / n as f64;
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            let x = at(offset, dir, a + step * (k as f64 + 0.5));
            match f.interpolate(&x) {
                Some(v) => values.push(v),
                None => {
                    return Err(Error::Resolution(format!(
                        "no grid node near {:?} on the restricted line",
                        &x[..dim]
                    )))
                }
            }
        }
        out.push(LineSegment { t0: a, t1: b, step, values });
    }
    Ok(out)
}

/// Parameter intervals of the maximal segments of `{offset + t dir}` inside
/// the domain, found by marching at `h/4` and bisecting.
pub(crate) fn line_intervals(dom: &ImplicitDomain, h: f64, dir: &Point, offset: &Point) -> Result<Vec<(f64, f64)>> {
    let dim = dom.dim();
    let len = crate::geometry::norm(dir);
    if (len - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!("direction must be a unit vector, |d| = {len}")));
    }
    // Parameter range where the line meets the bounding box.
    let bb = dom.bbox();
    let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..dim {
        if dir[i].abs() < 1e-15 {
            if offset[i] < bb.lo[i] || offset[i] > bb.hi[i] {
                return Ok(Vec::new());
            }
            continue;
        }
        let a = (bb.lo[i] - offset[i]) / dir[i];
        let b = (bb.hi[i] - offset[i]) / dir[i];
        t_lo = t_lo.max(a.min(b));
        t_hi = t_hi.min(a.max(b));
    }
    if !(t_hi > t_lo) {
        return Ok(Vec::new());
    }
    let march = 0.25 * h;
    let steps = ((t_hi - t_lo) / march).ceil().max(1.0) as usize;
    let dt = (t_hi - t_lo) / steps as f64;
    let inside = |t: f64| dom.contains(&at(offset, dir, t));
    let mut intervals = Vec::new();
    let mut start: Option<f64> = if inside(t_lo) { Some(t_lo) } else { None };
    let mut prev_t = t_lo;
    let mut prev_in = start.is_some();
    for k in 1..=steps {
        let t = t_lo + dt * k as f64;
        let now = inside(t);
        let blocked = dom.segment_blocked(&at(offset, dir, prev_t), &at(offset, dir, t));
        if prev_in && blocked {
            let c = bisect_cut(dom, offset, dir, prev_t, t);
            intervals.push((start.unwrap(), c));
            start = if now { Some(c) } else { None };
        } else if now != prev_in {
            let c = bisect_member(dom, offset, dir, prev_t, t, prev_in);
            if prev_in {
                intervals.push((start.unwrap(), c));
                start = None;
            } else {
                start = Some(c);
            }
        }
        prev_t = t;
        prev_in = now;
    }
    if let Some(s0) = start {
        intervals.push((s0, t_hi));
    }
    intervals.retain(|(a, b)| b - a > 1e-12);
    Ok(intervals)
}

fn bisect_member(dom: &ImplicitDomain, o: &Point, d: &Point, mut a: f64, mut b: f64, a_in: bool) -> f64 {
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if dom.contains(&at(o, d, m)) == a_in {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn bisect_cut(dom: &ImplicitDomain, o: &Point, d: &Point, mut a: f64, mut b: f64) -> f64 {
    let pa = at(o, d, a);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if dom.segment_blocked(&pa, &at(o, d, m)) {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::catalog_domain;
    use crate::quadrature::grid::sample;

    #[test]
    fn chord_through_disk_centre() {
        let g = sample(&catalog_domain("disk").unwrap(), "coord:1", 1.0 / 32.0).unwrap();
        let segs = line_restrict(&g, &[1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        assert_eq!(segs.len(), 1);
        assert!((segs[0].len() - 2.0).abs() < 1e-9);
        assert!(segs[0].step <= g.h());
        // x_1 is linear, so interpolation reproduces it.
        for (k, v) in segs[0].values.iter().enumerate() {
            assert!((v - segs[0].param(k)).abs() < 1e-9);
        }
    }

    #[test]
    fn slit_splits_a_crossing_line() {
        let g = sample(&catalog_domain("slit-disk").unwrap(), "const", 1.0 / 32.0).unwrap();
        let segs = line_restrict(&g, &[0.0, 1.0, 0.0], &[0.5, 0.0, 0.0]).unwrap();
        assert_eq!(segs.len(), 2);
        assert!(segs[0].t1.abs() < 1e-9 && segs[1].t0.abs() < 1e-9);
        // Along the slit itself only the part with x_1 < 0 remains.
        let segs = line_restrict(&g, &[1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        assert_eq!(segs.len(), 1);
        assert!((segs[0].t0 + 1.0).abs() < 1e-9 && segs[0].t1.abs() < 1e-9);
    }

    #[test]
    fn line_outside_bbox_is_empty() {
        let g = sample(&catalog_domain("disk").unwrap(), "const", 0.1).unwrap();
        assert!(line_restrict(&g, &[1.0, 0.0, 0.0], &[0.0, 3.0, 0.0]).unwrap().is_empty());
        assert!(line_restrict(&g, &[2.0, 0.0, 0.0], &[0.0; 3]).is_err());
    }
}
