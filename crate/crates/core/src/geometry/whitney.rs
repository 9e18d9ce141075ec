//! Dyadic Whitney decomposition of the complement of a domain.
//!
//! A dyadic cube is accepted when the distance from its centre to the
//! complement of the decomposed open set is at least `ratio * diam`; cubes
//! that are too close are split, and cubes still too close at `max_level`
//! are returned as the unresolved boundary layer.

use std::collections::HashMap;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::domain::ImplicitDomain;
use super::{dist, Point};
use crate::{Error, Result};

/// The ambient ball `B(center, radius)` in which extensions are built.
/// `unit` is the scale that maps the domain into `B(center, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmbientBall {
    pub center: Point,
    pub radius: f64,
    pub unit: f64,
}

impl AmbientBall {
    /// `B(c, 4u)` with `c` the bounding-box centre and `u >= 1` chosen so
    /// the closure of the domain lies in `B(c, u)`.
    pub fn for_domain(d: &ImplicitDomain) -> Self {
        let bb = d.bbox();
        let unit = (0.5 * bb.diag()).max(1.0);
        AmbientBall {
            center: bb.center(),
            radius: 4.0 * unit,
            unit,
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        dist(x, &self.center) < self.radius
    }

    fn meets_box(&self, lo: &Point, side: f64, dim: usize) -> bool {
        let mut s = 0.0;
        for i in 0..dim {
            let d = (lo[i] - self.center[i]).max(self.center[i] - lo[i] - side).max(0.0);
            s += d * d;
        }
        s.sqrt() <= self.radius
    }
}

/// Lattice of dyadic cubes: level `k` has side `side0 / 2^k` and cube
/// `index` occupies `origin + side * [index, index + 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicFrame {
    pub origin: Point,
    pub side0: f64,
    pub dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: u32,
    pub index: [i64; 3],
}

impl DyadicCube {
    pub fn children(&self, dim: usize) -> Vec<DyadicCube> {
        let mut out = Vec::with_capacity(1 << dim);
        for m in 0..(1usize << dim) {
            let mut index = [0i64; 3];
            for (i, v) in index.iter_mut().enumerate().take(dim) {
                *v = 2 * self.index[i] + ((m >> i) & 1) as i64;
            }
            out.push(DyadicCube { level: self.level + 1, index });
        }
        out
    }

    /// Exact interior-disjointness test on the integer lattice.
    pub fn interiors_disjoint(&self, other: &DyadicCube, dim: usize) -> bool {
        let l = self.level.max(other.level);
        let (sa, sb) = (l - self.level, l - other.level);
        (0..dim).any(|i| {
            let (a0, a1) = (self.index[i] << sa, (self.index[i] + 1) << sa);
            let (b0, b1) = (other.index[i] << sb, (other.index[i] + 1) << sb);
            a1 <= b0 || b1 <= a0
        })
    }
}

impl DyadicFrame {
    pub fn side(&self, level: u32) -> f64 {
        self.side0 * 0.5f64.powi(level as i32)
    }

    pub fn lo(&self, q: &DyadicCube) -> Point {
        let s = self.side(q.level);
        let mut p = [0.0; 3];
        for (i, v) in p.iter_mut().enumerate().take(self.dim) {
            *v = self.origin[i] + s * q.index[i] as f64;
        }
        p
    }

    pub fn center(&self, q: &DyadicCube) -> Point {
        let s = self.side(q.level);
        let mut p = [0.0; 3];
        for (i, v) in p.iter_mut().enumerate().take(self.dim) {
            *v = self.origin[i] + s * (q.index[i] as f64 + 0.5);
        }
        p
    }

    /// `side * sqrt(n)`.
    pub fn diam(&self, q: &DyadicCube) -> f64 {
        self.side(q.level) * (self.dim as f64).sqrt()
    }

    pub fn cube(&self, q: &DyadicCube) -> AxisCube {
        AxisCube {
            center: self.center(q),
            diam: self.diam(q),
            dim: self.dim,
        }
    }

    /// Whether `x` lies in the closed dilate `factor * Q`.
    pub fn dilate_contains(&self, q: &DyadicCube, x: &Point, factor: f64) -> bool {
        let c = self.center(q);
        let half = 0.5 * factor * self.side(q.level);
        (0..self.dim).all(|i| (x[i] - c[i]).abs() <= half)
    }

    pub fn dist_to_cube(&self, q: &DyadicCube, x: &Point) -> f64 {
        let lo = self.lo(q);
        let s = self.side(q.level);
        let mut acc = 0.0;
        for i in 0..self.dim {
            let d = (lo[i] - x[i]).max(x[i] - lo[i] - s).max(0.0);
            acc += d * d;
        }
        acc.sqrt()
    }
}

/// A general axis-aligned cube, stored by centre and diameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisCube {
    pub center: Point,
    pub diam: f64,
    pub dim: usize,
}

impl AxisCube {
    pub fn side(&self) -> f64 {
        self.diam / (self.dim as f64).sqrt()
    }

    pub fn contains(&self, x: &Point) -> bool {
        let half = 0.5 * self.side();
        (0..self.dim).all(|i| (x[i] - self.center[i]).abs() <= half)
    }
}

/// Cube with the same centre and `diam(result) = diam(q)^(1/s)`.
pub fn stretched_cube(q: &AxisCube, s: f64) -> Result<AxisCube> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Parameter(format!("stretch exponent s = {s} not in (0,1)")));
    }
    Ok(AxisCube {
        center: q.center,
        diam: q.diam.powf(1.0 / s),
        dim: q.dim,
    })
}

/// Acceptance rule: a cube is kept when the distance from its centre to the
/// complement is at least `ratio * diam`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyRule {
    pub ratio: f64,
}

impl WhitneyRule {
    /// Used for extension covers: keeps 5Q at least 3.5 diameters from the
    /// domain and the reflected centre within 12.5 diameters.
    pub const EXTENSION: WhitneyRule = WhitneyRule { ratio: 6.0 };
    /// Stein-type constants: accepted cubes satisfy `diam <= dist(Q) < 3 diam`.
    pub const STEIN: WhitneyRule = WhitneyRule { ratio: 1.5 };
}

/// Result of the sampled check `2 diam Q < dist(x, complement) < 8 diam Q` on 5Q.
#[derive(Clone, Debug, Serialize)]
pub struct Property3Report {
    pub cubes_checked: usize,
    pub samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub lower_violations: usize,
    pub upper_violations: usize,
    pub worst_cube: Option<DyadicCube>,
    pub pass: bool,
}

#[derive(Debug)]
pub struct WhitneyCover {
    pub frame: DyadicFrame,
    pub root: AmbientBall,
    pub rule: WhitneyRule,
    pub max_level: u32,
    pub cubes: Vec<DyadicCube>,
    /// Per-cube reflected centre `x_Q*`; empty until [`reflect_centers`] runs.
    pub reflected_centers: Vec<Point>,
    pub unresolved: Vec<DyadicCube>,
    pub unresolved_volume: f64,
    lookup: HashMap<DyadicCube, usize>,
    level_range: (u32, u32),
    probes: Vec<Point>,
    overlap: OnceLock<usize>,
}

impl Clone for WhitneyCover {
    fn clone(&self) -> Self {
        WhitneyCover {
            frame: self.frame,
            root: self.root,
            rule: self.rule,
            max_level: self.max_level,
            cubes: self.cubes.clone(),
            reflected_centers: self.reflected_centers.clone(),
            unresolved: self.unresolved.clone(),
            unresolved_volume: self.unresolved_volume,
            lookup: self.lookup.clone(),
            level_range: self.level_range,
            probes: self.probes.clone(),
            overlap: OnceLock::new(),
        }
    }
}

enum Verdict {
    Accept,
    Split,
    Drop,
    Unresolved,
}

/// Dyadic Whitney decomposition of a general open set `D`.
///
/// `signed_dist(x)` is `dist(x, R^n \ D)` for `x` in `D` and `-dist(x, D)`
/// otherwise; `relevant(lo, side)` prunes cubes outside the region of
/// interest.
pub fn decompose_open_set(
    frame: DyadicFrame,
    rule: WhitneyRule,
    max_level: u32,
    signed_dist: impl Fn(&Point) -> f64 + Sync,
    relevant: impl Fn(&Point, f64) -> bool + Sync,
) -> (Vec<DyadicCube>, Vec<DyadicCube>) {
    let dim = frame.dim;
    let mut accepted = Vec::new();
    let mut unresolved = Vec::new();
    let mut current = vec![DyadicCube { level: 0, index: [0; 3] }];
    while !current.is_empty() {
        let verdicts: Vec<Verdict> = current
            .par_iter()
            .map(|q| {
                let side = frame.side(q.level);
                if !relevant(&frame.lo(q), side) {
                    return Verdict::Drop;
                }
                let d = frame.diam(q);
                let sd = signed_dist(&frame.center(q));
                if sd >= rule.ratio * d * (1.0 - 1e-12) {
                    Verdict::Accept
                } else if sd <= -0.5 * d {
                    Verdict::Drop
                } else if q.level >= max_level {
                    Verdict::Unresolved
                } else {
                    Verdict::Split
                }
            })
            .collect();
        let mut next = Vec::new();
        for (q, v) in current.iter().zip(verdicts) {
            match v {
                Verdict::Accept => accepted.push(*q),
                Verdict::Unresolved => unresolved.push(*q),
                Verdict::Split => next.extend(q.children(dim)),
                Verdict::Drop => {}
            }
        }
        current = next;
    }
    (accepted, unresolved)
}

fn signed_dist_complement(domain: &ImplicitDomain, x: &Point) -> f64 {
    if domain.contains(x) {
        -domain.dist_to_boundary(x)
    } else {
        domain.dist_to_closure(x)
    }
}

/// Whitney cover of `R^n \ closure(domain)`, restricted to cubes meeting the
/// ambient ball `root`, using [`WhitneyRule::EXTENSION`].
pub fn whitney_cover(
    domain: &ImplicitDomain,
    root: &AmbientBall,
    max_level: u32,
) -> Result<WhitneyCover> {
    whitney_cover_with(domain, root, max_level, WhitneyRule::EXTENSION)
}

pub fn whitney_cover_with(
    domain: &ImplicitDomain,
    root: &AmbientBall,
    max_level: u32,
    rule: WhitneyRule,
) -> Result<WhitneyCover> {
    let dim = domain.dim();
    let bb = domain.bbox();
    for m in 0..(1usize << dim) {
        let mut corner = [0.0; 3];
        for (i, v) in corner.iter_mut().enumerate().take(dim) {
            *v = if (m >> i) & 1 == 0 { bb.lo[i] } else { bb.hi[i] };
        }
        if dist(&corner, &root.center) >= root.radius {
            return Err(Error::DomainConfig(format!(
                "ambient ball of radius {} does not contain the bounding box of {}",
                root.radius,
                domain.name()
            )));
        }
    }
    let mut origin = [0.0; 3];
    for (i, v) in origin.iter_mut().enumerate().take(dim) {
        *v = root.center[i] - root.radius;
    }
    let frame = DyadicFrame {
        origin,
        side0: 2.0 * root.radius,
        dim,
    };
    let (cubes, unresolved) = decompose_open_set(
        frame,
        rule,
        max_level,
        |x| signed_dist_complement(domain, x),
        |lo, side| root.meets_box(lo, side, dim),
    );
    if cubes.is_empty() && unresolved.is_empty() {
        return Err(Error::Degenerate(format!(
            "complement of {} inside the ambient ball is empty",
            domain.name()
        )));
    }
    let unresolved_volume = unresolved
        .iter()
        .map(|q| frame.side(q.level).powi(dim as i32))
        .sum();
    let mut cover =
        WhitneyCover::assemble(frame, *root, rule, max_level, cubes, unresolved, unresolved_volume);
    cover.probes = overlap_probes(domain, root, &frame);
    Ok(cover)
}

fn overlap_probes(domain: &ImplicitDomain, root: &AmbientBall, frame: &DyadicFrame) -> Vec<Point> {
    use rand::Rng;
    let dim = frame.dim;
    let level = [0, 10, 7, 5][dim];
    let step = frame.side(level);
    let per_axis = (frame.side0 / step) as usize + 1;
    let mut cand = Vec::new();
    for m in 0..per_axis.pow(dim as u32) {
        let mut x = [0.0; 3];
        let mut rem = m;
        for (i, v) in x.iter_mut().enumerate().take(dim) {
            *v = frame.origin[i] + step * (rem % per_axis) as f64;
            rem /= per_axis;
        }
        cand.push((x, 0.25));
    }
    let mut rng = crate::rng::stream(0x5eed, crate::rng::stream_id(1, 0, 0));
    for _ in 0..4096 {
        let mut x = root.center;
        for v in x.iter_mut().take(dim) {
            *v += rng.gen_range(-root.radius..root.radius);
        }
        cand.push((x, 1.0 / 32.0));
    }
    let keep: Vec<bool> = cand
        .par_iter()
        .map(|(x, t)| root.contains(x) && domain.dist_to_boundary(x) >= t * root.unit)
        .collect();
    cand.into_iter().zip(keep).filter(|(_, k)| *k).map(|(c, _)| c.0).collect()
}

/// Fill in `x_Q*`: the nearest point of `closure(domain)` to the centre of Q.
pub fn reflect_centers(cover: &WhitneyCover, domain: &ImplicitDomain) -> Result<WhitneyCover> {
    let frame = cover.frame;
    let found: Vec<(Point, f64, f64)> = cover
        .cubes
        .par_iter()
        .map(|q| {
            let (_, p) = domain.nearest_closure_point(&frame.center(q));
            (p, frame.dist_to_cube(q, &p), frame.diam(q))
        })
        .collect();
    let mut centers = Vec::with_capacity(found.len());
    for (q, (p, d, diam)) in cover.cubes.iter().zip(found) {
        if !(d < 15.0 * diam) {
            return Err(Error::Resolution(format!(
                "no closure point within 15 diam of cube level {} index {:?} (best {d})",
                q.level, q.index
            )));
        }
        centers.push(p);
    }
    let mut out = cover.clone();
    out.reflected_centers = centers;
    Ok(out)
}

impl WhitneyCover {
    fn assemble(
        frame: DyadicFrame,
        root: AmbientBall,
        rule: WhitneyRule,
        max_level: u32,
        mut cubes: Vec<DyadicCube>,
        unresolved: Vec<DyadicCube>,
        unresolved_volume: f64,
    ) -> Self {
        cubes.sort();
        let lookup = cubes.iter().enumerate().map(|(i, q)| (*q, i)).collect();
        let lo = cubes.iter().map(|q| q.level).min().unwrap_or(0);
        let hi = cubes.iter().map(|q| q.level).max().unwrap_or(0);
        WhitneyCover {
            frame,
            root,
            rule,
            max_level,
            cubes,
            reflected_centers: Vec::new(),
            unresolved,
            unresolved_volume,
            lookup,
            level_range: (lo, hi),
            probes: Vec::new(),
            overlap: OnceLock::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.frame.dim
    }

    pub fn find(&self, q: &DyadicCube) -> Option<usize> {
        self.lookup.get(q).copied()
    }

    pub fn center(&self, i: usize) -> Point {
        self.frame.center(&self.cubes[i])
    }

    pub fn diam(&self, i: usize) -> f64 {
        self.frame.diam(&self.cubes[i])
    }

    pub fn level_range(&self) -> (u32, u32) {
        self.level_range
    }

    /// Indices of cubes whose closed dilate `factor * Q` contains `x`,
    /// in ascending cube order.
    pub fn dilate_members(&self, x: &Point, factor: f64, out: &mut Vec<usize>) {
        out.clear();
        if self.cubes.is_empty() {
            return;
        }
        let dim = self.frame.dim;
        let (lo, hi) = self.level_range;
        for level in lo..=hi {
            let side = self.frame.side(level);
            let mut ranges = [(0i64, 0i64); 3];
            for (i, r) in ranges.iter_mut().enumerate().take(dim) {
                let t = (x[i] - self.frame.origin[i]) / side - 0.5;
                let half = 0.5 * factor;
                *r = ((t - half).ceil() as i64, (t + half).floor() as i64);
            }
            let (r0, r1, r2) = (ranges[0], ranges[1], ranges[2]);
            for k in r2.0..=r2.1 {
                for j in r1.0..=r1.1 {
                    for i in r0.0..=r0.1 {
                        let q = DyadicCube { level, index: [i, j, k] };
                        if let Some(&id) = self.lookup.get(&q) {
                            if self.frame.dilate_contains(&q, x, factor) {
                                out.push(id);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
    }

    /// Whether `x` lies in some (closed) cube of the cover.
    pub fn is_covered(&self, x: &Point) -> bool {
        let mut v = Vec::new();
        self.dilate_members(x, 1.0, &mut v);
        !v.is_empty()
    }

    /// Number of cubes with `x` in `15Q`.
    pub fn overlap_count(&self, x: &Point) -> usize {
        let mut v = Vec::new();
        self.dilate_members(x, 15.0, &mut v);
        v.len()
    }

    /// Overlap bound M: the largest 15Q multiplicity over a fixed probe set
    /// (lattice vertices at least `unit/4` from the boundary and seeded random
    /// points at least `unit/32` from it). A point at distance t from the
    /// boundary only lies in 15R when `diam R > t/20`, so the probes never see
    /// the finest levels and M does not move with resolution.
    pub fn overlap_bound(&self) -> usize {
        *self.overlap.get_or_init(|| {
            self.probes
                .par_iter()
                .map(|x| self.overlap_count(x))
                .collect::<Vec<_>>()
                .into_iter()
                .max()
                .unwrap_or(0)
        })
    }

    /// Largest C with Q contained in C·R over pairs of touching cubes
    /// (the comparability constant of the Whitney lemma, measured).
    pub fn comparability_constant(&self) -> f64 {
        let frame = self.frame;
        let dim = frame.dim;
        let per_cube: Vec<f64> = (0..self.cubes.len())
            .into_par_iter()
            .map(|i| {
                let q = &self.cubes[i];
                let cq = frame.center(q);
                let sq = frame.side(q.level);
                let mut nbrs = Vec::new();
                self.dilate_members(&cq, 3.0 + 1e-9, &mut nbrs);
                let mut worst: f64 = 1.0;
                for &j in &nbrs {
                    let r = &self.cubes[j];
                    let cr = frame.center(r);
                    let sr = frame.side(r.level);
                    let touching =
                        (0..dim).all(|k| (cq[k] - cr[k]).abs() <= 0.5 * (sq + sr) * (1.0 + 1e-12));
                    if !touching {
                        continue;
                    }
                    let mut c: f64 = 0.0;
                    for k in 0..dim {
                        c = c.max(((cq[k] - cr[k]).abs() + 0.5 * sq) / (0.5 * sr));
                    }
                    worst = worst.max(c);
                }
                worst
            })
            .collect();
        per_cube.into_iter().fold(1.0, f64::max)
    }

    /// Sampled check of `2 diam Q < dist(x, closure(domain)) < 8 diam Q` for
    /// `x` on a `per_axis^n` grid in 5Q, for every cube.
    pub fn property3(&self, domain: &ImplicitDomain, per_axis: usize) -> Property3Report {
        let frame = self.frame;
        let dim = frame.dim;
        let per_axis = per_axis.max(2);
        let results: Vec<(f64, f64, usize)> = self
            .cubes
            .par_iter()
            .map(|q| {
                let c = frame.center(q);
                let d = frame.diam(q);
                let half = 2.5 * frame.side(q.level);
                let total = per_axis.pow(dim as u32);
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for m in 0..total {
                    let mut x = c;
                    let mut rem = m;
                    for (i, v) in x.iter_mut().enumerate().take(dim) {
                        let t = (rem % per_axis) as f64 / (per_axis - 1) as f64;
                        rem /= per_axis;
                        *v = c[i] - half + 2.0 * half * t;
                    }
                    let r = domain.dist_to_closure(&x) / d;
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
                (lo, hi, total)
            })
            .collect();
        let mut rep = Property3Report {
            cubes_checked: self.cubes.len(),
            samples: 0,
            min_ratio: f64::INFINITY,
            max_ratio: 0.0,
            lower_violations: 0,
            upper_violations: 0,
            worst_cube: None,
            pass: true,
        };
        let mut worst_excess = 0.0;
        for (q, (lo, hi, n)) in self.cubes.iter().zip(results) {
            rep.samples += n;
            rep.min_ratio = rep.min_ratio.min(lo);
            rep.max_ratio = rep.max_ratio.max(hi);
            let mut excess: f64 = 0.0;
            if !(lo > 2.0) {
                rep.lower_violations += 1;
                excess = excess.max(2.0 - lo);
            }
            if !(hi < 8.0) {
                rep.upper_violations += 1;
                excess = excess.max(hi - 8.0);
            }
            if excess > worst_excess {
                worst_excess = excess;
                rep.worst_cube = Some(*q);
            }
        }
        rep.pass = rep.lower_violations == 0 && rep.upper_violations == 0;
        rep
    }

    /// Cubes as JSON records: level, index, centre, diam and `x_Q*`.
    pub fn to_json(&self) -> serde_json::Value {
        let dim = self.frame.dim;
        let cubes: Vec<serde_json::Value> = self
            .cubes
            .iter()
            .enumerate()
            .map(|(i, q)| {
                let c = self.frame.center(q);
                let mut rec = serde_json::json!({
                    "level": q.level,
                    "index": &q.index[..dim],
                    "center": &c[..dim],
                    "diam": self.frame.diam(q),
                });
                if let Some(x) = self.reflected_centers.get(i) {
                    rec["x_star"] = serde_json::json!(&x[..dim]);
                }
                rec
            })
            .collect();
        serde_json::json!({
            "dim": dim,
            "root": { "center": &self.root.center[..dim], "radius": self.root.radius },
            "max_level": self.max_level,
            "ratio": self.rule.ratio,
            "unresolved_count": self.unresolved.len(),
            "unresolved_volume": self.unresolved_volume,
            "cubes": cubes,
        })
    }
}
