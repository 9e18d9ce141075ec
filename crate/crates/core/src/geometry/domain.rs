use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::boundary::BoundaryCloud;
use super::{dist, dot, lerp, sub, Point};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lo: Point,
    pub hi: Point,
}

impl BBox {
    pub fn new(lo: Point, hi: Point) -> Self {
        BBox { lo, hi }
    }

    pub fn contains(&self, x: &Point, dim: usize) -> bool {
        (0..dim).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }

    pub fn center(&self) -> Point {
        lerp(&self.lo, &self.hi, 0.5)
    }

    pub fn diag(&self) -> f64 {
        dist(&self.lo, &self.hi)
    }

    pub fn intersect(&self, other: &BBox, dim: usize) -> Option<BBox> {
        let mut out = *self;
        for i in 0..dim {
            out.lo[i] = self.lo[i].max(other.lo[i]);
            out.hi[i] = self.hi[i].min(other.hi[i]);
            if out.lo[i] >= out.hi[i] {
                return None;
            }
        }
        Some(out)
    }

    /// Euclidean distance from `x` to the box (0 inside).
    pub fn dist(&self, x: &Point, dim: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..dim {
            let d = (self.lo[i] - x[i]).max(x[i] - self.hi[i]).max(0.0);
            s += d * d;
        }
        s.sqrt()
    }
}

/// A closed segment removed from a domain (a slit). It has measure zero but
/// disconnects nearby points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn dist(&self, x: &Point) -> f64 {
        dist(x, &self.project(x))
    }

    pub fn project(&self, x: &Point) -> Point {
        let d = sub(&self.b, &self.a);
        let len2 = dot(&d, &d);
        if len2 == 0.0 {
            return self.a;
        }
        let t = (dot(&sub(x, &self.a), &d) / len2).clamp(0.0, 1.0);
        lerp(&self.a, &self.b, t)
    }

    /// Whether the planar segment `p q` meets this segment.
    pub fn crosses(&self, p: &Point, q: &Point) -> bool {
        fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
            (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        }
        fn on_seg(a: &Point, b: &Point, c: &Point) -> bool {
            c[0] >= a[0].min(b[0])
                && c[0] <= a[0].max(b[0])
                && c[1] >= a[1].min(b[1])
                && c[1] <= a[1].max(b[1])
        }
        let (a, b) = (&self.a, &self.b);
        let d1 = orient(a, b, p);
        let d2 = orient(a, b, q);
        let d3 = orient(p, q, a);
        let d4 = orient(p, q, b);
        if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
            && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
        {
            return true;
        }
        (d1 == 0.0 && on_seg(a, b, p))
            || (d2 == 0.0 && on_seg(a, b, q))
            || (d3 == 0.0 && on_seg(p, q, a))
            || (d4 == 0.0 && on_seg(p, q, b))
    }
}

pub type Predicate = Arc<dyn Fn(&Point) -> bool + Send + Sync>;

/// Bounded open set given by a membership predicate.
#[derive(Clone)]
pub struct ImplicitDomain {
    name: String,
    dim: usize,
    bbox: BBox,
    diam_upper: f64,
    area_exact: Option<f64>,
    inside: Predicate,
    cuts: Vec<Segment>,
    features: Vec<Point>,
    boundary_spacing: f64,
    cloud: Arc<OnceLock<BoundaryCloud>>,
}

impl fmt::Debug for ImplicitDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImplicitDomain")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("bbox", &self.bbox)
            .field("diam_upper", &self.diam_upper)
            .field("area_exact", &self.area_exact)
            .field("cuts", &self.cuts)
            .finish()
    }
}

impl ImplicitDomain {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        bbox: BBox,
        diam_upper: f64,
        area_exact: Option<f64>,
        inside: impl Fn(&Point) -> bool + Send + Sync + 'static,
    ) -> Self {
        assert!((1..=3).contains(&dim), "dimension must be 1, 2 or 3");
        let default_levels = match dim {
            1 => 16,
            2 => 10,
            _ => 6,
        };
        ImplicitDomain {
            name: name.into(),
            dim,
            bbox,
            diam_upper,
            area_exact,
            inside: Arc::new(inside),
            cuts: Vec::new(),
            features: Vec::new(),
            boundary_spacing: diam_upper / (1u64 << default_levels) as f64,
            cloud: Arc::new(OnceLock::new()),
        }
    }

    pub fn with_cuts(mut self, cuts: Vec<Segment>) -> Self {
        self.cuts = cuts;
        self.cloud = Arc::new(OnceLock::new());
        self
    }

    /// Boundary points where the domain is known to be singular (corners,
    /// slit ends, cusp tips). Samplers add candidates around them.
    pub fn with_features(mut self, features: Vec<Point>) -> Self {
        self.features = features;
        self
    }

    pub fn features(&self) -> &[Point] {
        &self.features
    }

    pub fn with_boundary_spacing(mut self, spacing: f64) -> Self {
        self.boundary_spacing = spacing;
        self.cloud = Arc::new(OnceLock::new());
        self
    }

    pub fn contains(&self, x: &Point) -> bool {
        (self.inside)(x)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bbox(&self) -> &BBox {
        &self.bbox
    }

    pub fn diam_upper(&self) -> f64 {
        self.diam_upper
    }

    pub fn area_exact(&self) -> Option<f64> {
        self.area_exact
    }

    pub fn cuts(&self) -> &[Segment] {
        &self.cuts
    }

    pub fn boundary_spacing(&self) -> f64 {
        self.boundary_spacing
    }

    /// Boundary samples, built on first use.
    pub fn boundary(&self) -> &BoundaryCloud {
        self.cloud.get_or_init(|| BoundaryCloud::build(self))
    }

    /// Whether the straight segment from `p` to `q` crosses a cut.
    pub fn segment_blocked(&self, p: &Point, q: &Point) -> bool {
        self.dim == 2 && self.cuts.iter().any(|c| c.crosses(p, q))
    }

    fn cut_dist(&self, x: &Point) -> Option<(f64, Point)> {
        self.cuts
            .iter()
            .map(|c| {
                let p = c.project(x);
                (dist(x, &p), p)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }

    /// Distance to the closure of the domain, accurate to about the boundary
    /// sample spacing squared over the curvature radius.
    pub fn dist_to_closure(&self, x: &Point) -> f64 {
        if self.contains(x) {
            return 0.0;
        }
        self.dist_to_boundary(x)
    }

    /// Distance to the boundary (including cuts) from any point.
    pub fn dist_to_boundary(&self, x: &Point) -> f64 {
        let (d, _) = self.boundary().nearest(x);
        match self.cut_dist(x) {
            Some((dc, _)) => d.min(dc),
            None => d,
        }
    }

    /// Nearest point of the closure, refined locally to about `1e-6 * diam_upper`.
    pub fn nearest_closure_point(&self, x: &Point) -> (f64, Point) {
        if self.contains(x) {
            return (0.0, *x);
        }
        let (mut d, mut p) = self.boundary().nearest_precise(self, x);
        if let Some((dc, pc)) = self.cut_dist(x) {
            if dc < d {
                d = dc;
                p = pc;
            }
        }
        (d, p)
    }

    /// The domain intersected with an axis-aligned box.
    pub fn intersect_box(&self, b: &BBox) -> Option<ImplicitDomain> {
        let bbox = self.bbox.intersect(b, self.dim)?;
        let inner = self.inside.clone();
        let dim = self.dim;
        let bb = *b;
        let cuts = self
            .cuts
            .iter()
            .filter(|c| b.dist(&c.a, dim) == 0.0 || b.dist(&c.b, dim) == 0.0)
            .copied()
            .collect();
        let d = ImplicitDomain::new(
            format!("{}&box", self.name),
            dim,
            bbox,
            bbox.diag().min(self.diam_upper),
            None,
            move |x| bb.contains(x, dim) && inner(x),
        )
        .with_cuts(cuts)
        .with_boundary_spacing(self.boundary_spacing.min(bbox.diag() / 1024.0));
        Some(d)
    }

    /// The domain intersected with the open ball `B(center, radius)`.
    pub fn intersect_ball(&self, center: Point, radius: f64) -> Option<ImplicitDomain> {
        let mut bb = BBox::new(center, center);
        for i in 0..self.dim {
            bb.lo[i] -= radius;
            bb.hi[i] += radius;
        }
        let bbox = self.bbox.intersect(&bb, self.dim)?;
        let inner = self.inside.clone();
        let d = ImplicitDomain::new(
            format!("{}&ball", self.name),
            self.dim,
            bbox,
            (2.0 * radius).min(self.diam_upper),
            None,
            move |x| dist(x, &center) < radius && inner(x),
        )
        .with_cuts(self.cuts.clone())
        .with_boundary_spacing(self.boundary_spacing.min(radius / 512.0));
        Some(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_crossing() {
        let s = Segment { a: [0.0, 0.0, 0.0], b: [1.0, 0.0, 0.0] };
        assert!(s.crosses(&[0.5, -1.0, 0.0], &[0.5, 1.0, 0.0]));
        assert!(!s.crosses(&[-0.5, -1.0, 0.0], &[-0.5, 1.0, 0.0]));
        assert!(!s.crosses(&[0.5, 0.1, 0.0], &[0.7, 1.0, 0.0]));
    }

    #[test]
    fn box_distance() {
        let b = BBox::new([0.0; 3], [1.0, 1.0, 0.0]);
        assert_eq!(b.dist(&[0.5, 0.5, 0.0], 2), 0.0);
        assert!((b.dist(&[2.0, 2.0, 0.0], 2) - 2f64.sqrt()).abs() < 1e-15);
    }
}
