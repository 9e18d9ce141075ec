use rstar::RTree;

use super::domain::ImplicitDomain;
use super::{dist, dot, lerp, sub, Point};

const BISECTION_STEPS: usize = 48;

/// Boundary samples of an implicit domain, found by bisection on the edges
/// of a uniform grid where membership changes.
pub struct BoundaryCloud {
    tree: RTree<Point>,
    len: usize,
    spacing: f64,
    dim: usize,
}

fn bisect(dom: &ImplicitDomain, mut a: Point, mut b: Point) -> Point {
    let ina = dom.contains(&a);
    for _ in 0..BISECTION_STEPS {
        let m = lerp(&a, &b, 0.5);
        if dom.contains(&m) == ina {
            a = m;
        } else {
            b = m;
        }
    }
    lerp(&a, &b, 0.5)
}

/// Boundary points found on the edges of a local grid with `per_axis` nodes
/// spanning `[lo, lo + step * (per_axis - 1)]` in each coordinate.
fn grid_crossings(dom: &ImplicitDomain, lo: Point, step: f64, per_axis: usize) -> Vec<Point> {
    let n = dom.dim();
    let counts: Vec<usize> = (0..3).map(|i| if i < n { per_axis } else { 1 }).collect();
    let total = counts[0] * counts[1] * counts[2];
    let at = |i: usize, j: usize, k: usize| -> Point {
        [
            lo[0] + i as f64 * step,
            if n > 1 { lo[1] + j as f64 * step } else { 0.0 },
            if n > 2 { lo[2] + k as f64 * step } else { 0.0 },
        ]
    };
    let mut inside = vec![false; total];
    for k in 0..counts[2] {
        for j in 0..counts[1] {
            for i in 0..counts[0] {
                inside[(k * counts[1] + j) * counts[0] + i] = dom.contains(&at(i, j, k));
            }
        }
    }
    let mut out = Vec::new();
    for k in 0..counts[2] {
        for j in 0..counts[1] {
            for i in 0..counts[0] {
                let id = (k * counts[1] + j) * counts[0] + i;
                let here = inside[id];
                let nbrs = [
                    (i + 1 < counts[0], id + 1, (i + 1, j, k)),
                    (j + 1 < counts[1], id + counts[0], (i, j + 1, k)),
                    (k + 1 < counts[2], id + counts[0] * counts[1], (i, j, k + 1)),
                ];
                for (ok, nid, (a, b, c)) in nbrs {
                    if ok && inside[nid] != here {
                        out.push(bisect(dom, at(i, j, k), at(a, b, c)));
                    }
                }
            }
        }
    }
    out
}

/// Boundary points at spacing about `h`: grid-edge crossings over the
/// bounding box plus points along the cuts.
pub fn boundary_points(dom: &ImplicitDomain, h: f64) -> Vec<Point> {
    let mut pts = grid_crossings_in_bbox(dom, h);
    for c in dom.cuts() {
        let len = dist(&c.a, &c.b);
        let m = (len / (0.5 * h)).ceil().max(1.0) as usize;
        for t in 0..=m {
            pts.push(lerp(&c.a, &c.b, t as f64 / m as f64));
        }
    }
    pts
}

/// Boundary points at spacing about `h` for small `h`: a coarse grid pass,
/// then repeated 4x refinement restricted to the neighbourhood of the cells
/// already found to meet the boundary.
pub fn boundary_points_fine(dom: &ImplicitDomain, h: f64) -> Vec<Point> {
    let n = dom.dim();
    let mut step = (dom.bbox().diag() / 64.0).max(h);
    let mut pts = grid_crossings_in_bbox(dom, step);
    while step > h {
        let next = (0.25 * step).max(h);
        let mut cells: Vec<[i64; 3]> = pts
            .iter()
            .map(|p| {
                let mut c = [0i64; 3];
                for i in 0..n {
                    c[i] = (p[i] / step).floor() as i64;
                }
                c
            })
            .collect();
        cells.sort_unstable();
        cells.dedup();
        let per_axis = (3.0 * step / next).ceil() as usize + 1;
        pts = cells
            .iter()
            .flat_map(|c| {
                let mut lo = [0.0; 3];
                for i in 0..n {
                    lo[i] = (c[i] - 1) as f64 * step;
                }
                grid_crossings(dom, lo, next, per_axis)
            })
            .collect();
        step = next;
    }
    for c in dom.cuts() {
        let len = dist(&c.a, &c.b);
        let m = (len / (0.5 * h)).ceil().max(1.0) as usize;
        for t in 0..=m {
            pts.push(lerp(&c.a, &c.b, t as f64 / m as f64));
        }
    }
    pts
}

fn grid_crossings_in_bbox(dom: &ImplicitDomain, h: f64) -> Vec<Point> {
    let bb = dom.bbox();
    let mut lo = bb.lo;
    let mut per_axis = 2;
    for i in 0..dom.dim() {
        lo[i] -= 2.0 * h;
        let m = ((bb.hi[i] + 2.0 * h - lo[i]) / h).ceil() as usize + 1;
        per_axis = per_axis.max(m);
    }
    grid_crossings(dom, lo, h, per_axis)
}

impl BoundaryCloud {
    pub fn build(dom: &ImplicitDomain) -> Self {
        let n = dom.dim();
        let h = dom.boundary_spacing();
        let pts = boundary_points(dom, h);
        let len = pts.len();
        BoundaryCloud {
            tree: RTree::bulk_load(pts),
            len,
            spacing: h,
            dim: n,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = &Point> {
        self.tree.iter()
    }

    /// Distance to the sampled boundary, with chords between neighbouring
    /// samples used to remove most of the sampling error.
    pub fn nearest(&self, x: &Point) -> (f64, Point) {
        let mut it = self.tree.nearest_neighbor_iter(x);
        let b0 = match it.next() {
            Some(b) => *b,
            None => return (f64::INFINITY, *x),
        };
        let mut best = (dist(x, &b0), b0);
        if self.dim == 1 {
            return best;
        }
        for b in it.take(4) {
            if dist(b, &b0) > 3.0 * self.spacing {
                continue;
            }
            let d = sub(b, &b0);
            let t = (dot(&sub(x, &b0), &d) / dot(&d, &d)).clamp(0.0, 1.0);
            let p = lerp(&b0, b, t);
            let dp = dist(x, &p);
            if dp < best.0 {
                best = (dp, p);
            }
        }
        best
    }

    /// Nearest boundary point refined by repeated local resampling.
    pub fn nearest_precise(&self, dom: &ImplicitDomain, x: &Point) -> (f64, Point) {
        let mut b = match self.tree.nearest_neighbor(x) {
            Some(b) => *b,
            None => return (f64::INFINITY, *x),
        };
        let tol = 1e-7 * dom.diam_upper();
        let mut w = 2.0 * self.spacing;
        let mut best = dist(x, &b);
        while w > tol {
            let per_axis = 17;
            let step = 2.0 * w / (per_axis - 1) as f64;
            let mut lo = b;
            for v in lo.iter_mut().take(self.dim) {
                *v -= w;
            }
            for p in grid_crossings(dom, lo, step, per_axis) {
                let d = dist(x, &p);
                if d < best {
                    best = d;
                    b = p;
                }
            }
            w *= 0.25;
        }
        (best, b)
    }
}
