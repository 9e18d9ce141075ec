//! Whitney-average extension operators.
//!
//! Outside the closure of the domain both operators are
//! `sum_Q a_Q phi_Q(x)` over the Whitney cover; they differ in the cube
//! averages `a_Q`. Mode `E` averages `f` over `B(x_Q*, diam Q) cap Omega`;
//! mode `E2` averages a given ambient extension over the stretched cube
//! with the centre of Q and normalised diameter `diam(Q)^(1/s)`.

mod checks;

use std::io::Write;

use rayon::prelude::*;
use rstar::primitives::GeomWithData;
use rstar::RTree;
use serde::Serialize;

use crate::geometry::{
    dist, reflect_centers, stretched_cube, whitney_cover, AmbientBall, AxisCube, PartitionOfUnity, Point,
    WhitneyCover,
};
use crate::quadrature::GridFunction;
use crate::{Error, Result};

pub use checks::{
    exterior_probes, fractional_bound_check, fractional_sweep, gradient_bound_check, lp_bound_check, AmbientSample, BoundCheck,
    GradientCheck,
};

/// Sample points per axis for stretched-cube averages.
const CUBE_SAMPLES: usize = 4;

/// Averaging region intersected with the domain.
#[derive(Clone, Copy, Debug)]
pub enum AvgRegion {
    Ball { center: Point, radius: f64 },
    Cube(AxisCube),
}

impl AvgRegion {
    fn contains(&self, x: &Point, dim: usize) -> bool {
        match self {
            AvgRegion::Ball { center, radius } => dist(x, center) < *radius,
            AvgRegion::Cube(q) => (0..dim).all(|i| (x[i] - q.center[i]).abs() <= 0.5 * q.side()),
        }
    }

    fn half_width(&self) -> f64 {
        match self {
            AvgRegion::Ball { radius, .. } => *radius,
            AvgRegion::Cube(q) => 0.5 * q.side(),
        }
    }

    fn center(&self) -> Point {
        match self {
            AvgRegion::Ball { center, .. } => *center,
            AvgRegion::Cube(q) => q.center,
        }
    }
}

/// Weighted mean of the node values of `f` in `region`; node weights carry
/// the partial volume of boundary cells.
pub fn cube_average(f: &GridFunction, region: &AvgRegion) -> Result<f64> {
    let lat = f.lattice();
    let dim = lat.dim;
    let c = region.center();
    let w = region.half_width();
    let mut lo = [0usize; 3];
    let mut hi = [1usize; 3];
    for i in 0..dim {
        let a = ((c[i] - w - lat.origin[i]) / lat.h - 0.5).floor().max(0.0);
        let b = ((c[i] + w - lat.origin[i]) / lat.h + 0.5).ceil().min(lat.dims[i] as f64);
        if b <= a {
            return Err(empty_region(f, region));
        }
        lo[i] = a as usize;
        hi[i] = b as usize;
    }
    let (mut sw, mut swv) = (0.0, 0.0);
    for z in lo[2]..hi[2] {
        for y in lo[1]..hi[1] {
            for x in lo[0]..hi[0] {
                let id = lat.ravel([x, y, z]);
                if !f.is_inside_cell(id) {
                    continue;
                }
                let wt = f.dense_weights()[id];
                if wt > 0.0 && region.contains(&lat.point(id), dim) {
                    sw += wt;
                    swv += wt * f.dense_value(id);
                }
            }
        }
    }
    if sw == 0.0 {
        return Err(empty_region(f, region));
    }
    Ok(swv / sw)
}

fn empty_region(f: &GridFunction, region: &AvgRegion) -> Error {
    Error::Resolution(format!(
        "no node of spacing {} in averaging region {:?}; refine the grid",
        f.h(),
        region
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Mode {
    E,
    E2 { s: f64 },
}

/// Where an evaluation point lies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Inside,
    Outside,
    /// Outside the domain but in no doubled Whitney cube (the boundary layer
    /// below the cover resolution, or outside the ambient ball); the value
    /// is that of the nearest node.
    Unresolved,
}

type NodePoint = GeomWithData<Point, usize>;

/// A grid function on the domain extended to the ambient ball.
pub struct ExtendedFunction {
    base: GridFunction,
    cover: WhitneyCover,
    mode: Mode,
    averages: Vec<f64>,
    /// Cubes whose averaging region was cut by the ambient ball.
    clipped: usize,
    nodes: RTree<NodePoint>,
}

impl std::fmt::Debug for ExtendedFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExtendedFunction")
            .field("function", &self.base.label())
            .field("domain", &self.base.domain().name())
            .field("mode", &self.mode)
            .field("cubes", &self.cover.len())
            .field("clipped", &self.clipped)
            .finish()
    }
}

/// Whitney cover of the complement of `f`'s domain in its ambient ball,
/// with reflected centres, stopped at the finest level whose cubes have
/// diameter at least `2h`. Coarser `B(x_Q*, diam Q)` then always meet
/// nodes on Ahlfors-regular catalog domains.
pub fn matched_cover(f: &GridFunction) -> Result<WhitneyCover> {
    let dom = f.domain();
    let root = AmbientBall::for_domain(dom);
    let n = dom.dim() as f64;
    let top = 2.0 * root.radius * n.sqrt();
    let level = (top / (2.0 * f.h())).log2().floor().max(0.0) as u32;
    let cover = whitney_cover(dom, &root, level)?;
    reflect_centers(&cover, dom)
}

/// `Ef = f` on the domain and `sum_Q f_{B_Q*} phi_Q` outside, with
/// `B_Q* = B(x_Q*, diam Q) cap Omega`. The Ahlfors check is the caller's
/// responsibility.
pub fn extend_e(f: &GridFunction, cover: &WhitneyCover) -> Result<ExtendedFunction> {
    check_cover(f, cover)?;
    let averages: Vec<f64> = (0..cover.len())
        .into_par_iter()
        .map(|i| {
            let region = AvgRegion::Ball { center: cover.reflected_centers[i], radius: cover.diam(i) };
            cube_average(f, &region).map_err(|_| {
                let q = &cover.cubes[i];
                Error::Resolution(format!(
                    "B_Q* of cube level {} index {:?} holds no node at h = {}; refine the grid",
                    q.level,
                    q.index,
                    f.h()
                ))
            })
        })
        .collect::<Result<_>>()?;
    Ok(ExtendedFunction::assemble(f, cover, Mode::E, averages, 0))
}

/// `E2 f = f` on the domain and `sum_Q (e1)_{Q~} phi_Q` outside, where
/// `Q~` has the centre of Q and diameter `u (diam Q / u)^(1/s)`, `u` the
/// ambient unit. `e1` is any extension of `f` to the ambient ball, for
/// example `|x| ef.eval(x)`. Stretched cubes are clipped to the ambient
/// ball; a cube whose stretched cube misses the ball uses `e1` at the
/// point of the ball nearest to its centre.
pub fn extend_e2(
    f: &GridFunction,
    cover: &WhitneyCover,
    e1: &(dyn Fn(&Point) -> f64 + Sync),
    s: f64,
) -> Result<ExtendedFunction> {
    check_cover(f, cover)?;
    let root = cover.root;
    let n = cover.dim();
    let per: Vec<(f64, bool)> = (0..cover.len())
        .into_par_iter()
        .map(|i| {
            let unit_q = AxisCube { center: cover.center(i), diam: cover.diam(i) / root.unit, dim: n };
            let mut qt = stretched_cube(&unit_q, s)?;
            qt.diam *= root.unit;
            let side = qt.side();
            let total = CUBE_SAMPLES.pow(n as u32);
            let (mut sum, mut kept) = (0.0, 0usize);
            for m in 0..total {
                let mut x = qt.center;
                let mut rem = m;
                for v in x.iter_mut().take(n) {
                    *v += side * (((rem % CUBE_SAMPLES) as f64 + 0.5) / CUBE_SAMPLES as f64 - 0.5);
                    rem /= CUBE_SAMPLES;
                }
                if root.contains(&x) {
                    sum += e1(&x);
                    kept += 1;
                }
            }
            if kept > 0 {
                return Ok((sum / kept as f64, kept < total));
            }
            let c = qt.center;
            let d = dist(&c, &root.center);
            let t = 0.999 * root.radius / d;
            let mut x = root.center;
            for k in 0..n {
                x[k] += t * (c[k] - root.center[k]);
            }
            Ok((e1(&x), true))
        })
        .collect::<Result<_>>()?;
    let clipped = per.iter().filter(|v| v.1).count();
    let averages = per.into_iter().map(|v| v.0).collect();
    Ok(ExtendedFunction::assemble(f, cover, Mode::E2 { s }, averages, clipped))
}

fn check_cover(f: &GridFunction, cover: &WhitneyCover) -> Result<()> {
    if cover.dim() != f.dim() {
        return Err(Error::Contract(format!(
            "cover dimension {} differs from function dimension {}",
            cover.dim(),
            f.dim()
        )));
    }
    if cover.reflected_centers.len() != cover.len() {
        return Err(Error::Contract("Whitney cover has no reflected centres; run reflect_centers".into()));
    }
    Ok(())
}

impl ExtendedFunction {
    fn assemble(f: &GridFunction, cover: &WhitneyCover, mode: Mode, averages: Vec<f64>, clipped: usize) -> Self {
        let pts = (0..f.len()).map(|k| GeomWithData::new(f.node_point(k), k)).collect();
        ExtendedFunction {
            base: f.clone(),
            cover: cover.clone(),
            mode,
            averages,
            clipped,
            nodes: RTree::bulk_load(pts),
        }
    }

    pub fn base(&self) -> &GridFunction {
        &self.base
    }

    pub fn cover(&self) -> &WhitneyCover {
        &self.cover
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn averages(&self) -> &[f64] {
        &self.averages
    }

    pub fn clipped(&self) -> usize {
        self.clipped
    }

    pub fn ambient(&self) -> AmbientBall {
        self.cover.root
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.eval_tagged(x).0
    }

    /// Value and region tag. At a node of the base grid the node value is
    /// returned unchanged.
    pub fn eval_tagged(&self, x: &Point) -> (f64, Tag) {
        let f = &self.base;
        if f.domain().contains(x) {
            let lat = f.lattice();
            if let Some(ix) = lat.locate(x) {
                let id = lat.ravel(ix);
                if f.is_inside_cell(id) && lat.point(id) == *x {
                    return (f.dense_value(id), Tag::Inside);
                }
            }
            let v = f.interpolate(x).unwrap_or_else(|| self.nearest_value(x));
            return (v, Tag::Inside);
        }
        let pou = PartitionOfUnity::new(&self.cover);
        let phi = pou.eval(x);
        if phi.is_empty() {
            return (self.nearest_value(x), Tag::Unresolved);
        }
        (phi.iter().map(|&(i, w)| w * self.averages[i]).sum(), Tag::Outside)
    }

    fn nearest_value(&self, x: &Point) -> f64 {
        let k = self.nodes.nearest_neighbor(x).expect("grid function has nodes").data;
        self.base.node_value(k)
    }

    /// Cube indices `Q` with `x` in `2Q`: the only averages `Ef(x)` reads.
    pub fn support_cubes(&self, x: &Point) -> Vec<usize> {
        let mut ids = Vec::new();
        self.cover.dilate_members(x, 2.0, &mut ids);
        ids
    }

    /// Rows `coords, value, region` on the cell centres of a grid of spacing
    /// `h` over the ambient ball.
    pub fn write_csv(&self, mut out: impl Write, h: f64) -> Result<()> {
        if !(h > 0.0) {
            return Err(Error::Parameter(format!("grid spacing must be positive, got {h}")));
        }
        let n = self.base.dim();
        let root = self.ambient();
        let names = ["x", "y", "z"];
        writeln!(out, "{},value,region", names[..n].join(","))?;
        let per = (2.0 * root.radius / h).ceil() as usize;
        let total = per.pow(n as u32);
        for m in 0..total {
            let mut x = [0.0; 3];
            let mut rem = m;
            for v in x.iter_mut().take(n) {
                *v = (rem % per) as f64 * h + 0.5 * h;
                rem /= per;
            }
            for k in 0..n {
                x[k] += root.center[k] - root.radius;
            }
            if !root.contains(&x) {
                continue;
            }
            let (v, tag) = self.eval_tagged(&x);
            let coords: Vec<String> = x[..n].iter().map(|c| format!("{c}")).collect();
            let tag = match tag {
                Tag::Inside => "inside",
                Tag::Outside => "outside",
                Tag::Unresolved => "unresolved",
            };
            writeln!(out, "{},{v},{tag}", coords.join(","))?;
        }
        Ok(())
    }
}
