//! Finite-sample surrogates for the extension bounds.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{ExtendedFunction, Tag};
use crate::geometry::{ball_volume, dist, BBox, ImplicitDomain, Point};
use crate::quadrature::{gagliardo, lp_norm, w1p_seminorm, GridFunction, Lattice};
use crate::{rng, Error, Result};

/// An extended function sampled on the cell centres of the base lattice
/// continued over the ambient ball. Nodes of the base grid keep their
/// values bit for bit.
pub struct AmbientSample {
    pub grid: GridFunction,
    /// Per node of `grid`.
    pub tags: Vec<Tag>,
    /// Node weight carried by unresolved nodes.
    pub unresolved_volume: f64,
}

impl AmbientSample {
    pub fn build(ef: &ExtendedFunction) -> Result<Self> {
        let base = ef.base();
        let blat = *base.lattice();
        let n = blat.dim;
        let root = ef.ambient();
        let h = blat.h;
        let mut shift = [0usize; 3];
        let mut origin = blat.origin;
        let mut hi = [0.0; 3];
        for i in 0..n {
            let k = ((blat.origin[i] - (root.center[i] - root.radius)) / h).ceil().max(0.0);
            shift[i] = k as usize;
            origin[i] = blat.origin[i] - k * h;
            hi[i] = root.center[i] + root.radius;
        }
        let lat = Lattice::covering(origin, hi, h, n);
        let (c, r) = (root.center, root.radius);
        let mut bb = BBox::new(c, c);
        for i in 0..n {
            bb.lo[i] -= r;
            bb.hi[i] += r;
        }
        let dom = ImplicitDomain::new(
            format!("{}-ambient", base.domain().name()),
            n,
            bb,
            2.0 * r,
            Some(ball_volume(n) * r.powi(n as i32)),
            move |x| dist(x, &c) < r,
        );
        let empty = GridFunction::empty(&dom, lat, &format!("E[{}]", base.label()))?;
        let vals: Vec<(f64, Tag)> = empty
            .nodes()
            .par_iter()
            .map(|&id| {
                let ix = lat.unravel(id);
                let mut b = [0usize; 3];
                let mut ok = true;
                for i in 0..3 {
                    if i < n {
                        ok &= ix[i] >= shift[i] && ix[i] - shift[i] < blat.dims[i];
                        b[i] = ix[i].wrapping_sub(shift[i]);
                    }
                }
                if ok {
                    let bid = blat.ravel(b);
                    if base.is_inside_cell(bid) {
                        return (base.dense_value(bid), Tag::Inside);
                    }
                }
                ef.eval_tagged(&lat.point(id))
            })
            .collect();
        let values: Vec<f64> = vals.iter().map(|v| v.0).collect();
        let tags: Vec<Tag> = vals.iter().map(|v| v.1).collect();
        let grid = empty.with_values(&values, empty.label());
        let unresolved_volume = (0..grid.len())
            .filter(|&k| tags[k] == Tag::Unresolved)
            .map(|k| grid.node_weight(k))
            .sum();
        Ok(AmbientSample { grid, tags, unresolved_volume })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub s: f64,
    pub p: f64,
    pub lhs: f64,
    pub lhs_err: f64,
    pub rhs: f64,
    pub rhs_err: f64,
    /// `lhs / rhs`; absent when `rhs` is zero.
    pub ratio: Option<f64>,
    pub unresolved_volume: f64,
}

fn ratio(lhs: f64, rhs: f64) -> Option<f64> {
    (rhs > 0.0).then(|| lhs / rhs)
}

/// `[Ef]^p` over the ambient ball against `[f]^p` over the domain.
pub fn fractional_bound_check(ef: &ExtendedFunction, s: f64, p: f64) -> Result<BoundCheck> {
    let sample = AmbientSample::build(ef)?;
    fractional_on(&sample, ef.base(), s, p)
}

/// [`fractional_bound_check`] over several `s`, sharing one ambient sample.
pub fn fractional_sweep(ef: &ExtendedFunction, p: f64, s_grid: &[f64]) -> Result<Vec<BoundCheck>> {
    let sample = AmbientSample::build(ef)?;
    s_grid.iter().map(|&s| fractional_on(&sample, ef.base(), s, p)).collect()
}

fn fractional_on(sample: &AmbientSample, base: &GridFunction, s: f64, p: f64) -> Result<BoundCheck> {
    let lhs = gagliardo(&sample.grid, s, p, None)?;
    let rhs = gagliardo(base, s, p, None)?;
    Ok(BoundCheck {
        s,
        p,
        lhs: lhs.value,
        lhs_err: lhs.err_est,
        rhs: rhs.value,
        rhs_err: rhs.err_est,
        ratio: ratio(lhs.value, rhs.value),
        unresolved_volume: sample.unresolved_volume,
    })
}

/// `norm(Ef, L^p(ball))` against `norm(f, L^p(Omega))`.
pub fn lp_bound_check(ef: &ExtendedFunction, p: f64) -> Result<BoundCheck> {
    let sample = AmbientSample::build(ef)?;
    let lhs = lp_norm(&sample.grid, p)?;
    let rhs = lp_norm(ef.base(), p)?;
    Ok(BoundCheck {
        s: 1.0,
        p,
        lhs: lhs.value,
        lhs_err: lhs.err_est,
        rhs: rhs.value,
        rhs_err: rhs.err_est,
        ratio: ratio(lhs.value, rhs.value),
        unresolved_volume: sample.unresolved_volume,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GradientCheck {
    pub p: f64,
    /// `norm(grad Ef, L^p)` over the exterior nodes with a full stencil.
    pub lhs: f64,
    pub rhs: f64,
    pub rhs_err: f64,
    pub ratio: Option<f64>,
    /// Exterior volume left out: unresolved nodes and nodes whose stencil
    /// reaches the domain or the unresolved layer.
    pub excluded_volume: f64,
}

/// Central differences of the extension at exterior nodes whose whole
/// stencil is tagged outside, against `norm(grad f, L^p(Omega))`.
pub fn gradient_bound_check(ef: &ExtendedFunction, p: f64) -> Result<GradientCheck> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("p = {p} outside [1, inf)")));
    }
    let sample = AmbientSample::build(ef)?;
    let g = &sample.grid;
    let lat = *g.lattice();
    let n = lat.dim;
    let mut slot = vec![usize::MAX; lat.len()];
    for (k, &id) in g.nodes().iter().enumerate() {
        slot[id] = k;
    }
    let outside = |id: Option<usize>| id.map(|j| slot[j]).filter(|&k| k != usize::MAX && sample.tags[k] == Tag::Outside);
    let per: Vec<(f64, f64)> = (0..g.len())
        .into_par_iter()
        .map(|k| {
            if sample.tags[k] == Tag::Inside {
                return (0.0, 0.0);
            }
            let w = g.node_weight(k);
            if sample.tags[k] == Tag::Unresolved {
                return (0.0, w);
            }
            let ix = lat.unravel(g.nodes()[k]);
            let mut sq = 0.0;
            for i in 0..n {
                let mut up = [0i64; 3];
                up[i] = 1;
                let mut dn = [0i64; 3];
                dn[i] = -1;
                match (outside(lat.offset(ix, &up)), outside(lat.offset(ix, &dn))) {
                    (Some(a), Some(b)) => {
                        let d = (g.node_value(a) - g.node_value(b)) / (2.0 * lat.h);
                        sq += d * d;
                    }
                    _ => return (0.0, w),
                }
            }
            (w * sq.sqrt().powf(p), 0.0)
        })
        .collect();
    let lhs = per.iter().map(|v| v.0).sum::<f64>().powf(1.0 / p);
    let excluded_volume = per.iter().map(|v| v.1).sum();
    let rhs = w1p_seminorm(ef.base(), p)?;
    Ok(GradientCheck {
        p,
        lhs,
        rhs: rhs.value,
        rhs_err: rhs.err_est,
        ratio: ratio(lhs, rhs.value),
        excluded_volume,
    })
}

/// `count` uniform points of the ambient ball outside the closure of the
/// domain.
pub fn exterior_probes(ef: &ExtendedFunction, count: usize, seed: u64) -> Vec<Point> {
    let root = ef.ambient();
    let n = ef.base().dim();
    let dom = ef.base().domain();
    let mut g = rng::stream(seed, rng::stream_id(7, 0, 0));
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut x = root.center;
        for v in x.iter_mut().take(n) {
            *v += g.gen_range(-root.radius..root.radius);
        }
        if root.contains(&x) && dom.dist_to_closure(&x) > 0.0 {
            out.push(x);
        }
    }
    out
}
