//! Gagliardo double integrals, Lebesgue norms and the W^{1,p} seminorm on
//! sampled functions.

use rayon::prelude::*;
use serde::Serialize;

use super::grid::{GridFunction, Lattice};
use super::nearfield::{self, NearTable};
use super::panels::{PanelTree, ETA0};
use crate::geometry::{BBox, Point};
use crate::{Error, Result};

/// Constant of the near-field error model `C h^(1 - s(p-1)/p) |near|`.
pub const NEAR_ERROR_CONSTANT: f64 = 0.05;

/// Safety factor on the asymptotic error terms (Richardson differences and
/// midpoint curvature).
pub const RICHARDSON_SAFETY: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeminormEstimate {
    pub value: f64,
    pub err_est: f64,
    pub excluded_volume: f64,
    pub panels_used: usize,
}

/// Largest accepted fractional order.
pub const S_MAX: f64 = 1.0 - 1e-3;

pub(crate) fn check_sp(s: f64, p: f64) -> Result<()> {
    if !(s > 0.0 && s <= S_MAX) {
        return Err(Error::Parameter(format!("s = {s} outside (0, {S_MAX}]")));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("p = {p} outside [1, inf)")));
    }
    Ok(())
}

/// `abs(d)^p` with the common integer exponents unrolled.
#[derive(Clone, Copy)]
enum Pow {
    One,
    Two,
    Three,
    Four,
    Gen(f64),
}

impl Pow {
    fn new(p: f64) -> Self {
        match p {
            _ if p == 1.0 => Pow::One,
            _ if p == 2.0 => Pow::Two,
            _ if p == 3.0 => Pow::Three,
            _ if p == 4.0 => Pow::Four,
            _ => Pow::Gen(p),
        }
    }

    #[inline(always)]
    fn apply(self, d: f64) -> f64 {
        match self {
            Pow::One => d.abs(),
            Pow::Two => d * d,
            Pow::Three => d.abs() * d * d,
            Pow::Four => {
                let q = d * d;
                q * q
            }
            Pow::Gen(p) => d.abs().powf(p),
        }
    }
}

/// `(h abs(d))^(-n - sp)` for every lattice offset `d`, zero at `d = 0`.
struct KernelTable {
    data: Vec<f64>,
    ext: [usize; 3],
    dims: [usize; 3],
}

impl KernelTable {
    fn new(lat: &Lattice, np: f64) -> Self {
        let dims = lat.dims;
        let ext = [2 * dims[0] - 1, 2 * dims[1] - 1, 2 * dims[2] - 1];
        let mut data = vec![0.0; ext[0] * ext[1] * ext[2]];
        let h2 = lat.h * lat.h;
        data.par_chunks_mut(ext[0]).enumerate().for_each(|(row, out)| {
            let dy = (row % ext[1]) as f64 - (dims[1] - 1) as f64;
            let dz = (row / ext[1]) as f64 - (dims[2] - 1) as f64;
            for (ix, v) in out.iter_mut().enumerate() {
                let dx = ix as f64 - (dims[0] - 1) as f64;
                let r2 = (dx * dx + dy * dy + dz * dz) * h2;
                *v = if r2 == 0.0 { 0.0 } else { r2.powf(-0.5 * np) };
            }
        });
        KernelTable { data, ext, dims }
    }

    /// Start of the table row for offsets `(. , dy, dz)`.
    #[inline]
    fn row(&self, dy: i64, dz: i64) -> usize {
        let y = (dy + self.dims[1] as i64 - 1) as usize;
        let z = (dz + self.dims[2] as i64 - 1) as usize;
        (z * self.ext[1] + y) * self.ext[0]
    }
}

/// `sum_{i in A} sum_{j in B} wa_i wb_j abs(f_i - f_j)^p K(i - j)`.
fn block_sum(
    lat: &Lattice,
    kt: &KernelTable,
    a: ([usize; 3], [usize; 3]),
    b: ([usize; 3], [usize; 3]),
    wa: &[f64],
    wb: &[f64],
    f: &[f64],
    pw: Pow,
) -> f64 {
    match pw {
        Pow::One => block_sum_impl(lat, kt, a, b, wa, wb, f, |d| d.abs()),
        Pow::Two => block_sum_impl(lat, kt, a, b, wa, wb, f, |d| d * d),
        Pow::Three => block_sum_impl(lat, kt, a, b, wa, wb, f, |d| d.abs() * d * d),
        Pow::Four => block_sum_impl(lat, kt, a, b, wa, wb, f, |d| {
            let q = d * d;
            q * q
        }),
        Pow::Gen(p) => block_sum_impl(lat, kt, a, b, wa, wb, f, |d| d.abs().powf(p)),
    }
}

#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn block_sum_impl<W: std::ops::Index<usize, Output = f64> + ?Sized>(
    lat: &Lattice,
    kt: &KernelTable,
    a: ([usize; 3], [usize; 3]),
    b: ([usize; 3], [usize; 3]),
    wa: &W,
    wb: &[f64],
    f: &[f64],
    pw: impl Fn(f64) -> f64,
) -> f64 {
    let (alo, ahi) = a;
    let (blo, bhi) = b;
    let nx = lat.dims[0] as i64;
    let bw = bhi[0] - blo[0];
    let mut total = 0.0;
    for az in alo[2]..ahi[2] {
        for ay in alo[1]..ahi[1] {
            for ax in alo[0]..ahi[0] {
                let i = lat.ravel([ax, ay, az]);
                let wi = wa[i];
                if wi == 0.0 {
                    continue;
                }
                let fi = f[i];
                let mut acc = 0.0;
                for bz in blo[2]..bhi[2] {
                    for by in blo[1]..bhi[1] {
                        let j0 = lat.ravel([blo[0], by, bz]);
                        let trow = kt.row(ay as i64 - by as i64, az as i64 - bz as i64);
                        // Offset dx = ax - bx decreases along the B row.
                        let t0 = (ax as i64 - blo[0] as i64 + nx - 1) as usize;
                        let ws = &wb[j0..j0 + bw];
                        let fs = &f[j0..j0 + bw];
                        for k in 0..bw {
                            let t = kt.data[trow + t0 - k];
                            acc += ws[k] * pw(fi - fs[k]) * t;
                        }
                    }
                }
                total += wi * acc;
            }
        }
    }
    total
}

/// Lattice aggregated by 2 per axis: total weight, weighted centroid and
/// weighted mean value per coarse cell.
struct Coarse {
    dims: [usize; 3],
    w: Vec<f64>,
    x: Vec<Point>,
    f: Vec<f64>,
}

impl Coarse {
    fn new(lat: &Lattice, w: &[f64], f: &[f64]) -> Self {
        let mut dims = [1; 3];
        for i in 0..lat.dim {
            dims[i] = lat.dims[i].div_ceil(2);
        }
        let n = dims[0] * dims[1] * dims[2];
        let (mut cw, mut cx, mut cf) = (vec![0.0; n], vec![[0.0; 3]; n], vec![0.0; n]);
        for id in 0..lat.len() {
            let wi = w[id];
            if wi == 0.0 {
                continue;
            }
            let ix = lat.unravel(id);
            let c = (ix[2] / 2 * dims[1] + ix[1] / 2) * dims[0] + ix[0] / 2;
            let p = lat.point(id);
            cw[c] += wi;
            for k in 0..3 {
                cx[c][k] += wi * p[k];
            }
            cf[c] += wi * f[id];
        }
        for c in 0..n {
            if cw[c] > 0.0 {
                for k in 0..3 {
                    cx[c][k] /= cw[c];
                }
                cf[c] /= cw[c];
            }
        }
        Coarse { dims, w: cw, x: cx, f: cf }
    }

    fn cells(&self, lo: [usize; 3], hi: [usize; 3], dim: usize) -> Vec<usize> {
        let mut clo = [0; 3];
        let mut chi = [1; 3];
        for i in 0..dim {
            clo[i] = lo[i] / 2;
            chi[i] = hi[i].div_ceil(2);
        }
        let mut out = Vec::new();
        for z in clo[2]..chi[2] {
            for y in clo[1]..chi[1] {
                for x in clo[0]..chi[0] {
                    let c = (z * self.dims[1] + y) * self.dims[0] + x;
                    if self.w[c] > 0.0 {
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

fn coarse_sum(ca: &Coarse, cb: &Coarse, ia: &[usize], ib: &[usize], pw: Pow, np: f64) -> f64 {
    let mut total = 0.0;
    for &i in ia {
        let (wi, xi, fi) = (ca.w[i], ca.x[i], ca.f[i]);
        let mut acc = 0.0;
        for &j in ib {
            let d = crate::geometry::sub(&xi, &cb.x[j]);
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            acc += cb.w[j] * pw.apply(fi - cb.f[j]) * r2.powf(-0.5 * np);
        }
        total += wi * acc;
    }
    total
}

/// Occupancy `w_j / h^n` of the cell at offset `k` from `ix`, zero outside.
fn occupancy(lat: &Lattice, w: &[f64], ix: [usize; 3], k: &[i64; 3]) -> f64 {
    lat.offset(ix, k).map_or(0.0, |j| w[j] / lat.cell_volume())
}

/// Near-diagonal correction for node `id` against weights `wb`.
fn correction(
    lat: &Lattice,
    table: &NearTable,
    wb: &[f64],
    full: &[bool],
    id: usize,
    g: &Point,
    e: f64,
    p: f64,
) -> f64 {
    let gn = crate::geometry::norm(g);
    if gn == 0.0 {
        return 0.0;
    }
    let w = [g[0] / gn, g[1] / gn, g[2] / gn];
    let ix = lat.unravel(id);
    let c = if full[id] {
        table.total(&w)
    } else {
        table.weighted(&w, |k| occupancy(lat, wb, ix, k))
    };
    lat.h.powf(e) * gn.powf(p) * c
}

/// Cells whose whole correction stencil has full weight.
fn full_stencil(lat: &Lattice, w: &[f64], m: i64) -> Vec<bool> {
    let vol = lat.cell_volume();
    let dim = lat.dim;
    // Separable erosion of the "full weight" mask by m cells per axis.
    let mut cur: Vec<bool> = w.iter().map(|&v| (v - vol).abs() <= 1e-12 * vol).collect();
    for axis in 0..dim {
        let mut next = vec![false; cur.len()];
        for (id, out) in next.iter_mut().enumerate() {
            let ix = lat.unravel(id);
            let mut ok = true;
            for d in -m..=m {
                let mut k = [0i64; 3];
                k[axis] = d;
                match lat.offset(ix, &k) {
                    Some(j) if cur[j] => {}
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            *out = ok;
        }
        cur = next;
    }
    cur
}

/// Box pair restricting the two integration variables.
pub type Region = (BBox, BBox);

/// Estimate of `int_{A} int_{B} abs(f(x) - f(y))^p abs(x - y)^(-n - sp) dy dx`
/// with `A = region.0 cap Omega` and `B = region.1 cap Omega` (both `Omega`
/// when `region` is `None`).
pub fn gagliardo(f: &GridFunction, s: f64, p: f64, region: Option<&Region>) -> Result<SeminormEstimate> {
    check_sp(s, p)?;
    let lat = *f.lattice();
    let dim = lat.dim;
    let np = dim as f64 + s * p;
    let e = p - s * p;
    let pw = Pow::new(p);
    let vals = f.dense_values();
    let w = f.dense_weights();
    let mask = |b: &BBox| -> Vec<f64> {
        (0..lat.len())
            .map(|id| if w[id] > 0.0 && b.contains(&lat.point(id), dim) { w[id] } else { 0.0 })
            .collect()
    };
    let (wa, wb, symmetric) = match region {
        None => (w.to_vec(), w.to_vec(), true),
        Some((ra, rb)) => {
            let same = ra == rb;
            (mask(ra), mask(rb), same)
        }
    };
    let inside: Vec<bool> = (0..lat.len()).map(|i| wa[i] > 0.0 || wb[i] > 0.0).collect();
    let tree = PanelTree::build(&lat, &inside, ETA0);
    let kt = KernelTable::new(&lat, np);
    let ca = Coarse::new(&lat, &wa, vals);
    let cb = if symmetric { None } else { Some(Coarse::new(&lat, &wb, vals)) };
    let cb = cb.as_ref().unwrap_or(&ca);

    let per_pair: Vec<(f64, f64, bool)> = tree
        .pairs
        .par_iter()
        .map(|pp| {
            let (ba, bb) = (&tree.blocks[pp.a], &tree.blocks[pp.b]);
            let (ra, rb) = ((ba.lo, ba.hi), (bb.lo, bb.hi));
            let fine = if pp.is_self() {
                block_sum(&lat, &kt, ra, ra, &wa, &wb, vals, pw)
            } else if symmetric {
                2.0 * block_sum(&lat, &kt, ra, rb, &wa, &wb, vals, pw)
            } else {
                block_sum(&lat, &kt, ra, rb, &wa, &wb, vals, pw)
                    + block_sum(&lat, &kt, rb, ra, &wa, &wb, vals, pw)
            };
            if !pp.admissible {
                return (fine, 0.0, false);
            }
            let (ia, ib) = (ca.cells(ba.lo, ba.hi, dim), cb.cells(bb.lo, bb.hi, dim));
            let coarse = if symmetric {
                2.0 * coarse_sum(&ca, cb, &ia, &ib, pw, np)
            } else {
                let ia2 = cb.cells(ba.lo, ba.hi, dim);
                let ib2 = ca.cells(bb.lo, bb.hi, dim);
                coarse_sum(&ca, cb, &ia, &ib, pw, np) + coarse_sum(&ca, cb, &ib2, &ia2, pw, np)
            };
            (fine, RICHARDSON_SAFETY * (fine - coarse).abs() / 3.0, true)
        })
        .collect();

    let grads = f.gradient_at_nodes();
    let table = nearfield::table(dim, p, s);
    let full = if symmetric { full_stencil(&lat, &wb, table.m) } else { vec![false; lat.len()] };
    let corr: Vec<f64> = f
        .nodes()
        .par_iter()
        .zip(grads.par_iter())
        .map(|(&id, g)| {
            let mut c = 0.0;
            if wa[id] > 0.0 {
                c += wa[id] * correction(&lat, &table, &wb, &full, id, g, e, p);
            }
            // Distinct regions: average the Taylor corrections taken from
            // either side so that swapping the regions changes nothing.
            if !symmetric {
                if wb[id] > 0.0 {
                    c += wb[id] * correction(&lat, &table, &wa, &full, id, g, e, p);
                }
                c *= 0.5;
            }
            c
        })
        .collect();

    let mut value = 0.0;
    let mut far_err = 0.0;
    let mut near_total = 0.0;
    for &(v, err, far) in &per_pair {
        value += v;
        far_err += err;
        if !far {
            near_total += v.abs();
        }
    }
    for c in &corr {
        value += c;
        near_total += c.abs();
    }
    let near_err = NEAR_ERROR_CONSTANT * lat.h.powf(1.0 - s * (p - 1.0) / p) * near_total;

    // Boundary cells: weight uncertainty times the full row integral, counted
    // for both variables.
    let unc = f.dense_weight_unc();
    let bnodes: Vec<usize> = f.nodes().iter().copied().filter(|&id| unc[id] > 0.0).collect();
    let node_pos = node_positions(f);
    let brows = rows_for(f, s, p, &bnodes, &node_pos, &grads, &wb)?;
    let mut bdry_err = 0.0;
    let mut jmax: f64 = 0.0;
    for (&id, j) in bnodes.iter().zip(&brows) {
        bdry_err += 2.0 * unc[id] * j.abs();
        jmax = jmax.max(j.abs());
    }
    let excluded = f.dropped_volume();
    let excl_err = 2.0 * excluded * jmax;
    Ok(SeminormEstimate {
        value: value.max(0.0),
        err_est: far_err + near_err + bdry_err + excl_err,
        excluded_volume: excluded,
        panels_used: tree.pairs.len(),
    })
}

/// Dense cell index to node index (`usize::MAX` outside).
fn node_positions(f: &GridFunction) -> Vec<usize> {
    let mut pos = vec![usize::MAX; f.lattice().len()];
    for (k, &id) in f.nodes().iter().enumerate() {
        pos[id] = k;
    }
    pos
}

fn rows_for(
    f: &GridFunction,
    s: f64,
    p: f64,
    which: &[usize],
    node_pos: &[usize],
    grads: &[Point],
    wb: &[f64],
) -> Result<Vec<f64>> {
    let lat = *f.lattice();
    let dim = lat.dim;
    let np = dim as f64 + s * p;
    let e = p - s * p;
    let pw = Pow::new(p);
    let vals = f.dense_values();
    let kt = KernelTable::new(&lat, np);
    let table = nearfield::table(dim, p, s);
    let full = vec![false; lat.len()];
    let mut hi = [1usize; 3];
    hi[..dim].copy_from_slice(&lat.dims[..dim]);
    let all = ([0usize; 3], hi);
    Ok(which
        .par_iter()
        .map(|&id| {
            let ix = lat.unravel(id);
            let mut one_hi = [1usize; 3];
            for i in 0..3 {
                one_hi[i] = ix[i] + 1;
            }
            let row = single_row(&lat, &kt, (ix, one_hi), all, wb, vals, pw);
            let g = &grads[node_pos[id]];
            row + correction(&lat, &table, wb, &full, id, g, e, p)
        })
        .collect())
}

/// `sum_j wb_j abs(f_i - f_j)^p K(i - j)` for the single cell `a`.
fn single_row(
    lat: &Lattice,
    kt: &KernelTable,
    a: ([usize; 3], [usize; 3]),
    b: ([usize; 3], [usize; 3]),
    wb: &[f64],
    f: &[f64],
    pw: Pow,
) -> f64 {
    let i = lat.ravel(a.0);
    let unit = OneCell { id: i };
    match pw {
        Pow::One => block_sum_impl(lat, kt, a, b, &unit, wb, f, |d| d.abs()),
        Pow::Two => block_sum_impl(lat, kt, a, b, &unit, wb, f, |d| d * d),
        Pow::Three => block_sum_impl(lat, kt, a, b, &unit, wb, f, |d| d.abs() * d * d),
        Pow::Four => block_sum_impl(lat, kt, a, b, &unit, wb, f, |d| {
            let q = d * d;
            q * q
        }),
        Pow::Gen(p) => block_sum_impl(lat, kt, a, b, &unit, wb, f, |d| d.abs().powf(p)),
    }
}

/// Weight 1 on one cell, used to evaluate a single row with the block kernel.
struct OneCell {
    id: usize,
}

impl std::ops::Index<usize> for OneCell {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        if i == self.id {
            &1.0
        } else {
            &0.0
        }
    }
}

/// Row integrals `J(x) = int_B abs(f(x) - f(y))^p abs(x - y)^(-n-sp) dy` at
/// every node, with `B = mask cap Omega` (all of `Omega` when `mask` is
/// `None`).
pub fn gagliardo_rows(
    f: &GridFunction,
    s: f64,
    p: f64,
    mask: Option<&(dyn Fn(&Point) -> bool + Sync)>,
) -> Result<Vec<f64>> {
    check_sp(s, p)?;
    let lat = *f.lattice();
    let w = f.dense_weights();
    let wb: Vec<f64> = match mask {
        None => w.to_vec(),
        Some(m) => (0..lat.len())
            .map(|id| if w[id] > 0.0 && m(&lat.point(id)) { w[id] } else { 0.0 })
            .collect(),
    };
    let grads = f.gradient_at_nodes();
    let pos = node_positions(f);
    rows_for(f, s, p, f.nodes(), &pos, &grads, &wb)
}

/// Sum `sum_i w_i v_i` with its error: the midpoint-rule term
/// `h^2/24 sum_i w_i laplacian(v)_i` from second differences, plus the
/// boundary weight uncertainty and the dropped volume.
pub(crate) fn weighted_sum(f: &GridFunction, v: &[f64]) -> (f64, f64) {
    let lat = *f.lattice();
    let w = f.dense_weights();
    let unc = f.dense_weight_unc();
    let mut dense = vec![0.0; lat.len()];
    for (&id, &x) in f.nodes().iter().zip(v) {
        dense[id] = x;
    }
    let inside = f.dense_inside();
    let fine: f64 = f.nodes().iter().map(|&id| w[id] * dense[id]).sum();
    let mut curv = 0.0;
    for &id in f.nodes() {
        let ix = lat.unravel(id);
        for a in 0..lat.dim {
            let mut k = [0i64; 3];
            k[a] = 1;
            let fw = lat.offset(ix, &k).filter(|&j| inside[j]);
            k[a] = -1;
            let bw = lat.offset(ix, &k).filter(|&j| inside[j]);
            if let (Some(fw), Some(bw)) = (fw, bw) {
                curv += w[id] * (dense[fw] - 2.0 * dense[id] + dense[bw]) / 24.0;
            }
        }
    }
    let mut bdry = 0.0;
    let mut vmax: f64 = 0.0;
    for (&id, &x) in f.nodes().iter().zip(v) {
        bdry += unc[id] * x.abs();
        vmax = vmax.max(x.abs());
    }
    let err = RICHARDSON_SAFETY * curv.abs() + bdry + f.dropped_volume() * vmax;
    (fine, err)
}

fn root_estimate(sum: f64, err: f64, p: f64, f: &GridFunction) -> SeminormEstimate {
    let value = sum.max(0.0).powf(1.0 / p);
    let err_est = if sum > 0.0 {
        let lo = (sum - err).max(0.0).powf(1.0 / p);
        let hi = (sum + err).powf(1.0 / p);
        (hi - value).max(value - lo)
    } else {
        err.powf(1.0 / p)
    };
    SeminormEstimate {
        value,
        err_est,
        excluded_volume: f.dropped_volume(),
        panels_used: 0,
    }
}

/// `(int abs(f)^p)^(1/p)`.
pub fn lp_norm(f: &GridFunction, p: f64) -> Result<SeminormEstimate> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("p = {p} outside [1, inf)")));
    }
    let v: Vec<f64> = f.values().iter().map(|x| x.abs().powf(p)).collect();
    let (sum, err) = weighted_sum(f, &v);
    Ok(root_estimate(sum, err, p, f))
}

/// `(int abs(grad f)^p)^(1/p)`, using the analytic gradient when present.
pub fn w1p_seminorm(f: &GridFunction, p: f64) -> Result<SeminormEstimate> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("p = {p} outside [1, inf)")));
    }
    let g = f.gradient_at_nodes();
    let v: Vec<f64> = g.iter().map(|x| crate::geometry::norm(x).powf(p)).collect();
    let (sum, err) = weighted_sum(f, &v);
    Ok(root_estimate(sum, err, p, f))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::geometry::{catalog_domain, ImplicitDomain};
    use crate::quadrature::gauss::integrate;
    use crate::quadrature::grid::sample;

    fn interval_exact(s: f64, p: f64) -> f64 {
        let e = p - s * p;
        2.0 / (e * (e + 1.0))
    }

    /// `int_Omega int_0^2pi abs(cos t)^p R(x, t)^e / e dt dx` for `f = x_1`
    /// on a convex domain, with `R` the distance to the boundary along the
    /// ray; `breaks` lists the angles where the integrand has kinks.
    fn polar_oracle(
        s: f64,
        p: f64,
        outer: impl Fn(&dyn Fn(f64, f64) -> f64) -> f64,
        ray: impl Fn(f64, f64, f64) -> f64,
        breaks: impl Fn(f64, f64) -> Vec<f64>,
    ) -> f64 {
        let e = p - s * p;
        let inner = |x: f64, y: f64| {
            let mut b = breaks(x, y);
            b.extend([0.0, 0.5 * PI, PI, 1.5 * PI, 2.0 * PI]);
            b.sort_by(|a, c| a.partial_cmp(c).unwrap());
            b.windows(2)
                .filter(|w| w[1] > w[0])
                .map(|w| integrate(|t| t.cos().abs().powf(p) * ray(x, y, t).powf(e) / e, w[0], w[1], 2))
                .sum()
        };
        outer(&inner)
    }

    fn disk_oracle(s: f64, p: f64) -> f64 {
        polar_oracle(
            s,
            p,
            |g| {
                integrate(
                    |r| r * integrate(|a| g(r * a.cos(), r * a.sin()), 0.0, 2.0 * PI, 16),
                    0.0,
                    1.0,
                    24,
                )
            },
            |x, y, t| {
                let b = x * t.cos() + y * t.sin();
                -b + (b * b + 1.0 - x * x - y * y).sqrt()
            },
            |_, _| Vec::new(),
        )
    }

    fn square_oracle(s: f64, p: f64) -> f64 {
        polar_oracle(
            s,
            p,
            |g| integrate(|x| integrate(|y| g(x, y), 0.0, 1.0, 24), 0.0, 1.0, 24),
            |x, y, t| {
                let (c, sn) = (t.cos(), t.sin());
                let tx = if c > 0.0 { (1.0 - x) / c } else if c < 0.0 { -x / c } else { f64::INFINITY };
                let ty = if sn > 0.0 { (1.0 - y) / sn } else if sn < 0.0 { -y / sn } else { f64::INFINITY };
                tx.min(ty)
            },
            |x, y| {
                [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]
                    .iter()
                    .map(|&(cx, cy)| (cy - y).atan2(cx - x).rem_euclid(2.0 * PI))
                    .collect()
            },
        )
    }

    fn scaled_interval(t: f64) -> ImplicitDomain {
        ImplicitDomain::new(
            "interval-scaled",
            1,
            BBox::new([0.0; 3], [t, 0.0, 0.0]),
            t,
            Some(t),
            move |x| x[0] > 0.0 && x[0] < t,
        )
    }

    #[test]
    fn constant_gives_exact_zero() {
        for name in ["interval", "disk", "slit-disk"] {
            let g = sample(&catalog_domain(name).unwrap(), "const:2.5", 1.0 / 16.0).unwrap();
            let r = gagliardo(&g, 0.7, 2.0, None).unwrap();
            assert_eq!(r.value, 0.0, "{name}");
        }
    }

    #[test]
    fn interval_closed_form_within_estimate() {
        let d = catalog_domain("interval").unwrap();
        for s in [0.5, 0.75, 0.9] {
            for p in [2.0, 3.0] {
                let exact = interval_exact(s, p);
                for k in 6..=8 {
                    let g = sample(&d, "coord:1", 0.5f64.powi(k)).unwrap();
                    let r = gagliardo(&g, s, p, None).unwrap();
                    let err = (r.value - exact).abs();
                    assert!(err <= r.err_est, "s={s} p={p} k={k}: {} vs {exact}, est {}", r.value, r.err_est);
                    if k == 8 {
                        assert!(err < 0.01 * exact);
                    }
                }
            }
        }
    }

    #[test]
    fn polar_oracle_reproduces_disk_closed_form() {
        // At s = 1/2, p = 2 the inner integral is pi(1 - |x|^2)/2 (ray
        // chords), so the disk value is 8 pi / 3.
        let v = disk_oracle(0.5, 2.0);
        assert!((v - 8.0 * PI / 3.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn planar_domains_match_polar_oracle() {
        let h = 1.0 / 32.0;
        for (name, oracle) in [("disk", disk_oracle as fn(f64, f64) -> f64), ("square", square_oracle)] {
            let g = sample(&catalog_domain(name).unwrap(), "coord:1", h).unwrap();
            for (s, p) in [(0.5, 2.0), (0.75, 2.0), (0.9, 2.0), (0.5, 3.0)] {
                let exact = oracle(s, p);
                let r = gagliardo(&g, s, p, None).unwrap();
                let err = (r.value - exact).abs();
                assert!(err <= r.err_est, "{name} s={s} p={p}: {} vs {exact}, est {}", r.value, r.err_est);
                assert!(err < 0.01 * exact, "{name} s={s} p={p}");
            }
        }
    }

    #[test]
    fn scaling_law_on_intervals() {
        let (s, p) = (0.6, 2.5);
        let e = p - s * p;
        let base = gagliardo(&sample(&scaled_interval(1.0), "coord:1", 1.0 / 128.0).unwrap(), s, p, None).unwrap();
        for t in [0.5, 2.0, 3.0] {
            let g = sample(&scaled_interval(t), "coord:1", t / 128.0).unwrap();
            let r = gagliardo(&g, s, p, None).unwrap();
            // n = 1: t^(2n) t^-(n+sp) from the measure and kernel, t^p from f = x.
            let expect = base.value * t.powf(1.0 + e);
            assert!((r.value - expect).abs() < 1e-9 * expect, "t={t}");
        }
    }

    #[test]
    fn region_swap_and_monotonicity() {
        let g = sample(&catalog_domain("disk").unwrap(), "bump", 1.0 / 24.0).unwrap();
        let a = BBox::new([-1.0, -1.0, 0.0], [0.2, 0.5, 0.0]);
        let b = BBox::new([-0.3, -0.6, 0.0], [1.0, 1.0, 0.0]);
        let ab = gagliardo(&g, 0.6, 2.0, Some(&(a, b))).unwrap();
        let ba = gagliardo(&g, 0.6, 2.0, Some(&(b, a))).unwrap();
        assert!((ab.value - ba.value).abs() < 1e-12 * ab.value);
        let full = gagliardo(&g, 0.6, 2.0, None).unwrap();
        let aa = gagliardo(&g, 0.6, 2.0, Some(&(a, a))).unwrap();
        assert!(ab.value > 0.0 && ab.value <= full.value);
        assert!(aa.value > 0.0 && aa.value <= full.value);
        // The whole bounding box as a region is the unrestricted integral.
        let bb = *g.domain().bbox();
        let same = gagliardo(&g, 0.6, 2.0, Some(&(bb, bb))).unwrap();
        assert!((same.value - full.value).abs() < 1e-9 * full.value);
    }

    #[test]
    fn rows_sum_to_the_double_integral() {
        let g = sample(&catalog_domain("disk").unwrap(), "coord:1", 1.0 / 16.0).unwrap();
        let rows = gagliardo_rows(&g, 0.75, 2.0, None).unwrap();
        let total: f64 = rows.iter().zip(g.weights()).map(|(j, w)| j * w).sum();
        let r = gagliardo(&g, 0.75, 2.0, None).unwrap();
        assert!((total - r.value).abs() < 1e-9 * r.value);
    }

    #[test]
    fn parameter_range_is_checked() {
        let g = sample(&catalog_domain("interval").unwrap(), "coord:1", 0.1).unwrap();
        assert!(matches!(gagliardo(&g, 0.0, 2.0, None), Err(Error::Parameter(_))));
        assert!(matches!(gagliardo(&g, 1.0, 2.0, None), Err(Error::Parameter(_))));
        assert!(matches!(gagliardo(&g, 0.5, 0.5, None), Err(Error::Parameter(_))));
        assert!(matches!(lp_norm(&g, f64::INFINITY), Err(Error::Parameter(_))));
    }

    #[test]
    fn lebesgue_norms_on_the_square() {
        let d = catalog_domain("square").unwrap();
        let h = 1.0 / 64.0;
        let one = lp_norm(&sample(&d, "const", h).unwrap(), 2.0).unwrap();
        assert!((one.value - 1.0).abs() <= (2.0 * h * 4.0).min(one.err_est.max(1e-15)));
        let x = lp_norm(&sample(&d, "coord:1", h).unwrap(), 2.0).unwrap();
        let exact = (1.0f64 / 3.0).sqrt();
        assert!((x.value - exact).abs() <= x.err_est);
        assert!((x.value - 0.5774).abs() < 1e-4);
        let zero = lp_norm(&sample(&d, "const:0", h).unwrap(), 3.0).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn sobolev_seminorm_on_the_square() {
        let d = catalog_domain("square").unwrap();
        let h = 1.0 / 32.0;
        let a = w1p_seminorm(&sample(&d, "coord:1", h).unwrap(), 2.0).unwrap();
        assert!((a.value - 1.0).abs() <= a.err_est.max(1e-12));
        let b = w1p_seminorm(&sample(&d, "affine:1,1,0", h).unwrap(), 2.0).unwrap();
        assert!((b.value - 2f64.sqrt()).abs() <= b.err_est.max(1e-12));
        let c = w1p_seminorm(&sample(&d, "const", h).unwrap(), 2.0).unwrap();
        assert_eq!(c.value, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn interval_estimate_brackets_closed_form(s in 0.1f64..0.95, p in 1.0f64..4.0) {
            let g = sample(&catalog_domain("interval").unwrap(), "coord:1", 1.0 / 64.0).unwrap();
            let r = gagliardo(&g, s, p, None).unwrap();
            prop_assert!(r.value >= 0.0 && r.err_est >= 0.0);
            prop_assert!((r.value - interval_exact(s, p)).abs() <= r.err_est);
        }

        #[test]
        fn region_value_is_symmetric(x0 in -1.0f64..0.5, x1 in -0.5f64..1.0, y0 in -1.0f64..0.0) {
            let g = sample(&catalog_domain("square").unwrap(), "bump", 1.0 / 12.0).unwrap();
            let a = BBox::new([x0, y0, 0.0], [x0 + 0.8, y0 + 1.2, 0.0]);
            let b = BBox::new([x1, -1.0, 0.0], [x1 + 0.5, 1.0, 0.0]);
            let ab = gagliardo(&g, 0.5, 2.0, Some(&(a, b))).unwrap().value;
            let ba = gagliardo(&g, 0.5, 2.0, Some(&(b, a))).unwrap().value;
            prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1e-300));
        }
    }
}
