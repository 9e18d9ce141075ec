//! Cell-centred grids over a bounding box and sampled functions.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::functions::{BoundFunction, FunctionSpec};
use crate::geometry::{ImplicitDomain, Point};
use crate::{Error, Result};

/// Cell-centred lattice: cell `i` is `origin + h [i, i + 1]` with node at its
/// centre. Arrays over a lattice are stored x-fastest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lattice {
    pub origin: Point,
    pub h: f64,
    pub dims: [usize; 3],
    pub dim: usize,
}

impl Lattice {
    /// Lattice anchored at `origin` covering `[origin, hi]`.
    pub fn covering(origin: Point, hi: Point, h: f64, dim: usize) -> Self {
        let mut dims = [1; 3];
        for i in 0..dim {
            dims[i] = (((hi[i] - origin[i]) / h) - 1e-9).ceil().max(1.0) as usize;
        }
        Lattice { origin, h, dims, dim }
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn unravel(&self, id: usize) -> [usize; 3] {
        let (nx, ny) = (self.dims[0], self.dims[1]);
        [id % nx, (id / nx) % ny, id / (nx * ny)]
    }

    pub fn ravel(&self, ix: [usize; 3]) -> usize {
        (ix[2] * self.dims[1] + ix[1]) * self.dims[0] + ix[0]
    }

    /// Neighbouring index at signed offset, if inside the lattice.
    pub fn offset(&self, ix: [usize; 3], k: &[i64; 3]) -> Option<usize> {
        let mut out = [0usize; 3];
        for i in 0..3 {
            let v = ix[i] as i64 + k[i];
            if v < 0 || v >= self.dims[i] as i64 {
                return None;
            }
            out[i] = v as usize;
        }
        Some(self.ravel(out))
    }

    pub fn point(&self, id: usize) -> Point {
        let ix = self.unravel(id);
        let mut p = [0.0; 3];
        for (i, v) in p.iter_mut().enumerate().take(self.dim) {
            *v = self.origin[i] + self.h * (ix[i] as f64 + 0.5);
        }
        p
    }

    /// Cell containing `x`, if any.
    pub fn locate(&self, x: &Point) -> Option<[usize; 3]> {
        let mut ix = [0usize; 3];
        for i in 0..self.dim {
            let t = ((x[i] - self.origin[i]) / self.h).floor();
            if t < 0.0 || t >= self.dims[i] as f64 {
                return None;
            }
            ix[i] = t as usize;
        }
        Some(ix)
    }
}

/// Subsamples per axis used for boundary-cell volume fractions.
fn subsamples(dim: usize) -> usize {
    if dim <= 2 {
        8
    } else {
        4
    }
}

/// Volume weights of the cells of `lat` inside `domain`.
///
/// Returns `(weight, inside, uncertainty, dropped)`: `weight` and
/// `uncertainty` are per cell; partial cells whose centre is outside pass
/// their volume to the nearest inside neighbour, and `dropped` is the volume
/// that found no neighbour.
pub(crate) fn cell_weights(
    domain: &ImplicitDomain,
    lat: &Lattice,
) -> (Vec<f64>, Vec<bool>, Vec<f64>, f64) {
    let dim = lat.dim;
    let vol = lat.cell_volume();
    let reach = 0.5 * lat.h * (dim as f64).sqrt() * (1.0 + 1e-9);
    let sub = subsamples(dim);
    let per_cell: Vec<(bool, f64, bool)> = (0..lat.len())
        .into_par_iter()
        .map(|id| {
            let c = lat.point(id);
            let inside = domain.contains(&c);
            if domain.dist_to_boundary(&c) > reach {
                return (inside, if inside { 1.0 } else { 0.0 }, false);
            }
            let total = sub.pow(dim as u32);
            let mut hits = 0usize;
            for m in 0..total {
                let mut x = c;
                let mut rem = m;
                for v in x.iter_mut().take(dim) {
                    let t = (rem % sub) as f64;
                    rem /= sub;
                    *v += lat.h * ((t + 0.5) / sub as f64 - 0.5);
                }
                if domain.contains(&x) {
                    hits += 1;
                }
            }
            let frac = hits as f64 / total as f64;
            (inside, frac, frac > 0.0 && frac < 1.0)
        })
        .collect();
    let inside: Vec<bool> = per_cell.iter().map(|c| c.0).collect();
    let mut weight = vec![0.0; lat.len()];
    let mut unc = vec![0.0; lat.len()];
    let mut dropped = 0.0;
    let near = super::nearfield::offsets(dim, 1);
    for (id, &(ins, frac, partial)) in per_cell.iter().enumerate() {
        if ins {
            weight[id] += frac * vol;
            if partial {
                unc[id] += vol / sub as f64;
            }
            continue;
        }
        if frac == 0.0 {
            continue;
        }
        let ix = lat.unravel(id);
        let c = lat.point(id);
        let target = near
            .iter()
            .filter_map(|k| lat.offset(ix, k))
            .filter(|&j| inside[j])
            .min_by(|&a, &b| {
                let (pa, pb) = (lat.point(a), lat.point(b));
                crate::geometry::dist(&pa, &c)
                    .total_cmp(&crate::geometry::dist(&pb, &c))
                    .then(a.cmp(&b))
            });
        match target {
            Some(j) => {
                weight[j] += frac * vol;
                unc[j] += frac * vol;
            }
            None => dropped += frac * vol,
        }
    }
    (weight, inside, unc, dropped)
}

/// A function sampled on the inside nodes of a lattice.
#[derive(Clone, Debug)]
pub struct GridFunction {
    domain: ImplicitDomain,
    lattice: Lattice,
    label: String,
    /// Per cell; zero outside.
    weight: Vec<f64>,
    /// Per cell; zero outside.
    value: Vec<f64>,
    inside: Vec<bool>,
    weight_unc: Vec<f64>,
    nodes: Vec<usize>,
    grad: Option<Vec<Point>>,
    hajlasz_g: Option<Vec<f64>>,
    dropped_volume: f64,
}

/// Sample a catalog function on the cell centres of a grid of spacing `h`
/// anchored at the bounding-box corner.
pub fn sample(domain: &ImplicitDomain, f: &str, h: f64) -> Result<GridFunction> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Parameter(format!("grid spacing must be positive, got {h}")));
    }
    let bb = domain.bbox();
    let lat = Lattice::covering(bb.lo, bb.hi, h, domain.dim());
    sample_on(domain, f, lat)
}

/// Sample a catalog function on a given lattice.
pub fn sample_on(domain: &ImplicitDomain, f: &str, lat: Lattice) -> Result<GridFunction> {
    let func = FunctionSpec::parse(f)?.bind(domain)?;
    sample_bound(domain, &func, f, lat)
}

pub(crate) fn sample_bound(
    domain: &ImplicitDomain,
    func: &BoundFunction,
    label: &str,
    lat: Lattice,
) -> Result<GridFunction> {
    let mut g = GridFunction::empty(domain, lat, label)?;
    let vals: Vec<(f64, Option<Point>)> = g
        .nodes
        .par_iter()
        .map(|&id| {
            let x = lat.point(id);
            (func.eval(&x), func.grad(&x))
        })
        .collect();
    let analytic = vals.iter().all(|v| v.1.is_some());
    for (&id, (v, _)) in g.nodes.iter().zip(&vals) {
        g.value[id] = *v;
    }
    if analytic {
        g.grad = Some(vals.iter().map(|v| v.1.unwrap()).collect());
    }
    g.hajlasz_g = func.hajlasz_g().map(|c| vec![c; g.nodes.len()]);
    Ok(g)
}

impl GridFunction {
    /// Zero function on the inside nodes of `lat`.
    pub fn empty(domain: &ImplicitDomain, lat: Lattice, label: &str) -> Result<Self> {
        let (weight, inside, weight_unc, dropped_volume) = cell_weights(domain, &lat);
        let nodes: Vec<usize> = (0..lat.len()).filter(|&i| inside[i]).collect();
        if nodes.is_empty() {
            return Err(Error::Resolution(format!(
                "no grid node of spacing {} inside {}",
                lat.h,
                domain.name()
            )));
        }
        Ok(GridFunction {
            domain: domain.clone(),
            lattice: lat,
            label: label.to_string(),
            value: vec![0.0; lat.len()],
            weight,
            inside,
            weight_unc,
            nodes,
            grad: None,
            hajlasz_g: None,
            dropped_volume,
        })
    }

    /// Zero function on a union of disjoint open intervals of the real line,
    /// with exact cell weights. The lattice starts at the first interval;
    /// when there is only one interval the spacing is shrunk to at most `h`
    /// so that both ends fall on cell faces.
    pub fn on_intervals(intervals: &[(f64, f64)], h: f64, label: &str) -> Result<Self> {
        let iv: Vec<(f64, f64)> = intervals.iter().copied().filter(|(a, b)| b > a).collect();
        if iv.is_empty() || !(h > 0.0) {
            return Err(Error::Resolution(format!("no interval of positive length for {label}")));
        }
        let lo = iv.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
        let hi = iv.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
        let h = if iv.len() == 1 { (hi - lo) / ((hi - lo) / h).ceil().max(1.0) } else { h };
        let lat = Lattice::covering([lo, 0.0, 0.0], [hi, 0.0, 0.0], h, 1);
        let total: f64 = iv.iter().map(|(a, b)| b - a).sum();
        let members = iv.clone();
        let domain = ImplicitDomain::new(
            label,
            1,
            crate::geometry::BBox::new([lo, 0.0, 0.0], [hi, 0.0, 0.0]),
            hi - lo,
            Some(total),
            move |x| members.iter().any(|&(a, b)| x[0] > a && x[0] < b),
        );
        let n = lat.len();
        let mut weight = vec![0.0; n];
        let mut inside = vec![false; n];
        let mut unc = vec![0.0; n];
        let mut dropped = 0.0;
        let overlap = |i: usize| -> f64 {
            let (a, b) = (lo + h * i as f64, lo + h * (i + 1) as f64);
            iv.iter().map(|&(u, v)| (b.min(v) - a.max(u)).max(0.0)).sum()
        };
        for (i, ins) in inside.iter_mut().enumerate() {
            *ins = domain.contains(&lat.point(i));
        }
        for i in 0..n {
            let m = overlap(i);
            if inside[i] {
                weight[i] += m;
            } else if m > 1e-14 * h {
                let left = i.checked_sub(1).filter(|&j| inside[j]);
                let right = Some(i + 1).filter(|&j| j < n && inside[j]);
                match left.or(right) {
                    Some(j) => {
                        weight[j] += m;
                        unc[j] += m;
                    }
                    None => dropped += m,
                }
            }
        }
        let nodes: Vec<usize> = (0..n).filter(|&i| inside[i]).collect();
        if nodes.is_empty() {
            return Err(Error::Resolution(format!("no grid node of spacing {h} inside {label}")));
        }
        Ok(GridFunction {
            domain,
            lattice: lat,
            label: label.to_string(),
            value: vec![0.0; n],
            weight,
            inside,
            weight_unc: unc,
            nodes,
            grad: None,
            hajlasz_g: None,
            dropped_volume: dropped,
        })
    }

    /// Same grid and weights with new node values (in node order).
    pub fn with_values(&self, values: &[f64], label: &str) -> Self {
        assert_eq!(values.len(), self.nodes.len());
        let mut g = self.clone();
        g.label = label.to_string();
        g.value.iter_mut().for_each(|v| *v = 0.0);
        for (&id, &v) in g.nodes.iter().zip(values) {
            g.value[id] = v;
        }
        g.grad = None;
        g.hajlasz_g = None;
        g
    }

    pub fn with_grad(mut self, grad: Vec<Point>) -> Self {
        assert_eq!(grad.len(), self.nodes.len());
        self.grad = Some(grad);
        self
    }

    pub fn with_hajlasz_g(mut self, g: Vec<f64>) -> Self {
        assert_eq!(g.len(), self.nodes.len());
        self.hajlasz_g = Some(g);
        self
    }

    /// Same grid with every cell outside `keep` given weight zero (nodes are
    /// kept so the lattice stays shared).
    pub fn masked(&self, keep: impl Fn(&Point) -> bool + Sync) -> Self {
        let mut g = self.clone();
        let lat = self.lattice;
        let drop: Vec<bool> = g.nodes.par_iter().map(|&id| !keep(&lat.point(id))).collect();
        for (&id, d) in g.nodes.iter().zip(drop) {
            if d {
                g.weight[id] = 0.0;
                g.weight_unc[id] = 0.0;
            }
        }
        g
    }

    pub fn domain(&self) -> &ImplicitDomain {
        &self.domain
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn h(&self) -> f64 {
        self.lattice.h
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Dense cell indices of the nodes.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_point(&self, k: usize) -> Point {
        self.lattice.point(self.nodes[k])
    }

    pub fn node_value(&self, k: usize) -> f64 {
        self.value[self.nodes[k]]
    }

    pub fn node_weight(&self, k: usize) -> f64 {
        self.weight[self.nodes[k]]
    }

    pub fn values(&self) -> Vec<f64> {
        self.nodes.iter().map(|&i| self.value[i]).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.nodes.iter().map(|&i| self.weight[i]).collect()
    }

    pub(crate) fn dense_values(&self) -> &[f64] {
        &self.value
    }

    pub(crate) fn dense_weights(&self) -> &[f64] {
        &self.weight
    }

    pub(crate) fn dense_inside(&self) -> &[bool] {
        &self.inside
    }

    pub(crate) fn dense_weight_unc(&self) -> &[f64] {
        &self.weight_unc
    }

    pub fn is_inside_cell(&self, id: usize) -> bool {
        self.inside[id]
    }

    pub fn dense_value(&self, id: usize) -> f64 {
        self.value[id]
    }

    pub fn grad(&self) -> Option<&[Point]> {
        self.grad.as_deref()
    }

    pub fn hajlasz_g(&self) -> Option<&[f64]> {
        self.hajlasz_g.as_deref()
    }

    /// Volume of partial cells that could not be assigned to a node.
    pub fn dropped_volume(&self) -> f64 {
        self.dropped_volume
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|&i| self.weight[i]).sum()
    }

    /// Gradient at every node: analytic when present, otherwise central
    /// differences, one-sided where a neighbour is outside.
    pub fn gradient_at_nodes(&self) -> Vec<Point> {
        if let Some(g) = &self.grad {
            return g.clone();
        }
        self.fd_gradient()
    }

    /// Finite-difference gradient at every node, ignoring analytic data.
    pub fn fd_gradient(&self) -> Vec<Point> {
        let lat = self.lattice;
        self.nodes
            .par_iter()
            .map(|&id| {
                let ix = lat.unravel(id);
                let mut g = [0.0; 3];
                for (a, gv) in g.iter_mut().enumerate().take(lat.dim) {
                    let mut k = [0i64; 3];
                    k[a] = 1;
                    let fw = lat.offset(ix, &k).filter(|&j| self.inside[j]);
                    k[a] = -1;
                    let bw = lat.offset(ix, &k).filter(|&j| self.inside[j]);
                    *gv = match (bw, fw) {
                        (Some(b), Some(f)) => (self.value[f] - self.value[b]) / (2.0 * lat.h),
                        (None, Some(f)) => (self.value[f] - self.value[id]) / lat.h,
                        (Some(b), None) => (self.value[id] - self.value[b]) / lat.h,
                        (None, None) => 0.0,
                    };
                }
                g
            })
            .collect()
    }

    /// Value at `x` by multilinear interpolation when every corner of the
    /// surrounding node cell is inside, otherwise a least-squares linear fit
    /// over inside nodes within two cells, falling back to the nearest node.
    /// `None` when no node lies within two cells.
    pub fn interpolate(&self, x: &Point) -> Option<f64> {
        let lat = &self.lattice;
        let dim = lat.dim;
        let mut base = [0i64; 3];
        let mut t = [0.0; 3];
        for i in 0..dim {
            let u = (x[i] - lat.origin[i]) / lat.h - 0.5;
            base[i] = u.floor() as i64;
            t[i] = u - base[i] as f64;
        }
        let corner_count = 1usize << dim;
        let mut acc = 0.0;
        let mut ok = true;
        for m in 0..corner_count {
            let mut w = 1.0;
            let mut ix = [0usize; 3];
            for i in 0..dim {
                let b = (m >> i) & 1;
                let v = base[i] + b as i64;
                if v < 0 || v >= lat.dims[i] as i64 {
                    ok = false;
                    break;
                }
                ix[i] = v as usize;
                w *= if b == 1 { t[i] } else { 1.0 - t[i] };
            }
            if !ok {
                break;
            }
            let id = lat.ravel(ix);
            if !self.inside[id] {
                ok = false;
                break;
            }
            acc += w * self.value[id];
        }
        if ok {
            return Some(acc);
        }
        self.local_fit(x, base)
    }

    /// Leading error of the multilinear interpolant at `x`,
    /// `-sum_i t_i (1 - t_i) D_i^2 f / 2` with `D_i^2` the second difference
    /// along axis `i` averaged over the cell corners that have both
    /// neighbours inside. `None` where `interpolate` does not use the
    /// multilinear rule.
    pub fn interpolation_defect(&self, x: &Point) -> Option<f64> {
        let lat = &self.lattice;
        let dim = lat.dim;
        let mut base = [0i64; 3];
        let mut t = [0.0; 3];
        for i in 0..dim {
            let u = (x[i] - lat.origin[i]) / lat.h - 0.5;
            base[i] = u.floor() as i64;
            t[i] = u - base[i] as f64;
        }
        let mut corners = Vec::with_capacity(1 << dim);
        for m in 0..(1usize << dim) {
            let mut ix = [0usize; 3];
            for i in 0..dim {
                let v = base[i] + ((m >> i) & 1) as i64;
                if v < 0 || v >= lat.dims[i] as i64 {
                    return None;
                }
                ix[i] = v as usize;
            }
            if !self.inside[lat.ravel(ix)] {
                return None;
            }
            corners.push(ix);
        }
        let mut defect = 0.0;
        for i in 0..dim {
            let (mut sum, mut count) = (0.0, 0usize);
            for &ix in &corners {
                let mut k = [0i64; 3];
                k[i] = 1;
                let fw = lat.offset(ix, &k).filter(|&j| self.inside[j]);
                k[i] = -1;
                let bw = lat.offset(ix, &k).filter(|&j| self.inside[j]);
                if let (Some(fw), Some(bw)) = (fw, bw) {
                    sum += self.value[fw] - 2.0 * self.value[lat.ravel(ix)] + self.value[bw];
                    count += 1;
                }
            }
            if count > 0 {
                defect -= 0.5 * t[i] * (1.0 - t[i]) * sum / count as f64;
            }
        }
        Some(defect)
    }

    fn local_fit(&self, x: &Point, base: [i64; 3]) -> Option<f64> {
        let lat = &self.lattice;
        let dim = lat.dim;
        let mut pts = Vec::new();
        for k in super::nearfield::offsets(dim, 2) {
            let mut ix = [0usize; 3];
            let mut valid = true;
            for i in 0..3 {
                let v = if i < dim { base[i] + k[i] } else { 0 };
                if v < 0 || v >= lat.dims[i] as i64 {
                    valid = false;
                    break;
                }
                ix[i] = v as usize;
            }
            if !valid {
                continue;
            }
            let id = lat.ravel(ix);
            if self.inside[id] {
                pts.push((lat.point(id), self.value[id]));
            }
        }
        if pts.is_empty() {
            return None;
        }
        let nearest = pts
            .iter()
            .min_by(|a, b| {
                crate::geometry::dist(&a.0, x).total_cmp(&crate::geometry::dist(&b.0, x))
            })
            .map(|p| p.1);
        if pts.len() <= dim + 1 {
            return nearest;
        }
        // Normal equations for v = c + sum_i a_i (y_i - x_i).
        let m = dim + 1;
        let mut ata = [[0.0f64; 4]; 4];
        let mut atb = [0.0f64; 4];
        for (p, v) in &pts {
            let mut row = [1.0, 0.0, 0.0, 0.0];
            for i in 0..dim {
                row[i + 1] = (p[i] - x[i]) / lat.h;
            }
            for a in 0..m {
                atb[a] += row[a] * v;
                for b in 0..m {
                    ata[a][b] += row[a] * row[b];
                }
            }
        }
        match solve(&mut ata, &mut atb, m) {
            Some(sol) => Some(sol[0]),
            None => nearest,
        }
    }

    /// Write `x, y, value` rows (columns up to the dimension).
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let names = ["x", "y", "z"];
        writeln!(out, "{},value", names[..self.dim()].join(","))?;
        for k in 0..self.len() {
            let p = self.node_point(k);
            let coords: Vec<String> = p[..self.dim()].iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{},{}", coords.join(","), self.node_value(k))?;
        }
        Ok(())
    }
}

/// Gaussian elimination with partial pivoting on the leading `m x m` block.
fn solve(a: &mut [[f64; 4]; 4], b: &mut [f64; 4], m: usize) -> Option<[f64; 4]> {
    for c in 0..m {
        let piv = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..m {
            let f = a[r][c] / a[c][c];
            for k in c..m {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = [0.0; 4];
    for c in (0..m).rev() {
        let mut s = b[c];
        for k in c + 1..m {
            s -= a[c][k] * x[k];
        }
        x[c] = s / a[c][c];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::catalog_domain;

    #[test]
    fn constant_on_disk() {
        let d = catalog_domain("disk").unwrap();
        let g = sample(&d, "const", 0.1).unwrap();
        assert!(g.values().iter().all(|&v| v == 1.0));
        assert!(g.grad().unwrap().iter().all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn coordinate_on_square_is_exact() {
        let d = catalog_domain("square").unwrap();
        let g = sample(&d, "coord:1", 0.25).unwrap();
        assert!((9..=25).contains(&g.len()));
        for k in 0..g.len() {
            assert_eq!(g.node_value(k), g.node_point(k)[0]);
        }
    }

    #[test]
    fn truncated_power_peaks_at_innermost_node() {
        let d = catalog_domain("disk").unwrap();
        let g = sample(&d, "powneg:0.25", 0.05).unwrap();
        let vals = g.values();
        assert!(vals.iter().all(|v| v.is_finite()));
        let (imax, _) =
            vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let rmin = (0..g.len())
            .map(|k| crate::geometry::norm(&g.node_point(k)))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(crate::geometry::norm(&g.node_point(imax)), rmin);
    }

    #[test]
    fn no_nodes_is_a_resolution_error() {
        let d = catalog_domain("cusp-exterior:2").unwrap();
        let lat = Lattice::covering([2.0, 2.0, 0.0], [3.0, 3.0, 0.0], 0.5, 2);
        assert!(matches!(sample_on(&d, "const", lat), Err(Error::Resolution(_))));
    }

    #[test]
    fn weights_recover_area() {
        for (name, h) in [("disk", 1.0 / 64.0), ("annulus", 1.0 / 64.0), ("cusp-exterior:2", 1.0 / 128.0)] {
            let d = catalog_domain(name).unwrap();
            let g = sample(&d, "const", h).unwrap();
            let a = g.total_weight() + g.dropped_volume();
            let exact = d.area_exact().unwrap();
            let unc: f64 = g.dense_weight_unc().iter().sum();
            assert!((a - exact).abs() < unc, "{name}: {a} vs {exact}");
        }
    }

    #[test]
    fn finite_differences_are_second_order() {
        let d = catalog_domain("disk").unwrap();
        let mut errs = Vec::new();
        for h in [0.02, 0.01, 0.005] {
            let g = sample(&d, "bump", h).unwrap();
            let exact = g.grad().unwrap().to_vec();
            let fd = g.fd_gradient();
            let mut e: f64 = 0.0;
            for k in 0..g.len() {
                if crate::geometry::norm(&g.node_point(k)) < 0.8 {
                    for i in 0..2 {
                        e = e.max((fd[k][i] - exact[k][i]).abs());
                    }
                }
            }
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
    }

    #[test]
    fn interpolation_defect_corrects_quadratics() {
        let d = catalog_domain("disk").unwrap();
        let h = 0.05;
        let lat = Lattice::covering(d.bbox().lo, d.bbox().hi, h, 2);
        let base = GridFunction::empty(&d, lat, "q").unwrap();
        let q = |x: &Point| x[0] * x[0] - 0.5 * x[1] * x[1] + x[0] * x[1];
        let vals: Vec<f64> = (0..base.len()).map(|k| q(&base.node_point(k))).collect();
        let g = base.with_values(&vals, "q");
        for x in [[0.113, 0.271, 0.0], [-0.4, 0.05, 0.0]] {
            let v = g.interpolate(&x).unwrap();
            let dv = g.interpolation_defect(&x).unwrap();
            assert!((v - q(&x)).abs() > 1e-5);
            assert!((v + dv - q(&x)).abs() < 1e-12);
        }
        assert!(g.interpolation_defect(&[0.999, 0.0, 0.0]).is_none());
    }

    #[test]
    fn interpolation_reproduces_linear_functions() {
        let d = catalog_domain("disk").unwrap();
        let g = sample(&d, "affine:0.5,-2,1", 0.05).unwrap();
        for x in [[0.1, 0.2, 0.0], [0.97, 0.0, 0.0], [-0.3, 0.93, 0.0]] {
            let v = g.interpolate(&x).unwrap();
            assert!((v - (0.5 * x[0] - 2.0 * x[1] + 1.0)).abs() < 1e-9);
        }
        assert!(g.interpolate(&[3.0, 3.0, 0.0]).is_none());
    }
}
