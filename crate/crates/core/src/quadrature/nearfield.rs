//! Near-diagonal correction tables.
//!
//! Around a node x with local slope g, the row integrand is
//! `abs(g . (y - x))^p abs(y - x)^(-n - s p)`. Splitting `dy` with the
//! multilinear hat functions of the grid and scaling `y - x = h u`, the
//! contribution of the hat at offset k is `h^e abs(g)^p A_k(g/abs(g))` with
//! `e = p - s p` and
//!
//! `A_k(w) = int_{S^(n-1)} abs(w . sigma)^p int_0^inf r^(e-1) hat(r sigma - k) dr dsigma`.
//!
//! The far-field sum uses the midpoint value `M_k = abs(w . k)^p abs(k)^(-n-sp)`
//! instead, so each node receives `sum_k (A_k - M_k) * (occupancy of k)`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use super::gauss::gauss_legendre;

/// `int_0^inf r^(e-1) prod_i hat(r sigma_i - k_i) dr`, exact.
pub fn radial_hat(k: &[i64], sigma: &[f64], e: f64) -> f64 {
    let n = k.len();
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut breaks = Vec::with_capacity(3 * n + 2);
    for i in 0..n {
        let (ki, si) = (k[i] as f64, sigma[i]);
        if si.abs() < 1e-300 {
            if k[i] != 0 {
                return 0.0;
            }
            continue;
        }
        let (a, b) = ((ki - 1.0) / si, (ki + 1.0) / si);
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
        breaks.push(ki / si);
    }
    if !(hi > lo) {
        return 0.0;
    }
    breaks.retain(|&b| b > lo && b < hi);
    breaks.push(lo);
    breaks.push(hi);
    breaks.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (r0, r1) = (w[0], w[1]);
        if r1 <= r0 {
            continue;
        }
        let mid = 0.5 * (r0 + r1);
        // Product of linear factors a + b r on this piece.
        let mut poly = [1.0, 0.0, 0.0, 0.0];
        let mut deg = 0;
        for i in 0..n {
            let si = sigma[i];
            if si.abs() < 1e-300 {
                continue;
            }
            let ki = k[i] as f64;
            let sgn = if mid * si - ki >= 0.0 { 1.0 } else { -1.0 };
            let (a, b) = (1.0 + sgn * ki, -sgn * si);
            let mut next = [0.0; 4];
            for d in 0..=deg {
                next[d] += a * poly[d];
                next[d + 1] += b * poly[d];
            }
            poly = next;
            deg += 1;
        }
        for (d, c) in poly.iter().enumerate().take(deg + 1) {
            let q = e + d as f64;
            let lo_term = if r0 > 0.0 { r0.powf(q) } else { 0.0 };
            total += c * (r1.powf(q) - lo_term) / q;
        }
    }
    total
}

/// Midpoint value `abs(w . k)^p abs(k)^(-n - sp)`, zero at `k = 0`.
fn midpoint(k: &[i64], w: &[f64], p: f64, np: f64) -> f64 {
    let (mut d, mut r2) = (0.0, 0.0);
    for i in 0..k.len() {
        d += w[i] * k[i] as f64;
        r2 += (k[i] * k[i]) as f64;
    }
    if r2 == 0.0 {
        0.0
    } else {
        d.abs().powf(p) * r2.powf(-0.5 * np)
    }
}

/// Offsets with `max_i abs(k_i) <= m`, in lexicographic order.
pub fn offsets(n: usize, m: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    let r = -m..=m;
    match n {
        1 => r.map(|a| [a, 0, 0]).for_each(|k| out.push(k)),
        2 => {
            for b in r.clone() {
                for a in r.clone() {
                    out.push([a, b, 0]);
                }
            }
        }
        _ => {
            for c in r.clone() {
                for b in r.clone() {
                    for a in r.clone() {
                        out.push([a, b, c]);
                    }
                }
            }
        }
    }
    out
}

/// Correction coefficients `A_k(w) - M_k(w)` tabulated over slope directions.
pub struct NearTable {
    pub dim: usize,
    pub m: i64,
    pub offsets: Vec<[i64; 3]>,
    /// 2D: `alpha_j = j pi / n_alpha`, row-major `[j][k]`; 3D: direction grid.
    coef: Vec<f64>,
    /// Sum over all offsets, per direction.
    total: Vec<f64>,
    n_dir: usize,
    n_az: usize,
}

fn key(dim: usize, p: f64, s: f64) -> (usize, u64, u64) {
    (dim, p.to_bits(), s.to_bits())
}

type Cache = Mutex<HashMap<(usize, u64, u64), Arc<NearTable>>>;

/// Shared table for `(dim, p, s)`.
pub fn table(dim: usize, p: f64, s: f64) -> Arc<NearTable> {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&key(dim, p, s)) {
        return t.clone();
    }
    let t = Arc::new(NearTable::build(dim, p, s));
    cache.lock().unwrap().insert(key(dim, p, s), t.clone());
    t
}

/// Composite Gauss-Legendre nodes on `[a, b]`.
fn composite(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let step = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for j in 0..panels {
        let c = a + (j as f64 + 0.5) * step;
        for i in 0..order {
            out.push((c + 0.5 * step * x[i], 0.5 * step * w[i]));
        }
    }
    out
}

impl NearTable {
    pub fn build(dim: usize, p: f64, s: f64) -> Self {
        let e = p - s * p;
        let np = dim as f64 + s * p;
        match dim {
            1 => {
                let m = 4;
                let offsets = offsets(1, m);
                let coef: Vec<f64> = offsets
                    .iter()
                    .map(|k| {
                        let a = radial_hat(&k[..1], &[1.0], e) + radial_hat(&k[..1], &[-1.0], e);
                        a - midpoint(&k[..1], &[1.0], p, np)
                    })
                    .collect();
                let total = vec![coef.iter().sum()];
                NearTable { dim, m, offsets, coef, total, n_dir: 1, n_az: 1 }
            }
            2 => Self::build_2d(p, e, np),
            _ => Self::build_3d(p, e, np),
        }
    }

    fn build_2d(p: f64, e: f64, np: f64) -> Self {
        let m = 4;
        let offsets = offsets(2, m);
        let thetas = composite(0.0, 2.0 * PI, 128, 16);
        let radial: Vec<Vec<f64>> = offsets
            .iter()
            .map(|k| {
                thetas
                    .iter()
                    .map(|&(t, w)| w * radial_hat(&k[..2], &[t.cos(), t.sin()], e))
                    .collect()
            })
            .collect();
        let n_dir = 1024;
        let mut coef = Vec::with_capacity(n_dir * offsets.len());
        let mut total = Vec::with_capacity(n_dir);
        let mut ang = vec![0.0; thetas.len()];
        for j in 0..n_dir {
            let a = j as f64 * PI / n_dir as f64;
            for (v, &(t, _)) in ang.iter_mut().zip(&thetas) {
                *v = (t - a).cos().abs().powf(p);
            }
            let w = [a.cos(), a.sin()];
            let mut tot = 0.0;
            for (k, rk) in offsets.iter().zip(&radial) {
                let a_k: f64 = ang.iter().zip(rk).map(|(x, y)| x * y).sum();
                let c = a_k - midpoint(&k[..2], &w, p, np);
                coef.push(c);
                tot += c;
            }
            total.push(tot);
        }
        NearTable { dim: 2, m, offsets, coef, total, n_dir, n_az: 1 }
    }

    fn build_3d(p: f64, e: f64, np: f64) -> Self {
        let m = 2;
        let offsets = offsets(3, m);
        // Quadrature on the sphere: Gauss-Legendre in cos(polar) times a
        // uniform azimuth grid.
        let zs = composite(-1.0, 1.0, 4, 8);
        let n_phi = 64;
        let mut dirs = Vec::new();
        for &(z, wz) in &zs {
            let rho = (1.0 - z * z).max(0.0).sqrt();
            for j in 0..n_phi {
                let ph = 2.0 * PI * (j as f64 + 0.5) / n_phi as f64;
                dirs.push(([rho * ph.cos(), rho * ph.sin(), z], wz * 2.0 * PI / n_phi as f64));
            }
        }
        let radial: Vec<Vec<f64>> = offsets
            .iter()
            .map(|k| dirs.iter().map(|(d, w)| w * radial_hat(k, d, e)).collect())
            .collect();
        // Slope directions on the upper hemisphere (the integrand is even).
        let (n_pol, n_az) = (16, 32);
        let mut coef = Vec::new();
        let mut total = Vec::new();
        for a in 0..n_pol {
            let z = (a as f64 + 0.5) / n_pol as f64;
            let rho = (1.0 - z * z).sqrt();
            for b in 0..n_az {
                let ph = 2.0 * PI * b as f64 / n_az as f64;
                let w = [rho * ph.cos(), rho * ph.sin(), z];
                let ang: Vec<f64> = dirs
                    .iter()
                    .map(|(d, _)| (w[0] * d[0] + w[1] * d[1] + w[2] * d[2]).abs().powf(p))
                    .collect();
                let mut tot = 0.0;
                for (k, rk) in offsets.iter().zip(&radial) {
                    let a_k: f64 = ang.iter().zip(rk).map(|(x, y)| x * y).sum();
                    let c = a_k - midpoint(k, &w, p, np);
                    coef.push(c);
                    tot += c;
                }
                total.push(tot);
            }
        }
        NearTable { dim: 3, m, offsets, coef, total, n_dir: n_pol, n_az }
    }

    /// Interpolation weights over table rows for the slope direction `w`.
    fn rows(&self, w: &[f64; 3]) -> [(usize, f64); 2] {
        match self.dim {
            1 => [(0, 1.0), (0, 0.0)],
            2 => {
                let mut a = w[1].atan2(w[0]);
                if a < 0.0 {
                    a += PI;
                }
                if a >= PI {
                    a -= PI;
                }
                let t = a / PI * self.n_dir as f64;
                let j = (t.floor() as usize).min(self.n_dir - 1);
                let f = t - j as f64;
                [(j, 1.0 - f), ((j + 1) % self.n_dir, f)]
            }
            _ => {
                let v = if w[2] < 0.0 { [-w[0], -w[1], -w[2]] } else { *w };
                let a = ((v[2] * self.n_dir as f64) as usize).min(self.n_dir - 1);
                let mut ph = v[1].atan2(v[0]);
                if ph < 0.0 {
                    ph += 2.0 * PI;
                }
                let b = ((ph / (2.0 * PI) * self.n_az as f64).round() as usize) % self.n_az;
                [(a * self.n_az + b, 1.0), (0, 0.0)]
            }
        }
    }

    /// `sum_k c_k(w)` over the full stencil, for nodes whose neighbours are
    /// all fully inside.
    pub fn total(&self, w: &[f64; 3]) -> f64 {
        self.rows(w).iter().map(|&(r, f)| f * self.total[r]).sum()
    }

    /// `sum_k c_k(w) occupancy(k)`.
    pub fn weighted(&self, w: &[f64; 3], occupancy: impl Fn(&[i64; 3]) -> f64) -> f64 {
        let nk = self.offsets.len();
        let rows = self.rows(w);
        let mut acc = 0.0;
        for (i, k) in self.offsets.iter().enumerate() {
            let o = occupancy(k);
            if o == 0.0 {
                continue;
            }
            let c: f64 = rows.iter().map(|&(r, f)| f * self.coef[r * nk + i]).sum();
            acc += c * o;
        }
        acc
    }
}
