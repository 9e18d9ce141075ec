//! Smooth partition of unity subordinate to the doubled Whitney cubes.
//!
//! `psi_Q(x) = prod_i b(abs(x_i - c_i) / side)` equals 1 on Q and vanishes
//! outside 2Q; `phi_Q = psi_Q / sum_R psi_R`.

use std::sync::OnceLock;

use rayon::prelude::*;

use super::whitney::WhitneyCover;
use super::Point;

/// C^1 cutoff: 1 on `[0, 1/2]`, 0 on `[1, inf)`, cubic in between.
fn cutoff(t: f64) -> f64 {
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let u = 2.0 * (1.0 - t);
        u * u * (3.0 - 2.0 * u)
    }
}

/// Sup of `abs(b')`.
const CUTOFF_SLOPE: f64 = 3.0;

pub struct PartitionOfUnity<'a> {
    cover: &'a WhitneyCover,
    lipschitz: OnceLock<f64>,
}

impl<'a> PartitionOfUnity<'a> {
    pub fn new(cover: &'a WhitneyCover) -> Self {
        PartitionOfUnity {
            cover,
            lipschitz: OnceLock::new(),
        }
    }

    pub fn cover(&self) -> &WhitneyCover {
        self.cover
    }

    pub fn psi(&self, i: usize, x: &Point) -> f64 {
        let frame = &self.cover.frame;
        let q = &self.cover.cubes[i];
        let c = frame.center(q);
        let s = frame.side(q.level);
        (0..frame.dim).map(|k| cutoff((x[k] - c[k]).abs() / s)).product()
    }

    /// Non-zero `(cube index, phi_Q(x))` pairs, in ascending cube order.
    /// Empty when `x` is not covered by any doubled cube.
    pub fn eval(&self, x: &Point) -> Vec<(usize, f64)> {
        let mut ids = Vec::new();
        self.cover.dilate_members(x, 2.0, &mut ids);
        let mut out: Vec<(usize, f64)> = ids
            .into_iter()
            .map(|i| (i, self.psi(i, x)))
            .filter(|&(_, v)| v > 0.0)
            .collect();
        let total: f64 = out.iter().map(|&(_, v)| v).sum();
        if total > 0.0 {
            for e in &mut out {
                e.1 /= total;
            }
        }
        out
    }

    /// `sum_Q phi_Q(x)`: 1 on the covered set, 0 elsewhere.
    pub fn sum(&self, x: &Point) -> f64 {
        self.eval(x).iter().map(|&(_, v)| v).sum()
    }

    /// Upper bound for `diam(Q) * Lip(phi_Q)` over all cubes.
    ///
    /// Uses `abs(grad psi_R) <= 3 n / diam(R)`, `psi <= 1` and `sum psi >= 1`
    /// wherever `phi_Q` is non-zero.
    pub fn lipschitz_bound(&self) -> f64 {
        *self.lipschitz.get_or_init(|| {
            let cover = self.cover;
            let n = cover.dim() as f64;
            let per: Vec<f64> = (0..cover.len())
                .into_par_iter()
                .map(|i| {
                    let d = cover.diam(i);
                    let c = cover.center(i);
                    // Any R with 2R meeting 2Q has centre within the 4Q
                    // dilate of c for comparable sizes; search generously.
                    let mut nbrs = Vec::new();
                    cover.dilate_members(&c, 2.0 + 2.0 * 16.0, &mut nbrs);
                    let s = cover.frame.side(cover.cubes[i].level);
                    let mut total = CUTOFF_SLOPE * n / d;
                    for &j in &nbrs {
                        let sr = cover.frame.side(cover.cubes[j].level);
                        let cr = cover.center(j);
                        let meets = (0..cover.dim()).all(|k| (c[k] - cr[k]).abs() < s + sr);
                        if meets {
                            total += CUTOFF_SLOPE * n / cover.diam(j);
                        }
                    }
                    d * total
                })
                .collect();
            per.into_iter().fold(0.0, f64::max)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::catalog::domain;
    use crate::geometry::whitney::{whitney_cover, AmbientBall};
    use crate::rng;
    use rand::Rng;

    #[test]
    fn cutoff_is_c1() {
        assert_eq!(cutoff(0.5), 1.0);
        assert_eq!(cutoff(1.0), 0.0);
        let h = 1e-6;
        for t in [0.5, 1.0] {
            let left = (cutoff(t) - cutoff(t - h)) / h;
            let right = (cutoff(t + h) - cutoff(t)) / h;
            assert!((left - right).abs() < 1e-4);
        }
        let mut m: f64 = 0.0;
        for k in 0..=1000 {
            let t = 0.5 + 0.5 * k as f64 / 1000.0;
            m = m.max(((cutoff(t + 1e-7) - cutoff(t)) / 1e-7).abs());
        }
        assert!(m <= CUTOFF_SLOPE + 1e-4);
    }

    #[test]
    fn partition_sums_to_one_on_covered_points() {
        let d = domain("disk").unwrap();
        let root = AmbientBall::for_domain(&d);
        let cover = whitney_cover(&d, &root, 6).unwrap();
        let pou = PartitionOfUnity::new(&cover);
        let mut r = rng::stream(11, 0);
        let mut checked = 0;
        for _ in 0..2000 {
            let x = [r.gen_range(-4.0..4.0), r.gen_range(-4.0..4.0), 0.0];
            if cover.is_covered(&x) {
                assert!((pou.sum(&x) - 1.0).abs() < 1e-12);
                checked += 1;
            }
            if d.contains(&x) {
                assert_eq!(pou.sum(&x), 0.0);
            }
        }
        assert!(checked > 500);
    }

    #[test]
    fn support_stays_in_doubled_cube() {
        let d = domain("square").unwrap();
        let root = AmbientBall::for_domain(&d);
        let cover = whitney_cover(&d, &root, 6).unwrap();
        let pou = PartitionOfUnity::new(&cover);
        let x = [1.7, 0.3, 0.0];
        for (i, v) in pou.eval(&x) {
            assert!(v > 0.0);
            assert!(cover.frame.dilate_contains(&cover.cubes[i], &x, 2.0));
        }
    }

    #[test]
    fn lipschitz_bound_is_finite_and_dominates_sampled_slopes() {
        let d = domain("square").unwrap();
        let root = AmbientBall::for_domain(&d);
        let cover = whitney_cover(&d, &root, 6).unwrap();
        let pou = PartitionOfUnity::new(&cover);
        let k = pou.lipschitz_bound();
        assert!(k.is_finite() && k > 0.0);
        let mut r = rng::stream(12, 0);
        let phi = |x: &Point, i: usize| {
            pou.eval(x).into_iter().find(|e| e.0 == i).map_or(0.0, |e| e.1)
        };
        for _ in 0..300 {
            let x = [r.gen_range(-3.0..4.0), r.gen_range(-3.0..4.0), 0.0];
            let terms = pou.eval(&x);
            for &(i, _) in &terms {
                let dq = cover.diam(i);
                let eps = 1e-4 * dq;
                for axis in 0..2 {
                    let mut y = x;
                    y[axis] += eps;
                    if !cover.is_covered(&y) {
                        continue;
                    }
                    let slope = (phi(&y, i) - phi(&x, i)).abs() / eps;
                    assert!(dq * slope <= k * 1.01, "slope {} bound {k}", dq * slope);
                }
            }
        }
    }
}
