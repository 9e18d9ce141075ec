use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::geometry::{dist, ImplicitDomain, Point};
use crate::{rng, Error, Result};

/// Two-sided 99% normal quantile.
pub(crate) fn z99() -> f64 {
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.995)
}

/// `abs(B(x, r) cap Omega)` by stratified Monte Carlo with a 99% confidence
/// half-width, seed 0.
pub fn ball_measure(domain: &ImplicitDomain, x: &Point, r: f64, budget: usize) -> Result<(f64, f64)> {
    ball_measure_seeded(domain, x, r, budget, 0)
}

/// The cube `[x - r, x + r]^n` is split into `k^n` strata with `budget / k^n`
/// uniform points each. Stratum variances use `(hits + 1/2) / (m + 1)` so
/// that strata with no mixed samples still carry some uncertainty; the
/// result is capped by the plain Monte Carlo variance of the pooled count,
/// which bounds the stratified one under proportional allocation.
pub fn ball_measure_seeded(
    domain: &ImplicitDomain,
    x: &Point,
    r: f64,
    budget: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Parameter(format!("ball radius must be positive, got {r}")));
    }
    let n = domain.dim();
    if domain.bbox().dist(x, n) >= r {
        return Ok((0.0, 0.0));
    }
    let budget = budget.max(16);
    let k = ((budget as f64 / 16.0).powf(1.0 / n as f64).floor() as usize).max(1);
    let strata = k.pow(n as u32);
    let m = (budget / strata).max(2);
    let side = 2.0 * r / k as f64;
    let vol = side.powi(n as i32);
    let call = call_id(x, r);
    let per: Vec<(usize, f64)> = (0..strata)
        .into_par_iter()
        .map(|st| {
            let mut g = rng::stream(seed, rng::stream_id(3, call, st as u32));
            let mut lo = [0.0; 3];
            let mut rem = st;
            for i in 0..n {
                lo[i] = x[i] - r + side * (rem % k) as f64;
                rem /= k;
            }
            let mut hits = 0usize;
            for _ in 0..m {
                let mut y = [0.0; 3];
                for i in 0..n {
                    y[i] = lo[i] + side * g.gen::<f64>();
                }
                if dist(&y, x) < r && domain.contains(&y) {
                    hits += 1;
                }
            }
            let pt = (hits as f64 + 0.5) / (m as f64 + 1.0);
            (hits, vol * vol * pt * (1.0 - pt) / m as f64)
        })
        .collect();
    let hits: usize = per.iter().map(|v| v.0).sum();
    let total = (strata * m) as f64;
    let cube = (2.0 * r).powi(n as i32);
    let area = cube * hits as f64 / total;
    let q = (hits as f64 + 0.5) / (total + 1.0);
    let var = per.iter().map(|v| v.1).sum::<f64>().min(cube * cube * q * (1.0 - q) / total);
    Ok((area, z99() * var.sqrt()))
}

fn call_id(x: &Point, r: f64) -> u32 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in [x[0], x[1], x[2], r] {
        h ^= v.to_bits();
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    (h ^ (h >> 32)) as u32
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{ball_volume, catalog_domain};

    #[test]
    fn centred_disk_ball() {
        let d = catalog_domain("disk").unwrap();
        let (a, ci) = ball_measure(&d, &[0.0; 3], 0.5, 1 << 16).unwrap();
        assert!((a - PI / 4.0).abs() <= ci, "{a} +- {ci}");
        assert!(ci < 0.01);
    }

    #[test]
    fn lens_at_the_boundary() {
        let d = catalog_domain("disk").unwrap();
        let (a, ci) = ball_measure(&d, &[1.0, 0.0, 0.0], 1.0, 1 << 16).unwrap();
        let lens = 2.0 * PI / 3.0 - 3f64.sqrt() / 2.0;
        assert!((a - lens).abs() <= ci, "{a} +- {ci} vs {lens}");
    }

    #[test]
    fn far_ball_is_empty() {
        let d = catalog_domain("disk").unwrap();
        assert_eq!(ball_measure(&d, &[3.0, 0.0, 0.0], 0.5, 1024).unwrap(), (0.0, 0.0));
        // Inside the bounding box but away from the domain.
        let (a, _) = ball_measure(&catalog_domain("annulus").unwrap(), &[0.0; 3], 0.2, 1024).unwrap();
        assert_eq!(a, 0.0);
    }

    #[test]
    fn bounded_by_ball_and_domain() {
        for name in ["square", "slit-disk", "cusp-exterior:2"] {
            let d = catalog_domain(name).unwrap();
            let mut g = rng::stream(9, 0);
            for _ in 0..20 {
                let x = [g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0), 0.0];
                let r = g.gen_range(0.01..1.0);
                let (a, ci) = ball_measure(&d, &x, r, 4096).unwrap();
                let cap = d.area_exact().unwrap().min(ball_volume(2) * r * r);
                assert!(a >= 0.0 && a <= cap + ci, "{name} {x:?} {r}");
            }
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let d = catalog_domain("annulus").unwrap();
        let a = ball_measure_seeded(&d, &[0.7, 0.1, 0.0], 0.3, 5000, 42).unwrap();
        let b = ball_measure_seeded(&d, &[0.7, 0.1, 0.0], 0.3, 5000, 42).unwrap();
        assert_eq!(a, b);
    }
}
