use rand::Rng;
use serde::Serialize;

use crate::geometry::{dist, sphere_area};
use crate::quadrature::seminorm::weighted_sum;
use crate::quadrature::{gagliardo, GridFunction};
use crate::{rng, Error, Result};

/// Random node pairs tested against `abs(u(x) - u(y)) <= abs(x - y) (g(x) + g(y))`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PairCheck {
    pub pairs: usize,
    pub violations: usize,
    /// Largest `abs(u(x) - u(y)) - abs(x - y)(g(x) + g(y))` seen.
    pub worst_excess: f64,
}

/// `(1-s)[f]^p <= C(n,p,Omega) int g^p` with
/// `C = 2^p |S^(n-1)| (2 diam Omega)^(p(1-s)) / p`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HajlaszBound {
    pub s: f64,
    pub p: f64,
    pub lhs: f64,
    pub lhs_err: f64,
    pub rhs: f64,
    pub rhs_err: f64,
    pub constant: f64,
    /// `lhs - lhs_err <= rhs + rhs_err`.
    pub holds: bool,
    pub pair_check: PairCheck,
}

pub const PAIR_SAMPLES: usize = 10_000;

pub fn hajlasz_bbm_bound(f: &GridFunction, s: f64, p: f64) -> Result<HajlaszBound> {
    let g = f
        .hajlasz_g()
        .ok_or_else(|| Error::Contract(format!("{} carries no Hajłasz gradient", f.label())))?;
    let n = f.dim();
    let r = gagliardo(f, s, p, None)?;
    let (lhs, lhs_err) = ((1.0 - s) * r.value, (1.0 - s) * r.err_est);
    let diam = f.domain().diam_upper();
    let constant = 2f64.powf(p) * sphere_area(n) * (2.0 * diam).powf(p * (1.0 - s)) / p;
    let gp: Vec<f64> = g.iter().map(|v| v.abs().powf(p)).collect();
    let (sum, err) = weighted_sum(f, &gp);
    let (rhs, rhs_err) = (constant * sum, constant * err);
    Ok(HajlaszBound {
        s,
        p,
        lhs,
        lhs_err,
        rhs,
        rhs_err,
        constant,
        holds: lhs - lhs_err <= rhs + rhs_err,
        pair_check: check_pairs(f, g, PAIR_SAMPLES),
    })
}

fn check_pairs(f: &GridFunction, g: &[f64], samples: usize) -> PairCheck {
    let mut r = rng::stream(0x4a11, rng::stream_id(2, f.len() as u32, 0));
    let n = f.len();
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let (i, j) = (r.gen_range(0..n), r.gen_range(0..n));
        let du = (f.node_value(i) - f.node_value(j)).abs();
        let bound = dist(&f.node_point(i), &f.node_point(j)) * (g[i] + g[j]);
        let excess = du - bound;
        worst = worst.max(excess);
        if excess > 1e-12 * (1.0 + du) {
            violations += 1;
        }
    }
    PairCheck { pairs: samples, violations, worst_excess: worst }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::catalog_domain;
    use crate::quadrature::sample;

    #[test]
    fn constant_has_zero_sides() {
        let g = sample(&catalog_domain("disk").unwrap(), "const", 1.0 / 16.0).unwrap();
        let b = hajlasz_bbm_bound(&g, 0.5, 2.0).unwrap();
        assert_eq!(b.lhs, 0.0);
        assert_eq!(b.rhs, 0.0);
        assert!(b.holds);
        assert_eq!(b.pair_check.violations, 0);
    }

    #[test]
    fn coordinate_on_disk() {
        let g = sample(&catalog_domain("disk").unwrap(), "coord:1", 1.0 / 32.0).unwrap();
        let b = hajlasz_bbm_bound(&g, 0.5, 2.0).unwrap();
        // diam 2, p(1-s) = 1: C = 4 (2 pi) 4 / 2 = 16 pi; g = 1 on an area-pi disk.
        assert!((b.constant - 16.0 * PI).abs() < 1e-12);
        assert!((b.rhs - 16.0 * PI * PI).abs() <= b.rhs_err + 1e-9);
        assert!(b.holds && b.lhs < b.rhs);
        assert_eq!(b.pair_check.pairs, PAIR_SAMPLES);
        assert_eq!(b.pair_check.violations, 0);
    }

    #[test]
    fn invalid_gradient_is_detected() {
        let g = sample(&catalog_domain("square").unwrap(), "coord:1", 1.0 / 16.0).unwrap();
        let small = vec![0.1; g.len()];
        let g = g.clone().with_hajlasz_g(small);
        let b = hajlasz_bbm_bound(&g, 0.5, 2.0).unwrap();
        assert!(b.pair_check.violations > 0 && b.pair_check.worst_excess > 0.0);
    }

    #[test]
    fn missing_gradient_is_a_contract_error() {
        let g = sample(&catalog_domain("disk").unwrap(), "powneg:0.25", 1.0 / 8.0).unwrap();
        assert!(matches!(hajlasz_bbm_bound(&g, 0.5, 2.0), Err(Error::Contract(_))));
    }
}
