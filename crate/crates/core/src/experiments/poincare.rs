//! Fractional Poincaré inequality with an explicit constant on balls.

use serde::Serialize;

use crate::geometry::{dist, Point};
use crate::quadrature::seminorm::weighted_sum;
use crate::quadrature::{gagliardo, gagliardo_rows, GridFunction};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoincareRecord {
    pub domain: String,
    pub function: String,
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub center: [f64; 3],
    pub radius: f64,
    /// `abs(B cap Omega)` on the grid.
    pub volume: f64,
    pub constant: f64,
    pub lhs: f64,
    pub lhs_err: f64,
    pub rhs: f64,
    pub rhs_err: f64,
    /// `rhs + rhs_err - (lhs - lhs_err)`; the verdict is `margin >= 0`.
    pub margin: f64,
    pub holds: bool,
}

/// `(q(1-s))^(p/q) diam(B)^(sp) / (2^p (n - q + sq)^(p/q))`.
pub fn poincare_constant(n: usize, p: f64, q: f64, s: f64, radius: f64) -> Result<f64> {
    let pole = n as f64 - q + s * q;
    if !(pole > 0.0) {
        return Err(Error::Parameter(format!("n - q + sq = {pole} <= 0")));
    }
    let e = p / q;
    Ok((q * (1.0 - s)).powf(e) * (2.0 * radius).powf(s * p) / (2f64.powf(p) * pole.powf(e)))
}

/// Compare `avg_{B cap Omega} abs(f - f_B)^p` against the constant times
/// `avg_y (int_{B cap Omega} abs(f(y) - f(z))^q abs(y - z)^(-n-sq) dz)^(p/q)`.
/// `ball` defaults to the ball circumscribing the bounding box.
pub fn poincare_check(f: &GridFunction, p: f64, q: f64, s: f64, ball: Option<(Point, f64)>) -> Result<PoincareRecord> {
    let n = f.dim();
    if !(p >= 1.0 && q >= p && q.is_finite()) {
        return Err(Error::Parameter(format!("need 1 <= p <= q < inf, got p = {p}, q = {q}")));
    }
    let s0 = ((q - n as f64) / q).max(0.0);
    if !(s > s0 && s < 1.0) {
        return Err(Error::Parameter(format!("s = {s} outside ({s0}, 1)")));
    }
    let (center, radius) = ball.unwrap_or_else(|| {
        let bb = f.domain().bbox();
        let mut c = [0.0; 3];
        let mut r2 = 0.0;
        for i in 0..n {
            c[i] = 0.5 * (bb.lo[i] + bb.hi[i]);
            r2 += 0.25 * (bb.hi[i] - bb.lo[i]).powi(2);
        }
        (c, r2.sqrt())
    });
    if !(radius > 0.0) {
        return Err(Error::Parameter(format!("ball radius {radius} must be positive")));
    }
    let constant = poincare_constant(n, p, q, s, radius)?;
    let slack = radius * 1e-12;
    let g = f.masked(|x| dist(x, &center) <= radius + slack);
    let volume = g.total_weight();
    if !(volume > 0.0) {
        return Err(Error::Degenerate(format!("ball {center:?}, r = {radius} misses the sampled domain")));
    }

    let vals = g.values();
    let w = g.weights();
    let mean = vals.iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() / volume;
    let dev: Vec<f64> = vals.iter().map(|v| (v - mean).abs().powf(p)).collect();
    let (lsum, lerr) = weighted_sum(&g, &dev);

    let (rsum, rerr) = if p == q {
        let est = gagliardo(&g, s, q, None)?;
        (est.value, est.err_est)
    } else {
        let rows = gagliardo_rows(&g, s, q, None)?;
        let v: Vec<f64> = rows.iter().map(|r| r.max(0.0).powf(p / q)).collect();
        weighted_sum(&g, &v)
    };

    let lhs = lsum / volume;
    let lhs_err = lerr / volume;
    let rhs = constant * rsum / volume;
    let rhs_err = constant * rerr / volume;
    let margin = rhs + rhs_err - (lhs - lhs_err);
    Ok(PoincareRecord {
        domain: f.domain().name().to_string(),
        function: f.label().to_string(),
        p,
        q,
        s,
        center,
        radius,
        volume,
        constant,
        lhs,
        lhs_err,
        rhs,
        rhs_err,
        margin,
        holds: margin >= 0.0,
    })
}
