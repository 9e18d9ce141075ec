use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::geometry::BBox;
use crate::quadrature::{gagliardo, w1p_seminorm, GridFunction};
use crate::{Error, Result};

/// `K(n, p) = (1/p) int_{S^(n-1)} abs(sigma_1)^p`, the limit of
/// `(1-s) [f]^p_{W^{s,p}} / abs(grad f)^p_{L^p}` as `s -> 1`.
pub fn bbm_constant(n: usize, p: f64) -> Result<f64> {
    if !(1..=3).contains(&n) {
        return Err(Error::Parameter(format!("dimension {n} not in 1..=3")));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("p = {p} outside (1, inf)")));
    }
    let sphere_moment = match n {
        1 => 2.0,
        3 => 4.0 * PI / (p + 1.0),
        _ => 2.0 * PI.sqrt() * gamma(0.5 * (p + 1.0)) / gamma(0.5 * p + 1.0),
    };
    Ok(sphere_moment / p)
}

/// `(1-s)`-scaled Gagliardo values over an `s` grid next to the BBM limit
/// `K(n,p) [f]^p_{W^{1,p}}`.
#[derive(Clone, Debug, Serialize)]
pub struct BbmSweep {
    pub domain: String,
    pub function: String,
    pub p: f64,
    pub s: Vec<f64>,
    pub scaled: Vec<f64>,
    pub err: Vec<f64>,
    pub reference: f64,
    pub reference_err: f64,
    pub ratio: Vec<f64>,
    pub max_ratio: f64,
    /// Strictly increasing over at least three `s` values, each step larger
    /// than the two errors combined.
    pub growing: bool,
}

pub fn bbm_sweep(f: &GridFunction, p: f64, s_grid: &[f64]) -> Result<BbmSweep> {
    bbm_sweep_in(f, p, s_grid, None)
}

/// Sweep restricted to `window cap Omega` (both variables and the
/// reference gradient norm).
pub fn bbm_sweep_in(f: &GridFunction, p: f64, s_grid: &[f64], window: Option<&BBox>) -> Result<BbmSweep> {
    if s_grid.is_empty() {
        return Err(Error::Parameter("empty s grid".into()));
    }
    if s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter(format!("s grid must be strictly increasing: {s_grid:?}")));
    }
    let k = bbm_constant(f.dim(), p)?;
    let region = window.map(|b| (*b, *b));
    let per_s: Vec<(f64, f64)> = s_grid
        .par_iter()
        .map(|&s| {
            let r = gagliardo(f, s, p, region.as_ref())?;
            Ok(((1.0 - s) * r.value, (1.0 - s) * r.err_est))
        })
        .collect::<Result<_>>()?;
    let g = match window {
        Some(b) => {
            let dim = f.dim();
            w1p_seminorm(&f.masked(|x| b.contains(x, dim)), p)?
        }
        None => w1p_seminorm(f, p)?,
    };
    let reference = k * g.value.powf(p);
    let reference_err = k * ((g.value + g.err_est).powf(p) - g.value.powf(p));
    let (scaled, err): (Vec<f64>, Vec<f64>) = per_s.into_iter().unzip();
    let ratio: Vec<f64> = scaled
        .iter()
        .map(|&v| {
            if reference > 0.0 {
                v / reference
            } else if v == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let max_ratio = ratio.iter().copied().fold(0.0, f64::max);
    let growing = scaled.len() >= 3
        && scaled
            .windows(2)
            .zip(err.windows(2))
            .all(|(v, e)| v[1] - v[0] > e[0] + e[1]);
    Ok(BbmSweep {
        domain: f.domain().name().to_string(),
        function: f.label().to_string(),
        p,
        s: s_grid.to_vec(),
        scaled,
        err,
        reference,
        reference_err,
        ratio,
        max_ratio,
        growing,
    })
}

impl BbmSweep {
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "s,scaled_seminorm,err,reference,ratio")?;
        for i in 0..self.s.len() {
            writeln!(
                out,
                "{},{},{},{},{}",
                self.s[i], self.scaled[i], self.err[i], self.reference, self.ratio[i]
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::geometry::{catalog_domain, sphere_area};
    use crate::quadrature::gauss::integrate;
    use crate::quadrature::sample;

    #[test]
    fn constant_closed_forms() {
        assert!((bbm_constant(1, 3.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((bbm_constant(2, 2.0).unwrap() - PI / 2.0).abs() < 1e-13);
        assert!((bbm_constant(3, 2.0).unwrap() - 2.0 * PI / 3.0).abs() < 1e-13);
        for n in 1..=3 {
            let k = bbm_constant(n, 2.0).unwrap();
            assert!((k - sphere_area(n) / (2.0 * n as f64)).abs() < 1e-13);
        }
        assert!(bbm_constant(4, 2.0).is_err());
        assert!(bbm_constant(2, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn planar_constant_matches_angular_quadrature(p in 1.01f64..6.0) {
            let quarter = integrate(|t| t.cos().powf(p), 0.0, 0.5 * PI, 64);
            let k = bbm_constant(2, p).unwrap();
            prop_assert!((k - 4.0 * quarter / p).abs() < 1e-7 * k);
        }
    }

    #[test]
    fn interval_sweep_follows_closed_form() {
        let g = sample(&catalog_domain("interval").unwrap(), "coord:1", 1.0 / 256.0).unwrap();
        let s = [0.5, 0.75, 0.9];
        let sw = bbm_sweep(&g, 2.0, &s).unwrap();
        // (1-s) 2/(e(e+1)) with e = 2 - 2s is 1/(3 - 2s).
        for (i, &si) in s.iter().enumerate() {
            let exact = 1.0 / (3.0 - 2.0 * si);
            assert!((sw.scaled[i] - exact).abs() <= sw.err[i], "s={si}");
        }
        assert!((sw.reference - 1.0).abs() <= sw.reference_err.max(1e-12));
        assert!(sw.growing);
        assert!(sw.max_ratio < 1.0);
        let mut csv = Vec::new();
        sw.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("s,scaled_seminorm,err,reference,ratio\n0.5,"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn constant_sweep_is_zero() {
        let g = sample(&catalog_domain("disk").unwrap(), "const", 1.0 / 16.0).unwrap();
        let sw = bbm_sweep(&g, 2.0, &[0.6, 0.8]).unwrap();
        assert!(sw.scaled.iter().all(|&v| v == 0.0));
        assert_eq!(sw.reference, 0.0);
        assert_eq!(sw.max_ratio, 0.0);
        assert!(!sw.growing);
    }

    #[test]
    fn grid_is_validated() {
        let g = sample(&catalog_domain("interval").unwrap(), "coord:1", 0.1).unwrap();
        assert!(bbm_sweep(&g, 2.0, &[0.8, 0.7]).is_err());
        assert!(bbm_sweep(&g, 2.0, &[]).is_err());
        assert!(bbm_sweep(&g, 2.0, &[0.5, 1.0]).is_err());
    }
}
