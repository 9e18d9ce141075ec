//! Named model domains.
//!
//! | name                 | set                                                         |
//! |----------------------|-------------------------------------------------------------|
//! | `interval`           | (0,1) in R                                                  |
//! | `disk`               | B(0,1)                                                      |
//! | `square`             | (0,1)^2                                                     |
//! | `annulus`            | 1/2 < abs(x) < 1                                            |
//! | `slit-disk`          | B(0,1) minus the segment [0,1) x {0}                        |
//! | `cusp-interior:<l>`  | B(0,1) minus the closed spike 0 <= x1 <= 1, abs(x2) <= x1^l |
//! | `cusp-exterior:<l>`  | 0 < x1 < 1, abs(x2) < x1^l                                  |

use std::f64::consts::PI;

use super::domain::{BBox, ImplicitDomain, Segment};
use crate::quadrature::gauss::integrate;
use crate::{Error, Result};

pub const NAMES: [&str; 7] = [
    "interval",
    "disk",
    "square",
    "annulus",
    "slit-disk",
    "cusp-interior:<lambda>",
    "cusp-exterior:<lambda>",
];

fn parse_lambda(name: &str, arg: Option<&str>) -> Result<f64> {
    let bad = || Error::Unknown { kind: "domain", name: name.to_string() };
    let l: f64 = arg.ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    if !(l > 1.0) || !l.is_finite() {
        return Err(Error::Parameter(format!("cusp exponent must exceed 1, got {l}")));
    }
    Ok(l)
}

fn b2(lo: [f64; 2], hi: [f64; 2]) -> BBox {
    BBox::new([lo[0], lo[1], 0.0], [hi[0], hi[1], 0.0])
}

pub fn domain(name: &str) -> Result<ImplicitDomain> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    let unit_box = b2([-1.0, -1.0], [1.0, 1.0]);
    let d = match (head, arg) {
        ("interval", None) => ImplicitDomain::new(
            name,
            1,
            BBox::new([0.0; 3], [1.0, 0.0, 0.0]),
            1.0,
            Some(1.0),
            |x| x[0] > 0.0 && x[0] < 1.0,
        )
        .with_features(vec![[0.0; 3], [1.0, 0.0, 0.0]]),
        ("disk", None) => ImplicitDomain::new(name, 2, unit_box, 2.0, Some(PI), |x| {
            x[0] * x[0] + x[1] * x[1] < 1.0
        }),
        ("square", None) => ImplicitDomain::new(
            name,
            2,
            b2([0.0, 0.0], [1.0, 1.0]),
            2f64.sqrt(),
            Some(1.0),
            |x| x[0] > 0.0 && x[0] < 1.0 && x[1] > 0.0 && x[1] < 1.0,
        )
        .with_features(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]),
        ("annulus", None) => ImplicitDomain::new(name, 2, unit_box, 2.0, Some(0.75 * PI), |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            r2 > 0.25 && r2 < 1.0
        }),
        ("slit-disk", None) => ImplicitDomain::new(name, 2, unit_box, 2.0, Some(PI), |x| {
            x[0] * x[0] + x[1] * x[1] < 1.0 && !(x[1] == 0.0 && x[0] >= 0.0)
        })
        .with_cuts(vec![Segment { a: [0.0; 3], b: [1.0, 0.0, 0.0] }])
        .with_features(vec![[0.0; 3], [1.0, 0.0, 0.0]]),
        ("cusp-interior", a) => {
            let l = parse_lambda(name, a)?;
            let xs = spike_exit(l);
            let area = PI - spike_area(l);
            ImplicitDomain::new(name, 2, unit_box, 2.0, Some(area), move |x| {
                let in_disk = x[0] * x[0] + x[1] * x[1] < 1.0;
                let in_spike = x[0] >= 0.0 && x[0] <= 1.0 && x[1].abs() <= x[0].powf(l);
                in_disk && !in_spike
            })
            .with_features(vec![[0.0; 3], [xs, xs.powf(l), 0.0], [xs, -xs.powf(l), 0.0]])
        }
        ("cusp-exterior", a) => {
            let l = parse_lambda(name, a)?;
            ImplicitDomain::new(
                name,
                2,
                b2([0.0, -1.0], [1.0, 1.0]),
                2.0,
                Some(2.0 / (l + 1.0)),
                move |x| x[0] > 0.0 && x[0] < 1.0 && x[1].abs() < x[0].powf(l),
            )
            .with_features(vec![[0.0; 3], [1.0, 1.0, 0.0], [1.0, -1.0, 0.0]])
        }
        _ => return Err(Error::Unknown { kind: "domain", name: name.to_string() }),
    };
    Ok(d)
}

/// Abscissa where the spike `abs(x2) < x1^l` leaves the unit disk.
fn spike_exit(l: f64) -> f64 {
    let (mut a, mut b) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if m.powf(l) < (1.0 - m * m).sqrt() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Area of the spike removed from the unit disk by `cusp-interior:<l>`.
fn spike_area(l: f64) -> f64 {
    let xs = spike_exit(l);
    let inner = integrate(|x| 2.0 * x.powf(l), 0.0, xs, 64);
    // Substituting x = sin(t) removes the square-root endpoint singularity.
    let t0 = xs.asin();
    let outer = integrate(|t| 2.0 * t.cos() * t.cos(), t0, PI / 2.0, 64);
    inner + outer
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    fn mc_area(d: &ImplicitDomain, n: usize) -> (f64, f64) {
        let mut r = rng::stream(7, 1);
        let bb = d.bbox();
        let vol = (bb.hi[0] - bb.lo[0]) * if d.dim() > 1 { bb.hi[1] - bb.lo[1] } else { 1.0 };
        let mut hits = 0usize;
        for _ in 0..n {
            let x = [
                r.gen_range(bb.lo[0]..bb.hi[0]),
                if d.dim() > 1 { r.gen_range(bb.lo[1]..bb.hi[1]) } else { 0.0 },
                0.0,
            ];
            if d.contains(&x) {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        (vol * p, vol * 3.0 * (p * (1.0 - p) / n as f64).sqrt())
    }

    #[test]
    fn catalog_areas_match_monte_carlo() {
        for name in [
            "interval",
            "disk",
            "square",
            "annulus",
            "slit-disk",
            "cusp-interior:2",
            "cusp-exterior:1.5",
            "cusp-exterior:2",
        ] {
            let d = domain(name).unwrap();
            let (a, tol) = mc_area(&d, 400_000);
            let exact = d.area_exact().unwrap();
            assert!((a - exact).abs() < tol + 1e-12, "{name}: mc {a} exact {exact}");
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(domain("triangle"), Err(Error::Unknown { .. })));
        assert!(domain("cusp-exterior").is_err());
        assert!(matches!(domain("cusp-exterior:0.5"), Err(Error::Parameter(_))));
    }

    #[test]
    fn slit_points_are_excluded() {
        let d = domain("slit-disk").unwrap();
        assert!(!d.contains(&[0.5, 0.0, 0.0]));
        assert!(d.contains(&[-0.5, 0.0, 0.0]));
        assert!(d.contains(&[0.5, 1e-9, 0.0]));
        assert!(d.segment_blocked(&[0.5, -0.1, 0.0], &[0.5, 0.1, 0.0]));
    }

    #[test]
    fn inside_points_lie_in_bbox() {
        let mut r = rng::stream(3, 3);
        for name in ["disk", "annulus", "cusp-interior:1.5", "cusp-exterior:2"] {
            let d = domain(name).unwrap();
            for _ in 0..10_000 {
                let x = [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), 0.0];
                if d.contains(&x) {
                    assert!(d.bbox().contains(&x, 2));
                }
            }
        }
    }

    #[test]
    fn diam_upper_bounds_sample_diameter() {
        let mut r = rng::stream(5, 5);
        for name in ["disk", "square", "cusp-exterior:1.5", "slit-disk"] {
            let d = domain(name).unwrap();
            let bb = *d.bbox();
            let pts: Vec<_> = (0..4000)
                .map(|_| {
                    [r.gen_range(bb.lo[0]..bb.hi[0]), r.gen_range(bb.lo[1]..bb.hi[1]), 0.0]
                })
                .filter(|x| d.contains(x))
                .collect();
            let mut m: f64 = 0.0;
            for a in pts.iter().take(300) {
                for b in &pts {
                    m = m.max(crate::geometry::dist(a, b));
                }
            }
            assert!(m <= d.diam_upper());
        }
    }
}
