//! Analytic test functions.
//!
//! | id             | f(x)                                                   |
//! |----------------|--------------------------------------------------------|
//! | `const[:c]`    | c (default 1)                                          |
//! | `coord:<i>`    | x_i, 1-based                                           |
//! | `affine:a,b,c` | a x_1 + b x_2 + c                                      |
//! | `powneg:<b>`   | max(abs(x), 1e-3)^(-b)                                 |
//! | `bump`         | exp(1 - 1/(1 - abs(x - c)^2 / R^2)) inside B(c, R)     |
//! | `distbdry`     | distance to the boundary of the domain                 |
//! | `cusppow:<g>`  | r^g * theta, theta in [0, 2 pi) measured from +x_1     |
//!
//! For `bump`, c is the bounding-box centre and R half the smallest
//! bounding-box half-width.

use std::f64::consts::PI;

use crate::geometry::{dist, norm, sub, ImplicitDomain, Point};
use crate::{Error, Result};

pub const NAMES: [&str; 7] = [
    "const[:c]",
    "coord:<i>",
    "affine:<a,b,c>",
    "powneg:<beta>",
    "bump",
    "distbdry",
    "cusppow:<gamma>",
];

const POWNEG_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionSpec {
    Const(f64),
    Coord(usize),
    Affine(f64, f64, f64),
    PowNeg(f64),
    Bump,
    DistBoundary,
    CuspPow(f64),
}

fn bad(name: &str) -> Error {
    Error::Unknown { kind: "function", name: name.to_string() }
}

fn num(name: &str, s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| bad(name))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(name))
    }
}

impl FunctionSpec {
    pub fn parse(name: &str) -> Result<Self> {
        let (head, arg) = match name.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (name, None),
        };
        Ok(match (head, arg) {
            ("const", None) => FunctionSpec::Const(1.0),
            ("const", Some(a)) => FunctionSpec::Const(num(name, a)?),
            ("coord", Some(a)) => {
                let i: usize = a.trim().parse().map_err(|_| bad(name))?;
                if !(1..=3).contains(&i) {
                    return Err(bad(name));
                }
                FunctionSpec::Coord(i - 1)
            }
            ("affine", Some(a)) => {
                let v: Vec<f64> = a.split(',').map(|t| num(name, t)).collect::<Result<_>>()?;
                if v.len() != 3 {
                    return Err(bad(name));
                }
                FunctionSpec::Affine(v[0], v[1], v[2])
            }
            ("powneg", Some(a)) => {
                let b = num(name, a)?;
                if b < 0.0 {
                    return Err(Error::Parameter(format!("powneg exponent must be >= 0, got {b}")));
                }
                FunctionSpec::PowNeg(b)
            }
            ("bump", None) => FunctionSpec::Bump,
            ("distbdry", None) => FunctionSpec::DistBoundary,
            ("cusppow", Some(a)) => {
                let g = num(name, a)?;
                if g <= 0.0 {
                    return Err(Error::Parameter(format!("cusppow exponent must be > 0, got {g}")));
                }
                FunctionSpec::CuspPow(g)
            }
            _ => return Err(bad(name)),
        })
    }

    /// Attach the spec to a domain (needed by `bump` and `distbdry`).
    pub fn bind(&self, domain: &ImplicitDomain) -> Result<BoundFunction> {
        let dim = domain.dim();
        match self {
            FunctionSpec::Coord(i) if *i >= dim => {
                return Err(Error::Parameter(format!(
                    "coord:{} on a {dim}-dimensional domain",
                    i + 1
                )))
            }
            FunctionSpec::Affine(..) | FunctionSpec::CuspPow(_) if dim != 2 => {
                return Err(Error::Parameter(format!("{self:?} needs a planar domain")))
            }
            _ => {}
        }
        let bb = domain.bbox();
        let center = bb.center();
        let radius = (0..dim)
            .map(|i| 0.5 * (bb.hi[i] - bb.lo[i]))
            .fold(f64::INFINITY, f64::min)
            * 0.5;
        Ok(BoundFunction {
            spec: self.clone(),
            domain: domain.clone(),
            center,
            radius,
        })
    }
}

/// A catalog function bound to a domain.
#[derive(Clone, Debug)]
pub struct BoundFunction {
    spec: FunctionSpec,
    domain: ImplicitDomain,
    center: Point,
    radius: f64,
}

/// Largest value of `abs(d/du exp(1 - 1/(1-u^2)))` on (0,1).
fn bump_profile_slope() -> f64 {
    let mut m: f64 = 0.0;
    for k in 1..20000 {
        let u = k as f64 / 20000.0;
        let q = 1.0 - u * u;
        m = m.max((1.0 - 1.0 / q).exp() * 2.0 * u / (q * q));
    }
    m
}

impl BoundFunction {
    pub fn spec(&self) -> &FunctionSpec {
        &self.spec
    }

    pub fn eval(&self, x: &Point) -> f64 {
        match self.spec {
            FunctionSpec::Const(c) => c,
            FunctionSpec::Coord(i) => x[i],
            FunctionSpec::Affine(a, b, c) => a * x[0] + b * x[1] + c,
            FunctionSpec::PowNeg(b) => norm(x).max(POWNEG_FLOOR).powf(-b),
            FunctionSpec::Bump => {
                let u = (dist(x, &self.center) / self.radius).powi(2);
                if u < 1.0 {
                    (1.0 - 1.0 / (1.0 - u)).exp()
                } else {
                    0.0
                }
            }
            FunctionSpec::DistBoundary => {
                if self.domain.contains(x) {
                    self.domain.dist_to_boundary(x)
                } else {
                    0.0
                }
            }
            FunctionSpec::CuspPow(g) => {
                let r = x[0].hypot(x[1]);
                r.powf(g) * angle(x)
            }
        }
    }

    /// Analytic gradient, when the catalog provides one.
    pub fn grad(&self, x: &Point) -> Option<Point> {
        Some(match self.spec {
            FunctionSpec::Const(_) => [0.0; 3],
            FunctionSpec::Coord(i) => {
                let mut g = [0.0; 3];
                g[i] = 1.0;
                g
            }
            FunctionSpec::Affine(a, b, _) => [a, b, 0.0],
            FunctionSpec::PowNeg(b) => {
                let r = norm(x);
                if r <= POWNEG_FLOOR {
                    [0.0; 3]
                } else {
                    let c = -b * r.powf(-b - 2.0);
                    [c * x[0], c * x[1], c * x[2]]
                }
            }
            FunctionSpec::Bump => {
                let d = sub(x, &self.center);
                let r2 = self.radius * self.radius;
                let u = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / r2;
                if u >= 1.0 {
                    [0.0; 3]
                } else {
                    let q = 1.0 - u;
                    let c = -(1.0 - 1.0 / q).exp() / (q * q) * 2.0 / r2;
                    [c * d[0], c * d[1], c * d[2]]
                }
            }
            FunctionSpec::DistBoundary => return None,
            FunctionSpec::CuspPow(g) => {
                let r = x[0].hypot(x[1]);
                if r == 0.0 {
                    return Some([0.0; 3]);
                }
                let (c, s) = (x[0] / r, x[1] / r);
                let t = angle(x);
                let a = g * r.powf(g - 1.0) * t;
                let b = r.powf(g - 1.0);
                [a * c - b * s, a * s + b * c, 0.0]
            }
        })
    }

    /// Constant Hajłasz gradient `g = Lip(f)` for the Lipschitz catalog
    /// members; `None` for the singular ones.
    pub fn hajlasz_g(&self) -> Option<f64> {
        match self.spec {
            FunctionSpec::Const(_) => Some(0.0),
            FunctionSpec::Coord(_) => Some(1.0),
            FunctionSpec::Affine(a, b, _) => Some(a.hypot(b)),
            FunctionSpec::Bump => Some(bump_profile_slope() / self.radius),
            FunctionSpec::DistBoundary => Some(1.0),
            FunctionSpec::PowNeg(_) | FunctionSpec::CuspPow(_) => None,
        }
    }
}

/// Polar angle in [0, 2 pi).
fn angle(x: &Point) -> f64 {
    let t = x[1].atan2(x[0]);
    if t < 0.0 {
        t + 2.0 * PI
    } else {
        t
    }
}
