//! Implicit domains, dyadic cubes, Whitney covers of the complement and the
//! associated partition of unity.
//!
//! Points are stored as `[f64; 3]` in every dimension; coordinates past the
//! domain dimension are kept at zero.

mod boundary;
pub mod catalog;
mod domain;
pub mod pou;
pub mod whitney;

pub use boundary::{boundary_points, boundary_points_fine, BoundaryCloud};
pub use catalog::domain as catalog_domain;
pub use domain::{BBox, ImplicitDomain, Segment};
pub use pou::PartitionOfUnity;
pub use whitney::{
    decompose_open_set, reflect_centers, stretched_cube, whitney_cover, AmbientBall, AxisCube,
    DyadicCube, DyadicFrame, Property3Report, WhitneyCover, WhitneyRule,
};

pub type Point = [f64; 3];

#[inline]
pub fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &Point, t: f64) -> Point {
    [a[0] * t, a[1] * t, a[2] * t]
}

#[inline]
pub fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

/// Point `a + t (b - a)`.
#[inline]
pub fn lerp(a: &Point, b: &Point, t: f64) -> Point {
    [
        a[0] + t * (b[0] - a[0]),
        a[1] + t * (b[1] - a[1]),
        a[2] + t * (b[2] - a[2]),
    ]
}

/// Surface measure of the unit sphere in R^n.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("dimension {n} not supported"),
    }
}

/// Volume of the unit ball in R^n.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}
