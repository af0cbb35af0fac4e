#![allow(dead_code)]

use billiard_core::exact;
use billiard_core::geometry::{minkowski_sum, point, zoo};
use billiard_core::loopspace::DiscreteCurve;
use billiard_core::{Body, Point};
use nalgebra::DVector;

/// The planar zoo plus a 3D ellipsoid for the derivative checks.
pub fn derivative_bodies() -> Vec<(String, Body)> {
    let mut bodies: Vec<(String, Body)> = zoo::planar().into_iter().map(|(n, b)| (n.to_string(), b)).collect();
    bodies.push((
        "ellipsoid3".into(),
        Body::ellipsoid(&[0.0, 0.0, 0.0], &[2.0, 1.0, 1.5]).unwrap(),
    ));
    bodies
}

/// Homothetic and non-homothetic summand pairs.
pub fn sum_pairs() -> Vec<(&'static str, Body, &'static str, Body)> {
    vec![
        ("disc", zoo::disc(), "disc(2)", zoo::disc_of_radius(2.0)),
        ("disc", zoo::disc(), "ellipse", zoo::ellipse()),
        ("disc", zoo::disc(), "quartic", zoo::quartic_ball()),
        ("ellipse", zoo::ellipse(), "quartic", zoo::quartic_ball()),
        ("ellipse", zoo::ellipse(), "ellipse+disc", zoo::ellipse_plus_disc()),
    ]
}

/// Nested pairs `(inner, outer)`.
pub fn nested_pairs() -> Vec<(&'static str, Body, &'static str, Body)> {
    vec![
        ("disc", zoo::disc(), "ellipse", zoo::ellipse()),
        ("disc", zoo::disc(), "quartic", zoo::quartic_ball()),
        ("disc", zoo::disc(), "disc(2)", zoo::disc_of_radius(2.0)),
        ("ellipse", zoo::ellipse(), "ellipse+disc", zoo::ellipse_plus_disc()),
        ("quartic", zoo::quartic_ball(), "quartic+disc", zoo::quartic_plus_disc()),
        ("disc", zoo::disc(), "quartic+disc", minkowski_sum(&zoo::quartic_ball(), &zoo::disc()).unwrap()),
    ]
}

/// Unit vector for polar angle `theta` in the first two coordinates and
/// `z` spread into the remaining ones.
fn direction(dim: usize, theta: f64, z: f64) -> Point {
    let mut v = DVector::zeros(dim);
    if dim == 2 {
        v[0] = theta.cos();
        v[1] = theta.sin();
    } else {
        let r = (1.0 - z * z).sqrt();
        v[0] = r * theta.cos();
        v[1] = r * theta.sin();
        v[2] = z;
    }
    v
}

/// Point at fraction `s` of the way from the center to the boundary.
pub fn radial_point(body: &Body, theta: f64, z: f64, s: f64) -> Point {
    let c = body.center();
    let u = direction(body.dim(), theta, z);
    let (_, t) = exact::ray_exit(body, &c, &u).unwrap();
    &c + u * (s * t)
}

/// Curve through radial points `(θ, z, s)`.
pub fn radial_curve(body: &Body, samples: &[(f64, f64, f64)], closed: bool) -> DiscreteCurve {
    let nodes = samples.iter().map(|&(t, z, s)| radial_point(body, t, z, s)).collect();
    DiscreteCurve::new(nodes, closed).unwrap()
}

/// Central differences of a scalar function.
pub fn fd_gradient(f: impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, h: f64) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let mut p = x.clone();
        let mut m = x.clone();
        p[i] += h;
        m[i] -= h;
        (f(&p) - f(&m)) / (2.0 * h)
    })
}

pub fn relative_error(approx: &DVector<f64>, exact: &DVector<f64>) -> f64 {
    (approx - exact).norm() / exact.norm().max(1e-300)
}

pub fn origin(dim: usize) -> Point {
    point(&vec![0.0; dim])
}
