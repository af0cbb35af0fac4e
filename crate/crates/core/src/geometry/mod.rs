//! Smooth convex bodies in ℝⁿ, exposed through support-function oracles.
//!
//! Every body is described by its support function `h(u) = max_{x∈K} x·u`
//! and the support point `∇h(u)`. The signed boundary distance uses the
//! identity `d(q) = min_{|u|=1} (h(u) − q·u)`, which is positive inside,
//! negative outside, and whose minimizer is the outer normal at the foot
//! point. The same chart serves Minkowski sums, where supports add.

pub mod directions;
pub(crate) mod extremal;
pub mod zoo;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use extremal::{diameter_direction, inradius, width, InradiusReport, SlabReport};

pub type Point = DVector<f64>;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Seed count for the planar distance search.
const PLANAR_SEEDS: usize = 48;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Shape {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Ellipsoid {
        center: Vec<f64>,
        semi_axes: Vec<f64>,
    },
    /// `{x : Σ |(xᵢ − cᵢ)/aᵢ|^p ≤ 1}` for an even exponent `p ≥ 2`.
    PBall {
        center: Vec<f64>,
        scale: Vec<f64>,
        p: u32,
    },
    MinkowskiSum {
        summands: Vec<Body>,
    },
}

/// A compact convex body with smooth boundary and nonempty interior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodySpec", into = "BodySpec")]
pub struct Body {
    dim: usize,
    shape: Shape,
    tolerance: f64,
}

#[derive(Serialize, Deserialize)]
struct BodySpec {
    dim: usize,
    #[serde(flatten)]
    shape: Shape,
    #[serde(default = "default_tolerance")]
    tolerance: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

impl TryFrom<BodySpec> for Body {
    type Error = Error;

    fn try_from(spec: BodySpec) -> Result<Self> {
        let body = Body {
            dim: spec.dim,
            shape: spec.shape,
            tolerance: spec.tolerance,
        };
        body.validate()?;
        Ok(body)
    }
}

impl From<Body> for BodySpec {
    fn from(body: Body) -> Self {
        BodySpec {
            dim: body.dim,
            shape: body.shape,
            tolerance: body.tolerance,
        }
    }
}

/// Closest-boundary-point data for a query point.
#[derive(Clone, Debug)]
pub struct Projection {
    /// Signed distance: positive inside, negative outside.
    pub distance: f64,
    /// Outer unit normal at the foot point.
    pub normal: Point,
    pub foot: Point,
    curvature: Curvature,
}

#[derive(Clone, Debug)]
enum Curvature {
    /// Radius of curvature at the foot (planar bodies); may be infinite.
    Planar(f64),
    /// Radii-of-curvature operator on the tangent space at the foot.
    Radii(DMatrix<f64>),
}

impl Projection {
    /// Gradient of the signed distance: the inward normal.
    pub fn distance_gradient(&self) -> Point {
        -&self.normal
    }

    /// Hessian of the signed distance at the query point,
    /// `−(R − d·P)⁻¹` on the tangent space of the foot.
    pub fn distance_hessian(&self) -> Result<DMatrix<f64>> {
        let n = self.normal.len();
        match &self.curvature {
            Curvature::Planar(radius) => {
                if radius.is_infinite() {
                    return Ok(DMatrix::zeros(2, 2));
                }
                let denom = radius - self.distance;
                if denom <= 0.0 {
                    return Err(Error::numerical(
                        "distance_hessian",
                        format!("point beyond focal distance (R = {radius}, d = {})", self.distance),
                    ));
                }
                let t = DVector::from_vec(vec![-self.normal[1], self.normal[0]]);
                Ok(-(&t * t.transpose()) / denom)
            }
            Curvature::Radii(radii) => {
                let basis = directions::tangent_basis(&self.normal);
                let reduced = basis.transpose() * radii * &basis
                    - DMatrix::identity(n - 1, n - 1) * self.distance;
                let inverse = reduced.clone().cholesky().map(|c| c.inverse()).ok_or_else(|| {
                    Error::numerical("distance_hessian", "point beyond focal distance")
                })?;
                Ok(-(&basis * inverse * basis.transpose()))
            }
        }
    }
}

impl Body {
    pub fn new(dim: usize, shape: Shape, tolerance: f64) -> Result<Self> {
        let body = Body {
            dim,
            shape,
            tolerance,
        };
        body.validate()?;
        Ok(body)
    }

    pub fn ball(center: &[f64], radius: f64) -> Result<Self> {
        Body::new(
            center.len(),
            Shape::Ball {
                center: center.to_vec(),
                radius,
            },
            DEFAULT_TOLERANCE,
        )
    }

    pub fn ellipsoid(center: &[f64], semi_axes: &[f64]) -> Result<Self> {
        Body::new(
            center.len(),
            Shape::Ellipsoid {
                center: center.to_vec(),
                semi_axes: semi_axes.to_vec(),
            },
            DEFAULT_TOLERANCE,
        )
    }

    pub fn p_ball(center: &[f64], scale: &[f64], p: u32) -> Result<Self> {
        Body::new(
            center.len(),
            Shape::PBall {
                center: center.to_vec(),
                scale: scale.to_vec(),
                p,
            },
            DEFAULT_TOLERANCE,
        )
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        self.tolerance = tolerance;
        self.validate()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::invalid(format!("dimension must be ≥ 2, got {}", self.dim)));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::invalid("tolerance must be positive and finite"));
        }
        let check_vec = |name: &str, v: &[f64], positive: bool| -> Result<()> {
            if v.len() != self.dim {
                return Err(Error::invalid(format!(
                    "{name} has length {} but dim is {}",
                    v.len(),
                    self.dim
                )));
            }
            if v.iter().any(|x| !x.is_finite() || (positive && *x <= 0.0)) {
                return Err(Error::invalid(format!("{name} has invalid entries")));
            }
            Ok(())
        };
        match &self.shape {
            Shape::Ball { center, radius } => {
                check_vec("center", center, false)?;
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::invalid(format!(
                        "ball radius must be positive (degenerate summand), got {radius}"
                    )));
                }
            }
            Shape::Ellipsoid { center, semi_axes } => {
                check_vec("center", center, false)?;
                check_vec("semi_axes", semi_axes, true)?;
            }
            Shape::PBall { center, scale, p } => {
                check_vec("center", center, false)?;
                check_vec("scale", scale, true)?;
                if *p < 2 || p % 2 != 0 {
                    return Err(Error::invalid(format!("p-ball exponent must be even and ≥ 2, got {p}")));
                }
            }
            Shape::MinkowskiSum { summands } => {
                if summands.is_empty() {
                    return Err(Error::invalid("Minkowski sum needs at least one summand"));
                }
                for s in summands {
                    if s.dim != self.dim {
                        return Err(Error::invalid("Minkowski summand dimension mismatch"));
                    }
                    s.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Sum of the summand centers (the center of symmetry for the zoo).
    pub fn center(&self) -> Point {
        match &self.shape {
            Shape::Ball { center, .. }
            | Shape::Ellipsoid { center, .. }
            | Shape::PBall { center, .. } => DVector::from_column_slice(center),
            Shape::MinkowskiSum { summands } => summands
                .iter()
                .fold(DVector::zeros(self.dim), |acc, s| acc + s.center()),
        }
    }

    /// Largest |support| over the coordinate directions; a length scale.
    pub fn extent(&self) -> f64 {
        let mut best: f64 = 0.0;
        let mut buf = vec![0.0; self.dim];
        for axis in 0..self.dim {
            for sign in [1.0, -1.0] {
                let mut u = vec![0.0; self.dim];
                u[axis] = sign;
                buf.iter_mut().for_each(|x| *x = 0.0);
                best = best.max(self.accumulate_support(&u, &mut buf).abs());
            }
        }
        best
    }

    /// Adds the support point `∇h(u)` into `point` and returns `h(u)`.
    /// `u` must be nonzero.
    fn accumulate_support(&self, u: &[f64], point: &mut [f64]) -> f64 {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                let mut h = radius * norm;
                for i in 0..u.len() {
                    h += center[i] * u[i];
                    point[i] += center[i] + radius * u[i] / norm;
                }
                h
            }
            Shape::Ellipsoid { center, semi_axes } => {
                let s = u
                    .iter()
                    .zip(semi_axes)
                    .map(|(x, a)| a * a * x * x)
                    .sum::<f64>()
                    .sqrt();
                let mut h = s;
                for i in 0..u.len() {
                    h += center[i] * u[i];
                    point[i] += center[i] + semi_axes[i] * semi_axes[i] * u[i] / s;
                }
                h
            }
            Shape::PBall { center, scale, p } => {
                // Dual norm exponent q = p/(p−1).
                let q = *p as f64 / (*p as f64 - 1.0);
                let wmax = u
                    .iter()
                    .zip(scale)
                    .map(|(x, a)| (a * x).abs())
                    .fold(0.0, f64::max);
                let sum: f64 = u
                    .iter()
                    .zip(scale)
                    .map(|(x, a)| ((a * x).abs() / wmax).powf(q))
                    .sum();
                let norm = wmax * sum.powf(1.0 / q);
                let mut h = norm;
                for i in 0..u.len() {
                    let w = scale[i] * u[i];
                    h += center[i] * u[i];
                    let ratio = (w.abs() / norm).powf(q - 1.0);
                    point[i] += center[i] + scale[i] * ratio * w.signum();
                }
                h
            }
            Shape::MinkowskiSum { summands } => summands
                .iter()
                .map(|s| s.accumulate_support(u, point))
                .sum(),
        }
    }

    fn check_direction(&self, u: &Point) -> Result<()> {
        if u.len() != self.dim {
            return Err(Error::invalid(format!(
                "direction has dimension {} but body has {}",
                u.len(),
                self.dim
            )));
        }
        if !u.iter().all(|x| x.is_finite()) || u.norm() == 0.0 {
            return Err(Error::invalid("direction must be a finite nonzero vector"));
        }
        Ok(())
    }

    /// `h(K:ν) = max_{x∈K} x·ν`.
    pub fn support(&self, nu: &Point) -> Result<f64> {
        self.check_direction(nu)?;
        let mut buf = vec![0.0; self.dim];
        Ok(self.accumulate_support(nu.as_slice(), &mut buf))
    }

    /// The boundary point whose outer normal is `ν/|ν|`.
    pub fn support_point(&self, nu: &Point) -> Result<Point> {
        self.check_direction(nu)?;
        let mut buf = vec![0.0; self.dim];
        self.accumulate_support(nu.as_slice(), &mut buf);
        Ok(DVector::from_vec(buf))
    }

    pub(crate) fn support_and_point(&self, u: &Point) -> (f64, Point) {
        let mut buf = vec![0.0; self.dim];
        let h = self.accumulate_support(u.as_slice(), &mut buf);
        (h, DVector::from_vec(buf))
    }

    fn planar_support(&self, theta: f64) -> (f64, [f64; 2]) {
        let u = [theta.cos(), theta.sin()];
        let mut p = [0.0; 2];
        let h = self.accumulate_support(&u, &mut p);
        (h, p)
    }

    /// Radius of curvature of a planar boundary at outer normal `u` (unit).
    pub(crate) fn planar_radius(&self, u: [f64; 2]) -> f64 {
        match &self.shape {
            Shape::Ball { radius, .. } => *radius,
            Shape::Ellipsoid { semi_axes, .. } => {
                let (a, b) = (semi_axes[0], semi_axes[1]);
                let s = ((a * u[0]).powi(2) + (b * u[1]).powi(2)).sqrt();
                (a * b).powi(2) / s.powi(3)
            }
            Shape::PBall { center, scale, p } => {
                let mut point = [0.0; 2];
                self.accumulate_support(&u, &mut point);
                let pf = *p as f64;
                let y = [point[0] - center[0], point[1] - center[1]];
                let grad = |i: usize| pf * (y[i] / scale[i]).powi(*p as i32 - 1) / scale[i];
                let second = |i: usize| {
                    pf * (pf - 1.0) * (y[i] / scale[i]).powi(*p as i32 - 2) / scale[i].powi(2)
                };
                let (fx, fy) = (grad(0), grad(1));
                let kappa = (second(0) * fy * fy + second(1) * fx * fx) / (fx * fx + fy * fy).powf(1.5);
                if kappa > 0.0 {
                    1.0 / kappa
                } else {
                    f64::INFINITY
                }
            }
            Shape::MinkowskiSum { summands } => summands.iter().map(|s| s.planar_radius(u)).sum(),
        }
    }

    /// Radii-of-curvature operator at outer normal `u` (unit): the Hessian
    /// of the support function, which annihilates `u`.
    pub(crate) fn radii_matrix(&self, u: &Point) -> DMatrix<f64> {
        let n = self.dim;
        let projector = DMatrix::identity(n, n) - u * u.transpose();
        match &self.shape {
            Shape::Ball { radius, .. } => projector * *radius,
            Shape::Ellipsoid { semi_axes, .. } => {
                let a2 = DVector::from_iterator(n, semi_axes.iter().map(|a| a * a));
                let a2u = a2.component_mul(u);
                let s = u.dot(&a2u).sqrt();
                DMatrix::from_diagonal(&a2) / s - (&a2u * a2u.transpose()) / s.powi(3)
            }
            Shape::PBall { center, scale, p } => {
                let (_, point) = self.support_and_point(u);
                let pf = *p as f64;
                let y = point - DVector::from_column_slice(center);
                let grad = DVector::from_fn(n, |i, _| {
                    pf * (y[i] / scale[i]).powi(*p as i32 - 1) / scale[i]
                });
                let hess = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| {
                    pf * (pf - 1.0) * (y[i] / scale[i]).powi(*p as i32 - 2) / scale[i].powi(2)
                }));
                let basis = directions::tangent_basis(u);
                let shape_op = basis.transpose() * hess * &basis / grad.norm();
                let eig = shape_op.symmetric_eigen();
                let inv = DVector::from_iterator(
                    n - 1,
                    eig.eigenvalues.iter().map(|k| 1.0 / k.max(1e-14)),
                );
                let radii = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
                &basis * radii * basis.transpose()
            }
            Shape::MinkowskiSum { summands } => summands
                .iter()
                .fold(DMatrix::zeros(n, n), |acc, s| acc + s.radii_matrix(u)),
        }
    }

    /// Smallest radius of curvature over a dense normal grid; the signed
    /// distance is smooth on the layer `0 ≤ d <` this value.
    pub fn min_curvature_radius(&self) -> f64 {
        if self.dim == 2 {
            (0..720)
                .map(|k| {
                    let t = std::f64::consts::TAU * k as f64 / 720.0;
                    self.planar_radius([t.cos(), t.sin()])
                })
                .fold(f64::INFINITY, f64::min)
        } else {
            directions::sphere_grid(self.dim, 512)
                .iter()
                .map(|u| {
                    let basis = directions::tangent_basis(u);
                    let reduced = basis.transpose() * self.radii_matrix(u) * &basis;
                    reduced.symmetric_eigenvalues().min()
                })
                .fold(f64::INFINITY, f64::min)
        }
    }

    /// Closest boundary point and signed distance.
    pub fn project(&self, q: &Point) -> Result<Projection> {
        if q.len() != self.dim {
            return Err(Error::invalid(format!(
                "point has dimension {} but body has {}",
                q.len(),
                self.dim
            )));
        }
        if !q.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("point has non-finite coordinates"));
        }
        if let Shape::Ball { center, radius } = &self.shape {
            return Ok(self.project_ball(q, center, *radius));
        }
        if self.dim == 2 {
            self.project_planar(q)
        } else {
            self.project_general(q)
        }
    }

    fn project_ball(&self, q: &Point, center: &[f64], radius: f64) -> Projection {
        let c = DVector::from_column_slice(center);
        let v = q - &c;
        let norm = v.norm();
        let normal = if norm > 1e-300 {
            v / norm
        } else {
            let mut e = DVector::zeros(self.dim);
            e[0] = 1.0;
            e
        };
        let foot = &c + &normal * radius;
        let curvature = if self.dim == 2 {
            Curvature::Planar(radius)
        } else {
            Curvature::Radii(self.radii_matrix(&normal))
        };
        Projection {
            distance: radius - norm,
            normal,
            foot,
            curvature,
        }
    }

    fn project_planar(&self, q: &Point) -> Result<Projection> {
        let (qx, qy) = (q[0], q[1]);
        let gap = |theta: f64| -> (f64, f64) {
            // (g, g') with g(θ) = h(u) − q·u and g'(θ) = (p − q)·t.
            let (h, p) = self.planar_support(theta);
            let (c, s) = (theta.cos(), theta.sin());
            let g = h - qx * c - qy * s;
            let dg = -(p[0] - qx) * s + (p[1] - qy) * c;
            (g, dg)
        };
        let step = std::f64::consts::TAU / PLANAR_SEEDS as f64;
        let values: Vec<f64> = (0..PLANAR_SEEDS).map(|k| gap(k as f64 * step).0).collect();
        let mut minima: Vec<usize> = (0..PLANAR_SEEDS)
            .filter(|&k| {
                let prev = values[(k + PLANAR_SEEDS - 1) % PLANAR_SEEDS];
                let next = values[(k + 1) % PLANAR_SEEDS];
                values[k] <= prev && values[k] <= next
            })
            .collect();
        minima.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
        minima.truncate(3);
        if minima.is_empty() {
            return Err(Error::numerical("project", "no seed minimum on the normal grid"));
        }

        let mut best: Option<(f64, f64)> = None;
        for k in minima {
            let theta0 = k as f64 * step;
            let (mut lo, mut hi) = (theta0 - step, theta0 + step);
            let (_, dlo) = gap(lo);
            let (_, dhi) = gap(hi);
            let theta = if dlo <= 0.0 && dhi >= 0.0 {
                let mut theta = theta0;
                for _ in 0..200 {
                    let (g, dg) = gap(theta);
                    if dg == 0.0 {
                        break;
                    }
                    if dg < 0.0 {
                        lo = theta;
                    } else {
                        hi = theta;
                    }
                    let radius = self.planar_radius([theta.cos(), theta.sin()]);
                    let curvature = radius - g;
                    let newton = theta - dg / curvature;
                    let next = if curvature.is_finite() && curvature > 0.0 && newton > lo && newton < hi {
                        newton
                    } else {
                        0.5 * (lo + hi)
                    };
                    let moved = (next - theta).abs();
                    theta = next;
                    if moved <= 1e-16 * (1.0 + theta.abs()) || hi - lo <= 1e-15 {
                        break;
                    }
                }
                theta
            } else {
                golden_section(|t| gap(t).0, lo, hi, 1e-13)
            };
            let g = gap(theta).0;
            if best.is_none_or(|(bg, _)| g < bg) {
                best = Some((g, theta));
            }
        }
        let (distance, theta) = best.expect("at least one candidate");
        if !distance.is_finite() {
            return Err(Error::numerical("project", "non-finite distance"));
        }
        let (_, p) = self.planar_support(theta);
        let u = [theta.cos(), theta.sin()];
        Ok(Projection {
            distance,
            normal: DVector::from_vec(u.to_vec()),
            foot: DVector::from_vec(p.to_vec()),
            curvature: Curvature::Planar(self.planar_radius(u)),
        })
    }

    fn project_general(&self, q: &Point) -> Result<Projection> {
        let objective = |u: &Point| -> SphereEval {
            let (h, p) = self.support_and_point(u);
            let g = h - q.dot(u);
            let diff = p - q;
            let grad = &diff - u * u.dot(&diff);
            let hess = self.radii_matrix(u) - (DMatrix::identity(self.dim, self.dim) - u * u.transpose()) * g;
            SphereEval {
                value: g,
                grad,
                hess,
            }
        };
        let scale = 1.0 + self.extent() + q.norm();
        let (u, g) = sphere_multistart_minimize(self.dim, &objective, 1e-14 * scale)
            .ok_or_else(|| Error::numerical("project", "sphere minimization failed to converge"))?;
        let (_, foot) = self.support_and_point(&u);
        let curvature = Curvature::Radii(self.radii_matrix(&u));
        Ok(Projection {
            distance: g,
            normal: u,
            foot,
            curvature,
        })
    }

    /// Signed distance to the boundary (positive inside).
    pub fn distance_to_boundary(&self, q: &Point) -> Result<f64> {
        Ok(self.project(q)?.distance)
    }

    pub fn contains(&self, q: &Point) -> Result<bool> {
        Ok(self.distance_to_boundary(q)? >= 0.0)
    }

    /// Outer unit normal at a boundary point.
    pub fn boundary_normal(&self, p: &Point) -> Result<Point> {
        let proj = self.project(p)?;
        let slack = 10.0 * self.tolerance * (1.0 + self.extent());
        if proj.distance.abs() > slack {
            return Err(Error::invalid(format!(
                "point is not on the boundary (signed distance {:e})",
                proj.distance
            )));
        }
        Ok(proj.normal)
    }

    /// `c·K` about the origin.
    pub fn scaled(&self, factor: f64) -> Result<Body> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid("scale factor must be positive"));
        }
        let scale = |v: &[f64]| v.iter().map(|x| x * factor).collect::<Vec<_>>();
        let shape = match &self.shape {
            Shape::Ball { center, radius } => Shape::Ball {
                center: scale(center),
                radius: radius * factor,
            },
            Shape::Ellipsoid { center, semi_axes } => Shape::Ellipsoid {
                center: scale(center),
                semi_axes: scale(semi_axes),
            },
            Shape::PBall { center, scale: s, p } => Shape::PBall {
                center: scale(center),
                scale: scale(s),
                p: *p,
            },
            Shape::MinkowskiSum { summands } => Shape::MinkowskiSum {
                summands: summands
                    .iter()
                    .map(|s| s.scaled(factor))
                    .collect::<Result<_>>()?,
            },
        };
        Body::new(self.dim, shape, self.tolerance)
    }

    /// `K + x`.
    pub fn translated(&self, shift: &Point) -> Result<Body> {
        if shift.len() != self.dim {
            return Err(Error::invalid("translation dimension mismatch"));
        }
        let move_center = |c: &[f64]| c.iter().zip(shift.iter()).map(|(a, b)| a + b).collect::<Vec<_>>();
        let shape = match &self.shape {
            Shape::Ball { center, radius } => Shape::Ball {
                center: move_center(center),
                radius: *radius,
            },
            Shape::Ellipsoid { center, semi_axes } => Shape::Ellipsoid {
                center: move_center(center),
                semi_axes: semi_axes.clone(),
            },
            Shape::PBall { center, scale, p } => Shape::PBall {
                center: move_center(center),
                scale: scale.clone(),
                p: *p,
            },
            Shape::MinkowskiSum { summands } => {
                let mut moved = summands.clone();
                moved[0] = moved[0].translated(shift)?;
                Shape::MinkowskiSum { summands: moved }
            }
        };
        Body::new(self.dim, shape, self.tolerance)
    }
}

/// `K₁ + K₂`; nested sums are flattened.
pub fn minkowski_sum(first: &Body, second: &Body) -> Result<Body> {
    if first.dim != second.dim {
        return Err(Error::invalid(format!(
            "Minkowski sum of bodies in dimensions {} and {}",
            first.dim, second.dim
        )));
    }
    let mut summands = Vec::new();
    for body in [first, second] {
        match &body.shape {
            Shape::MinkowskiSum { summands: inner } => summands.extend(inner.iter().cloned()),
            _ => summands.push(body.clone()),
        }
    }
    Body::new(
        first.dim,
        Shape::MinkowskiSum { summands },
        first.tolerance.min(second.tolerance),
    )
}

pub(crate) struct SphereEval {
    pub value: f64,
    /// Tangential gradient.
    pub grad: Point,
    /// Riemannian Hessian as an n×n operator on the tangent space.
    pub hess: DMatrix<f64>,
}

/// Riemannian Newton with backtracking on the unit sphere.
pub(crate) fn sphere_minimize(
    start: Point,
    objective: &dyn Fn(&Point) -> SphereEval,
    grad_tol: f64,
    max_iter: usize,
) -> (Point, f64, bool) {
    let mut u = start.normalize();
    let mut eval = objective(&u);
    for _ in 0..max_iter {
        if eval.grad.norm() <= grad_tol {
            return (u, eval.value, true);
        }
        let basis = directions::tangent_basis(&u);
        let g_t = basis.transpose() * &eval.grad;
        let h_t = basis.transpose() * &eval.hess * &basis;
        let mut step = match h_t.clone().cholesky() {
            Some(chol) => -chol.solve(&g_t),
            None => {
                // Saddle-free Newton: flip negative curvature, floor tiny eigenvalues.
                let eig = h_t.clone().symmetric_eigen();
                let floor = 1e-8 * eig.eigenvalues.amax().max(1.0);
                let inv = eig.eigenvalues.map(|l| 1.0 / l.abs().max(floor));
                let v = &eig.eigenvectors;
                -(v * DMatrix::from_diagonal(&inv) * v.transpose() * &g_t)
            }
        };
        let step_norm = step.norm();
        if step_norm > 0.5 {
            step *= 0.5 / step_norm;
        }
        let slope = g_t.dot(&step);
        let rounding = 64.0 * f64::EPSILON * (1.0 + eval.value.abs());
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = (&u + &basis * (&step * alpha)).normalize();
            let trial_eval = objective(&trial);
            let sufficient = trial_eval.value <= eval.value + 1e-4 * alpha * slope;
            // Near the minimum value differences drown in rounding; trust the gradient.
            let polishing = trial_eval.value <= eval.value + rounding
                && trial_eval.grad.norm() < 0.5 * eval.grad.norm();
            if sufficient || polishing {
                u = trial;
                eval = trial_eval;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // No representable decrease: at the floating-point floor.
            return (u, eval.value, eval.grad.norm() <= grad_tol * 1e3);
        }
    }
    let ok = eval.grad.norm() <= grad_tol * 1e3;
    (u, eval.value, ok)
}

/// Seeds from a sphere grid, polishes the best few well-separated seeds.
pub(crate) fn sphere_multistart_minimize(
    dim: usize,
    objective: &dyn Fn(&Point) -> SphereEval,
    grad_tol: f64,
) -> Option<(Point, f64)> {
    let count = if dim == 3 { 256 } else { 512 };
    let seeds = directions::sphere_grid(dim, count);
    let mut scored: Vec<(f64, usize)> = seeds
        .iter()
        .enumerate()
        .map(|(k, u)| (objective(u).value, k))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut chosen: Vec<usize> = Vec::new();
    for &(_, k) in &scored {
        if chosen.len() == 4 {
            break;
        }
        if chosen.iter().all(|&j| seeds[j].dot(&seeds[k]) < 0.95) {
            chosen.push(k);
        }
    }
    chosen
        .into_iter()
        .map(|k| sphere_minimize(seeds[k].clone(), objective, grad_tol, 100))
        .filter(|(_, v, ok)| *ok && v.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(u, v, _)| (u, v))
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Convenience constructor for a point from a slice.
pub fn point(coords: &[f64]) -> Point {
    DVector::from_column_slice(coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(c: &[f64]) -> Point {
        point(c)
    }

    #[test]
    fn support_examples() {
        let disc = Body::ball(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(disc.support(&p(&[1.0, 0.0])).unwrap(), 1.0);
        let ellipse = Body::ellipsoid(&[0.0, 0.0], &[2.0, 1.0]).unwrap();
        assert!((ellipse.support(&p(&[0.0, 1.0])).unwrap() - 1.0).abs() < 1e-15);
        let r1 = Body::ball(&[0.0, 0.0], 0.7).unwrap();
        let r2 = Body::ball(&[0.0, 0.0], 1.9).unwrap();
        let sum = minkowski_sum(&r1, &r2).unwrap();
        let u = p(&[0.6, 0.8]);
        assert!((sum.support(&u).unwrap() - 2.6).abs() < 1e-14);
    }

    #[test]
    fn zero_direction_is_rejected() {
        let disc = Body::ball(&[0.0, 0.0], 1.0).unwrap();
        assert!(matches!(disc.support(&p(&[0.0, 0.0])), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn signed_distance_examples() {
        let disc = Body::ball(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(disc.distance_to_boundary(&p(&[0.0, 0.0])).unwrap(), 1.0);
        assert!((disc.distance_to_boundary(&p(&[2.0, 0.0])).unwrap() + 1.0).abs() < 1e-15);
        assert!(!disc.contains(&p(&[2.0, 0.0])).unwrap());
    }

    #[test]
    fn normals_at_axis_points() {
        let disc = Body::ball(&[0.0, 0.0], 1.0).unwrap();
        let n = disc.boundary_normal(&p(&[1.0, 0.0])).unwrap();
        assert!((n - p(&[1.0, 0.0])).norm() < 1e-14);
        let ellipse = Body::ellipsoid(&[0.0, 0.0], &[2.0, 1.0]).unwrap();
        let n = ellipse.boundary_normal(&p(&[0.0, 1.0])).unwrap();
        assert!((n - p(&[0.0, 1.0])).norm() < 1e-12);
        let n = ellipse.boundary_normal(&p(&[2.0, 0.0])).unwrap();
        assert!((n - p(&[1.0, 0.0])).norm() < 1e-12);
        assert!(matches!(
            ellipse.boundary_normal(&p(&[0.5, 0.0])),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn degenerate_summand_rejected() {
        assert!(matches!(Body::ball(&[0.0, 0.0], 0.0), Err(Error::InvalidArgument(_))));
        let a = Body::ball(&[0.0, 0.0], 1.0).unwrap();
        let b = Body::ball(&[0.0, 0.0, 0.0], 1.0).unwrap();
        assert!(matches!(minkowski_sum(&a, &b), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn p_ball_support_matches_dual_norm() {
        let body = Body::p_ball(&[0.0, 0.0], &[1.0, 1.0], 4).unwrap();
        let u = p(&[1.0, 1.0]);
        let q: f64 = 4.0 / 3.0;
        let expected = (2.0f64).powf(1.0 / q);
        assert!((body.support(&u).unwrap() - expected).abs() < 1e-14);
        // The support point lies on the implicit boundary.
        let x = body.support_point(&u).unwrap();
        let f: f64 = x.iter().map(|c| c.powi(4)).sum();
        assert!((f - 1.0).abs() < 1e-13);
    }

    #[test]
    fn json_spec_round_trip_and_validation() {
        let text = r#"{"dim":2,"kind":"minkowski_sum","params":{"summands":[
            {"dim":2,"kind":"ellipsoid","params":{"center":[0,0],"semi_axes":[2,1]}},
            {"dim":2,"kind":"ball","params":{"center":[0,0],"radius":1},"tolerance":1e-10}]},
            "tolerance":1e-9}"#;
        let body: Body = serde_json::from_str(text).unwrap();
        assert!((body.support(&p(&[0.0, 1.0])).unwrap() - 2.0).abs() < 1e-15);
        let again: Body = serde_json::from_str(&serde_json::to_string(&body).unwrap()).unwrap();
        assert_eq!(body, again);
        let bad = r#"{"dim":2,"kind":"ball","params":{"center":[0,0],"radius":0}}"#;
        assert!(serde_json::from_str::<Body>(bad).is_err());
    }

    #[test]
    fn planar_radius_matches_general_radii() {
        let bodies = [
            Body::ellipsoid(&[0.0, 0.0], &[2.0, 1.0]).unwrap(),
            Body::p_ball(&[0.0, 0.0], &[1.0, 1.5], 4).unwrap(),
        ];
        for body in &bodies {
            for k in 1..12 {
                let t = 0.37 * k as f64;
                let u = [t.cos(), t.sin()];
                let tangent = p(&[-u[1], u[0]]);
                let r_matrix = body.radii_matrix(&p(&u));
                let r = tangent.dot(&(r_matrix * &tangent));
                let planar = body.planar_radius(u);
                assert!((r - planar).abs() < 1e-8 * planar.max(1.0), "{r} vs {planar}");
            }
        }
    }

    #[test]
    fn general_projection_agrees_with_planar_embedding() {
        // A 3-D ellipsoid's axis section reproduces the planar distance.
        let e3 = Body::ellipsoid(&[0.0, 0.0, 0.0], &[2.0, 1.0, 3.0]).unwrap();
        let e2 = Body::ellipsoid(&[0.0, 0.0], &[2.0, 1.0]).unwrap();
        for q in [[0.3, 0.2], [1.5, 0.1], [-0.4, 0.85], [0.0, 0.0]] {
            let d3 = e3.distance_to_boundary(&p(&[q[0], q[1], 0.0])).unwrap();
            let d2 = e2.distance_to_boundary(&p(&q)).unwrap();
            assert!((d3 - d2).abs() < 1e-10, "{d3} vs {d2}");
        }
    }
}
