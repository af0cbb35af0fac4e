//! Exact specular billiard dynamics: reflection, ray exits, Newton
//! shooting for planar periodic orbits and double-normal chords.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, directions, extremal, point, sphere_minimize, Body, Point};

/// Specular reflection `v − 2(v·ν)ν`.
pub fn reflect(v: &Point, normal: &Point) -> Result<Point> {
    if v.len() != normal.len() {
        return Err(Error::invalid("reflect: dimension mismatch"));
    }
    if (normal.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "reflect: normal has length {}, expected 1",
            normal.norm()
        )));
    }
    Ok(v - normal * (2.0 * v.dot(normal)))
}

/// First boundary point along `q + t·v`, `t > 0`, and the flight length `t`.
pub fn ray_exit(body: &Body, q: &Point, v: &Point) -> Result<(Point, f64)> {
    if (v.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("ray_exit: direction must be a unit vector"));
    }
    let start = body.project(q)?;
    if start.distance <= 0.0 {
        return Err(Error::invalid(format!(
            "ray_exit: start point is not interior (distance {:e})",
            start.distance
        )));
    }
    let (h, _) = body.support_and_point(v);
    let (mut lo, mut hi) = (0.0, h - q.dot(v));
    let at = |t: f64| body.project(&(q + v * t));
    let end = at(hi)?;
    if end.distance > body.tolerance() {
        return Err(Error::numerical("ray_exit", "support bound does not bracket the exit"));
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let proj = at(t)?;
        if proj.distance.abs() <= 4.0 * f64::EPSILON * (1.0 + hi) {
            return Ok((q + v * t, t));
        }
        if proj.distance > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        // d(q + t·v) has derivative −ν·v with ν the foot normal.
        let slope = -proj.normal.dot(v);
        let newton = t - proj.distance / slope;
        t = if slope < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-15 * (1.0 + hi) {
            break;
        }
    }
    let proj = at(t)?;
    if proj.distance.abs() <= body.tolerance() {
        Ok((q + v * t, t))
    } else {
        Err(Error::numerical("ray_exit", "boundary crossing not resolved"))
    }
}

/// Cyclically ordered bounce points; planar polygons also keep the
/// normal angles that generated them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BouncePolygon {
    pub points: Vec<Point>,
    pub closed: bool,
    pub angles: Option<Vec<f64>>,
    /// Largest reflection residual `|t·(a + b)|` at a vertex.
    pub max_residual: f64,
}

impl BouncePolygon {
    pub fn length(&self) -> f64 {
        let k = self.points.len();
        let legs = if self.closed { k } else { k - 1 };
        (0..legs)
            .map(|i| (&self.points[(i + 1) % k] - &self.points[i]).norm())
            .sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn unit_angle(theta: f64) -> Point {
    point(&[theta.cos(), theta.sin()])
}

fn vertices(body: &Body, angles: &[f64]) -> Vec<Point> {
    angles
        .iter()
        .map(|t| body.support_and_point(&unit_angle(*t)).1)
        .collect()
}

/// Tangential reflection defects at every vertex of a closed polygon.
fn residuals(body: &Body, angles: &[f64]) -> Option<DVector<f64>> {
    let pts = vertices(body, angles);
    let k = pts.len();
    let mut r = DVector::zeros(k);
    for i in 0..k {
        let a = &pts[(i + k - 1) % k] - &pts[i];
        let b = &pts[(i + 1) % k] - &pts[i];
        let (na, nb) = (a.norm(), b.norm());
        if na < 1e-12 || nb < 1e-12 {
            return None;
        }
        let tangent = point(&[-angles[i].sin(), angles[i].cos()]);
        r[i] = tangent.dot(&(a / na + b / nb));
    }
    Some(r)
}

/// Normal-angle residual below which the radial polish takes over.
const HANDOFF: f64 = 1e-4;

/// Newton on the `k` normal angles of a closed `k`-bounce orbit, then a
/// polish in polar angles about the center.
pub fn shoot_periodic(body: &Body, k: usize, seed_angles: &[f64]) -> Result<BouncePolygon> {
    if body.dim() != 2 {
        return Err(Error::invalid("shoot_periodic needs a planar body"));
    }
    if k < 2 || seed_angles.len() != k {
        return Err(Error::invalid(format!(
            "shoot_periodic needs k ≥ 2 seed angles, got k = {k} and {} angles",
            seed_angles.len()
        )));
    }
    let scale = body.extent();
    let mut theta = DVector::from_column_slice(seed_angles);
    let mut r = residuals(body, theta.as_slice())
        .ok_or_else(|| Error::invalid("shoot_periodic: seed angles give coincident points"))?;
    let fd = 1e-7;
    for iter in 0..100 {
        if r.amax() <= 1e-10 {
            break;
        }
        let mut jac = DMatrix::zeros(k, k);
        for j in 0..k {
            let mut plus = theta.clone();
            let mut minus = theta.clone();
            plus[j] += fd;
            minus[j] -= fd;
            let rp = residuals(body, plus.as_slice());
            let rm = residuals(body, minus.as_slice());
            let (Some(rp), Some(rm)) = (rp, rm) else {
                return Err(Error::numerical("shoot_periodic", "collapse: bounce points merged"));
            };
            jac.set_column(j, &((rp - rm) / (2.0 * fd)));
        }
        let svd = jac.svd(true, true);
        let cutoff = 1e-10 * svd.singular_values.max();
        let mut step = -svd
            .solve(&r, cutoff)
            .map_err(|e| Error::numerical("shoot_periodic", e.to_string()))?;
        let largest = step.amax();
        if largest > 0.3 {
            step *= 0.3 / largest;
        }
        let merit = r.norm();
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &theta + &step * alpha;
            if let Some(rt) = residuals(body, trial.as_slice()) {
                if rt.norm() < merit {
                    theta = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            if r.amax() <= HANDOFF {
                break;
            }
            return Err(Error::Diverged {
                iterations: iter,
                grad_norm: r.amax(),
            });
        }
    }
    if r.amax() > HANDOFF {
        return Err(Error::Diverged {
            iterations: 100,
            grad_norm: r.amax(),
        });
    }
    let (points, residual) = polish_radial(body, &vertices(body, theta.as_slice()))?;
    for i in 0..k {
        if (&points[(i + 1) % k] - &points[i]).norm() < 1e-6 * scale {
            return Err(Error::numerical("shoot_periodic", "collapse: bounce points merged"));
        }
    }
    let angles = points
        .iter()
        .map(|p| Ok(body.project(p)?.normal))
        .map(|n: Result<Point>| n.map(|n| n[1].atan2(n[0])))
        .collect::<Result<Vec<f64>>>()?;
    Ok(BouncePolygon {
        points,
        closed: true,
        angles: Some(angles),
        max_residual: residual,
    })
}

/// Boundary point on the ray from the body center at polar angle `phi`.
fn radial_point(body: &Body, phi: f64) -> Result<Point> {
    Ok(ray_exit(body, &body.center(), &unit_angle(phi))?.0)
}

/// Tangential reflection defects with normals taken at the vertices.
fn radial_residuals(body: &Body, phis: &[f64]) -> Result<Option<DVector<f64>>> {
    let pts = phis.iter().map(|phi| radial_point(body, *phi)).collect::<Result<Vec<_>>>()?;
    let k = pts.len();
    let mut r = DVector::zeros(k);
    for i in 0..k {
        let a = &pts[(i + k - 1) % k] - &pts[i];
        let b = &pts[(i + 1) % k] - &pts[i];
        let (na, nb) = (a.norm(), b.norm());
        if na < 1e-12 || nb < 1e-12 {
            return Ok(None);
        }
        let nu = body.project(&pts[i])?.normal;
        r[i] = (a / na + b / nb).dot(&point(&[-nu[1], nu[0]]));
    }
    Ok(Some(r))
}

/// Newton on polar angles about the center. Boundary points are smooth in
/// this chart even where the curvature vanishes, where the normal-angle
/// chart is singular.
fn polish_radial(body: &Body, points: &[Point]) -> Result<(Vec<Point>, f64)> {
    let c = body.center();
    let k = points.len();
    let mut phi = DVector::from_iterator(k, points.iter().map(|p| (p[1] - c[1]).atan2(p[0] - c[0])));
    let eval = |phi: &DVector<f64>| radial_residuals(body, phi.as_slice());
    let mut r = eval(&phi)?.ok_or_else(|| Error::numerical("shoot_periodic", "collapse: bounce points merged"))?;
    let fd = 1e-6;
    for _ in 0..50 {
        if r.amax() <= 1e-12 {
            break;
        }
        let mut jac = DMatrix::zeros(k, k);
        for j in 0..k {
            let mut plus = phi.clone();
            let mut minus = phi.clone();
            plus[j] += fd;
            minus[j] -= fd;
            let (Some(rp), Some(rm)) = (eval(&plus)?, eval(&minus)?) else {
                return Err(Error::numerical("shoot_periodic", "collapse: bounce points merged"));
            };
            jac.set_column(j, &((rp - rm) / (2.0 * fd)));
        }
        let svd = jac.svd(true, true);
        let cutoff = 1e-10 * svd.singular_values.max();
        let mut step = -svd
            .solve(&r, cutoff)
            .map_err(|e| Error::numerical("shoot_periodic", e.to_string()))?;
        let largest = step.amax();
        if largest > 0.1 {
            step *= 0.1 / largest;
        }
        let merit = r.norm();
        let mut improved = false;
        let mut alpha = 1.0;
        for _ in 0..20 {
            let trial = &phi + &step * alpha;
            if let Some(rt) = eval(&trial)? {
                if rt.norm() < merit {
                    phi = trial;
                    r = rt;
                    improved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if r.amax() > 1e-10 {
        return Err(Error::Diverged {
            iterations: 50,
            grad_norm: r.amax(),
        });
    }
    let pts = phi.iter().map(|p| radial_point(body, *p)).collect::<Result<Vec<_>>>()?;
    Ok((pts, r.amax()))
}

/// Seed angles `θ₀ + 2πj·i/k` for the rotation-number-`j/k` orbit.
pub fn star_seed(k: usize, j: usize, phase: f64) -> Vec<f64> {
    (0..k)
        .map(|i| phase + std::f64::consts::TAU * (j * i) as f64 / k as f64)
        .collect()
}

/// Closed-form length of the `(k, j)` orbit in a disc of radius `r`.
pub fn disc_orbit_length(radius: f64, k: usize, j: usize) -> f64 {
    2.0 * k as f64 * radius * (std::f64::consts::PI * j as f64 / k as f64).sin()
}

/// A period-two orbit along a double-normal chord.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BouncingBall {
    pub start: Point,
    pub end: Point,
    /// Outer normal at `start`; `end` has the opposite normal.
    pub normal: Point,
    /// Twice the chord length.
    pub length: f64,
}

impl BouncingBall {
    pub fn polygon(&self) -> BouncePolygon {
        BouncePolygon {
            points: vec![self.start.clone(), self.end.clone()],
            closed: true,
            angles: (self.normal.len() == 2).then(|| {
                let t = self.normal[1].atan2(self.normal[0]);
                vec![t, t + std::f64::consts::PI]
            }),
            max_residual: 0.0,
        }
    }
}

fn chord(body: &Body, u: &Point) -> BouncingBall {
    let (_, start) = body.support_and_point(u);
    let (_, end) = body.support_and_point(&-u);
    let length = 2.0 * (&start - &end).norm();
    BouncingBall {
        start,
        end,
        normal: u.clone(),
        length,
    }
}

/// Refines a planar chord in the radial chart; keeps the input if that fails.
fn polish_chord(body: &Body, orbit: BouncingBall) -> BouncingBall {
    let refined = polish_radial(body, &[orbit.start.clone(), orbit.end.clone()]).and_then(|(pts, _)| {
        let normal = body.project(&pts[0])?.normal;
        Ok(BouncingBall {
            length: 2.0 * (&pts[1] - &pts[0]).norm(),
            start: pts[0].clone(),
            end: pts[1].clone(),
            normal,
        })
    });
    refined.unwrap_or(orbit)
}

/// Double-normal chords, shortest first. Critical directions of the
/// width function `h(u) + h(−u)` are exactly the double normals.
pub fn bouncing_ball_orbits(body: &Body) -> Result<Vec<BouncingBall>> {
    let diameter = geometry::diameter_direction(body)?.width;
    let mut found: Vec<BouncingBall> = if body.dim() == 2 {
        let samples: Vec<f64> = directions::half_circle(720)
            .iter()
            .map(|t| extremal::planar_width_slope(body, *t).0)
            .collect();
        let spread = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - samples.iter().cloned().fold(f64::INFINITY, f64::min);
        if spread <= 1e-12 * diameter {
            vec![chord(body, &unit_angle(0.0))]
        } else {
            extremal::planar_width_critical(body, 720)
                .into_par_iter()
                .map(|(t, _)| polish_chord(body, chord(body, &unit_angle(t))))
                .collect()
        }
    } else {
        let seeds = directions::sphere_grid(body.dim(), 512);
        let tol = 1e-13 * (1.0 + body.extent());
        [1.0, -1.0]
            .par_iter()
            .flat_map_iter(|&sign| {
                let mut scored: Vec<(f64, usize)> = seeds
                    .iter()
                    .enumerate()
                    .map(|(k, u)| (extremal::width_objective(body, u, sign).value, k))
                    .collect();
                scored.sort_by(|a, b| a.0.total_cmp(&b.0));
                scored
                    .into_iter()
                    .take(8)
                    .filter_map(|(_, k)| {
                        let (u, _, ok) =
                            sphere_minimize(seeds[k].clone(), &|u| extremal::width_objective(body, u, sign), tol, 200);
                        ok.then(|| chord(body, &u))
                    })
                    .collect::<Vec<_>>()
            })
            .collect()
    };
    found.sort_by(|a, b| a.length.total_cmp(&b.length));
    let same = 1e-6 * diameter;
    let mut unique: Vec<BouncingBall> = Vec::new();
    for orbit in found {
        let duplicate = unique.iter().any(|o| {
            let direct = (&o.start - &orbit.start).norm().max((&o.end - &orbit.end).norm());
            let swapped = (&o.start - &orbit.end).norm().max((&o.end - &orbit.start).norm());
            let parallel = (&o.normal - &orbit.normal).norm().min((&o.normal + &orbit.normal).norm()) <= 1e-6;
            direct.min(swapped) <= same || (parallel && (o.length - orbit.length).abs() <= same)
        });
        if !duplicate {
            unique.push(orbit);
        }
    }
    Ok(unique)
}
