//! Inradius (Chebyshev center) and width (narrowest slab).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{directions, sphere_minimize, Body, Point, SphereEval};
use crate::error::{Error, Result};
use crate::lp;

const SEEDS: usize = 512;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InradiusReport {
    pub center: Point,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlabReport {
    pub direction: Point,
    pub width: f64,
    pub support_plus: f64,
    pub support_minus: f64,
}

/// Largest inscribed ball. The ball `B(x, t)` lies in `K` iff
/// `x·u + t ≤ h(u)` for all unit `u`, so this is an LP over a direction
/// grid, refined by cutting planes at the current center's foot normal.
pub fn inradius(body: &Body) -> Result<InradiusReport> {
    let dim = body.dim();
    let mut rows: Vec<(Point, f64)> = directions::sphere_grid(dim, SEEDS)
        .into_iter()
        .map(|u| {
            let (h, _) = body.support_and_point(&u);
            (u, h)
        })
        .collect();
    let tol = body.tolerance();
    for _ in 0..100 {
        let (center, bound) = lp::max_margin(dim, &rows)?;
        let proj = body.project(&center)?;
        if bound - proj.distance <= tol {
            return Ok(InradiusReport {
                center,
                radius: proj.distance,
            });
        }
        let (h, _) = body.support_and_point(&proj.normal);
        rows.push((proj.normal, h));
    }
    Err(Error::numerical("inradius", "cutting planes did not close the gap"))
}

pub(crate) fn width_objective(body: &Body, u: &Point, sign: f64) -> SphereEval {
    let (hp, pp) = body.support_and_point(u);
    let minus = -u;
    let (hm, pm) = body.support_and_point(&minus);
    let w = hp + hm;
    let diff = pp - pm;
    let grad = &diff - u * u.dot(&diff);
    let n = body.dim();
    let hess = body.radii_matrix(u) + body.radii_matrix(&minus)
        - (DMatrix::identity(n, n) - u * u.transpose()) * w;
    SphereEval {
        value: sign * w,
        grad: grad * sign,
        hess: hess * sign,
    }
}

fn slab(body: &Body, u: Point) -> SlabReport {
    let (hp, _) = body.support_and_point(&u);
    let (hm, _) = body.support_and_point(&-&u);
    SlabReport {
        direction: u,
        width: hp + hm,
        support_plus: hp,
        support_minus: hm,
    }
}

/// Narrowest slab: minimizes `h(u) + h(−u)` over unit directions.
pub fn width(body: &Body) -> Result<SlabReport> {
    if body.dim() == 2 {
        let theta = extremal_planar_width(body, 1.0)?;
        return Ok(slab(body, super::point(&[theta.cos(), theta.sin()])));
    }
    let u = extremal_general_width(body, 1.0)?;
    Ok(slab(body, u))
}

/// Widest slab (the diameter for convex bodies).
pub fn diameter_direction(body: &Body) -> Result<SlabReport> {
    if body.dim() == 2 {
        let theta = extremal_planar_width(body, -1.0)?;
        return Ok(slab(body, super::point(&[theta.cos(), theta.sin()])));
    }
    let u = extremal_general_width(body, -1.0)?;
    Ok(slab(body, u))
}

/// Planar width derivative `w'(θ) = (∇h(u) − ∇h(−u))·t`.
pub(crate) fn planar_width_slope(body: &Body, theta: f64) -> (f64, f64) {
    let (c, s) = (theta.cos(), theta.sin());
    let mut plus = [0.0; 2];
    let mut minus = [0.0; 2];
    let hp = body.accumulate_support(&[c, s], &mut plus);
    let hm = body.accumulate_support(&[-c, -s], &mut minus);
    let slope = -(plus[0] - minus[0]) * s + (plus[1] - minus[1]) * c;
    (hp + hm, slope)
}

/// Sign changes of `sign·w'` on a half-circle grid, polished by bisection.
pub(crate) fn planar_width_critical(body: &Body, count: usize) -> Vec<(f64, f64)> {
    let grid = directions::half_circle(count);
    let step = std::f64::consts::PI / count as f64;
    let mut out = Vec::new();
    for &a in &grid {
        let b = a + step;
        let (_, fa) = planar_width_slope(body, a);
        let (_, fb) = planar_width_slope(body, b);
        if fa == 0.0 {
            out.push((a, planar_width_slope(body, a).0));
            continue;
        }
        if fa.signum() == fb.signum() || fb == 0.0 {
            continue;
        }
        let (mut lo, mut hi, mut flo) = (a, b, fa);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-15 {
                break;
            }
            let (_, fm) = planar_width_slope(body, mid);
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        let theta = 0.5 * (lo + hi);
        out.push((theta, planar_width_slope(body, theta).0));
    }
    out
}

fn extremal_planar_width(body: &Body, sign: f64) -> Result<f64> {
    let critical = planar_width_critical(body, SEEDS);
    if critical.is_empty() {
        // Constant width up to rounding: any direction is extremal.
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    critical
        .into_iter()
        .min_by(|a, b| (sign * a.1).total_cmp(&(sign * b.1)))
        .map(|(t, _)| t)
        .ok_or_else(|| Error::numerical("width", "no extremal direction"))
}

fn extremal_general_width(body: &Body, sign: f64) -> Result<Point> {
    let seeds = directions::sphere_grid(body.dim(), SEEDS);
    let mut scored: Vec<(f64, usize)> = seeds
        .iter()
        .enumerate()
        .map(|(k, u)| (width_objective(body, u, sign).value, k))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tol = 1e-13 * (1.0 + body.extent());
    scored
        .iter()
        .take(4)
        .map(|&(_, k)| sphere_minimize(seeds[k].clone(), &|u| width_objective(body, u, sign), tol, 200))
        .filter(|(_, _, ok)| *ok)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(u, _, _)| u)
        .ok_or_else(|| Error::numerical("width", "sphere search did not converge"))
}
