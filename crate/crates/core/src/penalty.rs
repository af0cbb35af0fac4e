//! Smooth cutoff, truncated boundary distance and the barrier potential
//! `U_δ = h_δ⁻² − (2δ)⁻²` with `h_δ = δ·ρ(d/δ)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{inradius, Body, Point};

/// Below `UNDERFLOW_FLOOR · δ` the truncated distance is treated as a
/// barrier hit rather than evaluated.
pub const UNDERFLOW_FLOOR: f64 = 1e-12;

/// Knots of the cutoff: identity below `CUTOFF_KNOTS.0`, constant 2 above `CUTOFF_KNOTS.1`.
pub const CUTOFF_KNOTS: (f64, f64) = (1.0, 3.0);

/// Coefficients of the quintic piece of ρ in `s = (t − 1)/2`, lowest first.
pub const CUTOFF_QUINTIC: [f64; 6] = [1.0, 2.0, 0.0, -2.0, 1.0, 0.0];

fn check_nonnegative(t: f64) -> Result<()> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::invalid(format!("cutoff argument must be ≥ 0, got {t}")));
    }
    Ok(())
}

/// `ρ(t)`: identity on `[0,1]`, 2 on `[3,∞)`, a monotone C² quintic between.
pub fn rho(t: f64) -> Result<f64> {
    check_nonnegative(t)?;
    Ok(rho_unchecked(t))
}

pub fn rho_d1(t: f64) -> Result<f64> {
    check_nonnegative(t)?;
    Ok(rho_d1_unchecked(t))
}

pub fn rho_d2(t: f64) -> Result<f64> {
    check_nonnegative(t)?;
    Ok(rho_d2_unchecked(t))
}

fn rho_unchecked(t: f64) -> f64 {
    if t <= 1.0 {
        t
    } else if t >= 3.0 {
        2.0
    } else {
        let s = 0.5 * (t - 1.0);
        1.0 + s * (2.0 + s * s * (-2.0 + s))
    }
}

fn rho_d1_unchecked(t: f64) -> f64 {
    if t <= 1.0 {
        1.0
    } else if t >= 3.0 {
        0.0
    } else {
        let s = 0.5 * (t - 1.0);
        (1.0 - s) * (1.0 - s) * (1.0 + 2.0 * s)
    }
}

fn rho_d2_unchecked(t: f64) -> f64 {
    if t <= 1.0 || t >= 3.0 {
        0.0
    } else {
        let s = 0.5 * (t - 1.0);
        -3.0 * s * (1.0 - s)
    }
}

/// Truncation scale δ and penalty weight ε.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub delta: f64,
    pub epsilon: f64,
}

impl PenaltyParams {
    pub fn new(delta: f64, epsilon: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be positive, got {delta}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(PenaltyParams { delta, epsilon })
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        PenaltyParams::new(self.delta, epsilon)
    }

    /// Checks `δ ≤ r(K)/4` and that the layer `d < 3δ` stays inside the
    /// region where the boundary distance is smooth.
    pub fn validate_for(&self, body: &Body, inradius: f64) -> Result<()> {
        if self.delta > inradius / 4.0 {
            return Err(Error::invalid(format!(
                "delta {} exceeds inradius/4 = {}",
                self.delta,
                inradius / 4.0
            )));
        }
        let reach = body.min_curvature_radius();
        if 3.0 * self.delta >= reach {
            return Err(Error::invalid(format!(
                "3·delta = {} reaches the focal distance {reach}",
                3.0 * self.delta
            )));
        }
        Ok(())
    }
}

/// Default truncation scale: a tenth of the inradius, shrunk further if
/// needed to keep the barrier layer below the focal distance.
pub fn default_delta(body: &Body) -> Result<f64> {
    let r = inradius(body)?.radius;
    let reach = body.min_curvature_radius();
    Ok((r / 10.0).min(0.3 * reach))
}

/// Everything the Lagrangian needs from one node.
#[derive(Clone, Debug)]
pub struct PotentialSample {
    pub distance: f64,
    pub h: f64,
    pub value: f64,
    pub gradient: Option<Point>,
    pub hessian: Option<DMatrix<f64>>,
}

/// Derivative order requested from [`evaluate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value,
    Gradient,
    Hessian,
}

/// Evaluates `U_δ` and, on request, its gradient and Hessian at `q`.
pub fn evaluate(body: &Body, delta: f64, q: &Point, order: Order) -> Result<PotentialSample> {
    let proj = body.project(q)?;
    let d = proj.distance;
    if d <= 0.0 {
        return Err(Error::DomainViolation { distance: d });
    }
    let t = d / delta;
    let h = delta * rho_unchecked(t);
    if h < UNDERFLOW_FLOOR * delta {
        return Err(Error::OverflowGuard { distance: d });
    }
    let n = body.dim();
    if t >= CUTOFF_KNOTS.1 {
        return Ok(PotentialSample {
            distance: d,
            h,
            value: 0.0,
            gradient: (order >= Order::Gradient).then(|| Point::zeros(n)),
            hessian: (order >= Order::Hessian).then(|| DMatrix::zeros(n, n)),
        });
    }
    let value = h.powi(-2) - (2.0 * delta).powi(-2);
    let mut sample = PotentialSample {
        distance: d,
        h,
        value,
        gradient: None,
        hessian: None,
    };
    if order >= Order::Gradient {
        let grad_d = proj.distance_gradient();
        let grad_h = &grad_d * rho_d1_unchecked(t);
        sample.gradient = Some(&grad_h * (-2.0 * h.powi(-3)));
        if order == Order::Hessian {
            let hess_d = proj.distance_hessian()?;
            let hess_h = &grad_d * grad_d.transpose() * (rho_d2_unchecked(t) / delta)
                + hess_d * rho_d1_unchecked(t);
            let hess = &grad_h * grad_h.transpose() * (6.0 * h.powi(-4)) - hess_h * (2.0 * h.powi(-3));
            sample.hessian = Some(hess);
        }
    }
    Ok(sample)
}

/// `h_δ(q) = δ·ρ(d(q)/δ)`.
pub fn h_delta(body: &Body, delta: f64, q: &Point) -> Result<f64> {
    Ok(evaluate(body, delta, q, Order::Value)?.h)
}

#[allow(non_snake_case)]
pub fn U_delta(body: &Body, delta: f64, q: &Point) -> Result<f64> {
    Ok(evaluate(body, delta, q, Order::Value)?.value)
}

#[allow(non_snake_case)]
pub fn grad_U(body: &Body, delta: f64, q: &Point) -> Result<Point> {
    Ok(evaluate(body, delta, q, Order::Gradient)?
        .gradient
        .expect("gradient requested"))
}

#[allow(non_snake_case)]
pub fn hess_U(body: &Body, delta: f64, q: &Point) -> Result<DMatrix<f64>> {
    Ok(evaluate(body, delta, q, Order::Hessian)?
        .hessian
        .expect("hessian requested"))
}

/// Force density `2ε·h⁻³` used to locate bounces.
pub fn force_density(epsilon: f64, h: f64) -> f64 {
    2.0 * epsilon * h.powi(-3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;

    fn poly(coeffs: &[f64], s: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(rho(0.5).unwrap(), 0.5);
        assert_eq!(rho(4.0).unwrap(), 2.0);
        let slope = rho_d1(2.0).unwrap();
        assert!((0.0..=1.0).contains(&slope));
        assert!(matches!(rho(-0.1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn cutoff_matches_coefficient_table() {
        for k in 0..=20 {
            let t = 1.0 + 0.1 * k as f64;
            let s = 0.5 * (t - 1.0);
            assert!((rho_unchecked(t) - poly(&CUTOFF_QUINTIC, s)).abs() < 1e-15);
        }
    }

    #[test]
    fn hermite_oracle_reproduces_quintic() {
        // Independent construction: solve the six Hermite conditions
        // ρ(1)=1, ρ'(1)=1, ρ''(1)=0, ρ(3)=2, ρ'(3)=0, ρ''(3)=0 in powers of s.
        // With t = 1 + 2s, d/dt = ½ d/ds.
        let mut m = DMatrix::zeros(6, 6);
        let mut rhs = nalgebra::DVector::zeros(6);
        for j in 0..6 {
            let jf = j as f64;
            m[(0, j)] = if j == 0 { 1.0 } else { 0.0 };
            m[(1, j)] = if j == 1 { 0.5 } else { 0.0 };
            m[(2, j)] = if j == 2 { 0.5 } else { 0.0 };
            m[(3, j)] = 1.0;
            m[(4, j)] = 0.5 * jf;
            m[(5, j)] = 0.25 * jf * (jf - 1.0);
        }
        rhs[0] = 1.0;
        rhs[1] = 1.0;
        rhs[3] = 2.0;
        let coeffs = m.lu().solve(&rhs).unwrap();
        for j in 0..6 {
            assert!((coeffs[j] - CUTOFF_QUINTIC[j]).abs() < 1e-13, "coefficient {j}");
        }
        // Frozen from the oracle: ρ(2) = 29/16.
        assert!((poly(coeffs.as_slice(), 0.5) - 1.8125).abs() < 1e-14);
        assert_eq!(rho(2.0).unwrap(), 1.8125);
    }

    #[test]
    fn cutoff_is_c2_at_knots() {
        for knot in [1.0, 3.0] {
            let (a, b) = (knot - 1e-9, knot + 1e-9);
            assert!((rho_unchecked(a) - rho_unchecked(b)).abs() < 1e-8);
            assert!((rho_d1_unchecked(a) - rho_d1_unchecked(b)).abs() < 1e-8);
            assert!((rho_d2_unchecked(a) - rho_d2_unchecked(b)).abs() < 1e-8);
        }
    }

    #[test]
    fn truncated_distance_examples() {
        let disc = Body::ball(&[0.0, 0.0], 1.0).unwrap();
        let delta = 0.1;
        // d = δ/2, 5δ and 2δ along the x-axis.
        let at = |d: f64| point(&[1.0 - d, 0.0]);
        assert!((h_delta(&disc, delta, &at(0.05)).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(h_delta(&disc, delta, &at(0.5)).unwrap(), 0.2);
        let mid = h_delta(&disc, delta, &at(0.2)).unwrap();
        assert!((mid - 0.18125).abs() < 1e-12);
    }

    #[test]
    fn potential_examples() {
        let disc = Body::ball(&[0.0, 0.0], 1.0).unwrap();
        let delta = 0.1;
        let at = |d: f64| point(&[1.0 - d, 0.0]);
        let u_half = U_delta(&disc, delta, &at(0.05)).unwrap();
        assert!((u_half - 15.0 / (4.0 * delta * delta)).abs() < 1e-9);
        let u_one = U_delta(&disc, delta, &at(0.1)).unwrap();
        assert!((u_one - 3.0 / (4.0 * delta * delta)).abs() < 1e-9);
        assert_eq!(U_delta(&disc, delta, &at(0.5)).unwrap(), 0.0);
        assert_eq!(grad_U(&disc, delta, &at(0.5)).unwrap().norm(), 0.0);
    }

    #[test]
    fn barrier_errors() {
        let disc = Body::ball(&[0.0, 0.0], 1.0).unwrap();
        assert!(matches!(
            U_delta(&disc, 0.1, &point(&[1.5, 0.0])),
            Err(Error::DomainViolation { .. })
        ));
        assert!(matches!(
            U_delta(&disc, 0.1, &point(&[1.0 - 1e-15, 0.0])),
            Err(Error::OverflowGuard { .. })
        ));
    }

    #[test]
    fn validation_rejects_large_delta() {
        let e = Body::ellipsoid(&[0.0, 0.0], &[2.0, 1.0]).unwrap();
        assert!(PenaltyParams::new(0.3, 1e-3).unwrap().validate_for(&e, 1.0).is_err());
        assert!(PenaltyParams::new(0.1, 1e-3).unwrap().validate_for(&e, 1.0).is_ok());
        assert!(PenaltyParams::new(0.0, 1e-3).is_err());
    }
}
