//! Time-uniform discretizations of loops and free-endpoint paths, and the
//! penalized Lagrangian `E − ε∫U_δ` with its gradient and Hessian.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Body, Point};
use crate::penalty::{self, Order, PenaltyParams};

pub const MIN_NODES: usize = 8;

/// Polyline on a uniform time grid: `N` nodes on `S¹` (closed, `Δt = 1/N`)
/// or on `[0,1]` with free endpoints (open, `Δt = 1/(N−1)`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveRecord", into = "CurveRecord")]
pub struct DiscreteCurve {
    nodes: Vec<Point>,
    closed: bool,
}

/// Flat serialized form: row-major node coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveRecord {
    pub n: usize,
    #[serde(rename = "N")]
    pub count: usize,
    pub closed: bool,
    pub coords: Vec<f64>,
}

impl TryFrom<CurveRecord> for DiscreteCurve {
    type Error = Error;

    fn try_from(rec: CurveRecord) -> Result<Self> {
        if rec.coords.len() != rec.n * rec.count {
            return Err(Error::invalid(format!(
                "curve record has {} coordinates, expected {}·{}",
                rec.coords.len(),
                rec.n,
                rec.count
            )));
        }
        DiscreteCurve::from_flat(rec.n, &rec.coords, rec.closed)
    }
}

impl From<DiscreteCurve> for CurveRecord {
    fn from(c: DiscreteCurve) -> Self {
        CurveRecord {
            n: c.dim(),
            count: c.len(),
            closed: c.closed,
            coords: c.flat().as_slice().to_vec(),
        }
    }
}

impl DiscreteCurve {
    pub fn new(nodes: Vec<Point>, closed: bool) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(Error::invalid(format!(
                "a curve needs at least {MIN_NODES} nodes, got {}",
                nodes.len()
            )));
        }
        let dim = nodes[0].len();
        if dim == 0 || nodes.iter().any(|x| x.len() != dim) {
            return Err(Error::invalid("curve nodes have inconsistent dimensions"));
        }
        if nodes.iter().any(|x| !x.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid("curve has non-finite coordinates"));
        }
        Ok(DiscreteCurve { nodes, closed })
    }

    pub fn from_flat(dim: usize, coords: &[f64], closed: bool) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid("flat coordinates do not split into nodes"));
        }
        let nodes = coords
            .chunks(dim)
            .map(DVector::from_column_slice)
            .collect();
        DiscreteCurve::new(nodes, closed)
    }

    pub fn constant(point: &Point, count: usize, closed: bool) -> Result<Self> {
        DiscreteCurve::new(vec![point.clone(); count], closed)
    }

    /// Uniformly parametrized circle in the plane spanned by the first two axes.
    pub fn circle(center: &Point, radius: f64, count: usize) -> Result<Self> {
        let nodes = (0..count)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / count as f64;
                let mut x = center.clone();
                x[0] += radius * t.cos();
                x[1] += radius * t.sin();
                x
            })
            .collect();
        DiscreteCurve::new(nodes, true)
    }

    /// Open straight path from `a` to `b` at constant speed.
    pub fn segment(a: &Point, b: &Point, count: usize) -> Result<Self> {
        let nodes = (0..count)
            .map(|i| {
                let s = i as f64 / (count - 1) as f64;
                a * (1.0 - s) + b * s
            })
            .collect();
        DiscreteCurve::new(nodes, false)
    }

    /// Constant-speed traversal of a polygon on the time grid, starting at
    /// the first vertex; closed polygons wrap back to it.
    pub fn polygon(vertices: &[Point], count: usize, closed: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::invalid("a polygon needs at least two vertices"));
        }
        let mut legs: Vec<(Point, Point)> = vertices.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        if closed {
            legs.push((vertices[vertices.len() - 1].clone(), vertices[0].clone()));
        }
        let lengths: Vec<f64> = legs.iter().map(|(a, b)| (b - a).norm()).collect();
        let total: f64 = lengths.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("polygon has zero length"));
        }
        let steps = if closed { count } else { count - 1 };
        let nodes = (0..count)
            .map(|i| {
                let mut s = total * i as f64 / steps as f64;
                let last = legs.len() - 1;
                for (k, ((a, b), len)) in legs.iter().zip(&lengths).enumerate() {
                    if s <= *len || k == last {
                        let frac = if *len > 0.0 { (s / len).min(1.0) } else { 0.0 };
                        return a * (1.0 - frac) + b * frac;
                    }
                    s -= len;
                }
                unreachable!("arclength exhausted")
            })
            .collect();
        DiscreteCurve::new(nodes, closed)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.len()
        } else {
            self.len() - 1
        }
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.segment_count() as f64
    }

    /// Time of node `i`.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    /// Quadrature weights: 1 everywhere, ½ at the ends of open curves.
    pub fn weight(&self, i: usize) -> f64 {
        if !self.closed && (i == 0 || i + 1 == self.len()) {
            0.5
        } else {
            1.0
        }
    }

    /// Segment `k` as `(start, end)`.
    pub fn segment_nodes(&self, k: usize) -> (&Point, &Point) {
        (&self.nodes[k], &self.nodes[(k + 1) % self.len()])
    }

    pub fn flat(&self) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(self.len() * n, |k, _| self.nodes[k / n][k % n])
    }

    pub fn with_flat(&self, x: &DVector<f64>) -> DiscreteCurve {
        let n = self.dim();
        let nodes = (0..self.len())
            .map(|i| DVector::from_column_slice(&x.as_slice()[i * n..(i + 1) * n]))
            .collect();
        DiscreteCurve {
            nodes,
            closed: self.closed,
        }
    }

    pub fn translated(&self, shift: &Point) -> DiscreteCurve {
        self.map(|x| x + shift)
    }

    pub fn map(&self, f: impl Fn(&Point) -> Point) -> DiscreteCurve {
        DiscreteCurve {
            nodes: self.nodes.iter().map(f).collect(),
            closed: self.closed,
        }
    }

    /// Largest node-wise distance to another curve on the same grid.
    pub fn max_distance(&self, other: &DiscreteCurve) -> f64 {
        self.nodes
            .iter()
            .zip(&other.nodes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Linear interpolation of the curve at time `t` (wrapped for loops).
    pub fn at_time(&self, t: f64) -> Point {
        let steps = self.segment_count() as f64;
        let mut s = t * steps;
        if self.closed {
            s = s.rem_euclid(steps);
        } else {
            s = s.clamp(0.0, steps);
        }
        let i = (s.floor() as usize).min(self.segment_count() - 1);
        let frac = s - i as f64;
        let (a, b) = self.segment_nodes(i);
        a * (1.0 - frac) + b * frac
    }

    /// Writes `t, x0, x1, …` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((0..self.dim()).map(|k| format!("x{k}")));
        w.write_record(&header)?;
        for (i, x) in self.nodes.iter().enumerate() {
            let mut row = vec![format!("{}", self.time(i))];
            row.extend(x.iter().map(|c| format!("{c}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-node vectors over a curve's time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveTangent {
    vectors: Vec<Point>,
    closed: bool,
}

impl CurveTangent {
    pub fn new(vectors: Vec<Point>, closed: bool) -> Self {
        CurveTangent { vectors, closed }
    }

    pub fn from_flat(dim: usize, x: &DVector<f64>, closed: bool) -> Self {
        let vectors = x
            .as_slice()
            .chunks(dim)
            .map(DVector::from_column_slice)
            .collect();
        CurveTangent { vectors, closed }
    }

    pub fn vectors(&self) -> &[Point] {
        &self.vectors
    }

    pub fn flat(&self) -> DVector<f64> {
        let n = self.vectors[0].len();
        DVector::from_fn(self.vectors.len() * n, |k, _| self.vectors[k / n][k % n])
    }

    /// Euclidean norm of the stacked node coordinates.
    pub fn node_norm(&self) -> f64 {
        self.vectors.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt()
    }

    /// Discrete `∫|v|² + |v̇|²` norm on the curve's time grid.
    pub fn w12_norm(&self) -> f64 {
        let count = self.vectors.len();
        let segments = if self.closed { count } else { count - 1 };
        let dt = 1.0 / segments as f64;
        let mut sum = 0.0;
        for i in 0..count {
            let w = if !self.closed && (i == 0 || i + 1 == count) { 0.5 } else { 1.0 };
            sum += w * dt * self.vectors[i].norm_squared();
        }
        for k in 0..segments {
            let diff = &self.vectors[(k + 1) % count] - &self.vectors[k];
            sum += diff.norm_squared() / dt;
        }
        sum.sqrt()
    }
}

/// `Σ |xᵢ₊₁ − xᵢ|² / (2Δt)`.
pub fn energy(c: &DiscreteCurve) -> f64 {
    let dt = c.dt();
    (0..c.segment_count())
        .map(|k| {
            let (a, b) = c.segment_nodes(k);
            (b - a).norm_squared()
        })
        .sum::<f64>()
        / (2.0 * dt)
}

/// `Σ |xᵢ₊₁ − xᵢ|`.
pub fn length(c: &DiscreteCurve) -> f64 {
    (0..c.segment_count())
        .map(|k| {
            let (a, b) = c.segment_nodes(k);
            (b - a).norm()
        })
        .sum()
}

/// Symmetric block-tridiagonal operator; cyclic when `closed`. All
/// off-diagonal blocks equal `coupling · I`.
#[derive(Clone, Debug)]
pub struct BlockTridiagonal {
    pub diagonal: Vec<DMatrix<f64>>,
    pub coupling: f64,
    pub closed: bool,
}

impl BlockTridiagonal {
    pub fn size(&self) -> usize {
        self.diagonal.len() * self.block()
    }

    fn block(&self) -> usize {
        self.diagonal[0].nrows()
    }

    fn neighbours(&self, i: usize) -> impl Iterator<Item = usize> {
        let count = self.diagonal.len();
        let closed = self.closed;
        let prev = if i > 0 {
            Some(i - 1)
        } else if closed {
            Some(count - 1)
        } else {
            None
        };
        let next = if i + 1 < count {
            Some(i + 1)
        } else if closed {
            Some(0)
        } else {
            None
        };
        prev.into_iter().chain(next)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.block();
        let mut m = DMatrix::zeros(self.size(), self.size());
        for (i, d) in self.diagonal.iter().enumerate() {
            m.view_mut((i * n, i * n), (n, n)).copy_from(d);
            for j in self.neighbours(i) {
                for k in 0..n {
                    m[(i * n + k, j * n + k)] += self.coupling;
                }
            }
        }
        m
    }

    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.block();
        let mut y = DVector::zeros(self.size());
        for (i, d) in self.diagonal.iter().enumerate() {
            let xi = x.rows(i * n, n);
            let mut yi = d * xi;
            for j in self.neighbours(i) {
                yi += x.rows(j * n, n) * self.coupling;
            }
            y.rows_mut(i * n, n).copy_from(&yi);
        }
        y
    }

    /// `max |Aᵢⱼ − Aⱼᵢ|`.
    pub fn symmetry_defect(&self) -> f64 {
        let m = self.to_dense();
        (&m - m.transpose()).amax()
    }
}

/// Everything evaluated at one curve.
#[derive(Clone, Debug)]
pub struct LagrangianEval {
    pub energy: f64,
    /// `∫ εU_δ dt` by the trapezoid rule.
    pub potential_integral: f64,
    pub lagrangian: f64,
    /// Truncated distance `h_δ` per node.
    pub h: Vec<f64>,
    pub gradient: Option<DVector<f64>>,
    pub hessian: Option<BlockTridiagonal>,
}

pub fn evaluate(c: &DiscreteCurve, body: &Body, p: &PenaltyParams, order: Order) -> Result<LagrangianEval> {
    if c.dim() != body.dim() {
        return Err(Error::invalid(format!(
            "curve in dimension {} but body in {}",
            c.dim(),
            body.dim()
        )));
    }
    let samples: Vec<penalty::PotentialSample> = c
        .nodes
        .par_iter()
        .map(|x| penalty::evaluate(body, p.delta, x, order))
        .collect::<Result<_>>()?;
    let dt = c.dt();
    let count = c.len();
    let n = c.dim();
    let energy = energy(c);
    let potential_integral = p.epsilon
        * dt
        * samples
            .iter()
            .enumerate()
            .map(|(i, s)| c.weight(i) * s.value)
            .sum::<f64>();
    let mut out = LagrangianEval {
        energy,
        potential_integral,
        lagrangian: energy - potential_integral,
        h: samples.iter().map(|s| s.h).collect(),
        gradient: None,
        hessian: None,
    };
    if order >= Order::Gradient {
        let mut g = DVector::zeros(count * n);
        for i in 0..count {
            let x = &c.nodes[i];
            let mut gi: Point = DVector::zeros(n);
            if c.closed || i > 0 {
                gi += x - &c.nodes[(i + count - 1) % count];
            }
            if c.closed || i + 1 < count {
                gi += x - &c.nodes[(i + 1) % count];
            }
            gi /= dt;
            let grad_u = samples[i].gradient.as_ref().expect("gradient evaluated");
            gi -= grad_u * (p.epsilon * dt * c.weight(i));
            g.rows_mut(i * n, n).copy_from(&gi);
        }
        out.gradient = Some(g);
    }
    if order == Order::Hessian {
        let identity = DMatrix::<f64>::identity(n, n);
        let diagonal = (0..count)
            .map(|i| {
                let ends = if c.closed || (i > 0 && i + 1 < count) { 2.0 } else { 1.0 };
                let hess_u = samples[i].hessian.as_ref().expect("hessian evaluated");
                &identity * (ends / dt) - hess_u * (p.epsilon * dt * c.weight(i))
            })
            .collect();
        out.hessian = Some(BlockTridiagonal {
            diagonal,
            coupling: -1.0 / dt,
            closed: c.closed,
        });
    }
    Ok(out)
}

/// `E(c) − ε∫U_δ(c)`.
pub fn lagrangian(c: &DiscreteCurve, body: &Body, p: &PenaltyParams) -> Result<f64> {
    Ok(evaluate(c, body, p, Order::Value)?.lagrangian)
}

pub fn grad_lagrangian(c: &DiscreteCurve, body: &Body, p: &PenaltyParams) -> Result<CurveTangent> {
    let eval = evaluate(c, body, p, Order::Gradient)?;
    Ok(CurveTangent::from_flat(
        c.dim(),
        eval.gradient.as_ref().expect("gradient evaluated"),
        c.closed,
    ))
}

pub fn hess_lagrangian(c: &DiscreteCurve, body: &Body, p: &PenaltyParams) -> Result<BlockTridiagonal> {
    Ok(evaluate(c, body, p, Order::Hessian)?
        .hessian
        .expect("hessian evaluated"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point;

    fn disc() -> Body {
        Body::ball(&[0.0, 0.0], 1.0).unwrap()
    }

    #[test]
    fn energy_and_length_examples() {
        let c = DiscreteCurve::constant(&point(&[0.1, 0.2]), 16, true).unwrap();
        assert_eq!(energy(&c), 0.0);
        assert_eq!(length(&c), 0.0);

        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]].map(|v| point(&v));
        let sq = DiscreteCurve::polygon(&square, 16, true).unwrap();
        assert!((length(&sq) - 4.0).abs() < 1e-14);
        assert!((length(&sq).powi(2) / (2.0 * energy(&sq)) - 1.0).abs() < 1e-14);

        let circle = DiscreteCurve::circle(&point(&[0.0, 0.0]), 1.0, 4096).unwrap();
        let expected = 2.0 * std::f64::consts::PI.powi(2);
        assert!((energy(&circle) - expected).abs() < 1e-5);

        let seg = DiscreteCurve::segment(&point(&[0.0, 0.0]), &point(&[3.0, 0.0]), 10).unwrap();
        assert!((energy(&seg) - 4.5).abs() < 1e-13);
    }

    #[test]
    fn short_curves_rejected() {
        assert!(DiscreteCurve::constant(&point(&[0.0, 0.0]), 7, true).is_err());
    }

    #[test]
    fn lagrangian_examples() {
        let body = disc();
        let p = PenaltyParams::new(0.1, 1e-3).unwrap();
        let c = DiscreteCurve::circle(&point(&[0.0, 0.0]), 0.5, 32).unwrap();
        assert_eq!(lagrangian(&c, &body, &p).unwrap(), energy(&c));
        let center = DiscreteCurve::constant(&point(&[0.0, 0.0]), 16, true).unwrap();
        assert_eq!(lagrangian(&center, &body, &p).unwrap(), 0.0);
        let near = DiscreteCurve::constant(&point(&[0.9, 0.0]), 16, true).unwrap();
        let expected = -3.0 * 1e-3 / (4.0 * 0.01);
        assert!((lagrangian(&near, &body, &p).unwrap() - expected).abs() < 1e-10);
        let outside = DiscreteCurve::constant(&point(&[1.5, 0.0]), 16, true).unwrap();
        assert!(matches!(lagrangian(&outside, &body, &p), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn straight_chord_residuals() {
        let body = disc();
        let p = PenaltyParams::new(0.1, 1e-3).unwrap();
        let c = DiscreteCurve::segment(&point(&[-0.5, 0.0]), &point(&[0.5, 0.0]), 11).unwrap();
        let g = grad_lagrangian(&c, &body, &p).unwrap();
        let v = g.vectors();
        for x in &v[1..10] {
            assert!(x.norm() < 1e-12);
        }
        // Endpoint residuals are ∓ velocity: (x0 − x1)/Δt = −γ̇(0).
        assert!((&v[0] - point(&[-1.0, 0.0])).norm() < 1e-12);
        assert!((&v[10] - point(&[1.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn plateau_hessian_is_laplacian_with_translation_kernel() {
        let body = disc();
        let p = PenaltyParams::new(0.1, 1e-3).unwrap();
        let c = DiscreteCurve::circle(&point(&[0.0, 0.0]), 0.4, 16).unwrap();
        let h = hess_lagrangian(&c, &body, &p).unwrap();
        let eig = h.to_dense().symmetric_eigenvalues();
        let scale = eig.amax();
        assert!(eig.iter().all(|l| *l > -1e-10 * scale));
        assert_eq!(eig.iter().filter(|l| l.abs() < 1e-10 * scale).count(), 2);
        let g = grad_lagrangian(&c, &body, &p).unwrap().flat();
        let shifted = grad_lagrangian(&c.translated(&point(&[0.05, -0.02])), &body, &p)
            .unwrap()
            .flat();
        assert!((g - shifted).norm() < 1e-12);
    }

    #[test]
    fn matvec_matches_dense() {
        let body = disc();
        let p = PenaltyParams::new(0.1, 1e-2).unwrap();
        for closed in [true, false] {
            let nodes: Vec<Point> = (0..12)
                .map(|i| point(&[0.85 * (i as f64 * 0.5).cos(), 0.3 * (i as f64).sin()]))
                .collect();
            let c = DiscreteCurve::new(nodes, closed).unwrap();
            let h = hess_lagrangian(&c, &body, &p).unwrap();
            let x = DVector::from_fn(24, |k, _| (k as f64 * 0.7).sin());
            assert!((h.matvec(&x) - h.to_dense() * &x).norm() < 1e-9);
            assert!(h.symmetry_defect() <= 1e-10);
        }
    }

    #[test]
    fn json_header_round_trip() {
        let c = DiscreteCurve::circle(&point(&[0.0, 0.0]), 0.5, 8).unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"N\":8"));
        let back: DiscreteCurve = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn norms() {
        let t = CurveTangent::new(vec![point(&[1.0, 0.0]); 8], true);
        assert!((t.node_norm() - 8f64.sqrt()).abs() < 1e-15);
        assert!((t.w12_norm() - 1.0).abs() < 1e-15);
    }
}
