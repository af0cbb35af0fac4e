//! Critical points of the discretized penalized Lagrangian, their Morse
//! indices, and continuation of a critical point as `ε → 0`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Body, Point};
use crate::loopspace::{self, CurveTangent, DiscreteCurve, LagrangianEval};
use crate::penalty::{self, Order, PenaltyParams};

/// Energy below which a critical point counts as a constant loop.
pub const COLLAPSE_ENERGY: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Node-metric gradient tolerance; `None` means `1e−9·N`.
    pub grad_tol: Option<f64>,
    pub max_iterations: usize,
    /// Initial cap on the displacement of any single node per step.
    pub trust_radius: f64,
    /// Line-search halvings before a step is abandoned.
    pub max_halvings: usize,
    /// Eigenvalue tolerance relative to the largest |eigenvalue|.
    pub eig_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            grad_tol: None,
            max_iterations: 200,
            trust_radius: 0.25,
            max_halvings: 40,
            eig_tol: 1e-8,
        }
    }
}

impl SolverOptions {
    pub fn tolerance_for(&self, nodes: usize) -> f64 {
        self.grad_tol.unwrap_or(1e-9 * nodes as f64)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriticalPointRecord {
    pub curve: DiscreteCurve,
    /// `E − ε∫U`.
    pub lagrangian_value: f64,
    pub grad_norm: f64,
    pub grad_norm_w12: f64,
    pub morse_index: usize,
    /// Eigenvalues within the tolerance band around zero.
    pub near_zero: usize,
    /// `E + ε∫U`, the time average of the conserved `|γ̇|²/2 + εU`.
    pub energy_value: f64,
    /// Kinetic part `E`.
    pub kinetic_energy: f64,
    pub potential_integral: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub iterations: usize,
}

impl CriticalPointRecord {
    /// `|E − (L + 2∫εU)|`.
    pub fn identity_defect(&self) -> f64 {
        (self.energy_value - (self.lagrangian_value + 2.0 * self.potential_integral)).abs()
    }

    pub fn params(&self) -> PenaltyParams {
        PenaltyParams {
            delta: self.delta,
            epsilon: self.epsilon,
        }
    }
}

/// Index and near-zero count from a spectrum.
pub fn classify_spectrum(eigenvalues: &DVector<f64>, eig_tol: f64) -> (usize, usize) {
    let scale = eigenvalues.amax();
    let band = eig_tol * scale;
    let negative = eigenvalues.iter().filter(|l| **l < -band).count();
    let near_zero = eigenvalues.iter().filter(|l| l.abs() <= band).count();
    (negative, near_zero)
}

/// Number of negative eigenvalues of the Hessian at a record's curve.
pub fn morse_index(rec: &CriticalPointRecord, body: &Body, eig_tol: f64) -> Result<usize> {
    let hess = loopspace::hess_lagrangian(&rec.curve, body, &rec.params())?;
    let eig = hess.to_dense().symmetric_eigenvalues();
    if eig.iter().any(|l| !l.is_finite()) {
        return Err(Error::numerical("morse_index", "non-finite eigenvalue"));
    }
    Ok(classify_spectrum(&eig, eig_tol).0)
}

fn node_sup(x: &DVector<f64>, dim: usize) -> f64 {
    x.as_slice()
        .chunks(dim)
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Discrete Laplacian of the curve's time grid plus the identity.
fn preconditioner(curve: &DiscreteCurve) -> DMatrix<f64> {
    let count = curve.len();
    let n = curve.dim();
    let dt = curve.dt();
    let mut m = DMatrix::identity(count * n, count * n);
    for i in 0..count {
        let mut neighbours = Vec::new();
        if curve.closed() || i > 0 {
            neighbours.push((i + count - 1) % count);
        }
        if curve.closed() || i + 1 < count {
            neighbours.push((i + 1) % count);
        }
        for k in 0..n {
            m[(i * n + k, i * n + k)] += neighbours.len() as f64 / dt;
            for &j in &neighbours {
                m[(i * n + k, j * n + k)] -= 1.0 / dt;
            }
        }
    }
    m
}

enum LineSearch {
    Accepted(DVector<f64>, LagrangianEval, f64),
    Rejected { barrier_hits: usize },
}

fn line_search(
    curve: &DiscreteCurve,
    x: &DVector<f64>,
    step: &DVector<f64>,
    merit: f64,
    body: &Body,
    params: &PenaltyParams,
    opts: &SolverOptions,
) -> Result<LineSearch> {
    let mut alpha = 1.0;
    let mut barrier_hits = 0;
    for _ in 0..opts.max_halvings {
        let trial = x + step * alpha;
        match loopspace::evaluate(&curve.with_flat(&trial), body, params, Order::Hessian) {
            Ok(eval) => {
                let g = eval.gradient.as_ref().expect("gradient evaluated");
                if 0.5 * g.norm_squared() <= (1.0 - 1e-4 * alpha) * merit {
                    return Ok(LineSearch::Accepted(trial, eval, alpha));
                }
            }
            Err(e) if e.is_barrier() => barrier_hits += 1,
            Err(Error::NumericalFailure { .. }) => barrier_hits += 1,
            Err(e) => return Err(e),
        }
        alpha *= 0.5;
    }
    Ok(LineSearch::Rejected { barrier_hits })
}

/// Root-finds `∇L = 0` from `seed` by regularized Newton with a trust
/// region and a merit line search on `½‖∇L‖²`, falling back to
/// Laplacian-preconditioned descent on the merit.
pub fn find_critical_point(
    seed: &DiscreteCurve,
    body: &Body,
    params: &PenaltyParams,
    opts: &SolverOptions,
) -> Result<CriticalPointRecord> {
    let dim = seed.dim();
    let tol = opts.tolerance_for(seed.len());
    let mut x = seed.flat();
    let mut eval = loopspace::evaluate(seed, body, params, Order::Hessian)?;
    let mut trust = opts.trust_radius;
    let mut rejected_streak = 0;
    for iter in 0..=opts.max_iterations {
        let g = eval.gradient.clone().expect("gradient evaluated");
        let grad_norm = g.norm();
        if eval.energy < COLLAPSE_ENERGY && grad_norm <= tol.max(1e-12) {
            return Err(Error::Collapsed { energy: eval.energy });
        }
        let hess = eval.hessian.as_ref().expect("hessian evaluated").to_dense();
        let eig = SymmetricEigen::new(hess.clone());
        if grad_norm <= tol {
            if eval.energy < COLLAPSE_ENERGY {
                return Err(Error::Collapsed { energy: eval.energy });
            }
            let (morse_index, near_zero) = classify_spectrum(&eig.eigenvalues, opts.eig_tol);
            let curve = seed.with_flat(&x);
            let grad_norm_w12 = CurveTangent::from_flat(dim, &g, curve.closed()).w12_norm();
            return Ok(CriticalPointRecord {
                curve,
                lagrangian_value: eval.lagrangian,
                grad_norm,
                grad_norm_w12,
                morse_index,
                near_zero,
                energy_value: eval.energy + eval.potential_integral,
                kinetic_energy: eval.energy,
                potential_integral: eval.potential_integral,
                epsilon: params.epsilon,
                delta: params.delta,
                iterations: iter,
            });
        }
        if iter == opts.max_iterations {
            break;
        }
        let merit = 0.5 * grad_norm * grad_norm;
        let scale = eig.eigenvalues.amax();
        let mu2 = (1e-9 * scale).powi(2);
        let coeffs = eig.eigenvectors.transpose() * &g;
        let scaled = DVector::from_fn(coeffs.len(), |k, _| {
            let l = eig.eigenvalues[k];
            -l / (l * l + mu2) * coeffs[k]
        });
        let mut step = &eig.eigenvectors * scaled;
        let disp = node_sup(&step, dim);
        if disp > trust {
            step *= trust / disp;
        }
        let curve = seed.with_flat(&x);
        let outcome = line_search(&curve, &x, &step, merit, body, params, opts)?;
        let (next_x, next_eval, alpha, barrier_hits) = match outcome {
            LineSearch::Accepted(nx, ne, a) => (nx, ne, a, 0),
            LineSearch::Rejected { barrier_hits } => {
                let descent = -(preconditioner(&curve)
                    .cholesky()
                    .ok_or_else(|| Error::numerical("find_critical_point", "preconditioner not SPD"))?
                    .solve(&(&hess * &g)));
                let mut fallback = descent;
                let fd = node_sup(&fallback, dim);
                if fd > trust {
                    fallback *= trust / fd;
                }
                match line_search(&curve, &x, &fallback, merit, body, params, opts)? {
                    LineSearch::Accepted(nx, ne, a) => (nx, ne, a, barrier_hits),
                    LineSearch::Rejected { barrier_hits: more } => {
                        let hits = barrier_hits + more;
                        if hits == 0 {
                            return Err(Error::Diverged {
                                iterations: iter,
                                grad_norm,
                            });
                        }
                        rejected_streak += 1;
                        if rejected_streak >= 5 {
                            return Err(Error::Escaped { rejections: hits });
                        }
                        trust *= 0.1;
                        continue;
                    }
                }
            }
        };
        rejected_streak = 0;
        if alpha >= 1.0 && barrier_hits == 0 && disp >= trust {
            trust *= 2.0;
        } else if alpha < 0.25 {
            trust = (trust * 0.5).max(1e-12);
        }
        x = next_x;
        eval = next_eval;
    }
    Err(Error::Diverged {
        iterations: opts.max_iterations,
        grad_norm: eval.gradient.as_ref().map_or(f64::NAN, |g| g.norm()),
    })
}

/// Decreasing `ε` values `a, a·ratio, …` (`steps` of them).
pub fn geometric_schedule(start: f64, ratio: f64, steps: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && start.is_finite()) || !(ratio > 0.0 && ratio < 1.0) || steps == 0 {
        return Err(Error::invalid(format!(
            "schedule needs start > 0, 0 < ratio < 1, steps ≥ 1 (got {start}, {ratio}, {steps})"
        )));
    }
    Ok((0..steps).map(|k| start * ratio.powi(k as i32)).collect())
}

/// Default schedule: `1e−1·2⁻ᵏ`, `k = 0..12`.
pub fn default_schedule() -> Vec<f64> {
    geometric_schedule(1e-1, 0.5, 13).expect("valid constants")
}

fn check_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::invalid("empty epsilon schedule"));
    }
    if schedule.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::invalid("epsilon schedule entries must be positive"));
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("epsilon schedule must be strictly decreasing"));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub record: CriticalPointRecord,
    /// `2ε·h(γ(tᵢ))⁻³` on the time grid.
    pub force_profile: Vec<f64>,
    /// Gradient norm of the warm start before solving.
    pub start_grad_norm: f64,
    /// Largest node displacement from the previous step's curve.
    pub jump: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContinuationTrace {
    pub delta: f64,
    pub steps: Vec<ContinuationStep>,
}

impl ContinuationTrace {
    pub fn last(&self) -> &ContinuationStep {
        self.steps.last().expect("traces are nonempty")
    }

    pub fn records(&self) -> impl Iterator<Item = &CriticalPointRecord> {
        self.steps.iter().map(|s| &s.record)
    }

    /// `[min L, max L]` over the trace.
    pub fn lagrangian_window(&self) -> (f64, f64) {
        self.records().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| {
            (a.min(r.lagrangian_value), b.max(r.lagrangian_value))
        })
    }

    /// Ratios of consecutive warm-start gradient norms.
    pub fn warm_start_ratios(&self) -> Vec<f64> {
        self.steps
            .windows(2)
            .map(|w| w[1].start_grad_norm / w[0].start_grad_norm)
            .collect()
    }

    /// Steps whose curve jumped by more than `limit` from the previous one.
    pub fn discontinuities(&self, limit: f64) -> Vec<usize> {
        self.steps
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, s)| s.jump > limit)
            .map(|(k, _)| k)
            .collect()
    }

    /// Morse indices along the trace.
    pub fn indices(&self) -> Vec<usize> {
        self.records().map(|r| r.morse_index).collect()
    }
}

/// Solves along a strictly decreasing `ε` schedule, warm-starting each
/// step from the previous critical point.
pub fn continue_to_zero(
    seed: &DiscreteCurve,
    body: &Body,
    delta: f64,
    schedule: &[f64],
    opts: &SolverOptions,
) -> Result<ContinuationTrace> {
    check_schedule(schedule)?;
    let mut steps: Vec<ContinuationStep> = Vec::with_capacity(schedule.len());
    let mut current = seed.clone();
    for &epsilon in schedule {
        let params = PenaltyParams::new(delta, epsilon)?;
        let wrap = |source: Error| Error::Continuation {
            epsilon,
            source: Box::new(source),
        };
        let start = loopspace::evaluate(&current, body, &params, Order::Gradient).map_err(wrap)?;
        let start_grad_norm = start.gradient.as_ref().map_or(0.0, |g| g.norm());
        let record = find_critical_point(&current, body, &params, opts).map_err(wrap)?;
        let eval = loopspace::evaluate(&record.curve, body, &params, Order::Value).map_err(wrap)?;
        let force_profile = eval.h.iter().map(|h| penalty::force_density(epsilon, *h)).collect();
        let jump = steps
            .last()
            .map_or(0.0, |s| s.record.curve.max_distance(&record.curve));
        current = record.curve.clone();
        steps.push(ContinuationStep {
            record,
            force_profile,
            start_grad_norm,
            jump,
        });
        let k = steps.len();
        if k >= 4 {
            let p: Vec<f64> = steps[k - 4..].iter().map(|s| s.record.potential_integral).collect();
            if p[1] > p[0] && p[2] > p[1] && p[3] > p[2] {
                return Err(Error::BrokenTrend { epsilon });
            }
        }
    }
    Ok(ContinuationTrace { delta, steps })
}

/// Per-segment `|Δx/Δt|²/2 + εU(midpoint)`.
pub fn segment_energies(rec: &CriticalPointRecord, body: &Body) -> Result<Vec<f64>> {
    let c = &rec.curve;
    let dt = c.dt();
    (0..c.segment_count())
        .map(|k| {
            let (a, b) = c.segment_nodes(k);
            let mid = (a + b) * 0.5;
            let u = penalty::U_delta(body, rec.delta, &mid)?;
            Ok((b - a).norm_squared() / (2.0 * dt * dt) + rec.epsilon * u)
        })
        .collect()
}

/// Relative standard deviation of [`segment_energies`].
pub fn energy_spread(rec: &CriticalPointRecord, body: &Body) -> Result<f64> {
    let e = segment_energies(rec, body)?;
    let mean = e.iter().sum::<f64>() / e.len() as f64;
    let var = e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / e.len() as f64;
    Ok(var.sqrt() / mean.abs())
}

/// Seed curves built from boundary data, pulled toward their centroid so
/// that every node starts strictly inside.
pub mod seeds {
    use super::*;

    fn shrink(points: &[Point], factor: f64) -> Vec<Point> {
        let centroid = points
            .iter()
            .fold(DVector::zeros(points[0].len()), |acc: Point, p| acc + p)
            / points.len() as f64;
        points
            .iter()
            .map(|p| &centroid + (p - &centroid) * factor)
            .collect()
    }

    /// Loop running `p → q → p` along the chord.
    pub fn chord_loop(p: &Point, q: &Point, nodes: usize, factor: f64) -> Result<DiscreteCurve> {
        let ends = shrink(&[p.clone(), q.clone()], factor);
        DiscreteCurve::polygon(&ends, nodes, true)
    }

    /// Open path along the chord `p → q`.
    pub fn brake_chord(p: &Point, q: &Point, nodes: usize, factor: f64) -> Result<DiscreteCurve> {
        let ends = shrink(&[p.clone(), q.clone()], factor);
        DiscreteCurve::segment(&ends[0], &ends[1], nodes)
    }

    /// Closed polygon through `vertices`, inflated to the time grid.
    pub fn polygon_loop(vertices: &[Point], nodes: usize, factor: f64) -> Result<DiscreteCurve> {
        DiscreteCurve::polygon(&shrink(vertices, factor), nodes, true)
    }

    /// Adds independent Gaussian noise of standard deviation `sigma`.
    pub fn perturbed(curve: &DiscreteCurve, sigma: f64, seed: u64) -> Result<DiscreteCurve> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
        let x = curve.flat();
        let noisy = DVector::from_fn(x.len(), |k, _| x[k] + normal.sample(&mut rng));
        Ok(curve.with_flat(&noisy))
    }
}
