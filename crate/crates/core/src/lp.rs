//! Small dense linear programs on top of `microlp`.

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Maximizes `t` subject to `aⱼ·x + t ≤ bⱼ` for every row `(aⱼ, bⱼ)`.
/// Returns the optimal `(x, t)`.
pub(crate) fn max_margin(dim: usize, rows: &[(Point, f64)]) -> Result<(Point, f64)> {
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let xs: Vec<_> = (0..dim)
        .map(|_| problem.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let t = problem.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for (a, b) in rows {
        let mut expr: Vec<_> = xs.iter().zip(a.iter()).map(|(v, c)| (*v, *c)).collect();
        expr.push((t, 1.0));
        problem.add_constraint(expr.as_slice(), ComparisonOp::Le, *b);
    }
    let solution = problem
        .solve()
        .map_err(|e| Error::numerical("max_margin", e.to_string()))?
        .into_solution()
        .map_err(|e| Error::numerical("max_margin", format!("{e:?}")))?;
    let x = DVector::from_iterator(dim, xs.iter().map(|v| solution.var_value(*v)));
    Ok((x, solution.var_value(t)))
}

/// Convex weights `λ` minimizing `|Σ λⱼ vⱼ|₁`, polished on the active set,
/// with the Euclidean norm of the resulting combination.
pub(crate) fn min_convex_combination(vectors: &[Point]) -> Result<(Vec<f64>, f64)> {
    let Some(first) = vectors.first() else {
        return Err(Error::invalid("no vectors to combine"));
    };
    let dim = first.len();
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let lambdas: Vec<_> = vectors.iter().map(|_| problem.add_var(0.0, (0.0, 1.0))).collect();
    for i in 0..dim {
        let slack = problem.add_var(1.0, (0.0, f64::INFINITY));
        let mut expr: Vec<_> = lambdas.iter().zip(vectors).map(|(l, v)| (*l, v[i])).collect();
        expr.push((slack, -1.0));
        problem.add_constraint(expr.as_slice(), ComparisonOp::Le, 0.0);
        expr.pop();
        expr.push((slack, 1.0));
        problem.add_constraint(expr.as_slice(), ComparisonOp::Ge, 0.0);
    }
    let ones: Vec<_> = lambdas.iter().map(|l| (*l, 1.0)).collect();
    problem.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    let solution = problem
        .solve()
        .map_err(|e| Error::numerical("min_convex_combination", e.to_string()))?
        .into_solution()
        .map_err(|e| Error::numerical("min_convex_combination", format!("{e:?}")))?;
    let mut weights: Vec<f64> = lambdas.iter().map(|l| solution.var_value(*l).max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let residual_of = |w: &[f64]| -> f64 {
        vectors
            .iter()
            .zip(w)
            .fold(DVector::zeros(dim), |acc: Point, (v, l)| acc + v * *l)
            .norm()
    };
    let mut residual = residual_of(&weights);
    if let Some(polished) = polish(vectors, &weights) {
        let r = residual_of(&polished);
        if r < residual {
            weights = polished;
            residual = r;
        }
    }
    Ok((weights, residual))
}

/// Least-norm `Σ λⱼ vⱼ` with `Σ λⱼ = 1` on the active set, via the KKT system.
fn polish(vectors: &[Point], weights: &[f64]) -> Option<Vec<f64>> {
    let active: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] > 1e-12).collect();
    let m = active.len();
    let mut kkt = DMatrix::zeros(m + 1, m + 1);
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate() {
            kkt[(a, b)] = vectors[i].dot(&vectors[j]);
        }
        kkt[(a, m)] = 1.0;
        kkt[(m, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(m + 1);
    rhs[m] = 1.0;
    let svd = kkt.svd(true, true);
    let sol = svd.solve(&rhs, 1e-14).ok()?;
    if (0..m).any(|a| sol[a] < 0.0) {
        return None;
    }
    let mut out = vec![0.0; weights.len()];
    for (a, &i) in active.iter().enumerate() {
        out[i] = sol[a];
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_margin_square() {
        // Square [-1, 1]²: the largest inscribed ball has radius 1 at the origin.
        let rows: Vec<(Point, f64)> = [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]
            .iter()
            .map(|a| (DVector::from_column_slice(a), 1.0))
            .collect();
        let (x, t) = max_margin(2, &rows).unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert!(x.norm() < 1e-12);
    }

    #[test]
    fn zero_in_hull_detection() {
        let v = |a: f64, b: f64| DVector::from_vec(vec![a, b]);
        let (w, r) = min_convex_combination(&[v(1.0, 0.0), v(-0.5, 1.0), v(-0.5, -1.0)]).unwrap();
        assert!(r < 1e-14);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let (_, r) = min_convex_combination(&[v(1.0, 0.0), v(1.0, 1.0)]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        // Antipodal up to rounding.
        let (w, r) = min_convex_combination(&[v(1.0, 1e-13), v(-1.0, 3e-13)]).unwrap();
        assert!(r < 1e-12 && (w[0] - 0.5).abs() < 1e-12);
    }
}
