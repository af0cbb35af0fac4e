//! Deterministic unit-direction grids used to seed the sphere searches.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Point;

/// `count` unit vectors in ℝⁿ: uniform angles for n = 2, a Fibonacci
/// lattice for n = 3 and a fixed-seed Gaussian cloud above that.
pub fn sphere_grid(dim: usize, count: usize) -> Vec<Point> {
    assert!(dim >= 1 && count >= 1);
    match dim {
        1 => vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![-1.0])],
        2 => (0..count)
            .map(|k| {
                let theta = std::f64::consts::TAU * k as f64 / count as f64;
                DVector::from_vec(vec![theta.cos(), theta.sin()])
            })
            .collect(),
        3 => fibonacci_sphere(count),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1e5);
            (0..count)
                .map(|_| {
                    let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let norm = v.norm();
                    v / norm
                })
                .collect()
        }
    }
}

/// Half of the planar circle, `[0, π)`, for even functions of the direction.
pub fn half_circle(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| std::f64::consts::PI * k as f64 / count as f64)
        .collect()
}

pub fn fibonacci_sphere(count: usize) -> Vec<Point> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            DVector::from_vec(vec![rho * phi.cos(), rho * phi.sin(), z])
        })
        .collect()
}

/// Orthonormal basis (as columns) of the orthogonal complement of unit `u`.
pub fn tangent_basis(u: &Point) -> nalgebra::DMatrix<f64> {
    let n = u.len();
    let mut basis: Vec<Point> = Vec::with_capacity(n.saturating_sub(1));
    for axis in 0..n {
        if basis.len() + 1 == n {
            break;
        }
        let mut e = DVector::zeros(n);
        e[axis] = 1.0;
        let mut v = &e - u * u.dot(&e);
        for b in &basis {
            v -= b * b.dot(&v);
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / norm);
        }
    }
    nalgebra::DMatrix::from_columns(&basis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_are_unit() {
        for dim in 2..=5 {
            for v in sphere_grid(dim, 64) {
                assert!((v.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tangent_basis_is_orthonormal_complement() {
        let u = DVector::from_vec(vec![1.0, 2.0, -2.0]) / 3.0;
        let b = tangent_basis(&u);
        assert_eq!(b.ncols(), 2);
        let gram = b.transpose() * &b;
        assert!((gram - nalgebra::DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((b.transpose() * &u).norm() < 1e-12);
    }
}
