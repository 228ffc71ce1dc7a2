//! Dense Sylvester equations `A X − X B = R`.
//!
//! The equation is vectorised as `(I ⊗ A − Bᵀ ⊗ I) vec X = vec R` and solved
//! with partial-pivoting LU. The orders here are the number of reassigned
//! eigenvalues, so the `p·q` system stays tiny.

use nalgebra::{DMatrix, DVector};

use crate::linalg::norm1;
use crate::{Error, Result, C64};

/// Reciprocal condition below which a solve is flagged as ill-conditioned.
pub const RCOND_WARNING: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct SylvesterSolution {
    pub x: DMatrix<f64>,
    /// Reciprocal 1-norm condition of the vectorised operator.
    pub rcond: f64,
}

impl SylvesterSolution {
    pub fn ill_conditioned(&self) -> bool {
        self.rcond < RCOND_WARNING
    }
}

fn eigenvalues(a: &DMatrix<f64>) -> Vec<C64> {
    a.complex_eigenvalues().iter().cloned().collect()
}

/// Solve `A X − X B = R` for `A` p×p, `B` q×q, `R` p×q.
///
/// Fails with [`Error::SpectraOverlap`] when an eigenvalue of `A` lies within
/// `1e-10 (‖A‖_F + ‖B‖_F)` of one of `B`.
pub fn solve_sylvester(a: &DMatrix<f64>, b: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<SylvesterSolution> {
    let p = a.nrows();
    let q = b.nrows();
    if !a.is_square() || !b.is_square() || r.shape() != (p, q) {
        return Err(Error::Dimension(format!(
            "A {:?}, B {:?}, R {:?} do not form a Sylvester equation",
            a.shape(),
            b.shape(),
            r.shape()
        )));
    }
    if p == 0 || q == 0 {
        return Ok(SylvesterSolution { x: DMatrix::zeros(p, q), rcond: 1.0 });
    }

    let threshold = 1e-10 * (a.norm() + b.norm());
    let ea = eigenvalues(a);
    let eb = eigenvalues(b);
    let closest = ea
        .iter()
        .flat_map(|&x| eb.iter().map(move |&y| (x, y, (x - y).norm())))
        .min_by(|u, v| u.2.total_cmp(&v.2))
        .expect("non-empty spectra");
    if closest.2 <= threshold {
        return Err(Error::SpectraOverlap { a: closest.0, b: closest.1, gap: closest.2 });
    }

    let op = DMatrix::<f64>::identity(q, q).kronecker(a) - b.transpose().kronecker(&DMatrix::identity(p, p));
    let lu = op.clone().lu();
    let rhs = DVector::from_column_slice(r.as_slice());
    let sol = lu.solve(&rhs).ok_or(Error::SpectraOverlap {
        a: closest.0,
        b: closest.1,
        gap: closest.2,
    })?;
    let rcond = lu.try_inverse().map_or(0.0, |inv| 1.0 / (norm1(&op) * norm1(&inv)));
    Ok(SylvesterSolution {
        x: DMatrix::from_column_slice(p, q, sol.as_slice()),
        rcond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn residual(a: &DMatrix<f64>, b: &DMatrix<f64>, r: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
        (a * x - x * b - r).norm()
    }

    #[test]
    fn diagonal_case() {
        let a = dmatrix![1.0, 0.0; 0.0, 2.0];
        let b = dmatrix![3.0, 0.0; 0.0, 4.0];
        let r = DMatrix::from_element(2, 2, 1.0);
        let x = solve_sylvester(&a, &b, &r).unwrap().x;
        let expect = dmatrix![-0.5, -1.0 / 3.0; -1.0, -0.5];
        assert!((x - expect).amax() < 1e-15);
    }

    #[test]
    fn homogeneous_case() {
        let a = dmatrix![1.0, 2.0; 0.0, 3.0];
        let b = dmatrix![-1.0, 0.5; -0.5, -1.0];
        let x = solve_sylvester(&a, &b, &DMatrix::zeros(2, 2)).unwrap().x;
        assert_eq!(x.amax(), 0.0);
    }

    #[test]
    fn identical_identities_overlap() {
        let i = DMatrix::<f64>::identity(2, 2);
        match solve_sylvester(&i, &i, &i) {
            Err(Error::SpectraOverlap { a, b, .. }) => {
                assert_eq!(a, C64::new(1.0, 0.0));
                assert_eq!(b, C64::new(1.0, 0.0));
            }
            other => panic!("expected overlap, got {other:?}"),
        }
    }

    #[test]
    fn rectangular_right_side() {
        let a = dmatrix![-1.0, 1.0; -1.0, -1.0];
        let b = dmatrix![2.0, 0.0, 0.0; 0.0, 3.0, 1.0; 0.0, -1.0, 3.0];
        let r = dmatrix![1.0, 2.0, 3.0; 4.0, 5.0, 6.0];
        let s = solve_sylvester(&a, &b, &r).unwrap();
        assert!(residual(&a, &b, &r, &s.x) < 1e-13);
        assert!(!s.ill_conditioned());
    }

    /// Random matrices whose spectra are shifted apart: A has eigenvalues with
    /// real parts near −2, B near +2.
    fn separated(rng: &mut ChaCha8Rng, p: usize, q: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let a = DMatrix::from_fn(p, p, |_, _| rng.gen_range(-0.5..0.5)) / (p as f64).sqrt()
            - DMatrix::identity(p, p) * 2.0;
        let b = DMatrix::from_fn(q, q, |_, _| rng.gen_range(-0.5..0.5)) / (q as f64).sqrt()
            + DMatrix::identity(q, q) * 2.0;
        let r = DMatrix::from_fn(p, q, |_, _| rng.gen_range(-1.0..1.0));
        (a, b, r)
    }

    #[test]
    fn residual_bound_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let p = rng.gen_range(1..=12);
            let q = rng.gen_range(1..=12);
            let (a, b, r) = separated(&mut rng, p, q);
            let x = solve_sylvester(&a, &b, &r).unwrap().x;
            let bound = 1e-10 * (a.norm() * x.norm() + x.norm() * b.norm() + r.norm());
            assert!(residual(&a, &b, &r, &x) <= bound);
        }
    }

    proptest! {
        #[test]
        fn linear_in_right_side(seed in 0u64..10_000, p in 1usize..6, q in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b, r1) = separated(&mut rng, p, q);
            let r2 = DMatrix::from_fn(p, q, |_, _| rng.gen_range(-1.0..1.0));
            let x1 = solve_sylvester(&a, &b, &r1).unwrap().x;
            let x2 = solve_sylvester(&a, &b, &r2).unwrap().x;
            let x12 = solve_sylvester(&a, &b, &(&r1 + &r2)).unwrap().x;
            let sum = x1 + x2;
            prop_assert!((&x12 - &sum).norm() <= 1e-10 * sum.norm().max(x12.norm()));
        }
    }
}
