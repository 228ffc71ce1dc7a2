//! Dense helpers shared by the numerical modules.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Matrices whose reciprocal 1-norm condition falls below this are treated as
/// singular when inverted.
pub const SINGULAR_RCOND: f64 = 1e-14;

/// Maximum absolute column sum.
pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// ‖A − Aᵀ‖_F for a square matrix.
pub fn symmetry_defect(a: &DMatrix<f64>) -> f64 {
    (a - a.transpose()).norm()
}

/// An LU-factored square matrix with its explicit inverse and reciprocal
/// condition estimate `1 / (‖A‖₁ ‖A⁻¹‖₁)`.
#[derive(Debug, Clone)]
pub struct Inverted {
    pub inverse: DMatrix<f64>,
    pub rcond: f64,
    /// Sign of the determinant.
    pub det_sign: f64,
    /// ln |det A|.
    pub log_abs_det: f64,
}

impl Inverted {
    pub fn det(&self) -> f64 {
        self.det_sign * self.log_abs_det.exp()
    }
}

/// Factor and invert `a`, failing with [`Error::Singular`] named `what` when
/// the reciprocal condition is below `threshold`.
pub fn invert(a: &DMatrix<f64>, what: &str, threshold: f64) -> Result<Inverted> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let singular = |rcond: f64| Error::Singular {
        what: what.to_string(),
        rcond,
    };
    if a.iter().any(|v| !v.is_finite()) {
        return Err(singular(0.0));
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let mut log_abs_det = 0.0;
    let mut det_sign: f64 = lu.p().determinant();
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        if d == 0.0 {
            return Err(singular(0.0));
        }
        log_abs_det += d.abs().ln();
        det_sign *= d.signum();
    }
    let inverse = lu.try_inverse().ok_or_else(|| singular(0.0))?;
    let anorm = norm1(a);
    let rcond = if anorm == 0.0 {
        0.0
    } else {
        1.0 / (anorm * norm1(&inverse))
    };
    if !(rcond >= threshold) {
        return Err(singular(rcond));
    }
    Ok(Inverted {
        inverse,
        rcond,
        det_sign,
        log_abs_det,
    })
}

/// Sign-tracked `ln|det A|`. Returns `(sign, ln|det|)`; a singular matrix
/// yields sign 0 and `-inf`.
pub fn log_det(a: &DMatrix<f64>) -> (f64, f64) {
    let lu = a.clone().lu();
    let u = lu.u();
    let mut sign: f64 = lu.p().determinant();
    let mut acc = 0.0;
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        if d == 0.0 {
            return (0.0, f64::NEG_INFINITY);
        }
        acc += d.abs().ln();
        sign *= d.signum();
    }
    (sign, acc)
}

/// Largest singular value over smallest; `inf` when the smallest is below
/// `1e-14` times the largest.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 || min < 1e-14 * max {
        f64::INFINITY
    } else {
        max / min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_tracks_determinant_sign() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 3.0, 0.0]);
        let inv = invert(&a, "A", 1e-14).unwrap();
        assert!((inv.det() + 6.0).abs() < 1e-12);
        assert!((&a * &inv.inverse - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn invert_rejects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            invert(&a, "A", 1e-14),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn log_det_of_large_diagonal_does_not_overflow() {
        let a = DMatrix::from_diagonal_element(400, 400, 1e3);
        let (s, l) = log_det(&a);
        assert_eq!(s, 1.0);
        assert!((l - 400.0 * 1e3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn condition_of_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 10.0]);
        assert!((condition_number(&a) - 10.0).abs() < 1e-12);
    }
}
