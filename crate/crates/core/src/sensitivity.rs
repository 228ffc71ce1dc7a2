//! Sensitivities of the closed-loop eigenvalue sum and product with respect to
//! the system matrices.
//!
//! With `Π = det K_c / det M_c` and `Σ = −tr(M_c⁻¹ C_c)`:
//!
//! | | state (`M`, `C−BF`, `K−BG`) | derivative (`M−BG`, `C−BF`, `K`) |
//! |---|---|---|
//! | ∂Π/∂K | `Π (K−BG)⁻ᵀ` | `Π K⁻ᵀ` |
//! | ∂Π/∂M | `−Π M⁻ᵀ` | `−Π (M−BG)⁻ᵀ` |
//! | ∂Σ/∂C | `−M⁻ᵀ` | `−(M−BG)⁻ᵀ` |
//! | ∂Σ/∂M | `M⁻ᵀ(C−BF)ᵀM⁻ᵀ` | `(M−BG)⁻ᵀ(C−BF)ᵀ(M−BG)⁻ᵀ` |

use nalgebra::DMatrix;

use crate::linalg::{self, SINGULAR_RCOND};
use crate::model::{FeedbackGains, FeedbackKind, SecondOrderSystem};
use crate::qep::closed_loop_pencil;
use crate::Result;

/// Which expression to use for ∂Σ/∂M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SumMassForm {
    /// `+M_c⁻ᵀ (C−BF)ᵀ M_c⁻ᵀ`, the exact derivative of `−tr(M_c⁻¹C_c)`.
    #[default]
    Derived,
    /// Negated, and with `(C−BG)` in place of `(C−BF)` for derivative
    /// feedback. Kept for comparison only.
    Alternate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySet {
    pub s_prod_k: DMatrix<f64>,
    pub s_prod_m: DMatrix<f64>,
    pub s_sum_c: DMatrix<f64>,
    pub s_sum_m: DMatrix<f64>,
    pub kind: FeedbackKind,
}

impl SensitivitySet {
    /// `(name, matrix)` in a fixed order, for reporting.
    pub fn named(&self) -> [(&'static str, &DMatrix<f64>); 4] {
        [
            ("s_prod_k", &self.s_prod_k),
            ("s_prod_m", &self.s_prod_m),
            ("s_sum_c", &self.s_sum_c),
            ("s_sum_m", &self.s_sum_m),
        ]
    }
}

pub fn sensitivities(system: &SecondOrderSystem, gains: &FeedbackGains) -> Result<SensitivitySet> {
    sensitivities_with(system, gains, SumMassForm::Derived)
}

pub fn sensitivities_with(
    system: &SecondOrderSystem,
    gains: &FeedbackGains,
    form: SumMassForm,
) -> Result<SensitivitySet> {
    let pencil = closed_loop_pencil(system, gains)?;
    let mc = linalg::invert(&pencil.m, "closed-loop mass", SINGULAR_RCOND)?;
    let kc = linalg::invert(
        &pencil.k,
        match gains.kind {
            FeedbackKind::State => "K - B G",
            FeedbackKind::Derivative => "K",
        },
        SINGULAR_RCOND,
    )?;
    let product = kc.det_sign * mc.det_sign * (kc.log_abs_det - mc.log_abs_det).exp();
    let mc_it = mc.inverse.transpose();
    let kc_it = kc.inverse.transpose();

    let s_sum_m = match form {
        SumMassForm::Derived => &mc_it * pencil.c.transpose() * &mc_it,
        SumMassForm::Alternate => {
            let damping = match gains.kind {
                FeedbackKind::State => pencil.c.clone(),
                FeedbackKind::Derivative => system.damping() - system.input() * &gains.g,
            };
            -(&mc_it * damping.transpose() * &mc_it)
        }
    };
    Ok(SensitivitySet {
        s_prod_k: &kc_it * product,
        s_prod_m: &mc_it * -product,
        s_sum_c: -mc_it.clone(),
        s_sum_m,
        kind: gains.kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin_example;
    use crate::qep::{spectrum_sum_product, Pencil};

    #[test]
    fn state_sum_c_is_minus_inverse_transpose_mass() {
        let p = builtin_example("exp3_fourdof").unwrap();
        let s = sensitivities(&p.system, &FeedbackGains::zero(2, 4, FeedbackKind::State)).unwrap();
        assert!((s.s_sum_c + DMatrix::identity(4, 4)).amax() < 1e-15);
    }

    #[test]
    fn exp4_product_sensitivity_open_loop() {
        let p = builtin_example("exp4_absorber").unwrap();
        let s = sensitivities(&p.system, &FeedbackGains::zero(2, 3, FeedbackKind::State)).unwrap();
        let expect = p.system.stiffness().clone().try_inverse().unwrap().transpose() * 2.0;
        assert!((s.s_prod_k - expect).amax() < 1e-12);
    }

    #[test]
    fn sum_mass_sensitivity_matches_central_difference() {
        let p = builtin_example("exp1_random5").unwrap();
        let gains = FeedbackGains::zero(2, 5, FeedbackKind::State);
        let s = sensitivities(&p.system, &gains).unwrap();
        let dir = DMatrix::from_fn(5, 5, |i, j| ((i * 3 + j * 7) % 5) as f64 - 2.0);
        let dir = (&dir + dir.transpose()).normalize();
        let h = 1e-6;
        let sum_at = |t: f64| {
            let mut pen = Pencil::open_loop(&p.system);
            pen.m += &dir * t;
            spectrum_sum_product(&pen).unwrap().sum
        };
        let fd = (sum_at(h) - sum_at(-h)) / (2.0 * h);
        let analytic = s.s_sum_m.dot(&dir);
        assert!((fd - analytic).abs() < 1e-6, "{fd} vs {analytic}");
        let alternate = sensitivities_with(&p.system, &gains, SumMassForm::Alternate).unwrap();
        assert!((fd - alternate.s_sum_m.dot(&dir)).abs() > 1e-3);
    }
}
