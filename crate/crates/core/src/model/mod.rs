//! Problem data: the structural system, spectra in real block form, feedback
//! gains and cost weights.

mod builtin;
pub mod matrix_market;

pub use builtin::{builtin_example, ProblemDefinition, BUILTIN_NAMES};
pub use matrix_market::{load_matrix, parse_matrix_market, save_matrix, write_matrix_market};

use nalgebra::DMatrix;

use crate::linalg;
use crate::{Error, Result, C64};

/// Tolerance used to decide that an eigenvalue is real and that two values are
/// complex conjugates of each other, relative to their magnitude.
pub const CONJUGATE_TOL: f64 = 1e-8;

/// The open-loop structure `M x'' + C x' + K x = B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderSystem {
    m: DMatrix<f64>,
    c: DMatrix<f64>,
    k: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl SecondOrderSystem {
    /// Checks shapes only. Symmetry and conditioning are reported by
    /// [`SecondOrderSystem::validate`] and enforced by the operations that
    /// depend on them.
    pub fn new(m: DMatrix<f64>, c: DMatrix<f64>, k: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 {
            return Err(Error::Dimension("system order must be at least 1".into()));
        }
        for (name, a) in [("M", &m), ("C", &c), ("K", &k)] {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!("B has {} rows, expected {n}", b.nrows())));
        }
        if b.ncols() == 0 || b.ncols() > n {
            return Err(Error::Dimension(format!(
                "B must have between 1 and {n} columns, got {}",
                b.ncols()
            )));
        }
        for (name, a) in [("M", &m), ("C", &c), ("K", &k), ("B", &b)] {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} has non-finite entries")));
            }
        }
        Ok(Self { m, c, k, b })
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn damping(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn input(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Degrees of freedom `n`.
    pub fn dof(&self) -> usize {
        self.m.nrows()
    }

    /// Number of actuators `m`.
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    /// Sum of Frobenius norms of M, C and K.
    pub fn scale(&self) -> f64 {
        self.m.norm() + self.c.norm() + self.k.norm()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Same system with M, C, K replaced; B is kept.
    pub fn with_matrices(&self, m: DMatrix<f64>, c: DMatrix<f64>, k: DMatrix<f64>) -> Result<Self> {
        Self::new(m, c, k, self.b.clone())
    }
}

/// One pass/fail line of a [`ValidationReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub n: usize,
    pub m: usize,
    /// ‖M−Mᵀ‖_F, ‖C−Cᵀ‖_F, ‖K−Kᵀ‖_F.
    pub symmetry_defects: [f64; 3],
    /// Whether M, C, K are symmetric within `1e-10` of their Frobenius norm.
    pub symmetric: [bool; 3],
    /// 1-norm condition estimates of M and K (`inf` when singular).
    pub cond_m: f64,
    pub cond_k: f64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    /// True when every required invariant holds. Symmetry of C and K is
    /// informational and does not affect this.
    pub fn passed(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| !c.name.ends_with("(info)"))
            .all(|c| c.passed)
    }
}

fn cond_estimate(a: &DMatrix<f64>) -> f64 {
    match linalg::invert(a, "", 0.0) {
        Ok(inv) if inv.rcond > 0.0 => 1.0 / inv.rcond,
        _ => f64::INFINITY,
    }
}

/// Report-only check of the structural invariants.
pub fn validate(system: &SecondOrderSystem) -> ValidationReport {
    let n = system.dof();
    let m = system.inputs();
    let defects = [
        linalg::symmetry_defect(system.mass()),
        linalg::symmetry_defect(system.damping()),
        linalg::symmetry_defect(system.stiffness()),
    ];
    let norms = [system.mass().norm(), system.damping().norm(), system.stiffness().norm()];
    let cond_m = cond_estimate(system.mass());
    let cond_k = cond_estimate(system.stiffness());

    let sym_ok = |i: usize| defects[i] <= 1e-10 * norms[i];
    let checks = vec![
        Check {
            name: "dimensions",
            passed: m >= 1 && m <= n,
            detail: format!("n = {n}, m = {m}"),
        },
        Check {
            name: "M symmetric",
            passed: sym_ok(0),
            detail: format!("|M - M^T|_F = {:.3e}", defects[0]),
        },
        Check {
            name: "M invertible",
            passed: cond_m.is_finite() && cond_m < 1.0 / linalg::SINGULAR_RCOND,
            detail: format!("cond_1(M) ~ {cond_m:.3e}"),
        },
        Check {
            name: "C symmetric (info)",
            passed: sym_ok(1),
            detail: format!("|C - C^T|_F = {:.3e}", defects[1]),
        },
        Check {
            name: "K symmetric (info)",
            passed: sym_ok(2),
            detail: format!("|K - K^T|_F = {:.3e}", defects[2]),
        },
        Check {
            name: "K condition (info)",
            passed: cond_k.is_finite(),
            detail: format!("cond_1(K) ~ {cond_k:.3e}"),
        },
    ];
    ValidationReport {
        n,
        m,
        symmetry_defects: defects,
        symmetric: [sym_ok(0), sym_ok(1), sym_ok(2)],
        cond_m,
        cond_k,
        checks,
    }
}

/// Whether feedback acts on displacement/velocity or on velocity/acceleration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeedbackKind {
    /// `u = F x' + G x`; closed loop `λ²M + λ(C−BF) + (K−BG)`.
    State,
    /// `u = F x' + G x''`; closed loop `λ²(M−BG) + λ(C−BF) + K`.
    Derivative,
}

impl FeedbackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackKind::State => "state",
            FeedbackKind::Derivative => "derivative",
        }
    }
}

impl std::str::FromStr for FeedbackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "state" => Ok(FeedbackKind::State),
            "derivative" => Ok(FeedbackKind::Derivative),
            other => Err(Error::InvalidInput(format!("unknown feedback kind '{other}'"))),
        }
    }
}

/// An `m×n` gain pair. `f` multiplies velocity; `g` multiplies displacement
/// (state kind) or acceleration (derivative kind).
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackGains {
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub kind: FeedbackKind,
}

impl FeedbackGains {
    pub fn new(f: DMatrix<f64>, g: DMatrix<f64>, kind: FeedbackKind) -> Result<Self> {
        if f.shape() != g.shape() {
            return Err(Error::Dimension(format!(
                "F is {:?} but G is {:?}",
                f.shape(),
                g.shape()
            )));
        }
        Ok(Self { f, g, kind })
    }

    pub fn zero(inputs: usize, dof: usize, kind: FeedbackKind) -> Self {
        Self {
            f: DMatrix::zeros(inputs, dof),
            g: DMatrix::zeros(inputs, dof),
            kind,
        }
    }

    /// ‖F‖_F² + ‖G‖_F².
    pub fn norm_sq(&self) -> f64 {
        self.f.norm_squared() + self.g.norm_squared()
    }
}

/// Nonnegative weights of the two cost terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessWeights {
    pub w1: f64,
    pub w2: f64,
}

impl RobustnessWeights {
    pub fn new(w1: f64, w2: f64) -> Result<Self> {
        if !(w1 >= 0.0 && w2 >= 0.0 && w1.is_finite() && w2.is_finite()) || w1 + w2 <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "weights must be nonnegative with positive sum, got w1 = {w1}, w2 = {w2}"
            )));
        }
        Ok(Self { w1, w2 })
    }
}

impl Default for RobustnessWeights {
    fn default() -> Self {
        Self { w1: 1.0, w2: 1.0 }
    }
}

/// Real block-diagonal form of a conjugation-closed list of eigenvalues.
///
/// `values` is in block order: each complex pair as `(α+iβ, α−iβ)` with β > 0,
/// then the real values. Each pair becomes `[[α, β], [−β, α]]`.
pub fn real_block_matrix(values: &[C64]) -> DMatrix<f64> {
    let p = values.len();
    let mut lambda = DMatrix::zeros(p, p);
    let mut j = 0;
    while j < p {
        let v = values[j];
        if is_real(v) {
            lambda[(j, j)] = v.re;
            j += 1;
        } else {
            lambda[(j, j)] = v.re;
            lambda[(j + 1, j + 1)] = v.re;
            lambda[(j, j + 1)] = v.im;
            lambda[(j + 1, j)] = -v.im;
            j += 2;
        }
    }
    lambda
}

pub(crate) fn is_real(v: C64) -> bool {
    v.im.abs() <= CONJUGATE_TOL * v.norm().max(1.0)
}

/// Sort a conjugation-closed multiset into block order: complex pairs first
/// (ascending modulus, upper half-plane member first), then reals in their
/// given order. Fails when some nonreal value lacks its conjugate.
pub fn block_order(values: &[C64]) -> Result<(Vec<C64>, usize)> {
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    let mut reals = Vec::new();
    for &v in values {
        if is_real(v) {
            reals.push(C64::new(v.re, 0.0));
        } else if v.im > 0.0 {
            upper.push(v);
        } else {
            lower.push(v);
        }
    }
    let mut pairs = Vec::new();
    for u in upper {
        let tol = CONJUGATE_TOL * u.norm().max(1.0);
        let pos = lower
            .iter()
            .position(|w| (w - u.conj()).norm() <= tol)
            .ok_or_else(|| Error::Selection(format!("{u} has no conjugate partner")))?;
        lower.swap_remove(pos);
        pairs.push(u);
    }
    if let Some(w) = lower.first() {
        return Err(Error::Selection(format!("{w} has no conjugate partner")));
    }
    pairs.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.re.total_cmp(&b.re)));
    let l = pairs.len();
    let mut ordered = Vec::with_capacity(values.len());
    for u in pairs {
        ordered.push(u);
        ordered.push(u.conj());
    }
    ordered.extend(reals);
    Ok((ordered, l))
}

/// The eigenpairs selected for reassignment, in real block form.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSpectrum {
    /// `p×p` block-diagonal Λ₁.
    pub lambda: DMatrix<f64>,
    /// `n×p` real eigenvector block Y₁ with `M Y₁ Λ₁² + C Y₁ Λ₁ + K Y₁ = 0`.
    pub vectors: DMatrix<f64>,
    /// The represented eigenvalues in block order.
    pub values: Vec<C64>,
    /// Number of complex pairs `l`.
    pub pairs: usize,
    /// Positions of the represented eigenvalues in the source eigensystem,
    /// aligned with `values`.
    pub source_indices: Vec<usize>,
}

impl PartialSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Replacement eigenvalues in the same real block form.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpectrum {
    pub lambda: DMatrix<f64>,
    pub values: Vec<C64>,
    pub pairs: usize,
}

impl TargetSpectrum {
    /// Build from any conjugation-closed list of targets.
    pub fn new(values: &[C64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Selection("target list is empty".into()));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite target".into()));
        }
        let (values, pairs) = block_order(values)?;
        Ok(Self {
            lambda: real_block_matrix(&values),
            values,
            pairs,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn identity_system() -> SecondOrderSystem {
        SecondOrderSystem::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            dmatrix![1.0; 0.0],
        )
        .unwrap()
    }

    #[test]
    fn identity_system_validates() {
        let report = identity_system().validate();
        assert!(report.passed());
        assert_eq!(report.symmetric, [true; 3]);
    }

    #[test]
    fn asymmetric_mass_is_flagged() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = 1e-3;
        let sys = SecondOrderSystem::new(m, DMatrix::zeros(2, 2), DMatrix::identity(2, 2), dmatrix![1.0; 0.0])
            .unwrap();
        let report = sys.validate();
        assert!(!report.passed());
        assert!(!report.symmetric[0]);
        assert!((report.symmetry_defects[0] - 2f64.sqrt() * 1e-3).abs() < 1e-15);
    }

    #[test]
    fn singular_mass_fails_validation() {
        let sys = SecondOrderSystem::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            dmatrix![1.0; 0.0],
        )
        .unwrap();
        assert!(!sys.validate().passed());
    }

    #[test]
    fn shape_errors() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert!(SecondOrderSystem::new(i2.clone(), DMatrix::zeros(3, 3), i2.clone(), dmatrix![1.0; 0.0]).is_err());
        assert!(SecondOrderSystem::new(i2.clone(), i2.clone(), i2.clone(), DMatrix::zeros(2, 3)).is_err());
        assert!(SecondOrderSystem::new(i2.clone(), i2.clone(), i2.clone(), DMatrix::zeros(3, 1)).is_err());
    }

    #[test]
    fn weights_need_positive_sum() {
        assert!(RobustnessWeights::new(0.0, 0.0).is_err());
        assert!(RobustnessWeights::new(-1.0, 2.0).is_err());
        assert!(RobustnessWeights::new(0.0, 1.0).is_ok());
    }

    #[test]
    fn target_blocks() {
        let t = TargetSpectrum::new(&[C64::new(-2.0, 0.0), C64::new(-1.0, -1.0), C64::new(-1.0, 1.0)]).unwrap();
        assert_eq!(t.pairs, 1);
        assert_eq!(
            t.lambda,
            dmatrix![-1.0, 1.0, 0.0; -1.0, -1.0, 0.0; 0.0, 0.0, -2.0]
        );
    }

    #[test]
    fn unpaired_target_rejected() {
        assert!(TargetSpectrum::new(&[C64::new(-1.0, 1.0)]).is_err());
    }
}
