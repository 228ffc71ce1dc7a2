//! Γ-parametrised feedback that moves the selected eigenvalues and nothing else.
//!
//! Conventions: `Y₁` and `Λ₁` satisfy `M Y₁ Λ₁² + C Y₁ Λ₁ + K Y₁ = 0` (so a
//! pair `α ± iβ` with eigenvector `y` gives columns `Re y, Im y` and the block
//! `[[α, β], [−β, α]]`), and likewise for the targets `Λ̄₁`. With `W = Zᵀ`:
//!
//! * state: `Λ₁ᵀW − WΛ̄₁ = −Y₁ᵀBΓ`, `Φ = ΓW⁻¹`,
//!   `F = Φ Y₁ᵀM`, `G = Φ (Λ₁ᵀY₁ᵀM + Y₁ᵀC)`;
//! * derivative: `Λ₁ᵀW − WΛ̄₁ = −Λ₁ᵀY₁ᵀBΓ`, `Φ = Γ(WΛ̄₁)⁻¹`,
//!   `F = −Φ Y₁ᵀK`, `G = Φ Λ₁ᵀY₁ᵀM`.
//!
//! In both cases `F = ΦP` and `G = ΦQ`, which is the shape the gradient code
//! relies on. Symmetric M, C, K make the left eigenvectors equal to the right
//! ones; the construction assumes that.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::linalg;
use crate::matching::{match_spectra, SpectrumMatch};
use crate::model::{FeedbackGains, FeedbackKind, PartialSpectrum, ProblemDefinition, SecondOrderSystem, TargetSpectrum};
use crate::qep::{self, Eigensystem, Pencil, Selector};
use crate::sylvester::solve_sylvester;
use crate::{Error, Result, C64};

/// Γ is rejected when Z (or `ZᵀΛ̄₁`) has reciprocal condition below this.
pub const ADMISSIBLE_RCOND: f64 = 1e-12;

/// Maximum allowed distance between a closed-loop eigenvalue and its expected
/// position for an assignment to count as spillover-free.
pub const SPILLOVER_TOL: f64 = 1e-6;

/// `P`, `Q` with `F = ΦP`, `G = ΦQ`, and the Sylvester right-hand factor `L`
/// with `Λ₁ᵀW − WΛ̄₁ = −LΓ`.
#[derive(Debug, Clone)]
pub struct KindFactors {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub l: DMatrix<f64>,
}

/// Everything about an assignment problem that does not depend on Γ.
#[derive(Debug, Clone)]
pub struct AssignmentContext {
    pub system: SecondOrderSystem,
    pub partial: PartialSpectrum,
    pub target: TargetSpectrum,
    /// Open-loop eigenvalues that must survive unchanged, when known. Read
    /// once, on the first spillover check.
    pub retained: Option<Vec<C64>>,
    state: KindFactors,
    derivative: KindFactors,
    expected: OnceLock<Vec<C64>>,
}

impl AssignmentContext {
    pub fn new(system: SecondOrderSystem, partial: PartialSpectrum, target: TargetSpectrum) -> Result<Self> {
        let n = system.dof();
        if partial.vectors.nrows() != n {
            return Err(Error::Dimension(format!(
                "eigenvector block has {} rows, system has {n} dof",
                partial.vectors.nrows()
            )));
        }
        if partial.len() != target.len() {
            return Err(Error::Dimension(format!(
                "{} eigenvalues selected but {} targets given",
                partial.len(),
                target.len()
            )));
        }
        // fail early on colliding spectra; the solve itself is the check
        solve_sylvester(
            &partial.lambda.transpose(),
            &target.lambda,
            &DMatrix::zeros(partial.len(), partial.len()),
        )?;

        let yt = partial.vectors.transpose();
        let lt = partial.lambda.transpose();
        let ytm = &yt * system.mass();
        let ytb = &yt * system.input();
        let state = KindFactors {
            p: ytm.clone(),
            q: &lt * &ytm + &yt * system.damping(),
            l: ytb.clone(),
        };
        let derivative = KindFactors {
            p: -(&yt * system.stiffness()),
            q: &lt * &ytm,
            l: &lt * &ytb,
        };
        Ok(Self {
            system,
            partial,
            target,
            retained: None,
            state,
            derivative,
            expected: OnceLock::new(),
        })
    }

    /// Solve the open loop, select, and build the context with the retained
    /// eigenvalues recorded for spillover checks.
    pub fn from_selection(system: SecondOrderSystem, selector: &Selector, targets: &[C64]) -> Result<Self> {
        let eig = Pencil::open_loop(&system).solve()?;
        Self::from_eigensystem(system, &eig, selector, targets)
    }

    pub fn from_eigensystem(
        system: SecondOrderSystem,
        eig: &Eigensystem,
        selector: &Selector,
        targets: &[C64],
    ) -> Result<Self> {
        let partial = qep::select_partial(eig, selector)?;
        let retained = (0..eig.len())
            .filter(|j| !partial.source_indices.contains(j))
            .map(|j| eig.values[j])
            .collect();
        let target = TargetSpectrum::new(targets)?;
        let mut ctx = Self::new(system, partial, target)?;
        ctx.retained = Some(retained);
        Ok(ctx)
    }

    pub fn from_problem(problem: &ProblemDefinition) -> Result<Self> {
        Self::from_selection(problem.system.clone(), &problem.selector, &problem.targets)
    }

    /// Number of reassigned eigenvalues `p`.
    pub fn p(&self) -> usize {
        self.partial.len()
    }

    /// Shape of Γ: `(m, p)`.
    pub fn gamma_shape(&self) -> (usize, usize) {
        (self.system.inputs(), self.p())
    }

    pub fn factors(&self, kind: FeedbackKind) -> &KindFactors {
        match kind {
            FeedbackKind::State => &self.state,
            FeedbackKind::Derivative => &self.derivative,
        }
    }

    /// Checks that do not depend on Γ: derivative feedback needs
    /// `0 ∉ spec(Λ₁)` and `0 ∉ spec(Λ̄₁)`.
    pub fn check_kind(&self, kind: FeedbackKind) -> Result<()> {
        if kind == FeedbackKind::Derivative {
            let tol = 1e-12 * self.system.scale().max(1.0);
            if let Some(z) = self.partial.values.iter().find(|z| z.norm() <= tol) {
                return Err(Error::InvalidInput(format!(
                    "derivative feedback cannot move the zero eigenvalue {z}"
                )));
            }
            if let Some(z) = self.target.values.iter().find(|z| z.norm() <= tol) {
                return Err(Error::InvalidInput(format!(
                    "derivative feedback cannot place an eigenvalue at zero ({z})"
                )));
            }
        }
        Ok(())
    }

    pub fn assign(&self, kind: FeedbackKind, gamma: &DMatrix<f64>) -> Result<Assignment> {
        self.check_kind(kind)?;
        if gamma.shape() != self.gamma_shape() {
            return Err(Error::Dimension(format!(
                "gamma must be {:?}, got {:?}",
                self.gamma_shape(),
                gamma.shape()
            )));
        }
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("gamma has non-finite entries".into()));
        }
        let fac = self.factors(kind);
        let rhs = -(&fac.l * gamma);
        let w = solve_sylvester(&self.partial.lambda.transpose(), &self.target.lambda, &rhs)?.x;
        let inadmissible = |e: Error| match e {
            Error::Singular { rcond, .. } => Error::InadmissibleGamma { rcond },
            other => other,
        };
        let w_inv = linalg::invert(&w, "Z", ADMISSIBLE_RCOND).map_err(inadmissible)?;
        let j = match kind {
            FeedbackKind::State => w_inv.inverse.clone(),
            FeedbackKind::Derivative => {
                linalg::invert(&(&w * &self.target.lambda), "Z^T Lambda1bar", ADMISSIBLE_RCOND)
                    .map_err(inadmissible)?
                    .inverse
            }
        };
        let phi = gamma * &j;
        let gains = FeedbackGains {
            f: &phi * &fac.p,
            g: &phi * &fac.q,
            kind,
        };
        if kind == FeedbackKind::Derivative {
            let mc = self.system.mass() - self.system.input() * &gains.g;
            linalg::invert(&mc, "M - B G", linalg::SINGULAR_RCOND)?;
        }
        Ok(Assignment {
            gains,
            z: w.transpose(),
            z_rcond: w_inv.rcond,
            w_inv: w_inv.inverse,
            j,
            phi,
        })
    }

    /// Gains for state feedback and the Sylvester solution Z.
    pub fn state_gains(&self, gamma: &DMatrix<f64>) -> Result<(FeedbackGains, DMatrix<f64>)> {
        let a = self.assign(FeedbackKind::State, gamma)?;
        Ok((a.gains, a.z))
    }

    pub fn derivative_gains(&self, gamma: &DMatrix<f64>) -> Result<(FeedbackGains, DMatrix<f64>)> {
        let a = self.assign(FeedbackKind::Derivative, gamma)?;
        Ok((a.gains, a.z))
    }

    /// The eigenvalues the closed loop should have: the targets plus the
    /// retained open-loop eigenvalues (solved for once when not supplied).
    pub fn expected_spectrum(&self) -> Result<&[C64]> {
        if let Some(e) = self.expected.get() {
            return Ok(e);
        }
        let mut all = self.target.values.clone();
        match &self.retained {
            Some(r) => all.extend_from_slice(r),
            None => {
                let values = Pencil::open_loop(&self.system).eigenvalues()?;
                all.extend(
                    (0..values.len())
                        .filter(|j| !self.partial.source_indices.contains(j))
                        .map(|j| values[j]),
                );
            }
        }
        Ok(self.expected.get_or_init(|| all))
    }

    /// Solve the closed loop for `gains` and pair its spectrum with the
    /// expected one.
    pub fn verify(&self, gains: &FeedbackGains) -> Result<SpilloverReport> {
        let expected = self.expected_spectrum()?.to_vec();
        let actual = qep::closed_loop_pencil(&self.system, gains)?.eigenvalues()?;
        Ok(SpilloverReport::new(expected, actual))
    }
}

/// Result of applying one Γ.
#[derive(Debug, Clone)]
pub struct Assignment {
    pub gains: FeedbackGains,
    /// Sylvester solution Z (`p×p`).
    pub z: DMatrix<f64>,
    pub z_rcond: f64,
    /// `Z⁻ᵀ`.
    pub w_inv: DMatrix<f64>,
    /// `Φ = Γ J`: `J = Z⁻ᵀ` (state) or `(ZᵀΛ̄₁)⁻¹` (derivative).
    pub j: DMatrix<f64>,
    pub phi: DMatrix<f64>,
}

/// Closed-loop spectrum against targets ∪ retained eigenvalues.
#[derive(Debug, Clone)]
pub struct SpilloverReport {
    pub expected: Vec<C64>,
    pub actual: Vec<C64>,
    pub matching: SpectrumMatch,
}

impl SpilloverReport {
    pub fn new(expected: Vec<C64>, actual: Vec<C64>) -> Self {
        let matching = match_spectra(&expected, &actual);
        Self { expected, actual, matching }
    }

    pub fn max_error(&self) -> f64 {
        self.matching.max_error()
    }

    pub fn passed(&self) -> bool {
        self.max_error() <= SPILLOVER_TOL
    }
}

/// Uniform `[−1, 1]` Γ entries from a seeded generator.
pub fn random_gamma(rng: &mut impl rand::Rng, shape: (usize, usize)) -> DMatrix<f64> {
    DMatrix::from_fn(shape.0, shape.1, |_, _| rng.gen_range(-1.0..=1.0))
}

/// Draw seeded random Γ until one is admissible for `kind`.
pub fn admissible_gamma(
    ctx: &AssignmentContext,
    kind: FeedbackKind,
    rng: &mut impl rand::Rng,
    max_draws: usize,
) -> Result<DMatrix<f64>> {
    ctx.check_kind(kind)?;
    for _ in 0..max_draws {
        let gamma = random_gamma(rng, ctx.gamma_shape());
        match ctx.assign(kind, &gamma) {
            Ok(_) => return Ok(gamma),
            Err(Error::InadmissibleGamma { .. } | Error::Singular { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoAdmissibleStart { attempts: max_draws })
}
