//! Robustness measures: eigenvalue deviation under random perturbation,
//! relative gain norm, and the change in eigenvector conditioning.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assign::AssignmentContext;
use crate::matching::match_spectra;
use crate::model::{FeedbackGains, FeedbackKind, SecondOrderSystem};
use crate::qep::{closed_loop_pencil, ClosedLoopEigensystem};
use crate::robustopt::OptimizationRun;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct PerturbationConfig {
    /// Relative Frobenius size of each of ΔM, ΔC, ΔK.
    pub rho: f64,
    pub samples: usize,
    pub seed: u64,
    /// Draw symmetric perturbations.
    pub symmetric: bool,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            rho: 1e-4,
            samples: 20,
            seed: 0,
            symmetric: true,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidInput(format!("rho must be >= 0, got {}", self.rho)));
        }
        if self.samples == 0 {
            return Err(Error::InvalidInput("samples must be >= 1".into()));
        }
        Ok(())
    }
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize, symmetric: bool) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
    if symmetric {
        (&a + a.transpose()) * 0.5
    } else {
        a
    }
}

fn scaled(x: &DMatrix<f64>, dir: DMatrix<f64>, rho: f64) -> DMatrix<f64> {
    let target = rho * x.norm();
    let norm = dir.norm();
    if target == 0.0 || norm == 0.0 {
        return x.clone();
    }
    x + dir * (target / norm)
}

/// Sample `index` of the perturbed system: `M + ΔM`, `C + ΔC`, `K + ΔK` with
/// `‖ΔX‖_F = rho‖X‖_F`. B is left alone. Each sample reads its own ChaCha
/// stream of the seed, so samples do not depend on evaluation order.
pub fn perturb(system: &SecondOrderSystem, config: &PerturbationConfig, index: usize) -> SecondOrderSystem {
    let n = system.dof();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let dm = random_direction(&mut rng, n, config.symmetric);
    let dc = random_direction(&mut rng, n, config.symmetric);
    let dk = random_direction(&mut rng, n, config.symmetric);
    system
        .with_matrices(
            scaled(system.mass(), dm, config.rho),
            scaled(system.damping(), dc, config.rho),
            scaled(system.stiffness(), dk, config.rho),
        )
        .expect("perturbation keeps shapes and finiteness")
}

#[derive(Debug, Clone)]
pub struct DenSample {
    pub index: usize,
    /// `None` when the perturbed closed loop could not be solved.
    pub d_en: Option<f64>,
    pub kappa2: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct DenReport {
    pub samples: Vec<DenSample>,
    /// Over the solvable samples.
    pub mean: f64,
    pub max: f64,
}

impl DenReport {
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().filter_map(|s| s.d_en).collect()
    }
}

/// `sqrt(Σ|λ_j − λ̃_j|²)` over all closed-loop eigenvalues after
/// minimum-distance pairing, for each perturbed sample.
pub fn d_en(system: &SecondOrderSystem, gains: &FeedbackGains, config: &PerturbationConfig) -> Result<DenReport> {
    config.validate()?;
    let nominal = closed_loop_pencil(system, gains)?.solve()?.values;
    let samples: Vec<DenSample> = (0..config.samples)
        .map(|index| {
            let sys = perturb(system, config, index);
            match closed_loop_pencil(&sys, gains).and_then(|p| ClosedLoopEigensystem::from_pencil(&p)) {
                Ok(cl) => DenSample {
                    index,
                    d_en: Some(match_spectra(&nominal, &cl.eig.values).root_sum_square()),
                    kappa2: Some(cl.kappa2()),
                    note: String::new(),
                },
                Err(e) => DenSample {
                    index,
                    d_en: None,
                    kappa2: None,
                    note: e.to_string(),
                },
            }
        })
        .collect();
    let vals: Vec<f64> = samples.iter().filter_map(|s| s.d_en).collect();
    if vals.is_empty() {
        return Err(Error::Singular {
            what: "every perturbed closed loop".into(),
            rcond: 0.0,
        });
    }
    Ok(DenReport {
        mean: vals.iter().sum::<f64>() / vals.len() as f64,
        max: vals.iter().cloned().fold(0.0, f64::max),
        samples,
    })
}

/// `(‖F‖² + ‖G‖²) / (‖F_mn‖² + ‖G_mn‖²)`.
pub fn r_ss(robust: &FeedbackGains, minnorm: &FeedbackGains) -> Result<f64> {
    let den = minnorm.norm_sq();
    if !(den > 0.0) {
        return Err(Error::InvalidInput("minimum-norm gains are zero".into()));
    }
    Ok(robust.norm_sq() / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kappa2Reduction {
    pub before: f64,
    pub after: f64,
    /// `100(κ⁰ − κ)/κ⁰`.
    pub pct: f64,
}

pub fn closed_loop_kappa2(system: &SecondOrderSystem, gains: &FeedbackGains) -> Result<f64> {
    Ok(ClosedLoopEigensystem::from_pencil(&closed_loop_pencil(system, gains)?)?.kappa2())
}

/// κ₂ of the closed-loop eigenvectors at Γ₀ and at the end of `run`.
pub fn kappa2_reduction(
    ctx: &AssignmentContext,
    gamma0: &DMatrix<f64>,
    run: &OptimizationRun,
    kind: FeedbackKind,
) -> Result<Kappa2Reduction> {
    let g0 = ctx.assign(kind, gamma0)?.gains;
    let before = closed_loop_kappa2(&ctx.system, &g0)?;
    let after = closed_loop_kappa2(&ctx.system, &run.final_eval.gains)?;
    Ok(Kappa2Reduction {
        before,
        after,
        pct: 100.0 * (before - after) / before,
    })
}

#[derive(Debug, Clone)]
pub struct MetricReport {
    pub d_en_samples: Vec<f64>,
    pub d_en_mean: f64,
    pub d_en_max: f64,
    pub r_ss: Option<f64>,
    pub kappa2_before: f64,
    pub kappa2_after: f64,
    pub delta_kappa2_pct: f64,
}

impl MetricReport {
    pub fn new(den: &DenReport, r_ss: Option<f64>, kappa: Kappa2Reduction) -> Self {
        Self {
            d_en_samples: den.values(),
            d_en_mean: den.mean,
            d_en_max: den.max,
            r_ss,
            kappa2_before: kappa.before,
            kappa2_after: kappa.after,
            delta_kappa2_pct: kappa.pct,
        }
    }
}
