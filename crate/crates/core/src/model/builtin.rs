//! Bundled example problems.

use nalgebra::{dmatrix, DMatrix};

use super::{FeedbackKind, RobustnessWeights, SecondOrderSystem};
use crate::qep::Selector;
use crate::{Error, Result, C64};

pub const BUILTIN_NAMES: [&str; 4] = ["exp1_random5", "exp3_fourdof", "exp4_absorber", "exp6_tridiag40"];

/// A complete assignment problem: system, which eigenvalues to move, where to,
/// and the settings the example was run with.
#[derive(Debug, Clone)]
pub struct ProblemDefinition {
    pub name: String,
    pub system: SecondOrderSystem,
    pub selector: Selector,
    /// Replacement eigenvalues, conjugation-closed.
    pub targets: Vec<C64>,
    pub weights: RobustnessWeights,
    /// Initial Γ when the example prescribes one.
    pub gamma0: Option<DMatrix<f64>>,
    pub kind: FeedbackKind,
    /// Relative perturbation magnitude used for the deviation metric.
    pub rho: f64,
    /// Harmonic excitation `(amplitude, frequency)` when the example has one.
    pub forcing: Option<(f64, f64)>,
}

pub fn builtin_example(name: &str) -> Result<ProblemDefinition> {
    match name {
        "exp1_random5" => Ok(exp1_random5()),
        "exp3_fourdof" => Ok(exp3_fourdof()),
        "exp4_absorber" => Ok(exp4_absorber()),
        "exp6_tridiag40" => Ok(exp6_tridiag40()),
        other => Err(Error::UnknownExample(other.to_string())),
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn exp1_random5() -> ProblemDefinition {
    let m = dmatrix![
        1.0, 0.020074, 0.16178, -0.00084629, -0.039004;
        0.020074, 1.0, 0.25089, 0.090954, 0.14549;
        0.16178, 0.25089, 1.0, -0.13847, 0.0026833;
        -0.00084629, 0.090954, -0.13847, 1.0, -0.13832;
        -0.039004, 0.14549, 0.0026833, -0.13832, 1.0
    ];
    let cm = dmatrix![
        1.0, -0.044725, -0.093248, -0.16885, 0.18645;
        -0.044725, 1.0, 0.05047, 0.38706, -0.29389;
        -0.093248, 0.05047, 1.0, 0.0028751, -0.086355;
        -0.16885, 0.38706, 0.0028751, 1.0, 0.034282;
        0.18645, -0.29389, -0.086355, 0.034282, 1.0
    ];
    let k = dmatrix![
        1.0, -0.63971, -0.16469, 0.042341, -0.50555;
        -0.63971, 1.0, 0.19923, 0.072314, 0.49672;
        -0.16469, 0.19923, 1.0, 0.64109, -0.24001;
        0.042341, 0.072314, 0.64109, 1.0, -0.403;
        -0.50555, 0.49672, -0.24001, -0.403, 1.0
    ];
    let b = dmatrix![
        0.3971, 0.9226;
        0.1576, 0.4583;
        0.7275, 0.7742;
        0.9719, 0.3286;
        0.1564, 0.3638
    ];
    ProblemDefinition {
        name: "exp1_random5".into(),
        system: SecondOrderSystem::new(m, cm, k, b).expect("static data"),
        selector: Selector::Nearest(vec![c(-0.2551, 1.3772)]),
        targets: vec![c(-1.0, 0.0), c(-2.0, 0.0)],
        weights: RobustnessWeights { w1: 1.0, w2: 1.0 },
        gamma0: None,
        kind: FeedbackKind::State,
        rho: 1e-4,
        forcing: None,
    }
}

fn exp3_fourdof() -> ProblemDefinition {
    let k = dmatrix![
        5.0, -5.0, 0.0, 0.0;
        -5.0, 10.0, -5.0, 0.0;
        0.0, -5.0, 10.0, -5.0;
        0.0, 0.0, -5.0, 6.0
    ];
    let b = dmatrix![
        1.0, 0.0;
        0.0, 1.0;
        0.0, 0.0;
        0.0, 0.0
    ];
    let cm = DMatrix::from_diagonal(&nalgebra::dvector![0.5, 0.0, 0.0, 0.5]);
    ProblemDefinition {
        name: "exp3_fourdof".into(),
        system: SecondOrderSystem::new(DMatrix::identity(4, 4), cm, k, b).expect("static data"),
        selector: Selector::Nearest(vec![c(-0.0385, 4.1362)]),
        targets: vec![c(-1.0, 1.0), c(-1.0, -1.0)],
        weights: RobustnessWeights { w1: 1.0, w2: 1.0 },
        gamma0: None,
        kind: FeedbackKind::State,
        rho: 1e-2,
        forcing: None,
    }
}

fn exp4_absorber() -> ProblemDefinition {
    let k = dmatrix![
        2.0, 0.0, -0.6;
        0.0, 2.0, -2.0;
        -0.6, -2.0, 2.68
    ];
    let b = dmatrix![
        1.0, 0.0;
        0.0, 0.0;
        0.0, -1.0
    ];
    ProblemDefinition {
        name: "exp4_absorber".into(),
        system: SecondOrderSystem::new(DMatrix::identity(3, 3), DMatrix::zeros(3, 3), k, b)
            .expect("static data"),
        selector: Selector::Nearest(vec![c(0.0, 2.1108)]),
        targets: vec![c(-1.0, 1.0), c(-1.0, -1.0)],
        weights: RobustnessWeights { w1: 1.0, w2: 1.0 },
        gamma0: None,
        kind: FeedbackKind::State,
        rho: 1e-2,
        forcing: Some((0.1, 2.1108)),
    }
}

/// Fixed-free chain of 40 unit masses with the first three driven.
fn exp6_tridiag40() -> ProblemDefinition {
    let n = 40;
    let inputs = 3;
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = if i + 1 == n { 1.0 } else { 2.0 };
        if i + 1 < n {
            k[(i, i + 1)] = -1.0;
            k[(i + 1, i)] = -1.0;
        }
    }
    let mut b = DMatrix::zeros(n, inputs);
    for i in 0..inputs {
        b[(i, i)] = 1.0;
    }
    // λ_{2k-1} = -k + sqrt(-10k) and its conjugate, k = 1, 2
    let targets = (1..=2)
        .flat_map(|k| {
            let k = k as f64;
            let mu = c(-k, (10.0 * k).sqrt());
            [mu, mu.conj()]
        })
        .collect();
    let gamma0 = dmatrix![
        1.0, 1.0, 1.0, 0.0;
        0.0, 1.0, 1.0, 1.0;
        1.0, 0.0, 1.0, 0.0
    ];
    ProblemDefinition {
        name: "exp6_tridiag40".into(),
        system: SecondOrderSystem::new(DMatrix::identity(n, n), DMatrix::zeros(n, n), k, b)
            .expect("static data"),
        selector: Selector::SmallestAbs(4),
        targets,
        weights: RobustnessWeights { w1: 0.1, w2: 1.0 },
        gamma0: Some(gamma0),
        kind: FeedbackKind::State,
        rho: 1e-2,
        forcing: None,
    }
}
