//! TOML run configuration.
//!
//! ```toml
//! [system]
//! builtin = "exp3_fourdof"        # or m_path / c_path / k_path / b_path
//!
//! [assign]
//! kind = "state"                   # state | derivative
//! select = "nearest"               # indices | nearest | smallest_abs | largest_real
//! near = ["-0.0385+4.1362i"]       # for nearest
//! targets = ["-1+1i", "-1-1i"]
//!
//! [weights]
//! w1 = 1.0
//! w2 = 1.0
//! ```
//!
//! Anything left out falls back to the builtin example's setting, then to the
//! library defaults.

use std::path::{Path, PathBuf};

use pqeva::metrics::PerturbationConfig;
use pqeva::model::{builtin_example, load_matrix, ProblemDefinition, RobustnessWeights, BUILTIN_NAMES};
use pqeva::qep::Selector;
use pqeva::robustopt::{Method, OptimizerConfig};
use pqeva::sim::ForcingSpec;
use pqeva::{DMatrix, DVector, FeedbackKind, SecondOrderSystem, C64};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: Option<RawSystem>,
    assign: Option<RawAssign>,
    weights: Option<RawWeights>,
    optimizer: Option<RawOptimizer>,
    perturb: Option<RawPerturb>,
    simulate: Option<RawSimulate>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    builtin: Option<String>,
    m_path: Option<PathBuf>,
    c_path: Option<PathBuf>,
    k_path: Option<PathBuf>,
    b_path: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAssign {
    kind: Option<String>,
    select: Option<String>,
    indices: Option<Vec<usize>>,
    near: Option<Vec<String>>,
    count: Option<usize>,
    targets: Option<Vec<String>>,
    /// Γ as a list of rows.
    gamma: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    w1: Option<f64>,
    w2: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptimizer {
    maxiter: Option<usize>,
    eps: Option<f64>,
    restarts: Option<usize>,
    seed: Option<u64>,
    method: Option<String>,
    relative_eps: Option<bool>,
    guard: Option<bool>,
    max_draws: Option<usize>,
    /// given | multistart
    start: Option<String>,
    /// Also run the minimum-norm design and report R_ss.
    min_norm: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPerturb {
    rho: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
    symmetric: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulate {
    amplitude: Option<f64>,
    frequency: Option<f64>,
    /// 1-based coordinate receiving the force; default is B's first column.
    dof: Option<usize>,
    dt: Option<f64>,
    t_end: Option<f64>,
    x0: Option<Vec<f64>>,
    v0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    Given,
    Multistart,
}

#[derive(Debug, Clone)]
pub struct AssignSettings {
    pub kind: FeedbackKind,
    pub selector: Selector,
    pub targets: Vec<C64>,
    pub gamma: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct SimulateSettings {
    pub forcing: ForcingSpec,
    pub dt: f64,
    pub t_end: f64,
    pub x0: DVector<f64>,
    pub v0: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub text: String,
    /// Builtin name or the matrix file list.
    pub problem_name: String,
    pub system: SecondOrderSystem,
    pub assign: Option<AssignSettings>,
    pub weights: RobustnessWeights,
    pub optimizer: OptimizerConfig,
    pub start: Start,
    pub min_norm: bool,
    pub perturb: PerturbationConfig,
    pub simulate: SimulateSettings,
}

fn bad(section: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("[{section}] {msg}"))
}

/// Parse `a+bi`, `a-bi`, `bi`, `a`, `i`, `-i` (also with `j`), spaces allowed.
pub fn parse_complex(text: &str) -> Result<C64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || format!("cannot parse complex number '{text}'");
    if s.is_empty() {
        return Err(err());
    }
    let num = |t: &str| -> Result<f64, String> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| err()),
        }
    };
    let Some(body) = s.strip_suffix(['i', 'j']) else {
        return s.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| err());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (body[..k].parse::<f64>().map_err(|_| err())?, num(&body[k..])?),
        None => (0.0, num(body)?),
    };
    if !re.is_finite() || !im.is_finite() {
        return Err(err());
    }
    Ok(C64::new(re, im))
}

fn parse_complex_list(section: &str, key: &str, items: &[String]) -> Result<Vec<C64>, CliError> {
    items
        .iter()
        .map(|s| parse_complex(s).map_err(|e| bad(section, format!("{key}: {e}"))))
        .collect()
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));

        let sys = raw
            .system
            .ok_or_else(|| CliError::Config("missing [system] section".into()))?;
        let (problem_name, system, builtin) = match (&sys.builtin, &sys.m_path) {
            (Some(_), Some(_)) => return Err(bad("system", "give either builtin or matrix paths, not both")),
            (Some(name), None) => {
                let p = builtin_example(name).map_err(|_| {
                    bad("system", format!("unknown builtin '{name}' (one of {})", BUILTIN_NAMES.join(", ")))
                })?;
                (name.clone(), p.system.clone(), Some(p))
            }
            (None, _) => {
                let get = |key: &str, p: &Option<PathBuf>| -> Result<DMatrix<f64>, CliError> {
                    let p = p.as_ref().ok_or_else(|| bad("system", format!("missing {key}")))?;
                    let full = resolve(base, p);
                    load_matrix(&full).map_err(|e| bad("system", format!("{key} {}: {e}", full.display())))
                };
                let m = get("m_path", &sys.m_path)?;
                let c = get("c_path", &sys.c_path)?;
                let k = get("k_path", &sys.k_path)?;
                let b = get("b_path", &sys.b_path)?;
                let system = SecondOrderSystem::new(m, c, k, b).map_err(|e| bad("system", e))?;
                let name = ["m_path", "c_path", "k_path", "b_path"]
                    .iter()
                    .zip([&sys.m_path, &sys.c_path, &sys.k_path, &sys.b_path])
                    .map(|(k, p)| format!("{k}={}", p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()))
                    .collect::<Vec<_>>()
                    .join(" ");
                (name, system, None)
            }
        };

        let assign = Self::assign_settings(raw.assign, builtin.as_ref(), &system)?;

        let weights = {
            let d = builtin.as_ref().map(|p| p.weights).unwrap_or_default();
            let (w1, w2) = raw.weights.map(|w| (w.w1.unwrap_or(d.w1), w.w2.unwrap_or(d.w2))).unwrap_or((d.w1, d.w2));
            RobustnessWeights::new(w1, w2).map_err(|e| bad("weights", e))?
        };

        let (optimizer, start, min_norm) = Self::optimizer_settings(raw.optimizer, assign.as_ref())?;

        let perturb = {
            let mut p = PerturbationConfig::default();
            if let Some(b) = &builtin {
                p.rho = b.rho;
            }
            if let Some(r) = raw.perturb {
                p.rho = r.rho.unwrap_or(p.rho);
                p.samples = r.samples.unwrap_or(p.samples);
                p.seed = r.seed.unwrap_or(p.seed);
                p.symmetric = r.symmetric.unwrap_or(p.symmetric);
            }
            p.validate().map_err(|e| bad("perturb", e))?;
            p
        };

        let simulate = Self::simulate_settings(raw.simulate, builtin.as_ref(), &system)?;

        Ok(Self {
            text: text.to_string(),
            problem_name,
            system,
            assign,
            weights,
            optimizer,
            start,
            min_norm,
            perturb,
            simulate,
        })
    }

    fn assign_settings(
        raw: Option<RawAssign>,
        builtin: Option<&ProblemDefinition>,
        system: &SecondOrderSystem,
    ) -> Result<Option<AssignSettings>, CliError> {
        let raw = match (raw, builtin) {
            (Some(r), _) => r,
            (None, Some(p)) => {
                return Ok(Some(AssignSettings {
                    kind: p.kind,
                    selector: p.selector.clone(),
                    targets: p.targets.clone(),
                    gamma: p.gamma0.clone(),
                }))
            }
            (None, None) => return Ok(None),
        };
        let kind = match &raw.kind {
            Some(k) => k.parse::<FeedbackKind>().map_err(|e| bad("assign", e))?,
            None => builtin.map(|p| p.kind).unwrap_or(FeedbackKind::State),
        };
        let targets = match &raw.targets {
            Some(t) => parse_complex_list("assign", "targets", t)?,
            None => builtin
                .map(|p| p.targets.clone())
                .ok_or_else(|| bad("assign", "missing targets"))?,
        };
        let selector = match raw.select.as_deref() {
            None => builtin
                .map(|p| p.selector.clone())
                .ok_or_else(|| bad("assign", "missing select"))?,
            Some("indices") => Selector::Indices(raw.indices.clone().ok_or_else(|| bad("assign", "select = indices needs indices"))?),
            Some("nearest") => Selector::Nearest(parse_complex_list(
                "assign",
                "near",
                raw.near.as_deref().ok_or_else(|| bad("assign", "select = nearest needs near"))?,
            )?),
            Some("smallest_abs") => Selector::SmallestAbs(raw.count.unwrap_or(targets.len())),
            Some("largest_real") => Selector::LargestReal(raw.count.unwrap_or(targets.len())),
            Some(other) => {
                return Err(bad(
                    "assign",
                    format!("unknown select '{other}' (indices|nearest|smallest_abs|largest_real)"),
                ))
            }
        };
        let gamma = match raw.gamma {
            Some(rows) => {
                let m = system.inputs();
                if rows.len() != m || rows.iter().any(|r| r.len() != targets.len()) {
                    return Err(bad("assign", format!("gamma must be {m} rows of {} values", targets.len())));
                }
                Some(DMatrix::from_fn(m, targets.len(), |i, j| rows[i][j]))
            }
            None if raw.select.is_none() && raw.targets.is_none() => builtin.and_then(|p| p.gamma0.clone()),
            None => None,
        };
        Ok(Some(AssignSettings { kind, selector, targets, gamma }))
    }

    fn optimizer_settings(
        raw: Option<RawOptimizer>,
        assign: Option<&AssignSettings>,
    ) -> Result<(OptimizerConfig, Start, bool), CliError> {
        let mut o = OptimizerConfig::default();
        let have_gamma = assign.is_some_and(|a| a.gamma.is_some());
        let mut start = if have_gamma { Start::Given } else { Start::Multistart };
        let mut min_norm = false;
        if let Some(r) = raw {
            o.maxiter = r.maxiter.unwrap_or(o.maxiter);
            o.eps = r.eps.unwrap_or(o.eps);
            o.restarts = r.restarts.unwrap_or(o.restarts);
            o.seed = r.seed.unwrap_or(o.seed);
            o.relative_eps = r.relative_eps.unwrap_or(o.relative_eps);
            o.guard = r.guard.unwrap_or(o.guard);
            o.max_draws = r.max_draws.unwrap_or(o.max_draws);
            if let Some(m) = &r.method {
                o.method = m.parse::<Method>().map_err(|e| bad("optimizer", e))?;
            }
            start = match r.start.as_deref() {
                None => start,
                Some("given") if have_gamma => Start::Given,
                Some("given") => return Err(bad("optimizer", "start = given needs [assign] gamma")),
                Some("multistart") => Start::Multistart,
                Some(other) => return Err(bad("optimizer", format!("unknown start '{other}' (given|multistart)"))),
            };
            min_norm = r.min_norm.unwrap_or(false);
        }
        if !(o.eps > 0.0) || o.restarts == 0 || o.max_draws == 0 {
            return Err(bad("optimizer", "need eps > 0, restarts >= 1, max_draws >= 1"));
        }
        Ok((o, start, min_norm))
    }

    fn simulate_settings(
        raw: Option<RawSimulate>,
        builtin: Option<&ProblemDefinition>,
        system: &SecondOrderSystem,
    ) -> Result<SimulateSettings, CliError> {
        let n = system.dof();
        let (amp, freq) = builtin.and_then(|p| p.forcing).unwrap_or((0.0, 0.0));
        let raw = raw.unwrap_or(RawSimulate {
            amplitude: None,
            frequency: None,
            dof: None,
            dt: None,
            t_end: None,
            x0: None,
            v0: None,
        });
        let mut forcing = ForcingSpec::through_first_input(
            system,
            raw.amplitude.unwrap_or(amp),
            raw.frequency.unwrap_or(freq),
        );
        if let Some(d) = raw.dof {
            if d == 0 || d > n {
                return Err(bad("simulate", format!("dof must be in 1..={n}, got {d}")));
            }
            forcing.dof_weights = DVector::from_fn(n, |i, _| if i + 1 == d { 1.0 } else { 0.0 });
        }
        let dt = raw.dt.unwrap_or(0.01);
        let t_end = raw.t_end.unwrap_or(100.0);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(bad("simulate", format!("dt must be > 0, got {dt}")));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(bad("simulate", format!("t_end must be >= 0, got {t_end}")));
        }
        let vec = |key: &str, v: Option<Vec<f64>>| -> Result<DVector<f64>, CliError> {
            match v {
                None => Ok(DVector::zeros(n)),
                Some(v) if v.len() == n => Ok(DVector::from_vec(v)),
                Some(v) => Err(bad("simulate", format!("{key} has {} entries, need {n}", v.len()))),
            }
        };
        Ok(SimulateSettings {
            forcing,
            dt,
            t_end,
            x0: vec("x0", raw.x0)?,
            v0: vec("v0", raw.v0)?,
        })
    }

    /// Apply a `--seed` override to every seeded component.
    pub fn reseed(&mut self, seed: u64) {
        self.optimizer.seed = seed;
        self.perturb.seed = seed;
    }
}
