//! The six subcommands.

use pqeva::assign::AssignmentContext;
use pqeva::metrics::{closed_loop_kappa2, d_en, kappa2_reduction, r_ss};
use pqeva::qep::{closed_loop_pencil, spectrum_sum_product, Pencil};
use pqeva::robustopt::{
    optimize, optimize_min_norm_multistart, optimize_multistart, seeded_start, OptimizationRun, Termination,
};
use pqeva::sensitivity::sensitivities;
use pqeva::sim::{simulate, Trajectory};
use pqeva::{DMatrix, FeedbackGains, FeedbackKind};

use crate::config::{AssignSettings, Config, Start};
use crate::output::{Cell, Output, Table};
use crate::CliError;

/// How a command ended when it wrote its outputs but the result is not usable.
#[derive(Debug)]
pub enum Outcome {
    Done,
    /// Spillover check failed or similar; exit code 3.
    Numerical(String),
    /// Optimizer hit maxiter; exit code 4.
    NotConverged(String),
}

fn assign_settings(cfg: &Config) -> Result<&AssignSettings, CliError> {
    cfg.assign
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs an [assign] section".into()))
}

fn context(cfg: &Config, a: &AssignSettings) -> Result<AssignmentContext, CliError> {
    Ok(AssignmentContext::from_selection(cfg.system.clone(), &a.selector, &a.targets)?)
}

/// Configured Γ, or the first seeded admissible draw.
fn start_gamma(cfg: &Config, ctx: &AssignmentContext, a: &AssignSettings) -> Result<DMatrix<f64>, CliError> {
    match &a.gamma {
        Some(g) => {
            if g.shape() != ctx.gamma_shape() {
                return Err(CliError::Config(format!(
                    "[assign] gamma is {}x{}, expected {}x{}",
                    g.nrows(),
                    g.ncols(),
                    ctx.gamma_shape().0,
                    ctx.gamma_shape().1
                )));
            }
            Ok(g.clone())
        }
        None => Ok(seeded_start(ctx, a.kind, cfg.optimizer.seed, 0, cfg.optimizer.max_draws, |g| {
            ctx.assign(a.kind, g).is_ok()
        })?),
    }
}

/// Gains used by `sensitivity` and `perturb`: the assignment at the start Γ,
/// or open loop when there is no [assign] section.
fn analysis_gains(cfg: &Config) -> Result<FeedbackGains, CliError> {
    match &cfg.assign {
        None => Ok(FeedbackGains::zero(cfg.system.inputs(), cfg.system.dof(), FeedbackKind::State)),
        Some(a) => {
            let ctx = context(cfg, a)?;
            let gamma = start_gamma(cfg, &ctx, a)?;
            Ok(ctx.assign(a.kind, &gamma)?.gains)
        }
    }
}

fn complex_cells(z: pqeva::C64) -> [Cell; 2] {
    [Cell::Num(z.re), Cell::Num(z.im)]
}

pub fn eig(cfg: &Config, out: &mut Output) -> Result<Outcome, CliError> {
    let report = cfg.system.validate();
    let mut checks = Table::new("validation", &["check", "passed", "detail"]);
    for c in &report.checks {
        checks.push(vec![c.name.into(), Cell::from(if c.passed { "yes" } else { "no" }), c.detail.clone().into()]);
    }
    out.table(&checks)?;

    // already sorted by modulus; `index` is what `select = "indices"` refers to
    let eig = Pencil::open_loop(&cfg.system).solve()?;
    let mut t = Table::new("eig", &["index", "re", "im", "abs", "residual"]);
    for (i, (&z, &res)) in eig.values.iter().zip(&eig.residuals).enumerate() {
        let [re, im] = complex_cells(z);
        t.push(vec![i.into(), re, im, z.norm().into(), res.into()]);
    }
    out.table(&t)?;
    Ok(Outcome::Done)
}

pub fn assign(cfg: &Config, out: &mut Output) -> Result<Outcome, CliError> {
    let a = assign_settings(cfg)?;
    let ctx = context(cfg, a)?;
    let gamma = start_gamma(cfg, &ctx, a)?;
    let res = ctx.assign(a.kind, &gamma)?;
    out.matrix("gamma", &gamma)?;
    out.matrix("F", &res.gains.f)?;
    out.matrix("G", &res.gains.g)?;

    let report = ctx.verify(&res.gains)?;
    let mut t = Table::new("spillover", &["index", "expected_re", "expected_im", "actual_re", "actual_im", "error"]);
    for (i, (&e, &p)) in report.expected.iter().zip(&report.matching.partner).enumerate() {
        let [er, ei] = complex_cells(e);
        let [ar, ai] = complex_cells(report.actual[p]);
        t.push(vec![i.into(), er, ei, ar, ai, report.matching.distances[i].into()]);
    }
    out.save(&t)?;
    let mut s = Table::new("assign_summary", &["quantity", "value"]);
    s.push(vec!["kind".into(), a.kind.as_str().into()]);
    s.push(vec!["z_rcond".into(), res.z_rcond.into()]);
    s.push(vec!["gain_norm_sq".into(), res.gains.norm_sq().into()]);
    s.push(vec!["spillover_max_error".into(), report.max_error().into()]);
    s.push(vec!["spillover".into(), Cell::from(if report.passed() { "pass" } else { "fail" })]);
    out.table(&s)?;
    if report.passed() {
        Ok(Outcome::Done)
    } else {
        Ok(Outcome::Numerical(format!("spillover error {:.3e}", report.max_error())))
    }
}

struct RobustRuns {
    runs: Vec<Option<OptimizationRun>>,
    best: usize,
}

impl RobustRuns {
    fn best(&self) -> &OptimizationRun {
        self.runs[self.best].as_ref().expect("best run exists")
    }
}

fn robust_runs(cfg: &Config, ctx: &AssignmentContext, a: &AssignSettings) -> Result<RobustRuns, CliError> {
    match cfg.start {
        Start::Given => {
            let gamma = start_gamma(cfg, ctx, a)?;
            let run = optimize(ctx, &gamma, cfg.weights, a.kind, &cfg.optimizer)?;
            Ok(RobustRuns { runs: vec![Some(run)], best: 0 })
        }
        Start::Multistart => {
            let ms = optimize_multistart(ctx, cfg.weights, a.kind, &cfg.optimizer)?;
            Ok(RobustRuns { runs: ms.runs, best: ms.best })
        }
    }
}

pub fn optimize_cmd(cfg: &Config, out: &mut Output) -> Result<Outcome, CliError> {
    let a = assign_settings(cfg)?;
    let ctx = context(cfg, a)?;
    let runs = robust_runs(cfg, &ctx, a)?;

    let mut log = Table::new("iterations", &["restart", "k", "f", "grad_norm"]);
    let mut summary = Table::new("restarts", &["restart", "iterations", "termination", "f", "grad_norm"]);
    for (r, run) in runs.runs.iter().enumerate() {
        let Some(run) = run else {
            summary.push(vec![r.into(), 0usize.into(), "no_admissible_start".into(), f64::NAN.into(), f64::NAN.into()]);
            continue;
        };
        for (k, (f, g)) in run.cost_history.iter().zip(&run.grad_norm_history).enumerate() {
            log.push(vec![r.into(), k.into(), (*f).into(), (*g).into()]);
        }
        summary.push(vec![
            r.into(),
            run.iterations.into(),
            run.termination.as_str().into(),
            run.value().into(),
            run.grad_norm().into(),
        ]);
    }
    out.save(&log)?;
    out.table(&summary)?;

    let best = runs.best();
    let gains = &best.final_eval.gains;
    out.matrix("gamma0", best.initial_gamma())?;
    out.matrix("gamma", best.gamma())?;
    out.matrix("F", &gains.f)?;
    out.matrix("G", &gains.g)?;

    let kappa = kappa2_reduction(&ctx, best.initial_gamma(), best, a.kind)?;
    let den = d_en(&cfg.system, gains, &cfg.perturb)?;
    let mut m = Table::new("metrics", &["metric", "value"]);
    m.push(vec!["kind".into(), a.kind.as_str().into()]);
    m.push(vec!["best_restart".into(), runs.best.into()]);
    m.push(vec!["termination".into(), best.termination.as_str().into()]);
    m.push(vec!["iterations".into(), best.iterations.into()]);
    m.push(vec!["f_star".into(), best.value().into()]);
    m.push(vec!["grad_norm".into(), best.grad_norm().into()]);
    m.push(vec!["kappa2_gamma0".into(), kappa.before.into()]);
    m.push(vec!["kappa2".into(), kappa.after.into()]);
    m.push(vec!["delta_kappa2_pct".into(), kappa.pct.into()]);
    m.push(vec!["d_en_mean".into(), den.mean.into()]);
    m.push(vec!["d_en_max".into(), den.max.into()]);
    m.push(vec!["d_en_samples".into(), den.values().len().into()]);
    m.push(vec!["gain_norm_sq".into(), gains.norm_sq().into()]);
    if cfg.min_norm {
        let mn = optimize_min_norm_multistart(&ctx, a.kind, &cfg.optimizer)?;
        let mn = mn.best();
        out.matrix("F_min_norm", &mn.gains.f)?;
        out.matrix("G_min_norm", &mn.gains.g)?;
        m.push(vec!["min_norm_gain_norm_sq".into(), mn.value().into()]);
        m.push(vec!["r_ss".into(), r_ss(gains, &mn.gains)?.into()]);
    }
    out.table(&m)?;

    if best.termination == Termination::MaxIter {
        Ok(Outcome::NotConverged(format!(
            "maxiter {} reached with gradient norm {:.3e} (threshold {:.3e})",
            cfg.optimizer.maxiter,
            best.grad_norm(),
            best.threshold
        )))
    } else {
        Ok(Outcome::Done)
    }
}

pub fn sensitivity(cfg: &Config, out: &mut Output) -> Result<Outcome, CliError> {
    let gains = analysis_gains(cfg)?;
    let s = sensitivities(&cfg.system, &gains)?;
    let mut t = Table::new("sensitivity", &["name", "frobenius", "max_abs"]);
    for (name, a) in s.named() {
        out.matrix(name, a)?;
        t.push(vec![name.into(), a.norm().into(), a.amax().into()]);
    }
    let agg = spectrum_sum_product(&closed_loop_pencil(&cfg.system, &gains)?)?;
    t.push(vec!["eigenvalue_sum".into(), agg.sum.into(), f64::NAN.into()]);
    t.push(vec!["eigenvalue_product".into(), agg.product.into(), f64::NAN.into()]);
    out.table(&t)?;
    Ok(Outcome::Done)
}

pub fn perturb(cfg: &Config, out: &mut Output) -> Result<Outcome, CliError> {
    let gains = analysis_gains(cfg)?;
    let report = d_en(&cfg.system, &gains, &cfg.perturb)?;
    let mut t = Table::new("perturb", &["sample", "d_en", "kappa2", "notes"]);
    for s in &report.samples {
        t.push(vec![
            s.index.into(),
            s.d_en.unwrap_or(f64::NAN).into(),
            s.kappa2.unwrap_or(f64::NAN).into(),
            s.note.clone().into(),
        ]);
    }
    out.save(&t)?;
    let mut s = Table::new("perturb_summary", &["quantity", "value"]);
    s.push(vec!["rho".into(), cfg.perturb.rho.into()]);
    s.push(vec!["samples".into(), report.values().len().into()]);
    s.push(vec!["d_en_mean".into(), report.mean.into()]);
    s.push(vec!["d_en_max".into(), report.max.into()]);
    s.push(vec!["kappa2_nominal".into(), closed_loop_kappa2(&cfg.system, &gains)?.into()]);
    out.table(&s)?;
    Ok(Outcome::Done)
}

fn trajectory_table(name: &str, traj: &Trajectory, n: usize) -> Table {
    let mut cols = vec!["time".to_string()];
    cols.extend((1..=n).map(|i| format!("x_{i}")));
    cols.extend((1..=n).map(|i| format!("v_{i}")));
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut t = Table::new(name, &cols);
    for k in 0..traj.len() {
        let mut row = vec![Cell::Num(traj.times[k])];
        row.extend(traj.x[k].iter().map(|&x| Cell::Num(x)));
        row.extend(traj.v[k].iter().map(|&v| Cell::Num(v)));
        t.push(row);
    }
    t
}

pub fn simulate_cmd(cfg: &Config, out: &mut Output) -> Result<Outcome, CliError> {
    let s = &cfg.simulate;
    let n = cfg.system.dof();
    let mut loops: Vec<(&str, Option<FeedbackGains>)> = vec![("open", None)];
    if let Some(a) = &cfg.assign {
        let ctx = context(cfg, a)?;
        let gamma = start_gamma(cfg, &ctx, a)?;
        let gains = ctx.assign(a.kind, &gamma)?.gains;
        out.matrix("F", &gains.f)?;
        out.matrix("G", &gains.g)?;
        loops.push(("closed", Some(gains)));
    }
    let quarter = s.t_end / 4.0;
    let mut summary = Table::new("simulate_summary", &["loop", "samples", "max_abs_early", "max_abs_late", "late_over_early"]);
    for (name, gains) in &loops {
        let traj = simulate(&cfg.system, gains.as_ref(), &s.forcing, &s.x0, &s.v0, s.dt, s.t_end)?;
        out.save(&trajectory_table(name, &traj, n))?;
        let early = traj.max_abs_displacement(0.0, quarter);
        let late = traj.max_abs_displacement(s.t_end - quarter, s.t_end);
        let ratio = if early > 0.0 { late / early } else { f64::NAN };
        summary.push(vec![(*name).into(), traj.len().into(), early.into(), late.into(), ratio.into()]);
    }
    out.table(&summary)?;
    Ok(Outcome::Done)
}
