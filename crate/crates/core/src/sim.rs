//! Fixed-step RK4 time response under harmonic forcing.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, SINGULAR_RCOND};
use crate::model::{FeedbackGains, SecondOrderSystem};
use crate::qep::{closed_loop_pencil, Pencil};
use crate::{Error, Result};

/// `w(t) = amplitude · sin(frequency · t) · dof_weights`.
#[derive(Debug, Clone)]
pub struct ForcingSpec {
    pub amplitude: f64,
    /// rad/s
    pub frequency: f64,
    pub dof_weights: DVector<f64>,
}

impl ForcingSpec {
    /// Force applied through the first actuator column of B.
    pub fn through_first_input(system: &SecondOrderSystem, amplitude: f64, frequency: f64) -> Self {
        Self {
            amplitude,
            frequency,
            dof_weights: system.input().column(0).into_owned(),
        }
    }

    pub fn none(n: usize) -> Self {
        Self {
            amplitude: 0.0,
            frequency: 0.0,
            dof_weights: DVector::zeros(n),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.dof_weights.len() != n {
            return Err(Error::Dimension(format!(
                "forcing weights have length {}, system has {n} dof",
                self.dof_weights.len()
            )));
        }
        if !self.amplitude.is_finite() || !self.frequency.is_finite() || self.dof_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("forcing must be finite".into()));
        }
        if self.amplitude != 0.0 && self.dof_weights.iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidInput("nonzero amplitude with all-zero weights".into()));
        }
        Ok(())
    }

    pub fn at(&self, t: f64) -> DVector<f64> {
        &self.dof_weights * (self.amplitude * (self.frequency * t).sin())
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub v: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|x_i(t)|` over all coordinates for `t` in `[t0, t1]`.
    pub fn max_abs_displacement(&self, t0: f64, t1: f64) -> f64 {
        let slack = 1e-9 * t1.abs().max(1.0);
        self.times
            .iter()
            .zip(&self.x)
            .filter(|(&t, _)| t >= t0 - slack && t <= t1 + slack)
            .map(|(_, x)| x.amax())
            .fold(0.0, f64::max)
    }
}

/// `½vᵀMv + ½xᵀKx`.
pub fn energy(m: &DMatrix<f64>, k: &DMatrix<f64>, x: &DVector<f64>, v: &DVector<f64>) -> f64 {
    0.5 * v.dot(&(m * v)) + 0.5 * x.dot(&(k * x))
}

/// Integrate `Mc ẍ + Cc ẋ + Kc x = w(t)` from `t = 0` to `t_end` with step
/// `dt`. Without gains the open loop is used.
pub fn simulate(
    system: &SecondOrderSystem,
    gains: Option<&FeedbackGains>,
    forcing: &ForcingSpec,
    x0: &DVector<f64>,
    v0: &DVector<f64>,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory> {
    let n = system.dof();
    if x0.len() != n || v0.len() != n {
        return Err(Error::Dimension(format!("initial state must have length {n}")));
    }
    if !(dt > 0.0 && dt.is_finite()) || !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidInput(format!("need dt > 0 and t_end >= 0, got {dt}, {t_end}")));
    }
    forcing.validate(n)?;
    let pencil = match gains {
        Some(g) => closed_loop_pencil(system, g)?,
        None => Pencil::open_loop(system),
    };
    let minv = linalg::invert(&pencil.m, "effective mass", SINGULAR_RCOND)?.inverse;
    let accel = |t: f64, x: &DVector<f64>, v: &DVector<f64>| -> DVector<f64> {
        &minv * (forcing.at(t) - &pencil.c * v - &pencil.k * x)
    };

    let steps = (t_end / dt).round() as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        v: Vec::with_capacity(steps + 1),
    };
    let (mut x, mut v) = (x0.clone(), v0.clone());
    traj.times.push(0.0);
    traj.x.push(x.clone());
    traj.v.push(v.clone());
    for i in 0..steps {
        let t = i as f64 * dt;
        let h = 0.5 * dt;
        let k1x = v.clone();
        let k1v = accel(t, &x, &v);
        let k2x = &v + &k1v * h;
        let k2v = accel(t + h, &(&x + &k1x * h), &k2x);
        let k3x = &v + &k2v * h;
        let k3v = accel(t + h, &(&x + &k2x * h), &k3x);
        let k4x = &v + &k3v * dt;
        let k4v = accel(t + dt, &(&x + &k3x * dt), &k4x);
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (dt / 6.0);
        let t_next = (i + 1) as f64 * dt;
        if x.iter().chain(v.iter()).any(|z| !z.is_finite()) {
            return Err(Error::Divergence { time: t_next });
        }
        traj.times.push(t_next);
        traj.x.push(x.clone());
        traj.v.push(v.clone());
    }
    Ok(traj)
}
