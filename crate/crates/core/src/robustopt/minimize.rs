//! Quasi-Newton minimisation over a flat parameter vector.
//!
//! Points where the objective is undefined (an inverse does not exist) are
//! treated as `+inf` and rejected by the backtracking line search.

use nalgebra::{DMatrix, DVector};

/// Sufficient-decrease constant of the Armijo test.
pub const ARMIJO_C: f64 = 1e-4;
/// Step shrink factor during backtracking.
pub const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

pub trait Objective {
    /// Objective value, `None` outside the admissible region.
    fn value(&self, x: &DVector<f64>) -> Option<f64>;

    /// Value and gradient, `None` outside the admissible region.
    fn value_grad(&self, x: &DVector<f64>) -> Option<(f64, DVector<f64>)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bfgs,
    GradientDescent,
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bfgs" => Ok(Method::Bfgs),
            "gd" => Ok(Method::GradientDescent),
            other => Err(crate::Error::InvalidInput(format!("unknown method '{other}' (bfgs|gd)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIter,
    LineSearchFailure,
    InadmissibleRegion,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::GradientTolerance => "gradient_tolerance",
            Termination::MaxIter => "max_iter",
            Termination::LineSearchFailure => "line_search_failure",
            Termination::InadmissibleRegion => "inadmissible_region",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trace {
    /// Iterates, starting with the initial point; one entry per accepted step.
    pub x_history: Vec<DVector<f64>>,
    pub f_history: Vec<f64>,
    pub g_norm_history: Vec<f64>,
    pub termination: Termination,
    /// Gradient-norm threshold that was in force.
    pub threshold: f64,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.x_history.len() - 1
    }

    pub fn x(&self) -> &DVector<f64> {
        self.x_history.last().expect("non-empty")
    }

    pub fn f(&self) -> f64 {
        *self.f_history.last().expect("non-empty")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub method: Method,
    pub maxiter: usize,
    pub eps: f64,
    /// Stop on `‖∇f‖ ≤ eps·max(1, ‖∇f(x₀)‖)` instead of `‖∇f‖ ≤ eps`.
    pub relative: bool,
}

impl Settings {
    /// Gradient-norm threshold given the gradient norm at the start.
    pub fn threshold(&self, g0: f64) -> f64 {
        if self.relative {
            self.eps * g0.max(1.0)
        } else {
            self.eps
        }
    }
}

/// Minimise from `x0`. Returns `None` when `x0` itself is inadmissible.
pub fn minimize(obj: &dyn Objective, x0: DVector<f64>, settings: &Settings) -> Option<Trace> {
    let Settings { method, maxiter, .. } = *settings;
    let n = x0.len();
    let (mut f, mut g) = obj.value_grad(&x0)?;
    let eps = settings.threshold(g.norm());
    let mut x = x0;
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut alpha_gd = 1.0;
    let mut trace = Trace {
        x_history: vec![x.clone()],
        f_history: vec![f],
        g_norm_history: vec![g.norm()],
        termination: Termination::MaxIter,
        threshold: eps,
    };

    let mut k = 0;
    while k < maxiter {
        if g.norm() <= eps {
            trace.termination = Termination::GradientTolerance;
            return Some(trace);
        }
        let mut d = match method {
            Method::Bfgs => -(&h * &g),
            Method::GradientDescent => -g.clone(),
        };
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            h.fill_with_identity();
            fresh = true;
            d = -g.clone();
            slope = -g.norm_squared();
        }

        let mut alpha = match method {
            Method::Bfgs => 1.0,
            Method::GradientDescent => alpha_gd,
        };
        let mut accepted = None;
        let mut any_finite = false;
        for _ in 0..MAX_BACKTRACKS {
            let xt = &x + &d * alpha;
            if let Some(ft) = obj.value(&xt) {
                if ft.is_finite() {
                    any_finite = true;
                    if ft <= f + ARMIJO_C * alpha * slope {
                        accepted = Some(xt);
                        break;
                    }
                }
            }
            alpha *= BACKTRACK;
        }

        let Some(xt) = accepted.and_then(|xt| obj.value_grad(&xt).map(|fg| (xt, fg))) else {
            if method == Method::Bfgs && !fresh {
                // retry along steepest descent before giving up
                h.fill_with_identity();
                fresh = true;
                continue;
            }
            trace.termination = if any_finite {
                Termination::LineSearchFailure
            } else {
                Termination::InadmissibleRegion
            };
            return Some(trace);
        };
        let (xt, (ft, gt)) = xt;
        if method == Method::GradientDescent {
            alpha_gd = (alpha * 2.0).min(1e6);
        }

        let s = &xt - &x;
        let y = &gt - &g;
        let sy = s.dot(&y);
        if method == Method::Bfgs && sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if fresh {
                h *= sy / y.norm_squared();
                fresh = false;
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ, expanded
            h += (&s * s.transpose()) * (rho * rho * yhy + rho)
                - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }

        x = xt;
        f = ft;
        g = gt;
        trace.x_history.push(x.clone());
        trace.f_history.push(f);
        trace.g_norm_history.push(g.norm());
        k += 1;
    }
    trace.termination = if g.norm() <= eps {
        Termination::GradientTolerance
    } else {
        Termination::MaxIter
    };
    Some(trace)
}

/// Central finite-difference gradient with step `h` per coordinate.
pub fn central_difference(f: impl Fn(&DVector<f64>) -> Option<f64>, x: &DVector<f64>, h: f64) -> Option<DVector<f64>> {
    let mut g = DVector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = f(&xp)?;
        xp[i] = x[i] - h;
        let fm = f(&xp)?;
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    Some(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn abs(method: Method, maxiter: usize, eps: f64) -> Settings {
        Settings { method, maxiter, eps, relative: false }
    }

    #[test]
    fn relative_threshold_scales_with_initial_gradient() {
        let obj = Quadratic { target: dvector![1e4, -2e4] };
        let rel = Settings { relative: true, ..abs(Method::Bfgs, 100, 1e-6) };
        let t = minimize(&obj, DVector::zeros(2), &rel).unwrap();
        assert!((t.threshold - 1e-6 * obj.target.norm() * 2.0).abs() < 1e-9);
        assert_eq!(rel.threshold(0.5), 1e-6);
        assert_eq!(t.termination, Termination::GradientTolerance);
    }

    struct Quadratic {
        target: DVector<f64>,
    }

    impl Objective for Quadratic {
        fn value(&self, x: &DVector<f64>) -> Option<f64> {
            Some((x - &self.target).norm_squared())
        }
        fn value_grad(&self, x: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
            Some(((x - &self.target).norm_squared(), (x - &self.target) * 2.0))
        }
    }

    struct Rosenbrock;

    impl Objective for Rosenbrock {
        fn value(&self, x: &DVector<f64>) -> Option<f64> {
            Some((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2))
        }
        fn value_grad(&self, x: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
            let g = dvector![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0])
            ];
            Some((self.value(x)?, g))
        }
    }

    /// Undefined for x[0] > 1: exercises the inadmissible handling.
    struct Walled;

    impl Objective for Walled {
        fn value(&self, x: &DVector<f64>) -> Option<f64> {
            (x[0] <= 1.0).then(|| (x[0] - 3.0).powi(2))
        }
        fn value_grad(&self, x: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
            Some((self.value(x)?, dvector![2.0 * (x[0] - 3.0)]))
        }
    }

    #[test]
    fn quadratic_in_three_iterations() {
        let obj = Quadratic { target: dvector![1.0, -2.0, 0.5, 4.0] };
        let t = minimize(&obj, DVector::zeros(4), &abs(Method::Bfgs, 100, 1e-10)).unwrap();
        assert_eq!(t.termination, Termination::GradientTolerance);
        assert!(t.iterations() <= 3);
        assert!((t.x() - &obj.target).norm() < 1e-10);
    }

    #[test]
    fn rosenbrock_bfgs() {
        let t = minimize(&Rosenbrock, dvector![-1.2, 1.0], &abs(Method::Bfgs, 500, 1e-8)).unwrap();
        assert_eq!(t.termination, Termination::GradientTolerance);
        assert!((t.x() - dvector![1.0, 1.0]).norm() < 1e-6);
        assert!(t.f_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn gradient_descent_makes_progress() {
        let t = minimize(&Rosenbrock, dvector![-1.2, 1.0], &abs(Method::GradientDescent, 50, 1e-8)).unwrap();
        assert_eq!(t.termination, Termination::MaxIter);
        assert!(t.f() < t.f_history[0]);
        assert!(t.f_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn wall_stops_the_search() {
        let t = minimize(&Walled, dvector![0.0], &abs(Method::Bfgs, 100, 1e-8)).unwrap();
        assert!(t.x()[0] <= 1.0);
        assert_ne!(t.termination, Termination::GradientTolerance);
        assert!(minimize(&Walled, dvector![2.0], &abs(Method::Bfgs, 10, 1e-8)).is_none());
    }

    #[test]
    fn central_difference_of_cubic() {
        let f = |x: &DVector<f64>| Some(x[0].powi(3) + x[0] * x[1]);
        let g = central_difference(f, &dvector![2.0, 3.0], 1e-5).unwrap();
        assert!((g[0] - 15.0).abs() < 1e-8 && (g[1] - 2.0).abs() < 1e-8);
    }
}
