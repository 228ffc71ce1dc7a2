use pqeva::assign::AssignmentContext;
use pqeva::metrics::{perturb, PerturbationConfig};
use pqeva::model::{builtin_example, parse_matrix_market, write_matrix_market, RobustnessWeights};
use pqeva::qep::Pencil;
use pqeva::robustopt::{cost, fd_gradient, gradient, optimize, OptimizerConfig};
use pqeva::{DMatrix, FeedbackKind};
use proptest::prelude::*;

fn ctx(name: &str) -> AssignmentContext {
    AssignmentContext::from_problem(&builtin_example(name).unwrap()).unwrap()
}

fn gamma(values: &[f64], shape: (usize, usize)) -> DMatrix<f64> {
    DMatrix::from_fn(shape.0, shape.1, |i, j| values[i + shape.0 * j])
}

fn kind(derivative: bool) -> FeedbackKind {
    if derivative {
        FeedbackKind::Derivative
    } else {
        FeedbackKind::State
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn assignment_leaves_rest_of_spectrum(
        which in 0usize..3,
        derivative in any::<bool>(),
        values in prop::collection::vec(-1.0f64..1.0, 20),
    ) {
        let c = ctx(["exp1_random5", "exp3_fourdof", "exp4_absorber"][which]);
        let kind = kind(derivative);
        let g = gamma(&values, c.gamma_shape());
        if let Ok(a) = c.assign(kind, &g) {
            prop_assume!(a.z_rcond > 1e-8);
            let report = c.verify(&a.gains).unwrap();
            prop_assert!(report.max_error() <= 1e-6, "error {}", report.max_error());
        }
    }

    #[test]
    fn gradient_agrees_with_central_differences(
        derivative in any::<bool>(),
        values in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let c = ctx("exp3_fourdof");
        let kind = kind(derivative);
        let w = RobustnessWeights::default();
        let g = gamma(&values, c.gamma_shape());
        prop_assume!(c.assign(kind, &g).is_ok_and(|a| a.z_rcond > 1e-4));
        let an = gradient(&c, &g, w, kind).unwrap();
        let fd = fd_gradient(&c, &g, w, kind, 1e-6).unwrap();
        prop_assert!((&an - &fd).amax() <= 1e-5 * fd.amax().max(1.0), "{an} vs {fd}");
    }

    #[test]
    fn optimizer_never_increases_cost(values in prop::collection::vec(-1.0f64..1.0, 4)) {
        let c = ctx("exp4_absorber");
        let kind = FeedbackKind::State;
        let w = RobustnessWeights::default();
        let g = gamma(&values, c.gamma_shape());
        prop_assume!(cost(&c, &g, w, kind).is_ok());
        let config = OptimizerConfig { maxiter: 40, ..Default::default() };
        if let Ok(run) = optimize(&c, &g, w, kind, &config) {
            prop_assert!(run.cost_history.windows(2).all(|p| p[1] <= p[0]));
            prop_assert!(run.value() >= 0.0);
        }
    }

    #[test]
    fn matrix_market_round_trip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1e6..1e6) * 10f64.powi(rng.gen_range(-12..4)));
        prop_assert_eq!(parse_matrix_market(&write_matrix_market(&a)).unwrap(), a);
    }

    #[test]
    fn perturbation_has_requested_size(index in 0usize..1000, seed in any::<u64>(), rho in 1e-6f64..1e-1) {
        let p = builtin_example("exp1_random5").unwrap();
        let cfg = PerturbationConfig { rho, seed, ..Default::default() };
        let q = perturb(&p.system, &cfg, index);
        for (a, b) in [
            (p.system.mass(), q.mass()),
            (p.system.damping(), q.damping()),
            (p.system.stiffness(), q.stiffness()),
        ] {
            let d = b - a;
            prop_assert!(((d.norm() / a.norm()) / rho - 1.0).abs() < 1e-9);
            prop_assert!((&d - d.transpose()).amax() <= 1e-15 * a.norm());
        }
        prop_assert_eq!(q.input(), p.system.input());
    }

    #[test]
    fn qep_spectrum_is_conjugate_closed(which in 0usize..4) {
        let name = pqeva::model::BUILTIN_NAMES[which];
        let p = builtin_example(name).unwrap();
        let vals = Pencil::open_loop(&p.system).eigenvalues().unwrap();
        prop_assert_eq!(vals.len(), 2 * p.system.dof());
        for v in &vals {
            prop_assert!(vals.iter().any(|w| (w - v.conj()).norm() <= 1e-12 * v.norm().max(1.0)));
        }
    }
}
