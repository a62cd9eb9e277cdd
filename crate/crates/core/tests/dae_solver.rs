use claycalc::dae::*;
use claycalc::scalar::Scalar;
use claycalc::Error;

/// x' = −k x, 0 = y − x
struct Linear {
    k: f64,
    mask: Vec<bool>,
}

impl Linear {
    fn new(k: f64) -> Self {
        Linear { k, mask: vec![true, false] }
    }
}

impl DaeSystem for Linear {
    fn n(&self) -> usize {
        2
    }
    fn differential(&self) -> &[bool] {
        &self.mask
    }
    fn residual<S: Scalar>(&self, z: &[S], out: &mut [S]) {
        out[0] = -z[0] * self.k;
        out[1] = z[1] - z[0];
    }
}

/// x1' = −x1 + y², x2' = −2 x2, 0 = y³ + y − x1 − x2 (nonlinear algebraic part)
struct Nonlinear {
    mask: Vec<bool>,
}

impl DaeSystem for Nonlinear {
    fn n(&self) -> usize {
        3
    }
    fn differential(&self) -> &[bool] {
        &self.mask
    }
    fn residual<S: Scalar>(&self, z: &[S], out: &mut [S]) {
        out[0] = -z[0] + z[2] * z[2];
        out[1] = z[1] * -2.0;
        out[2] = z[2] * z[2] * z[2] + z[2] - z[0] - z[1];
    }
    fn admissible(&self, z: &[f64]) -> bool {
        z[0] > -1e3
    }
}

fn fixed_run(method: Method, h: f64) -> f64 {
    let sys = Linear::new(1.0);
    let cfg = SolverConfig { method, ..SolverConfig::default() };
    let engine = JacobianEngine::new(&sys, &[1.0, 1.0], cfg.jacobian);
    let mut integ = Integrator::new(&sys, engine, 0.0, vec![1.0, 1.0], cfg);
    let steps = (1.0 / h).round() as usize;
    for _ in 0..steps {
        integ.step_fixed(h).unwrap();
    }
    (integ.z[0] - (-1.0f64).exp()).abs()
}

fn observed_orders(method: Method) -> Vec<f64> {
    let hs = [0.1, 0.05, 0.025, 0.0125];
    let errs: Vec<f64> = hs.iter().map(|h| fixed_run(method, *h)).collect();
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn implicit_euler_single_step_closed_form() {
    let sys = Linear::new(1.0);
    let cfg = SolverConfig { method: Method::ImplicitEuler, ..SolverConfig::default() };
    let engine = JacobianEngine::new(&sys, &[2.0, 2.0], cfg.jacobian);
    let mut integ = Integrator::new(&sys, engine, 0.0, vec![2.0, 2.0], cfg);
    integ.step_fixed(0.3).unwrap();
    assert!((integ.z[0] - 2.0 / 1.3).abs() < 1e-13);
    assert!((integ.z[1] - integ.z[0]).abs() < 1e-13);
}

#[test]
fn fixed_point_stays_put() {
    let sys = Linear::new(1.0);
    let traj = integrate(&sys, vec![0.0, 0.0], 0.0, 5.0, &[5.0], &SolverConfig::default()).unwrap();
    assert_eq!(traj.z.last().unwrap(), &vec![0.0, 0.0]);
}

#[test]
fn convergence_orders() {
    for (method, expect) in [(Method::ImplicitEuler, 1.0), (Method::Bdf2, 2.0)] {
        let orders = observed_orders(method);
        for p in &orders {
            assert!((p - expect).abs() <= 0.2, "{method}: observed orders {orders:?}");
        }
    }
}

#[test]
fn adaptive_run_matches_analytic_solution() {
    let sys = Linear::new(3.0);
    // first-order global error accumulates over many more steps
    for (method, tol) in [(Method::ImplicitEuler, 2e-3), (Method::Bdf2, 1e-4)] {
        let cfg = SolverConfig { method, rel_tol: 1e-7, abs_tol: 1e-9, ..SolverConfig::default() };
        let samples = [0.25, 0.5, 1.0];
        let traj = integrate(&sys, vec![1.0, 1.0], 0.0, 1.0, &samples, &cfg).unwrap();
        assert_eq!(traj.t, samples.to_vec());
        for (t, z) in traj.t.iter().zip(&traj.z) {
            let exact = (-3.0 * t).exp();
            assert!((z[0] - exact).abs() < tol * exact, "{method} t={t}: {} vs {exact}", z[0]);
            assert!((z[1] - z[0]).abs() <= 1e-9);
        }
    }
}

#[test]
fn consistent_init_behaviour() {
    let sys = Nonlinear { mask: vec![true, true, false] };
    let cfg = SolverConfig::default();
    // y³ + y = 2 has the root y = 1
    let mut z = vec![1.5, 0.5, 1.0];
    assert_eq!(consistent_init_simple(&sys, &mut z, &cfg).unwrap(), 0);
    assert_eq!(z, vec![1.5, 0.5, 1.0]);
    let mut z = vec![1.5, 0.5, 2.0];
    let it = consistent_init_simple(&sys, &mut z, &cfg).unwrap();
    assert!(it <= 6, "{it} iterations");
    assert!((z[2] - 1.0).abs() < 1e-9);
    assert_eq!(&z[..2], &[1.5, 0.5]);
    let mut bad = vec![-5e3, 0.0, 1.0];
    assert!(matches!(consistent_init_simple(&sys, &mut bad, &cfg), Err(Error::Input(_))));
}

#[test]
fn analytic_jacobian_matches_finite_differences() {
    let sys = Nonlinear { mask: vec![true, true, false] };
    let z = [0.7, -0.2, 1.3];
    let engine = JacobianEngine::new(&sys, &z, JacobianMode::Analytic);
    assert_eq!(engine.pattern.nnz(), 6);
    let check = jacobian_check(&sys, &engine, &z);
    assert!(check.passed(1e-8), "{check:?}");
    let fd = forward_difference(&sys, &z);
    let an = engine.analytic(&sys, &z);
    assert!((fd - an).amax() < 1e-6);
}

#[test]
fn corrupted_jacobian_is_reported() {
    let sys = Nonlinear { mask: vec![true, true, false] };
    let z = [0.7, -0.2, 1.3];
    let mut engine = JacobianEngine::new(&sys, &z, JacobianMode::Analytic);
    engine.fault = Some((2, 0, 1e-3));
    let check = jacobian_check(&sys, &engine, &z);
    assert!(!check.passed(1e-5));
    assert_eq!((check.worst_row, check.worst_col), (2, 0));
    let err = check.into_result(&sys, 1e-5).unwrap_err().to_string();
    assert!(err.contains("z[2]") && err.contains("z[0]"), "{err}");
}

#[test]
fn steady_state_solve() {
    let sys = Nonlinear { mask: vec![true, true, false] };
    let cfg = SolverConfig::default();
    // steady state: x2 = 0, x1 = y², y³ + y − y² = 0 → y = 0
    let (z, _) = steady_state(&sys, vec![0.3, 0.1, 0.2], &cfg, 1e-10).unwrap();
    assert!(z.iter().all(|v| v.abs() < 1e-8), "{z:?}");
    let (_, it) = steady_state(&sys, vec![0.0, 0.0, 0.0], &cfg, 1e-10).unwrap();
    assert_eq!(it, 0);
}

struct Switched {
    u: f64,
    mask: Vec<bool>,
}

impl DaeSystem for Switched {
    fn n(&self) -> usize {
        2
    }
    fn differential(&self) -> &[bool] {
        &self.mask
    }
    fn residual<S: Scalar>(&self, z: &[S], out: &mut [S]) {
        out[0] = -z[0] + self.u;
        out[1] = z[1] - z[0] * 2.0 - self.u;
    }
}

impl Piecewise for Switched {
    fn breakpoints(&self) -> Vec<f64> {
        vec![1.0]
    }
    fn activate(&mut self, t: f64) {
        self.u = if t < 1.0 { 0.0 } else { 1.0 };
    }
}

#[test]
fn input_step_reinitializes_algebraic_variables() {
    let mut sys = Switched { u: 0.0, mask: vec![true, false] };
    let cfg = SolverConfig::default();
    let samples: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
    let traj = simulate(&mut sys, vec![1.0, 2.0], 0.0, 2.0, &samples, &cfg).unwrap();
    assert_eq!(traj.t.len(), samples.len());
    for (t, z) in traj.t.iter().zip(&traj.z) {
        let x = if *t <= 1.0 { (-t).exp() } else { 1.0 + ((-1.0f64).exp() - 1.0) * (-(t - 1.0)).exp() };
        assert!((z[0] - x).abs() < 1e-4, "t={t}");
        let u = if *t < 1.0 { 0.0 } else { 1.0 };
        if (*t - 1.0).abs() > 1e-9 {
            assert!((z[1] - 2.0 * z[0] - u).abs() < 1e-9);
        }
    }
}
