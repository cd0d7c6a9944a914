//! Acceptance suite: every criterion as one test printing one pass/fail
//! line (run with `cargo test --test acceptance -- --nocapture` to see all
//! lines even on success).

use cramer_bridge::fiber::{self, GridSpec, TestFunction};
use cramer_bridge::lp;
use cramer_bridge::maxent::{log_partition, solve_dual, SolveStatus, SolverOptions};
use cramer_bridge::oracles::stream_rng;
use cramer_bridge::sdp;
use cramer_bridge::verify::{self, run_suite, Suite};
use nalgebra::DVector;

fn criterion(name: &str, passed: bool, detail: &str) {
    println!("{} {name}: {detail}", if passed { "PASS" } else { "FAIL" });
    assert!(passed, "{name}: {detail}");
}

/// LP barrier/perspective identity across independent solvers on the
/// two-variable instance and five seeded random instances.
#[test]
fn criterion_1_lp_identity() {
    let eps_list = [1.0, 0.3, 0.1, 0.03, 0.01];
    let mut rng = stream_rng(20240, 0);
    let mut instances = vec![verify::e1_instance()];
    for &(d, m) in &[(3usize, 1usize), (4, 2), (5, 3), (4, 1), (5, 2)] {
        instances.push(verify::random_lp_instance(&mut rng, d, m));
    }
    let mut worst = 0.0_f64;
    for inst in &instances {
        let rows = lp::barrier_identity_report(inst, &eps_list).expect("identity report");
        for row in rows {
            worst = worst.max(row.residual);
        }
    }
    criterion(
        "criterion-1 lp-identity",
        worst <= 1e-8,
        &format!("max residual {worst:.3e} over 6 instances x 5 eps (tol 1e-8)"),
    );
}

/// Barrier dual values converge to the vertex-oracle LP value inside the
/// central-path duality gap, and the primal certificate holds.
#[test]
fn criterion_2_barrier_convergence() {
    let mut rng = stream_rng(20240, 0);
    let mut instances = vec![verify::e1_instance()];
    for &(d, m) in &[(3usize, 1usize), (4, 2), (5, 3), (4, 1), (5, 2)] {
        instances.push(verify::random_lp_instance(&mut rng, d, m));
    }
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_cert = 0.0_f64;
    for inst in &instances {
        let (tau, _) = lp::lp_vertex_oracle(inst).expect("vertex oracle");
        let d = inst.c.len() as f64;
        for eps in [1.0, 0.1, 0.01, 1e-4] {
            let (lam, _) = lp::barrier_dual_solve(inst, eps).expect("barrier solve");
            let gap = (lam.dot(&inst.y) - tau).abs();
            worst_gap = worst_gap.max(gap - (eps * d + 1e-8));
            let x = lp::central_path_primal(inst, &lam, eps);
            worst_cert = worst_cert
                .max((&inst.a * &x - &inst.y).amax())
                .max((inst.c.dot(&x) - lam.dot(&inst.y) - eps * d).abs());
        }
    }
    criterion(
        "criterion-2 barrier-to-lp",
        worst_gap <= 0.0 && worst_cert <= 1e-8,
        &format!("worst gap excess {worst_gap:.3e} (<= 0), certificate deviation {worst_cert:.3e} (tol 1e-8)"),
    );
}

/// Three-way fiber density agreement at y = 1 plus histogram coverage and
/// unit mass.
#[test]
fn criterion_3_three_way_density() {
    let inst = verify::e1_instance();
    let catalog = lp::enumerate_feasible_bases(&inst).expect("catalog");
    let bv = lp::brion_vergne_density(&catalog, &inst).expect("vertex formula");
    let quad = fiber::fiber_density_quadrature(&inst.a, &inst.c, &inst.y).expect("quadrature");
    let closed = 2.0 * ((-1.0_f64).exp() - (-2.0_f64).exp());
    let rel_routes = (bv - quad).abs() / quad;
    let rel_closed = (quad - closed).abs() / closed;

    let problem = inst.maxent_problem().expect("problem");
    let grid = GridSpec::new(vec![0.0], vec![6.0], vec![60]).expect("grid");
    let hist = fiber::pushforward_histogram(&problem, 1_000_000, &grid, 42).expect("histogram");
    let ses = hist.std_errors.as_ref().expect("histogram std errors");
    let (nodes, weights) = cramer_bridge::numeric::gauss_legendre(4);
    let width = 0.1;
    let mut agreeing = 0usize;
    for (b, (hv, se)) in hist.values.iter().zip(ses).enumerate() {
        let lo = b as f64 * width;
        let mut avg = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            let y = lo + 0.5 * width + 0.5 * width * x;
            avg += w
                * 0.5
                * fiber::fiber_density_quadrature(&inst.a, &inst.c, &DVector::from_element(1, y))
                    .expect("quadrature");
        }
        if (avg - hv).abs() <= 3.0 * se.max(1e-300) {
            agreeing += 1;
        }
    }
    let mass = fiber::integrate_density_weighted(&inst.a, &inst.c, &TestFunction::One, 1e-12)
        .expect("mass quadrature");

    let passed =
        rel_routes <= 1e-8 && rel_closed <= 1e-8 && agreeing >= 57 && (mass - 1.0).abs() <= 1e-6;
    criterion(
        "criterion-3 three-way-density",
        passed,
        &format!(
            "v(1): vertex-vs-quadrature rel {rel_routes:.3e}, vs closed form rel {rel_closed:.3e} (tol 1e-8); histogram bins agreeing {agreeing}/60 (need 57); |mass-1| {:.3e} (tol 1e-6)",
            (mass - 1.0).abs()
        ),
    );
}

/// The numerical Laplace transform of the quadrature density matches the
/// closed-form partition function, and the dual value equals the Cramer
/// transform of the density computed through that independent route.
#[test]
fn criterion_4_laplace_and_cramer() {
    let inst = verify::e1_instance();
    let problem = inst.maxent_problem().expect("problem");

    let mut worst_z = 0.0_f64;
    for k in 0..20 {
        let lam = -1.0 + 1.9 * (k as f64 + 0.5) / 20.0;
        let numeric = fiber::integrate_density_weighted(
            &inst.a,
            &inst.c,
            &TestFunction::Exponential(DVector::from_element(1, lam)),
            1e-12,
        )
        .expect("Laplace quadrature");
        let closed = log_partition(&problem, &DVector::from_element(1, lam))
            .expect("closed form")
            .exp();
        worst_z = worst_z.max((numeric - closed).abs() / closed);
    }

    // Cramer transform of the quadrature density by ternary search on the
    // concave dual profile, against the Newton dual solver.
    let log_laplace = |lam: f64| -> f64 {
        fiber::integrate_density_weighted(
            &inst.a,
            &inst.c,
            &TestFunction::Exponential(DVector::from_element(1, lam)),
            1e-12,
        )
        .expect("Laplace quadrature")
        .ln()
    };
    let mut worst_theta = 0.0_f64;
    for y in [0.5, 1.0, 1.5, 3.0] {
        let (mut lo, mut hi) = (-25.0_f64, 0.999_f64);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            let g1 = y * m1 - log_laplace(m1);
            let g2 = y * m2 - log_laplace(m2);
            if g1 < g2 {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let lam = 0.5 * (lo + hi);
        let theta_cramer = y * lam - log_laplace(lam);
        let scaled = problem
            .with_target(DVector::from_element(1, y))
            .expect("target");
        let dual = solve_dual(&scaled, &SolverOptions::default()).expect("dual solve");
        assert_eq!(dual.status, SolveStatus::Converged);
        worst_theta = worst_theta.max((theta_cramer - dual.theta).abs());
    }

    criterion(
        "criterion-4 laplace-cramer",
        worst_z <= 1e-6 && worst_theta <= 1e-8,
        &format!(
            "max relative Laplace gap {worst_z:.3e} on 20 lambdas (tol 1e-6); max Theta route gap {worst_theta:.3e} at 4 targets (tol 1e-8)"
        ),
    );
}

/// PSD-cone constant from the Monte-Carlo oracle and the SDP identity with
/// its closed-form epsilon rate.
#[test]
fn criterion_5_sdp_constant_and_barrier() {
    let id2 = nalgebra::DMatrix::<f64>::identity(2, 2);
    let (est, se) = sdp::mc_psd_integral(&id2, 10_000_000, 42).expect("cone integral");
    let truth = std::f64::consts::PI / 2.0;
    let z_score = (est - truth).abs() / se;

    let inst = verify::e2_instance();
    let rows = sdp::barrier_identity_report(&inst, &[1.0, 0.1, 0.01]).expect("identity report");
    let worst_residual = rows.iter().map(|r| r.residual).fold(0.0_f64, f64::max);

    let c2 = sdp::multivariate_gamma_constant(2);
    let mut worst_rate = f64::NEG_INFINITY;
    for eps in [1.0, 0.1, 0.01] {
        let (_, val) = sdp::sdp_barrier_dual_solve(&inst, eps).expect("barrier solve");
        let bound = 3.0 * eps + eps * c2 + 3.0 * eps * eps.ln().abs();
        worst_rate = worst_rate.max((val - 3.0).abs() - bound);
    }

    criterion(
        "criterion-5 sdp-constant-and-barrier",
        z_score <= 3.0 && worst_residual <= 1e-8 && worst_rate <= 1e-10,
        &format!(
            "cone integral z-score {z_score:.2} at 1e7 samples (need <= 3); identity residual {worst_residual:.3e} (tol 1e-8); eps-rate excess {worst_rate:.3e} (<= 0)"
        ),
    );
}

/// Finite-difference suites and the entropy sign/zero laws, via the named
/// verification checks at their stated tolerances.
#[test]
fn criterion_6_solver_health() {
    let core = run_suite(Suite::Core, 42).expect("core suite");
    let sdp_suite = run_suite(Suite::Sdp, 42).expect("sdp suite");
    let mut failed: Vec<String> = Vec::new();
    for check in core.iter().chain(&sdp_suite) {
        if !check.passed {
            failed.push(check.name.clone());
        }
    }
    criterion(
        "criterion-6 solver-health",
        failed.is_empty(),
        &format!(
            "{} named invariants (gradient/Hessian FD, Theta >= 0, Theta(E_P[h]) = 0) all pass{}",
            core.len() + sdp_suite.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!("; failed: {failed:?}")
            }
        ),
    );
}

/// Partial-fraction partition function against the closed form, m = 1.
#[test]
fn criterion_7_partial_fraction() {
    let mut rng = stream_rng(20240, 7);
    let mut instances = vec![verify::e1_instance()];
    for &d in &[3usize, 5, 6] {
        instances.push(verify::random_lp_m1_separated(&mut rng, d));
    }
    let mut worst = 0.0_f64;
    for inst in &instances {
        let catalog = lp::enumerate_feasible_bases(inst).expect("catalog");
        let min_pole = catalog
            .bases
            .iter()
            .map(|b| b.pi_sigma[0])
            .fold(f64::INFINITY, f64::min);
        let problem = inst.maxent_problem().expect("problem");
        for k in 0..50 {
            let lam = min_pole - 3.0 + 2.95 * (k as f64 + 0.5) / 50.0;
            let lam_v = DVector::from_element(1, lam);
            let pf = lp::partial_fraction_z(&catalog, inst, &lam_v).expect("expansion");
            let z = log_partition(&problem, &lam_v).expect("closed form").exp();
            worst = worst.max((pf - z).abs() / z);
        }
    }
    criterion(
        "criterion-7 partial-fraction",
        worst <= 1e-10,
        &format!("max relative gap {worst:.3e} on 50 lambdas x 4 instances (tol 1e-10)"),
    );
}

/// Byte-identical verification reports for a fixed seed.
#[test]
fn criterion_8_determinism() {
    let mut first = Vec::new();
    let mut second = Vec::new();
    let code1 = cramer_bridge::cli::run_verify("all", 42, &mut first).expect("verify run");
    let code2 = cramer_bridge::cli::run_verify("all", 42, &mut second).expect("verify run");
    criterion(
        "criterion-8 determinism",
        first == second && code1 == 0 && code2 == 0,
        &format!(
            "two verify-all runs at seed 42: byte-identical {} ({} bytes), both exit 0: {}",
            first == second,
            first.len(),
            code1 == 0 && code2 == 0
        ),
    );
}
