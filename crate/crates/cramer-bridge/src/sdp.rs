//! The canonical SDP `min {<A0, X> : <A_j, X> = y_j, X PSD}`, its log-det
//! barrier dual, and the PSD-cone integral underlying the barrier constant.
//!
//! Matrix inner product is `<A, B> = tr(A B)` and `dX` is Lebesgue measure
//! on the `d(d+1)/2` independent entries (off-diagonals counted once). Under
//! this convention `int_K exp(-<Z, X>) dX = exp(C_d) det(Z)^{-(d+1)/2}` with
//! `C_d = ln Gamma_d((d+1)/2)`, the log multivariate gamma.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::maxent::{Backend, MaxentProblem};
use crate::numeric::{cholesky_pd, cholesky_solve_mat, ln_det_pd, solve_spd, PD_PIVOT_TOL};
use crate::oracles::stream_rng;
use crate::report::SweepRow;

/// `C_d = ln Gamma_d((d+1)/2)`: the log of the PSD-cone integral
/// `int_K exp(-tr X) dX`.
///
/// `Gamma_d(a) = pi^{d(d-1)/4} prod_{j=1..d} Gamma(a + (1-j)/2)`.
pub fn multivariate_gamma_constant(d: usize) -> f64 {
    assert!(d >= 1, "dimension must be at least 1");
    let df = d as f64;
    let mut c = df * (df - 1.0) / 4.0 * std::f64::consts::PI.ln();
    for j in 1..=d {
        c += ln_gamma((df + 1.0) / 2.0 + (1.0 - j as f64) / 2.0);
    }
    c
}

/// Log-barrier of the PSD cone: `phi(Z) = C_d - ((d+1)/2) ln det Z`,
/// with gradient `-((d+1)/2) Z^{-1}` under the trace pairing.
pub fn psd_log_barrier(z: &DMatrix<f64>) -> Result<f64> {
    let d = z.nrows();
    if z.ncols() != d || d == 0 {
        return Err(Error::InvalidInput(
            "barrier argument must be square".into(),
        ));
    }
    let kappa = (d as f64 + 1.0) / 2.0;
    let ld = ln_det_pd(z).ok_or(Error::NotPositiveDefinite)?;
    Ok(multivariate_gamma_constant(d) - kappa * ld)
}

/// Jacobian factor `sqrt(det G)` of the linear moment map, with Gram matrix
/// `G_ik = tr(A_i A_k)`.
pub fn gram_j_h(constraints: &[DMatrix<f64>]) -> Result<f64> {
    let m = constraints.len();
    if m == 0 {
        return Err(Error::InvalidInput(
            "need at least one constraint matrix".into(),
        ));
    }
    let mut g = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for k in 0..m {
            g[(i, k)] = (&constraints[i] * &constraints[k]).trace();
        }
    }
    let det = g.determinant();
    if det <= 1e-12 {
        return Err(Error::DependentConstraints(det));
    }
    Ok(det.sqrt())
}

/// A normalized SDP instance: `A0` positive definite, independent `A_j`,
/// `log_s = -phi(A0)` making the reference measure a probability measure.
#[derive(Debug, Clone)]
pub struct SdpInstance {
    pub a0: DMatrix<f64>,
    pub constraints: Vec<DMatrix<f64>>,
    pub y: DVector<f64>,
    pub log_s: f64,
}

impl SdpInstance {
    pub fn new(a0: DMatrix<f64>, constraints: Vec<DMatrix<f64>>, y: DVector<f64>) -> Result<Self> {
        // Delegate the structural checks to the problem constructor.
        let _ = MaxentProblem::new(
            Backend::SdpCone {
                a0: a0.clone(),
                constraints: constraints.clone(),
            },
            y.clone(),
        )?;
        let log_s = -psd_log_barrier(&a0)?;
        Ok(Self {
            a0,
            constraints,
            y,
            log_s,
        })
    }

    pub fn order(&self) -> usize {
        self.a0.nrows()
    }

    pub fn kappa(&self) -> f64 {
        (self.order() as f64 + 1.0) / 2.0
    }

    pub fn maxent_problem(&self) -> Result<MaxentProblem> {
        MaxentProblem::new(
            Backend::SdpCone {
                a0: self.a0.clone(),
                constraints: self.constraints.clone(),
            },
            self.y.clone(),
        )
    }

    /// `S(lambda) = A0 - sum_j lambda_j A_j`.
    pub fn shifted(&self, lambda: &DVector<f64>) -> DMatrix<f64> {
        let mut s = self.a0.clone();
        for (j, aj) in self.constraints.iter().enumerate() {
            s -= aj * lambda[j];
        }
        s
    }
}

/// `ln Z(lambda) = ln s + phi(A0 - sum lambda_j A_j)`, the log Laplace
/// transform of the fiber density evaluated at `-lambda`.
pub fn sdp_log_z(inst: &SdpInstance, lambda: &DVector<f64>) -> Result<f64> {
    if lambda.len() != inst.constraints.len() {
        return Err(Error::InvalidInput("lambda has wrong length".into()));
    }
    let s = inst.shifted(lambda);
    match psd_log_barrier(&s) {
        Ok(phi) => Ok(inst.log_s + phi),
        Err(Error::NotPositiveDefinite) => Err(Error::DomainViolation(
            "A0 - sum lambda_j A_j is not positive definite".into(),
        )),
        Err(e) => Err(e),
    }
}

/// Newton maximization of `<lambda, y> - eps * phi(S(lambda))` from
/// `lambda = 0`, with an exact positive-definite line-search safeguard.
/// Returns the maximizer and the barrier value `tau*_eps(y)`.
pub fn sdp_barrier_dual_solve(inst: &SdpInstance, epsilon: f64) -> Result<(DVector<f64>, f64)> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let m = inst.constraints.len();
    let kappa = inst.kappa();
    let c_d = multivariate_gamma_constant(inst.order());
    let mut lambda = DVector::<f64>::zeros(m);
    let grad_tol = 1e-12 * (1.0 + inst.y.amax());

    let value = |s_ld: f64, lam: &DVector<f64>| -> f64 {
        lam.dot(&inst.y) - epsilon * (c_d - kappa * s_ld)
    };

    let mut s = inst.shifted(&lambda);
    let mut s_ld = ln_det_pd(&s).ok_or(Error::NotPositiveDefinite)?;
    for _ in 0..200 {
        let l = cholesky_pd(&s, PD_PIVOT_TOL).ok_or(Error::NotPositiveDefinite)?;
        let ms: Vec<DMatrix<f64>> = inst
            .constraints
            .iter()
            .map(|ai| cholesky_solve_mat(&l, ai))
            .collect();
        let grad = DVector::from_iterator(
            m,
            ms.iter()
                .zip(inst.y.iter())
                .map(|(mi, &yi)| yi - epsilon * kappa * mi.trace()),
        );
        if grad.amax() <= grad_tol {
            return Ok((lambda.clone(), value(s_ld, &lambda)));
        }
        let mut hess = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for k in i..m {
                let v = epsilon * kappa * (&ms[i] * &ms[k]).trace();
                hess[(i, k)] = v;
                hess[(k, i)] = v;
            }
        }
        let delta = solve_spd(&hess, &grad).ok_or(Error::Unbounded)?;

        // Exact step to the PD boundary along delta.
        let mut b = DMatrix::<f64>::zeros(inst.order(), inst.order());
        for (j, aj) in inst.constraints.iter().enumerate() {
            b += aj * delta[j];
        }
        let mut c_mat = b;
        crate::numeric::tri_lower_solve_mat(&l, &mut c_mat);
        let mut ct = c_mat.transpose();
        crate::numeric::tri_lower_solve_mat(&l, &mut ct);
        let sym = 0.5 * (&ct + ct.transpose());
        let eig = nalgebra::SymmetricEigen::new(sym);
        let lam_max = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut t: f64 = if lam_max > 0.0 {
            (0.95 / lam_max).min(1.0)
        } else {
            1.0
        };

        let f0 = value(s_ld, &lambda);
        let dir = grad.dot(&delta);
        // Below the value's floating-point resolution the sufficient-increase
        // test is noise; accept any positive-definite step instead.
        let below_resolution = dir <= 1e-14 * (1.0 + f0.abs());
        let mut accepted = false;
        while t > 1e-18 {
            let cand = &lambda + &delta * t;
            let cand_s = inst.shifted(&cand);
            if let Some(ld) = ln_det_pd(&cand_s) {
                let f = value(ld, &cand);
                if below_resolution || f >= f0 + 1e-4 * t * dir {
                    lambda = cand;
                    s = cand_s;
                    s_ld = ld;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Ok((lambda.clone(), value(s_ld, &lambda)));
        }
        if lambda.norm() > 1e8 {
            return Err(Error::Unbounded);
        }
    }
    Ok((lambda.clone(), value(s_ld, &lambda)))
}

/// Sweep of the identity `eps Theta(y/eps) + eps ln s = tau*_eps(y)`, the
/// two sides from independent solvers.
pub fn barrier_identity_report(inst: &SdpInstance, eps_list: &[f64]) -> Result<Vec<SweepRow>> {
    let problem = inst.maxent_problem()?;
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::InvalidInput(
                "sweep epsilons must be positive".into(),
            ));
        }
        let (_, tau_eps) = sdp_barrier_dual_solve(inst, eps)?;
        let eps_theta = crate::maxent::theta_and_perspective(&problem, &inst.y, eps)?;
        rows.push(SweepRow {
            epsilon: eps,
            tau_eps,
            eps_theta,
            residual: (eps_theta + eps * inst.log_s - tau_eps).abs(),
        });
    }
    Ok(rows)
}

/// Importance-sampling estimate of `int_K exp(-<Z, X>) dX` for `d <= 3`:
/// diagonal entries from exponential proposals with rates `Z_ii`,
/// off-diagonals uniform in the pairwise bound `|x_ij| <= sqrt(x_ii x_jj)`,
/// non-PSD draws rejected by weighting them zero. Eight seeded streams are
/// merged in index order, so the estimate is reproducible.
pub fn mc_psd_integral(z: &DMatrix<f64>, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    let d = z.nrows();
    if d == 0 || z.ncols() != d {
        return Err(Error::InvalidInput("Z must be square".into()));
    }
    if d > 3 {
        return Err(Error::DimensionUnsupported(d));
    }
    if cholesky_pd(z, PD_PIVOT_TOL).is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    if n_samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }

    let rates: Vec<f64> = (0..d).map(|i| z[(i, i)]).collect();
    let rate_product: f64 = rates.iter().product();
    let n_streams = 8u64;
    let per_stream = n_samples / n_streams as usize;
    let remainder = n_samples % n_streams as usize;

    // Compensated accumulation keeps the summation error well below the
    // Monte-Carlo noise even at 10^7 samples.
    let mut sum = 0.0;
    let mut sum_c = 0.0;
    let mut sum_sq = 0.0;
    let mut sum_sq_c = 0.0;
    let kahan_add = |acc: &mut f64, comp: &mut f64, v: f64| {
        let t = v - *comp;
        let next = *acc + t;
        *comp = (next - *acc) - t;
        *acc = next;
    };
    for stream in 0..n_streams {
        let count = per_stream + usize::from((stream as usize) < remainder);
        let mut rng = stream_rng(seed, stream);
        let mut x = DMatrix::<f64>::zeros(d, d);
        for _ in 0..count {
            // Diagonal: inverse-CDF exponentials.
            for i in 0..d {
                let u: f64 = rng.random();
                x[(i, i)] = -(-u).ln_1p() / rates[i];
            }
            // Off-diagonals: uniform in the pairwise PSD bound.
            let mut log_box = 0.0;
            let mut cross = 0.0;
            for i in 0..d {
                for j in (i + 1)..d {
                    let half = (x[(i, i)] * x[(j, j)]).sqrt();
                    let u: f64 = rng.random();
                    let v = (2.0 * u - 1.0) * half;
                    x[(i, j)] = v;
                    x[(j, i)] = v;
                    log_box += (2.0 * half).ln();
                    cross += z[(i, j)] * v;
                }
            }
            let w = if d == 1 || cholesky_pd(&x, 0.0).is_some() {
                (-2.0 * cross + log_box).exp() / rate_product
            } else {
                0.0
            };
            kahan_add(&mut sum, &mut sum_c, w);
            kahan_add(&mut sum_sq, &mut sum_sq_c, w * w);
        }
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok((mean, (var / n).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    pub(crate) fn e2() -> SdpInstance {
        SdpInstance::new(
            DMatrix::identity(2, 2),
            vec![DMatrix::identity(2, 2)],
            DVector::from_element(1, 3.0),
        )
        .unwrap()
    }

    #[test]
    fn gamma_constants() {
        assert_abs_diff_eq!(multivariate_gamma_constant(1), 0.0, epsilon = 1e-13);
        assert_relative_eq!(
            multivariate_gamma_constant(2),
            (std::f64::consts::PI / 2.0).ln(),
            epsilon = 1e-13
        );
        assert_relative_eq!(
            multivariate_gamma_constant(3),
            (std::f64::consts::PI.powi(2) / 2.0).ln(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn barrier_values() {
        let z1 = DMatrix::from_element(1, 1, 2.0);
        assert_relative_eq!(
            psd_log_barrier(&z1).unwrap(),
            -(2.0_f64.ln()),
            epsilon = 1e-14
        );
        let id2 = DMatrix::identity(2, 2);
        assert_relative_eq!(
            psd_log_barrier(&id2).unwrap(),
            multivariate_gamma_constant(2),
            epsilon = 1e-14
        );
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            psd_log_barrier(&indef),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn jacobian_factor() {
        let id2 = DMatrix::identity(2, 2);
        assert_relative_eq!(
            gram_j_h(std::slice::from_ref(&id2)).unwrap(),
            2.0_f64.sqrt(),
            epsilon = 1e-14
        );

        let e11 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let e22 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert_relative_eq!(gram_j_h(&[e11.clone(), e22]).unwrap(), 1.0, epsilon = 1e-14);

        assert!(matches!(
            gram_j_h(&[e11.clone(), 2.0 * e11]),
            Err(Error::DependentConstraints(_))
        ));
    }

    #[test]
    fn log_partition_values() {
        let inst = e2();
        assert_abs_diff_eq!(
            sdp_log_z(&inst, &DVector::from_element(1, 0.0)).unwrap(),
            0.0,
            epsilon = 1e-13
        );
        assert_relative_eq!(
            sdp_log_z(&inst, &DVector::from_element(1, -0.5)).unwrap(),
            -3.0 * 1.5_f64.ln(),
            epsilon = 1e-12
        );
        assert!(matches!(
            sdp_log_z(&inst, &DVector::from_element(1, 2.0)),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn barrier_dual_closed_forms() {
        let inst = e2();
        let c2 = multivariate_gamma_constant(2);

        // y = 3, eps = 1: stationarity 3 = 3/(1 - lambda) gives lambda = 0.
        let (lam, val) = sdp_barrier_dual_solve(&inst, 1.0).unwrap();
        assert_abs_diff_eq!(lam[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(val, -c2, epsilon = 1e-10);

        // y = 3, eps = 0.01: lambda = 0.99.
        let (lam, val) = sdp_barrier_dual_solve(&inst, 0.01).unwrap();
        assert_abs_diff_eq!(lam[0], 0.99, epsilon = 1e-9);
        let expect = 2.97 - 0.01 * c2 + 0.03 * 0.01_f64.ln();
        assert_abs_diff_eq!(val, expect, epsilon = 1e-9);
        assert_abs_diff_eq!(val, 2.827329, epsilon = 1e-6);

        // y = 2, eps = 1: lambda = -1/2.
        let inst2 = SdpInstance::new(
            inst.a0.clone(),
            inst.constraints.clone(),
            DVector::from_element(1, 2.0),
        )
        .unwrap();
        let (lam, val) = sdp_barrier_dual_solve(&inst2, 1.0).unwrap();
        assert_abs_diff_eq!(lam[0], -0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(val, -1.0 - c2 + 3.0 * 1.5_f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn identity_report_on_e2() {
        let inst = e2();
        let rows = barrier_identity_report(&inst, &[1.0, 0.1, 0.01]).unwrap();
        for row in &rows {
            assert!(
                row.residual <= 1e-8,
                "eps {}: residual {}",
                row.epsilon,
                row.residual
            );
        }
        // Theta(3) = 0 since 3 = E_P[tr X].
        assert_abs_diff_eq!(rows[0].eps_theta, 0.0, epsilon = 1e-10);

        let inst2 = SdpInstance::new(
            inst.a0.clone(),
            inst.constraints.clone(),
            DVector::from_element(1, 2.0),
        )
        .unwrap();
        let rows2 = barrier_identity_report(&inst2, &[1.0]).unwrap();
        assert!(rows2[0].residual <= 1e-8);
        assert_abs_diff_eq!(
            rows2[0].eps_theta,
            -1.0 + 3.0 * 1.5_f64.ln(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn barrier_value_converges_to_primal_optimum() {
        // On E2 with y = 3 the SDP optimum is 3; closed-form epsilon rate.
        let inst = e2();
        let c2 = multivariate_gamma_constant(2);
        for eps in [0.1, 0.01, 0.001] {
            let (_, val) = sdp_barrier_dual_solve(&inst, eps).unwrap();
            let bound = 3.0 * eps + eps * c2 + 3.0 * eps * eps.ln().abs();
            assert!((val - 3.0).abs() <= bound + 1e-10, "eps {eps}: {val}");
        }
    }

    #[test]
    fn cone_integral_exact_in_dimension_one() {
        let z = DMatrix::from_element(1, 1, 1.0);
        let (est, se) = mc_psd_integral(&z, 100_000, 1).unwrap();
        assert_abs_diff_eq!(est, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(se, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cone_integral_matches_barrier_constant() {
        let id2 = DMatrix::identity(2, 2);
        let (est, se) = mc_psd_integral(&id2, 400_000, 1).unwrap();
        let truth = std::f64::consts::PI / 2.0;
        assert!((est - truth).abs() <= 3.0 * se, "est {est} se {se}");

        let diag = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let (est, se) = mc_psd_integral(&diag, 400_000, 2).unwrap();
        let truth = (std::f64::consts::PI / 2.0) * 2.0_f64.powf(-1.5);
        assert!((est - truth).abs() <= 3.0 * se, "est {est} se {se}");
        assert_abs_diff_eq!(truth, 0.555360, epsilon = 1e-6);

        // d = 3 cross-checks C_3 with rejection in play.
        let id3 = DMatrix::identity(3, 3);
        let (est, se) = mc_psd_integral(&id3, 400_000, 3).unwrap();
        let truth = multivariate_gamma_constant(3).exp();
        assert!(
            (est - truth).abs() <= 3.0 * se,
            "est {est} truth {truth} se {se}"
        );
    }

    #[test]
    fn cone_integral_guards() {
        let id4 = DMatrix::identity(4, 4);
        assert!(matches!(
            mc_psd_integral(&id4, 10, 1),
            Err(Error::DimensionUnsupported(4))
        ));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            mc_psd_integral(&indef, 10, 1),
            Err(Error::NotPositiveDefinite)
        ));
    }
}
