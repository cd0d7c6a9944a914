//! The canonical LP `min {<c, x> : A x = y, x >= 0}`, its log-barrier dual,
//! exhaustive feasible-basis machinery, and the Brion-Vergne vertex formula
//! for the fiber density.
//!
//! Sign conventions are fixed by the quadrature oracle: the vertex formula
//! is evaluated with `exp(-<pi_sigma, y>)` and carries the normalization
//! factor `s = prod_j c_j` of the reference measure.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::maxent::{Backend, MaxentProblem};
use crate::report::SweepRow;

/// Combinatorial budget for exhaustive basis enumeration.
const BASIS_BUDGET: u128 = 1_000_000;
/// Feasibility slack for basic solutions.
const FEAS_TOL: f64 = 1e-12;
/// Basic variables inside `[-1e-12, 1e-9]` mark the polytope degenerate.
const DEGENERATE_TOL: f64 = 1e-9;

/// A normalized LP instance: `c > 0` componentwise, `s = prod c_j`.
#[derive(Debug, Clone)]
pub struct LpInstance {
    pub a: DMatrix<f64>,
    pub c: DVector<f64>,
    pub y: DVector<f64>,
    /// Normalization constant of the reference measure, `prod_j c_j`.
    pub s: f64,
    /// Objective shift `<lambda0, y>` recorded when costs were translated.
    pub objective_shift: f64,
}

impl LpInstance {
    pub fn dims(&self) -> (usize, usize) {
        (self.a.nrows(), self.a.ncols())
    }

    pub fn log_s(&self) -> f64 {
        self.c.iter().map(|&cj| cj.ln()).sum()
    }

    /// The max-entropy problem sharing this instance's reference measure.
    pub fn maxent_problem(&self) -> Result<MaxentProblem> {
        MaxentProblem::new(
            Backend::LpOrthant {
                a: self.a.clone(),
                c: self.c.clone(),
            },
            self.y.clone(),
        )
    }
}

/// Builds a normalized instance. Costs with nonpositive entries are
/// translated by a strictly interior dual point: the one supplied, or one
/// found by subgradient descent on `f(lambda) = max_j (A^T lambda - c)_j`
/// (500 iterations, step `1/k`).
pub fn normalize_instance(
    a: &DMatrix<f64>,
    c: &DVector<f64>,
    y: &DVector<f64>,
    lambda0: Option<&DVector<f64>>,
) -> Result<LpInstance> {
    let (m, d) = (a.nrows(), a.ncols());
    if c.len() != d || y.len() != m {
        return Err(Error::InvalidInput("inconsistent LP dimensions".into()));
    }
    let rank = {
        let svd = a.clone().svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        svd.singular_values
            .iter()
            .filter(|&&s| s > 1e-10 * smax.max(1e-300))
            .count()
    };
    if rank < m {
        return Err(Error::RankDeficient { rank, expected: m });
    }

    if c.iter().all(|&cj| cj > 0.0) {
        return Ok(LpInstance {
            a: a.clone(),
            c: c.clone(),
            y: y.clone(),
            s: c.iter().product(),
            objective_shift: 0.0,
        });
    }

    let lam = match lambda0 {
        Some(l) => {
            if l.len() != m {
                return Err(Error::InvalidInput("lambda0 has wrong length".into()));
            }
            l.clone()
        }
        None => search_interior_dual(a, c).ok_or(Error::NoInteriorDual)?,
    };
    let shifted = c - a.transpose() * &lam;
    if shifted.iter().any(|&v| v <= 0.0) {
        return Err(Error::NoInteriorDual);
    }
    Ok(LpInstance {
        a: a.clone(),
        c: shifted.clone(),
        y: y.clone(),
        s: shifted.iter().product(),
        objective_shift: lam.dot(y),
    })
}

fn search_interior_dual(a: &DMatrix<f64>, c: &DVector<f64>) -> Option<DVector<f64>> {
    let m = a.nrows();
    let mut lam = DVector::<f64>::zeros(m);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for k in 1..=500 {
        let slack = c - a.transpose() * &lam;
        let (jmax, fval) = slack
            .iter()
            .enumerate()
            .map(|(j, &s)| (j, -s))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())?;
        if best.as_ref().is_none_or(|(b, _)| fval < *b) {
            best = Some((fval, lam.clone()));
        }
        let g = a.column(jmax).into_owned();
        let gn = g.norm();
        if gn == 0.0 {
            break;
        }
        lam -= g * (1.0 / (k as f64 * gn));
    }
    // Evaluate the final iterate as well.
    let slack = c - a.transpose() * &lam;
    let fval = slack.iter().map(|&s| -s).fold(f64::NEG_INFINITY, f64::max);
    if best.as_ref().is_none_or(|(b, _)| fval < *b) {
        best = Some((fval, lam));
    }
    best.and_then(|(f, l)| if f < 0.0 { Some(l) } else { None })
}

/// Newton maximization of the log-barrier dual
/// `<lambda, y> + eps sum_j ln (c - A^T lambda)_j` from `lambda = 0`.
/// Returns the maximizer and the barrier value `tau_eps(y)`.
pub fn barrier_dual_solve(inst: &LpInstance, epsilon: f64) -> Result<(DVector<f64>, f64)> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let (m, d) = inst.dims();
    let at = inst.a.transpose();
    let mut lambda = DVector::<f64>::zeros(m);
    let mut slack = &inst.c - &at * &lambda;
    let value = |lam: &DVector<f64>, sl: &DVector<f64>| -> f64 {
        lam.dot(&inst.y) + epsilon * sl.iter().map(|&v| v.ln()).sum::<f64>()
    };
    let grad_tol = 1e-12 * (1.0 + inst.y.amax());

    for _ in 0..200 {
        let mut grad = inst.y.clone();
        let mut hess = DMatrix::<f64>::zeros(m, m);
        for j in 0..d {
            let u = 1.0 / slack[j];
            let u2 = u * u;
            for i in 0..m {
                grad[i] -= epsilon * inst.a[(i, j)] * u;
                for k in 0..m {
                    hess[(i, k)] += epsilon * inst.a[(i, j)] * inst.a[(k, j)] * u2;
                }
            }
        }
        if grad.amax() <= grad_tol {
            return Ok((lambda.clone(), value(&lambda, &slack)));
        }
        let delta = crate::numeric::solve_spd(&hess, &grad).ok_or(Error::Unbounded)?;
        let ds = &at * &delta;
        let mut t: f64 = 1.0;
        for j in 0..d {
            if ds[j] > 0.0 {
                t = t.min(0.95 * slack[j] / ds[j]);
            }
        }
        let f0 = value(&lambda, &slack);
        let dir = grad.dot(&delta);
        // Below the value's floating-point resolution the sufficient-increase
        // test is noise; accept any interior step instead.
        let below_resolution = dir <= 1e-14 * (1.0 + f0.abs());
        let mut accepted = false;
        while t > 1e-18 {
            let cand = &lambda + &delta * t;
            let cand_slack = &inst.c - &at * &cand;
            if cand_slack.iter().all(|&v| v > 0.0) {
                let f = value(&cand, &cand_slack);
                if below_resolution || f >= f0 + 1e-4 * t * dir {
                    lambda = cand;
                    slack = cand_slack;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return Ok((lambda.clone(), value(&lambda, &slack)));
        }
        if lambda.norm() > 1e8 {
            return Err(Error::Unbounded);
        }
    }
    Ok((lambda.clone(), value(&lambda, &slack)))
}

/// Primal point reconstructed from the barrier maximizer,
/// `x(eps)_j = eps / (c - A^T lambda)_j`. On the central path it satisfies
/// `A x = y` and `<c, x> - <lambda, y> = eps * d`.
pub fn central_path_primal(inst: &LpInstance, lambda: &DVector<f64>, epsilon: f64) -> DVector<f64> {
    let slack = &inst.c - inst.a.transpose() * lambda;
    DVector::from_iterator(inst.c.len(), slack.iter().map(|&s| epsilon / s))
}

fn check_budget(d: usize, m: usize) -> Result<()> {
    let mut count: u128 = 1;
    for i in 0..m.min(d - m) {
        count = count.saturating_mul((d - i) as u128) / (i as u128 + 1);
        if count > BASIS_BUDGET {
            return Err(Error::TooLarge {
                d,
                m,
                budget: BASIS_BUDGET,
            });
        }
    }
    Ok(())
}

/// Brute-force LP oracle: enumerate all `m`-column bases, keep feasible
/// basic solutions, return the best value and a minimizer.
pub fn lp_vertex_oracle(inst: &LpInstance) -> Result<(f64, DVector<f64>)> {
    let (m, d) = inst.dims();
    check_budget(d, m)?;
    let mut best: Option<(f64, DVector<f64>)> = None;
    for sigma in (0..d).combinations(m) {
        let a_sigma = DMatrix::from_fn(m, m, |i, j| inst.a[(i, sigma[j])]);
        let det = a_sigma.determinant();
        if det.abs() <= 1e-12 {
            continue;
        }
        let lu = a_sigma.lu();
        let Some(x_sigma) = lu.solve(&inst.y) else {
            continue;
        };
        if x_sigma.iter().any(|&v| v < -FEAS_TOL) {
            continue;
        }
        let cost: f64 = sigma
            .iter()
            .zip(x_sigma.iter())
            .map(|(&j, &xj)| inst.c[j] * xj)
            .sum();
        let mut x_full = DVector::<f64>::zeros(d);
        for (k, &j) in sigma.iter().enumerate() {
            x_full[j] = x_sigma[k].max(0.0);
        }
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((cost, x_full));
        }
    }
    best.ok_or(Error::Infeasible)
}

/// One feasible basis with its simplex data.
#[derive(Debug, Clone)]
pub struct FeasibleBasis {
    /// Basic column indices, ascending.
    pub sigma: Vec<usize>,
    pub a_sigma: DMatrix<f64>,
    pub x_sigma: DVector<f64>,
    /// Dual vector solving `pi A_sigma = c_sigma`.
    pub pi_sigma: DVector<f64>,
    /// `(j, c_j - pi A_j)` for nonbasic columns, ascending in `j`.
    pub reduced_costs: Vec<(usize, f64)>,
    pub det_abs: f64,
}

/// All feasible bases of an instance.
#[derive(Debug, Clone)]
pub struct BasisCatalog {
    pub bases: Vec<FeasibleBasis>,
    /// Set when some basic variable sits in `[-1e-12, 1e-9]`.
    pub degenerate: bool,
}

/// Enumerates every feasible basis together with dual vectors, reduced
/// costs, and determinants, in lexicographic `sigma` order.
pub fn enumerate_feasible_bases(inst: &LpInstance) -> Result<BasisCatalog> {
    let (m, d) = inst.dims();
    check_budget(d, m)?;
    let mut bases = Vec::new();
    let mut degenerate = false;
    for sigma in (0..d).combinations(m) {
        let a_sigma = DMatrix::from_fn(m, m, |i, j| inst.a[(i, sigma[j])]);
        let det = a_sigma.determinant();
        if det.abs() <= 1e-12 {
            continue;
        }
        let lu = a_sigma.clone().lu();
        let Some(x_sigma) = lu.solve(&inst.y) else {
            continue;
        };
        if x_sigma.iter().any(|&v| v < -FEAS_TOL) {
            continue;
        }
        if x_sigma.iter().any(|&v| v <= DEGENERATE_TOL) {
            degenerate = true;
        }
        let c_sigma = DVector::from_iterator(m, sigma.iter().map(|&j| inst.c[j]));
        let lut = a_sigma.transpose().lu();
        let Some(pi_sigma) = lut.solve(&c_sigma) else {
            continue;
        };
        let reduced_costs = (0..d)
            .filter(|j| !sigma.contains(j))
            .map(|j| (j, inst.c[j] - pi_sigma.dot(&inst.a.column(j).into_owned())))
            .collect();
        bases.push(FeasibleBasis {
            sigma,
            det_abs: det.abs(),
            a_sigma,
            x_sigma,
            pi_sigma,
            reduced_costs,
        });
    }
    Ok(BasisCatalog { bases, degenerate })
}

/// Brion-Vergne vertex formula for the fiber density at `inst.y`:
///
/// `v(y) = s * sum_sigma exp(-<pi_sigma, y>) / (|det A_sigma| prod_{j not in
/// sigma} (c_j - pi_sigma A_j))`.
pub fn brion_vergne_density(catalog: &BasisCatalog, inst: &LpInstance) -> Result<f64> {
    if catalog.degenerate {
        return Err(Error::DegenerateVertex);
    }
    if catalog.bases.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for basis in &catalog.bases {
        let mut denom = basis.det_abs;
        for &(_, rc) in &basis.reduced_costs {
            if rc.abs() < 1e-9 {
                return Err(Error::NearPole(rc));
            }
            denom *= rc;
        }
        total += (-basis.pi_sigma.dot(&inst.y)).exp() / denom;
    }
    Ok(inst.s * total)
}

/// Vertex-formula density evaluated at the bin centers of a grid. Each
/// point re-enumerates feasible bases (the basis set depends on `y`).
pub fn brion_vergne_density_on_grid(
    inst: &LpInstance,
    grid: &crate::fiber::GridSpec,
) -> Result<crate::fiber::DensityEstimate> {
    let centers = grid.centers();
    let values = centers
        .iter()
        .map(|y| {
            let at_y = LpInstance {
                y: y.clone(),
                ..inst.clone()
            };
            let catalog = enumerate_feasible_bases(&at_y)?;
            brion_vergne_density(&catalog, &at_y)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(crate::fiber::DensityEstimate {
        grid: centers,
        values,
        method: crate::fiber::DensityMethod::BrionVergne,
        std_errors: None,
    })
}

/// Like [`brion_vergne_density_on_grid`], but grid points rejected as
/// degenerate are retried once with every coordinate of `y` nudged by
/// `1e-7`; the indices of perturbed points are reported alongside the
/// estimate so sweeps can continue without hiding the adjustment.
pub fn brion_vergne_density_on_grid_perturbed(
    inst: &LpInstance,
    grid: &crate::fiber::GridSpec,
) -> Result<(crate::fiber::DensityEstimate, Vec<usize>)> {
    const NUDGE: f64 = 1e-7;
    let centers = grid.centers();
    let mut values = Vec::with_capacity(centers.len());
    let mut perturbed = Vec::new();
    for (i, y) in centers.iter().enumerate() {
        let at_y = LpInstance {
            y: y.clone(),
            ..inst.clone()
        };
        let value = match enumerate_feasible_bases(&at_y)
            .and_then(|cat| brion_vergne_density(&cat, &at_y))
        {
            Ok(v) => v,
            Err(Error::DegenerateVertex) | Err(Error::NearPole(_)) => {
                let nudged = LpInstance {
                    y: y.map(|v| v + NUDGE),
                    ..inst.clone()
                };
                let catalog = enumerate_feasible_bases(&nudged)?;
                perturbed.push(i);
                brion_vergne_density(&catalog, &nudged)?
            }
            Err(e) => return Err(e),
        };
        values.push(value);
    }
    Ok((
        crate::fiber::DensityEstimate {
            grid: centers,
            values,
            method: crate::fiber::DensityMethod::BrionVergne,
            std_errors: None,
        },
        perturbed,
    ))
}

/// Partial-fraction form of the partition function for `m = 1`:
///
/// `Z(lambda) = s * sum_sigma 1 / (|det A_sigma| prod rc_j (pi_sigma -
/// lambda))`, valid for `lambda` below every pole `pi_sigma`. The expansion
/// assumes the feasible-basis set covers the support of the density, which
/// holds when the row of `A` is strictly positive.
pub fn partial_fraction_z(
    catalog: &BasisCatalog,
    inst: &LpInstance,
    lambda: &DVector<f64>,
) -> Result<f64> {
    let (m, _) = inst.dims();
    if m != 1 {
        return Err(Error::UnsupportedDimension(m));
    }
    if lambda.len() != 1 {
        return Err(Error::InvalidInput(
            "lambda must be scalar for m = 1".into(),
        ));
    }
    let lam = lambda[0];
    let mut total = 0.0;
    for basis in &catalog.bases {
        let pole = basis.pi_sigma[0] - lam;
        if pole <= 0.0 {
            return Err(Error::PoleViolation(pole));
        }
        let mut denom = basis.det_abs * pole;
        for &(_, rc) in &basis.reduced_costs {
            denom *= rc;
        }
        total += 1.0 / denom;
    }
    Ok(inst.s * total)
}

/// Sweep of the identity `eps Theta(y/eps) + eps ln s = tau_eps(y)`, each
/// side from an independent solver, plus the `eps = 0` row carrying the LP
/// value from the vertex oracle.
pub fn barrier_identity_report(inst: &LpInstance, eps_list: &[f64]) -> Result<Vec<SweepRow>> {
    let problem = inst.maxent_problem()?;
    let log_s = inst.log_s();
    let mut rows = Vec::with_capacity(eps_list.len() + 1);
    for &eps in eps_list {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::InvalidInput(
                "sweep epsilons must be positive".into(),
            ));
        }
        let (_, tau_eps) = barrier_dual_solve(inst, eps)?;
        let eps_theta = crate::maxent::theta_and_perspective(&problem, &inst.y, eps)?;
        rows.push(SweepRow {
            epsilon: eps,
            tau_eps,
            eps_theta,
            residual: (eps_theta + eps * log_s - tau_eps).abs(),
        });
    }
    let (tau, _) = lp_vertex_oracle(inst)?;
    let limit = crate::maxent::theta_and_perspective(&problem, &inst.y, 0.0)?;
    rows.push(SweepRow {
        epsilon: 0.0,
        tau_eps: tau,
        eps_theta: limit,
        residual: (limit - tau).abs(),
    });
    Ok(rows)
}
