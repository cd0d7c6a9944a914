//! Max-relative-entropy problems and their dual solver.
//!
//! A problem is a reference density `p` on a domain, a moment map `h`, and a
//! target moment vector `y`. The dual of the KL-minimization is the
//! Legendre-Fenchel transform of the log-partition function
//! `ln Z(lambda) = ln E_P[exp(<lambda, h(X)>)]`, maximized here by a damped
//! Newton iteration. Conventions: `Z` is the moment generating function of
//! the pushforward `h#P`, i.e. `Z(lambda) = L_v(-lambda)` for the Laplace
//! transform `L_v` of the pushforward density.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numeric::{cholesky_pd, gauss_legendre, ln_det_pd, solve_spd, PD_PIVOT_TOL};

/// Catalogued reference densities for the box backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxDensity {
    /// Constant density `1 / vol(box)`.
    Uniform,
    /// Product of unit-rate exponentials truncated to the box.
    ExpDecay,
}

impl BoxDensity {
    pub fn id(self) -> &'static str {
        match self {
            BoxDensity::Uniform => "uniform",
            BoxDensity::ExpDecay => "exp-decay",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "uniform" => Ok(BoxDensity::Uniform),
            "exp-decay" => Ok(BoxDensity::ExpDecay),
            other => Err(Error::InvalidInput(format!("unknown density id {other:?}"))),
        }
    }
}

/// Catalogued smooth moment maps for the box backend (all scalar-valued).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxMap {
    /// `h(x) = x_1 + ... + x_d`.
    CoordinateSum,
    /// `h(x) = x_1^2 + ... + x_d^2`.
    SquaredNorm,
}

impl BoxMap {
    pub fn id(self) -> &'static str {
        match self {
            BoxMap::CoordinateSum => "coordinate-sum",
            BoxMap::SquaredNorm => "squared-norm",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "coordinate-sum" => Ok(BoxMap::CoordinateSum),
            "squared-norm" => Ok(BoxMap::SquaredNorm),
            other => Err(Error::InvalidInput(format!("unknown map id {other:?}"))),
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            BoxMap::CoordinateSum => x.iter().sum(),
            BoxMap::SquaredNorm => x.iter().map(|v| v * v).sum(),
        }
    }
}

/// Problem backend: where the reference measure lives and what `h` is.
#[derive(Debug, Clone)]
pub enum Backend {
    /// `Omega = R^d_+`, `P = prod_j Exp(c_j)` scaled so `P(Omega) = 1`,
    /// `h(x) = A x`.
    LpOrthant { a: DMatrix<f64>, c: DVector<f64> },
    /// `Omega` is the PSD cone, `P propto exp(-<A0, X>) dX`,
    /// `h(X) = (<A_j, X>)_j`.
    SdpCone {
        a0: DMatrix<f64>,
        constraints: Vec<DMatrix<f64>>,
    },
    /// Bounded box with a catalogued density and scalar moment map;
    /// the partition function is evaluated by tensor Gauss-Legendre.
    BoxQuadrature {
        bounds: Vec<(f64, f64)>,
        density: BoxDensity,
        map: BoxMap,
    },
}

/// A max-entropy problem instance: backend plus target moments `y`.
#[derive(Debug, Clone)]
pub struct MaxentProblem {
    backend: Backend,
    y: DVector<f64>,
}

/// Nodes per axis for box quadrature.
const BOX_NODES: usize = 64;
/// Box quadrature is tensor-product; cap the dimension.
const BOX_MAX_DIM: usize = 3;

fn require_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidProblem(format!("{what} is not symmetric")));
            }
        }
    }
    Ok(())
}

fn row_rank(a: &DMatrix<f64>) -> usize {
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * smax)
        .count()
}

impl MaxentProblem {
    /// Validates the backend invariants and builds the problem.
    pub fn new(backend: Backend, y: DVector<f64>) -> Result<Self> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem(
                "target moments must be finite".into(),
            ));
        }
        match &backend {
            Backend::LpOrthant { a, c } => {
                let (m, d) = (a.nrows(), a.ncols());
                if m > d {
                    return Err(Error::InvalidProblem(format!(
                        "LP backend needs m <= d, got m = {m}, d = {d}"
                    )));
                }
                if c.len() != d {
                    return Err(Error::InvalidProblem(
                        "cost vector length must equal d".into(),
                    ));
                }
                if y.len() != m {
                    return Err(Error::InvalidProblem(
                        "target length must equal row count of A".into(),
                    ));
                }
                if c.iter().any(|&cj| cj <= 0.0) {
                    return Err(Error::InvalidProblem(
                        "cost vector must be strictly positive after normalization".into(),
                    ));
                }
                let rank = row_rank(a);
                if rank < m {
                    return Err(Error::RankDeficient { rank, expected: m });
                }
            }
            Backend::SdpCone { a0, constraints } => {
                let d = a0.nrows();
                require_symmetric(a0, "A0")?;
                if cholesky_pd(a0, PD_PIVOT_TOL).is_none() {
                    return Err(Error::InvalidProblem(
                        "A0 must be positive definite after normalization".into(),
                    ));
                }
                let m = constraints.len();
                if y.len() != m {
                    return Err(Error::InvalidProblem(
                        "target length must equal constraint count".into(),
                    ));
                }
                if m >= d * (d + 1) / 2 {
                    return Err(Error::InvalidProblem(format!(
                        "SDP backend needs m < d(d+1)/2, got m = {m}, d = {d}"
                    )));
                }
                for (j, aj) in constraints.iter().enumerate() {
                    if aj.nrows() != d || aj.ncols() != d {
                        return Err(Error::InvalidProblem(format!(
                            "A_{} has wrong shape",
                            j + 1
                        )));
                    }
                    require_symmetric(aj, "a constraint matrix")?;
                }
                let mut gram = DMatrix::<f64>::zeros(m, m);
                for i in 0..m {
                    for k in 0..m {
                        gram[(i, k)] = (&constraints[i] * &constraints[k]).trace();
                    }
                }
                let det = gram.determinant();
                if det.abs() <= 1e-12 {
                    return Err(Error::DependentConstraints(det));
                }
            }
            Backend::BoxQuadrature { bounds, .. } => {
                if bounds.is_empty() {
                    return Err(Error::InvalidProblem(
                        "box must have at least one axis".into(),
                    ));
                }
                for &(lo, hi) in bounds {
                    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                        return Err(Error::InvalidProblem(
                            "box bounds must satisfy lo < hi".into(),
                        ));
                    }
                }
                if y.len() != 1 {
                    return Err(Error::InvalidProblem(
                        "catalogued box maps are scalar; y must have length 1".into(),
                    ));
                }
            }
        }
        Ok(Self { backend, y })
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.y
    }

    /// Number of moment constraints `m`.
    pub fn num_moments(&self) -> usize {
        self.y.len()
    }

    /// Same backend, new target.
    pub fn with_target(&self, y: DVector<f64>) -> Result<Self> {
        Self::new(self.backend.clone(), y)
    }

    /// Barrier order `(d+1)/2` for the SDP backend.
    pub(crate) fn sdp_kappa(&self) -> Option<f64> {
        match &self.backend {
            Backend::SdpCone { a0, .. } => Some((a0.nrows() as f64 + 1.0) / 2.0),
            _ => None,
        }
    }
}

/// Tuning knobs for the Newton dual solver.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub fraction_to_boundary: f64,
    pub armijo_c: f64,
    pub divergence_norm_bound: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-10,
            max_iters: 100,
            fraction_to_boundary: 0.95,
            armijo_c: 1e-4,
            divergence_norm_bound: 1e8,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.grad_tol > 0.0
            && self.max_iters > 0
            && self.fraction_to_boundary > 0.0
            && self.fraction_to_boundary < 1.0
            && self.armijo_c > 0.0
            && self.divergence_norm_bound > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("solver options out of range".into()))
        }
    }
}

/// Outcome of a dual solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SolveStatus {
    #[serde(rename = "converged")]
    Converged,
    #[serde(rename = "max-iter")]
    MaxIter,
    #[serde(rename = "diverging-unbounded")]
    DivergingUnbounded,
}

/// Maximizer and value of the dual problem `sup <lambda, y> - ln Z(lambda)`.
#[derive(Debug, Clone)]
pub struct DualResult {
    pub lambda_star: DVector<f64>,
    /// Dual value `theta = <lambda*, y> - ln Z(lambda*)`, in nats.
    pub theta: f64,
    pub log_z_at_star: f64,
    /// Infinity norm of `grad ln Z(lambda*) - y`.
    pub grad_residual: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// A point of the problem domain: a vector for orthant/box backends, a
/// symmetric matrix for the PSD-cone backend.
#[derive(Debug, Clone)]
pub enum DomainPoint {
    Vector(DVector<f64>),
    Matrix(DMatrix<f64>),
}

// ---------------------------------------------------------------------------
// Partition function and derivatives
// ---------------------------------------------------------------------------

fn lp_slack(a: &DMatrix<f64>, c: &DVector<f64>, lambda: &DVector<f64>) -> DVector<f64> {
    c - a.transpose() * lambda
}

fn sdp_shifted(
    a0: &DMatrix<f64>,
    constraints: &[DMatrix<f64>],
    lambda: &DVector<f64>,
) -> DMatrix<f64> {
    let mut s = a0.clone();
    for (j, aj) in constraints.iter().enumerate() {
        s -= aj * lambda[j];
    }
    s
}

struct BoxRule {
    /// Per-axis nodes mapped to the box and matching weights.
    axes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl BoxRule {
    fn new(bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.len() > BOX_MAX_DIM {
            return Err(Error::QuadratureUnsupported(bounds.len()));
        }
        let (x, w) = gauss_legendre(BOX_NODES);
        let axes = bounds
            .iter()
            .map(|&(lo, hi)| {
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                let nodes: Vec<f64> = x.iter().map(|&xi| mid + half * xi).collect();
                let weights: Vec<f64> = w.iter().map(|&wi| wi * half).collect();
                (nodes, weights)
            })
            .collect();
        Ok(Self { axes })
    }

    /// Accumulates `f(x) * p-weight` over the tensor grid.
    fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let d = self.axes.len();
        let mut idx = vec![0usize; d];
        let mut point = vec![0.0; d];
        let mut total = 0.0;
        'outer: loop {
            let mut w = 1.0;
            for (k, &i) in idx.iter().enumerate() {
                point[k] = self.axes[k].0[i];
                w *= self.axes[k].1[i];
            }
            total += w * f(&point);
            for slot in idx.iter_mut() {
                *slot += 1;
                if *slot < BOX_NODES {
                    continue 'outer;
                }
                *slot = 0;
            }
            break;
        }
        total
    }
}

/// Unnormalized reference density on the box, and its log normalizer.
fn box_density_parts(
    bounds: &[(f64, f64)],
    density: BoxDensity,
) -> (impl Fn(&[f64]) -> f64 + '_, f64) {
    let log_norm = match density {
        BoxDensity::Uniform => bounds.iter().map(|&(lo, hi)| (hi - lo).ln()).sum::<f64>(),
        BoxDensity::ExpDecay => bounds
            .iter()
            .map(|&(lo, hi)| ((-lo).exp() - (-hi).exp()).ln())
            .sum::<f64>(),
    };
    let f = move |x: &[f64]| -> f64 {
        match density {
            BoxDensity::Uniform => 1.0,
            BoxDensity::ExpDecay => (-x.iter().sum::<f64>()).exp(),
        }
    };
    (f, log_norm)
}

/// Log-density of the reference measure at a domain point.
pub(crate) fn reference_log_density(problem: &MaxentProblem, point: &DomainPoint) -> Result<f64> {
    match (&problem.backend, point) {
        (Backend::LpOrthant { a, c }, DomainPoint::Vector(x)) => {
            if x.len() != a.ncols() {
                return Err(Error::InvalidInput("point dimension mismatch".into()));
            }
            if x.iter().any(|&v| v < 0.0) {
                return Ok(f64::NEG_INFINITY);
            }
            let log_s: f64 = c.iter().map(|&cj| cj.ln()).sum();
            Ok(log_s - c.dot(x))
        }
        (Backend::SdpCone { a0, .. }, DomainPoint::Matrix(x)) => {
            let d = a0.nrows();
            if x.nrows() != d || x.ncols() != d {
                return Err(Error::InvalidInput("point dimension mismatch".into()));
            }
            let kappa = (d as f64 + 1.0) / 2.0;
            let c_d = crate::sdp::multivariate_gamma_constant(d);
            // ln s = -phi(A0) = -C_d + kappa ln det A0.
            let log_s = -c_d + kappa * ln_det_pd(a0).ok_or(Error::NotPositiveDefinite)?;
            if cholesky_pd(x, -1e-9).is_none() {
                return Ok(f64::NEG_INFINITY);
            }
            Ok(log_s - (a0 * x).trace())
        }
        (
            Backend::BoxQuadrature {
                bounds, density, ..
            },
            DomainPoint::Vector(x),
        ) => {
            if x.len() != bounds.len() {
                return Err(Error::InvalidInput("point dimension mismatch".into()));
            }
            let inside = x
                .iter()
                .zip(bounds)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi);
            if !inside {
                return Ok(f64::NEG_INFINITY);
            }
            let (f, log_norm) = box_density_parts(bounds, *density);
            Ok(f(x.as_slice()).ln() - log_norm)
        }
        _ => Err(Error::InvalidInput(
            "point kind does not match the backend".into(),
        )),
    }
}

/// Moment map `h` evaluated at a domain point.
pub(crate) fn moment_map_at(problem: &MaxentProblem, point: &DomainPoint) -> Result<DVector<f64>> {
    match (&problem.backend, point) {
        (Backend::LpOrthant { a, .. }, DomainPoint::Vector(x)) => Ok(a * x),
        (Backend::SdpCone { constraints, .. }, DomainPoint::Matrix(x)) => {
            Ok(DVector::from_iterator(
                constraints.len(),
                constraints.iter().map(|aj| (aj * x).trace()),
            ))
        }
        (Backend::BoxQuadrature { map, .. }, DomainPoint::Vector(x)) => {
            Ok(DVector::from_element(1, map.eval(x.as_slice())))
        }
        _ => Err(Error::InvalidInput(
            "point kind does not match the backend".into(),
        )),
    }
}

/// `ln Z(lambda)` with `Z(lambda) = E_P[exp(<lambda, h(X)>)]`.
///
/// Closed form on the orthant and PSD-cone backends, tensor Gauss-Legendre
/// on the box backend.
pub fn log_partition(problem: &MaxentProblem, lambda: &DVector<f64>) -> Result<f64> {
    if lambda.len() != problem.num_moments() {
        return Err(Error::InvalidInput("lambda has wrong length".into()));
    }
    match &problem.backend {
        Backend::LpOrthant { a, c } => {
            let slack = lp_slack(a, c, lambda);
            if let Some(j) = slack.iter().position(|&s| s <= 0.0) {
                return Err(Error::DomainViolation(format!(
                    "slack (c - A^T lambda)_{} = {:e} is not positive",
                    j + 1,
                    slack[j]
                )));
            }
            Ok(c.iter()
                .zip(slack.iter())
                .map(|(&cj, &sj)| cj.ln() - sj.ln())
                .sum())
        }
        Backend::SdpCone { a0, constraints } => {
            let s = sdp_shifted(a0, constraints, lambda);
            let kappa = problem.sdp_kappa().unwrap();
            let ld_s = ln_det_pd(&s).ok_or_else(|| {
                Error::DomainViolation("A0 - sum lambda_j A_j is not positive definite".into())
            })?;
            let ld_a0 = ln_det_pd(a0).ok_or(Error::NotPositiveDefinite)?;
            Ok(kappa * (ld_a0 - ld_s))
        }
        Backend::BoxQuadrature {
            bounds,
            density,
            map,
        } => {
            let rule = BoxRule::new(bounds)?;
            let (pf, log_norm) = box_density_parts(bounds, *density);
            let lam = lambda[0];
            let z = rule.integrate(|x| (lam * map.eval(x)).exp() * pf(x));
            Ok(z.ln() - log_norm)
        }
    }
}

/// Gradient and Hessian of `ln Z`: the tilted mean `E_{q_lambda}[h]` and
/// tilted covariance `Cov_{q_lambda}[h]`.
pub fn log_partition_derivatives(
    problem: &MaxentProblem,
    lambda: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if lambda.len() != problem.num_moments() {
        return Err(Error::InvalidInput("lambda has wrong length".into()));
    }
    let m = problem.num_moments();
    match &problem.backend {
        Backend::LpOrthant { a, c } => {
            let slack = lp_slack(a, c, lambda);
            if let Some(j) = slack.iter().position(|&s| s <= 0.0) {
                return Err(Error::DomainViolation(format!(
                    "slack (c - A^T lambda)_{} = {:e} is not positive",
                    j + 1,
                    slack[j]
                )));
            }
            let mut grad = DVector::<f64>::zeros(m);
            let mut hess = DMatrix::<f64>::zeros(m, m);
            for j in 0..a.ncols() {
                let inv = 1.0 / slack[j];
                let inv2 = inv * inv;
                for i in 0..m {
                    grad[i] += a[(i, j)] * inv;
                    for k in 0..m {
                        hess[(i, k)] += a[(i, j)] * a[(k, j)] * inv2;
                    }
                }
            }
            Ok((grad, hess))
        }
        Backend::SdpCone { a0, constraints } => {
            let s = sdp_shifted(a0, constraints, lambda);
            let l = cholesky_pd(&s, PD_PIVOT_TOL).ok_or_else(|| {
                Error::DomainViolation("A0 - sum lambda_j A_j is not positive definite".into())
            })?;
            let kappa = problem.sdp_kappa().unwrap();
            // M_i = S^{-1} A_i via two triangular solves per constraint.
            let ms: Vec<DMatrix<f64>> = constraints
                .iter()
                .map(|ai| crate::numeric::cholesky_solve_mat(&l, ai))
                .collect();
            let grad = DVector::from_iterator(m, ms.iter().map(|mi| kappa * mi.trace()));
            let mut hess = DMatrix::<f64>::zeros(m, m);
            for i in 0..m {
                for k in i..m {
                    let v = kappa * (&ms[i] * &ms[k]).trace();
                    hess[(i, k)] = v;
                    hess[(k, i)] = v;
                }
            }
            Ok((grad, hess))
        }
        Backend::BoxQuadrature {
            bounds,
            density,
            map,
        } => {
            let rule = BoxRule::new(bounds)?;
            let (pf, _) = box_density_parts(bounds, *density);
            let lam = lambda[0];
            let z = rule.integrate(|x| (lam * map.eval(x)).exp() * pf(x));
            let zh = rule.integrate(|x| {
                let hv = map.eval(x);
                hv * (lam * hv).exp() * pf(x)
            });
            let zhh = rule.integrate(|x| {
                let hv = map.eval(x);
                hv * hv * (lam * hv).exp() * pf(x)
            });
            let mean = zh / z;
            let var = (zhh / z - mean * mean).max(0.0);
            Ok((
                DVector::from_element(1, mean),
                DMatrix::from_element(1, 1, var),
            ))
        }
    }
}

// ---------------------------------------------------------------------------
// Newton dual solver
// ---------------------------------------------------------------------------

/// Largest step `t` keeping the iterate strictly interior, scaled by the
/// fraction-to-boundary factor. Infinite when the step never hits a boundary.
fn max_interior_step(
    problem: &MaxentProblem,
    lambda: &DVector<f64>,
    delta: &DVector<f64>,
    frac: f64,
) -> f64 {
    match &problem.backend {
        Backend::LpOrthant { a, c } => {
            let slack = lp_slack(a, c, lambda);
            let ds = a.transpose() * delta;
            let mut t = f64::INFINITY;
            for j in 0..slack.len() {
                if ds[j] > 0.0 {
                    t = t.min(frac * slack[j] / ds[j]);
                }
            }
            t
        }
        Backend::SdpCone { a0, constraints } => {
            let s = sdp_shifted(a0, constraints, lambda);
            let mut b = DMatrix::<f64>::zeros(a0.nrows(), a0.ncols());
            for (j, aj) in constraints.iter().enumerate() {
                b += aj * delta[j];
            }
            // S - t B stays PD up to t = 1 / lambda_max(L^{-1} B L^{-T}).
            let l = match cholesky_pd(&s, PD_PIVOT_TOL) {
                Some(l) => l,
                None => return 0.0,
            };
            let mut c_mat = b;
            crate::numeric::tri_lower_solve_mat(&l, &mut c_mat); // L^{-1} B
            let mut ct = c_mat.transpose();
            crate::numeric::tri_lower_solve_mat(&l, &mut ct); // L^{-1} B^T L^{-T}
            let m = ct.transpose();
            let sym = 0.5 * (&m + m.transpose());
            let eig = nalgebra::SymmetricEigen::new(sym);
            let lam_max = eig
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            if lam_max <= 0.0 {
                f64::INFINITY
            } else {
                frac / lam_max
            }
        }
        Backend::BoxQuadrature { .. } => f64::INFINITY,
    }
}

/// Damped Newton maximization of `g(lambda) = <lambda, y> - ln Z(lambda)`,
/// started at `lambda = 0`, with Armijo backtracking after a
/// fraction-to-boundary step cap. Divergence of the iterates is reported via
/// [`SolveStatus::DivergingUnbounded`], not as an error.
pub fn solve_dual(problem: &MaxentProblem, opts: &SolverOptions) -> Result<DualResult> {
    opts.validate()?;
    let y = problem.target().clone();
    let m = problem.num_moments();
    let mut lambda = DVector::<f64>::zeros(m);

    let mut log_z = log_partition(problem, &lambda)?;
    let mut iterations = 0;
    for iter in 0..opts.max_iters {
        iterations = iter + 1;
        let (grad_lnz, hess) = log_partition_derivatives(problem, &lambda)?;
        let ascent = &y - &grad_lnz;
        let residual = ascent.amax();
        if residual <= opts.grad_tol {
            return Ok(DualResult {
                theta: lambda.dot(&y) - log_z,
                lambda_star: lambda,
                log_z_at_star: log_z,
                grad_residual: residual,
                iterations: iter,
                status: SolveStatus::Converged,
            });
        }
        let delta = match solve_spd(&hess, &ascent) {
            Some(d) => d,
            None => break,
        };
        let dir_deriv = ascent.dot(&delta);
        if dir_deriv <= 0.0 {
            break;
        }
        let g0 = lambda.dot(&y) - log_z;
        // Near the optimum the predicted increase sinks below the value's
        // floating-point resolution; skip the sufficient-increase test there
        // and take any domain-valid step (Newton is locally quadratic).
        let below_resolution = dir_deriv <= 1e-14 * (1.0 + g0.abs());
        let mut t = max_interior_step(problem, &lambda, &delta, opts.fraction_to_boundary).min(1.0);
        let mut accepted = false;
        while t > 1e-18 {
            let cand = &lambda + &delta * t;
            match log_partition(problem, &cand) {
                Ok(lz) => {
                    let g = cand.dot(&y) - lz;
                    if below_resolution || g >= g0 + opts.armijo_c * t * dir_deriv {
                        lambda = cand;
                        log_z = lz;
                        accepted = true;
                        break;
                    }
                }
                Err(Error::DomainViolation(_)) => {}
                Err(e) => return Err(e),
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        if lambda.norm() > opts.divergence_norm_bound {
            let (grad_lnz, _) = log_partition_derivatives(problem, &lambda)?;
            return Ok(DualResult {
                theta: lambda.dot(&y) - log_z,
                grad_residual: (&y - grad_lnz).amax(),
                lambda_star: lambda,
                log_z_at_star: log_z,
                iterations,
                status: SolveStatus::DivergingUnbounded,
            });
        }
    }
    let (grad_lnz, _) = log_partition_derivatives(problem, &lambda)?;
    Ok(DualResult {
        theta: lambda.dot(&y) - log_z,
        grad_residual: (&y - grad_lnz).amax(),
        lambda_star: lambda,
        log_z_at_star: log_z,
        iterations,
        status: SolveStatus::MaxIter,
    })
}

/// Perspective value `eps * Theta(y / eps)` for `eps > 0`; at `eps = 0` the
/// recession limit, which is the LP optimal value (vertex oracle) on the
/// orthant backend and a small-eps extrapolation of the barrier dual on the
/// PSD-cone backend.
pub fn theta_and_perspective(
    problem: &MaxentProblem,
    y: &DVector<f64>,
    epsilon: f64,
) -> Result<f64> {
    if epsilon < 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidInput(
            "epsilon must be finite and nonnegative".into(),
        ));
    }
    if epsilon > 0.0 {
        let scaled = problem.with_target(y / epsilon)?;
        let result = solve_dual(&scaled, &SolverOptions::default())?;
        return match result.status {
            SolveStatus::Converged => Ok(epsilon * result.theta),
            SolveStatus::DivergingUnbounded => Err(Error::Unbounded),
            SolveStatus::MaxIter => {
                Err(Error::NotConverged("max-iter in perspective solve".into()))
            }
        };
    }
    match &problem.backend {
        Backend::LpOrthant { a, c } => {
            let inst = crate::lp::normalize_instance(a, c, y, None)?;
            let (tau, _) = crate::lp::lp_vertex_oracle(&inst)?;
            Ok(tau)
        }
        Backend::SdpCone { a0, constraints } => {
            let inst = crate::sdp::SdpInstance::new(a0.clone(), constraints.clone(), y.clone())?;
            let d = a0.nrows() as f64;
            let gap_coeff = d * (d + 1.0) / 2.0;
            let mut prev: Option<f64> = None;
            let mut value = f64::NAN;
            for eps in [1e-3, 1e-4, 1e-5, 1e-6] {
                let (lambda_eps, _) = crate::sdp::sdp_barrier_dual_solve(&inst, eps)?;
                value = lambda_eps.dot(y);
                if let Some(p) = prev {
                    // The central-path duality gap bounds successive jumps.
                    if (value - p).abs() > 10.0 * eps * gap_coeff + 1e-9 {
                        return Err(Error::NotConverged(
                            "barrier values drift beyond the duality-gap bound".into(),
                        ));
                    }
                }
                prev = Some(value);
            }
            Ok(value)
        }
        Backend::BoxQuadrature { .. } => Err(Error::LimitUnsupported),
    }
}

/// Optimal tilted density `q*(x) = p(x) exp(<lambda*, h(x)>) / Z(lambda*)`
/// evaluated at a domain point, given a converged dual result.
pub fn optimal_density_at(
    problem: &MaxentProblem,
    result: &DualResult,
    point: &DomainPoint,
) -> Result<f64> {
    if result.status != SolveStatus::Converged {
        return Err(Error::NotConverged(format!("{:?}", result.status)));
    }
    let log_p = reference_log_density(problem, point)?;
    if log_p == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let h = moment_map_at(problem, point)?;
    Ok((log_p + result.lambda_star.dot(&h) - result.log_z_at_star).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    pub(crate) fn e1() -> MaxentProblem {
        MaxentProblem::new(
            Backend::LpOrthant {
                a: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
                c: DVector::from_row_slice(&[1.0, 2.0]),
            },
            DVector::from_element(1, 1.5),
        )
        .unwrap()
    }

    pub(crate) fn e2() -> MaxentProblem {
        MaxentProblem::new(
            Backend::SdpCone {
                a0: DMatrix::identity(2, 2),
                constraints: vec![DMatrix::identity(2, 2)],
            },
            DVector::from_element(1, 3.0),
        )
        .unwrap()
    }

    #[test]
    fn log_partition_lp_values() {
        let p = e1();
        let zero = DVector::from_element(1, 0.0);
        assert_abs_diff_eq!(log_partition(&p, &zero).unwrap(), 0.0, epsilon = 1e-15);

        let half = DVector::from_element(1, 0.5);
        // ln 2 - ln 0.5 - ln 1.5 = ln(8/3)
        assert_relative_eq!(
            log_partition(&p, &half).unwrap(),
            (8.0_f64 / 3.0).ln(),
            epsilon = 1e-14
        );

        let outside = DVector::from_element(1, 1.5);
        assert!(matches!(
            log_partition(&p, &outside),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn derivatives_lp_closed_form() {
        let p = e1();
        let zero = DVector::from_element(1, 0.0);
        let (g, h) = log_partition_derivatives(&p, &zero).unwrap();
        assert_relative_eq!(g[0], 1.5, epsilon = 1e-14);
        assert_relative_eq!(h[(0, 0)], 1.25, epsilon = 1e-14);
    }

    #[test]
    fn derivatives_sdp_closed_form() {
        let p = e2();
        let zero = DVector::from_element(1, 0.0);
        let (g, h) = log_partition_derivatives(&p, &zero).unwrap();
        assert_relative_eq!(g[0], 3.0, epsilon = 1e-13);
        assert_relative_eq!(h[(0, 0)], 3.0, epsilon = 1e-13);
    }

    #[test]
    fn gradient_matches_central_difference() {
        let p = e1();
        let zero = DVector::from_element(1, 0.0);
        let (g, _) = log_partition_derivatives(&p, &zero).unwrap();
        let step = 1e-5;
        let plus = log_partition(&p, &DVector::from_element(1, step)).unwrap();
        let minus = log_partition(&p, &DVector::from_element(1, -step)).unwrap();
        let fd = (plus - minus) / (2.0 * step);
        assert_abs_diff_eq!(g[0], fd, epsilon = 1e-8);
    }

    #[test]
    fn solve_dual_at_the_reference_mean() {
        // y = E_P[h]: the KL minimum is Q = P, lambda* = 0, Theta = 0.
        let p = e1();
        let r = solve_dual(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert_abs_diff_eq!(r.lambda_star[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.theta, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_dual_golden_ratio_stationary_point() {
        // Stationarity 1/(1-l) + 1/(2-l) = 1 reduces to l^2 - l - 1 = 0.
        let p = e1().with_target(DVector::from_element(1, 1.0)).unwrap();
        let r = solve_dual(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        let lam = (1.0 - 5.0_f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(r.lambda_star[0], lam, epsilon = 1e-9);
        let theta = lam - ((2.0_f64).ln() - (1.0 - lam).ln() - (2.0 - lam).ln());
        assert_abs_diff_eq!(r.theta, theta, epsilon = 1e-11);
        assert_abs_diff_eq!(r.theta, 0.1324543, epsilon = 1e-6);
    }

    #[test]
    fn solve_dual_sdp_closed_form() {
        // Stationarity 3/(1-l) = 2 gives l = -1/2.
        let p = e2().with_target(DVector::from_element(1, 2.0)).unwrap();
        let r = solve_dual(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
        assert_abs_diff_eq!(r.lambda_star[0], -0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.theta, -1.0 + 3.0 * 1.5_f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn solve_dual_detects_unbounded_target() {
        // y = -1 lies outside A R^2_+ = [0, inf).
        let p = e1().with_target(DVector::from_element(1, -1.0)).unwrap();
        let r = solve_dual(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::DivergingUnbounded);
    }

    #[test]
    fn perspective_values_on_e1() {
        let p = e1();
        let y = DVector::from_element(1, 1.0);
        let at1 = theta_and_perspective(&p, &y, 1.0).unwrap();
        assert_abs_diff_eq!(at1, 0.1324543, epsilon = 1e-6);
        // eps = 0.1: equals tau_eps - eps ln s from the barrier route.
        let at01 = theta_and_perspective(&p, &y, 0.1).unwrap();
        assert_abs_diff_eq!(at01, 0.610391, epsilon = 1e-5);
        // eps = 0: the LP value min{x1 + 2 x2 : x1 + x2 = 1, x >= 0} = 1.
        let at0 = theta_and_perspective(&p, &y, 0.0).unwrap();
        assert_abs_diff_eq!(at0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn perspective_limit_on_the_cone_backend() {
        // min {tr X : tr X = 3, X psd} = 3; the small-eps ladder converges
        // within the central-path gap of its last rung.
        let p = e2();
        let y = DVector::from_element(1, 3.0);
        let limit = theta_and_perspective(&p, &y, 0.0).unwrap();
        assert_abs_diff_eq!(limit, 3.0, epsilon = 1e-4);
    }

    #[test]
    fn perspective_rejects_box_limit() {
        let p = MaxentProblem::new(
            Backend::BoxQuadrature {
                bounds: vec![(0.0, 1.0)],
                density: BoxDensity::Uniform,
                map: BoxMap::CoordinateSum,
            },
            DVector::from_element(1, 0.5),
        )
        .unwrap();
        assert!(matches!(
            theta_and_perspective(&p, &DVector::from_element(1, 0.5), 0.0),
            Err(Error::LimitUnsupported)
        ));
    }

    #[test]
    fn box_partition_matches_closed_form() {
        // Uniform on [0,1], h = x: Z(l) = (e^l - 1)/l.
        let p = MaxentProblem::new(
            Backend::BoxQuadrature {
                bounds: vec![(0.0, 1.0)],
                density: BoxDensity::Uniform,
                map: BoxMap::CoordinateSum,
            },
            DVector::from_element(1, 0.5),
        )
        .unwrap();
        let lam = DVector::from_element(1, 0.7);
        let z = log_partition(&p, &lam).unwrap();
        assert_relative_eq!(z, ((0.7_f64.exp() - 1.0) / 0.7).ln(), epsilon = 1e-12);
        let zero = DVector::from_element(1, 0.0);
        assert_abs_diff_eq!(log_partition(&p, &zero).unwrap(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn box_derivatives_match_finite_differences() {
        let p = MaxentProblem::new(
            Backend::BoxQuadrature {
                bounds: vec![(0.0, 1.0), (0.0, 2.0)],
                density: BoxDensity::ExpDecay,
                map: BoxMap::CoordinateSum,
            },
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        for lam in [-0.8, 0.0, 0.6] {
            let l = DVector::from_element(1, lam);
            let (g, h) = log_partition_derivatives(&p, &l).unwrap();
            let step = 1e-5;
            let plus = log_partition(&p, &DVector::from_element(1, lam + step)).unwrap();
            let minus = log_partition(&p, &DVector::from_element(1, lam - step)).unwrap();
            assert_abs_diff_eq!(g[0], (plus - minus) / (2.0 * step), epsilon = 1e-9);
            // Second differences need a wider step to clear the
            // cancellation noise floor.
            let step2 = 1e-3;
            let plus2 = log_partition(&p, &DVector::from_element(1, lam + step2)).unwrap();
            let minus2 = log_partition(&p, &DVector::from_element(1, lam - step2)).unwrap();
            let fd2 = (plus2 - 2.0 * log_partition(&p, &l).unwrap() + minus2) / (step2 * step2);
            assert_abs_diff_eq!(h[(0, 0)], fd2, epsilon = 1e-5);
        }
        let r = solve_dual(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Converged);
    }

    #[test]
    fn box_rejects_high_dimension() {
        let p = MaxentProblem::new(
            Backend::BoxQuadrature {
                bounds: vec![(0.0, 1.0); 4],
                density: BoxDensity::Uniform,
                map: BoxMap::CoordinateSum,
            },
            DVector::from_element(1, 0.5),
        )
        .unwrap();
        assert!(matches!(
            log_partition(&p, &DVector::from_element(1, 0.1)),
            Err(Error::QuadratureUnsupported(4))
        ));
    }

    #[test]
    fn optimal_density_values() {
        let p = e1();
        let r = solve_dual(&p, &SolverOptions::default()).unwrap();
        let origin = DomainPoint::Vector(DVector::from_row_slice(&[0.0, 0.0]));
        // lambda* = 0, so q* = p and p(0,0) = s = 2.
        assert_relative_eq!(
            optimal_density_at(&p, &r, &origin).unwrap(),
            2.0,
            epsilon = 1e-9
        );

        let p1 = e1().with_target(DVector::from_element(1, 1.0)).unwrap();
        let r1 = solve_dual(&p1, &SolverOptions::default()).unwrap();
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        let z_star = 2.0 / (phi * (1.0 + phi));
        assert_relative_eq!(
            optimal_density_at(&p1, &r1, &origin).unwrap(),
            2.0 / z_star,
            max_relative = 1e-8
        );

        let bad = DualResult {
            status: SolveStatus::MaxIter,
            ..r1.clone()
        };
        assert!(matches!(
            optimal_density_at(&p1, &bad, &origin),
            Err(Error::NotConverged(_))
        ));
    }

    #[test]
    fn tilted_density_normalizes_under_monte_carlo() {
        // E_P[q*/p] = 1; the importance-sampling oracle must recover it.
        let p = e1().with_target(DVector::from_element(1, 1.0)).unwrap();
        let r = solve_dual(&p, &SolverOptions::default()).unwrap();
        let n = 1_000_000;
        let batch = crate::oracles::sample_reference(&p, n, 5).unwrap();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for x in &batch.points {
            let h = moment_map_at(&p, &DomainPoint::Vector(x.clone())).unwrap();
            let w = (r.lambda_star.dot(&h) - r.log_z_at_star).exp();
            sum += w;
            sum_sq += w * w;
        }
        let mean = sum / n as f64;
        let se = (((sum_sq / n as f64) - mean * mean).max(0.0) / n as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn theta_consistency_identity() {
        // theta must equal <lambda*, y> - ln Z(lambda*) exactly as stored.
        let p = e1().with_target(DVector::from_element(1, 0.7)).unwrap();
        let r = solve_dual(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.theta, r.lambda_star.dot(p.target()) - r.log_z_at_star);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        /// Dual solves on the exponential-orthant family converge with a
        /// nonnegative entropy value and a stationary gradient.
        #[test]
        fn dual_solve_invariants(
            c1 in 0.3_f64..3.0,
            c2 in 0.3_f64..3.0,
            x1 in 0.05_f64..3.0,
            x2 in 0.05_f64..3.0,
        ) {
            let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
            let c = DVector::from_row_slice(&[c1, c2]);
            let y = DVector::from_element(1, x1 + x2);
            let problem = MaxentProblem::new(Backend::LpOrthant { a, c }, y.clone()).unwrap();
            let r = solve_dual(&problem, &SolverOptions::default()).unwrap();
            proptest::prop_assert_eq!(r.status, SolveStatus::Converged);
            proptest::prop_assert!(r.grad_residual <= 1e-10);
            proptest::prop_assert!(r.theta >= -1e-10);
            proptest::prop_assert_eq!(r.theta, r.lambda_star.dot(&y) - r.log_z_at_star);
        }

        /// The log-partition Hessian stays positive semidefinite across the
        /// dual interior.
        #[test]
        fn hessian_is_psd(lam in -4.0_f64..0.95) {
            let p = e1();
            let (_, h) = log_partition_derivatives(&p, &DVector::from_element(1, lam)).unwrap();
            proptest::prop_assert!(h[(0, 0)] >= -1e-10);
        }
    }

    #[test]
    fn problem_validation_rejects_bad_data() {
        // Rank-deficient A.
        let bad = MaxentProblem::new(
            Backend::LpOrthant {
                a: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]),
                c: DVector::from_row_slice(&[1.0, 1.0]),
            },
            DVector::from_row_slice(&[1.0, 2.0]),
        );
        assert!(matches!(bad, Err(Error::RankDeficient { .. })));
        // Nonpositive cost.
        let bad = MaxentProblem::new(
            Backend::LpOrthant {
                a: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
                c: DVector::from_row_slice(&[1.0, -2.0]),
            },
            DVector::from_element(1, 1.0),
        );
        assert!(matches!(bad, Err(Error::InvalidProblem(_))));
        // Dependent SDP constraints.
        let a1 = DMatrix::identity(2, 2);
        let bad = MaxentProblem::new(
            Backend::SdpCone {
                a0: DMatrix::identity(2, 2),
                constraints: vec![a1.clone(), 2.0 * a1],
            },
            DVector::from_row_slice(&[1.0, 2.0]),
        );
        assert!(matches!(bad, Err(Error::DependentConstraints(_))));
    }
}
