//! Fiber densities of linear moment maps on the orthant.
//!
//! For `h(x) = A x` on `R^d_+` with reference density `s exp(-<c, x>)`, the
//! pushforward `h#P` has density
//! `v(y) = s / sqrt(det A A^T) * integral of exp(-<c, x>)` over the fiber
//! `{x >= 0 : A x = y}` against Hausdorff measure. This module computes `v`
//! exactly in codimension one and two (orthonormal fiber frames make
//! Hausdorff measure equal Lebesgue measure in frame coordinates), estimates
//! the pushforward by seeded Monte-Carlo histograms, and checks the coarea
//! identity for catalogued test functions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::maxent::{Backend, MaxentProblem};
use crate::numeric::{
    cholesky_pd, exp_over_segment, exp_over_triangle, gauss_legendre, PD_PIVOT_TOL,
};
use crate::oracles;

/// Feasibility slack for vertex filtering and duplicate merging.
const VERTEX_TOL: f64 = 1e-9;
/// Virtual box used to separate empty from unbounded parameter polygons.
const VIRTUAL_BOX: f64 = 1e9;

/// Orthonormal parametrization of the affine fiber `{x : A x = y}`.
#[derive(Debug, Clone)]
pub struct FiberFrame {
    /// One solution of `A x = y` (minimum norm).
    pub base_point: DVector<f64>,
    /// `d x (d-m)` matrix with orthonormal columns spanning `null(A)`.
    pub frame: DMatrix<f64>,
}

/// Builds a [`FiberFrame`]: the minimum-norm solution of `A x = y` plus an
/// orthonormal null-space basis (Gram-Schmidt complement of the row space).
pub fn null_space_frame(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<FiberFrame> {
    let (m, d) = (a.nrows(), a.ncols());
    if y.len() != m {
        return Err(Error::InvalidInput(
            "y length must equal the row count of A".into(),
        ));
    }
    // Row-space basis from the thin QR of A^T; rank from its diagonal.
    let qr = a.transpose().qr();
    let q = qr.q();
    let r = qr.r();
    let rmax = (0..m).map(|i| r[(i, i)].abs()).fold(0.0_f64, f64::max);
    let rank = (0..m)
        .filter(|&i| r[(i, i)].abs() > 1e-10 * rmax.max(1e-300))
        .count();
    if rank < m {
        return Err(Error::RankDeficient { rank, expected: m });
    }

    // Minimum-norm solution x0 = A^T (A A^T)^{-1} y.
    let gram = a * a.transpose();
    let l = cholesky_pd(&gram, PD_PIVOT_TOL).ok_or(Error::RankDeficient { rank, expected: m })?;
    let z = crate::numeric::cholesky_solve_mat(&l, &DMatrix::from_column_slice(m, 1, y.as_slice()));
    let base_point = a.transpose() * DVector::from_column_slice(z.as_slice());

    // Extend the row-space basis to an orthonormal basis of R^d; the
    // complement spans null(A).
    let mut basis: Vec<DVector<f64>> = (0..m).map(|j| q.column(j).into_owned()).collect();
    let mut frame_cols: Vec<DVector<f64>> = Vec::with_capacity(d - m);
    for k in 0..d {
        if frame_cols.len() == d - m {
            break;
        }
        let mut v = DVector::<f64>::zeros(d);
        v[k] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dot(&v);
                v -= b * proj;
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            v /= n;
            basis.push(v.clone());
            frame_cols.push(v);
        }
    }
    debug_assert_eq!(frame_cols.len(), d - m);
    let frame = if frame_cols.is_empty() {
        DMatrix::<f64>::zeros(d, 0)
    } else {
        DMatrix::from_columns(&frame_cols)
    };
    Ok(FiberFrame { base_point, frame })
}

/// Fiber density `v(y)` for the orthant backend, by exact quadrature of the
/// exponential over the parameter polytope `{t : x0 + F t >= 0}`.
///
/// Codimension one integrates segments (with exact exponential tails when
/// the fiber is an unbounded ray); codimension two fan-triangulates the
/// polygon from the vertex centroid and uses the divided-difference formula
/// on each triangle. Returns `0` for an empty fiber.
pub fn fiber_density_quadrature(
    a: &DMatrix<f64>,
    c: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<f64> {
    let (m, d) = (a.nrows(), a.ncols());
    if c.len() != d {
        return Err(Error::InvalidInput(
            "cost length must equal the column count of A".into(),
        ));
    }
    if c.iter().any(|&cj| cj <= 0.0) {
        return Err(Error::InvalidInput(
            "cost vector must be strictly positive".into(),
        ));
    }
    let codim = d - m;
    if codim == 0 || codim > 2 {
        return Err(Error::CodimUnsupported(codim));
    }
    let FiberFrame { base_point, frame } = null_space_frame(a, y)?;

    let log_s: f64 = c.iter().map(|&cj| cj.ln()).sum();
    let gram = a * a.transpose();
    let scale = (log_s - 0.5 * gram.determinant().ln()).exp();

    // Affine exponent of the integrand in frame coordinates:
    // -<c, x0 + F t> = z0 - <beta, t>.
    let z0 = -c.dot(&base_point);
    let beta = frame.transpose() * c;

    let integral = match codim {
        1 => segment_integral(&base_point, &frame, z0, beta[0])?,
        2 => polygon_integral(&base_point, &frame, z0, &beta)?,
        _ => unreachable!(),
    };
    Ok(scale * integral)
}

/// Integral of `exp(z0 - beta t)` over `{t : x0 + f t >= 0}`.
fn segment_integral(x0: &DVector<f64>, frame: &DMatrix<f64>, z0: f64, beta: f64) -> Result<f64> {
    let d = x0.len();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for j in 0..d {
        let f = frame[(j, 0)];
        if f.abs() <= 1e-14 {
            if x0[j] < -VERTEX_TOL {
                return Ok(0.0); // constraint violated identically
            }
            continue;
        }
        let bound = -x0[j] / f;
        if f > 0.0 {
            lo = lo.max(bound);
        } else {
            hi = hi.min(bound);
        }
    }
    if lo > hi + 1e-12 {
        return Ok(0.0);
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            if hi - lo <= 1e-12 {
                return Err(Error::DegenerateFiber);
            }
            Ok(exp_over_segment(hi - lo, z0 - beta * lo, z0 - beta * hi))
        }
        (true, false) => {
            if beta <= 0.0 {
                return Err(Error::UnboundedFiber);
            }
            Ok((z0 - beta * lo).exp() / beta)
        }
        (false, true) => {
            if beta >= 0.0 {
                return Err(Error::UnboundedFiber);
            }
            Ok((z0 - beta * hi).exp() / (-beta))
        }
        (false, false) => Err(Error::UnboundedFiber),
    }
}

/// Integral of `exp(z0 - <beta, t>)` over the polygon `{t : x0 + F t >= 0}`.
fn polygon_integral(
    x0: &DVector<f64>,
    frame: &DMatrix<f64>,
    z0: f64,
    beta: &DVector<f64>,
) -> Result<f64> {
    let d = x0.len();
    // Constraint list g_j + <f_j, t> >= 0, augmented with a virtual box that
    // turns an unbounded polygon into one with far-away vertices.
    let mut gs: Vec<f64> = Vec::new();
    let mut fs: Vec<(f64, f64)> = Vec::new();
    for j in 0..d {
        let f = (frame[(j, 0)], frame[(j, 1)]);
        let norm = (f.0 * f.0 + f.1 * f.1).sqrt();
        if norm <= 1e-14 {
            if x0[j] < -VERTEX_TOL {
                return Ok(0.0);
            }
            continue;
        }
        gs.push(x0[j]);
        fs.push(f);
    }
    for (g, f) in [
        (VIRTUAL_BOX, (1.0, 0.0)),
        (VIRTUAL_BOX, (-1.0, 0.0)),
        (VIRTUAL_BOX, (0.0, 1.0)),
        (VIRTUAL_BOX, (0.0, -1.0)),
    ] {
        gs.push(g);
        fs.push(f);
    }

    // Pairwise intersections, filtered by feasibility.
    let n = fs.len();
    let mut vertices: Vec<(f64, f64)> = Vec::new();
    for j in 0..n {
        for k in (j + 1)..n {
            let det = fs[j].0 * fs[k].1 - fs[j].1 * fs[k].0;
            if det.abs() <= 1e-14 {
                continue;
            }
            let t0 = (-gs[j] * fs[k].1 + gs[k] * fs[j].1) / det;
            let t1 = (-fs[j].0 * gs[k] + fs[k].0 * gs[j]) / det;
            let feasible = gs
                .iter()
                .zip(&fs)
                .all(|(&g, &f)| g + f.0 * t0 + f.1 * t1 >= -VERTEX_TOL * (1.0 + g.abs()));
            if feasible
                && !vertices
                    .iter()
                    .any(|&(a, b)| ((a - t0).powi(2) + (b - t1).powi(2)).sqrt() <= VERTEX_TOL)
            {
                vertices.push((t0, t1));
            }
        }
    }
    if vertices.is_empty() {
        return Ok(0.0);
    }
    if vertices
        .iter()
        .any(|&(a, b)| a.abs() >= VIRTUAL_BOX - 1.0 || b.abs() >= VIRTUAL_BOX - 1.0)
    {
        return Err(Error::UnboundedFiber);
    }
    if vertices.len() < 3 {
        return Err(Error::DegenerateFiber);
    }

    // Angular sort around the centroid, then fan-triangulate from it.
    let cx = vertices.iter().map(|v| v.0).sum::<f64>() / vertices.len() as f64;
    let cy = vertices.iter().map(|v| v.1).sum::<f64>() / vertices.len() as f64;
    vertices.sort_by(|&(ax, ay), &(bx, by)| {
        let ta = (ay - cy).atan2(ax - cx);
        let tb = (by - cy).atan2(bx - cx);
        ta.partial_cmp(&tb).unwrap()
    });

    let exponent = |t: (f64, f64)| z0 - beta[0] * t.0 - beta[1] * t.1;
    let zc = exponent((cx, cy));
    let mut total = 0.0;
    let mut total_area = 0.0;
    for i in 0..vertices.len() {
        let p = vertices[i];
        let q = vertices[(i + 1) % vertices.len()];
        let area = 0.5 * ((p.0 - cx) * (q.1 - cy) - (p.1 - cy) * (q.0 - cx)).abs();
        total_area += area;
        total += exp_over_triangle(area, zc, exponent(p), exponent(q));
    }
    if total_area <= 1e-12 {
        return Err(Error::DegenerateFiber);
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Pushforward histograms
// ---------------------------------------------------------------------------

/// How a [`DensityEstimate`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityMethod {
    Quadrature,
    BrionVergne,
    McHistogram,
}

impl DensityMethod {
    pub fn id(self) -> &'static str {
        match self {
            DensityMethod::Quadrature => "quadrature",
            DensityMethod::BrionVergne => "brion-vergne",
            DensityMethod::McHistogram => "mc-histogram",
        }
    }
}

/// Regular tensor grid of bins on `[lo, hi)` per axis.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub bins: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, bins: Vec<usize>) -> Result<Self> {
        if lo.len() != hi.len() || lo.len() != bins.len() || lo.is_empty() {
            return Err(Error::InvalidInput(
                "grid spec arrays must have equal nonzero length".into(),
            ));
        }
        for i in 0..lo.len() {
            if !lo[i].is_finite() || !hi[i].is_finite() || lo[i] >= hi[i] || bins[i] == 0 {
                return Err(Error::InvalidInput(
                    "grid spec needs lo < hi and bins >= 1".into(),
                ));
            }
        }
        Ok(Self { lo, hi, bins })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn total_bins(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn bin_volume(&self) -> f64 {
        (0..self.dim())
            .map(|i| (self.hi[i] - self.lo[i]) / self.bins[i] as f64)
            .product()
    }

    /// Flat row-major bin index of a point, or `None` when outside.
    pub fn bin_index(&self, point: &DVector<f64>) -> Option<usize> {
        let mut idx = 0usize;
        for i in 0..self.dim() {
            let w = (self.hi[i] - self.lo[i]) / self.bins[i] as f64;
            let rel = (point[i] - self.lo[i]) / w;
            if rel < 0.0 || point[i] >= self.hi[i] {
                return None;
            }
            let b = (rel as usize).min(self.bins[i] - 1);
            idx = idx * self.bins[i] + b;
        }
        Some(idx)
    }

    /// Bin centers in flat row-major order.
    pub fn centers(&self) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(self.total_bins());
        let dim = self.dim();
        let mut idx = vec![0usize; dim];
        loop {
            let mut center = DVector::<f64>::zeros(dim);
            for i in 0..dim {
                let w = (self.hi[i] - self.lo[i]) / self.bins[i] as f64;
                center[i] = self.lo[i] + (idx[i] as f64 + 0.5) * w;
            }
            out.push(center);
            let mut i = dim;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < self.bins[i] {
                    break;
                }
                idx[i] = 0;
                if i == 0 {
                    return out;
                }
            }
        }
    }
}

/// Pushforward density values on a grid, with the method that produced them.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub grid: Vec<DVector<f64>>,
    pub values: Vec<f64>,
    pub method: DensityMethod,
    /// Present exactly for Monte-Carlo histograms.
    pub std_errors: Option<Vec<f64>>,
}

impl DensityEstimate {
    /// CSV rows `y..., value, std_error, method` under a matching header.
    pub fn to_csv(&self) -> String {
        let dim = self.grid.first().map_or(0, |g| g.len());
        let mut out = String::new();
        for i in 0..dim {
            out.push_str(&format!("y{},", i + 1));
        }
        out.push_str("value,std_error,method\n");
        for (i, point) in self.grid.iter().enumerate() {
            for v in point.iter() {
                out.push_str(&format!("{v:.12e},"));
            }
            let se = self
                .std_errors
                .as_ref()
                .map_or(String::new(), |s| format!("{:.12e}", s[i]));
            out.push_str(&format!(
                "{:.12e},{},{}\n",
                self.values[i],
                se,
                self.method.id()
            ));
        }
        out
    }
}

/// Exact fiber density evaluated at the bin centers of a grid.
pub fn quadrature_density_on_grid(
    a: &DMatrix<f64>,
    c: &DVector<f64>,
    grid: &GridSpec,
) -> Result<DensityEstimate> {
    let centers = grid.centers();
    let values = centers
        .iter()
        .map(|y| fiber_density_quadrature(a, c, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityEstimate {
        grid: centers,
        values,
        method: DensityMethod::Quadrature,
        std_errors: None,
    })
}

/// Histogram estimate of the pushforward density `h#P` from seeded samples
/// of the reference measure. Values are normalized by bin volume and sample
/// count; standard errors are per-bin binomial.
pub fn pushforward_histogram(
    problem: &MaxentProblem,
    n_samples: usize,
    grid: &GridSpec,
    seed: u64,
) -> Result<DensityEstimate> {
    if n_samples < 10_000 {
        return Err(Error::InvalidInput(
            "pushforward histogram needs at least 10^4 samples".into(),
        ));
    }
    if grid.dim() != problem.num_moments() {
        return Err(Error::InvalidInput(
            "grid dimension must equal the number of moments".into(),
        ));
    }
    let batch = oracles::sample_reference(problem, n_samples, seed)?;
    let mut counts = vec![0u64; grid.total_bins()];
    for x in &batch.points {
        let h =
            crate::maxent::moment_map_at(problem, &crate::maxent::DomainPoint::Vector(x.clone()))?;
        if let Some(idx) = grid.bin_index(&h) {
            counts[idx] += 1;
        }
    }
    let vol = grid.bin_volume();
    let n = n_samples as f64;
    let values: Vec<f64> = counts.iter().map(|&c| c as f64 / (n * vol)).collect();
    let std_errors: Vec<f64> = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            (p * (1.0 - p) / n).sqrt() / vol
        })
        .collect();
    Ok(DensityEstimate {
        grid: grid.centers(),
        values,
        method: DensityMethod::McHistogram,
        std_errors: Some(std_errors),
    })
}

// ---------------------------------------------------------------------------
// Coarea identity
// ---------------------------------------------------------------------------

/// Catalogued test functions for the coarea check.
#[derive(Debug, Clone)]
pub enum TestFunction {
    /// `g = 1`.
    One,
    /// `g(y) = <w, y>`.
    Linear(DVector<f64>),
    /// `g(y) = exp(<w, y>)`.
    Exponential(DVector<f64>),
}

impl TestFunction {
    fn eval(&self, y: &DVector<f64>) -> f64 {
        match self {
            TestFunction::One => 1.0,
            TestFunction::Linear(w) => w.dot(y),
            TestFunction::Exponential(w) => w.dot(y).exp(),
        }
    }
}

/// Both sides of the coarea identity for a catalogued test function.
#[derive(Debug, Clone, Copy)]
pub struct CoareaCheck {
    /// `integral of g(h(x)) p(x) dx` over the domain (analytic).
    pub lhs: f64,
    /// `integral of g(y) v(y) dy` by quadrature against the fiber density.
    pub rhs: f64,
    pub residual: f64,
}

/// Checks Federer's coarea identity on the orthant backend: the analytic
/// domain integral of `g(h(x))` against the reference density must match the
/// quadrature of `g` against the fiber density. `tol` steers the truncation
/// of the `y`-integration (panels stop once contributions fall below it).
pub fn coarea_residual(problem: &MaxentProblem, g: &TestFunction, tol: f64) -> Result<CoareaCheck> {
    let (a, c) = match problem.backend() {
        Backend::LpOrthant { a, c } => (a, c),
        _ => {
            return Err(Error::InvalidInput(
                "coarea check needs the orthant backend".into(),
            ))
        }
    };
    let codim = a.ncols() - a.nrows();
    if codim == 0 || codim > 2 {
        return Err(Error::CodimUnsupported(codim));
    }
    let lhs = match g {
        TestFunction::One => 1.0,
        TestFunction::Linear(w) => {
            // E_P[A x] = A (1/c_j)_j, coordinatewise exponential means.
            let mean = DVector::from_iterator(c.len(), c.iter().map(|&cj| 1.0 / cj));
            w.dot(&(a * mean))
        }
        TestFunction::Exponential(w) => crate::maxent::log_partition(problem, w)?.exp(),
    };
    let rhs = integrate_density_weighted(a, c, g, tol)?;
    Ok(CoareaCheck {
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
    })
}

/// Quadrature of `g(y) v(y)` over the support of the fiber density, with
/// `v` evaluated by [`fiber_density_quadrature`]. Supports one- and
/// two-dimensional moment spaces.
pub fn integrate_density_weighted(
    a: &DMatrix<f64>,
    c: &DVector<f64>,
    g: &TestFunction,
    tol: f64,
) -> Result<f64> {
    match a.nrows() {
        1 => line_integral(a, c, g, tol),
        2 => plane_integral(a, c, g, tol),
        m => Err(Error::InvalidInput(format!(
            "density-weighted quadrature supports m <= 2, got m = {m}"
        ))),
    }
}

fn line_integral(a: &DMatrix<f64>, c: &DVector<f64>, g: &TestFunction, tol: f64) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(24);
    let panel = 0.5;
    let stop = tol.max(1e-300);
    let has_pos = a.row(0).iter().any(|&v| v > 0.0);
    let has_neg = a.row(0).iter().any(|&v| v < 0.0);

    let mut total = 0.0;
    let mut march = |direction: f64| -> Result<()> {
        let mut start = 0.0;
        let mut quiet = 0;
        for _ in 0..4000 {
            let (lo, hi) = if direction > 0.0 {
                (start, start + panel)
            } else {
                (start - panel, start)
            };
            let mut contrib = 0.0;
            for (x, w) in nodes.iter().zip(&weights) {
                let y = 0.5 * (lo + hi) + 0.5 * (hi - lo) * x;
                let yv = DVector::from_element(1, y);
                let v = fiber_density_quadrature(a, c, &yv)?;
                contrib += w * 0.5 * (hi - lo) * g.eval(&yv) * v;
            }
            total += contrib;
            if contrib.abs() < stop * (1.0 + total.abs()) * 1e-3 {
                quiet += 1;
                if quiet >= 2 {
                    return Ok(());
                }
            } else {
                quiet = 0;
            }
            start += direction * panel;
        }
        Ok(())
    };
    if has_pos {
        march(1.0)?;
    }
    if has_neg {
        march(-1.0)?;
    }
    Ok(total)
}

fn plane_integral(a: &DMatrix<f64>, c: &DVector<f64>, g: &TestFunction, tol: f64) -> Result<f64> {
    // Expanding square of panels; the fiber density vanishes off the cone
    // A R^d_+ so empty panels cost little.
    let (nodes, weights) = gauss_legendre(12);
    let panel = 0.5;
    let stop = tol.max(1e-300);
    let mut total = 0.0;
    let mut ring = 0usize;
    loop {
        let mut ring_contrib = 0.0;
        let lo_idx = -(ring as i64);
        let hi_idx = ring as i64;
        for i in lo_idx..=hi_idx {
            for j in lo_idx..=hi_idx {
                if ring > 0 && i.abs() < ring as i64 && j.abs() < ring as i64 {
                    continue; // interior already integrated
                }
                let (x0, x1) = (i as f64 * panel, (i + 1) as f64 * panel);
                let (y0, y1) = (j as f64 * panel, (j + 1) as f64 * panel);
                let mut contrib = 0.0;
                for (u, wu) in nodes.iter().zip(&weights) {
                    let yu = 0.5 * (x0 + x1) + 0.5 * panel * u;
                    for (v, wv) in nodes.iter().zip(&weights) {
                        let yv = 0.5 * (y0 + y1) + 0.5 * panel * v;
                        let point = DVector::from_row_slice(&[yu, yv]);
                        let dens = fiber_density_quadrature(a, c, &point)?;
                        if dens > 0.0 {
                            contrib += wu * wv * 0.25 * panel * panel * g.eval(&point) * dens;
                        }
                    }
                }
                ring_contrib += contrib;
            }
        }
        total += ring_contrib;
        if ring > 2 && ring_contrib.abs() < stop * (1.0 + total.abs()) * 1e-3 {
            return Ok(total);
        }
        ring += 1;
        if ring > 400 {
            return Ok(total);
        }
    }
}
