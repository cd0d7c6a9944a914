//! Shared numerical kernels: pivoted Cholesky, Gauss-Legendre rules, and
//! divided differences of the exponential.

use nalgebra::{DMatrix, DVector};

/// Pivot tolerance for symmetric positive-definite factorizations.
pub const PD_PIVOT_TOL: f64 = 1e-12;

/// Threshold below which divided differences of `exp` switch to a series.
pub const EXP_DD_SERIES_TOL: f64 = 1e-6;

/// Cholesky factor of a symmetric matrix, or `None` when some pivot falls
/// at or below `tol * max(1, max |diag|)`.
pub fn cholesky_pd(m: &DMatrix<f64>, tol: f64) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let scale = (0..n).map(|i| m[(i, i)].abs()).fold(1.0_f64, f64::max);
    let floor = tol * scale;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !pivot.is_finite() || pivot <= floor {
            return None;
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l)
}

/// Whether a symmetric matrix is positive definite under [`PD_PIVOT_TOL`].
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    cholesky_pd(m, PD_PIVOT_TOL).is_some()
}

/// `ln det` of a symmetric positive definite matrix, via its Cholesky factor.
pub fn ln_det_pd(m: &DMatrix<f64>) -> Option<f64> {
    let l = cholesky_pd(m, PD_PIVOT_TOL)?;
    Some(2.0 * (0..m.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Solve `H x = b` for symmetric positive semidefinite `H`, adding a small
/// ridge when the plain factorization fails.
pub fn solve_spd(h: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(l) = cholesky_pd(h, PD_PIVOT_TOL) {
        return Some(cholesky_solve(&l, b));
    }
    let n = h.nrows();
    let scale = (0..n).map(|i| h[(i, i)].abs()).fold(1.0_f64, f64::max);
    let mut ridge = 1e-12 * scale;
    for _ in 0..40 {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += ridge;
        }
        if let Some(l) = cholesky_pd(&hr, PD_PIVOT_TOL) {
            return Some(cholesky_solve(&l, b));
        }
        ridge *= 10.0;
    }
    None
}

/// Solve `L X = B` in place for lower-triangular `L`.
pub fn tri_lower_solve_mat(l: &DMatrix<f64>, b: &mut DMatrix<f64>) {
    let n = l.nrows();
    for col in 0..b.ncols() {
        for i in 0..n {
            let mut s = b[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * b[(k, col)];
            }
            b[(i, col)] = s / l[(i, i)];
        }
    }
}

/// Solve `L^T X = B` in place for lower-triangular `L`.
pub fn tri_upper_solve_mat(l: &DMatrix<f64>, b: &mut DMatrix<f64>) {
    let n = l.nrows();
    for col in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut s = b[(i, col)];
            for k in (i + 1)..n {
                s -= l[(k, i)] * b[(k, col)];
            }
            b[(i, col)] = s / l[(i, i)];
        }
    }
}

/// Solve `(L L^T) X = B` given the Cholesky factor `L`.
pub fn cholesky_solve_mat(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = b.clone();
    tri_lower_solve_mat(l, &mut x);
    tri_upper_solve_mat(l, &mut x);
    x
}

fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            let v = y[k];
            y[i] -= l[(i, k)] * v;
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let v = y[k];
            y[i] -= l[(k, i)] * v;
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, d2) = legendre_with_derivative(n, x);
                x -= p2 / d2;
                dp = d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// First divided difference of `exp`: `(e^b - e^a) / (b - a)`, stable for
/// coincident nodes via `exp_m1`.
pub fn exp_dd1(a: f64, b: f64) -> f64 {
    let d = b - a;
    if d == 0.0 {
        a.exp()
    } else {
        a.exp() * (d.exp_m1() / d)
    }
}

/// Second divided difference of `exp` at three nodes. Falls back to a series
/// around the node mean when the spread is below [`EXP_DD_SERIES_TOL`].
pub fn exp_dd2(a: f64, b: f64, c: f64) -> f64 {
    let mut z = [a, b, c];
    z.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let spread = z[2] - z[0];
    if spread < EXP_DD_SERIES_TOL {
        let mu = (z[0] + z[1] + z[2]) / 3.0;
        let (u, v, w) = (z[0] - mu, z[1] - mu, z[2] - mu);
        let p2 = u * u + v * v + w * w;
        let p3 = u * u * u + v * v * v + w * w * w;
        mu.exp() * (0.5 + p2 / 48.0 + p3 / 360.0)
    } else {
        (exp_dd1(z[1], z[2]) - exp_dd1(z[0], z[1])) / spread
    }
}

/// Exact integral of `exp(z0 + t (z1 - z0))` over a segment of length `len`
/// parametrized by `t in [0, 1]`.
pub fn exp_over_segment(len: f64, z0: f64, z1: f64) -> f64 {
    len * exp_dd1(z0, z1)
}

/// Exact integral of the affine-exponent exponential over a triangle with
/// area `area` and vertex exponents `z0, z1, z2`.
pub fn exp_over_triangle(area: f64, z0: f64, z1: f64, z2: f64) -> f64 {
    2.0 * area * exp_dd2(z0, z1, z2)
}
