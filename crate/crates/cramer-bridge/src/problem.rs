//! JSON problem files.
//!
//! A problem file carries one instance: `kind` selects the backend, matrices
//! are dense row-major nested arrays, and symmetric matrices are flat
//! row-major lower triangles. Optional fields: `lambda0` (interior dual
//! point used to normalize costs) and `solver` overrides.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lp::{self, LpInstance};
use crate::maxent::{Backend, BoxDensity, BoxMap, MaxentProblem, SolverOptions};
use crate::numeric::{cholesky_pd, PD_PIVOT_TOL};
use crate::sdp::SdpInstance;

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum ProblemFile {
    #[serde(rename = "lp")]
    Lp {
        a: Vec<Vec<f64>>,
        c: Vec<f64>,
        y: Vec<f64>,
        #[serde(default)]
        lambda0: Option<Vec<f64>>,
        #[serde(default)]
        solver: Option<SolverOverrides>,
    },
    #[serde(rename = "sdp")]
    Sdp {
        a0: Vec<f64>,
        a_js: Vec<Vec<f64>>,
        y: Vec<f64>,
        #[serde(default)]
        lambda0: Option<Vec<f64>>,
        #[serde(default)]
        solver: Option<SolverOverrides>,
    },
    #[serde(rename = "box")]
    Box {
        bounds: Vec<[f64; 2]>,
        density_id: String,
        map_id: String,
        y: Vec<f64>,
        #[serde(default)]
        solver: Option<SolverOverrides>,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverOverrides {
    grad_tol: Option<f64>,
    max_iters: Option<usize>,
    fraction_to_boundary: Option<f64>,
    armijo_c: Option<f64>,
    divergence_norm_bound: Option<f64>,
}

impl SolverOverrides {
    fn apply(&self, mut opts: SolverOptions) -> SolverOptions {
        if let Some(v) = self.grad_tol {
            opts.grad_tol = v;
        }
        if let Some(v) = self.max_iters {
            opts.max_iters = v;
        }
        if let Some(v) = self.fraction_to_boundary {
            opts.fraction_to_boundary = v;
        }
        if let Some(v) = self.armijo_c {
            opts.armijo_c = v;
        }
        if let Some(v) = self.divergence_norm_bound {
            opts.divergence_norm_bound = v;
        }
        opts
    }
}

/// A validated problem loaded from disk, with backend-specific instances
/// where they exist.
#[derive(Debug, Clone)]
pub struct LoadedProblem {
    pub problem: MaxentProblem,
    pub lp: Option<LpInstance>,
    pub sdp: Option<SdpInstance>,
    pub options: SolverOptions,
}

/// Unpacks a flat row-major lower triangle into a symmetric matrix.
pub fn unpack_lower_triangle(flat: &[f64]) -> Result<DMatrix<f64>> {
    let len = flat.len();
    let d = ((((8 * len + 1) as f64).sqrt() as usize) - 1) / 2;
    if d * (d + 1) / 2 != len || d == 0 {
        return Err(Error::InvalidInput(format!(
            "lower triangle length {len} is not d(d+1)/2 for any d >= 1"
        )));
    }
    let mut m = DMatrix::<f64>::zeros(d, d);
    let mut idx = 0;
    for i in 0..d {
        for j in 0..=i {
            m[(i, j)] = flat[idx];
            m[(j, i)] = flat[idx];
            idx += 1;
        }
    }
    Ok(m)
}

fn dense_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let m = rows.len();
    if m == 0 {
        return Err(Error::InvalidInput(
            "matrix must have at least one row".into(),
        ));
    }
    let d = rows[0].len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidInput(
            "matrix rows must be nonempty and of equal length".into(),
        ));
    }
    Ok(DMatrix::from_fn(m, d, |i, j| rows[i][j]))
}

/// Parses and validates a problem file from a JSON string.
pub fn parse_problem(text: &str) -> Result<LoadedProblem> {
    let file: ProblemFile = serde_json::from_str(text)?;
    let mut options = SolverOptions::default();
    match file {
        ProblemFile::Lp {
            a,
            c,
            y,
            lambda0,
            solver,
        } => {
            if let Some(s) = &solver {
                options = s.apply(options);
            }
            let a = dense_matrix(&a)?;
            let c = DVector::from_vec(c);
            let y = DVector::from_vec(y);
            let lam0 = lambda0.map(DVector::from_vec);
            let inst = lp::normalize_instance(&a, &c, &y, lam0.as_ref())?;
            let problem = inst.maxent_problem()?;
            Ok(LoadedProblem {
                problem,
                lp: Some(inst),
                sdp: None,
                options,
            })
        }
        ProblemFile::Sdp {
            a0,
            a_js,
            y,
            lambda0,
            solver,
        } => {
            if let Some(s) = &solver {
                options = s.apply(options);
            }
            let mut a0 = unpack_lower_triangle(&a0)?;
            let constraints = a_js
                .iter()
                .map(|flat| unpack_lower_triangle(flat))
                .collect::<Result<Vec<_>>>()?;
            let y = DVector::from_vec(y);
            if constraints.iter().any(|m| m.nrows() != a0.nrows()) {
                return Err(Error::InvalidInput(
                    "constraint matrices must match the order of A0".into(),
                ));
            }
            if let Some(lam0) = lambda0 {
                if lam0.len() != constraints.len() {
                    return Err(Error::InvalidInput("lambda0 has wrong length".into()));
                }
                if cholesky_pd(&a0, PD_PIVOT_TOL).is_none() {
                    for (j, aj) in constraints.iter().enumerate() {
                        a0 -= aj * lam0[j];
                    }
                }
            }
            let inst = SdpInstance::new(a0, constraints, y)?;
            let problem = inst.maxent_problem()?;
            Ok(LoadedProblem {
                problem,
                lp: None,
                sdp: Some(inst),
                options,
            })
        }
        ProblemFile::Box {
            bounds,
            density_id,
            map_id,
            y,
            solver,
        } => {
            if let Some(s) = &solver {
                options = s.apply(options);
            }
            let problem = MaxentProblem::new(
                Backend::BoxQuadrature {
                    bounds: bounds.iter().map(|b| (b[0], b[1])).collect(),
                    density: BoxDensity::from_id(&density_id)?,
                    map: BoxMap::from_id(&map_id)?,
                },
                DVector::from_vec(y),
            )?;
            Ok(LoadedProblem {
                problem,
                lp: None,
                sdp: None,
                options,
            })
        }
    }
}

/// Reads and validates a problem file from disk.
pub fn load_problem(path: &str) -> Result<LoadedProblem> {
    let text = std::fs::read_to_string(path)?;
    parse_problem(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parses_lp_file() {
        let loaded =
            parse_problem(r#"{"kind":"lp","a":[[1.0,1.0]],"c":[1.0,2.0],"y":[1.0]}"#).unwrap();
        let inst = loaded.lp.unwrap();
        assert_eq!(inst.s, 2.0);
        assert_eq!(loaded.problem.num_moments(), 1);
    }

    #[test]
    fn parses_sdp_file_with_lower_triangles() {
        let loaded =
            parse_problem(r#"{"kind":"sdp","a0":[1.0,0.0,1.0],"a_js":[[1.0,0.0,1.0]],"y":[3.0]}"#)
                .unwrap();
        let inst = loaded.sdp.unwrap();
        assert_eq!(inst.order(), 2);
        assert_abs_diff_eq!(inst.a0[(0, 1)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn parses_box_file() {
        let loaded = parse_problem(
            r#"{"kind":"box","bounds":[[0.0,1.0]],"density_id":"uniform","map_id":"coordinate-sum","y":[0.5]}"#,
        )
        .unwrap();
        assert!(loaded.lp.is_none());
        assert!(loaded.sdp.is_none());
    }

    #[test]
    fn solver_overrides_apply() {
        let loaded = parse_problem(
            r#"{"kind":"lp","a":[[1.0,1.0]],"c":[1.0,2.0],"y":[1.0],"solver":{"grad_tol":1e-8,"max_iters":7}}"#,
        )
        .unwrap();
        assert_eq!(loaded.options.grad_tol, 1e-8);
        assert_eq!(loaded.options.max_iters, 7);
        assert_eq!(loaded.options.fraction_to_boundary, 0.95);
    }

    #[test]
    fn rejects_malformed_input() {
        // Syntax error carries a line/column position.
        let err = parse_problem("{\n  \"kind\": \"lp\",\n").unwrap_err();
        assert!(format!("{err}").contains("line"));
        // Unknown fields are schema violations.
        assert!(
            parse_problem(r#"{"kind":"lp","a":[[1.0,1.0]],"c":[1.0,2.0],"y":[1.0],"zzz":1}"#)
                .is_err()
        );
        // Bad triangle length.
        assert!(matches!(
            parse_problem(r#"{"kind":"sdp","a0":[1.0,0.0],"a_js":[[1.0,0.0]],"y":[1.0]}"#),
            Err(Error::InvalidInput(_))
        ));
        // Ragged dense matrix.
        assert!(matches!(
            parse_problem(r#"{"kind":"lp","a":[[1.0,1.0],[1.0]],"c":[1.0,2.0],"y":[1.0,1.0]}"#),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn lambda0_normalizes_negative_costs() {
        let loaded = parse_problem(
            r#"{"kind":"lp","a":[[1.0,1.0]],"c":[-1.0,2.0],"y":[1.0],"lambda0":[-2.0]}"#,
        )
        .unwrap();
        let inst = loaded.lp.unwrap();
        assert_eq!(inst.c.as_slice(), &[1.0, 4.0]);
        assert_abs_diff_eq!(inst.objective_shift, -2.0, epsilon = 1e-15);
    }

    #[test]
    fn lambda0_restores_definiteness_of_sdp_cost() {
        // A0 = diag(-1, 1) is indefinite; shifting by lambda0 = -2 against
        // A1 = I yields diag(1, 3).
        let loaded = parse_problem(
            r#"{"kind":"sdp","a0":[-1.0,0.0,1.0],"a_js":[[1.0,0.0,1.0]],"y":[3.0],"lambda0":[-2.0]}"#,
        )
        .unwrap();
        let inst = loaded.sdp.unwrap();
        assert_abs_diff_eq!(inst.a0[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(inst.a0[(1, 1)], 3.0, epsilon = 1e-15);
        // Without the shift the file is rejected.
        assert!(parse_problem(
            r#"{"kind":"sdp","a0":[-1.0,0.0,1.0],"a_js":[[1.0,0.0,1.0]],"y":[3.0]}"#
        )
        .is_err());
    }

    #[test]
    fn squared_norm_box_solves() {
        let loaded = parse_problem(
            r#"{"kind":"box","bounds":[[0.0,1.0]],"density_id":"uniform","map_id":"squared-norm","y":[0.4]}"#,
        )
        .unwrap();
        let r = crate::maxent::solve_dual(&loaded.problem, &loaded.options).unwrap();
        assert!(matches!(r.status, crate::maxent::SolveStatus::Converged));
        // E[x^2] on the uniform unit interval is 1/3; y = 0.4 needs an
        // upward tilt.
        assert!(r.lambda_star[0] > 0.0);
    }
}
