//! Command execution behind the binary: load a problem file, run solves,
//! epsilon sweeps, or verification suites, and write reports.
//!
//! The CLI does no arithmetic of its own; every number comes from a library
//! operation. Exit contract: 0 success, 1 input error (returned as `Err`),
//! 2 numeric non-convergence or failed checks.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maxent::{solve_dual, SolveStatus};
use crate::problem::load_problem;
use crate::report::{sweep_csv, SweepRow};
use crate::verify::{render_report, run_suite, Suite};

/// Exit code for clean runs.
pub const EXIT_OK: i32 = 0;
/// Exit code for input errors (set by `main` when a command returns `Err`).
pub const EXIT_INPUT: i32 = 1;
/// Exit code for numeric non-convergence or failed verification.
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Serialize)]
struct SolveReport {
    lambda_star: Vec<f64>,
    theta: f64,
    #[serde(rename = "log_Z")]
    log_z: f64,
    iterations: usize,
    status: SolveStatus,
}

/// `solve`: dual solve of the problem file, result as JSON on `out`.
pub fn run_solve(path: &str, out: &mut dyn Write) -> Result<i32> {
    let loaded = load_problem(path)?;
    let result = solve_dual(&loaded.problem, &loaded.options)?;
    let report = SolveReport {
        lambda_star: result.lambda_star.iter().cloned().collect(),
        theta: result.theta,
        log_z: result.log_z_at_star,
        iterations: result.iterations,
        status: result.status,
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    Ok(match result.status {
        SolveStatus::Converged => EXIT_OK,
        _ => EXIT_NUMERIC,
    })
}

/// `sweep`: epsilon sweep of the barrier/perspective identity, CSV output.
/// LP sweeps get the extra `eps = 0` vertex-oracle row. Returns
/// [`EXIT_NUMERIC`] when some residual exceeds `tol`.
pub fn run_sweep(
    path: &str,
    eps_list: &[f64],
    tol: f64,
    out_path: Option<&str>,
    out: &mut dyn Write,
) -> Result<i32> {
    if eps_list.is_empty() {
        return Err(Error::InvalidInput(
            "sweep needs at least one epsilon".into(),
        ));
    }
    let loaded = load_problem(path)?;
    let rows: Vec<SweepRow> = if let Some(inst) = &loaded.lp {
        crate::lp::barrier_identity_report(inst, eps_list)?
    } else if let Some(inst) = &loaded.sdp {
        crate::sdp::barrier_identity_report(inst, eps_list)?
    } else {
        return Err(Error::InvalidInput("sweep requires lp or sdp".into()));
    };
    let csv = sweep_csv(&rows);
    match out_path {
        Some(p) => std::fs::write(p, &csv)?,
        None => out.write_all(csv.as_bytes())?,
    }
    let worst = rows.iter().map(|r| r.residual).fold(0.0_f64, f64::max);
    Ok(if worst <= tol { EXIT_OK } else { EXIT_NUMERIC })
}

/// `verify`: run a named suite, print one line per invariant.
pub fn run_verify(suite: &str, seed: u64, out: &mut dyn Write) -> Result<i32> {
    let suite = Suite::from_name(suite)
        .ok_or_else(|| Error::InvalidInput(format!("unknown suite {suite:?}")))?;
    let results = run_suite(suite, seed)?;
    out.write_all(render_report(&results).as_bytes())?;
    Ok(if results.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_NUMERIC
    })
}
