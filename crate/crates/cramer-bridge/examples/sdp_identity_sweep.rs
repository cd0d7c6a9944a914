//! The SDP analog of the barrier/perspective identity, and convergence of
//! the log-det barrier value to the SDP optimum as eps goes to zero.

use cramer_bridge::sdp::{barrier_identity_report, sdp_barrier_dual_solve};
use cramer_bridge::sweep_csv;
use cramer_bridge::verify::e2_instance;

fn main() -> cramer_bridge::Result<()> {
    let inst = e2_instance();
    println!(
        "instance: A0 = I2, A1 = I2, y = 3 (so min {{tr X : tr X = 3, X psd}} = 3), ln s = {:.6}\n",
        inst.log_s
    );
    let rows = barrier_identity_report(&inst, &[1.0, 0.1, 0.01])?;
    println!("{}", sweep_csv(&rows));

    println!("barrier value -> SDP optimum:");
    for eps in [1.0, 0.1, 0.01, 1e-3, 1e-4] {
        let (lam, val) = sdp_barrier_dual_solve(&inst, eps)?;
        println!(
            "  eps {eps:>7.0e}: lambda = {:+.6}, tau*_eps = {:.8}, |tau*_eps - 3| = {:.3e}",
            lam[0],
            val,
            (val - 3.0).abs()
        );
    }
    Ok(())
}
