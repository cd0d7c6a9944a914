//! Sweep of the identity between the scaled max-entropy dual and the LP
//! log-barrier value: eps * Theta(y/eps) + eps * ln s = tau_eps(y).

use cramer_bridge::lp::barrier_identity_report;
use cramer_bridge::sweep_csv;
use cramer_bridge::verify::e1_instance;

fn main() -> cramer_bridge::Result<()> {
    let inst = e1_instance();
    println!(
        "instance: A = [1 1], c = (1, 2), y = 1, ln s = {:.6}\n",
        inst.log_s()
    );
    let rows = barrier_identity_report(&inst, &[1.0, 0.3, 0.1, 0.03, 0.01])?;
    println!("{}", sweep_csv(&rows));
    println!("(the eps = 0 row carries the vertex-oracle LP value tau(y) = 1)");
    Ok(())
}
