//! The eps -> 0 limit of the perspective function: barrier duals walk the
//! central path to the LP optimal value with duality gap exactly eps * d.

use cramer_bridge::lp::{barrier_dual_solve, central_path_primal, lp_vertex_oracle};
use cramer_bridge::oracles::stream_rng;
use cramer_bridge::theta_and_perspective;
use cramer_bridge::verify::random_lp_instance;

fn main() -> cramer_bridge::Result<()> {
    let mut rng = stream_rng(5, 0);
    let inst = random_lp_instance(&mut rng, 4, 2);
    let (tau, _) = lp_vertex_oracle(&inst)?;
    let d = inst.c.len() as f64;
    println!("random 2x4 instance; vertex-oracle LP value tau(y) = {tau:.10}\n");

    println!("     eps      <lambda_eps, y>    gap to tau     eps*d      certificate");
    for eps in [1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-5] {
        let (lam, _) = barrier_dual_solve(&inst, eps)?;
        let x = central_path_primal(&inst, &lam, eps);
        let cert = (inst.c.dot(&x) - lam.dot(&inst.y) - eps * d).abs();
        let dual_value = lam.dot(&inst.y);
        println!(
            "{eps:>9.0e}  {dual_value:>16.10}  {:>12.3e}  {:>9.3e}  {cert:>12.3e}",
            tau - dual_value,
            eps * d
        );
    }

    let limit = theta_and_perspective(&inst.maxent_problem()?, &inst.y, 0.0)?;
    println!("\nperspective limit at eps = 0 returns the LP value: {limit:.10}");
    Ok(())
}
