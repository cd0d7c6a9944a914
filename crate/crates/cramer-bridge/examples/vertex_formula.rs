//! Feasible-basis machinery: dual vectors, reduced costs, the Brion-Vergne
//! density formula, and the partial-fraction form of the partition function.

use cramer_bridge::log_partition;
use cramer_bridge::lp::{
    brion_vergne_density, enumerate_feasible_bases, lp_vertex_oracle, normalize_instance,
};
use nalgebra::{DMatrix, DVector};

fn main() -> cramer_bridge::Result<()> {
    let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
    let c = DVector::from_row_slice(&[1.0, 2.0, 3.0]);
    let inst = normalize_instance(&a, &c, &DVector::from_element(1, 1.0), None)?;

    let catalog = enumerate_feasible_bases(&inst)?;
    println!("feasible bases of min {{<c,x> : sum x = 1, x >= 0}} with c = (1,2,3):");
    for b in &catalog.bases {
        println!(
            "  sigma = {:?}: x_sigma = {:.4}, pi_sigma = {:.4}, |det| = {:.4}, reduced costs {:?}",
            b.sigma,
            b.x_sigma[0],
            b.pi_sigma[0],
            b.det_abs,
            b.reduced_costs
                .iter()
                .map(|(j, rc)| format!("c_{} -> {rc:+.3}", j + 1))
                .collect::<Vec<_>>()
        );
    }

    let (tau, x_star) = lp_vertex_oracle(&inst)?;
    println!(
        "\nvertex oracle: tau(1) = {tau:.6} at x* = {:?}",
        x_star.as_slice()
    );

    let v = brion_vergne_density(&catalog, &inst)?;
    println!("vertex-formula density v(1) = {v:.10}");
    let hypo = 3.0 * (-1.0_f64).exp() - 6.0 * (-2.0_f64).exp() + 3.0 * (-3.0_f64).exp();
    println!("hypoexponential closed form  = {hypo:.10}");

    println!("\npartial-fraction Z(lambda) vs closed form:");
    let problem = inst.maxent_problem()?;
    for lam in [-2.0, -0.5, 0.0, 0.5, 0.9] {
        let lam_v = DVector::from_element(1, lam);
        let pf = cramer_bridge::lp::partial_fraction_z(&catalog, &inst, &lam_v)?;
        let z = log_partition(&problem, &lam_v)?.exp();
        println!("  lambda {lam:>5.2}: {pf:>14.10} vs {z:>14.10}");
    }
    Ok(())
}
