//! The pushforward density three ways: exact coarea quadrature, the
//! Brion-Vergne vertex formula, and a seeded Monte-Carlo histogram.

use cramer_bridge::fiber::{
    fiber_density_quadrature, pushforward_histogram, quadrature_density_on_grid, GridSpec,
};
use cramer_bridge::lp::brion_vergne_density_on_grid;
use cramer_bridge::verify::e1_instance;
use nalgebra::DVector;

fn main() -> cramer_bridge::Result<()> {
    let inst = e1_instance();
    let problem = inst.maxent_problem()?;

    let grid = GridSpec::new(vec![0.0], vec![4.0], vec![16])?;
    let quad = quadrature_density_on_grid(&inst.a, &inst.c, &grid)?;
    let bv = brion_vergne_density_on_grid(&inst, &grid)?;
    let hist = pushforward_histogram(&problem, 1_000_000, &grid, 42)?;
    let ses = hist
        .std_errors
        .as_ref()
        .expect("histograms carry standard errors");

    println!("      y    quadrature  vertex-formula   mc-histogram   (3 se)");
    for (i, center) in hist.grid.iter().enumerate() {
        println!(
            "{:>7.3}  {:>11.7}  {:>13.7}  {:>13.7}  ±{:.5}",
            center[0],
            quad.values[i],
            bv.values[i],
            hist.values[i],
            3.0 * ses[i]
        );
    }

    // The histogram serializes to the shared CSV report format.
    let v1 = fiber_density_quadrature(&inst.a, &inst.c, &DVector::from_element(1, 1.0))?;
    println!(
        "\nv(1) = {v1:.9}  (closed form 2(e^-1 - e^-2) = {:.9})",
        2.0 * ((-1.0_f64).exp() - (-2.0_f64).exp())
    );
    println!("\nfirst CSV lines of the histogram estimate:");
    for line in hist.to_csv().lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
