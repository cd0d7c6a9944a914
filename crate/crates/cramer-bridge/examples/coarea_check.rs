//! Coarea identity checks: domain integrals of g(h(x)) against quadrature
//! of g weighted by the fiber density, including the Laplace-transform case
//! that recovers the partition function.

use cramer_bridge::fiber::{coarea_residual, integrate_density_weighted, TestFunction};
use cramer_bridge::log_partition;
use cramer_bridge::verify::e1_problem;
use nalgebra::{DMatrix, DVector};

fn main() -> cramer_bridge::Result<()> {
    let problem = e1_problem();

    println!("test function      lhs (analytic)   rhs (quadrature)   residual");
    let cases = [
        ("g = 1", TestFunction::One),
        ("g = y", TestFunction::Linear(DVector::from_element(1, 1.0))),
        (
            "g = e^{0.5 y}",
            TestFunction::Exponential(DVector::from_element(1, 0.5)),
        ),
    ];
    for (label, g) in cases {
        let check = coarea_residual(&problem, &g, 1e-12)?;
        println!(
            "{label:<16} {:>16.10} {:>18.10} {:>10.2e}",
            check.lhs, check.rhs, check.residual
        );
    }

    // The exponential case generalizes: integrating e^{lambda y} against the
    // fiber density reproduces Z(lambda) across the dual interior.
    let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let c = DVector::from_row_slice(&[1.0, 2.0]);
    println!("\nlambda     Z from density      Z closed form      rel gap");
    for lam in [-0.75, -0.25, 0.25, 0.6, 0.85] {
        let numeric = integrate_density_weighted(
            &a,
            &c,
            &TestFunction::Exponential(DVector::from_element(1, lam)),
            1e-12,
        )?;
        let closed = log_partition(&problem, &DVector::from_element(1, lam))?.exp();
        println!(
            "{lam:>6.2}  {numeric:>16.10}  {closed:>16.10}  {:>10.2e}",
            (numeric - closed).abs() / closed
        );
    }
    Ok(())
}
