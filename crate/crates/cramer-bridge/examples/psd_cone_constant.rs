//! The log-det barrier constant C_d = ln Gamma_d((d+1)/2) against the
//! importance-sampling estimate of the PSD-cone integral.

use cramer_bridge::sdp::{mc_psd_integral, multivariate_gamma_constant, psd_log_barrier};
use nalgebra::DMatrix;

fn main() -> cramer_bridge::Result<()> {
    println!("d    C_d (formula)    exp(C_d)      MC integral at Z = I    z-score");
    for d in 1..=3usize {
        let c_d = multivariate_gamma_constant(d);
        let truth = c_d.exp();
        let (est, se) = mc_psd_integral(&DMatrix::identity(d, d), 2_000_000, 7)?;
        let z = if se > 0.0 {
            (est - truth).abs() / se
        } else {
            0.0
        };
        println!("{d}    {c_d:>12.8}  {truth:>12.8}  {est:>12.8} ± {se:.2e}   {z:>5.2}");
    }

    // General Z: the integral scales as det(Z)^{-(d+1)/2}.
    let z = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
    let truth = psd_log_barrier(&z)?.exp();
    let (est, se) = mc_psd_integral(&z, 2_000_000, 11)?;
    println!("\nZ = [[2, 0.3], [0.3, 1]]: exp(phi(Z)) = {truth:.8}, MC = {est:.8} ± {se:.2e}");
    Ok(())
}
