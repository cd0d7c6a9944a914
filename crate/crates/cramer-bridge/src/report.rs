//! Report rows shared by the LP and SDP identity sweeps.

/// One row of an epsilon sweep: the barrier value, the scaled dual value,
/// and the identity residual `|eps Theta(y/eps) + eps ln s - tau_eps|`.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub epsilon: f64,
    pub tau_eps: f64,
    pub eps_theta: f64,
    pub residual: f64,
}

/// CSV serialization with the header `epsilon,tau_eps,eps_theta,residual`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("epsilon,tau_eps,eps_theta,residual\n");
    for r in rows {
        out.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e}\n",
            r.epsilon, r.tau_eps, r.eps_theta, r.residual
        ));
    }
    out
}
