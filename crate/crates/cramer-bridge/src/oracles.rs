//! Independent verification machinery: seeded reference-measure sampling,
//! Monte-Carlo moment-generating-function estimates, and finite-difference
//! gradient checks.
//!
//! All sampling uses one documented generator (`ChaCha8`, inverse-CDF
//! transforms) so that a `(seed, stream)` pair reproduces batches bit for
//! bit, including across parallel stream splits.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::maxent::{Backend, BoxDensity, MaxentProblem};

/// Generator identifier recorded in every batch.
pub const GENERATOR_ID: &str = "chacha8/inverse-cdf-v1";

/// A reproducible batch of domain samples.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub points: Vec<DVector<f64>>,
    pub seed: u64,
    pub generator_id: &'static str,
}

/// Seeded stream `(seed, stream_index)` of the shared generator.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw `n` points of `R^d_+` with independent exponential coordinates of
/// rates `c_j`, by inverse CDF on the seeded stream.
pub fn sample_orthant_exponential(c: &DVector<f64>, n: usize, seed: u64) -> Result<SampleBatch> {
    if let Some(&bad) = c.iter().find(|&&cj| cj <= 0.0) {
        return Err(Error::InvalidRate(bad));
    }
    let mut rng = stream_rng(seed, 0);
    let d = c.len();
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut x = DVector::<f64>::zeros(d);
        for j in 0..d {
            let u: f64 = rng.random();
            // -ln(1 - u) / c_j, with ln_1p for accuracy near u = 0.
            x[j] = -(-u).ln_1p() / c[j];
        }
        points.push(x);
    }
    Ok(SampleBatch {
        points,
        seed,
        generator_id: GENERATOR_ID,
    })
}

/// Draw `n` points of a box under the catalogued density (inverse CDF per
/// axis). Used by the pushforward histogram for the box backend.
pub fn sample_box(bounds: &[(f64, f64)], density: BoxDensity, n: usize, seed: u64) -> SampleBatch {
    let mut rng = stream_rng(seed, 0);
    let d = bounds.len();
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut x = DVector::<f64>::zeros(d);
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            let u: f64 = rng.random();
            x[j] = match density {
                BoxDensity::Uniform => lo + u * (hi - lo),
                BoxDensity::ExpDecay => {
                    // Truncated unit-rate exponential on [lo, hi].
                    let (elo, ehi) = ((-lo).exp(), (-hi).exp());
                    -(elo - u * (elo - ehi)).ln()
                }
            };
        }
        points.push(x);
    }
    SampleBatch {
        points,
        seed,
        generator_id: GENERATOR_ID,
    }
}

/// Samples of the reference measure of a problem, when the backend supports
/// direct sampling.
pub fn sample_reference(problem: &MaxentProblem, n: usize, seed: u64) -> Result<SampleBatch> {
    match problem.backend() {
        Backend::LpOrthant { c, .. } => sample_orthant_exponential(c, n, seed),
        Backend::BoxQuadrature {
            bounds, density, ..
        } => Ok(sample_box(bounds, *density, n, seed)),
        Backend::SdpCone { .. } => Err(Error::SamplingUnsupported(
            "PSD cone; see the Monte-Carlo cone integral oracle".into(),
        )),
    }
}

/// Monte-Carlo estimate of `Z(lambda) = E_P[exp(<lambda, h(X)>)]` from a
/// batch of `P`-samples, with its standard error.
///
/// The MGF domain is checked analytically (empirical averages of divergent
/// MGFs fail silently, so membership is never inferred from the sample).
pub fn mc_mgf(
    batch: &SampleBatch,
    problem: &MaxentProblem,
    lambda: &DVector<f64>,
) -> Result<(f64, f64)> {
    match problem.backend() {
        Backend::LpOrthant { a, c } => {
            let slack = c - a.transpose() * lambda;
            if let Some(j) = slack.iter().position(|&s| s <= 0.0) {
                return Err(Error::DomainViolation(format!(
                    "MGF diverges: slack (c - A^T lambda)_{} = {:e}",
                    j + 1,
                    slack[j]
                )));
            }
        }
        Backend::BoxQuadrature { .. } => {} // bounded domain: MGF entire
        Backend::SdpCone { .. } => {
            return Err(Error::SamplingUnsupported(
                "PSD cone has no sample batches".into(),
            ))
        }
    }
    let n = batch.points.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty sample batch".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for x in &batch.points {
        let h =
            crate::maxent::moment_map_at(problem, &crate::maxent::DomainPoint::Vector(x.clone()))?;
        let w = lambda.dot(&h).exp();
        sum += w;
        sum_sq += w * w;
    }
    let mean = sum / n as f64;
    let var = ((sum_sq / n as f64) - mean * mean).max(0.0);
    Ok((mean, (var / n as f64).sqrt()))
}

/// Max absolute discrepancy between `grad_f(at)` and central finite
/// differences of `f`, coordinate by coordinate.
pub fn finite_diff_check<F, G>(f: F, grad_f: G, at: &DVector<f64>, step: f64) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
    G: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    if step <= 0.0 {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let grad = grad_f(at)?;
    let mut worst = 0.0_f64;
    for i in 0..at.len() {
        let mut plus = at.clone();
        plus[i] += step;
        let mut minus = at.clone();
        minus[i] -= step;
        let fp = match f(&plus) {
            Ok(v) => v,
            Err(Error::DomainViolation(_)) | Err(Error::NotPositiveDefinite) => {
                return Err(Error::StepTooLarge)
            }
            Err(e) => return Err(e),
        };
        let fm = match f(&minus) {
            Ok(v) => v,
            Err(Error::DomainViolation(_)) | Err(Error::NotPositiveDefinite) => {
                return Err(Error::StepTooLarge)
            }
            Err(e) => return Err(e),
        };
        let fd = (fp - fm) / (2.0 * step);
        worst = worst.max((fd - grad[i]).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxent::{log_partition, log_partition_derivatives};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn e1() -> MaxentProblem {
        MaxentProblem::new(
            Backend::LpOrthant {
                a: DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
                c: DVector::from_row_slice(&[1.0, 2.0]),
            },
            DVector::from_element(1, 1.5),
        )
        .unwrap()
    }

    #[test]
    fn exponential_sample_means() {
        let c = DVector::from_row_slice(&[1.0, 2.0]);
        let n = 200_000;
        let batch = sample_orthant_exponential(&c, n, 3).unwrap();
        let mut mean = DVector::<f64>::zeros(2);
        for x in &batch.points {
            mean += x;
        }
        mean /= n as f64;
        // Exponential mean is 1/c_j; std error of the mean is 1/(c_j sqrt(n)).
        assert!((mean[0] - 1.0).abs() < 3.0 / (n as f64).sqrt());
        assert!((mean[1] - 0.5).abs() < 3.0 / (2.0 * (n as f64).sqrt()));
    }

    #[test]
    fn empty_batch_and_invalid_rate() {
        let c = DVector::from_row_slice(&[1.0, 2.0]);
        let batch = sample_orthant_exponential(&c, 0, 3).unwrap();
        assert!(batch.points.is_empty());
        let bad = DVector::from_row_slice(&[0.0, 1.0]);
        assert!(matches!(
            sample_orthant_exponential(&bad, 10, 3),
            Err(Error::InvalidRate(_))
        ));
    }

    #[test]
    fn box_sampling_matches_quadrature_moments() {
        let p = MaxentProblem::new(
            Backend::BoxQuadrature {
                bounds: vec![(0.0, 1.0), (0.0, 2.0)],
                density: crate::maxent::BoxDensity::ExpDecay,
                map: crate::maxent::BoxMap::CoordinateSum,
            },
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        let (mean, var) = log_partition_derivatives(&p, &DVector::from_element(1, 0.0)).unwrap();
        let n = 200_000;
        let batch = sample_reference(&p, n, 11).unwrap();
        let sampled: f64 = batch.points.iter().map(|x| x[0] + x[1]).sum::<f64>() / n as f64;
        let se = (var[(0, 0)] / n as f64).sqrt();
        assert!(
            (sampled - mean[0]).abs() <= 3.0 * se,
            "sampled {sampled} mean {} se {se}",
            mean[0]
        );
    }

    #[test]
    fn batches_are_bit_reproducible() {
        let c = DVector::from_row_slice(&[1.0, 2.0]);
        let a = sample_orthant_exponential(&c, 1000, 42).unwrap();
        let b = sample_orthant_exponential(&c, 1000, 42).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.as_slice(), y.as_slice());
        }
        let other = sample_orthant_exponential(&c, 1000, 43).unwrap();
        assert_ne!(a.points[0].as_slice(), other.points[0].as_slice());
    }

    #[test]
    fn mgf_estimate_brackets_closed_form() {
        let p = e1();
        let batch =
            sample_orthant_exponential(&DVector::from_row_slice(&[1.0, 2.0]), 400_000, 7).unwrap();
        let lam = DVector::from_element(1, 0.5);
        let (est, se) = mc_mgf(&batch, &p, &lam).unwrap();
        let truth = 8.0 / 3.0;
        assert!((est - truth).abs() <= 3.0 * se, "est {est} se {se}");

        let zero = DVector::from_element(1, 0.0);
        let (est0, _) = mc_mgf(&batch, &p, &zero).unwrap();
        assert_abs_diff_eq!(est0, 1.0, epsilon = 1e-12);

        let outside = DVector::from_element(1, 1.5);
        assert!(matches!(
            mc_mgf(&batch, &p, &outside),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn finite_difference_validates_the_cone_barrier_gradient() {
        // phi on d = 2 matrices, parametrized by the lower triangle
        // (t00, t10, t11); the gradient of phi is -kappa Z^{-1}, doubled on
        // the off-diagonal parameter.
        let f = |t: &DVector<f64>| {
            crate::sdp::psd_log_barrier(&crate::problem::unpack_lower_triangle(t.as_slice())?)
        };
        let g = |t: &DVector<f64>| {
            let z = crate::problem::unpack_lower_triangle(t.as_slice())?;
            let zinv = z.clone().try_inverse().ok_or(Error::NotPositiveDefinite)?;
            let kappa = 1.5;
            Ok(DVector::from_row_slice(&[
                -kappa * zinv[(0, 0)],
                -2.0 * kappa * zinv[(1, 0)],
                -kappa * zinv[(1, 1)],
            ]))
        };
        let at = DVector::from_row_slice(&[1.0, 0.0, 1.0]); // Z = I
        let disc = finite_diff_check(f, g, &at, 1e-5).unwrap();
        assert!(disc <= 1e-6, "discrepancy {disc}");
    }

    #[test]
    fn finite_difference_validates_analytic_gradient() {
        let p = e1();
        let f = |l: &DVector<f64>| log_partition(&p, l);
        let g = |l: &DVector<f64>| log_partition_derivatives(&p, l).map(|(g, _)| g);
        let at = DVector::from_element(1, 0.0);
        let disc = finite_diff_check(f, g, &at, 1e-5).unwrap();
        assert!(disc <= 1e-8, "discrepancy {disc}");

        // Probing across the boundary at lambda close to 1 must error.
        let near_edge = DVector::from_element(1, 0.999999);
        assert!(matches!(
            finite_diff_check(f, g, &near_edge, 1e-5),
            Err(Error::StepTooLarge)
        ));
    }
}
