use crate::{Error, Result};

/// Switch point between the power series and the large-argument expansion.
const ASYMPTOTIC_FROM: f64 = 30.0;

/// `I1(kappa) / I0(kappa)`, the mean resultant length of a von Mises
/// distribution with concentration `kappa`.
pub fn bessel_ratio(kappa: f64) -> Result<f64> {
    bessel_ratio_with_complement(kappa).map(|(r, _)| r)
}

/// Returns `(R, 1 - R)` with the complement computed without cancellation
/// for large `kappa`.
pub fn bessel_ratio_with_complement(kappa: f64) -> Result<(f64, f64)> {
    if kappa.is_nan() || kappa < 0.0 {
        return Err(Error::Domain(format!("bessel ratio needs kappa >= 0, got {kappa}")));
    }
    if kappa == 0.0 {
        return Ok((0.0, 1.0));
    }
    if kappa.is_infinite() {
        return Ok((1.0, 0.0));
    }
    if kappa <= ASYMPTOTIC_FROM {
        let r = series_ratio(kappa);
        Ok((r, 1.0 - r))
    } else {
        Ok(asymptotic_ratio(kappa))
    }
}

// I0 = sum t_k, I1 = (kappa/2) sum t_k / (k+1), t_k = (kappa^2/4)^k / (k!)^2.
// All terms are positive, so the ratio of partial sums is stable.
fn series_ratio(kappa: f64) -> f64 {
    let q = 0.25 * kappa * kappa;
    let mut term = 1.0;
    let mut s0 = 1.0;
    let mut s1 = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * k);
        s0 += term;
        s1 += term / (k + 1.0);
        if term < 1e-18 * s0 {
            break;
        }
    }
    0.5 * kappa * s1 / s0
}

// Hankel expansion I_nu(k) ~ e^k / sqrt(2 pi k) * sum_j c_j(nu),
// c_j = c_{j-1} * ((2j-1)^2 - 4 nu^2) / (8 j k). Truncated before the
// terms start to grow; at kappa > 30 the last kept term is below 1e-16.
fn asymptotic_ratio(kappa: f64) -> (f64, f64) {
    let mut c0 = 1.0;
    let mut c1 = 1.0;
    let mut s0 = 1.0;
    let mut s1 = 1.0;
    // s0 - s1, accumulated termwise
    let mut diff = 0.0;
    for j in 1..=24 {
        let jf = j as f64;
        let odd = (2.0 * jf - 1.0).powi(2);
        let n0 = c0 * odd / (8.0 * jf * kappa);
        let n1 = c1 * (odd - 4.0) / (8.0 * jf * kappa);
        if n0.abs() > c0.abs() {
            break;
        }
        c0 = n0;
        c1 = n1;
        s0 += c0;
        s1 += c1;
        diff += c0 - c1;
        if c0.abs() < 1e-18 && c1.abs() < 1e-18 {
            break;
        }
    }
    (s1 / s0, diff / s0)
}
