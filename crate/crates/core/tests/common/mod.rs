//! Reference computations that share no code with the library estimators.
#![allow(dead_code)]

use gecsr::model::TransformMatrix;
use gecsr::{CMatrix, CVector, Complex64};
use std::f64::consts::PI;

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    // start from many panels so narrow peaks are not skipped
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            recurse(f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    (0..order)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=order {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Posterior mean and variance of `z ~ CN(mu, v)` given `y = |z + n|`,
/// `n ~ CN(0, 1)`.
///
/// `w = z + n` is `CN(mu, v + 1)`; given `|w| = y` its phase relative to
/// `arg mu` has density proportional to `exp(kappa cos t)`, integrated here
/// numerically. Conditioning `z` on `w` is Gaussian with gain `v / (v + 1)`.
pub fn phase_posterior_oracle(mu: Complex64, v: f64, y: f64) -> (Complex64, f64) {
    let kappa = 2.0 * y * mu.norm() / (v + 1.0);
    let weight = |t: f64| (kappa * (t.cos() - 1.0)).exp();
    let tol = 1e-15;
    let norm = adaptive_simpson(&weight, 0.0, PI, tol);
    // 1 - E[cos t], integrated directly to keep precision when it is tiny
    let one_minus_r = adaptive_simpson(&|t: f64| weight(t) * 2.0 * (0.5 * t).sin().powi(2), 0.0, PI, tol) / norm;
    let r = 1.0 - one_minus_r;
    let direction = if mu.norm() > 0.0 { mu / mu.norm() } else { Complex64::new(1.0, 0.0) };
    let mean_w = direction * (y * r);
    let gain = v / (v + 1.0);
    let mean = mu + (mean_w - mu) * gain;
    let var_w = y * y * one_minus_r * (1.0 + r);
    (mean, gain + gain * gain * var_w)
}

/// Posterior mean and variance of `x` under the spike-and-slab prior
/// `(1 - rho) delta + rho CN(0, 1/rho)` from `r = x + CN(0, v)`, by 2-D
/// quadrature of the slab integrals in polar coordinates around their peak.
pub fn denoiser_oracle(r: Complex64, v: f64, rho: f64) -> (Complex64, f64) {
    let slab = 1.0 / rho;
    let log_f = |x: Complex64| -(PI * slab).ln() - x.norm_sqr() / slab - (PI * v).ln() - (r - x).norm_sqr() / v;
    // the peak lies on the segment from 0 to r
    let dir = if r.norm() > 0.0 { r / r.norm() } else { Complex64::new(1.0, 0.0) };
    let along = |t: f64| log_f(dir * t);
    let (mut lo, mut hi) = (0.0, r.norm());
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if along(a) < along(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    let centre = dir * (0.5 * (lo + hi));
    let t0 = 0.5 * (lo + hi);
    let h = 1e-3 * (1.0 + t0);
    let curvature = -(along(t0 + h) - 2.0 * along(t0) + along(t0 - h)) / (h * h);
    let width = 1.0 / curvature.sqrt();
    let shift = log_f(centre);

    let nodes = gauss_legendre(40);
    let (panels, reach, angles) = (24, 14.0 * width, 96);
    let dr = reach / panels as f64;
    let (mut i0, mut i1, mut ic) = (0.0, Complex64::new(0.0, 0.0), 0.0);
    for p in 0..panels {
        for &(node, w) in &nodes {
            let rad = dr * (p as f64 + 0.5 * (node + 1.0));
            let rw = 0.5 * dr * w * rad * (2.0 * PI / angles as f64);
            for k in 0..angles {
                let offset = Complex64::from_polar(rad, 2.0 * PI * k as f64 / angles as f64);
                let f = (log_f(centre + offset) - shift).exp() * rw;
                i0 += f;
                i1 += offset * f;
                ic += rad * rad * f;
            }
        }
    }
    let slab_mean = centre + i1 / i0;
    let slab_spread = ic / i0;
    let log_slab = rho.ln() + shift + i0.ln();
    let pi = if rho < 1.0 {
        let log_spike = (1.0 - rho).ln() - (PI * v).ln() - r.norm_sqr() / v;
        1.0 / (1.0 + (log_spike - log_slab).exp())
    } else {
        1.0
    };
    let mean = slab_mean * pi;
    let second_about_centre = pi * slab_spread + (1.0 - pi) * centre.norm_sqr();
    (mean, second_about_centre - (mean - centre).norm_sqr())
}

/// Dense LMMSE estimate of `x` and `z = A x` from `x ~ CN(mx, vx I)` and
/// `mz = A x + CN(0, vz I)`; returns `(mean_x, avg var_x, mean_z, avg var_z)`.
pub fn lmmse_oracle(a: &TransformMatrix, mz: &CVector, vz: f64, mx: &CVector, vx: f64) -> (CVector, f64, CVector, f64) {
    let dense = a.to_dense();
    let (m, n) = dense.shape();
    let info = CMatrix::identity(n, n).scale(1.0 / vx) + dense.adjoint() * &dense / Complex64::new(vz, 0.0);
    let cov = info.try_inverse().expect("posterior information is invertible");
    let rhs = mx.unscale(vx) + dense.adjoint() * mz.unscale(vz);
    let x = &cov * rhs;
    let z = &dense * &x;
    let cov_z = &dense * &cov * dense.adjoint();
    (x, cov.trace().re / n as f64, z, cov_z.trace().re / m as f64)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        (got - want).abs() / want.abs()
    }
}

/// Error of a posterior mean relative to its magnitude, or to the posterior
/// spread `floor` when the mean itself is (numerically) zero.
pub fn rel_err_c(got: Complex64, want: Complex64, floor: f64) -> f64 {
    (got - want).norm() / want.norm().max(floor)
}
