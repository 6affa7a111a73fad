//! Closed-form spherical means of an isotropic Gaussian.
//!
//! For `g(y) = exp(−|y|²/(2ℓ²))` the mean over the sphere `|y − x| = τ` is
//! `m(x) = exp(−(q + τ²)/(2ℓ²)) S(τ² q/ℓ⁴)` with `q = |x|²` and
//! `S(u) = sinh(√u)/√u`. Gradient and Hessian follow from `m = H(q)`.

use nalgebra::{Matrix3, Vector3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereMean {
    pub value: f64,
    pub gradient: Vector3<f64>,
    pub hessian: Matrix3<f64>,
}

/// `(E·S, E·S', E·S'')` where `E = exp(−(q+τ²)/(2ℓ²))`.
fn scaled_s(q: f64, tau: f64, ell: f64) -> (f64, f64, f64) {
    let l2 = ell * ell;
    let u = tau * tau * q / (l2 * l2);
    if u < 4.0 {
        let e = (-(q + tau * tau) / (2.0 * l2)).exp();
        // S = Σ u^k/(2k+1)!, S' = Σ (k+1) u^k/(2k+3)!, S'' = Σ (k+1)(k+2) u^k/(2k+5)!.
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        let (mut pow, mut c0, mut c1, mut c2) = (1.0, 1.0, 1.0 / 6.0, 1.0 / 120.0);
        for k in 0..60 {
            let kf = k as f64;
            s0 += pow * c0;
            s1 += (kf + 1.0) * pow * c1;
            s2 += (kf + 1.0) * (kf + 2.0) * pow * c2;
            pow *= u;
            c0 = c1;
            c1 = c2;
            c2 /= (2.0 * kf + 6.0) * (2.0 * kf + 7.0);
            if pow * c0 < 1e-18 * s0 {
                break;
            }
        }
        (e * s0, e * s1, e * s2)
    } else {
        let r = q.sqrt();
        let s = tau * r / l2;
        let a = (-(r - tau) * (r - tau) / (2.0 * l2)).exp();
        let b = (-(r + tau) * (r + tau) / (2.0 * l2)).exp();
        let (sh, ch) = (0.5 * (a - b), 0.5 * (a + b));
        (
            sh / s,
            (s * ch - sh) / (2.0 * s * s * s),
            ((s * s + 3.0) * sh - 3.0 * s * ch) / (4.0 * s.powi(5)),
        )
    }
}

/// Mean of `exp(−|y|²/(2ℓ²))` over the sphere of radius `tau` about `x`.
pub fn gaussian_sphere_mean(x: &Vector3<f64>, tau: f64, ell: f64) -> SphereMean {
    let q = x.norm_squared();
    let l2 = ell * ell;
    let kappa = tau * tau / (l2 * l2);
    let (s0, s1, s2) = scaled_s(q, tau, ell);
    let h0 = s0;
    let h1 = -s0 / (2.0 * l2) + kappa * s1;
    let h2 = s0 / (4.0 * l2 * l2) - kappa * s1 / l2 + kappa * kappa * s2;
    SphereMean {
        value: h0,
        gradient: x * (2.0 * h1),
        hessian: Matrix3::identity() * (2.0 * h1) + x * x.transpose() * (4.0 * h2),
    }
}

/// Value only, skipping the derivative bookkeeping.
pub fn gaussian_sphere_mean_value(x: &Vector3<f64>, tau: f64, ell: f64) -> f64 {
    scaled_s(x.norm_squared(), tau, ell).0
}
