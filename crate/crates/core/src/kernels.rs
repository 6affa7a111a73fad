//! Light-cone field kernels for the velocity (`a`) and acceleration (`∇_p b`)
//! terms, with `ω` pointing from the source to the observer.

use crate::error::{Error, Result};
use crate::kinematics::{energy, velocity};
use crate::model::{Momentum3, UnitVector3};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Sharp supremum of `|a|/W` is `3√3/4 ≈ 1.29904`; rounded up.
pub const KERNEL_BOUND_A: f64 = 1.3;
/// Supremum of `‖∇_p b‖_F / W` approaches `2√2 ≈ 2.82843` head-on as `|p| → ∞`; rounded up.
pub const KERNEL_BOUND_B: f64 = 2.83;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEval {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    /// `∂b^i/∂p_j`.
    pub grad_p_b: Matrix3<f64>,
}

/// `1 − v·ω`, bounded below by `1 − |v| > 0`.
pub fn denominator(omega: &UnitVector3, p: &Momentum3) -> f64 {
    1.0 - velocity(p).dot(omega)
}

/// `a = (ω − v)(1 − |v|²)/(1 − v·ω)²`.
pub fn kernel_a(omega: &UnitVector3, p: &Momentum3) -> Vector3<f64> {
    let v = velocity(p);
    let d = 1.0 - v.dot(omega);
    (omega.into_inner() - v) * ((1.0 - v.norm_squared()) / (d * d))
}

/// `b = (ω − v)/(1 − v·ω)`.
pub fn kernel_b(omega: &UnitVector3, p: &Momentum3) -> Vector3<f64> {
    let v = velocity(p);
    (omega.into_inner() - v) / (1.0 - v.dot(omega))
}

/// `∇_p b = ∂b/∂v · ∂v/∂p` with `∂v/∂p = (I − v vᵀ)/W`.
pub fn kernel_grad_b(omega: &UnitVector3, p: &Momentum3) -> Matrix3<f64> {
    let w = energy(p);
    let v = p / w;
    let om = omega.into_inner();
    let d = 1.0 - v.dot(&om);
    let db_dv = ((om - v) * om.transpose() - Matrix3::identity() * d) / (d * d);
    let dv_dp = (Matrix3::identity() - v * v.transpose()) / w;
    db_dv * dv_dp
}

pub fn evaluate(omega: &UnitVector3, p: &Momentum3) -> KernelEval {
    KernelEval {
        a: kernel_a(omega, p),
        b: kernel_b(omega, p),
        grad_p_b: kernel_grad_b(omega, p),
    }
}

/// Where in `(|p|, cos∠(p, ω))` a sweep found its largest ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub ratio: f64,
    pub p_norm: f64,
    pub cos_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelBoundReport {
    pub samples: usize,
    /// Empirical `sup |a|/W`.
    pub c_a: f64,
    /// Empirical `sup ‖∇_p b‖_F/W`.
    pub c_b: f64,
    pub argmax_a: SweepPoint,
    pub argmax_b: SweepPoint,
    /// `(decade lower edge of |p|, sup |a|/W, sup ‖∇_p b‖/W)` per decade.
    pub per_decade: Vec<(f64, f64, f64)>,
}

const SWEEP_CHUNK: usize = 4096;
const LOG_P_MIN: f64 = -3.0;
const LOG_P_MAX: f64 = 3.0;

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let u: f64 = rng.random_range(-1.0..1.0);
    let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - u * u).sqrt();
    Vector3::new(s * th.cos(), s * th.sin(), u)
}

struct Sample {
    p_norm: f64,
    cos_angle: f64,
    ra: f64,
    rb: f64,
}

fn draw(rng: &mut ChaCha8Rng) -> Sample {
    let p_norm = 10f64.powf(rng.random_range(LOG_P_MIN..LOG_P_MAX));
    let dir = random_unit(rng);
    let p = dir * p_norm;
    let w = energy(&p);
    // Half the samples concentrate in the forward cone of opening ~1/W where
    // both ratios peak; the rest cover the sphere uniformly.
    let omega = if rng.random::<bool>() {
        random_unit(rng)
    } else {
        let alpha = rng.random_range(0.0..(4.0 / w).min(std::f64::consts::PI));
        let perp = {
            let r = random_unit(rng);
            let q = r - dir * r.dot(&dir);
            q / q.norm().max(1e-300)
        };
        dir * alpha.cos() + perp * alpha.sin()
    };
    let omega = UnitVector3::new_normalize(omega);
    Sample {
        p_norm,
        cos_angle: omega.dot(&dir),
        ra: kernel_a(&omega, &p).norm() / w,
        rb: kernel_grad_b(&omega, &p).norm() / w,
    }
}

/// Dense random sweep of `|a|/W` and `‖∇_p b‖_F/W` over `|p| ∈ [1e-3, 1e3]`.
/// Deterministic for a given `(samples, seed)` regardless of thread count.
/// Any ratio above the frozen module constants is a kernel bug.
pub fn verify_kernel_bound(samples: usize, seed: u64) -> Result<KernelBoundReport> {
    if samples < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "kernel sweep needs at least 1e4 samples, got {samples}"
        )));
    }
    let decades = (LOG_P_MAX - LOG_P_MIN) as usize;
    let chunks = samples.div_ceil(SWEEP_CHUNK);
    type Acc = (SweepPoint, SweepPoint, Vec<(f64, f64)>);
    let empty = || -> Acc {
        let z = SweepPoint {
            ratio: 0.0,
            p_norm: 0.0,
            cos_angle: 0.0,
        };
        (z, z, vec![(0.0, 0.0); decades])
    };
    let partials: Vec<Acc> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let n = SWEEP_CHUNK.min(samples - c * SWEEP_CHUNK);
            let mut acc = empty();
            for _ in 0..n {
                let s = draw(&mut rng);
                if s.ra > acc.0.ratio {
                    acc.0 = SweepPoint { ratio: s.ra, p_norm: s.p_norm, cos_angle: s.cos_angle };
                }
                if s.rb > acc.1.ratio {
                    acc.1 = SweepPoint { ratio: s.rb, p_norm: s.p_norm, cos_angle: s.cos_angle };
                }
                let d = ((s.p_norm.log10() - LOG_P_MIN).floor().max(0.0) as usize).min(decades - 1);
                acc.2[d].0 = acc.2[d].0.max(s.ra);
                acc.2[d].1 = acc.2[d].1.max(s.rb);
            }
            acc
        })
        .collect();
    let mut total = empty();
    for part in partials {
        if part.0.ratio > total.0.ratio {
            total.0 = part.0;
        }
        if part.1.ratio > total.1.ratio {
            total.1 = part.1;
        }
        for (t, p) in total.2.iter_mut().zip(part.2) {
            t.0 = t.0.max(p.0);
            t.1 = t.1.max(p.1);
        }
    }
    let report = KernelBoundReport {
        samples,
        c_a: total.0.ratio,
        c_b: total.1.ratio,
        argmax_a: total.0,
        argmax_b: total.1,
        per_decade: total
            .2
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| (10f64.powf(LOG_P_MIN + i as f64), a, b))
            .collect(),
    };
    if !(report.c_a.is_finite() && report.c_b.is_finite()) {
        return Err(Error::KernelBound("non-finite kernel ratio".into()));
    }
    if report.c_a > KERNEL_BOUND_A || report.c_b > KERNEL_BOUND_B {
        return Err(Error::KernelBound(format!(
            "sampled ratios ({}, {}) exceed the frozen constants ({KERNEL_BOUND_A}, {KERNEL_BOUND_B})",
            report.c_a, report.c_b
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(x: f64, y: f64, z: f64) -> UnitVector3 {
        UnitVector3::new_normalize(Vector3::new(x, y, z))
    }

    #[test]
    fn rest_values() {
        let om = unit(0.3, -0.2, 0.9);
        assert!((kernel_a(&om, &Vector3::zeros()) - om.into_inner()).norm() < 1e-15);
        let g = kernel_grad_b(&om, &Vector3::zeros());
        let expect = -Matrix3::identity() + om.into_inner() * om.transpose();
        assert!((g - expect).norm() < 1e-15);
    }

    #[test]
    fn perpendicular_hand_value() {
        // |v| = 0.6 along x needs |p| = 0.75.
        let p = Vector3::new(0.75, 0.0, 0.0);
        let om = unit(0.0, 1.0, 0.0);
        let expect = (om.into_inner() - Vector3::new(0.6, 0.0, 0.0)) * 0.64;
        assert!((kernel_a(&om, &p) - expect).norm() < 1e-15);
    }

    #[test]
    fn head_on_b_ratio_approaches_two_root_two() {
        let p = Vector3::new(1e3, 0.0, 0.0);
        let r = kernel_grad_b(&unit(1.0, 0.0, 0.0), &p).norm() / energy(&p);
        assert!((r - 2.0 * 2f64.sqrt()).abs() < 1e-5);
        assert!(r < KERNEL_BOUND_B);
    }

    #[test]
    fn a_ratio_supremum_is_three_root_three_over_four() {
        // Maximize |a|/W over the angle at a fixed speed, then over speeds.
        let mut best: f64 = 0.0;
        for i in 1..400 {
            let pn = 10f64.powf(-2.0 + 4.0 * i as f64 / 400.0);
            let p = Vector3::new(pn, 0.0, 0.0);
            for j in 0..2000 {
                let c = 1.0 - 2.0 * j as f64 / 1999.0;
                let om = unit(c, (1.0 - c * c).max(0.0).sqrt(), 0.0);
                best = best.max(kernel_a(&om, &p).norm() / energy(&p));
            }
        }
        assert!((best - 0.75 * 3f64.sqrt()).abs() < 1e-3, "{best}");
    }

    #[test]
    fn sweep_rejects_small_sample_counts() {
        assert!(verify_kernel_bound(100, 1).is_err());
    }

    #[test]
    fn sweep_is_deterministic() {
        let a = verify_kernel_bound(20_000, 3).unwrap();
        let b = verify_kernel_bound(20_000, 3).unwrap();
        assert_eq!(a, b);
    }
}
