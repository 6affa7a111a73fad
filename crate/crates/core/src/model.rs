//! Core value types shared by every module.

use crate::error::{Error, Result};
use nalgebra::{Unit, Vector3};
use std::f64::consts::PI;

pub type Position3 = Vector3<f64>;
pub type Momentum3 = Vector3<f64>;
pub type Velocity3 = Vector3<f64>;
pub type UnitVector3 = Unit<Vector3<f64>>;

/// A regularized particle: a Gaussian blob of signed charge-weight `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub x: Position3,
    pub p: Momentum3,
    pub w: f64,
}

impl Particle {
    pub fn new(x: Position3, p: Momentum3, w: f64) -> Result<Self> {
        if !(x.iter().chain(p.iter()).all(|c| c.is_finite()) && w.is_finite()) {
            return Err(Error::InvalidScenario(
                "particle components must be finite".into(),
            ));
        }
        if w == 0.0 {
            return Err(Error::InvalidScenario("particle weight must be nonzero".into()));
        }
        Ok(Self { x, p, w })
    }
}

/// Split of a field sample into the three pieces of the light-cone
/// representation. All six vectors carry the 4π factor, so
/// `4π E = e_hom + e_t + e_s` and likewise for `B`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldDecomposition {
    pub e_hom: Vector3<f64>,
    pub e_t: Vector3<f64>,
    pub e_s: Vector3<f64>,
    pub b_hom: Vector3<f64>,
    pub b_t: Vector3<f64>,
    pub b_s: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldSample {
    pub e: Vector3<f64>,
    pub b: Vector3<f64>,
    pub decomposition: Option<FieldDecomposition>,
}

impl FieldSample {
    pub fn new(e: Vector3<f64>, b: Vector3<f64>) -> Self {
        Self {
            e,
            b,
            decomposition: None,
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Assemble `E`, `B` from the 4π-scaled pieces.
    pub fn from_decomposition(d: FieldDecomposition) -> Self {
        let s = 1.0 / (4.0 * PI);
        Self {
            e: (d.e_hom + d.e_t + d.e_s) * s,
            b: (d.b_hom + d.b_t + d.b_s) * s,
            decomposition: Some(d),
        }
    }

    /// Pointwise bound on the Lorentz force, |K| <= |E| + |B|.
    pub fn kbar(&self) -> f64 {
        self.e.norm() + self.b.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().chain(self.b.iter()).all(|c| c.is_finite())
    }
}

/// Fraction of a unit Gaussian blob's charge inside radius `s` (in units of δ):
/// `erf(s/√2) − √(2/π) s e^{−s²/2}`.
pub fn enclosed_fraction(s: f64) -> f64 {
    let s = s.abs();
    if s < 0.5 {
        // Power series avoids the cancellation between the two terms.
        let s2 = s * s;
        let mut term = s * s2;
        let mut sum = 0.0;
        let mut k = 0.0;
        loop {
            let add = term / (2.0 * k + 3.0);
            sum += add;
            if add.abs() < 1e-18 * sum.abs() {
                break;
            }
            k += 1.0;
            term *= -s2 / (2.0 * k);
        }
        (2.0 / PI).sqrt() * sum
    } else {
        libm::erf(s / std::f64::consts::SQRT_2) - (2.0 / PI).sqrt() * s * (-0.5 * s * s).exp()
    }
}

/// Derivative of [`enclosed_fraction`].
pub fn enclosed_fraction_derivative(s: f64) -> f64 {
    (2.0 / PI).sqrt() * s * s * (-0.5 * s * s).exp()
}

/// Normalized Gaussian bump `G_δ(x) = (2πδ²)^{-3/2} exp(−|x|²/(2δ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mollifier {
    delta: f64,
}

impl Mollifier {
    /// Deposition ignores the blob beyond this many radii.
    pub const CUTOFF_RADII: f64 = 5.0;

    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidScenario(format!(
                "mollifier radius must be positive, got {delta}"
            )));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn peak(&self) -> f64 {
        (2.0 * PI * self.delta * self.delta).powf(-1.5)
    }

    pub fn value(&self, x: &Vector3<f64>) -> f64 {
        self.peak() * (-x.norm_squared() / (2.0 * self.delta * self.delta)).exp()
    }

    pub fn gradient(&self, x: &Vector3<f64>) -> Vector3<f64> {
        -x * (self.value(x) / (self.delta * self.delta))
    }

    pub fn cutoff_radius(&self) -> f64 {
        Self::CUTOFF_RADII * self.delta
    }

    /// Charge fraction within distance `r` of the blob centre.
    pub fn enclosed(&self, r: f64) -> f64 {
        enclosed_fraction(r / self.delta)
    }
}

/// Normalize a vector into a [`UnitVector3`], rejecting zero or non-finite input.
pub fn unit_vector(v: Vector3<f64>) -> Result<UnitVector3> {
    let n = v.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "cannot normalize vector {:?}",
            v.as_slice()
        )));
    }
    Ok(Unit::new_unchecked(v / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enclosed_fraction_at_one_radius() {
        // erf(1/√2) − √(2/π) e^{−1/2}
        let direct = libm::erf(1.0 / 2f64.sqrt()) - (2.0 / PI).sqrt() * (-0.5f64).exp();
        assert!((enclosed_fraction(1.0) - direct).abs() < 1e-15);
        assert!((enclosed_fraction(1.0) - 0.198748).abs() < 1e-6);
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        let s: f64 = 0.5 - 1e-9;
        let closed = libm::erf(s / 2f64.sqrt()) - (2.0 / PI).sqrt() * s * (-0.5 * s * s).exp();
        assert!((enclosed_fraction(s) - closed).abs() < 1e-15);
    }

    #[test]
    fn enclosed_fraction_matches_radial_quadrature() {
        // ∫_0^s 4π r² G_1(r) dr by composite Simpson.
        let s = 2.3;
        let n = 2000;
        let h = s / n as f64;
        let g = |r: f64| 4.0 * PI * r * r * (2.0 * PI).powf(-1.5) * (-0.5 * r * r).exp();
        let mut acc = g(0.0) + g(s);
        for i in 1..n {
            acc += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        assert!((acc * h / 3.0 - enclosed_fraction(s)).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        for &s in &[0.1, 0.7, 1.5, 3.0] {
            let h = 1e-6;
            let fd = (enclosed_fraction(s + h) - enclosed_fraction(s - h)) / (2.0 * h);
            assert!((fd - enclosed_fraction_derivative(s)).abs() < 1e-9);
        }
    }

    #[test]
    fn mollifier_peak_for_unit_radius() {
        let m = Mollifier::new(1.0).unwrap();
        assert!((2.0 * m.peak() - 0.126987).abs() < 1e-6);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(Mollifier::new(0.0).is_err());
        assert!(Particle::new(Vector3::zeros(), Vector3::zeros(), 0.0).is_err());
        assert!(Particle::new(Vector3::new(f64::NAN, 0.0, 0.0), Vector3::zeros(), 1.0).is_err());
        assert!(unit_vector(Vector3::zeros()).is_err());
    }

    #[test]
    fn decomposition_assembly_identity() {
        let d = FieldDecomposition {
            e_hom: Vector3::new(1.0, -2.0, 0.5),
            e_t: Vector3::new(0.3, 0.1, -0.7),
            e_s: Vector3::new(-0.2, 0.4, 0.9),
            ..Default::default()
        };
        let f = FieldSample::from_decomposition(d);
        let sum = d.e_hom + d.e_t + d.e_s;
        assert!((f.e * 4.0 * PI - sum).norm() <= 1e-12 * sum.norm());
    }
}
