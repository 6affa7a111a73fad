//! Initial electromagnetic data, selected by name at run time.
//!
//! Every initial field is a sum of pieces. A piece is either owned by one
//! particle (its blob) or free-standing; the owner is excluded when the field
//! pushes that particle. Pieces may offer an exact free-space evolution; the
//! Kirchhoff quadrature in [`crate::retarded`] is the fallback.

use crate::error::{Error, Result};
use crate::kinematics::velocity;
use crate::model::{enclosed_fraction, enclosed_fraction_derivative, FieldSample, Mollifier, Particle, Position3, Velocity3};
use crate::scenario::ScenarioConfig;
use crate::spherical_mean::gaussian_sphere_mean_value;
use nalgebra::{Matrix3, Vector3};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Fields, their Jacobians (`grad[(i, j)] = ∂_j F_i`) and the current at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InitialSample {
    pub e: Vector3<f64>,
    pub b: Vector3<f64>,
    pub grad_e: Matrix3<f64>,
    pub grad_b: Matrix3<f64>,
    pub current: Vector3<f64>,
}

impl std::ops::AddAssign for InitialSample {
    fn add_assign(&mut self, o: Self) {
        self.e += o.e;
        self.b += o.b;
        self.grad_e += o.grad_e;
        self.grad_b += o.grad_b;
        self.current += o.current;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPiece {
    /// Where the piece is concentrated; sphere rules aim their pole here.
    pub center: Option<Position3>,
    /// Particle whose self-field this piece is.
    pub owner: Option<usize>,
}

pub trait InitialField: Send + Sync {
    fn name(&self) -> &'static str;

    fn pieces(&self) -> &[FieldPiece];

    fn sample_piece(&self, piece: usize, x: &Position3) -> InitialSample;

    /// Exact `(E, B)` of the source-free evolution of one piece at time `t`.
    fn propagate_piece(&self, _piece: usize, _t: f64, _x: &Position3) -> Option<(Vector3<f64>, Vector3<f64>)> {
        None
    }

    fn sample(&self, x: &Position3, exclude: Option<usize>) -> InitialSample {
        let mut acc = InitialSample::default();
        for (i, p) in self.pieces().iter().enumerate() {
            if p.owner.is_none() || p.owner != exclude {
                acc += self.sample_piece(i, x);
            }
        }
        acc
    }

    fn field(&self, x: &Position3, exclude: Option<usize>) -> FieldSample {
        let s = self.sample(x, exclude);
        FieldSample::new(s.e, s.b)
    }
}

/// Electrostatic field of a Gaussian blob of total charge `q` centred at
/// `center`: `E = q q_enc(r/δ) x̂ / (4π r²)`, so that `div E = q G_δ`.
pub fn initial_field_poisson(x: &Position3, center: &Position3, q: f64, delta: f64) -> Result<FieldSample> {
    let m = Mollifier::new(delta)?;
    Ok(FieldSample::new(coulomb_blob(x, center, q, &m).0, Vector3::zeros()))
}

/// `(E, ∂_j E_i)` of a Gaussian blob.
fn coulomb_blob(x: &Position3, center: &Position3, q: f64, m: &Mollifier) -> (Vector3<f64>, Matrix3<f64>) {
    let d = x - center;
    let r = d.norm();
    let delta = m.delta();
    let s = r / delta;
    // E = q F(r) d with F = q_enc/(4π r³); near the centre use the series of q_enc/s³.
    let (f, fprime_over_r) = if s < 1e-3 {
        let c = (2.0 / PI).sqrt() / (4.0 * PI * delta.powi(3));
        (c * (1.0 / 3.0 - s * s / 10.0), c * (-0.2) / (delta * delta))
    } else {
        let qe = enclosed_fraction(s);
        let f = qe / (4.0 * PI * r.powi(3));
        let fp = enclosed_fraction_derivative(s) / (4.0 * PI * delta * r.powi(3)) - 3.0 * qe / (4.0 * PI * r.powi(4));
        (f, fp / r)
    };
    let e = d * (q * f);
    let grad = (Matrix3::identity() * f + d * d.transpose() * fprime_over_r) * q;
    (e, grad)
}

/// A particle's blob as initial data: optional Coulomb field plus its current.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub center: Position3,
    pub weight: f64,
    pub velocity: Velocity3,
}

impl Blob {
    pub fn of(p: &Particle) -> Self {
        Self {
            center: p.x,
            weight: p.w,
            velocity: velocity(&p.p),
        }
    }

    fn sample(&self, x: &Position3, m: &Mollifier, coulomb: bool) -> InitialSample {
        let (e, grad_e) = if coulomb {
            coulomb_blob(x, &self.center, self.weight, m)
        } else {
            (Vector3::zeros(), Matrix3::zeros())
        };
        InitialSample {
            e,
            grad_e,
            current: self.velocity * (self.weight * m.value(&(x - self.center))),
            ..Default::default()
        }
    }

    /// Free evolution of the blob data. The Coulomb part reduces to the radial
    /// d'Alembert formula for its potential,
    /// `ψ = q [erf(a(r+t)) + erf(a(r−t))]/(8π r)` with `a = 1/(√2 δ)`, and the
    /// current part is `−t` times the spherical mean of the current.
    fn propagate(&self, t: f64, x: &Position3, m: &Mollifier, coulomb: bool) -> Vector3<f64> {
        let d = x - self.center;
        let r = d.norm();
        let delta = m.delta();
        let mut e = Vector3::zeros();
        if coulomb && r > 0.0 {
            let a = 1.0 / (2f64.sqrt() * delta);
            let dpsi = if r < 1e-4 * delta {
                // ψ' ≈ q r S'''(0)/(24π) with S = erf(a(r+t)) + erf(a(r−t)).
                let s3 = 4.0 * a / PI.sqrt() * (4.0 * a.powi(4) * t * t - 2.0 * a * a) * (-(a * t).powi(2)).exp();
                self.weight * r * s3 / (24.0 * PI)
            } else {
                let s = libm::erf(a * (r + t)) + libm::erf(a * (r - t));
                let sp = 2.0 * a / PI.sqrt() * ((-(a * (r + t)).powi(2)).exp() + (-(a * (r - t)).powi(2)).exp());
                self.weight * (r * sp - s) / (8.0 * PI * r * r)
            };
            e -= d * (dpsi / r);
        }
        if t > 0.0 {
            let mean_g = m.peak() * gaussian_sphere_mean_value(&d, t, delta);
            e -= self.velocity * (t * self.weight * mean_g);
        }
        e
    }
}

fn blob_pieces(blobs: &[Blob]) -> Vec<FieldPiece> {
    blobs
        .iter()
        .enumerate()
        .map(|(k, b)| FieldPiece {
            center: Some(b.center),
            owner: Some(k),
        })
        .collect()
}

/// `E₀ = B₀ = 0` with pointwise charge cancellation; the currents of the blobs remain.
pub struct ZeroFieldNeutral {
    blobs: Vec<Blob>,
    pieces: Vec<FieldPiece>,
    mollifier: Mollifier,
}

impl ZeroFieldNeutral {
    /// Co-located groups must carry zero net weight, otherwise `ρ₀ ≢ 0`.
    pub fn new(particles: &[Particle], mollifier: Mollifier) -> Result<Self> {
        let scale = particles.iter().map(|p| p.w.abs()).fold(0.0, f64::max);
        let mut seen = vec![false; particles.len()];
        for i in 0..particles.len() {
            if seen[i] {
                continue;
            }
            let mut net = 0.0;
            for j in i..particles.len() {
                if (particles[j].x - particles[i].x).norm() <= 1e-12 {
                    seen[j] = true;
                    net += particles[j].w;
                }
            }
            if net.abs() > 1e-12 * scale {
                return Err(Error::InvalidScenario(format!(
                    "zero-field-neutral needs rho0 = 0, but the group at particle {i} has net weight {net}"
                )));
            }
        }
        let blobs: Vec<Blob> = particles.iter().map(Blob::of).collect();
        Ok(Self {
            pieces: blob_pieces(&blobs),
            blobs,
            mollifier,
        })
    }
}

impl InitialField for ZeroFieldNeutral {
    fn name(&self) -> &'static str {
        "zero-field-neutral"
    }
    fn pieces(&self) -> &[FieldPiece] {
        &self.pieces
    }
    fn sample_piece(&self, piece: usize, x: &Position3) -> InitialSample {
        self.blobs[piece].sample(x, &self.mollifier, false)
    }
    fn propagate_piece(&self, piece: usize, t: f64, x: &Position3) -> Option<(Vector3<f64>, Vector3<f64>)> {
        Some((self.blobs[piece].propagate(t, x, &self.mollifier, false), Vector3::zeros()))
    }
}

/// Each particle carries the electrostatic field of its blob; `B₀ = 0`.
pub struct PoissonBlobs {
    blobs: Vec<Blob>,
    pieces: Vec<FieldPiece>,
    mollifier: Mollifier,
}

impl PoissonBlobs {
    pub fn new(particles: &[Particle], mollifier: Mollifier) -> Self {
        let blobs: Vec<Blob> = particles.iter().map(Blob::of).collect();
        Self {
            pieces: blob_pieces(&blobs),
            blobs,
            mollifier,
        }
    }
}

impl InitialField for PoissonBlobs {
    fn name(&self) -> &'static str {
        "poisson-blob"
    }
    fn pieces(&self) -> &[FieldPiece] {
        &self.pieces
    }
    fn sample_piece(&self, piece: usize, x: &Position3) -> InitialSample {
        self.blobs[piece].sample(x, &self.mollifier, true)
    }
    fn propagate_piece(&self, piece: usize, t: f64, x: &Position3) -> Option<(Vector3<f64>, Vector3<f64>)> {
        Some((self.blobs[piece].propagate(t, x, &self.mollifier, true), Vector3::zeros()))
    }
}

/// Divergence-free electric vortex `E = A ∇×(ẑ ψ)`, `ψ = exp(−|x−c|²/(2L²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub amplitude: f64,
    pub width: f64,
    pub center: Position3,
}

impl Pulse {
    pub fn sample(&self, x: &Position3) -> InitialSample {
        let d = x - self.center;
        let l2 = self.width * self.width;
        let psi = (-d.norm_squared() / (2.0 * l2)).exp();
        let c = self.amplitude * psi / l2;
        let e = Vector3::new(-d.y, d.x, 0.0) * c;
        let mut g = Matrix3::zeros();
        for j in 0..3 {
            let dj = if j == 1 { 1.0 } else { 0.0 };
            let di = if j == 0 { 1.0 } else { 0.0 };
            g[(0, j)] = -c * (dj - d.y * d[j] / l2);
            g[(1, j)] = c * (di - d.x * d[j] / l2);
        }
        InitialSample {
            e,
            grad_e: g,
            ..Default::default()
        }
    }
}

/// Blobs as in [`PoissonBlobs`] plus a free divergence-free pulse, so the
/// constraints hold while the data carry radiation.
pub struct ManufacturedData {
    blobs: Vec<Blob>,
    pulse: Pulse,
    pieces: Vec<FieldPiece>,
    mollifier: Mollifier,
}

impl ManufacturedData {
    pub fn new(particles: &[Particle], mollifier: Mollifier, pulse: Pulse) -> Result<Self> {
        if !(pulse.width > 0.0 && pulse.amplitude.is_finite()) {
            return Err(Error::InvalidScenario("pulse needs a positive width and finite amplitude".into()));
        }
        let blobs: Vec<Blob> = particles.iter().map(Blob::of).collect();
        let mut pieces = blob_pieces(&blobs);
        pieces.push(FieldPiece {
            center: Some(pulse.center),
            owner: None,
        });
        Ok(Self {
            blobs,
            pulse,
            pieces,
            mollifier,
        })
    }
}

impl InitialField for ManufacturedData {
    fn name(&self) -> &'static str {
        "manufactured"
    }
    fn pieces(&self) -> &[FieldPiece] {
        &self.pieces
    }
    fn sample_piece(&self, piece: usize, x: &Position3) -> InitialSample {
        match self.blobs.get(piece) {
            Some(b) => b.sample(x, &self.mollifier, true),
            None => self.pulse.sample(x),
        }
    }
    fn propagate_piece(&self, piece: usize, t: f64, x: &Position3) -> Option<(Vector3<f64>, Vector3<f64>)> {
        self.blobs
            .get(piece)
            .map(|b| (b.propagate(t, x, &self.mollifier, true), Vector3::zeros()))
    }
}

pub type InitialFieldCtor = fn(&ScenarioConfig) -> Result<Box<dyn InitialField>>;

/// Name → constructor table for initial-field modes.
pub struct InitialFieldRegistry {
    entries: BTreeMap<&'static str, InitialFieldCtor>,
}

impl InitialFieldRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("zero-field-neutral", |c| {
            Ok(Box::new(ZeroFieldNeutral::new(&c.particles, Mollifier::new(c.mollifier_radius)?)?))
        });
        r.register("poisson-blob", |c| {
            Ok(Box::new(PoissonBlobs::new(&c.particles, Mollifier::new(c.mollifier_radius)?)))
        });
        r.register("manufactured", |c| {
            let pulse = c.pulse.ok_or_else(|| {
                Error::InvalidScenario("manufactured mode needs pulse_amplitude, pulse_width and pulse_center".into())
            })?;
            Ok(Box::new(ManufacturedData::new(&c.particles, Mollifier::new(c.mollifier_radius)?, pulse)?))
        });
        r
    }

    pub fn register(&mut self, name: &'static str, ctor: InitialFieldCtor) {
        self.entries.insert(name, ctor);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn build(&self, name: &str, config: &ScenarioConfig) -> Result<Box<dyn InitialField>> {
        let ctor = self.entries.get(name).ok_or_else(|| Error::UnknownStrategy {
            kind: "initial-field mode",
            name: name.to_string(),
            known: self.names().join(", "),
        })?;
        ctor(config)
    }
}
