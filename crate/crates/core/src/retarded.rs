//! Field evaluation at spacetime points from particle histories and initial data.

use crate::error::{Error, Result};
use crate::initial_field::InitialField;
use crate::kernels::{kernel_a, kernel_grad_b};
use crate::kinematics::velocity;
use crate::model::{FieldDecomposition, FieldSample, Mollifier, Momentum3, Position3, UnitVector3, Velocity3};
use crate::quadrature::SphereRule;
use crate::scenario::MIN_POLAR_ORDER;
use crate::trajectory::{Trajectory, TrajectoryHistory};
use nalgebra::{Matrix3, Unit, Vector3};
use std::f64::consts::PI;

/// Root of `g(σ) = t − σ − |x − X(σ)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetardedRoot {
    pub sigma: f64,
    pub y: Position3,
    pub r: f64,
}

/// A resolved source contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetardedHit {
    pub source: usize,
    pub sigma: f64,
    pub y: Position3,
    pub omega: UnitVector3,
    pub r: f64,
    pub v: Velocity3,
    pub p: Momentum3,
    pub force: Vector3<f64>,
}

/// Tolerance on `|g|` at the returned root.
pub fn retarded_tolerance(t: f64) -> f64 {
    1e-12 * (1.0 + t)
}

/// Safeguarded Newton on the strictly decreasing `g`; `None` when the whole
/// trajectory on `[0, t]` lies outside the backward light cone of `(t, x)`.
pub fn retarded_time(traj: &dyn Trajectory, t: f64, x: &Position3) -> Result<Option<RetardedRoot>> {
    let (a, b) = traj.span();
    if a > 0.0 || t > b + 1e-9 * (1.0 + b) || t < 0.0 {
        return Err(Error::RetardedTime(format!(
            "time {t} outside trajectory span [{a}, {b}]"
        )));
    }
    let tol = retarded_tolerance(t);
    let g = |s: f64| {
        let y = traj.position(s);
        let r = (x - y).norm();
        (t - s - r, y, r)
    };
    let (g0, y0, r0) = g(0.0);
    if g0 < -tol {
        return Ok(None);
    }
    if g0.abs() <= tol {
        return Ok(Some(RetardedRoot { sigma: 0.0, y: y0, r: r0 }));
    }
    let (gt, yt, rt) = g(t);
    if gt.abs() <= tol {
        return Ok(Some(RetardedRoot { sigma: t, y: yt, r: rt }));
    }
    let (mut lo, mut hi) = (0.0, t);
    let mut s = (t - rt).clamp(lo, hi);
    for _ in 0..200 {
        let (gs, y, r) = g(s);
        if gs.abs() <= tol || hi - lo <= 1e-15 * (1.0 + t) {
            return Ok(Some(RetardedRoot { sigma: s, y, r }));
        }
        if gs > 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let slope = if r > 0.0 {
            -1.0 + traj.velocity(s).dot(&((x - y) / r))
        } else {
            -1.0
        };
        if slope >= 0.0 {
            return Err(Error::RetardedTime(format!(
                "g is not decreasing at sigma = {s} (slope {slope}); trajectory is superluminal there"
            )));
        }
        let newton = s - gs / slope;
        s = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
    }
    Err(Error::RetardedTime(format!("no convergence for t = {t}")))
}

/// Sphere rule and route used for the homogeneous (initial-data) part.
#[derive(Debug, Clone, PartialEq)]
pub struct Kirchhoff {
    rule: SphereRule,
    use_closed_form: bool,
}

impl Kirchhoff {
    /// Plain Gauss-Legendre in `cos φ`; exact piece evolutions are used when offered.
    pub fn new(n_phi: usize, n_theta: usize) -> Result<Self> {
        if n_phi < MIN_POLAR_ORDER {
            return Err(Error::InvalidArgument(format!(
                "Kirchhoff polar order {n_phi} below the minimum {MIN_POLAR_ORDER}"
            )));
        }
        Ok(Self {
            rule: SphereRule::new(n_phi, n_theta)?,
            use_closed_form: true,
        })
    }

    /// Always integrate over the sphere, ignoring closed forms.
    pub fn quadrature_only(mut self) -> Self {
        self.use_closed_form = false;
        self
    }

    pub fn rule(&self) -> &SphereRule {
        &self.rule
    }
}

fn curl(j: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
}

/// Source-free evolution of the initial data by Kirchhoff's formula, piece by
/// piece, skipping pieces owned by `exclude`:
/// `E = M[E₀] + t M[(ω·∇)E₀] + t M[∇×B₀ − j₀]`,
/// `B = M[B₀] + t M[(ω·∇)B₀] − t M[∇×E₀]`, means over `|y − x| = t`.
pub fn homogeneous_field(
    t: f64,
    x: &Position3,
    initial: &dyn InitialField,
    kirchhoff: &Kirchhoff,
    exclude: Option<usize>,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let mut e = Vector3::zeros();
    let mut b = Vector3::zeros();
    for (i, piece) in initial.pieces().iter().enumerate() {
        if piece.owner.is_some() && piece.owner == exclude {
            continue;
        }
        if t == 0.0 {
            let s = initial.sample_piece(i, x);
            e += s.e;
            b += s.b;
            continue;
        }
        if kirchhoff.use_closed_form {
            if let Some((pe, pb)) = initial.propagate_piece(i, t, x) {
                e += pe;
                b += pb;
                continue;
            }
        }
        let axis = piece.center.map(|c| c - x).filter(|d| d.norm() > 1e-12).unwrap_or_else(Vector3::z);
        let m = kirchhoff.rule.mean(&axis, |w| {
            let s = initial.sample_piece(i, &(x + w * t));
            let pe = s.e + (s.grad_e * w + curl(&s.grad_b) - s.current) * t;
            let pb = s.b + (s.grad_b * w - curl(&s.grad_e)) * t;
            [pe.x, pe.y, pe.z, pb.x, pb.y, pb.z]
        });
        e += Vector3::new(m[0], m[1], m[2]);
        b += Vector3::new(m[3], m[4], m[5]);
    }
    if !(e.iter().chain(b.iter()).all(|c| c.is_finite())) {
        return Err(Error::NonFiniteField { t, x: [x.x, x.y, x.z] });
    }
    Ok((e, b))
}

/// Field of an ensemble: homogeneous part plus the velocity (T) and
/// acceleration (S) terms of every source, point-collapsed on its retarded
/// time with Jacobian `1/(1 − v·ω)`.
///
/// Near a source the point terms are scaled by the enclosed-charge fraction
/// `q_enc(r/δ)`, so a static particle reproduces its blob's Coulomb field.
pub struct FieldEvaluator<'a> {
    pub history: Option<&'a TrajectoryHistory>,
    pub initial: &'a dyn InitialField,
    pub mollifier: Mollifier,
    pub kirchhoff: Kirchhoff,
}

impl FieldEvaluator<'_> {
    /// Every contributing source, in particle order.
    pub fn hits(&self, t: f64, x: &Position3, exclude: Option<usize>) -> Result<Vec<RetardedHit>> {
        let Some(h) = self.history else {
            return Ok(Vec::new());
        };
        let mut out = Vec::with_capacity(h.len());
        for k in 0..h.len() {
            if Some(k) == exclude {
                continue;
            }
            let tv = h.track(k);
            let Some(root) = retarded_time(&tv, t, x)? else {
                continue;
            };
            if root.r == 0.0 {
                continue;
            }
            let p = tv.momentum(root.sigma);
            let force = tv.force(root.sigma).ok_or(Error::MissingForce(k))?;
            out.push(RetardedHit {
                source: k,
                sigma: root.sigma,
                y: root.y,
                omega: Unit::new_unchecked((x - root.y) / root.r),
                r: root.r,
                v: velocity(&p),
                p,
                force,
            });
        }
        Ok(out)
    }

    pub fn field_at(&self, t: f64, x: &Position3, exclude: Option<usize>) -> Result<FieldSample> {
        let (eh, bh) = homogeneous_field(t, x, self.initial, &self.kirchhoff, exclude)?;
        let mut d = FieldDecomposition {
            e_hom: eh * (4.0 * PI),
            b_hom: bh * (4.0 * PI),
            ..Default::default()
        };
        if let Some(h) = self.history {
            for hit in self.hits(t, x, exclude)? {
                let w = h.weight(hit.source) * self.mollifier.enclosed(hit.r) / (1.0 - hit.v.dot(&hit.omega));
                let et = kernel_a(&hit.omega, &hit.p) * (w / (hit.r * hit.r));
                let es = kernel_grad_b(&hit.omega, &hit.p) * hit.force * (w / hit.r);
                d.e_t += et;
                d.e_s += es;
                d.b_t += hit.omega.cross(&et);
                d.b_s += hit.omega.cross(&es);
            }
        }
        let f = FieldSample::from_decomposition(d);
        if !f.is_finite() {
            return Err(Error::NonFiniteField { t, x: [x.x, x.y, x.z] });
        }
        Ok(f)
    }
}
