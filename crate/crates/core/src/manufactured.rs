//! Retarded solutions of Maxwell's equations for prescribed sources, used to
//! validate the field machinery and the Poynting identity.

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec, Quantity};
use crate::model::{FieldSample, Mollifier, Position3};
use crate::quadrature::{GaussRule, SphereRule};
use crate::spherical_mean::gaussian_sphere_mean;
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;

/// Prescribed `(ρ, j)` with the derivatives the retarded formulas need.
pub trait ManufacturedSource: Send + Sync {
    fn name(&self) -> &'static str;
    /// Where the source is concentrated.
    fn center(&self) -> Position3 {
        Position3::zeros()
    }
    fn charge(&self, t: f64, x: &Position3) -> f64;
    fn current(&self, t: f64, x: &Position3) -> Vector3<f64>;
    fn charge_gradient(&self, t: f64, x: &Position3) -> Vector3<f64>;
    fn charge_rate(&self, t: f64, x: &Position3) -> f64;
    fn current_rate(&self, t: f64, x: &Position3) -> Vector3<f64>;
    /// `J[(i, j)] = ∂_j j_i`.
    fn current_jacobian(&self, t: f64, x: &Position3) -> Matrix3<f64>;
    /// Exact `(E, B)` for zero initial fields, when known.
    fn closed_form(&self, _t: f64, _x: &Position3) -> Option<(Vector3<f64>, Vector3<f64>)> {
        None
    }
}

fn curl(j: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(j[(2, 1)] - j[(1, 2)], j[(0, 2)] - j[(2, 0)], j[(1, 0)] - j[(0, 1)])
}

/// `(1 − cos Ωs)/Ω`, the time integral of `sin Ωs`.
fn ramp(omega: f64, s: f64) -> f64 {
    (1.0 - (omega * s).cos()) / omega
}

/// `j = ẑ sin(Ωt) G_δ(x − c)`, `ρ = −(1 − cos Ωt)/Ω ∂_z G_δ(x − c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatingDipole {
    pub omega: f64,
    pub mollifier: Mollifier,
    pub center: Position3,
}

impl OscillatingDipole {
    pub fn new(omega: f64, delta: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidArgument(format!("dipole frequency must be positive, got {omega}")));
        }
        Ok(Self { omega, mollifier: Mollifier::new(delta)?, center: Position3::zeros() })
    }

    fn tau_rule(&self, t: f64) -> Result<GaussRule> {
        let panels = ((t / (0.5 * self.mollifier.delta())).ceil() as usize).max(1);
        GaussRule::panels(0.0, t, panels, 8)
    }
}

impl ManufacturedSource for OscillatingDipole {
    fn name(&self) -> &'static str {
        "oscillating-dipole"
    }
    fn center(&self) -> Position3 {
        self.center
    }
    fn charge(&self, t: f64, x: &Position3) -> f64 {
        -ramp(self.omega, t) * self.mollifier.gradient(&(x - self.center)).z
    }
    fn current(&self, t: f64, x: &Position3) -> Vector3<f64> {
        Vector3::z() * ((self.omega * t).sin() * self.mollifier.value(&(x - self.center)))
    }
    fn charge_gradient(&self, t: f64, x: &Position3) -> Vector3<f64> {
        // ∂_i∂_z G = (−δ_iz/δ² + z x_i/δ⁴) G.
        let d = x - self.center;
        let d2 = self.mollifier.delta().powi(2);
        let g = self.mollifier.value(&d);
        let hz = (d * (d.z / (d2 * d2)) - Vector3::z() / d2) * g;
        -hz * ramp(self.omega, t)
    }
    fn charge_rate(&self, t: f64, x: &Position3) -> f64 {
        -(self.omega * t).sin() * self.mollifier.gradient(&(x - self.center)).z
    }
    fn current_rate(&self, t: f64, x: &Position3) -> Vector3<f64> {
        Vector3::z() * (self.omega * (self.omega * t).cos() * self.mollifier.value(&(x - self.center)))
    }
    fn current_jacobian(&self, t: f64, x: &Position3) -> Matrix3<f64> {
        let mut j = Matrix3::zeros();
        let g = self.mollifier.gradient(&(x - self.center)) * (self.omega * t).sin();
        j.set_row(2, &g.transpose());
        j
    }

    /// With `m(τ)` the sphere mean of the unnormalized Gaussian and `c` its peak,
    /// `E = ∫₀^t τ [ramp(t−τ) c ∇∂_z m − ẑ Ω cos(Ω(t−τ)) c m] dτ` and
    /// `B = ∫₀^t τ sin(Ω(t−τ)) c ∇m × ẑ dτ`.
    fn closed_form(&self, t: f64, x: &Position3) -> Option<(Vector3<f64>, Vector3<f64>)> {
        if t <= 0.0 {
            return Some((Vector3::zeros(), Vector3::zeros()));
        }
        let rule = self.tau_rule(t).ok()?;
        let d = x - self.center;
        let c = self.mollifier.peak();
        let (mut e, mut b) = (Vector3::zeros(), Vector3::zeros());
        for (tau, w) in rule.pairs() {
            let s = t - tau;
            let m = gaussian_sphere_mean(&d, tau, self.mollifier.delta());
            let hz: Vector3<f64> = m.hessian.column(2).into();
            e += (hz * ramp(self.omega, s) - Vector3::z() * (self.omega * (self.omega * s).cos() * m.value)) * (w * tau * c);
            b += m.gradient.cross(&Vector3::z()) * (w * tau * c * (self.omega * s).sin());
        }
        Some((e, b))
    }
}

/// No charge, no current.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZeroSource;

impl ManufacturedSource for ZeroSource {
    fn name(&self) -> &'static str {
        "zero"
    }
    fn charge(&self, _t: f64, _x: &Position3) -> f64 {
        0.0
    }
    fn current(&self, _t: f64, _x: &Position3) -> Vector3<f64> {
        Vector3::zeros()
    }
    fn charge_gradient(&self, _t: f64, _x: &Position3) -> Vector3<f64> {
        Vector3::zeros()
    }
    fn charge_rate(&self, _t: f64, _x: &Position3) -> f64 {
        0.0
    }
    fn current_rate(&self, _t: f64, _x: &Position3) -> Vector3<f64> {
        Vector3::zeros()
    }
    fn current_jacobian(&self, _t: f64, _x: &Position3) -> Matrix3<f64> {
        Matrix3::zeros()
    }
    fn closed_form(&self, _t: f64, _x: &Position3) -> Option<(Vector3<f64>, Vector3<f64>)> {
        Some((Vector3::zeros(), Vector3::zeros()))
    }
}

/// Largest `|∂_tρ + ∇·j|` and `|ρ(0)|` over a lattice around the source.
pub fn continuity_residual(source: &dyn ManufacturedSource, t: f64, extent: f64) -> f64 {
    let c = source.center();
    let mut worst: f64 = 0.0;
    for i in -3..=3 {
        for j in -3..=3 {
            for k in -3..=3 {
                let x = c + Vector3::new(i as f64, j as f64, k as f64) * (extent / 3.0) + Vector3::new(0.013, -0.007, 0.011);
                worst = worst.max(source.charge(0.0, &x).abs());
                for s in [0.0, 0.37 * t, t] {
                    let r = source.charge_rate(s, &x) + source.current_jacobian(s, &x).trace();
                    worst = worst.max(r.abs());
                }
            }
        }
    }
    worst
}

/// Tolerance above which a source is rejected.
pub const CONTINUITY_TOLERANCE: f64 = 1e-10;

pub fn check_continuity(source: &dyn ManufacturedSource, t: f64, extent: f64) -> Result<()> {
    let residual = continuity_residual(source, t, extent);
    if !(residual <= CONTINUITY_TOLERANCE) {
        return Err(Error::ContinuityViolation { residual });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ManufacturedRoute {
    /// The source's exact formula.
    ClosedForm,
    /// Time-domain quadrature over the backward cone with sphere means.
    Cone,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedOptions {
    pub route: ManufacturedRoute,
    /// Gauss nodes per τ panel and panel width for the cone route.
    pub tau_order: usize,
    pub tau_panel: f64,
    pub sphere: SphereRule,
    /// Finite-difference steps for the residuals.
    pub fd_h: f64,
    pub fd_dt: f64,
}

impl Default for ManufacturedOptions {
    fn default() -> Self {
        Self {
            route: ManufacturedRoute::ClosedForm,
            tau_order: 8,
            tau_panel: 0.25,
            sphere: SphereRule::new(32, 64).expect("valid sphere rule"),
            fd_h: 0.05,
            fd_dt: 0.05,
        }
    }
}

/// Cone route: `E = ∫₀^t τ M_τ[−∇ρ − ∂_t j](t−τ) dτ − t M_t[j(0)]`,
/// `B = ∫₀^t τ M_τ[∇×j](t−τ) dτ`, valid for zero initial fields and `ρ(0) ≡ 0`.
fn cone_fields(source: &dyn ManufacturedSource, t: f64, x: &Position3, opts: &ManufacturedOptions) -> Result<(Vector3<f64>, Vector3<f64>)> {
    if t <= 0.0 {
        return Ok((Vector3::zeros(), Vector3::zeros()));
    }
    let axis = {
        let a = source.center() - x;
        if a.norm() > 1e-12 { a } else { Vector3::z() }
    };
    let panels = ((t / opts.tau_panel).ceil() as usize).max(1);
    let rule = GaussRule::panels(0.0, t, panels, opts.tau_order)?;
    let (mut e, mut b) = (Vector3::zeros(), Vector3::zeros());
    for (tau, w) in rule.pairs() {
        let s = t - tau;
        let m = opts.sphere.mean(&axis, |om| {
            let y = x + om * tau;
            let f = -source.charge_gradient(s, &y) - source.current_rate(s, &y);
            let c = curl(&source.current_jacobian(s, &y));
            [f.x, f.y, f.z, c.x, c.y, c.z]
        });
        e += Vector3::new(m[0], m[1], m[2]) * (w * tau);
        b += Vector3::new(m[3], m[4], m[5]) * (w * tau);
    }
    let j0 = opts.sphere.mean(&axis, |om| {
        let j = source.current(0.0, &(x + om * t));
        [j.x, j.y, j.z]
    });
    e -= Vector3::new(j0[0], j0[1], j0[2]) * t;
    Ok((e, b))
}

/// `(E, B)` of the source at one point by the selected route.
pub fn manufactured_field(source: &dyn ManufacturedSource, t: f64, x: &Position3, opts: &ManufacturedOptions) -> Result<(Vector3<f64>, Vector3<f64>)> {
    match opts.route {
        ManufacturedRoute::ClosedForm => source.closed_form(t, x).ok_or_else(|| {
            Error::InvalidArgument(format!("source '{}' has no closed form", source.name()))
        }),
        ManufacturedRoute::Cone => cone_fields(source, t, x, opts),
    }
}

/// Pointwise residuals of the four Maxwell equations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MaxwellResiduals {
    /// `|∂_t E − ∇×B + j|`.
    pub ampere: f64,
    /// `|∂_t B + ∇×E|`.
    pub faraday: f64,
    /// `|∇·E − ρ|`.
    pub gauss_e: f64,
    /// `|∇·B|`.
    pub gauss_b: f64,
}

impl MaxwellResiduals {
    pub fn max_with(self, o: Self) -> Self {
        Self {
            ampere: self.ampere.max(o.ampere),
            faraday: self.faraday.max(o.faraday),
            gauss_e: self.gauss_e.max(o.gauss_e),
            gauss_b: self.gauss_b.max(o.gauss_b),
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.ampere, self.faraday, self.gauss_e, self.gauss_b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedSample {
    pub field: FieldSample,
    pub residuals: MaxwellResiduals,
}

/// Sixth-order central difference from samples at offsets `±h, ±2h, ±3h`.
fn fd6(f: &[Vector3<f64>; 6], h: f64) -> Vector3<f64> {
    let [m3, m2, m1, p1, p2, p3] = *f;
    (p1 - m1) * (45.0 / (60.0 * h)) - (p2 - m2) * (9.0 / (60.0 * h)) + (p3 - m3) / (60.0 * h)
}

const OFFSETS: [f64; 6] = [-3.0, -2.0, -1.0, 1.0, 2.0, 3.0];

/// Fields at `(t, x)` with sixth-order central-difference Maxwell residuals.
/// Rejects sources that violate the continuity equation.
pub fn manufactured_fields(source: &dyn ManufacturedSource, t: f64, x: &Position3, opts: &ManufacturedOptions) -> Result<ManufacturedSample> {
    if !(opts.fd_h > 0.0 && opts.fd_dt > 0.0) {
        return Err(Error::InvalidArgument("finite-difference steps must be positive".into()));
    }
    if t < 3.0 * opts.fd_dt {
        return Err(Error::InvalidArgument(format!("t = {t} leaves no room for the time stencil of {}", opts.fd_dt)));
    }
    check_continuity(source, t + 3.0 * opts.fd_dt, 3.0 * (x - source.center()).norm().max(1.0))?;
    let f = |s: f64, y: &Position3| manufactured_field(source, s, y, opts);
    let (e, b) = f(t, x)?;
    let mut de = Matrix3::zeros();
    let mut db = Matrix3::zeros();
    for a in 0..3 {
        let mut u = Vector3::zeros();
        u[a] = opts.fd_h;
        let mut ev = [Vector3::zeros(); 6];
        let mut bv = [Vector3::zeros(); 6];
        for (i, o) in OFFSETS.iter().enumerate() {
            (ev[i], bv[i]) = f(t, &(x + u * *o))?;
        }
        de.set_column(a, &fd6(&ev, opts.fd_h));
        db.set_column(a, &fd6(&bv, opts.fd_h));
    }
    let mut et = [Vector3::zeros(); 6];
    let mut bt = [Vector3::zeros(); 6];
    for (i, o) in OFFSETS.iter().enumerate() {
        (et[i], bt[i]) = f(t + o * opts.fd_dt, x)?;
    }
    let e_dot = fd6(&et, opts.fd_dt);
    let b_dot = fd6(&bt, opts.fd_dt);
    let residuals = MaxwellResiduals {
        ampere: (e_dot - curl(&db) + source.current(t, x)).norm(),
        faraday: (b_dot + curl(&de)).norm(),
        gauss_e: (de.trace() - source.charge(t, x)).abs(),
        gauss_b: db.trace().abs(),
    };
    Ok(ManufacturedSample { field: FieldSample::new(e, b), residuals })
}

/// Largest residuals over a set of probes.
pub fn max_residuals(source: &dyn ManufacturedSource, t: f64, probes: &[Position3], opts: &ManufacturedOptions) -> Result<MaxwellResiduals> {
    let all: Vec<Result<ManufacturedSample>> = probes.par_iter().map(|x| manufactured_fields(source, t, x, opts)).collect();
    all.into_iter().try_fold(MaxwellResiduals::default(), |acc, s| Ok(acc.max_with(s?.residuals)))
}

/// `E`, `B` and the source current sampled on a grid at time `t`.
pub fn sample_on_grid(source: &dyn ManufacturedSource, t: f64, spec: &GridSpec, opts: &ManufacturedOptions) -> Result<(GridField, GridField, GridField)> {
    let vals = spec
        .points()
        .par_iter()
        .map(|x| manufactured_field(source, t, x, opts).map(|(e, b)| (e, b, source.current(t, x))))
        .collect::<Result<Vec<_>>>()?;
    let mut e = Vec::with_capacity(spec.len());
    let mut b = Vec::with_capacity(spec.len());
    let mut j = Vec::with_capacity(spec.len());
    for (ev, bv, jv) in vals {
        e.push(ev);
        b.push(bv);
        j.push(jv);
    }
    Ok((
        GridField::vector(*spec, Quantity::E, t, e)?,
        GridField::vector(*spec, Quantity::B, t, b)?,
        GridField::vector(*spec, Quantity::Current, t, j)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probes() -> Vec<Position3> {
        vec![Vector3::new(0.6, 0.2, -0.3), Vector3::new(-0.4, 0.9, 0.5), Vector3::new(1.1, -0.7, 0.2)]
    }

    #[test]
    fn dipole_derivatives_match_differences() {
        let d = OscillatingDipole::new(4.0, 0.5).unwrap();
        let (t, x) = (0.7, Vector3::new(0.3, -0.2, 0.4));
        let h = 1e-6;
        let rate = (d.charge(t + h, &x) - d.charge(t - h, &x)) / (2.0 * h);
        assert!((rate - d.charge_rate(t, &x)).abs() < 1e-7);
        let jr = (d.current(t + h, &x) - d.current(t - h, &x)) / (2.0 * h);
        assert!((jr - d.current_rate(t, &x)).norm() < 1e-7);
        for a in 0..3 {
            let mut u = Vector3::zeros();
            u[a] = h;
            let g = (d.charge(t, &(x + u)) - d.charge(t, &(x - u))) / (2.0 * h);
            assert!((g - d.charge_gradient(t, &x)[a]).abs() < 1e-7);
            let col = (d.current(t, &(x + u)) - d.current(t, &(x - u))) / (2.0 * h);
            assert!((col - d.current_jacobian(t, &x).column(a)).norm() < 1e-7);
        }
        assert!(continuity_residual(&d, 1.0, 1.5) < 1e-14);
    }

    #[test]
    fn zero_source_gives_zero() {
        let opts = ManufacturedOptions::default();
        let s = manufactured_fields(&ZeroSource, 0.5, &Vector3::new(0.1, 0.2, 0.3), &opts).unwrap();
        assert_eq!(s.field.e, Vector3::zeros());
        assert_eq!(s.residuals, MaxwellResiduals::default());
    }

    #[test]
    fn closed_form_matches_cone_route() {
        let d = OscillatingDipole::new(4.0, 0.5).unwrap();
        let closed = ManufacturedOptions::default();
        let cone = ManufacturedOptions { route: ManufacturedRoute::Cone, ..Default::default() };
        for x in probes() {
            let (e1, b1) = manufactured_field(&d, 0.9, &x, &closed).unwrap();
            let (e2, b2) = manufactured_field(&d, 0.9, &x, &cone).unwrap();
            assert!((e1 - e2).norm() < 1e-9, "{e1:?} vs {e2:?}");
            assert!((b1 - b2).norm() < 1e-9, "{b1:?} vs {b2:?}");
        }
    }

    #[test]
    fn residuals_fall_at_sixth_order() {
        let d = OscillatingDipole::new(4.0, 0.5).unwrap();
        let coarse = ManufacturedOptions { fd_h: 0.1, fd_dt: 0.1, ..Default::default() };
        let fine = ManufacturedOptions { fd_h: 0.05, fd_dt: 0.05, ..Default::default() };
        let rc = max_residuals(&d, 1.0, &probes(), &coarse).unwrap();
        let rf = max_residuals(&d, 1.0, &probes(), &fine).unwrap();
        for (c, f) in rc.as_array().iter().zip(rf.as_array()) {
            assert!(c / f > 40.0, "{rc:?} vs {rf:?}");
        }
    }

    struct Broken;
    impl ManufacturedSource for Broken {
        fn name(&self) -> &'static str {
            "broken"
        }
        fn charge(&self, _t: f64, _x: &Position3) -> f64 {
            0.0
        }
        fn current(&self, t: f64, x: &Position3) -> Vector3<f64> {
            Vector3::z() * (t * (-x.norm_squared()).exp())
        }
        fn charge_gradient(&self, _t: f64, _x: &Position3) -> Vector3<f64> {
            Vector3::zeros()
        }
        fn charge_rate(&self, _t: f64, _x: &Position3) -> f64 {
            0.0
        }
        fn current_rate(&self, _t: f64, x: &Position3) -> Vector3<f64> {
            Vector3::z() * (-x.norm_squared()).exp()
        }
        fn current_jacobian(&self, t: f64, x: &Position3) -> Matrix3<f64> {
            let mut j = Matrix3::zeros();
            j.set_row(2, &(x * (-2.0 * t * (-x.norm_squared()).exp())).transpose());
            j
        }
    }

    #[test]
    fn continuity_violation_rejected() {
        let opts = ManufacturedOptions { route: ManufacturedRoute::Cone, ..Default::default() };
        let r = manufactured_fields(&Broken, 0.5, &Vector3::new(0.2, 0.0, 0.0), &opts);
        assert!(matches!(r, Err(Error::ContinuityViolation { .. })), "{r:?}");
    }
}
