//! Integrals over backward light cones along a characteristic.
//!
//! `𝓘_k(g; σ, t) = ∫_σ^t (s−σ)^k ∫_{|ω|=1} g(σ, X(s) − ω(s−σ)) dω ds` and
//! `I_k(g; t) = ∫_0^t 𝓘_k(g; σ, t) dσ`, with `g ≥ 0` sampled on a spacetime grid.

use crate::error::{Error, Result};
use crate::grid::{trilinear, GridSpec};
use crate::model::Position3;
use crate::quadrature::{GaussRule, SphereRule};
use crate::trajectory::Trajectory;
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// `(2π/β) ln((1+β)/(1−β))`, the sphere integral of `1/(1 − β u)`.
pub fn angular_integral_exact(beta: f64) -> f64 {
    if beta.abs() < 1e-4 {
        let b2 = beta * beta;
        4.0 * PI * (1.0 + b2 / 3.0 + b2 * b2 / 5.0)
    } else {
        2.0 * PI / beta * (beta.ln_1p() - (-beta).ln_1p())
    }
}

/// Polar breakpoints refined geometrically toward the pole at `u = 1/β`.
fn graded_breaks(beta: f64) -> Vec<f64> {
    let mut b = vec![-1.0, 0.0];
    let gap = 1.0 - beta;
    let mut d = 0.5;
    while d > 0.1 * gap && d > 1e-14 {
        b.push(1.0 - d);
        d *= 0.25;
    }
    b.push(1.0);
    b
}

/// `∫_{S²} dω/(1 − β ω₃) = ∫_{-1}^{1} 2π du/(1 − βu)` by composite Gauss
/// quadrature graded toward the near-singular end.
pub fn angular_integral(beta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!("angular integral needs 0 <= beta < 1, got {beta}")));
    }
    let rule = GaussRule::composite(&graded_breaks(beta), 16)?;
    Ok(2.0 * PI * rule.integrate(|u| 1.0 / (1.0 - beta * u)))
}

fn direction(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiSigma {
    pub y: Position3,
    /// `det ∂(y)/∂(s, φ, θ) = (Ẋ(s)·ω − 1)(s−σ)² sinφ`.
    pub jacobian: f64,
}

/// `π_σ(s, θ, φ) = X(s) − ω(θ, φ)(s − σ)` with θ azimuthal and φ polar.
pub fn pi_sigma_map(traj: &dyn Trajectory, sigma: f64, s: f64, theta: f64, phi: f64) -> Result<PiSigma> {
    if !(s > sigma) {
        return Err(Error::InvalidArgument(format!("pi_sigma needs s > sigma, got s = {s}, sigma = {sigma}")));
    }
    let (a, b) = traj.span();
    if sigma < a || s > b {
        return Err(Error::InvalidArgument(format!("[{sigma}, {s}] outside trajectory span [{a}, {b}]")));
    }
    let w = direction(theta, phi);
    let xd = traj.velocity(s);
    if xd.norm() >= 1.0 {
        return Err(Error::InvalidArgument(format!("trajectory speed {} >= 1 at s = {s}", xd.norm())));
    }
    let r = s - sigma;
    Ok(PiSigma {
        y: traj.position(s) - w * r,
        jacobian: (xd.dot(&w) - 1.0) * r * r * phi.sin(),
    })
}

/// Central-difference Jacobian determinant of `π_σ`, columns `(∂_s, ∂_φ, ∂_θ)`.
pub fn pi_sigma_jacobian_fd(traj: &dyn Trajectory, sigma: f64, s: f64, theta: f64, phi: f64, step: f64) -> Result<f64> {
    let f = |s: f64, th: f64, ph: f64| pi_sigma_map(traj, sigma, s, th, ph).map(|m| m.y);
    let cs = (f(s + step, theta, phi)? - f(s - step, theta, phi)?) / (2.0 * step);
    let cp = (f(s, theta, phi + step)? - f(s, theta, phi - step)?) / (2.0 * step);
    let ct = (f(s, theta + step, phi)? - f(s, theta - step, phi)?) / (2.0 * step);
    Ok(Matrix3::from_columns(&[cs, cp, ct]).determinant())
}

/// Non-negative scalar `g(σ, y)` on a stack of spatial grids: trilinear in
/// space, linear in time between slices.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimeGrid {
    spec: GridSpec,
    times: Vec<f64>,
    slices: Vec<Vec<f64>>,
}

impl SpacetimeGrid {
    pub fn new(spec: GridSpec, times: Vec<f64>, slices: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return Err(Error::GridMismatch("one slice per time required".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::GridMismatch("slice times must increase".into()));
        }
        for s in &slices {
            if s.len() != spec.len() {
                return Err(Error::GridMismatch(format!("slice has {} values for {} nodes", s.len(), spec.len())));
            }
            if let Some(&v) = s.iter().find(|v| !(**v >= 0.0)) {
                return Err(Error::NegativeIntegrand { value: v });
            }
        }
        Ok(Self { spec, times, slices })
    }

    /// The same value everywhere in the box.
    pub fn constant(spec: GridSpec, times: Vec<f64>, value: f64) -> Result<Self> {
        let slices = vec![vec![value; spec.len()]; times.len()];
        Self::new(spec, times, slices)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn covers(&self, a: f64, b: f64) -> bool {
        let tol = 1e-12 * (1.0 + b.abs());
        a >= self.times[0] - tol && b <= self.times[self.times.len() - 1] + tol
    }

    fn bracket(&self, sigma: f64) -> (usize, f64) {
        let n = self.times.len();
        if n == 1 {
            return (0, 0.0);
        }
        let m = self.times.partition_point(|&t| t <= sigma).clamp(1, n - 1) - 1;
        let lam = ((sigma - self.times[m]) / (self.times[m + 1] - self.times[m])).clamp(0.0, 1.0);
        (m, lam)
    }

    pub fn value(&self, sigma: f64, y: &Position3) -> f64 {
        let (m, lam) = self.bracket(sigma);
        let a = trilinear(&self.spec, &self.slices[m], y);
        if lam == 0.0 {
            a
        } else {
            (1.0 - lam) * a + lam * trilinear(&self.spec, &self.slices[m + 1], y)
        }
    }

    /// `(‖g(σ)‖_∞, ‖g(σ)‖_{L²})` of the time-interpolated slice, from node values.
    pub fn norms_at(&self, sigma: f64) -> (f64, f64) {
        let (m, lam) = self.bracket(sigma);
        let next = &self.slices[(m + 1).min(self.slices.len() - 1)];
        let (mut sup, mut sq) = (0.0f64, 0.0);
        for (a, b) in self.slices[m].iter().zip(next) {
            let v = (1.0 - lam) * a + lam * b;
            sup = sup.max(v);
            sq += v * v;
        }
        (sup, (sq * self.spec.cell_volume()).sqrt())
    }
}

/// Quadrature orders: `s_panels × s_order` Gauss nodes in each time variable
/// (plus breakpoints at the slice times) and a sphere product rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeOrders {
    pub s_panels: usize,
    pub s_order: usize,
    pub sphere: SphereRule,
}

impl ConeOrders {
    pub fn new(s_panels: usize, s_order: usize, n_phi: usize, n_theta: usize) -> Result<Self> {
        if s_panels == 0 || s_order == 0 {
            return Err(Error::InvalidArgument("cone quadrature needs positive time orders".into()));
        }
        Ok(Self { s_panels, s_order, sphere: SphereRule::new(n_phi, n_theta)? })
    }

    /// Every order doubled.
    pub fn refined(&self) -> Result<Self> {
        Self::new(
            2 * self.s_panels,
            self.s_order,
            2 * self.sphere.n_polar(),
            2 * self.sphere.n_theta(),
        )
    }

    fn directions(&self) -> Vec<(Vector3<f64>, f64)> {
        let mut out = Vec::with_capacity(self.sphere.n_polar() * self.sphere.n_theta());
        self.sphere.for_each_angle(|theta, u, w| {
            let s = (1.0 - u * u).max(0.0).sqrt();
            out.push((Vector3::new(s * theta.cos(), s * theta.sin(), u), w));
        });
        out
    }

    /// Equal panels on `[a, b]` merged with any `extra` breakpoints inside.
    fn rule(&self, a: f64, b: f64, extra: &[f64]) -> Result<GaussRule> {
        let mut br: Vec<f64> = (0..=self.s_panels)
            .map(|i| a + (b - a) * i as f64 / self.s_panels as f64)
            .collect();
        br.extend(extra.iter().copied().filter(|&x| x > a && x < b));
        br.sort_by(f64::total_cmp);
        let tol = 1e-12 * (1.0 + b.abs());
        br.dedup_by(|x, y| (*x - *y).abs() <= tol);
        GaussRule::composite(&br, self.s_order)
    }
}

impl Default for ConeOrders {
    fn default() -> Self {
        Self::new(16, 4, 32, 64).expect("valid default orders")
    }
}

pub struct ConeIntegralSpec<'a> {
    pub k: u32,
    pub trajectory: &'a dyn Trajectory,
    pub g: &'a SpacetimeGrid,
    pub sigma0: f64,
    pub t: f64,
    pub orders: ConeOrders,
}

impl ConeIntegralSpec<'_> {
    pub fn validate(&self) -> Result<()> {
        if self.k > 1 {
            return Err(Error::InvalidArgument(format!("cone integrals are defined for k in {{0, 1}}, got {}", self.k)));
        }
        if !(self.t >= self.sigma0) {
            return Err(Error::InvalidArgument(format!("window [{}, {}] is empty", self.sigma0, self.t)));
        }
        let (a, b) = self.trajectory.span();
        if self.sigma0 < a || self.t > b + 1e-12 * (1.0 + b.abs()) {
            return Err(Error::InvalidArgument(format!(
                "window [{}, {}] outside trajectory span [{a}, {b}]",
                self.sigma0, self.t
            )));
        }
        if !self.g.covers(self.sigma0, self.t) {
            return Err(Error::GridMismatch(format!("g does not cover [{}, {}]", self.sigma0, self.t)));
        }
        Ok(())
    }

    fn with_k(&self, k: u32) -> ConeIntegralSpec<'_> {
        ConeIntegralSpec { k, trajectory: self.trajectory, g: self.g, sigma0: self.sigma0, t: self.t, orders: self.orders.clone() }
    }
}

fn subluminal_at(traj: &dyn Trajectory, s: f64) -> Result<Position3> {
    let v = traj.velocity(s).norm();
    if !(v < 1.0) {
        return Err(Error::InvalidArgument(format!("trajectory speed {v} >= 1 at s = {s}")));
    }
    Ok(traj.position(s))
}

fn sphere_sum(dirs: &[(Vector3<f64>, f64)], g: &SpacetimeGrid, sigma: f64, x: &Position3, r: f64) -> f64 {
    dirs.iter().map(|(w, wt)| wt * g.value(sigma, &(x - w * r))).sum()
}

/// `𝓘_k(g; σ, t)`.
pub fn cone_integral_inner(spec: &ConeIntegralSpec<'_>, sigma: f64) -> Result<f64> {
    spec.validate()?;
    if !(sigma >= spec.sigma0 && sigma <= spec.t) {
        return Err(Error::InvalidArgument(format!("sigma {sigma} outside [{}, {}]", spec.sigma0, spec.t)));
    }
    inner(spec, &spec.orders.directions(), sigma)
}

fn inner(spec: &ConeIntegralSpec<'_>, dirs: &[(Vector3<f64>, f64)], sigma: f64) -> Result<f64> {
    if spec.t == sigma {
        return Ok(0.0);
    }
    let rule = spec.orders.rule(sigma, spec.t, &[])?;
    let mut acc = 0.0;
    for (s, ws) in rule.pairs() {
        let x = subluminal_at(spec.trajectory, s)?;
        let r = s - sigma;
        acc += ws * r.powi(spec.k as i32) * sphere_sum(dirs, spec.g, sigma, &x, r);
    }
    Ok(acc)
}

/// `∫_{σ₀}^t 𝓘_k(g; σ, t) dσ`, outer integral in σ.
pub fn cone_integral(spec: &ConeIntegralSpec<'_>) -> Result<f64> {
    spec.validate()?;
    if spec.t == spec.sigma0 {
        return Ok(0.0);
    }
    let dirs = spec.orders.directions();
    let rule = spec.orders.rule(spec.sigma0, spec.t, spec.g.times())?;
    let parts: Vec<Result<f64>> = rule
        .pairs()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(sigma, w)| inner(spec, &dirs, sigma).map(|v| w * v))
        .collect();
    parts.into_iter().sum()
}

/// `∫_{σ₀}^s (s−σ)^k ∫ g(σ, X(s) − ω(s−σ)) dω dσ`, the integrand after the Fubini swap.
fn swapped_integrand(spec: &ConeIntegralSpec<'_>, dirs: &[(Vector3<f64>, f64)], s: f64) -> Result<f64> {
    if s == spec.sigma0 {
        return Ok(0.0);
    }
    let x = subluminal_at(spec.trajectory, s)?;
    let rule = spec.orders.rule(spec.sigma0, s, spec.g.times())?;
    Ok(rule
        .pairs()
        .map(|(sigma, w)| {
            let r = s - sigma;
            w * r.powi(spec.k as i32) * sphere_sum(dirs, spec.g, sigma, &x, r)
        })
        .sum())
}

/// The same integral with the order swapped: outer in `s`, inner in `σ ∈ [σ₀, s]`.
pub fn cone_integral_swapped(spec: &ConeIntegralSpec<'_>) -> Result<f64> {
    Ok(*cumulative_cone_integral(spec, &[spec.t])?.last().unwrap_or(&0.0))
}

/// `I_k` on `[σ₀, t_m]` for each increasing `t_m ≤ t`, accumulated panel by panel.
pub fn cumulative_cone_integral(spec: &ConeIntegralSpec<'_>, ends: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    if ends.windows(2).any(|w| w[1] < w[0]) || ends.iter().any(|&e| e < spec.sigma0 || e > spec.t) {
        return Err(Error::InvalidArgument("cumulative end points must increase within the window".into()));
    }
    let dirs = spec.orders.directions();
    let mut out = Vec::with_capacity(ends.len());
    let mut acc = 0.0;
    let mut from = spec.sigma0;
    for &e in ends {
        if e > from {
            let rule = spec.orders.rule(from, e, spec.g.times())?;
            let parts: Vec<Result<f64>> = rule
                .pairs()
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|(s, w)| swapped_integrand(spec, &dirs, s).map(|v| w * v))
                .collect();
            acc += parts.into_iter().sum::<Result<f64>>()?;
            from = e;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Relative allowance for rounding in the margins; `g ≡ 1` at `σ = 0` meets
/// the sup-norm bound with equality.
pub const MARGIN_ROUND_OFF: f64 = 1e-12;

/// Constant of the bound `𝓘₀ ≤ c ‖g‖_∞ t`: the sphere area.
pub const LEMMA2_C0: f64 = 4.0 * PI;

/// Constant of `𝓘₁ ≤ c ‖g‖_{L²} (t−σ)^{−1/2} ∫_σ^t [1 + ln W̄]`. Cauchy-Schwarz
/// against `|J π_σ|` gives `𝓘₁ ≤ ‖g‖_{L²} (∫_σ^t A(|Ẋ|) ds)^{1/2}`, and
/// `A(β) ≤ 4π(1 + ln W)`, so `c = 2√π`.
pub fn lemma2_c1() -> f64 {
    2.0 * PI.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma2Margins {
    pub sigma: f64,
    pub t: f64,
    pub i0: f64,
    pub i1: f64,
    pub sup_norm: f64,
    pub l2_norm: f64,
    /// `∫_σ^t [1 + ln W̄]`.
    pub log_integral: f64,
    pub bound0: f64,
    pub bound1: f64,
    pub m0: f64,
    pub m1: f64,
    /// Explicit Cauchy-Schwarz product evaluated on the quadrature nodes.
    pub cs_bound: f64,
    pub cs_margin: f64,
}

impl Lemma2Margins {
    pub fn min_margin(&self) -> f64 {
        self.m0.min(self.m1).min(self.cs_margin)
    }
}

/// Both Lemma 2 margins at one σ, plus the explicit Cauchy-Schwarz chain.
/// `wbar` is the non-decreasing energy support `W̄(s) ≥ 1`.
pub fn verify_lemma2(spec: &ConeIntegralSpec<'_>, sigma: f64, wbar: &dyn Fn(f64) -> f64) -> Result<Lemma2Margins> {
    spec.validate()?;
    if !(sigma >= spec.sigma0 && sigma <= spec.t) {
        return Err(Error::InvalidArgument(format!("sigma {sigma} outside [{}, {}]", spec.sigma0, spec.t)));
    }
    let t = spec.t;
    let dirs = spec.orders.directions();
    let i0 = inner(&spec.with_k(0), &dirs, sigma)?;
    let i1 = inner(&spec.with_k(1), &dirs, sigma)?;
    let (sup_norm, l2_norm) = spec.g.norms_at(sigma);
    let (mut log_integral, mut g2j, mut area) = (0.0, 0.0, 0.0);
    if t > sigma {
        let rule = spec.orders.rule(sigma, t, &[])?;
        for (s, ws) in rule.pairs() {
            let w = wbar(s);
            if !(w >= 1.0) {
                return Err(Error::InvalidArgument(format!("energy support {w} < 1 at s = {s}")));
            }
            log_integral += ws * (1.0 + w.ln());
            let x = subluminal_at(spec.trajectory, s)?;
            let xd = spec.trajectory.velocity(s);
            let r = s - sigma;
            for (om, wt) in &dirs {
                let d = 1.0 - xd.dot(om);
                let g = spec.g.value(sigma, &(x - om * r));
                g2j += ws * wt * g * g * r * r * d;
                area += ws * wt / d;
            }
        }
    }
    let bound0 = LEMMA2_C0 * sup_norm * t;
    let bound1 = if t > sigma { lemma2_c1() * l2_norm * log_integral / (t - sigma).sqrt() } else { 0.0 };
    let cs_bound = (g2j * area).sqrt();
    Ok(Lemma2Margins {
        sigma,
        t,
        i0,
        i1,
        sup_norm,
        l2_norm,
        log_integral,
        bound0,
        bound1,
        m0: bound0 - i0 * (1.0 - MARGIN_ROUND_OFF),
        m1: bound1 - i1 * (1.0 - MARGIN_ROUND_OFF),
        cs_bound,
        cs_margin: cs_bound - i1 * (1.0 - MARGIN_ROUND_OFF),
    })
}

/// `(∫ ds dφ dθ |Jπ_σ| f(π_σ), ∫_{|y − X(t)| ≤ t−σ} f(y) dy)`: π_σ maps
/// `(σ, t] × S²` onto that ball, so the two must agree.
pub fn change_of_variables_check(
    traj: &dyn Trajectory,
    sigma: f64,
    t: f64,
    f: &(dyn Fn(&Position3) -> f64 + Sync),
    orders: &ConeOrders,
) -> Result<(f64, f64)> {
    if !(t > sigma) {
        return Err(Error::InvalidArgument("change of variables needs t > sigma".into()));
    }
    let dirs = orders.directions();
    let rule = orders.rule(sigma, t, &[])?;
    let mut cone = 0.0;
    for (s, ws) in rule.pairs() {
        let x = subluminal_at(traj, s)?;
        let xd = traj.velocity(s);
        let r = s - sigma;
        for (om, wt) in &dirs {
            cone += ws * wt * r * r * (1.0 - xd.dot(om)) * f(&(x - om * r));
        }
    }
    let centre = traj.position(t);
    let radial = GaussRule::panels(0.0, t - sigma, orders.s_panels, orders.s_order)?;
    let mut direct = 0.0;
    for (rho, wr) in radial.pairs() {
        for (om, wt) in &dirs {
            direct += wr * wt * rho * rho * f(&(centre + om * rho));
        }
    }
    Ok((cone, direct))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{Oscillatory, UniformMotion};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn angular_integral_examples() {
        assert!((angular_integral(0.0).unwrap() - 4.0 * PI).abs() < 1e-13);
        assert!((angular_integral(0.5).unwrap() - 4.0 * PI * 3f64.ln()).abs() < 1e-12);
        assert!((angular_integral(0.9).unwrap() - 20.556).abs() < 1e-3);
        for b in [0.99, 0.999, 0.999999] {
            assert!((angular_integral(b).unwrap() - angular_integral_exact(b)).abs() < 1e-10, "{b}");
        }
        assert!(angular_integral(1.0).is_err());
        assert!(angular_integral(-0.1).is_err());
    }

    #[test]
    fn angular_integral_dominated_by_log_energy() {
        for i in 0..1000 {
            let b = i as f64 / 1000.0;
            let w = 1.0 / (1.0 - b * b).sqrt();
            assert!(angular_integral_exact(b) <= 4.0 * PI * (1.0 + w.ln()) * (1.0 + 1e-14));
        }
    }

    #[test]
    fn stationary_jacobian() {
        let u = UniformMotion { x0: Vector3::zeros(), v: Vector3::zeros() };
        let m = pi_sigma_map(&u, 0.0, 2.0, 0.3, 1.1).unwrap();
        assert!((m.jacobian + 4.0 * 1.1f64.sin()).abs() < 1e-14);
        assert!(pi_sigma_map(&u, 1.0, 1.0, 0.0, 0.5).is_err());
    }

    #[test]
    fn aligned_fast_jacobian() {
        let u = UniformMotion { x0: Vector3::zeros(), v: Vector3::new(0.0, 0.0, 0.9) };
        let phi: f64 = 1e-3;
        let m = pi_sigma_map(&u, 0.0, 1.0, 0.0, phi).unwrap();
        let expect = (0.9 * phi.cos() - 1.0) * phi.sin();
        assert!((m.jacobian - expect).abs() < 1e-15);
    }

    #[test]
    fn finite_difference_jacobian_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let o = Oscillatory::random(&mut rng, 0.8);
        let exact = pi_sigma_map(&o, 0.2, 1.3, 0.7, 2.0).unwrap().jacobian;
        let fd = pi_sigma_jacobian_fd(&o, 0.2, 1.3, 0.7, 2.0, 1e-4).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-6);
    }

    fn unit_grid(value: f64) -> SpacetimeGrid {
        let spec = GridSpec::covering(&Vector3::new(-4.0, -4.0, -4.0), &Vector3::new(4.0, 4.0, 4.0), 0.5).unwrap();
        SpacetimeGrid::constant(spec, vec![0.0, 1.0, 2.0], value).unwrap()
    }

    #[test]
    fn constant_integrand_closed_forms() {
        let g = unit_grid(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let o = Oscillatory::random(&mut rng, 0.6);
        let t = 1.7;
        for k in [0, 1] {
            let spec = ConeIntegralSpec { k, trajectory: &o, g: &g, sigma0: 0.0, t, orders: ConeOrders::new(4, 4, 8, 16).unwrap() };
            let i = cone_integral_inner(&spec, 0.4).unwrap();
            let expect = if k == 0 { 4.0 * PI * 1.3 } else { 2.0 * PI * 1.3 * 1.3 };
            assert!((i - expect).abs() < 1e-11, "k={k}: {i}");
            let whole = cone_integral(&spec).unwrap();
            let expect = if k == 0 { 2.0 * PI * t * t } else { 2.0 * PI / 3.0 * t.powi(3) };
            assert!((whole - expect).abs() < 1e-10, "k={k}: {whole}");
            assert!((cone_integral_swapped(&spec).unwrap() - whole).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_integrand_and_empty_window() {
        let g = unit_grid(0.0);
        let u = UniformMotion { x0: Vector3::zeros(), v: Vector3::zeros() };
        let spec = ConeIntegralSpec { k: 1, trajectory: &u, g: &g, sigma0: 0.0, t: 1.0, orders: ConeOrders::new(2, 4, 8, 8).unwrap() };
        assert_eq!(cone_integral(&spec).unwrap(), 0.0);
        let g1 = unit_grid(1.0);
        let spec = ConeIntegralSpec { k: 0, trajectory: &u, g: &g1, sigma0: 0.0, t: 0.0, orders: ConeOrders::new(2, 4, 8, 8).unwrap() };
        assert_eq!(cone_integral(&spec).unwrap(), 0.0);
    }

    #[test]
    fn negative_samples_rejected() {
        let spec = GridSpec::covering(&Vector3::zeros(), &Vector3::new(1.0, 1.0, 1.0), 0.5).unwrap();
        let mut v = vec![1.0; spec.len()];
        v[3] = -1e-3;
        assert!(matches!(
            SpacetimeGrid::new(spec, vec![0.0], vec![v]),
            Err(Error::NegativeIntegrand { .. })
        ));
    }

    #[test]
    fn k_two_rejected() {
        let g = unit_grid(1.0);
        let u = UniformMotion { x0: Vector3::zeros(), v: Vector3::zeros() };
        let spec = ConeIntegralSpec { k: 2, trajectory: &u, g: &g, sigma0: 0.0, t: 1.0, orders: ConeOrders::default() };
        assert!(cone_integral(&spec).is_err());
    }

    #[test]
    fn lemma2_margins_for_constant_g() {
        let g = unit_grid(1.0);
        let u = UniformMotion { x0: Vector3::zeros(), v: Vector3::zeros() };
        let spec = ConeIntegralSpec { k: 0, trajectory: &u, g: &g, sigma0: 0.0, t: 1.5, orders: ConeOrders::new(4, 4, 8, 16).unwrap() };
        let m = verify_lemma2(&spec, 0.5, &|_| 1.0).unwrap();
        assert!((m.i0 - 4.0 * PI).abs() < 1e-11);
        assert!((m.bound0 - 4.0 * PI * 1.5).abs() < 1e-12);
        assert!(m.m0 > 0.0 && m.m1 > 0.0 && m.cs_margin >= 0.0);
        let at_zero = verify_lemma2(&spec, 0.0, &|_| 1.0).unwrap();
        assert!(at_zero.m0 >= 0.0 && at_zero.m0 < 1e-10, "{at_zero:?}");
        assert!(m.log_integral >= 1.0 - 1e-14);
    }

    #[test]
    fn change_of_variables_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let o = Oscillatory::random(&mut rng, 0.7);
        let c = o.position(0.8);
        let f = move |y: &Position3| (-(y - c).norm_squared() / 0.3).exp();
        let (cone, direct) = change_of_variables_check(&o, 0.1, 1.4, &f, &ConeOrders::new(16, 6, 32, 64).unwrap()).unwrap();
        assert!(((cone - direct) / direct).abs() < 1e-6, "{cone} vs {direct}");
    }
}
