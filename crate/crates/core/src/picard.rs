//! The recursive scheme: push every particle through the field built from the
//! previous iterate, then fit the logarithmic Gronwall envelope to the momentum
//! support and check the working inequality along each characteristic.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::kernels::{KERNEL_BOUND_A, KERNEL_BOUND_B};
use crate::kinematics::{energy, integrate, velocity, KinematicState};
use crate::lightcone::{cumulative_cone_integral, ConeIntegralSpec, ConeOrders, SpacetimeGrid};
use crate::model::FieldSample;
use crate::retarded::{homogeneous_field, FieldEvaluator, Kirchhoff};
use crate::scenario::Scenario;
use crate::trajectory::{ParticleTrack, TrajectoryHistory};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Abort once `D_n > divergence_factor · D₁`.
    pub divergence_factor: f64,
    /// Abort once any particle reaches this speed.
    pub speed_limit: f64,
    /// Run one iteration past convergence and record its distance.
    pub verify_fixed_point: bool,
}

impl PicardOptions {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            tol: s.config.numerics.picard_tol,
            max_iter: s.config.numerics.picard_max_iter,
            ..Default::default()
        }
    }
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 12,
            divergence_factor: 10.0,
            speed_limit: 1.0 - 1e-9,
            verify_fixed_point: true,
        }
    }
}

/// Running suprema `p̄(t_m)`, `v̄ = p̄/W̄`, `W̄ = √(1 + p̄²)` over all particles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportSeries {
    pub pbar: Vec<f64>,
    pub vbar: Vec<f64>,
    pub wbar: Vec<f64>,
}

impl SupportSeries {
    pub fn len(&self) -> usize {
        self.pbar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pbar.is_empty()
    }
}

pub fn support_series(history: &TrajectoryHistory) -> SupportSeries {
    let nodes = history.grid().nodes();
    let mut pbar = Vec::with_capacity(nodes);
    let mut run: f64 = 0.0;
    for m in 0..nodes {
        for tr in history.tracks() {
            run = run.max(tr.p[m].norm());
        }
        pbar.push(run);
    }
    let wbar: Vec<f64> = pbar.iter().map(|p| (1.0 + p * p).sqrt()).collect();
    let vbar = pbar.iter().zip(&wbar).map(|(p, w)| p / w).collect();
    SupportSeries { pbar, vbar, wbar }
}

/// `max_{k,m} |X^a_k(t_m) − X^b_k(t_m)| + |P^a_k(t_m) − P^b_k(t_m)|`.
pub fn convergence_distance(a: &TrajectoryHistory, b: &TrajectoryHistory) -> Result<f64> {
    if a.len() != b.len() || a.grid() != b.grid() {
        return Err(Error::GridMismatch("records differ in particle count or time grid".into()));
    }
    let mut d: f64 = 0.0;
    for (ta, tb) in a.tracks().iter().zip(b.tracks()) {
        for m in 0..ta.x.len() {
            d = d.max((ta.x[m] - tb.x[m]).norm() + (ta.p[m] - tb.p[m]).norm());
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub n: usize,
    pub history: TrajectoryHistory,
    pub support: SupportSeries,
    /// `D_n` against the previous iterate; absent for iterate 0.
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardRun {
    pub iterates: Vec<IterateRecord>,
    pub converged: bool,
    /// Distance moved by one more iteration from the converged iterate.
    pub fixed_point_distance: Option<f64>,
}

impl PicardRun {
    pub fn last(&self) -> &IterateRecord {
        self.iterates.last().expect("a run holds at least iterate 0")
    }

    /// `D_n / D_{n−1}` for `n ≥ 2`, absent when the denominator vanishes.
    pub fn ratios(&self) -> Vec<Option<f64>> {
        self.iterates
            .iter()
            .map(|r| {
                let prev = r.n.checked_sub(1).and_then(|i| self.iterates[i].distance)?;
                let d = r.distance?;
                (prev > 0.0).then(|| d / prev)
            })
            .collect()
    }

    /// `W̃(t_m) = max_n W̄_n(t_m)`.
    pub fn tilde_wbar(&self) -> Vec<f64> {
        let mut out = self.iterates[0].support.wbar.clone();
        for r in &self.iterates[1..] {
            for (o, w) in out.iter_mut().zip(&r.support.wbar) {
                *o = o.max(*w);
            }
        }
        out
    }
}

fn check_speed(track: &ParticleTrack, k: usize, dt: f64, limit: f64) -> Result<()> {
    for (m, p) in track.p.iter().enumerate() {
        let speed = velocity(p).norm();
        if !(speed < limit) {
            return Err(Error::SpeedLimit { particle: k, t: m as f64 * dt, speed });
        }
    }
    Ok(())
}

fn push_all<F>(scenario: &Scenario, opts: &PicardOptions, n: usize, field: F) -> Result<IterateRecord>
where
    F: Fn(usize, f64, &crate::model::Position3) -> Result<FieldSample> + Sync,
{
    let grid = scenario.time;
    let tracks: Vec<ParticleTrack> = scenario
        .config
        .particles
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let start = KinematicState { x: p.x, p: p.p, t: 0.0 };
            let tr = integrate(&start, |t, x| field(k, t, x), grid.dt(), grid.steps())?;
            check_speed(&tr, k, grid.dt(), opts.speed_limit)?;
            Ok(tr)
        })
        .collect::<Result<_>>()?;
    let weights = scenario.config.particles.iter().map(|p| p.w).collect();
    let history = TrajectoryHistory::new(grid, weights, tracks)?;
    let support = support_series(&history);
    Ok(IterateRecord { n, history, support, distance: None })
}

pub fn scenario_kirchhoff(scenario: &Scenario) -> Result<Kirchhoff> {
    let (n_phi, n_theta) = scenario.config.numerics.sphere_order;
    Kirchhoff::new(n_phi, n_theta)
}

/// Iterate 0 moves through the frozen initial field; iterate `n` through the
/// retarded field of iterate `n − 1`, its own contribution excluded.
fn next_iterate(scenario: &Scenario, opts: &PicardOptions, kirchhoff: &Kirchhoff, prev: &IterateRecord) -> Result<IterateRecord> {
    let ev = FieldEvaluator {
        history: Some(&prev.history),
        initial: scenario.initial.as_ref(),
        mollifier: scenario.mollifier,
        kirchhoff: kirchhoff.clone(),
    };
    let mut rec = push_all(scenario, opts, prev.n + 1, |k, t, x| ev.field_at(t, x, Some(k)))?;
    rec.distance = Some(convergence_distance(&rec.history, &prev.history)?);
    Ok(rec)
}

pub fn run_picard(scenario: &Scenario, opts: &PicardOptions) -> Result<PicardRun> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidArgument("Picard tolerance and iteration cap must be positive".into()));
    }
    let kirchhoff = scenario_kirchhoff(scenario)?;
    let initial = scenario.initial.as_ref();
    let zero = push_all(scenario, opts, 0, |k, _t, x| Ok(initial.field(x, Some(k))))?;
    let mut iterates = vec![zero];
    let mut d1 = None;
    let mut converged = false;
    while iterates.len() <= opts.max_iter {
        let rec = next_iterate(scenario, opts, &kirchhoff, iterates.last().unwrap())?;
        let d = rec.distance.unwrap_or(0.0);
        let n = rec.n;
        iterates.push(rec);
        match d1 {
            None => d1 = Some(d),
            Some(first) if d > opts.divergence_factor * first => {
                return Err(Error::Diverged { n, distance: d, limit: opts.divergence_factor * first });
            }
            Some(_) => {}
        }
        if d < opts.tol {
            converged = true;
            break;
        }
    }
    let fixed_point_distance = if converged && opts.verify_fixed_point {
        next_iterate(scenario, opts, &kirchhoff, iterates.last().unwrap())?.distance
    } else {
        None
    };
    Ok(PicardRun { iterates, converged, fixed_point_distance })
}

/// `∫₀^{t_m} |E_hom(s, X_k(s))| ds` by the trapezoid rule on the nodes, the
/// particle's own initial piece excluded.
pub fn homogeneous_work(scenario: &Scenario, history: &TrajectoryHistory, k: usize, kirchhoff: &Kirchhoff) -> Result<Vec<f64>> {
    let grid = history.grid();
    let tr = &history.tracks()[k];
    let mut out = Vec::with_capacity(grid.nodes());
    let mut acc = 0.0;
    let mut prev = 0.0;
    for m in 0..grid.nodes() {
        let (e, _) = homogeneous_field(grid.time(m), &tr.x[m], scenario.initial.as_ref(), kirchhoff, Some(k))?;
        let cur = e.norm();
        if m > 0 {
            acc += 0.5 * grid.dt() * (prev + cur);
        }
        prev = cur;
        out.push(acc);
    }
    Ok(out)
}

/// The additive Gronwall constant: the largest initial-field work along any
/// characteristic of any iterate.
pub fn initial_field_constant(scenario: &Scenario, run: &PicardRun) -> Result<f64> {
    let kirchhoff = scenario_kirchhoff(scenario)?;
    let mut c0: f64 = 0.0;
    for rec in &run.iterates {
        let per: Vec<f64> = (0..rec.history.len())
            .into_par_iter()
            .map(|k| homogeneous_work(scenario, &rec.history, k, &kirchhoff).map(|v| v.last().copied().unwrap_or(0.0)))
            .collect::<Result<_>>()?;
        c0 = per.into_iter().fold(c0, f64::max);
    }
    Ok(c0)
}

/// `w(t) = exp((1 + ln(w₀ + c₀)) e^{c_T t} − 1)`, the solution of
/// `w = w₀ + c₀ + c_T ∫ w(1 + ln w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GronwallEnvelope {
    pub c0: f64,
    pub c_t: f64,
    pub w0: f64,
}

impl GronwallEnvelope {
    pub fn eval(&self, t: f64) -> f64 {
        ((1.0 + (self.w0 + self.c0).ln()) * (self.c_t * t).exp() - 1.0).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GronwallFit {
    pub envelope: GronwallEnvelope,
    /// Smallest `c_T` for which the discrete integral inequality holds.
    pub c_t_integral: f64,
    /// `w(t_m) − W̃(t_m)`.
    pub margins: Vec<f64>,
    /// `w₀ + c₀ + c_T ∫₀^{t_m} W̃(1 + ln W̃) − W̃(t_m)`.
    pub integral_margins: Vec<f64>,
}

impl GronwallFit {
    pub fn min_margin(&self) -> f64 {
        self.margins
            .iter()
            .chain(&self.integral_margins)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Fits the smallest `c_T ≤ cap` such that `W̃` satisfies the integral
/// inequality on the nodes and the closed-form envelope dominates `W̃`.
pub fn gronwall_check(times: &[f64], tilde: &[f64], c0: f64, cap: f64) -> Result<GronwallFit> {
    if times.is_empty() || times.len() != tilde.len() {
        return Err(Error::InsufficientData("Gronwall fit needs matching non-empty series".into()));
    }
    if tilde.iter().any(|w| !(*w >= 1.0)) || tilde.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("W~ must be non-decreasing and at least 1".into()));
    }
    if !(c0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("c0 must be non-negative, got {c0}")));
    }
    let w0 = tilde[0];
    let mut f = vec![0.0; times.len()];
    for m in 1..times.len() {
        let g = |w: f64| w * (1.0 + w.ln());
        f[m] = f[m - 1] + 0.5 * (times[m] - times[m - 1]) * (g(tilde[m]) + g(tilde[m - 1]));
    }
    let mut c_t_integral: f64 = 0.0;
    for m in 1..times.len() {
        let excess = tilde[m] - w0 - c0;
        if excess > 0.0 {
            c_t_integral = c_t_integral.max(excess / f[m]);
        }
    }
    let t0 = times[0];
    let dominates = |c_t: f64| {
        let env = GronwallEnvelope { c0, c_t, w0 };
        times.iter().zip(tilde).all(|(t, w)| env.eval(t - t0) >= *w)
    };
    let mut c_t = c_t_integral;
    if !dominates(c_t) {
        let mut lo = c_t;
        let mut hi = c_t.max(1e-6);
        while !dominates(hi) {
            lo = hi;
            hi *= 2.0;
            if hi > cap {
                return Err(Error::NoEnvelope { cap });
            }
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if dominates(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        c_t = hi;
    }
    if c_t > cap {
        return Err(Error::NoEnvelope { cap });
    }
    let envelope = GronwallEnvelope { c0, c_t, w0 };
    let margins = times.iter().zip(tilde).map(|(t, w)| envelope.eval(t - t0) - w).collect();
    let integral_margins = tilde.iter().zip(&f).map(|(w, fm)| w0 + c0 + c_t * fm - w).collect();
    Ok(GronwallFit { envelope, c_t_integral, margins, integral_margins })
}

/// Terms of `W(t) ≤ W(0) + ∫|E_hom| + (c_a/4π) I₀(h; t) + (c_b/4π) I₁(h|K̄|; t)`
/// along one characteristic, with the chained bounds
/// `I₀ ≤ 4π C_h t ∫W̄` and `I₁ ≤ 4√π C_h C_K √t ∫W̄(1 + ln W̄)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkingSeries {
    pub particle: usize,
    pub w: Vec<f64>,
    pub hom_work: Vec<f64>,
    pub i0: Vec<f64>,
    pub i1: Vec<f64>,
    /// Right side minus `W(t_m)`.
    pub margins: Vec<f64>,
    /// `4π C_h t ∫W̄ − I₀`.
    pub chain0: Vec<f64>,
    /// `4√π C_h C_K √t ∫W̄(1 + ln W̄) − I₁`.
    pub chain1: Vec<f64>,
}

impl WorkingSeries {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_chain_margin(&self) -> f64 {
        self.chain0.iter().chain(&self.chain1).copied().fold(f64::INFINITY, f64::min)
    }
}

/// Energy density `h` and `h|K̄|` on one spatial grid at the trajectory nodes.
pub struct WorkingGrids<'a> {
    pub h: &'a SpacetimeGrid,
    pub h_kbar: &'a SpacetimeGrid,
    /// `‖|K̄|(t_m)‖_{L²}` per node.
    pub kbar_l2: &'a [f64],
    pub wbar: &'a [f64],
}

fn trapezoid_cumulative(dt: f64, f: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = Vec::new();
    let mut acc = 0.0;
    let mut prev = None;
    for v in f {
        if let Some(p) = prev {
            acc += 0.5 * dt * (p + v);
        }
        prev = Some(v);
        out.push(acc);
    }
    out
}

pub fn working_inequality_check(
    history: &TrajectoryHistory,
    k: usize,
    hom_work: &[f64],
    grids: &WorkingGrids<'_>,
    orders: &ConeOrders,
) -> Result<WorkingSeries> {
    let grid = history.grid();
    let nodes = grid.nodes();
    if hom_work.len() != nodes || grids.kbar_l2.len() != nodes || grids.wbar.len() != nodes {
        return Err(Error::GridMismatch("working-inequality series must match the time grid".into()));
    }
    let tv = history.track(k);
    let times = grid.times();
    let cone = |g: &SpacetimeGrid, kk: u32| {
        let spec = ConeIntegralSpec { k: kk, trajectory: &tv, g, sigma0: 0.0, t: grid.end(), orders: orders.clone() };
        cumulative_cone_integral(&spec, &times)
    };
    let i0 = cone(grids.h, 0)?;
    let i1 = cone(grids.h_kbar, 1)?;
    let w: Vec<f64> = tv.track().p.iter().map(energy).collect();
    let margins = (0..nodes)
        .map(|m| w[0] + hom_work[m] + KERNEL_BOUND_A / (4.0 * PI) * i0[m] + KERNEL_BOUND_B / (4.0 * PI) * i1[m] - w[m])
        .collect();

    let c_h = times
        .iter()
        .zip(grids.wbar)
        .map(|(t, wb)| grids.h.norms_at(*t).0 / wb)
        .fold(0.0, f64::max);
    let c_k = grids.kbar_l2.iter().copied().fold(0.0, f64::max);
    let int_w = trapezoid_cumulative(grid.dt(), grids.wbar.iter().copied());
    let int_wlog = trapezoid_cumulative(grid.dt(), grids.wbar.iter().map(|w| w * (1.0 + w.ln())));
    let chain0 = (0..nodes).map(|m| 4.0 * PI * c_h * times[m] * int_w[m] - i0[m]).collect();
    let chain1 = (0..nodes)
        .map(|m| 4.0 * PI.sqrt() * c_h * c_k * times[m].sqrt() * int_wlog[m] - i1[m])
        .collect();
    Ok(WorkingSeries { particle: k, w, hom_work: hom_work.to_vec(), i0, i1, margins, chain0, chain1 })
}

/// Spatial grid that holds every particle of every iterate with room for the
/// mollifier cutoff and one cell.
pub fn covering_grid(run: &PicardRun, cutoff: f64, spacing: f64) -> Result<GridSpec> {
    let mut lo = crate::model::Position3::repeat(f64::INFINITY);
    let mut hi = crate::model::Position3::repeat(f64::NEG_INFINITY);
    for rec in &run.iterates {
        for tr in rec.history.tracks() {
            for x in &tr.x {
                lo = lo.inf(x);
                hi = hi.sup(x);
            }
        }
    }
    if !lo.iter().all(|v| v.is_finite()) {
        return Err(Error::InsufficientData("no particles to size the grid".into()));
    }
    let pad = cutoff + spacing;
    GridSpec::covering(&lo.add_scalar(-pad), &hi.add_scalar(pad), spacing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Particle;
    use crate::scenario::{build_scenario, ScenarioConfig};
    use crate::trajectory::TimeGrid;
    use nalgebra::Vector3;

    fn history(xs: &[f64], ps: &[f64]) -> TrajectoryHistory {
        let grid = TimeGrid::new(0.1, xs.len() - 1).unwrap();
        let tr = ParticleTrack {
            x: xs.iter().map(|x| Vector3::new(*x, 0.0, 0.0)).collect(),
            p: ps.iter().map(|p| Vector3::new(*p, 0.0, 0.0)).collect(),
            force: None,
        };
        TrajectoryHistory::new(grid, vec![1.0], vec![tr]).unwrap()
    }

    #[test]
    fn distance_definition() {
        let a = history(&[0.0, 0.1, 0.2], &[0.0, 0.0, 0.0]);
        assert_eq!(convergence_distance(&a, &a).unwrap(), 0.0);
        let b = history(&[0.0, 0.101, 0.2], &[0.0, 0.0, 0.0]);
        assert!((convergence_distance(&a, &b).unwrap() - 1e-3).abs() < 1e-15);
        let c = history(&[0.0, 0.1, 0.2], &[2e-3, 2e-3, 2e-3]);
        let d = history(&[0.0, 0.1, 0.2], &[4e-3, 4e-3, 4e-3]);
        assert!((convergence_distance(&a, &d).unwrap() - 2.0 * convergence_distance(&a, &c).unwrap()).abs() < 1e-15);
        let short = history(&[0.0, 0.1], &[0.0, 0.0]);
        assert!(convergence_distance(&a, &short).is_err());
    }

    #[test]
    fn support_is_running_sup() {
        let h = history(&[0.0, 0.0, 0.0, 0.0], &[1.0, 3.0, 2.0, 0.0]);
        let s = support_series(&h);
        assert_eq!(s.pbar, vec![1.0, 3.0, 3.0, 3.0]);
        for m in 0..4 {
            assert!((s.wbar[m] - (1.0 + s.pbar[m].powi(2)).sqrt()).abs() < 1e-15);
            assert!((s.vbar[m] - s.pbar[m] / s.wbar[m]).abs() < 1e-15);
        }
    }

    #[test]
    fn envelope_closed_form() {
        let e = GronwallEnvelope { c0: 0.0, c_t: 1.0, w0: 1.0 };
        assert!((e.eval(1.0) - (std::f64::consts::E - 1.0).exp()).abs() < 1e-12);
        assert!((e.eval(1.0) - 5.5749).abs() < 1e-3);
        assert_eq!(e.eval(0.0), 1.0);
        let twice = GronwallEnvelope { c_t: 2.0, ..e };
        assert!(twice.eval(0.5) > e.eval(0.5));
    }

    #[test]
    fn flat_support_fits_zero_rate() {
        let times: Vec<f64> = (0..11).map(|i| 0.1 * i as f64).collect();
        let fit = gronwall_check(&times, &[1.0; 11], 0.0, 10.0).unwrap();
        assert_eq!(fit.envelope.c_t, 0.0);
        assert!(fit.min_margin() >= 0.0);
    }

    #[test]
    fn fitted_envelope_dominates() {
        let times: Vec<f64> = (0..21).map(|i| 0.05 * i as f64).collect();
        let tilde: Vec<f64> = times.iter().map(|t| (1.0 + (2.0 * t).powi(2)).sqrt()).collect();
        let fit = gronwall_check(&times, &tilde, 0.0, 100.0).unwrap();
        assert!(fit.min_margin() >= 0.0, "{fit:?}");
        assert!(fit.envelope.c_t >= fit.c_t_integral);
        assert!(matches!(gronwall_check(&times, &tilde, 0.0, 1e-3), Err(Error::NoEnvelope { .. })));
    }

    #[test]
    fn neutral_pair_at_rest_is_a_fixed_point() {
        let p = |w| Particle::new(Vector3::zeros(), Vector3::zeros(), w).unwrap();
        let cfg = ScenarioConfig {
            particles: vec![p(1.0), p(-1.0)],
            initial_field: "zero-field-neutral".into(),
            ..Default::default()
        };
        let s = build_scenario(cfg).unwrap();
        let run = run_picard(&s, &PicardOptions::from_scenario(&s)).unwrap();
        assert!(run.converged);
        assert_eq!(run.iterates.len(), 2);
        assert_eq!(run.iterates[1].distance, Some(0.0));
        assert_eq!(run.fixed_point_distance, Some(0.0));
    }

    #[test]
    fn no_particles_converges_immediately() {
        let cfg = ScenarioConfig { initial_field: "poisson-blob".into(), ..Default::default() };
        let s = build_scenario(cfg).unwrap();
        let run = run_picard(&s, &PicardOptions::default()).unwrap();
        assert!(run.converged);
        assert_eq!(run.iterates[1].distance, Some(0.0));
    }
}
