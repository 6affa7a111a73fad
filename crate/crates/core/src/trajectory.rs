//! Time-sampled characteristics and the continuous trajectories built on them.

use crate::error::{Error, Result};
use crate::kinematics::velocity;
use crate::model::{Momentum3, Position3, Velocity3};
use nalgebra::Vector3;
use rand::Rng;

/// Uniform nodes `t_m = m Δt`, `m = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidScenario(format!("time step must be positive, got {dt}")));
        }
        if steps == 0 {
            return Err(Error::InvalidScenario("horizon must cover at least one step".into()));
        }
        Ok(Self { dt, steps })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn nodes(&self) -> usize {
        self.steps + 1
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.steps)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|m| self.time(m)).collect()
    }

    /// Segment index and local coordinate `τ ∈ [0, 1]` for time `s`.
    pub fn locate(&self, s: f64) -> (usize, f64) {
        let m = ((s / self.dt).floor().max(0.0) as usize).min(self.steps - 1);
        (m, (s - self.time(m)) / self.dt)
    }
}

/// Samples of one characteristic on a [`TimeGrid`]; `force` holds the Lorentz
/// force that drove it, needed by the acceleration term of the field.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleTrack {
    pub x: Vec<Position3>,
    pub p: Vec<Momentum3>,
    pub force: Option<Vec<Vector3<f64>>>,
}

/// All characteristics of one ensemble on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryHistory {
    grid: TimeGrid,
    weights: Vec<f64>,
    tracks: Vec<ParticleTrack>,
}

impl TrajectoryHistory {
    pub fn new(grid: TimeGrid, weights: Vec<f64>, tracks: Vec<ParticleTrack>) -> Result<Self> {
        if weights.len() != tracks.len() {
            return Err(Error::GridMismatch("one weight per track required".into()));
        }
        for (k, t) in tracks.iter().enumerate() {
            let ok_len = t.x.len() == grid.nodes()
                && t.p.len() == grid.nodes()
                && t.force.as_ref().is_none_or(|f| f.len() == grid.nodes());
            if !ok_len {
                return Err(Error::GridMismatch(format!(
                    "track {k} does not match the {} time nodes",
                    grid.nodes()
                )));
            }
        }
        Ok(Self {
            grid,
            weights,
            tracks,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.weights[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tracks(&self) -> &[ParticleTrack] {
        &self.tracks
    }

    pub fn track(&self, k: usize) -> TrackView<'_> {
        TrackView {
            grid: &self.grid,
            track: &self.tracks[k],
        }
    }
}

/// A subluminal world line `s ↦ X(s)`.
pub trait Trajectory: Sync {
    /// Time interval on which the trajectory is defined.
    fn span(&self) -> (f64, f64);
    fn position(&self, s: f64) -> Position3;
    /// Exact derivative of [`Trajectory::position`].
    fn velocity(&self, s: f64) -> Velocity3;
    /// Momentum carried by the source; defaults to the one matching `velocity`.
    fn momentum(&self, s: f64) -> Momentum3 {
        let v = self.velocity(s);
        v / (1.0 - v.norm_squared()).sqrt()
    }
    /// Lorentz force along the trajectory, when recorded.
    fn force(&self, _s: f64) -> Option<Vector3<f64>> {
        None
    }
}

fn hermite(y0: &Vector3<f64>, d0: &Vector3<f64>, y1: &Vector3<f64>, d1: &Vector3<f64>, h: f64, t: f64) -> Vector3<f64> {
    let t2 = t * t;
    let t3 = t2 * t;
    y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + d0 * (h * (t3 - 2.0 * t2 + t))
        + y1 * (3.0 * t2 - 2.0 * t3)
        + d1 * (h * (t3 - t2))
}

fn hermite_derivative(y0: &Vector3<f64>, d0: &Vector3<f64>, y1: &Vector3<f64>, d1: &Vector3<f64>, h: f64, t: f64) -> Vector3<f64> {
    let t2 = t * t;
    (y1 - y0) * ((6.0 * t - 6.0 * t2) / h) + d0 * (3.0 * t2 - 4.0 * t + 1.0) + d1 * (3.0 * t2 - 2.0 * t)
}

/// One track of a history, continuous in time: cubic Hermite for `X` (slopes
/// `V(P_m)`) and for `P` (slopes `K_m`, or linear without a force record).
#[derive(Debug, Clone, Copy)]
pub struct TrackView<'a> {
    grid: &'a TimeGrid,
    track: &'a ParticleTrack,
}

impl TrackView<'_> {
    pub fn node_position(&self, m: usize) -> Position3 {
        self.track.x[m]
    }

    pub fn node_momentum(&self, m: usize) -> Momentum3 {
        self.track.p[m]
    }

    pub fn track(&self) -> &ParticleTrack {
        self.track
    }
}

impl Trajectory for TrackView<'_> {
    fn span(&self) -> (f64, f64) {
        (0.0, self.grid.end())
    }

    fn position(&self, s: f64) -> Position3 {
        let (m, t) = self.grid.locate(s);
        let x = &self.track.x;
        let (v0, v1) = (velocity(&self.track.p[m]), velocity(&self.track.p[m + 1]));
        hermite(&x[m], &v0, &x[m + 1], &v1, self.grid.dt(), t)
    }

    fn velocity(&self, s: f64) -> Velocity3 {
        let (m, t) = self.grid.locate(s);
        let x = &self.track.x;
        let (v0, v1) = (velocity(&self.track.p[m]), velocity(&self.track.p[m + 1]));
        hermite_derivative(&x[m], &v0, &x[m + 1], &v1, self.grid.dt(), t)
    }

    fn momentum(&self, s: f64) -> Momentum3 {
        let (m, t) = self.grid.locate(s);
        let p = &self.track.p;
        match &self.track.force {
            Some(k) => hermite(&p[m], &k[m], &p[m + 1], &k[m + 1], self.grid.dt(), t),
            None => p[m] * (1.0 - t) + p[m + 1] * t,
        }
    }

    fn force(&self, s: f64) -> Option<Vector3<f64>> {
        let (m, t) = self.grid.locate(s);
        self.track
            .force
            .as_ref()
            .map(|k| k[m] * (1.0 - t) + k[m + 1] * t)
    }
}

/// `X(s) = x0 + v s` on an unbounded span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformMotion {
    pub x0: Position3,
    pub v: Velocity3,
}

impl Trajectory for UniformMotion {
    fn span(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn position(&self, s: f64) -> Position3 {
        self.x0 + self.v * s
    }
    fn velocity(&self, _s: f64) -> Velocity3 {
        self.v
    }
    fn force(&self, _s: f64) -> Option<Vector3<f64>> {
        Some(Vector3::zeros())
    }
}

/// `X(s) = x0 + v0 s + Σ a_k sin(ν_k s + φ_k)`; subluminal whenever
/// `|v0| + Σ |a_k| ν_k < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Oscillatory {
    pub x0: Position3,
    pub v0: Velocity3,
    pub modes: Vec<(Vector3<f64>, f64, f64)>,
}

fn random_direction(rng: &mut impl Rng) -> Vector3<f64> {
    let v: Vector3<f64> = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    v / v.norm().max(1e-3)
}

impl Oscillatory {
    /// Random smooth trajectory with speed bounded by `max_speed`.
    pub fn random(rng: &mut impl Rng, max_speed: f64) -> Self {
        let drift_speed = 0.4 * max_speed;
        let v0 = random_direction(rng) * drift_speed;
        let mut budget = max_speed - drift_speed;
        let mut modes = Vec::new();
        for _ in 0..3 {
            let share = budget / 2.0;
            budget -= share;
            let nu = 0.5 + 2.5 * rng.random::<f64>();
            let amp = random_direction(rng) * (share / nu);
            modes.push((amp, nu, 2.0 * std::f64::consts::PI * rng.random::<f64>()));
        }
        let x0 = random_direction(rng) * rng.random::<f64>();
        Self { x0, v0, modes }
    }

    pub fn speed_bound(&self) -> f64 {
        self.v0.norm() + self.modes.iter().map(|(a, nu, _)| a.norm() * nu).sum::<f64>()
    }
}

impl Trajectory for Oscillatory {
    fn span(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }
    fn position(&self, s: f64) -> Position3 {
        self.modes
            .iter()
            .fold(self.x0 + self.v0 * s, |acc, (a, nu, ph)| acc + a * (nu * s + ph).sin())
    }
    fn velocity(&self, s: f64) -> Velocity3 {
        self.modes
            .iter()
            .fold(self.v0, |acc, (a, nu, ph)| acc + a * (nu * (nu * s + ph).cos()))
    }
}

/// Sample an analytic trajectory onto a grid, with the momentum matching its
/// velocity and the force `dP/ds` from a centered difference.
pub fn sample_track(traj: &dyn Trajectory, grid: &TimeGrid) -> ParticleTrack {
    let h = 1e-5;
    let times = grid.times();
    let x = times.iter().map(|&s| traj.position(s)).collect();
    let p = times.iter().map(|&s| traj.momentum(s)).collect();
    let force = times
        .iter()
        .map(|&s| traj.force(s).unwrap_or_else(|| (traj.momentum(s + h) - traj.momentum(s - h)) / (2.0 * h)))
        .collect();
    ParticleTrack {
        x,
        p,
        force: Some(force),
    }
}
