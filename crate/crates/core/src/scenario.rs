//! Scenario configuration and validation.

use crate::error::{Error, Result};
use crate::initial_field::{InitialField, InitialFieldRegistry, Pulse};
use crate::model::{Mollifier, Particle, Position3};
use crate::trajectory::TimeGrid;

/// Smallest polar order accepted for Kirchhoff sphere means.
pub const MIN_POLAR_ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Numerics {
    pub dt: f64,
    pub horizon: f64,
    /// `(n_φ, n_θ)`: Gauss nodes in `cos φ`, trapezoid nodes in θ.
    pub sphere_order: (usize, usize),
    /// Gauss nodes per time panel in the light-cone integrals.
    pub time_order: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub grid_spacing: f64,
    /// Explicit deposition box; sized from the trajectories when absent.
    pub grid_box: Option<(Position3, Position3)>,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt: 0.05,
            horizon: 1.0,
            sphere_order: (16, 32),
            time_order: 4,
            picard_tol: 1e-10,
            picard_max_iter: 12,
            grid_spacing: 0.1,
            grid_box: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monitors {
    /// Threshold for `sup ρ` in the continuation monitor.
    pub rho_max: f64,
    /// Largest Gronwall rate constant the fit may return.
    pub gronwall_cap: f64,
}

impl Default for Monitors {
    fn default() -> Self {
        Self {
            rho_max: 1e6,
            gronwall_cap: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub particles: Vec<Particle>,
    pub mollifier_radius: f64,
    pub initial_field: String,
    pub pulse: Option<Pulse>,
    pub numerics: Numerics,
    pub monitors: Monitors,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "unnamed".into(),
            particles: Vec::new(),
            mollifier_radius: 0.2,
            initial_field: "poisson-blob".into(),
            pulse: None,
            numerics: Numerics::default(),
            monitors: Monitors::default(),
        }
    }
}

/// A validated configuration with its initial field instantiated.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub initial: Box<dyn InitialField>,
    pub time: TimeGrid,
    pub mollifier: Mollifier,
    /// Weights of both signs present: one-signed inequalities switch to `|w|`.
    pub signed_weights: bool,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("config", &self.config)
            .field("initial", &self.initial.name())
            .field("time", &self.time)
            .finish()
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidScenario(msg.into())
}

pub fn build_scenario(config: ScenarioConfig) -> Result<Scenario> {
    build_scenario_with(config, &InitialFieldRegistry::with_builtins())
}

pub fn build_scenario_with(config: ScenarioConfig, registry: &InitialFieldRegistry) -> Result<Scenario> {
    let n = &config.numerics;
    if !(n.dt > 0.0 && n.dt.is_finite()) {
        return Err(invalid(format!("dt must be positive, got {}", n.dt)));
    }
    if !(n.horizon >= n.dt && n.horizon.is_finite()) {
        return Err(invalid(format!("horizon {} must be at least dt {}", n.horizon, n.dt)));
    }
    let ratio = n.horizon / n.dt;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-6 * ratio.max(1.0) {
        return Err(invalid(format!("horizon {} is not a multiple of dt {}", n.horizon, n.dt)));
    }
    if !(n.grid_spacing > 0.0 && n.grid_spacing.is_finite()) {
        return Err(invalid(format!("grid spacing must be positive, got {}", n.grid_spacing)));
    }
    if n.sphere_order.0 < MIN_POLAR_ORDER || n.sphere_order.1 < MIN_POLAR_ORDER {
        return Err(invalid(format!(
            "sphere order {:?} below the minimum {MIN_POLAR_ORDER}",
            n.sphere_order
        )));
    }
    if n.time_order == 0 {
        return Err(invalid("time quadrature order must be positive"));
    }
    if !(n.picard_tol > 0.0) || n.picard_max_iter == 0 {
        return Err(invalid("Picard tolerance and iteration cap must be positive"));
    }
    if let Some((lo, hi)) = &n.grid_box {
        if (0..3).any(|i| !(hi[i] > lo[i])) {
            return Err(invalid("grid box must have max > min on every axis"));
        }
    }
    if !(config.monitors.rho_max > 0.0) || !(config.monitors.gronwall_cap > 0.0) {
        return Err(invalid("monitor thresholds must be positive"));
    }
    for (k, p) in config.particles.iter().enumerate() {
        Particle::new(p.x, p.p, p.w).map_err(|e| invalid(format!("particle {k}: {e}")))?;
    }
    let mollifier = Mollifier::new(config.mollifier_radius)?;
    let time = TimeGrid::new(n.dt, steps as usize)?;
    let initial = registry.build(&config.initial_field, &config)?;
    let signed_weights =
        config.particles.iter().any(|p| p.w > 0.0) && config.particles.iter().any(|p| p.w < 0.0);
    Ok(Scenario {
        config,
        initial,
        time,
        mollifier,
        signed_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn one_particle() -> ScenarioConfig {
        ScenarioConfig {
            particles: vec![Particle::new(Vector3::zeros(), Vector3::zeros(), 1.0).unwrap()],
            ..Default::default()
        }
    }

    #[test]
    fn default_single_particle_builds() {
        let s = build_scenario(one_particle()).unwrap();
        assert_eq!(s.time.steps(), 20);
        assert!(!s.signed_weights);
        assert_eq!(s.initial.name(), "poisson-blob");
    }

    #[test]
    fn zero_dt_rejected() {
        let mut c = one_particle();
        c.numerics.dt = 0.0;
        assert!(matches!(build_scenario(c), Err(Error::InvalidScenario(_))));
    }

    #[test]
    fn low_polar_order_rejected() {
        let mut c = one_particle();
        c.numerics.sphere_order = (6, 32);
        assert!(build_scenario(c).is_err());
    }

    #[test]
    fn horizon_must_be_a_multiple_of_dt() {
        let mut c = one_particle();
        c.numerics.horizon = 1.03;
        assert!(build_scenario(c).is_err());
    }

    #[test]
    fn signed_weights_flagged() {
        let mut c = one_particle();
        c.initial_field = "zero-field-neutral".into();
        c.particles.push(Particle::new(Vector3::zeros(), Vector3::new(0.1, 0.0, 0.0), -1.0).unwrap());
        assert!(build_scenario(c).unwrap().signed_weights);
    }
}
