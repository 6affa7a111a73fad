//! Relativistic kinematics and the characteristic ODE `Ẋ = V(P)`, `Ṗ = E + V × B`.

use crate::error::{Error, Result};
use crate::model::{FieldSample, Momentum3, Position3, Velocity3};
use crate::trajectory::ParticleTrack;
use nalgebra::Vector3;

/// `W(p) = √(1 + |p|²)`.
pub fn energy(p: &Momentum3) -> f64 {
    (1.0 + p.norm_squared()).sqrt()
}

/// `v(p) = p / W(p)`; always strictly subluminal.
pub fn velocity(p: &Momentum3) -> Velocity3 {
    p / energy(p)
}

/// `K = E + v(p) × B`.
pub fn lorentz_force(e: &Vector3<f64>, b: &Vector3<f64>, p: &Momentum3) -> Vector3<f64> {
    e + velocity(p).cross(b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicState {
    pub x: Position3,
    pub p: Momentum3,
    pub t: f64,
}

fn force_at<F>(field_fn: &mut F, t: f64, x: &Position3, p: &Momentum3) -> Result<Vector3<f64>>
where
    F: FnMut(f64, &Position3) -> Result<FieldSample>,
{
    let f = field_fn(t, x)?;
    if !f.is_finite() {
        return Err(Error::NonFiniteField {
            t,
            x: [x.x, x.y, x.z],
        });
    }
    Ok(lorentz_force(&f.e, &f.b, p))
}

/// One classical RK4 step. `k1` is the force at the start of the step when the
/// caller already has it.
fn rk4_step<F>(
    s: &KinematicState,
    k1: Vector3<f64>,
    field_fn: &mut F,
    dt: f64,
) -> Result<KinematicState>
where
    F: FnMut(f64, &Position3) -> Result<FieldSample>,
{
    let h2 = 0.5 * dt;
    let v1 = velocity(&s.p);

    let (x2, p2) = (s.x + v1 * h2, s.p + k1 * h2);
    let v2 = velocity(&p2);
    let k2 = force_at(field_fn, s.t + h2, &x2, &p2)?;

    let (x3, p3) = (s.x + v2 * h2, s.p + k2 * h2);
    let v3 = velocity(&p3);
    let k3 = force_at(field_fn, s.t + h2, &x3, &p3)?;

    let (x4, p4) = (s.x + v3 * dt, s.p + k3 * dt);
    let v4 = velocity(&p4);
    let k4 = force_at(field_fn, s.t + dt, &x4, &p4)?;

    let sixth = dt / 6.0;
    Ok(KinematicState {
        x: s.x + (v1 + (v2 + v3) * 2.0 + v4) * sixth,
        p: s.p + (k1 + (k2 + k3) * 2.0 + k4) * sixth,
        t: s.t + dt,
    })
}

/// Advance one RK4 step through the field closure.
pub fn push<F>(state: &KinematicState, mut field_fn: F, dt: f64) -> Result<KinematicState>
where
    F: FnMut(f64, &Position3) -> Result<FieldSample>,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let k1 = force_at(&mut field_fn, state.t, &state.x, &state.p)?;
    rk4_step(state, k1, &mut field_fn, dt)
}

/// Integrate `steps` RK4 steps from `start`, recording position, momentum and
/// the Lorentz force at every node.
pub fn integrate<F>(
    start: &KinematicState,
    mut field_fn: F,
    dt: f64,
    steps: usize,
) -> Result<ParticleTrack>
where
    F: FnMut(f64, &Position3) -> Result<FieldSample>,
{
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let mut x = Vec::with_capacity(steps + 1);
    let mut p = Vec::with_capacity(steps + 1);
    let mut force = Vec::with_capacity(steps + 1);
    let mut s = *start;
    for m in 0..=steps {
        // Node times from the index, so long runs do not accumulate drift.
        s.t = start.t + m as f64 * dt;
        let k = force_at(&mut field_fn, s.t, &s.x, &s.p)?;
        x.push(s.x);
        p.push(s.p);
        force.push(k);
        if m < steps {
            s = rk4_step(&s, k, &mut field_fn, dt)?;
        }
    }
    Ok(ParticleTrack {
        x,
        p,
        force: Some(force),
    })
}

/// `r_m = |ΔW/Δt − v(P_m)·E(t_m, X_m)|`, centered in the interior and one-sided
/// at the two ends. Only interior entries carry the O(Δt²) contract.
pub fn energy_rate_residual(
    dt: f64,
    x: &[Position3],
    p: &[Momentum3],
    mut e_fn: impl FnMut(f64, &Position3) -> Vector3<f64>,
) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 3 || p.len() != n {
        return Err(Error::InsufficientData(
            "energy-rate residual needs at least three matching nodes".into(),
        ));
    }
    let w: Vec<f64> = p.iter().map(energy).collect();
    Ok((0..n)
        .map(|m| {
            let rate = if m == 0 {
                (w[1] - w[0]) / dt
            } else if m == n - 1 {
                (w[n - 1] - w[n - 2]) / dt
            } else {
                (w[m + 1] - w[m - 1]) / (2.0 * dt)
            };
            let t = m as f64 * dt;
            (rate - velocity(&p[m]).dot(&e_fn(t, &x[m]))).abs()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(e: Vector3<f64>, b: Vector3<f64>) -> impl FnMut(f64, &Position3) -> Result<FieldSample> {
        move |_, _| Ok(FieldSample::new(e, b))
    }

    #[test]
    fn hand_values() {
        let p = Vector3::new(3.0, 4.0, 0.0);
        assert!((energy(&p) - 26f64.sqrt()).abs() < 1e-15);
        assert!((velocity(&p) - p / 26f64.sqrt()).norm() < 1e-15);
        assert!((velocity(&p).norm() - 0.98058).abs() < 1e-5);
        assert_eq!(velocity(&Vector3::zeros()), Vector3::zeros());
        assert_eq!(energy(&Vector3::zeros()), 1.0);
    }

    #[test]
    fn magnetic_force_hand_value() {
        // v = (0.5, 0, 0) needs p = v/√(1 − v²).
        let p = Vector3::new(0.5 / 0.75f64.sqrt(), 0.0, 0.0);
        let k = lorentz_force(&Vector3::zeros(), &Vector3::z(), &p);
        assert!((k - Vector3::new(0.0, -0.5, 0.0)).norm() < 1e-15);
        let k0 = lorentz_force(&Vector3::x(), &Vector3::new(1.0, 2.0, 3.0), &Vector3::zeros());
        assert_eq!(k0, Vector3::x());
    }

    #[test]
    fn free_streaming_is_exact() {
        let s0 = KinematicState {
            x: Vector3::new(1.0, 2.0, 3.0),
            p: Vector3::new(0.4, -2.0, 1.0),
            t: 0.0,
        };
        let tr = integrate(&s0, constant(Vector3::zeros(), Vector3::zeros()), 0.1, 10).unwrap();
        let expect = s0.x + velocity(&s0.p) * 1.0;
        assert!((tr.x[10] - expect).norm() < 1e-14);
        assert_eq!(tr.p[10], s0.p);
    }

    #[test]
    fn constant_e_endpoint() {
        let s0 = KinematicState {
            x: Vector3::zeros(),
            p: Vector3::zeros(),
            t: 0.0,
        };
        let tr = integrate(&s0, constant(Vector3::x(), Vector3::zeros()), 0.01, 100).unwrap();
        assert!((tr.x[100].x - (2f64.sqrt() - 1.0)).abs() < 1e-10);
        assert!((tr.p[100].x - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gyration_energy_drift_is_fourth_order() {
        let s0 = KinematicState {
            x: Vector3::zeros(),
            p: Vector3::new(1.0, 0.0, 0.3),
            t: 0.0,
        };
        let w0 = energy(&s0.p);
        let drift = |dt: f64| {
            let steps = (4.0 / dt).round() as usize;
            let tr = integrate(&s0, constant(Vector3::zeros(), Vector3::z()), dt, steps).unwrap();
            (energy(&tr.p[steps]) - w0).abs()
        };
        let (a, b) = (drift(0.2), drift(0.1));
        assert!(a > 0.0 && b > 0.0);
        let slope = (a / b).log2();
        assert!(slope > 3.5, "drift slope {slope}");
    }

    #[test]
    fn non_finite_field_rejected() {
        let s0 = KinematicState {
            x: Vector3::zeros(),
            p: Vector3::zeros(),
            t: 0.0,
        };
        let r = push(&s0, constant(Vector3::new(f64::NAN, 0.0, 0.0), Vector3::zeros()), 0.1);
        assert!(matches!(r, Err(Error::NonFiniteField { .. })));
        assert!(push(&s0, constant(Vector3::zeros(), Vector3::zeros()), 0.0).is_err());
    }

    #[test]
    fn energy_rate_needs_three_nodes() {
        let x = vec![Vector3::zeros(); 2];
        assert!(energy_rate_residual(0.1, &x, &x, |_, _| Vector3::zeros()).is_err());
    }

    #[test]
    fn energy_rate_vanishes_for_magnetic_motion() {
        let s0 = KinematicState {
            x: Vector3::zeros(),
            p: Vector3::new(0.7, 0.2, 0.0),
            t: 0.0,
        };
        let tr = integrate(&s0, constant(Vector3::zeros(), Vector3::z()), 0.05, 40).unwrap();
        let r = energy_rate_residual(0.05, &tr.x, &tr.p, |_, _| Vector3::zeros()).unwrap();
        assert!(r.iter().all(|v| *v < 1e-7));
    }
}
