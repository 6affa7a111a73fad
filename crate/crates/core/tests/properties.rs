use nalgebra::{Unit, Vector3};
use proptest::prelude::*;
use rvm_core::grid::{deposit_moments, GridSpec};
use rvm_core::kernels::{kernel_a, kernel_grad_b, KERNEL_BOUND_A, KERNEL_BOUND_B};
use rvm_core::kinematics::{energy, lorentz_force, velocity};
use rvm_core::lightcone::{angular_integral, angular_integral_exact};
use rvm_core::picard::{support_series, GronwallEnvelope};
use rvm_core::trajectory::{ParticleTrack, TimeGrid, TrajectoryHistory};
use rvm_core::{Mollifier, Particle};
use std::f64::consts::PI;

fn vec3(r: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn momentum() -> impl Strategy<Value = Vector3<f64>> {
    (vec3(1.0), -3.0..3.0f64).prop_map(|(d, e)| d * 10f64.powf(e))
}

fn direction() -> impl Strategy<Value = Unit<Vector3<f64>>> {
    (-1.0..1.0f64, 0.0..2.0 * PI).prop_map(|(u, th)| {
        let s = (1.0 - u * u).sqrt();
        Unit::new_normalize(Vector3::new(s * th.cos(), s * th.sin(), u))
    })
}

proptest! {
    #[test]
    fn energy_velocity_invariants(p in momentum()) {
        let w = energy(&p);
        let v = velocity(&p);
        prop_assert!(w >= 1.0);
        prop_assert!(v.norm() < 1.0);
        prop_assert!((v * w - p).norm() <= 1e-12 * (1.0 + p.norm()));
    }

    #[test]
    fn magnetic_force_does_no_work(p in momentum(), e in vec3(5.0), b in vec3(5.0)) {
        let v = velocity(&p);
        let k = lorentz_force(&e, &b, &p);
        let scale = 1.0 + e.norm() + b.norm();
        prop_assert!((k.dot(&v) - e.dot(&v)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn kernels_obey_bounds(om in direction(), p in momentum()) {
        let w = energy(&p);
        prop_assert!(kernel_a(&om, &p).norm() <= KERNEL_BOUND_A * w);
        prop_assert!(kernel_grad_b(&om, &p).norm() <= KERNEL_BOUND_B * w);
    }

    #[test]
    fn angular_quadrature_matches_closed_form(beta in 0.0..0.999f64) {
        let q = angular_integral(beta).unwrap();
        prop_assert!((q - angular_integral_exact(beta)).abs() <= 1e-8);
        let w = 1.0 / (1.0 - beta * beta).sqrt();
        prop_assert!(q <= 4.0 * PI * (1.0 + w.ln()) * (1.0 + 1e-14));
    }

    #[test]
    fn deposition_conserves_mass_and_orders_moments(
        parts in prop::collection::vec((vec3(0.4), momentum(), 0.1..2.0f64, any::<bool>()), 1..5),
    ) {
        let particles: Vec<Particle> = parts
            .iter()
            .map(|(x, p, w, neg)| Particle::new(*x, *p, if *neg { -w } else { *w }).unwrap())
            .collect();
        let m = Mollifier::new(0.15).unwrap();
        let spec = GridSpec::covering(&Vector3::repeat(-1.2), &Vector3::repeat(1.2), 0.1).unwrap();
        let mo = deposit_moments(&particles, &spec, &m, 0.0).unwrap();
        let mass: f64 = particles.iter().map(|p| p.w.abs()).sum();
        prop_assert!((mo.rho_abs.l1() - mass).abs() <= 1e-12 * mass);
        let (ra, ha) = (mo.rho_abs.as_scalar().unwrap(), mo.h_abs.as_scalar().unwrap());
        let (r, j) = (mo.rho.as_scalar().unwrap(), mo.current.as_vector().unwrap());
        for i in 0..spec.len() {
            prop_assert!(j[i].norm() <= ra[i] * (1.0 + 1e-12) + 1e-300);
            prop_assert!(ha[i] >= ra[i] * (1.0 - 1e-12));
            prop_assert!(r[i].abs() <= ra[i] * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn envelope_is_monotone(c0 in 0.0..3.0f64, ct in 0.0..3.0f64, w0 in 1.0..5.0f64, t in 0.0..1.5f64, dt in 0.0..0.5f64) {
        let e = GronwallEnvelope { c0, c_t: ct, w0 };
        prop_assert!((e.eval(0.0) - (w0 + c0)).abs() <= 1e-12 * (w0 + c0));
        prop_assert!(e.eval(t + dt) >= e.eval(t));
        let steeper = GronwallEnvelope { c_t: ct + 0.1, ..e };
        prop_assert!(steeper.eval(t) >= e.eval(t));
    }

    #[test]
    fn support_is_non_decreasing(
        ps in prop::collection::vec(prop::collection::vec(momentum(), 6), 1..4),
    ) {
        let grid = TimeGrid::new(0.1, 5).unwrap();
        let tracks: Vec<ParticleTrack> = ps
            .iter()
            .map(|p| ParticleTrack { x: vec![Vector3::zeros(); 6], p: p.clone(), force: None })
            .collect();
        let weights = vec![1.0; tracks.len()];
        let h = TrajectoryHistory::new(grid, weights, tracks).unwrap();
        let s = support_series(&h);
        for m in 1..6 {
            prop_assert!(s.pbar[m] >= s.pbar[m - 1]);
            prop_assert!(s.wbar[m] >= s.wbar[m - 1]);
            prop_assert!(s.vbar[m] < 1.0);
        }
        let top = ps.iter().flatten().map(|p| p.norm()).fold(0.0, f64::max);
        prop_assert_eq!(s.pbar[5], top);
    }
}
