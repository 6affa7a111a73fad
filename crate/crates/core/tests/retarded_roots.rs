//! Retarded times along random smooth subluminal trajectories.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rvm_core::retarded::{retarded_time, retarded_tolerance};
use rvm_core::trajectory::{Oscillatory, Trajectory};

/// `g(σ) = t − σ − |x − X(σ)|` is strictly decreasing for subluminal `X`, so a
/// sign change on a fine sample brackets the only root.
#[test]
fn unique_root_on_ten_thousand_trajectories() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut found = 0;
    for _ in 0..10_000 {
        let speed = rng.random_range(0.0..0.99);
        let traj = Oscillatory::random(&mut rng, speed);
        let t = rng.random_range(0.1..4.0);
        let x = traj.position(t) + Vector3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let g = |s: f64| t - s - (x - traj.position(s)).norm();
        let samples: Vec<f64> = (0..=64).map(|i| g(t * i as f64 / 64.0)).collect();
        assert!(samples.windows(2).all(|w| w[1] < w[0]), "g not decreasing");
        match retarded_time(&traj, t, &x).unwrap() {
            Some(root) => {
                found += 1;
                assert!((0.0..=t).contains(&root.sigma));
                assert!(g(root.sigma).abs() <= retarded_tolerance(t), "residual {}", g(root.sigma));
                assert!((root.r - (x - root.y).norm()).abs() <= 1e-12 * (1.0 + root.r));
                assert!(samples[0] >= -retarded_tolerance(t));
            }
            None => assert!(samples[0] < 0.0),
        }
    }
    assert!(found > 1000, "only {found} trajectories reached the observer");
}

#[test]
fn static_source_root_is_light_travel_time() {
    let traj = Oscillatory { x0: Vector3::zeros(), v0: Vector3::zeros(), modes: vec![] };
    let root = retarded_time(&traj, 3.0, &Vector3::new(0.0, 1.5, 2.0)).unwrap().unwrap();
    assert!((root.sigma - 0.5).abs() < 1e-12);
    assert!(retarded_time(&traj, 1.0, &Vector3::new(0.0, 1.5, 2.0)).unwrap().is_none());
}
