//! End-to-end runs of the coupled solver.

use nalgebra::Vector3;
use rvm_core::diagnostics::Status;
use rvm_core::picard::{run_picard, PicardOptions};
use rvm_core::scenario::{build_scenario, ScenarioConfig};
use rvm_core::simulation::{simulate, SimulationOptions};
use rvm_core::{Error, Particle};

fn like_sign() -> ScenarioConfig {
    let mut c = ScenarioConfig { name: "like-sign".into(), mollifier_radius: 0.1, ..Default::default() };
    c.particles = vec![
        Particle::new(Vector3::new(-0.3, 0.0, 0.0), Vector3::new(0.0, 0.1, 0.0), 1.0).unwrap(),
        Particle::new(Vector3::new(0.3, 0.0, 0.0), Vector3::new(0.0, -0.1, 0.0), 1.0).unwrap(),
    ];
    c.numerics.horizon = 1.5;
    c
}

#[test]
fn like_sign_pair_passes_every_monitor() {
    let sc = build_scenario(like_sign()).unwrap();
    let r = simulate(&sc, &SimulationOptions::for_scenario(&sc).unwrap()).unwrap();
    let s = &r.summary;
    assert_eq!(s.status, Status::Ok, "{:?}", s.breaches);
    assert!(s.converged);
    assert_eq!(r.rows.len(), 31);
    let m = &s.margins;
    for (name, v) in [
        ("lemma1 density", m.lemma1_current_density),
        ("lemma1 chain", m.lemma1_l2_chain),
        ("h", m.h_density),
        ("lemma2 m0", m.lemma2_m0),
        ("lemma2 m1", m.lemma2_m1),
        ("lemma2 cs", m.lemma2_cauchy_schwarz),
        ("working", m.working),
        ("working chain", m.working_chain),
        ("gronwall", m.gronwall.unwrap()),
    ] {
        assert!(v >= 0.0, "{name} margin {v}");
    }
    assert!(s.l1_drift < 1e-10);
    for row in &r.rows {
        assert!(row.envelope_w.unwrap() >= row.wbar);
        assert!(row.margin_working >= 0.0);
    }
    // Repulsion: the pair separates faster than free streaming.
    let last = r.run.last();
    let grid = last.history.grid();
    let end = grid.steps();
    let sep = (last.history.tracks()[0].x[end] - last.history.tracks()[1].x[end]).norm();
    assert!(sep > 0.6 * (1.0 + 1e-3), "separation {sep}");
}

#[test]
fn like_sign_pair_contracts() {
    let sc = build_scenario(like_sign()).unwrap();
    let run = run_picard(&sc, &PicardOptions::from_scenario(&sc)).unwrap();
    let ratios = run.ratios();
    assert!(ratios.iter().skip(2).all(|r| r.unwrap() <= 0.5), "{ratios:?}");
    assert!(run.fixed_point_distance.unwrap() < 1e-10);
}

#[test]
fn malformed_numerics_rejected() {
    let mut c = like_sign();
    c.numerics.dt = 0.0;
    assert!(matches!(build_scenario(c), Err(Error::InvalidScenario(_))));
    let mut c = like_sign();
    c.numerics.horizon = 1.53;
    assert!(matches!(build_scenario(c), Err(Error::InvalidScenario(_))));
    let mut c = like_sign();
    c.initial_field = "warp-drive".into();
    assert!(matches!(build_scenario(c), Err(Error::UnknownStrategy { .. })));
}

#[test]
fn ultra_relativistic_start_hits_speed_limit() {
    let mut c = like_sign();
    c.particles[0] = Particle::new(Vector3::new(-0.3, 0.0, 0.0), Vector3::new(1e9, 0.0, 0.0), 1.0).unwrap();
    let sc = build_scenario(c).unwrap();
    let r = run_picard(&sc, &PicardOptions::from_scenario(&sc));
    assert!(matches!(r, Err(Error::SpeedLimit { .. })), "{r:?}");
}
