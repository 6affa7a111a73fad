//! A full monitored run: Picard iteration, deposition of the final iterate,
//! fields on the grid, and every margin of the continuation argument.

use crate::diagnostics::{
    continuation_monitor, energy_bound_margins, energy_density_margin, field_energy, gronwall_field_constant,
    lemma1_chain, poynting_residual, Breach, ContinuationSample, ContinuationThresholds, FieldLevel, Status,
};
use crate::error::Result;
use crate::grid::{deposit_moments, sup_bound, GridField, GridSpec, Moments, Quantity};
use crate::kernels::{KERNEL_BOUND_A, KERNEL_BOUND_B};
use crate::lightcone::{cone_integral, verify_lemma2, ConeIntegralSpec, ConeOrders, SpacetimeGrid};
use crate::model::Particle;
use crate::picard::{
    covering_grid, gronwall_check, homogeneous_work, initial_field_constant, run_picard, scenario_kirchhoff,
    working_inequality_check, GronwallFit, IterateRecord, PicardOptions, PicardRun, WorkingGrids,
};
use crate::retarded::FieldEvaluator;
use crate::scenario::Scenario;
use crate::trajectory::TrajectoryHistory;
use rayon::prelude::*;
use serde::Serialize;

/// Relative slack in `h ≤ sup ρ · W̄`, which is an equality for cold
/// ensembles and would otherwise trip on the last bit of `√(1 + |p|²)`.
const ROUND_OFF: f64 = 1e-12;

/// Refinement change below which the cone-integral margins are trusted.
pub const CONE_REFINEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub picard: PicardOptions,
    /// Orders for the cumulative `I₀`, `I₁` along each characteristic; panels
    /// count per time step.
    pub working_orders: ConeOrders,
    pub lemma2_orders: ConeOrders,
    /// Number of σ values per particle at which Lemma 2 is checked.
    pub lemma2_sigmas: usize,
}

impl SimulationOptions {
    pub fn for_scenario(s: &Scenario) -> Result<Self> {
        Ok(Self {
            picard: PicardOptions::from_scenario(s),
            working_orders: ConeOrders::new(1, s.config.numerics.time_order, 16, 32)?,
            lemma2_orders: ConeOrders::new(8, s.config.numerics.time_order, 16, 32)?,
            lemma2_sigmas: 4,
        })
    }
}

/// One output row per time node of the final iterate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub t: f64,
    pub sup_rho: f64,
    pub l1_rho: f64,
    pub sup_h: f64,
    pub j_l2_sq: f64,
    pub field_energy: f64,
    /// Centered, so absent at the two end nodes.
    pub poynting_residual: Option<f64>,
    pub pbar: f64,
    pub wbar: f64,
    pub envelope_w: Option<f64>,
    pub margin_gronwall: Option<f64>,
    pub margin_working: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateSummary {
    pub n: usize,
    pub distance: Option<f64>,
    pub ratio: Option<f64>,
    pub pbar_max: f64,
    pub wbar_max: f64,
    pub sup_rho_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GronwallSummary {
    pub c0: f64,
    pub c_t: f64,
    pub c_t_integral: f64,
    pub w0: f64,
    pub min_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelConstants {
    pub c_a: f64,
    pub c_b: f64,
}

/// Smallest value of every monitored margin over the run. `energy_bound` is
/// only enforced when the Poynting window is reliable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginSummary {
    pub lemma1_current_density: f64,
    pub lemma1_l2_chain: f64,
    pub energy_bound: f64,
    pub energy_bound_enforced: bool,
    pub h_density: f64,
    pub lemma2_m0: f64,
    pub lemma2_m1: f64,
    pub lemma2_cauchy_schwarz: f64,
    pub working: f64,
    pub working_chain: f64,
    pub gronwall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSummary {
    pub origin: [f64; 3],
    pub spacing: f64,
    pub dims: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub initial_field: String,
    pub particles: usize,
    pub signed_weights: bool,
    pub self_force_excluded: bool,
    pub iterations: usize,
    pub converged: bool,
    pub fixed_point_distance: Option<f64>,
    pub gronwall: Option<GronwallSummary>,
    pub kernel_constants: KernelConstants,
    pub field_gronwall_constant: f64,
    pub margins: MarginSummary,
    pub status: Status,
    pub breaches: Vec<Breach>,
    pub poynting_reliable: bool,
    /// Largest relative change of the working cone integrals under doubled orders.
    pub cone_refinement_change: f64,
    /// `cone_refinement_change` below [`CONE_REFINEMENT_TOL`].
    pub cone_quadrature_trusted: bool,
    pub l1_drift: f64,
    pub grid: GridSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub rows: Vec<DiagnosticRow>,
    pub iterates: Vec<IterateSummary>,
    pub summary: Summary,
    pub run: PicardRun,
}

fn particles_at(history: &TrajectoryHistory, m: usize) -> Result<Vec<Particle>> {
    history
        .tracks()
        .iter()
        .zip(history.weights())
        .map(|(tr, w)| Particle::new(tr.x[m], tr.p[m], *w))
        .collect()
}

fn deposit_iterate(rec: &IterateRecord, spec: &GridSpec, s: &Scenario) -> Result<Vec<Moments>> {
    let grid = rec.history.grid();
    (0..grid.nodes())
        .into_par_iter()
        .map(|m| deposit_moments(&particles_at(&rec.history, m)?, spec, &s.mollifier, grid.time(m)))
        .collect()
}

struct Fields {
    e: GridField,
    b: GridField,
    kbar: Vec<f64>,
}

fn fields_on_grid(ev: &FieldEvaluator<'_>, spec: &GridSpec, t: f64) -> Result<Fields> {
    let samples = spec
        .points()
        .into_par_iter()
        .map(|x| ev.field_at(t, &x, None))
        .collect::<Result<Vec<_>>>()?;
    let kbar = samples.iter().map(|f| f.kbar()).collect();
    let e = GridField::vector(*spec, Quantity::E, t, samples.iter().map(|f| f.e).collect())?;
    let b = GridField::vector(*spec, Quantity::B, t, samples.iter().map(|f| f.b).collect())?;
    Ok(Fields { e, b, kbar })
}

fn min_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

fn interpolate_series(times: &[f64], values: &[f64], s: f64) -> f64 {
    let n = times.len();
    if n == 1 || s <= times[0] {
        return values[0];
    }
    let m = times.partition_point(|&t| t <= s).clamp(1, n - 1) - 1;
    let lam = ((s - times[m]) / (times[m + 1] - times[m])).clamp(0.0, 1.0);
    (1.0 - lam) * values[m] + lam * values[m + 1]
}

pub fn simulate(scenario: &Scenario, opts: &SimulationOptions) -> Result<SimulationReport> {
    let run = run_picard(scenario, &opts.picard)?;
    let cfg = &scenario.config;
    let spacing = cfg.numerics.grid_spacing;
    let spec = match &cfg.numerics.grid_box {
        Some((lo, hi)) => GridSpec::covering(lo, hi, spacing)?,
        None => covering_grid(&run, scenario.mollifier.cutoff_radius(), spacing)?,
    };
    let final_rec = run.last();
    let history = &final_rec.history;
    let time = *history.grid();
    let times = time.times();
    let nodes = time.nodes();
    let mut breaches = Vec::new();

    // Moments of every iterate feed the continuation monitor and the drift check.
    let mut sup_rho_all = vec![0.0f64; nodes];
    let mut h_margin_all = vec![f64::INFINITY; nodes];
    let mut iterate_rho_max = Vec::with_capacity(run.iterates.len());
    let mut l1_drift: f64 = 0.0;
    let l1_ref = cfg.particles.iter().map(|p| p.w.abs()).sum::<f64>();
    let mut final_moments = Vec::new();
    for rec in &run.iterates {
        let moments = deposit_iterate(rec, &spec, scenario)?;
        let mut rho_max: f64 = 0.0;
        for (m, mo) in moments.iter().enumerate() {
            let nodal = mo.rho_abs.max_abs();
            let sup = sup_bound(nodal, spacing, &scenario.mollifier);
            sup_rho_all[m] = sup_rho_all[m].max(sup);
            rho_max = rho_max.max(sup);
            let hm = energy_density_margin(&mo.h_abs, nodal * (1.0 + ROUND_OFF), rec.support.wbar[m])?;
            h_margin_all[m] = h_margin_all[m].min(hm);
            l1_drift = l1_drift.max((mo.rho_abs.l1() - l1_ref).abs());
        }
        iterate_rho_max.push(rho_max);
        if rec.n == final_rec.n {
            final_moments = moments;
        }
    }

    // Fields of the converged iterate on the grid.
    let kirchhoff = scenario_kirchhoff(scenario)?;
    let ev = FieldEvaluator {
        history: Some(history),
        initial: scenario.initial.as_ref(),
        mollifier: scenario.mollifier,
        kirchhoff: kirchhoff.clone(),
    };
    let fields = times.iter().map(|t| fields_on_grid(&ev, &spec, *t)).collect::<Result<Vec<_>>>()?;
    let energies = fields.iter().map(|f| field_energy(&f.e, &f.b)).collect::<Result<Vec<_>>>()?;
    let mut poynting = vec![None; nodes];
    let mut reliable = true;
    let level = |i: usize| FieldLevel { e: &fields[i].e, b: &fields[i].b, j: &final_moments[i].current };
    for (m, slot) in poynting.iter_mut().enumerate().take(nodes.saturating_sub(1)).skip(1) {
        let r = poynting_residual(&level(m - 1), &level(m), &level(m + 1), time.dt())?;
        reliable &= r.reliable;
        *slot = Some(r.residual);
    }

    // Lemma 1 on the final iterate; ρ is the |w| deposit so signed runs stay meaningful.
    let lemma1 = final_moments
        .iter()
        .map(|mo| lemma1_chain(&mo.rho_abs, &mo.current))
        .collect::<Result<Vec<_>>>()?;
    let j_l2: Vec<f64> = lemma1.iter().map(|l| l.j_l2_sq).collect();
    let energy_margins = energy_bound_margins(&times, &energies, &j_l2)?;
    for (m, l) in lemma1.iter().enumerate() {
        if !(l.min_margin() >= 0.0) {
            breaches.push(Breach { t: times[m], which: "lemma1".into() });
        }
        if reliable && !(energy_margins[m] >= 0.0) {
            breaches.push(Breach { t: times[m], which: "energy".into() });
        }
    }

    // Continuation criterion.
    let samples: Vec<ContinuationSample> = (0..nodes)
        .map(|m| ContinuationSample { t: times[m], sup_rho: sup_rho_all[m], h_margin: h_margin_all[m] })
        .collect();
    let (_, cont) = continuation_monitor(&samples, &ContinuationThresholds { rho_max: cfg.monitors.rho_max });
    breaches.extend(cont);

    // Space-time grids of h and h|K̄| for the light-cone integrals.
    let h_slices: Vec<Vec<f64>> = final_moments.iter().map(|mo| mo.h_abs.as_scalar().unwrap_or(&[]).to_vec()).collect();
    let hk_slices: Vec<Vec<f64>> = h_slices
        .iter()
        .zip(&fields)
        .map(|(h, f)| h.iter().zip(&f.kbar).map(|(a, b)| a * b).collect())
        .collect();
    let kbar_l2: Vec<f64> = fields
        .iter()
        .map(|f| (f.kbar.iter().map(|k| k * k).sum::<f64>() * spec.cell_volume()).sqrt())
        .collect();
    let h_grid = SpacetimeGrid::new(spec, times.clone(), h_slices)?;
    let hk_grid = SpacetimeGrid::new(spec, times.clone(), hk_slices)?;
    let wbar = &final_rec.support.wbar;

    // Lemma 2 at a few σ per characteristic.
    let (mut l2_m0, mut l2_m1, mut l2_cs) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let wbar_fn = |s: f64| interpolate_series(&times, wbar, s);
    for k in 0..history.len() {
        let tv = history.track(k);
        let cone = ConeIntegralSpec {
            k: 0,
            trajectory: &tv,
            g: &h_grid,
            sigma0: 0.0,
            t: time.end(),
            orders: opts.lemma2_orders.clone(),
        };
        for i in 0..opts.lemma2_sigmas {
            let sigma = time.end() * i as f64 / opts.lemma2_sigmas.max(1) as f64;
            let l = verify_lemma2(&cone, sigma, &wbar_fn)?;
            l2_m0 = l2_m0.min(l.m0);
            l2_m1 = l2_m1.min(l.m1);
            l2_cs = l2_cs.min(l.cs_margin);
            if !(l.min_margin() >= 0.0) {
                breaches.push(Breach { t: sigma, which: "lemma2".into() });
            }
        }
    }

    // Working inequality along every characteristic.
    let grids = WorkingGrids { h: &h_grid, h_kbar: &hk_grid, kbar_l2: &kbar_l2, wbar };
    let mut working_rows = vec![f64::INFINITY; nodes];
    let mut working_chain = f64::INFINITY;
    for k in 0..history.len() {
        let hw = homogeneous_work(scenario, history, k, &kirchhoff)?;
        let ws = working_inequality_check(history, k, &hw, &grids, &opts.working_orders)?;
        for (r, v) in working_rows.iter_mut().zip(&ws.margins) {
            *r = r.min(*v);
        }
        working_chain = working_chain.min(ws.min_chain_margin());
    }
    for (m, v) in working_rows.iter().enumerate() {
        if !(*v >= 0.0) {
            breaches.push(Breach { t: times[m], which: "working".into() });
        }
    }
    if !(working_chain >= 0.0) {
        breaches.push(Breach { t: time.end(), which: "working_chain".into() });
    }

    // Relative change of the full-window cone integrals when every order doubles.
    let refined = opts.working_orders.refined()?;
    let mut refinement_change: f64 = 0.0;
    for k in 0..history.len() {
        let tv = history.track(k);
        for (g, kk) in [(&h_grid, 0), (&hk_grid, 1)] {
            let base = ConeIntegralSpec { k: kk, trajectory: &tv, g, sigma0: 0.0, t: time.end(), orders: opts.working_orders.clone() };
            let a = cone_integral(&base)?;
            let b = cone_integral(&ConeIntegralSpec { orders: refined.clone(), ..base })?;
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                refinement_change = refinement_change.max((b - a).abs() / scale);
            }
        }
    }

    // Gronwall envelope over all iterates.
    let c0 = initial_field_constant(scenario, &run)?;
    let tilde = run.tilde_wbar();
    let fit: Option<GronwallFit> = match gronwall_check(&times, &tilde, c0, cfg.monitors.gronwall_cap) {
        Ok(f) => Some(f),
        Err(crate::Error::NoEnvelope { .. }) => {
            breaches.push(Breach { t: time.end(), which: "gronwall".into() });
            None
        }
        Err(e) => return Err(e),
    };
    if let Some(f) = &fit {
        for (m, v) in f.margins.iter().enumerate() {
            if !(*v >= 0.0) {
                breaches.push(Breach { t: times[m], which: "gronwall".into() });
            }
        }
    }

    breaches.sort_by(|a, b| a.t.total_cmp(&b.t).then_with(|| a.which.cmp(&b.which)));
    breaches.dedup();
    let status = if breaches.is_empty() { Status::Ok } else { Status::Breached };
    let breached_at = |t: f64| breaches.iter().any(|b| (b.t - t).abs() <= 1e-12 * (1.0 + t));

    let rows = (0..nodes)
        .map(|m| {
            let mo = &final_moments[m];
            DiagnosticRow {
                t: times[m],
                sup_rho: sup_bound(mo.rho_abs.max_abs(), spacing, &scenario.mollifier),
                l1_rho: mo.rho_abs.l1(),
                sup_h: sup_bound(mo.h_abs.max_abs(), spacing, &scenario.mollifier),
                j_l2_sq: j_l2[m],
                field_energy: energies[m],
                poynting_residual: poynting[m],
                pbar: final_rec.support.pbar[m],
                wbar: wbar[m],
                envelope_w: fit.as_ref().map(|f| f.envelope.eval(times[m] - times[0])),
                margin_gronwall: fit.as_ref().map(|f| f.margins[m]),
                margin_working: working_rows[m],
                status: if breached_at(times[m]) { Status::Breached } else { Status::Ok },
            }
        })
        .collect();

    let ratios = run.ratios();
    let iterates = run
        .iterates
        .iter()
        .zip(&ratios)
        .zip(&iterate_rho_max)
        .map(|((r, q), rho)| IterateSummary {
            n: r.n,
            distance: r.distance,
            ratio: *q,
            pbar_max: r.support.pbar.last().copied().unwrap_or(0.0),
            wbar_max: r.support.wbar.last().copied().unwrap_or(1.0),
            sup_rho_max: *rho,
        })
        .collect();

    let sup_kbar: Vec<f64> = fields.iter().map(|f| f.kbar.iter().copied().fold(0.0, f64::max)).collect();
    let summary = Summary {
        scenario: cfg.name.clone(),
        initial_field: scenario.initial.name().to_string(),
        particles: cfg.particles.len(),
        signed_weights: scenario.signed_weights,
        self_force_excluded: true,
        iterations: final_rec.n,
        converged: run.converged,
        fixed_point_distance: run.fixed_point_distance,
        gronwall: fit.as_ref().map(|f| GronwallSummary {
            c0: f.envelope.c0,
            c_t: f.envelope.c_t,
            c_t_integral: f.c_t_integral,
            w0: f.envelope.w0,
            min_margin: f.min_margin(),
        }),
        kernel_constants: KernelConstants { c_a: KERNEL_BOUND_A, c_b: KERNEL_BOUND_B },
        field_gronwall_constant: gronwall_field_constant(&times, &sup_kbar)?,
        margins: MarginSummary {
            lemma1_current_density: min_of(lemma1.iter().map(|l| l.current_density)),
            lemma1_l2_chain: min_of(lemma1.iter().map(|l| l.l2_chain)),
            energy_bound: min_of(energy_margins.iter().copied()),
            energy_bound_enforced: reliable,
            h_density: min_of(h_margin_all.iter().copied()),
            lemma2_m0: l2_m0,
            lemma2_m1: l2_m1,
            lemma2_cauchy_schwarz: l2_cs,
            working: min_of(working_rows.iter().copied()),
            working_chain,
            gronwall: fit.as_ref().map(|f| f.min_margin()),
        },
        status,
        breaches,
        poynting_reliable: reliable,
        cone_refinement_change: refinement_change,
        cone_quadrature_trusted: refinement_change < CONE_REFINEMENT_TOL,
        l1_drift,
        grid: GridSummary { origin: spec.origin, spacing: spec.spacing, dims: spec.dims },
    };
    Ok(SimulationReport { rows, iterates, summary, run })
}
