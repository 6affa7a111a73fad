//! Energies, the Poynting identity, the density-current chain and the
//! continuation monitor.

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::manufactured::{sample_on_grid, ManufacturedOptions, ManufacturedSource};
use nalgebra::Vector3;
use serde::Serialize;

/// Field magnitude on the grid boundary below which no energy leaves the window.
pub const BOUNDARY_THRESHOLD: f64 = 1e-10;

fn vectors<'a>(f: &'a GridField, what: &str) -> Result<&'a [Vector3<f64>]> {
    f.as_vector()
        .ok_or_else(|| Error::GridMismatch(format!("{what} must be a vector field")))
}

fn same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch("fields live on different grids".into()));
    }
    Ok(())
}

/// `½ Σ (|E|² + |B|²) h³`.
pub fn field_energy(e: &GridField, b: &GridField) -> Result<f64> {
    same_grid(&e.spec, &b.spec)?;
    let (ev, bv) = (vectors(e, "E")?, vectors(b, "B")?);
    let s: f64 = ev.iter().zip(bv).map(|(x, y)| x.norm_squared() + y.norm_squared()).sum();
    Ok(0.5 * s * e.spec.cell_volume())
}

/// `Σ j·E h³`.
pub fn work_integral(j: &GridField, e: &GridField) -> Result<f64> {
    same_grid(&j.spec, &e.spec)?;
    let (jv, ev) = (vectors(j, "j")?, vectors(e, "E")?);
    Ok(jv.iter().zip(ev).map(|(a, b)| a.dot(b)).sum::<f64>() * e.spec.cell_volume())
}

/// Fields and current at one time level.
#[derive(Debug, Clone, Copy)]
pub struct FieldLevel<'a> {
    pub e: &'a GridField,
    pub b: &'a GridField,
    pub j: &'a GridField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoyntingResult {
    /// `|d𝓔/dt + ∫ j·E|` with the centered energy difference.
    pub residual: f64,
    pub energy_rate: f64,
    pub work: f64,
    pub boundary_max: f64,
    /// Boundary fields stayed below [`BOUNDARY_THRESHOLD`] at all three levels.
    pub reliable: bool,
}

/// Poynting identity `d/dt ½∫(|E|²+|B|²) = −∫ j·E` at the middle of three levels spaced `dt`.
pub fn poynting_residual(prev: &FieldLevel<'_>, mid: &FieldLevel<'_>, next: &FieldLevel<'_>, dt: f64) -> Result<PoyntingResult> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("Poynting step must be positive".into()));
    }
    let energy_rate = (field_energy(next.e, next.b)? - field_energy(prev.e, prev.b)?) / (2.0 * dt);
    let work = work_integral(mid.j, mid.e)?;
    let boundary_max = [prev, mid, next]
        .iter()
        .flat_map(|l| [l.e.boundary_max_abs(), l.b.boundary_max_abs()])
        .fold(0.0, f64::max);
    Ok(PoyntingResult {
        residual: (energy_rate + work).abs(),
        energy_rate,
        work,
        boundary_max,
        reliable: boundary_max < BOUNDARY_THRESHOLD,
    })
}

/// Reference resolution for the manufactured Poynting check.
pub struct PoyntingReference;

impl PoyntingReference {
    pub const SPACING: f64 = 0.2;
    pub const HALF_WIDTH: f64 = 4.8;
    pub const DELTA: f64 = 0.5;
    pub const OMEGA: f64 = 4.0;
    pub const TIME: f64 = 1.0;
    pub const STEPS: [f64; 3] = [0.04, 0.02, 0.01];

    pub fn grid() -> Result<GridSpec> {
        let l = Vector3::repeat(Self::HALF_WIDTH);
        GridSpec::covering(&-l, &l, Self::SPACING)
    }
}

/// Poynting residual of a manufactured source at `t` for each step in `dts`.
pub fn poynting_study(
    source: &dyn ManufacturedSource,
    t: f64,
    dts: &[f64],
    spec: &GridSpec,
    opts: &ManufacturedOptions,
) -> Result<Vec<(f64, PoyntingResult)>> {
    let (em, bm, jm) = sample_on_grid(source, t, spec, opts)?;
    let mid = FieldLevel { e: &em, b: &bm, j: &jm };
    dts.iter()
        .map(|&dt| {
            let (e0, b0, j0) = sample_on_grid(source, t - dt, spec, opts)?;
            let (e1, b1, j1) = sample_on_grid(source, t + dt, spec, opts)?;
            let r = poynting_residual(
                &FieldLevel { e: &e0, b: &b0, j: &j0 },
                &mid,
                &FieldLevel { e: &e1, b: &b1, j: &j1 },
                dt,
            )?;
            Ok((dt, r))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Margins {
    /// `min_x (ρ − |j|)`.
    pub current_density: f64,
    /// `‖ρ‖_∞‖ρ‖₁ − ‖j‖²₂`.
    pub l2_chain: f64,
    pub sup_rho: f64,
    pub l1_rho: f64,
    pub j_l2_sq: f64,
}

impl Lemma1Margins {
    pub fn min_margin(&self) -> f64 {
        self.current_density.min(self.l2_chain)
    }
}

/// `|j| ≤ ρ` nodewise and `‖j‖²₂ ≤ ‖ρ‖_∞‖ρ‖₁`. For signed ensembles pass the
/// deposit of `|w|` as `rho`.
pub fn lemma1_chain(rho: &GridField, j: &GridField) -> Result<Lemma1Margins> {
    same_grid(&rho.spec, &j.spec)?;
    let r = rho
        .as_scalar()
        .ok_or_else(|| Error::GridMismatch("rho must be a scalar field".into()))?;
    let jv = vectors(j, "j")?;
    let current_density = r.iter().zip(jv).map(|(a, b)| a - b.norm()).fold(f64::INFINITY, f64::min);
    let sup_rho = rho.max_abs();
    let l1_rho = rho.l1();
    let j_l2_sq = j.l2_squared();
    Ok(Lemma1Margins {
        current_density,
        l2_chain: sup_rho * l1_rho - j_l2_sq,
        sup_rho,
        l1_rho,
        j_l2_sq,
    })
}

/// Margins of `𝓔(t) ≤ (𝓔(0) + C/2)eᵗ − C/2`, `C = max_s ‖j(s)‖²₂`, which follows
/// from `d𝓔/dt = −∫ j·E ≤ ½‖j‖² + 𝓔`.
pub fn energy_bound_margins(times: &[f64], energies: &[f64], j_l2_sq: &[f64]) -> Result<Vec<f64>> {
    if times.len() != energies.len() || times.len() != j_l2_sq.len() || times.is_empty() {
        return Err(Error::InsufficientData("energy bound needs matching non-empty series".into()));
    }
    let c = j_l2_sq.iter().copied().fold(0.0, f64::max);
    let (t0, e0) = (times[0], energies[0]);
    Ok(times
        .iter()
        .zip(energies)
        .map(|(t, e)| (e0 + 0.5 * c) * (t - t0).exp() - 0.5 * c - e)
        .collect())
}

/// `min_x (S W̄ − h)` with `S` the bound on `sup ρ`.
pub fn energy_density_margin(h: &GridField, sup_rho: f64, wbar: f64) -> Result<f64> {
    let hv = h
        .as_scalar()
        .ok_or_else(|| Error::GridMismatch("h must be a scalar field".into()))?;
    Ok(hv.iter().map(|v| sup_rho * wbar - v).fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuationThresholds {
    pub rho_max: f64,
}

/// Monitor input at one time node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuationSample {
    pub t: f64,
    /// Largest `sup ρ` bound over all iterates.
    pub sup_rho: f64,
    /// [`energy_density_margin`] at this node.
    pub h_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breach {
    pub t: f64,
    pub which: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Breached,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Ok => "ok",
            Status::Breached => "breached",
        })
    }
}

/// `sup ρ ≤ ρ_max` and `h ≤ sup ρ · W̄` at every node; breaches are reported, not raised.
pub fn continuation_monitor(samples: &[ContinuationSample], th: &ContinuationThresholds) -> (Status, Vec<Breach>) {
    let mut breaches = Vec::new();
    for s in samples {
        if !(s.sup_rho <= th.rho_max) {
            breaches.push(Breach { t: s.t, which: "rho".into() });
        }
        if !(s.h_margin >= 0.0) {
            breaches.push(Breach { t: s.t, which: "h".into() });
        }
    }
    let status = if breaches.is_empty() { Status::Ok } else { Status::Breached };
    (status, breaches)
}

/// Smallest `c` with `k(t_m) ≤ c (1 + ∫₀^{t_m} k)` at every node, for the
/// field-Gronwall structure check (`k = sup(|E| + |B|)`, trapezoid rule).
pub fn gronwall_field_constant(times: &[f64], sup_kbar: &[f64]) -> Result<f64> {
    if times.len() != sup_kbar.len() || times.is_empty() {
        return Err(Error::InsufficientData("field Gronwall check needs matching series".into()));
    }
    let mut integral = 0.0;
    let mut c: f64 = 0.0;
    for m in 0..times.len() {
        if m > 0 {
            integral += 0.5 * (times[m] - times[m - 1]) * (sup_kbar[m] + sup_kbar[m - 1]);
        }
        c = c.max(sup_kbar[m] / (1.0 + integral));
    }
    Ok(c)
}
