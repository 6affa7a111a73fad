//! Run modes, looked up by name in a registry of trait objects.

use crate::error::{exit, CliError};
use crate::oracles::{kernel_oracles, lightcone_oracles, maxwell_oracles, OracleCheck, OracleReport};
use crate::output;
use crate::scenario_file::load_scenario;
use rvm_core::diagnostics::Status;
use rvm_core::scenario::build_scenario;
use rvm_core::simulation::{simulate, SimulationOptions, Summary};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct RunContext {
    pub scenario: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub quiet: bool,
}

#[derive(Debug, Clone)]
pub struct ModeOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub headline: String,
}

pub trait Mode: Send + Sync {
    fn name(&self) -> &'static str;
    fn summary(&self) -> &'static str;
    fn run(&self, ctx: &RunContext) -> Result<ModeOutcome, CliError>;
}

pub struct ModeRegistry {
    modes: BTreeMap<&'static str, Box<dyn Mode>>,
}

impl ModeRegistry {
    pub fn empty() -> Self {
        Self { modes: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(SimulateMode));
        r.register(Box::new(ValidateMode {
            name: "validate-kernels",
            summary: "kernel bound sweep and gradient differences",
            suite: kernel_oracles::suite,
        }));
        r.register(Box::new(ValidateMode {
            name: "validate-maxwell",
            summary: "retarded fields, Maxwell and Poynting residuals, characteristics",
            suite: maxwell_oracles::suite,
        }));
        r.register(Box::new(ValidateMode {
            name: "validate-lightcone",
            summary: "angular integral table, Jacobian and cone-integral oracles",
            suite: lightcone_oracles::suite,
        }));
        r
    }

    pub fn register(&mut self, mode: Box<dyn Mode>) {
        self.modes.insert(mode.name(), mode);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.modes.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<&dyn Mode, CliError> {
        self.modes.get(name).map(|m| m.as_ref()).ok_or_else(|| {
            CliError::Core(rvm_core::Error::UnknownStrategy {
                kind: "mode",
                name: name.to_string(),
                known: self.names().join(", "),
            })
        })
    }
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[derive(Serialize)]
struct RunSummary<'a> {
    mode: &'static str,
    seed: u64,
    #[serde(flatten)]
    summary: &'a Summary,
}

struct SimulateMode;

impl Mode for SimulateMode {
    fn name(&self) -> &'static str {
        "simulate"
    }

    fn summary(&self) -> &'static str {
        "Picard run with diagnostics.csv, iterates.csv and summary.json"
    }

    fn run(&self, ctx: &RunContext) -> Result<ModeOutcome, CliError> {
        let path = ctx
            .scenario
            .as_deref()
            .ok_or_else(|| CliError::Usage("simulate needs --scenario PATH".into()))?;
        let scenario = build_scenario(load_scenario(path)?)?;
        let report = simulate(&scenario, &SimulationOptions::for_scenario(&scenario)?)?;
        prepare_out(&ctx.out)?;
        let diag = ctx.out.join("diagnostics.csv");
        let iters = ctx.out.join("iterates.csv");
        let summary = ctx.out.join("summary.json");
        output::write_diagnostics(&diag, &report.rows)?;
        output::write_iterates(&iters, &report.iterates)?;
        output::write_json(&summary, &RunSummary { mode: self.name(), seed: ctx.seed, summary: &report.summary })?;
        let s = &report.summary;
        let breached = s.status == Status::Breached;
        let mut headline = format!(
            "{}: {} after {} iterations (converged: {}), {} breaches",
            s.scenario,
            s.status,
            s.iterations,
            s.converged,
            s.breaches.len()
        );
        if !s.cone_quadrature_trusted {
            headline.push_str(&format!("; cone quadrature moves {:.1e} under refinement", s.cone_refinement_change));
        }
        if let Some(b) = s.breaches.first() {
            headline.push_str(&format!("; first '{}' at t = {}", b.which, b.t));
        }
        Ok(ModeOutcome {
            exit_code: if breached { exit::BREACH } else { exit::OK },
            artifacts: vec![diag, iters, summary],
            headline,
        })
    }
}

struct ValidateMode {
    name: &'static str,
    summary: &'static str,
    suite: fn(u64) -> rvm_core::Result<Vec<OracleCheck>>,
}

impl Mode for ValidateMode {
    fn name(&self) -> &'static str {
        self.name
    }

    fn summary(&self) -> &'static str {
        self.summary
    }

    fn run(&self, ctx: &RunContext) -> Result<ModeOutcome, CliError> {
        let report = OracleReport::new(self.name, ctx.seed, (self.suite)(ctx.seed)?);
        prepare_out(&ctx.out)?;
        let json = ctx.out.join("report.json");
        let text = ctx.out.join("report.txt");
        output::write_json(&json, &report)?;
        let table = report.table();
        output::write_text(&text, &table)?;
        if !ctx.quiet {
            print!("{table}");
        }
        let failed = report.failures().count();
        Ok(ModeOutcome {
            exit_code: if report.passed { exit::OK } else { exit::ORACLE },
            artifacts: vec![json, text],
            headline: format!("{}: {} checks, {} failed", self.name, report.checks.len(), failed),
        })
    }
}
