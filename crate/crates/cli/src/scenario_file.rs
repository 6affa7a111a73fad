//! Scenario files: `[section]` headers, `key = value` lines, `#` comments.
//! Vectors are whitespace-separated numbers; `particle` may repeat.
//!
//! ```text
//! [scenario]
//! name = like-sign-pair
//! initial_field = poisson-blob
//! mollifier_radius = 0.1
//!
//! [particles]
//! # x y z px py pz w
//! particle = -0.3 0 0  0  0.1 0  1
//! particle =  0.3 0 0  0 -0.1 0  1
//!
//! [numerics]
//! dt = 0.05
//! horizon = 1.5
//!
//! [monitors]
//! rho_max = 1e6
//! ```

use crate::error::CliError;
use nalgebra::Vector3;
use rvm_core::initial_field::Pulse;
use rvm_core::model::Particle;
use rvm_core::scenario::ScenarioConfig;
use std::collections::HashMap;
use std::path::Path;

const SECTIONS: [&str; 4] = ["scenario", "particles", "numerics", "monitors"];

struct Entry<'a> {
    line: usize,
    value: &'a str,
}

struct Parser<'a> {
    origin: &'a str,
    entries: HashMap<(String, String), Entry<'a>>,
    particles: Vec<Entry<'a>>,
}

impl<'a> Parser<'a> {
    fn err(&self, line: usize, field: &str, message: impl Into<String>) -> CliError {
        CliError::Malformed {
            origin: self.origin.to_string(),
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn scan(origin: &'a str, text: &'a str) -> Result<Self, CliError> {
        let mut p = Parser { origin, entries: HashMap::new(), particles: Vec::new() };
        let mut section: Option<&str> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(p.err(line, name, format!("unknown section; expected one of {}", SECTIONS.join(", "))));
                }
                section = Some(SECTIONS.iter().find(|s| **s == name).copied().unwrap_or_default());
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(p.err(line, body, "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            let Some(sec) = section else {
                return Err(p.err(line, key, "key appears before any section header"));
            };
            if sec == "particles" {
                if key != "particle" {
                    return Err(p.err(line, key, "only `particle` lines belong in [particles]"));
                }
                p.particles.push(Entry { line, value });
                continue;
            }
            let slot = (sec.to_string(), key.to_string());
            if let Some(prev) = p.entries.get(&slot) {
                return Err(p.err(line, key, format!("duplicate key (first set on line {})", prev.line)));
            }
            p.entries.insert(slot, Entry { line, value });
        }
        Ok(p)
    }

    fn take(&mut self, section: &str, key: &str) -> Option<Entry<'a>> {
        self.entries.remove(&(section.to_string(), key.to_string()))
    }

    fn numbers(&self, e: &Entry<'_>, field: &str, n: usize) -> Result<Vec<f64>, CliError> {
        let parts: Vec<&str> = e.value.split_whitespace().collect();
        if parts.len() != n {
            return Err(self.err(e.line, field, format!("expected {n} numbers, found {}", parts.len())));
        }
        parts
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.err(e.line, field, format!("`{s}` is not a finite number")))
            })
            .collect()
    }

    fn real(&mut self, section: &str, key: &str, into: &mut f64) -> Result<(), CliError> {
        if let Some(e) = self.take(section, key) {
            *into = self.numbers(&e, key, 1)?[0];
        }
        Ok(())
    }

    fn count(&self, e: &Entry<'_>, field: &str) -> Result<usize, CliError> {
        e.value
            .parse::<usize>()
            .map_err(|_| self.err(e.line, field, format!("`{}` is not a non-negative integer", e.value)))
    }

    fn vector(&mut self, section: &str, key: &str) -> Result<Option<(usize, Vector3<f64>)>, CliError> {
        match self.take(section, key) {
            Some(e) => {
                let v = self.numbers(&e, key, 3)?;
                Ok(Some((e.line, Vector3::new(v[0], v[1], v[2]))))
            }
            None => Ok(None),
        }
    }
}

/// Parses scenario text; `origin` names the source in diagnostics.
pub fn parse_scenario(text: &str, origin: &str) -> Result<ScenarioConfig, CliError> {
    let mut p = Parser::scan(origin, text)?;
    let mut cfg = ScenarioConfig::default();

    if let Some(e) = p.take("scenario", "name") {
        cfg.name = e.value.to_string();
    }
    if let Some(e) = p.take("scenario", "initial_field") {
        cfg.initial_field = e.value.to_string();
    }
    p.real("scenario", "mollifier_radius", &mut cfg.mollifier_radius)?;
    let amp = p.take("scenario", "pulse_amplitude");
    let width = p.take("scenario", "pulse_width");
    let centre = p.vector("scenario", "pulse_center")?;
    match (amp, width, centre) {
        (None, None, None) => {}
        (Some(a), Some(w), Some((_, c))) => {
            cfg.pulse = Some(Pulse {
                amplitude: p.numbers(&a, "pulse_amplitude", 1)?[0],
                width: p.numbers(&w, "pulse_width", 1)?[0],
                center: c,
            });
        }
        (a, w, c) => {
            let line = a.map(|e| e.line).or(w.map(|e| e.line)).or(c.map(|c| c.0)).unwrap_or(0);
            return Err(p.err(line, "pulse", "pulse_amplitude, pulse_width and pulse_center go together"));
        }
    }

    for e in std::mem::take(&mut p.particles) {
        let v = p.numbers(&e, "particle", 7)?;
        let particle = Particle::new(Vector3::new(v[0], v[1], v[2]), Vector3::new(v[3], v[4], v[5]), v[6])
            .map_err(|err| p.err(e.line, "particle", err.to_string()))?;
        cfg.particles.push(particle);
    }

    let n = &mut cfg.numerics;
    p.real("numerics", "dt", &mut n.dt)?;
    p.real("numerics", "horizon", &mut n.horizon)?;
    p.real("numerics", "picard_tol", &mut n.picard_tol)?;
    p.real("numerics", "grid_spacing", &mut n.grid_spacing)?;
    if let Some(e) = p.take("numerics", "sphere_order") {
        let v = p.numbers(&e, "sphere_order", 2)?;
        if v.iter().any(|x| x.fract() != 0.0 || *x < 0.0) {
            return Err(p.err(e.line, "sphere_order", "orders must be non-negative integers"));
        }
        n.sphere_order = (v[0] as usize, v[1] as usize);
    }
    if let Some(e) = p.take("numerics", "time_order") {
        n.time_order = p.count(&e, "time_order")?;
    }
    if let Some(e) = p.take("numerics", "picard_max_iter") {
        n.picard_max_iter = p.count(&e, "picard_max_iter")?;
    }
    match (p.vector("numerics", "grid_min")?, p.vector("numerics", "grid_max")?) {
        (None, None) => {}
        (Some((_, lo)), Some((_, hi))) => n.grid_box = Some((lo, hi)),
        (Some((line, _)), None) | (None, Some((line, _))) => {
            return Err(p.err(line, "grid_min/grid_max", "both corners of the grid box are required"));
        }
    }

    p.real("monitors", "rho_max", &mut cfg.monitors.rho_max)?;
    p.real("monitors", "gronwall_cap", &mut cfg.monitors.gronwall_cap)?;

    if let Some(((sec, key), e)) = p.entries.iter().min_by_key(|(_, e)| e.line) {
        return Err(p.err(e.line, key, format!("unknown key in [{sec}]")));
    }
    Ok(cfg)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_scenario(&text, &path.display().to_string())
}
