//! `key = value` run configuration.
//!
//! Sources are layered: built-in defaults, then a config file, then
//! command-line overrides. Unknown keys are errors at every layer.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use snewton::solver::{InitialGuess, SolverConfig};
use snewton::symmetry::DiagnosticOptions;
use snewton::SymmetryClass;

/// Tolerances for `verify` and `compare`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckTolerances {
    /// Nehari feasibility `|⟨I′(u),u⟩| / ‖u‖²_{H¹}`.
    pub tol_nehari: f64,
    /// Normalized reflection asymmetry about the detected axis.
    pub tol_asymmetry: f64,
    /// Lower bound on `min w_λ / ‖u‖_∞` over planes left of the axis.
    pub tol_movingplane: f64,
    /// Ray maximality `(sup_t I(tu) − I(u)) / |I(u)|`.
    pub tol_ray: f64,
    pub ray_t_max: f64,
    pub ray_samples: usize,
    /// The decay slope must not exceed `−(1 − decay_epsilon)`.
    pub decay_epsilon: f64,
    /// `compare --assert-gap` requires the gap to exceed this many error bars.
    pub gap_factor: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        Self {
            tol_nehari: 1e-8,
            tol_asymmetry: 1e-3,
            tol_movingplane: 1e-6,
            tol_ray: 1e-8,
            ray_t_max: 4.0,
            ray_samples: 401,
            decay_epsilon: 0.15,
            gap_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticOptions,
    pub checks: CheckTolerances,
}

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "p",
    "L",
    "n",
    "symmetry",
    "tol_residual",
    "max_iters",
    "step0",
    "backtrack",
    "seed",
    "initial_guess",
    "recenter_every",
    "tail_floor",
    "decay_inner",
    "decay_outer",
    "decay_floor",
    "asymptote_inner",
    "asymptote_outer",
    "tol_nehari",
    "tol_asymmetry",
    "tol_movingplane",
    "tol_ray",
    "ray_t_max",
    "ray_samples",
    "decay_epsilon",
    "gap_factor",
];

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| anyhow!("invalid value '{value}' for key '{key}'"))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.solver;
        let d = &mut self.diagnostics;
        let c = &mut self.checks;
        match key {
            "p" => s.p = num(key, value)?,
            "L" => s.half_width = num(key, value)?,
            "n" => s.n = num(key, value)?,
            "symmetry" => s.symmetry = value.parse::<SymmetryClass>()?,
            "tol_residual" => s.tol_residual = num(key, value)?,
            "max_iters" => s.max_iters = num(key, value)?,
            "step0" => s.step0 = num(key, value)?,
            "backtrack" => s.backtrack = num(key, value)?,
            "seed" => s.seed = num(key, value)?,
            "initial_guess" => s.initial_guess = value.parse::<InitialGuess>()?,
            "recenter_every" => s.recenter_every = num(key, value)?,
            "tail_floor" => d.tail_floor = num(key, value)?,
            "decay_inner" => d.decay_inner = num(key, value)?,
            "decay_outer" => d.decay_outer = num(key, value)?,
            "decay_floor" => d.decay_floor = num(key, value)?,
            "asymptote_inner" => d.asymptote_inner = num(key, value)?,
            "asymptote_outer" => d.asymptote_outer = num(key, value)?,
            "tol_nehari" => c.tol_nehari = num(key, value)?,
            "tol_asymmetry" => c.tol_asymmetry = num(key, value)?,
            "tol_movingplane" => c.tol_movingplane = num(key, value)?,
            "tol_ray" => c.tol_ray = num(key, value)?,
            "ray_t_max" => c.ray_t_max = num(key, value)?,
            "ray_samples" => c.ray_samples = num(key, value)?,
            "decay_epsilon" => c.decay_epsilon = num(key, value)?,
            "gap_factor" => c.gap_factor = num(key, value)?,
            other => bail!("unknown config key '{other}'"),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        let (s, d, c) = (&self.solver, &self.diagnostics, &self.checks);
        match key {
            "p" => s.p.to_string(),
            "L" => s.half_width.to_string(),
            "n" => s.n.to_string(),
            "symmetry" => s.symmetry.to_string(),
            "tol_residual" => s.tol_residual.to_string(),
            "max_iters" => s.max_iters.to_string(),
            "step0" => s.step0.to_string(),
            "backtrack" => s.backtrack.to_string(),
            "seed" => s.seed.to_string(),
            "initial_guess" => s.initial_guess.to_string(),
            "recenter_every" => s.recenter_every.to_string(),
            "tail_floor" => d.tail_floor.to_string(),
            "decay_inner" => d.decay_inner.to_string(),
            "decay_outer" => d.decay_outer.to_string(),
            "decay_floor" => d.decay_floor.to_string(),
            "asymptote_inner" => d.asymptote_inner.to_string(),
            "asymptote_outer" => d.asymptote_outer.to_string(),
            "tol_nehari" => c.tol_nehari.to_string(),
            "tol_asymmetry" => c.tol_asymmetry.to_string(),
            "tol_movingplane" => c.tol_movingplane.to_string(),
            "tol_ray" => c.tol_ray.to_string(),
            "ray_t_max" => c.ray_t_max.to_string(),
            "ray_samples" => c.ray_samples.to_string(),
            "decay_epsilon" => c.decay_epsilon.to_string(),
            "gap_factor" => c.gap_factor.to_string(),
            other => unreachable!("unknown key {other}"),
        }
    }

    /// All keys with their effective values.
    pub fn echo(&self) -> BTreeMap<String, String> {
        KEYS.iter().map(|k| (k.to_string(), self.get(k))).collect()
    }

    /// Defaults, then `file`, then `overrides`.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            for (k, v) in parse_pairs(&text)? {
                cfg.set(&k, &v)?;
            }
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

/// `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value", no + 1))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if !seen.insert(k.clone()) {
            bail!("line {}: duplicate key '{k}'", no + 1);
        }
        out.push((k, v));
    }
    Ok(out)
}

/// Parses a `key=value` command-line override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("expected KEY=VALUE, got '{s}'"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}
