//! Nehari-constrained, H¹-preconditioned gradient descent.
//!
//! One step is
//!
//! ```text
//! u ← N(Π(u − τ·(1 − Δ_h)⁻¹ r(u)))
//! ```
//!
//! with `r` the Euler–Lagrange residual, `Π` the symmetry projection and `N`
//! the closed-form Nehari rescaling. The step length is found by
//! backtracking until the action does not increase. Once steps become so
//! small that the action change is below round-off, the search switches to a
//! polishing mode that accepts a step when the preconditioned residual
//! decreases and the action rises by no more than round-off.
//!
//! Translation drift along `x₁` (and `x₂` without symmetry) is removed by
//! shifting the field by whole nodes at a fixed cadence.

use std::io::Write;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{self, energy_difference, EnergyBreakdown, Functional, State};
use crate::grid::{self, GridSpec, ScalarField, SymmetryClass};
use crate::precond::Preconditioner;

/// Admissible action rise in polishing mode, relative to `|I|`.
const POLISH_SLACK: f64 = 1e-14;
/// Smallest step before the line search gives up.
const STEP_FLOOR: f64 = 1e-10;
/// Largest step, relative to `step0`.
const STEP_CAP: f64 = 20.0;
/// Nehari feasibility required for convergence, relative to `‖u‖²_{H¹}`.
const NEHARI_TOL: f64 = 1e-8;
/// Relative amplitude of the seeded perturbation of the initial guess.
const SEED_NOISE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// `A·x₂·exp(−|x|²/σ²)`.
    DipoleGaussian,
    /// `A·exp(−|x|²/σ²)`.
    Gaussian,
    /// A stored SNF1 field on the same grid.
    FromFile(PathBuf),
}

impl std::str::FromStr for InitialGuess {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dipole_gaussian" => Ok(Self::DipoleGaussian),
            "gaussian" => Ok(Self::Gaussian),
            other => match other.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(Self::FromFile(PathBuf::from(path))),
                _ => Err(Error::Config(format!(
                    "unknown initial guess '{other}' (dipole_gaussian, gaussian, file:PATH)"
                ))),
            },
        }
    }
}

impl std::fmt::Display for InitialGuess {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::DipoleGaussian => f.write_str("dipole_gaussian"),
            Self::Gaussian => f.write_str("gaussian"),
            Self::FromFile(p) => write!(f, "file:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub p: f64,
    pub half_width: f64,
    pub n: usize,
    pub symmetry: SymmetryClass,
    pub tol_residual: f64,
    pub max_iters: usize,
    pub step0: f64,
    pub backtrack: f64,
    pub seed: u64,
    pub initial_guess: InitialGuess,
    /// Recentering cadence in accepted steps; 0 disables it.
    pub recenter_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            half_width: 12.0,
            n: 256,
            symmetry: SymmetryClass::OddInX2,
            tol_residual: 1e-6,
            max_iters: 20_000,
            step0: 0.5,
            backtrack: 0.5,
            seed: 0,
            initial_guess: InitialGuess::DipoleGaussian,
            recenter_every: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<GridSpec> {
        functional::check_exponent(self.p)?;
        let spec = GridSpec::new(self.half_width, self.n)?;
        if !(self.tol_residual > 0.0 && self.tol_residual.is_finite()) {
            return Err(Error::Config(format!("tol_residual must be positive, got {}", self.tol_residual)));
        }
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return Err(Error::Config(format!("step0 must be positive, got {}", self.step0)));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Config(format!("backtrack must lie in (0, 1), got {}", self.backtrack)));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iter: usize,
    pub action: f64,
    pub residual: f64,
    pub t_nehari: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub field: ScalarField,
    pub breakdown: EnergyBreakdown,
    /// `‖r‖_{L²}/‖u‖_{L²}`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub config: SolverConfig,
    pub log: Vec<IterationLog>,
    /// Action after every accepted step, starting with the initial guess.
    pub energies: Vec<f64>,
    /// Accepted steps taken in polishing mode.
    pub polish_steps: usize,
}

impl SolutionRecord {
    /// The iteration log as CSV with header `iter,I,residual,t_nehari,step`.
    pub fn write_log_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "iter,I,residual,t_nehari,step")?;
        for row in &self.log {
            writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{:.17e}",
                row.iter, row.action, row.residual, row.t_nehari, row.step
            )?;
        }
        Ok(())
    }
}

fn shape(spec: GridSpec, guess: &InitialGuess, sigma2: f64) -> ScalarField {
    match guess {
        InitialGuess::DipoleGaussian => ScalarField::from_fn(spec, |x, y| y * (-(x * x + y * y) / sigma2).exp()),
        _ => ScalarField::from_fn(spec, |x, y| (-(x * x + y * y) / sigma2).exp()),
    }
}

/// The starting field, rescaled onto the Nehari manifold.
///
/// Gaussian shapes start at width `σ² = 1`; since the sign of `V₀` does not
/// depend on the amplitude, the width is halved until `V₀ < 0` (a narrower
/// bump has more of its mass at distances below one). A nonzero seed adds a
/// small deterministic perturbation under the same envelope.
pub fn initial_guess(config: &SolverConfig) -> Result<ScalarField> {
    let spec = config.validate()?;
    let f = Functional::new(&spec, config.p)?;
    let base = match &config.initial_guess {
        InitialGuess::FromFile(path) => {
            let file = crate::snf1::read(path)?;
            spec.ensure_same(file.field.spec())?;
            file.field
        }
        guess => {
            let min_sigma2 = spec.cell_area();
            let mut sigma2 = 1.0;
            loop {
                let u = shape(spec, guess, sigma2);
                if f.state(&u)?.v0 < 0.0 {
                    break perturb(u, config.seed, sigma2);
                }
                if 0.5 * sigma2 < min_sigma2 {
                    return Err(Error::NoInitialGuess(format!(
                        "{guess} has V0 >= 0 for every width down to sigma^2 = {sigma2}"
                    )));
                }
                sigma2 *= 0.5;
            }
        }
    };
    let (_, u) = f.nehari_project(&base)?;
    Ok(u)
}

fn perturb(u: ScalarField, seed: u64, sigma2: f64) -> ScalarField {
    if seed == 0 {
        return u;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = SEED_NOISE * u.sup_norm();
    let spec = *u.spec();
    let envelope = ScalarField::from_fn(spec, |x, y| (-(x * x + y * y) / sigma2).exp());
    let noise: Vec<f64> = envelope
        .values()
        .iter()
        .map(|e| amp * e * rng.gen_range(-1.0..1.0))
        .collect();
    u.axpy(1.0, &ScalarField::from_values(spec, noise).expect("finite"))
}

/// Runs the descent from the configured initial guess.
pub fn minimize(config: &SolverConfig) -> Result<SolutionRecord> {
    let u0 = initial_guess(config)?;
    minimize_from(config, &u0)
}

fn relative_residual(r: &ScalarField, u: &ScalarField) -> f64 {
    (grid::l2_inner(r, r) / grid::l2_inner(u, u)).sqrt()
}

struct Iterate {
    state: State,
    residual: ScalarField,
    direction: ScalarField,
    /// `⟨r, (1 − Δ_h)⁻¹ r⟩^{1/2}`.
    dual_norm: f64,
    rel_residual: f64,
}

struct Context<'a> {
    f: &'a Functional,
    pre: &'a Preconditioner,
    symmetry: SymmetryClass,
}

impl Context<'_> {
    fn iterate(&self, state: State) -> Iterate {
        let residual = self.f.residual_with(&state.u, &state.w);
        let direction = self.symmetry.apply(&self.pre.apply(&residual));
        let dual_norm = grid::l2_inner(&residual, &direction).max(0.0).sqrt();
        let rel_residual = relative_residual(&residual, &state.u);
        Iterate {
            state,
            residual,
            direction,
            dual_norm,
            rel_residual,
        }
    }

    /// `Π(u)` rescaled onto the Nehari manifold.
    fn project(&self, u: &ScalarField) -> Result<(f64, State)> {
        let s = self.f.state(&self.symmetry.apply(u))?;
        self.f.nehari_project_state(&s)
    }
}

/// Shift by whole nodes so the `|u|`-weighted centroid sits within half a
/// node of the origin along the free directions.
fn recenter(u: &ScalarField, symmetry: SymmetryClass) -> Option<ScalarField> {
    let spec = u.spec();
    let n = spec.n();
    let (mut mass, mut c1, mut c2) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let a = u.get(i, j).abs();
            mass += a;
            c1 += a * spec.coord(i as isize);
            c2 += a * spec.coord(j as isize);
        }
    }
    if mass == 0.0 {
        return None;
    }
    let h = spec.spacing();
    let di = -(c1 / mass / h).round() as isize;
    let dj = match symmetry {
        SymmetryClass::None => -(c2 / mass / h).round() as isize,
        SymmetryClass::OddInX2 => 0,
    };
    (di != 0 || dj != 0).then(|| u.shifted(di, dj))
}

/// Flip the sign so the largest-magnitude value (over the upper half for odd
/// fields) is positive.
pub fn normalize_sign(u: &ScalarField, symmetry: SymmetryClass) -> ScalarField {
    let n = u.spec().n();
    let lo = match symmetry {
        SymmetryClass::OddInX2 => n / 2,
        SymmetryClass::None => 0,
    };
    let mut best = 0.0f64;
    for i in 0..n {
        for j in lo..n {
            let v = u.get(i, j);
            if v.abs() > best.abs() {
                best = v;
            }
        }
    }
    if best < 0.0 {
        u.scaled(-1.0)
    } else {
        u.clone()
    }
}

/// Runs the descent from `u0` (projected and rescaled first).
pub fn minimize_from(config: &SolverConfig, u0: &ScalarField) -> Result<SolutionRecord> {
    let spec = config.validate()?;
    spec.ensure_same(u0.spec())?;
    let p = config.p;
    let f = Functional::new(&spec, p)?;
    let pre = Preconditioner::new(&spec);
    let ctx = Context {
        f: &f,
        pre: &pre,
        symmetry: config.symmetry,
    };

    let (t0, s0) = ctx.project(u0)?;
    let mut it = ctx.iterate(s0);
    let mut action = it.state.action(p);
    let mut log = vec![IterationLog {
        iter: 0,
        action,
        residual: it.rel_residual,
        t_nehari: t0,
        step: 0.0,
    }];
    let mut energies = vec![action];
    let mut tau = config.step0;
    let step_cap = STEP_CAP * config.step0;
    let mut polish = false;
    let mut polish_steps = 0;
    let mut iterations = 0;

    let converged = loop {
        let nehari_ok = it.state.nehari_value().abs() <= NEHARI_TOL * it.state.h1;
        if it.rel_residual <= config.tol_residual && nehari_ok {
            break true;
        }
        if iterations >= config.max_iters {
            break false;
        }
        if config.recenter_every > 0 && iterations > 0 && iterations % config.recenter_every == 0 {
            if let Some(shifted) = recenter(&it.state.u, config.symmetry) {
                let (_, s) = ctx.project(&shifted)?;
                it = ctx.iterate(s);
                action = it.state.action(p);
            }
        }

        tau = (tau / config.backtrack).min(step_cap);
        let mut accepted = None;
        loop {
            let trial = it.state.u.axpy(-tau, &it.direction);
            if let Ok((t, s)) = ctx.project(&trial) {
                let de = energy_difference(&it.state, &s, p);
                if !polish && de <= 0.0 {
                    accepted = Some((t, ctx.iterate(s), tau));
                    break;
                }
                if polish && de <= POLISH_SLACK * action.abs() {
                    let next = ctx.iterate(s);
                    if next.dual_norm < it.dual_norm {
                        accepted = Some((t, next, tau));
                        break;
                    }
                }
            }
            tau *= config.backtrack;
            if tau < STEP_FLOOR {
                if polish {
                    break;
                }
                polish = true;
                tau = config.step0;
            }
        }
        let Some((t, next, step)) = accepted else {
            break it.rel_residual <= config.tol_residual;
        };
        it = next;
        iterations += 1;
        if polish {
            polish_steps += 1;
        }
        action = it.state.action(p);
        energies.push(action);
        log.push(IterationLog {
            iter: iterations,
            action,
            residual: it.rel_residual,
            t_nehari: t,
            step,
        });
    };

    let u = normalize_sign(&it.state.u, config.symmetry);
    let breakdown = f.energy(&u)?;
    let residual_norm = relative_residual(&it.residual, &it.state.u);
    Ok(SolutionRecord {
        field: u,
        breakdown,
        residual_norm,
        iterations,
        converged,
        config: config.clone(),
        log,
        energies,
        polish_steps,
    })
}

/// Bilinear interpolation onto any grid by physical coordinates, zero
/// outside the source nodes.
pub fn interpolate(u: &ScalarField, target: &GridSpec) -> ScalarField {
    let src = u.spec();
    let h = src.spacing();
    let offset = src.n() as f64 / 2.0 - 0.5;
    ScalarField::from_fn(*target, |x, y| {
        let (s, t) = (x / h + offset, y / h + offset);
        let (i0, j0) = (s.floor(), t.floor());
        let (a, b) = (s - i0, t - j0);
        let (i0, j0) = (i0 as isize, j0 as isize);
        let g = |di: isize, dj: isize| u.get_extended(i0 + di, j0 + dj);
        (1.0 - a) * ((1.0 - b) * g(0, 0) + b * g(0, 1)) + a * ((1.0 - b) * g(1, 0) + b * g(1, 1))
    })
}

/// Re-solves at `finer_n` nodes per axis from the interpolated converged
/// field and returns `|I_fine − I_coarse|`.
pub fn cross_validate(record: &SolutionRecord, finer_n: usize) -> Result<f64> {
    Ok(cross_validate_record(record, finer_n)?.0)
}

/// As [`cross_validate`], also returning the fine record.
pub fn cross_validate_record(record: &SolutionRecord, finer_n: usize) -> Result<(f64, SolutionRecord)> {
    if !record.converged {
        return Err(Error::NotConverged {
            iterations: record.iterations,
            residual: record.residual_norm,
        });
    }
    let coarse = record.field.spec();
    if finer_n < coarse.n() {
        return Err(Error::Config(format!(
            "cross-validation needs finer_n >= {}, got {finer_n}",
            coarse.n()
        )));
    }
    let mut config = record.config.clone();
    config.n = finer_n;
    let spec = config.validate()?;
    let u0 = if finer_n == coarse.n() {
        record.field.clone()
    } else {
        config.symmetry.apply(&interpolate(&record.field, &spec))
    };
    let fine = minimize_from(&config, &u0)?;
    if !fine.converged {
        return Err(Error::NotConverged {
            iterations: fine.iterations,
            residual: fine.residual_norm,
        });
    }
    Ok(((fine.breakdown.total - record.breakdown.total).abs(), fine))
}
