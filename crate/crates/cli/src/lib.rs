//! Command implementations for the `snewton` binary.
//!
//! Every command returns `Ok(true)` when all requested assertions passed,
//! `Ok(false)` when the run completed but an assertion failed (or the solver
//! did not converge), and `Err` for invalid input.

pub mod config;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use snewton::functional::Functional;
use snewton::grid::{self, make_grid, ScalarField, SymmetryClass};
use snewton::potential::{log_convolve_direct, log_convolve_fast};
use snewton::snf1::{self, sha256_hex, FieldFile};
use snewton::solver::{self, normalize_sign, SolutionRecord, SolverConfig};
use snewton::symmetry::{self, SymmetryReport};

use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn created_by() -> String {
    format!("snewton {VERSION}")
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileEntry {
    pub fn of(path: &Path) -> Result<Self> {
        let data = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(Self {
            path: path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: sha256_hex(&data),
            bytes: data.len() as u64,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub files: Vec<FileEntry>,
    pub timings: BTreeMap<String, f64>,
}

/// Error kind for the machine-readable error report.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    use snewton::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::InvalidGrid(_)) | Some(E::InvalidExponent(_)) | Some(E::Config(_)) => "config",
        Some(E::GridMismatch(_)) => "grid_mismatch",
        Some(E::Format(_)) => "format",
        Some(E::Io(_)) => "io",
        Some(E::NotConverged { .. }) => "not_converged",
        Some(E::NotNehariProjectable { .. }) | Some(E::NoInitialGuess(_)) | Some(E::ZeroField) => {
            "initial_guess"
        }
        Some(_) => "numerical",
        None if err.downcast_ref::<std::io::Error>().is_some() => "io",
        None => "usage",
    }
}

pub fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize)]
struct RecordSummary<'a> {
    #[serde(flatten)]
    breakdown: &'a snewton::EnergyBreakdown,
    residual_norm: f64,
    iterations: usize,
    polish_steps: usize,
    converged: bool,
}

/// `solve`: runs the solver and writes `NAME.snf`/`.bin`, `NAME.energy.json`,
/// `NAME.log.csv` and `NAME.manifest.json` into `out`.
pub fn cmd_solve(cfg: &RunConfig, out: &Path, name: &str) -> Result<bool> {
    let start = Instant::now();
    cfg.solver.validate()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let record = solver::minimize(&cfg.solver)?;
    let solve_secs = start.elapsed().as_secs_f64();

    let write_start = Instant::now();
    let meta = out.join(format!("{name}.snf"));
    let blob = snf1::write(
        &meta,
        &FieldFile {
            field: record.field.clone(),
            p: cfg.solver.p,
            symmetry: cfg.solver.symmetry,
            created_by: created_by(),
        },
    )?;
    let energy = out.join(format!("{name}.energy.json"));
    write_json(
        &energy,
        &RecordSummary {
            breakdown: &record.breakdown,
            residual_norm: record.residual_norm,
            iterations: record.iterations,
            polish_steps: record.polish_steps,
            converged: record.converged,
        },
    )?;
    let log = out.join(format!("{name}.log.csv"));
    let mut buf = Vec::new();
    record.write_log_csv(&mut buf)?;
    fs::write(&log, buf)?;

    let mut timings = BTreeMap::new();
    timings.insert("solve".to_string(), solve_secs);
    timings.insert("write".to_string(), write_start.elapsed().as_secs_f64());
    let manifest = RunManifest {
        version: VERSION.to_string(),
        command: "solve".into(),
        config: cfg.echo(),
        files: [&meta, &blob, &energy, &log]
            .into_iter()
            .map(|p| FileEntry::of(p))
            .collect::<Result<_>>()?,
        timings,
    };
    write_json(&out.join(format!("{name}.manifest.json")), &manifest)?;

    println!(
        "{}",
        json!({
            "converged": record.converged,
            "I": record.breakdown.total,
            "residual_norm": record.residual_norm,
            "iterations": record.iterations,
            "field": meta.display().to_string(),
        })
    );
    if !record.converged {
        eprintln!(
            "{}",
            error_json(
                "not_converged",
                &format!(
                    "no convergence after {} iterations (relative residual {:e})",
                    record.iterations, record.residual_norm
                )
            )
        );
    }
    Ok(record.converged)
}

pub const CHECKS: &[&str] = &[
    "residual",
    "nehari",
    "positivity",
    "symmetry",
    "monotonicity",
    "movingplane",
    "ray",
    "decay",
    "asymptotics",
];

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub file: String,
    pub symmetry_class: SymmetryClass,
    pub action: f64,
    pub checks: Vec<CheckResult>,
    pub report: SymmetryReport,
    pub passed: bool,
}

/// Parses a check selector: `all` or a comma-separated list.
pub fn select_checks(selector: &str) -> Result<Vec<&'static str>> {
    if selector.trim() == "all" {
        return Ok(CHECKS.to_vec());
    }
    selector
        .split(',')
        .map(|s| {
            let s = s.trim();
            CHECKS
                .iter()
                .copied()
                .find(|c| *c == s)
                .with_context(|| format!("unknown check '{s}' (known: all, {})", CHECKS.join(", ")))
        })
        .collect()
}

/// Runs the selected diagnostics on a field file.
pub fn verify_field(cfg: &RunConfig, path: &Path, selected: &[&str]) -> Result<VerifyReport> {
    let file = snf1::read(path)?;
    let p = file.p;
    let u = normalize_sign(&file.field, file.symmetry);
    let f = Functional::new(u.spec(), p)?;
    let breakdown = f.energy(&u)?;
    let report = symmetry::analyze(&u, p, &cfg.diagnostics)?;
    let tol = &cfg.checks;
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, value: f64, tolerance: f64, detail: String| {
        if selected.contains(&name) {
            checks.push(CheckResult {
                name: name.to_string(),
                passed,
                value,
                tolerance,
                detail,
            });
        }
    };

    let r = f.el_residual(&u)?;
    let rel = grid::l2_norm(&r) / grid::l2_norm(&u);
    push("residual", rel <= cfg.solver.tol_residual, rel, cfg.solver.tol_residual, "relative L2 residual".into());

    let neh = breakdown.nehari_value.abs() / breakdown.h1_part;
    push("nehari", neh <= tol.tol_nehari, neh, tol.tol_nehari, "|<I'(u),u>| / |u|^2_H1".into());

    let (violations, region) = match file.symmetry {
        SymmetryClass::OddInX2 => (report.positivity_violations, "upper half nodes"),
        SymmetryClass::None => (symmetry::negative_nodes(&u), "all nodes"),
    };
    push("positivity", violations == 0, violations as f64, 0.0, format!("negative values on {region}"));

    push(
        "symmetry",
        report.asymmetry < tol.tol_asymmetry,
        report.asymmetry,
        tol.tol_asymmetry,
        format!("axis x1 = {}", report.axis),
    );
    push(
        "monotonicity",
        report.monotonicity_violations == 0,
        report.monotonicity_violations as f64,
        0.0,
        "upper nodes not decreasing away from the axis".into(),
    );
    push(
        "movingplane",
        report.movingplane_worst >= -tol.tol_movingplane,
        report.movingplane_worst,
        -tol.tol_movingplane,
        format!("{} planes left of the axis", report.movingplane_min.len()),
    );

    let sup = f.sup_ray(&u, tol.ray_t_max, tol.ray_samples)?;
    let ray = (sup - breakdown.total) / breakdown.total.abs();
    push("ray", ray <= tol.tol_ray, ray, tol.tol_ray, format!("t in [1/{0}, {0}]", tol.ray_t_max));

    let bound = -(1.0 - tol.decay_epsilon);
    push(
        "decay",
        report.decay.slope <= bound,
        report.decay.slope,
        bound,
        format!(
            "fit of log|u| over {:.4} <= |x| <= {:.4} ({} nodes)",
            report.decay.inner, report.decay.outer, report.decay.nodes
        ),
    );
    push(
        "asymptotics",
        true,
        report.asymptotics.w_gap,
        f64::NAN,
        match report.asymptotics.h2_gap {
            Some(g) => format!("reported only; w gap, H2 gap {g:e}"),
            None => "reported only; w gap".into(),
        },
    );

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        file: path.display().to_string(),
        symmetry_class: file.symmetry,
        action: breakdown.total,
        checks,
        report,
        passed,
    })
}

/// `verify`: prints the JSON report and optionally writes it to `out`.
pub fn cmd_verify(cfg: &RunConfig, path: &Path, selector: &str, out: Option<&Path>) -> Result<bool> {
    let selected = select_checks(selector)?;
    let report = verify_field(cfg, path, &selected)?;
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(out) = out {
        fs::write(out, format!("{text}\n")).with_context(|| format!("writing {}", out.display()))?;
    }
    println!("{text}");
    Ok(report.passed)
}

/// A record around a stored field: the solver is restarted from it, which
/// takes no steps when the field is already converged.
pub fn record_from_file(cfg: &RunConfig, path: &Path) -> Result<SolutionRecord> {
    let file = snf1::read(path)?;
    let spec = file.field.spec();
    let config = SolverConfig {
        p: file.p,
        half_width: spec.half_width(),
        n: spec.n(),
        symmetry: file.symmetry,
        ..cfg.solver.clone()
    };
    Ok(solver::minimize_from(&config, &file.field)?)
}

#[derive(Debug, Serialize)]
pub struct CompareEntry {
    pub file: String,
    #[serde(rename = "I")]
    pub action: f64,
    pub residual_norm: f64,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub a: CompareEntry,
    pub b: CompareEntry,
    pub difference: f64,
    pub error_bar: Option<f64>,
    pub gap_factor: f64,
    pub strict_gap: Option<bool>,
}

pub fn compare_fields(
    cfg: &RunConfig,
    a: &Path,
    b: &Path,
    error_bar: Option<f64>,
    cross_validate: bool,
) -> Result<CompareReport> {
    let (fa, fb) = (snf1::read(a)?, snf1::read(b)?);
    fa.field.spec().ensure_same(fb.field.spec())?;
    if fa.p != fb.p {
        bail!(snewton::Error::GridMismatch(format!("exponents differ: {} vs {}", fa.p, fb.p)));
    }
    let entry = |path: &Path, file: &FieldFile| -> Result<CompareEntry> {
        let f = Functional::new(file.field.spec(), file.p)?;
        let s = f.state(&file.field)?;
        let r = f.residual_with(&file.field, &s.w);
        Ok(CompareEntry {
            file: path.display().to_string(),
            action: s.action(file.p),
            residual_norm: grid::l2_norm(&r) / grid::l2_norm(&file.field),
        })
    };
    let (ea, eb) = (entry(a, &fa)?, entry(b, &fb)?);
    let error_bar = match (error_bar, cross_validate) {
        (Some(e), _) => Some(e),
        (None, true) => {
            let n2 = 2 * fa.field.spec().n();
            let da = solver::cross_validate(&record_from_file(cfg, a)?, n2)?;
            let db = solver::cross_validate(&record_from_file(cfg, b)?, n2)?;
            Some(da.max(db))
        }
        (None, false) => None,
    };
    let difference = ea.action - eb.action;
    Ok(CompareReport {
        strict_gap: error_bar.map(|e| difference > 0.0 && difference > cfg.checks.gap_factor * e),
        a: ea,
        b: eb,
        difference,
        error_bar,
        gap_factor: cfg.checks.gap_factor,
    })
}

/// `compare`: prints the ordering report; with `assert_gap`, passes only on
/// a strict gap larger than `gap_factor` error bars.
pub fn cmd_compare(
    cfg: &RunConfig,
    a: &Path,
    b: &Path,
    error_bar: Option<f64>,
    cross_validate: bool,
    assert_gap: bool,
) -> Result<bool> {
    if assert_gap && error_bar.is_none() && !cross_validate {
        bail!("--assert-gap needs --error-bar or --cross-validate");
    }
    let report = compare_fields(cfg, a, b, error_bar, cross_validate)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(!assert_gap || report.strict_gap == Some(true))
}

/// `export`: `NAME.profile.csv` (`x1,u` on the first row above the axis),
/// `NAME.lambda_scan.csv` (`lambda,min_w,argmin_i,argmin_a`) and
/// `NAME.decay.csv` (`r,log_abs_u` for every nonzero node).
pub fn cmd_export(cfg: &RunConfig, path: &Path, out: &Path, name: &str) -> Result<Vec<PathBuf>> {
    let file = snf1::read(path)?;
    let u = normalize_sign(&file.field, file.symmetry);
    let spec = *u.spec();
    let n = spec.n();
    fs::create_dir_all(out)?;

    let mut profile = String::from("x1,u\n");
    for i in 0..n {
        profile.push_str(&format!("{:.17e},{:.17e}\n", spec.coord(i as isize), u.get(i, n / 2)));
    }

    let axis = if u.is_zero() { 0.0 } else { symmetry::detect_axis(&u)?.0 };
    let planes = symmetry::lattice_planes(&spec, -spec.half_width(), axis);
    let mut scan = String::from("lambda,min_w,argmin_i,argmin_a\n");
    for row in symmetry::moving_plane_scan(&u, &planes, cfg.diagnostics.tail_floor) {
        let (i, a) = row.argmin.map_or((String::new(), String::new()), |(i, a)| (i.to_string(), a.to_string()));
        let min_w = if row.min_w.is_finite() { format!("{:.17e}", row.min_w) } else { String::new() };
        scan.push_str(&format!("{:.17e},{min_w},{i},{a}\n", row.lambda));
    }

    let mut decay = String::from("r,log_abs_u\n");
    for i in 0..n {
        for j in 0..n {
            let v = u.get(i, j).abs();
            if v > 0.0 {
                let r = spec.coord(i as isize).hypot(spec.coord(j as isize));
                decay.push_str(&format!("{r:.17e},{:.17e}\n", v.ln()));
            }
        }
    }

    let mut written = Vec::new();
    for (suffix, text) in [("profile", profile), ("lambda_scan", scan), ("decay", decay)] {
        let p = out.join(format!("{name}.{suffix}.csv"));
        fs::write(&p, text)?;
        written.push(p);
    }
    let entries = written.iter().map(|p| FileEntry::of(p)).collect::<Result<Vec<_>>>()?;
    println!("{}", serde_json::to_string_pretty(&json!({ "files": entries }))?);
    Ok(written)
}

#[derive(Debug, Serialize)]
pub struct ConvolveTest {
    pub n: usize,
    pub half_width: f64,
    pub seed: u64,
    pub rel_error: f64,
    pub direct_seconds: f64,
    pub fast_seconds: f64,
    pub passed: bool,
}

/// Fast-versus-direct convolution on a random nonnegative field.
pub fn convolve_test(n: usize, half_width: f64, seed: u64) -> Result<ConvolveTest> {
    let spec = make_grid(half_width, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = ScalarField::from_values(spec, (0..spec.len()).map(|_| rng.gen::<f64>()).collect())?;
    let t0 = Instant::now();
    let direct = log_convolve_direct(&rho);
    let direct_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let fast = log_convolve_fast(&rho);
    let fast_seconds = t1.elapsed().as_secs_f64();
    let err = direct
        .values()
        .iter()
        .zip(fast.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let rel_error = err / direct.sup_norm();
    Ok(ConvolveTest {
        n,
        half_width,
        seed,
        rel_error,
        direct_seconds,
        fast_seconds,
        passed: rel_error < 1e-10,
    })
}

pub fn cmd_convolve_test(n: usize, half_width: f64, seed: u64) -> Result<bool> {
    let r = convolve_test(n, half_width, seed)?;
    println!("{}", serde_json::to_string_pretty(&r)?);
    Ok(r.passed)
}
