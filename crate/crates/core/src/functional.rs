//! The action functional
//!
//! ```text
//! I(u) = ½‖u‖²_{H¹} + (1/2p)·V₀(u),   V₀(u) = Σ_x |u|^p(x)·(log|·| * |u|^p)(x)·h²
//! ```
//!
//! its split `V₀ = V₁ − V₂` against the kernels `log(1 + |d|)` and
//! `log(1 + 1/|d|)`, the Euler–Lagrange residual, and the Nehari projection.
//!
//! The gradient pairing is exact: the energy uses forward differences with
//! zero ghosts and the residual uses their adjoint, the Dirichlet 5-point
//! Laplacian, so `⟨r, v⟩_{L²}` is the exact directional derivative of the
//! discrete `I` and `⟨r, u⟩_{L²} = ‖u‖²_{H¹} + V₀(u)`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, signed_pow, GridSpec, ScalarField, UpperHalfField};
use crate::potential::{FieldConvolver, HalfPlane, KernelKind};
use crate::sum::{self, Neumaier};

/// All scalar parts of the action at one field. Serializes to a flat JSON
/// object with exactly these keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub h1_part: f64,
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
    pub total: f64,
    pub nehari_value: f64,
    pub p: f64,
}

impl EnergyBreakdown {
    fn assemble(h1_part: f64, v0: f64, v1: f64, v2: f64, p: f64) -> Self {
        Self {
            h1_part,
            v0,
            v1,
            v2,
            total: action(h1_part, v0, p),
            nehari_value: h1_part + v0,
            p,
        }
    }
}

/// `½·h1 + v0/(2p)`.
#[inline]
pub fn action(h1_part: f64, v0: f64, p: f64) -> f64 {
    0.5 * h1_part + v0 / (2.0 * p)
}

/// A field together with the quantities the descent reuses: `ρ = |u|^p`,
/// `w = log|·| * ρ`, `‖u‖²_{H¹}` and `V₀`.
#[derive(Debug, Clone)]
pub struct State {
    pub u: ScalarField,
    pub rho: ScalarField,
    pub w: ScalarField,
    pub h1: f64,
    pub v0: f64,
}

impl State {
    pub fn action(&self, p: f64) -> f64 {
        action(self.h1, self.v0, p)
    }

    pub fn nehari_value(&self) -> f64 {
        self.h1 + self.v0
    }
}

/// Evaluator for `I` and its derivatives on one grid and exponent. Kernel
/// spectra are built on first use and cached.
#[derive(Debug)]
pub struct Functional {
    spec: GridSpec,
    p: f64,
    log: FieldConvolver,
    log1p: OnceLock<FieldConvolver>,
    log1p_inv: OnceLock<FieldConvolver>,
    halfplane: OnceLock<HalfPlane>,
}

pub fn check_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(p))
    }
}

impl Functional {
    pub fn new(spec: &GridSpec, p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self {
            spec: *spec,
            p,
            log: FieldConvolver::new(KernelKind::Log, spec),
            log1p: OnceLock::new(),
            log1p_inv: OnceLock::new(),
            halfplane: OnceLock::new(),
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn check(&self, u: &ScalarField) -> Result<()> {
        self.spec.ensure_same(u.spec())
    }

    /// `w = log|·| * |u|^p`.
    pub fn potential(&self, u: &ScalarField) -> Result<ScalarField> {
        self.check(u)?;
        Ok(self.log.apply(&u.abs_pow(self.p)))
    }

    pub fn state(&self, u: &ScalarField) -> Result<State> {
        self.check(u)?;
        let rho = u.abs_pow(self.p);
        let w = self.log.apply(&rho);
        let v0 = pairing(&rho, &w);
        Ok(State {
            h1: grid::h1_norm_sq(u),
            v0,
            u: u.clone(),
            rho,
            w,
        })
    }

    /// The state of `t·u` from that of `u`, by exact homogeneity.
    pub fn scale_state(&self, s: &State, t: f64) -> State {
        let tp = t.abs().powf(self.p);
        State {
            u: s.u.scaled(t),
            rho: s.rho.scaled(tp),
            w: s.w.scaled(tp),
            h1: t * t * s.h1,
            v0: tp * tp * s.v0,
        }
    }

    /// `(V₀, V₁, V₂)`, each `h²·Σ ρ·(K * ρ)` with its own kernel table.
    pub fn v_functionals(&self, u: &ScalarField) -> Result<(f64, f64, f64)> {
        self.check(u)?;
        let rho = u.abs_pow(self.p);
        let log1p = self.log1p.get_or_init(|| FieldConvolver::new(KernelKind::Log1p, &self.spec));
        let log1p_inv = self
            .log1p_inv
            .get_or_init(|| FieldConvolver::new(KernelKind::Log1pInv, &self.spec));
        let v0 = pairing(&rho, &self.log.apply(&rho));
        let v1 = pairing(&rho, &log1p.apply(&rho));
        let v2 = pairing(&rho, &log1p_inv.apply(&rho));
        Ok((v0, v1, v2))
    }

    pub fn energy(&self, u: &ScalarField) -> Result<EnergyBreakdown> {
        let (v0, v1, v2) = self.v_functionals(u)?;
        Ok(EnergyBreakdown::assemble(grid::h1_norm_sq(u), v0, v1, v2, self.p))
    }

    /// `r = −Δ_h u + u + w·|u|^{p−2}u`.
    pub fn el_residual(&self, u: &ScalarField) -> Result<ScalarField> {
        let w = self.potential(u)?;
        Ok(self.residual_with(u, &w))
    }

    /// The residual given a precomputed potential `w` of `u`.
    pub fn residual_with(&self, u: &ScalarField, w: &ScalarField) -> ScalarField {
        let lap = grid::laplacian(u);
        let values = u
            .values()
            .iter()
            .zip(lap.values())
            .zip(w.values())
            .map(|((&v, &l), &wv)| -l + v + wv * signed_pow(v, self.p))
            .collect();
        ScalarField::from_values(self.spec, values).expect("finite residual")
    }

    /// `t = (−h1/V₀)^{1/(2p−2)}` and `t·u`, which lies on the Nehari
    /// manifold. Fails when `V₀(u) ≥ 0`.
    pub fn nehari_project(&self, u: &ScalarField) -> Result<(f64, ScalarField)> {
        let s = self.state(u)?;
        let (t, s) = self.nehari_project_state(&s)?;
        Ok((t, s.u))
    }

    pub fn nehari_project_state(&self, s: &State) -> Result<(f64, State)> {
        let t = nehari_scale(s.h1, s.v0, self.p)?;
        Ok((t, self.scale_state(s, t)))
    }

    /// `max_k I(t_k·u)` over the geometric grid
    /// `t_k = t_max^{2k/(samples−1) − 1}`, `k = 0..samples`, which contains
    /// `t = 1` when `samples` is odd.
    pub fn sup_ray(&self, u: &ScalarField, t_max: f64, samples: usize) -> Result<f64> {
        let s = self.state(u)?;
        sup_ray_from(s.h1, s.v0, self.p, t_max, samples)
    }

    /// `Ĩ(v) = ∫_{R²₊}(|∇v|² + v²) + (1/2p)·Σ ρ·(H₁ + H₂)·h²` for an
    /// upper-half field `v`, with `ρ = |v|^p`.
    pub fn halfplane_energy(&self, v: &UpperHalfField) -> Result<f64> {
        self.spec.ensure_same(v.spec())?;
        let hp = self.halfplane.get_or_init(|| HalfPlane::new(&self.spec));
        let rho = v.abs_pow(self.p);
        let h1 = hp.h1_from_density(&rho);
        let h2 = hp.h2_from_density(&rho);
        let mut acc = Neumaier::new();
        for ((r, a), b) in rho.values().iter().zip(h1.values()).zip(h2.values()) {
            acc.add(r * (a + b));
        }
        let bracket = self.spec.cell_area() * acc.total();
        Ok(grid::halfplane_h1_norm_sq(v) + bracket / (2.0 * self.p))
    }
}

/// `h²·Σ ρ·w`.
pub fn pairing(rho: &ScalarField, w: &ScalarField) -> f64 {
    rho.spec().cell_area() * sum::dot(rho.values(), w.values())
}

/// `I(b) − I(a)` from the two states without cancellation of the large
/// parts: `½⟨b − a, b + a⟩_{H¹} + (1/2p)·h²·Σ (ρ_b − ρ_a)(w_b + w_a)`,
/// which uses the symmetry of the kernel.
pub fn energy_difference(a: &State, b: &State, p: f64) -> f64 {
    let delta = b.u.axpy(-1.0, &a.u);
    let total = b.u.axpy(1.0, &a.u);
    let h1 = grid::h1_inner(&delta, &total);
    let mut acc = Neumaier::new();
    for (((rb, ra), wb), wa) in b
        .rho
        .values()
        .iter()
        .zip(a.rho.values())
        .zip(b.w.values())
        .zip(a.w.values())
    {
        acc.add((rb - ra) * (wb + wa));
    }
    0.5 * h1 + a.u.spec().cell_area() * acc.total() / (2.0 * p)
}

/// Closed-form Nehari scale `(−h1/v0)^{1/(2p−2)}`.
pub fn nehari_scale(h1: f64, v0: f64, p: f64) -> Result<f64> {
    if h1 <= 0.0 {
        return Err(Error::ZeroField);
    }
    if !(v0 < 0.0) {
        return Err(Error::NotNehariProjectable { v0 });
    }
    Ok((-h1 / v0).powf(1.0 / (2.0 * p - 2.0)))
}

/// Ray maximum from the two homogeneous parts.
pub fn sup_ray_from(h1: f64, v0: f64, p: f64, t_max: f64, samples: usize) -> Result<f64> {
    if h1 <= 0.0 {
        return Err(Error::ZeroField);
    }
    if !(t_max > 1.0) || samples < 2 {
        return Err(Error::Config(format!(
            "ray sampling needs t_max > 1 and at least 2 samples, got {t_max}, {samples}"
        )));
    }
    let last = (samples - 1) as f64;
    Ok((0..samples)
        .map(|k| {
            let t = t_max.powf(2.0 * k as f64 / last - 1.0);
            action(t * t * h1, t.powf(2.0 * p) * v0, p)
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn energy(u: &ScalarField, p: f64) -> Result<EnergyBreakdown> {
    Functional::new(u.spec(), p)?.energy(u)
}

pub fn v_functionals(u: &ScalarField, p: f64) -> Result<(f64, f64, f64)> {
    Functional::new(u.spec(), p)?.v_functionals(u)
}

pub fn el_residual(u: &ScalarField, p: f64) -> Result<ScalarField> {
    Functional::new(u.spec(), p)?.el_residual(u)
}

pub fn nehari_project(u: &ScalarField, p: f64) -> Result<(f64, ScalarField)> {
    Functional::new(u.spec(), p)?.nehari_project(u)
}

pub fn sup_ray(u: &ScalarField, p: f64, t_max: f64, samples: usize) -> Result<f64> {
    Functional::new(u.spec(), p)?.sup_ray(u, t_max, samples)
}

pub fn halfplane_energy(v: &UpperHalfField, p: f64) -> Result<f64> {
    Functional::new(v.spec(), p)?.halfplane_energy(v)
}

/// `V₀` by the direct `O(n⁴)` double sum over node pairs.
pub fn v0_direct(u: &ScalarField, p: f64) -> f64 {
    let rho = u.abs_pow(p);
    let w = crate::potential::log_convolve_direct(&rho);
    pairing(&rho, &w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{h1_norm_sq, make_grid};

    fn bump(g: GridSpec) -> ScalarField {
        ScalarField::from_fn(g, |x, y| (2.0 + x) * (-(x * x + y * y)).exp())
    }

    #[test]
    fn zero_field() {
        let g = make_grid(4.0, 16).unwrap();
        let z = ScalarField::zeros(g);
        let e = energy(&z, 2.0).unwrap();
        assert_eq!((e.h1_part, e.v0, e.v1, e.v2, e.total, e.nehari_value), (0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        assert!(el_residual(&z, 2.5).unwrap().is_zero());
        assert!(matches!(nehari_project(&z, 2.0), Err(Error::ZeroField)));
        assert!(sup_ray(&z, 2.0, 4.0, 9).is_err());
        assert_eq!(halfplane_energy(&UpperHalfField::zeros(g), 2.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_small_exponent() {
        let g = make_grid(4.0, 16).unwrap();
        assert!(matches!(Functional::new(&g, 1.5), Err(Error::InvalidExponent(_))));
        assert!(Functional::new(&g, f64::NAN).is_err());
    }

    #[test]
    fn two_point_masses_cross_terms() {
        // h = 0.25, masses four nodes apart along x₁: distance exactly 1.
        let g = make_grid(2.0, 16).unwrap();
        let h = g.spacing();
        let rho_val = 1.0;
        let single = |i: usize| {
            let mut u = ScalarField::zeros(g);
            u.set(i, 8, 1.0);
            u
        };
        let mut both = single(4);
        both.set(8, 8, 1.0);
        let f = Functional::new(&g, 2.0).unwrap();
        let (a0, a1, a2) = f.v_functionals(&single(4)).unwrap();
        let (b0, b1, b2) = f.v_functionals(&single(8)).unwrap();
        let (c0, c1, c2) = f.v_functionals(&both).unwrap();
        let h4 = h.powi(4) * rho_val * rho_val;
        assert!((c0 - a0 - b0).abs() < 1e-15);
        assert!((c1 - a1 - b1 - 2.0 * h4 * 2f64.ln()).abs() < 1e-15);
        assert!((c2 - a2 - b2 - 2.0 * h4 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn breakdown_invariants_and_scaling() {
        let g = make_grid(5.0, 32).unwrap();
        let u = bump(g);
        let f = Functional::new(&g, 2.5).unwrap();
        let e = f.energy(&u).unwrap();
        assert!((e.v0 - (e.v1 - e.v2)).abs() <= 1e-12 * e.v1.abs().max(e.v2.abs()));
        assert!(e.v1 >= 0.0 && e.v2 >= 0.0);
        assert_eq!(e.total, 0.5 * e.h1_part + e.v0 / 5.0);
        let t = 1.7;
        let et = f.energy(&u.scaled(t)).unwrap();
        let want = t * t * e.h1_part + t.powf(5.0) * e.v0;
        assert!((et.nehari_value - want).abs() < 1e-12 * want.abs().max(e.h1_part));
    }

    #[test]
    fn residual_pairs_with_nehari_value() {
        let g = make_grid(5.0, 32).unwrap();
        let u = bump(g);
        for p in [2.0, 3.0] {
            let f = Functional::new(&g, p).unwrap();
            let e = f.energy(&u).unwrap();
            let r = f.el_residual(&u).unwrap();
            let pair = grid::l2_inner(&r, &u);
            assert!((pair - e.nehari_value).abs() < 1e-10 * e.h1_part);
        }
    }

    #[test]
    fn nehari_closed_form_examples() {
        assert_eq!(nehari_scale(1.0, -1.0, 2.0).unwrap(), 1.0);
        assert_eq!(nehari_scale(4.0, -1.0, 2.0).unwrap(), 2.0);
        assert!(matches!(nehari_scale(1.0, 0.5, 2.0), Err(Error::NotNehariProjectable { .. })));
        assert!(matches!(nehari_scale(1.0, 0.0, 2.0), Err(Error::NotNehariProjectable { .. })));
    }

    #[test]
    fn projection_lands_on_manifold() {
        let g = make_grid(6.0, 32).unwrap();
        let u = bump(g).scaled(0.01);
        let f = Functional::new(&g, 2.0).unwrap();
        let (t, tu) = f.nehari_project(&u).unwrap();
        assert!(t > 1.0);
        let e = f.energy(&tu).unwrap();
        assert!(e.nehari_value.abs() <= 1e-12 * h1_norm_sq(&tu));
    }

    #[test]
    fn positive_v0_is_rejected() {
        // h = 5: every kernel sample, the cell average included, is positive.
        let g = make_grid(40.0, 16).unwrap();
        let u = ScalarField::from_fn(g, |_, _| 1.0);
        let f = Functional::new(&g, 2.0).unwrap();
        assert!(matches!(f.nehari_project(&u), Err(Error::NotNehariProjectable { .. })));
    }

    #[test]
    fn sup_ray_examples() {
        // h1 = 2, v0 = −2: the ray maximum is at t = 1 with I = 1 − ½ = ½.
        let m = sup_ray_from(2.0, -2.0, 2.0, 4.0, 41).unwrap();
        assert!((m - 0.5).abs() < 1e-15);
        let m8 = sup_ray_from(2.0, -2.0, 2.0, 16.0, 81).unwrap();
        assert!((m8 - m).abs() < 1e-15);
        assert!(sup_ray_from(2.0, -2.0, 2.0, 1.0, 41).is_err());
    }

    #[test]
    fn energy_difference_matches_plain_difference() {
        let g = make_grid(5.0, 32).unwrap();
        let f = Functional::new(&g, 2.0).unwrap();
        let u = bump(g);
        let v = ScalarField::from_fn(g, |x, y| (1.0 + 0.3 * y) * (-(x * x + 1.2 * y * y)).exp());
        let (a, b) = (f.state(&u).unwrap(), f.state(&v).unwrap());
        let plain = b.action(2.0) - a.action(2.0);
        let diff = energy_difference(&a, &b, 2.0);
        assert!((plain - diff).abs() < 1e-12 * a.h1);
    }

    #[test]
    fn fast_v0_matches_direct() {
        let g = make_grid(4.0, 16).unwrap();
        let u = bump(g);
        let f = Functional::new(&g, 2.0).unwrap();
        let (v0, _, _) = f.v_functionals(&u).unwrap();
        assert!((v0 - v0_direct(&u, 2.0)).abs() < 1e-12 * v0.abs());
    }
}
