//! Discrete domain, scalar fields, midpoint quadrature and the odd projection.
//!
//! The computational domain is the square `[-L, L]²` split into `n × n` cells
//! of side `h = 2L/n`; unknowns live at cell centres
//! `x_i = (i + ½ − n/2)·h`. Because `n` is even no node sits on either axis,
//! and the reflections `x₁ → −x₁`, `x₂ → −x₂` permute the nodes exactly.
//!
//! Gradients use forward differences with zero ghost values outside the grid
//! (`n + 1` edges per grid line, boundary edges included). The adjoint of
//! that difference operator is the usual 5-point Laplacian with homogeneous
//! Dirichlet ghosts, which is what [`laplacian`] returns; the pairing is exact,
//! so `Σ_edges Du·Dv = h²·Σ (−Δ_h u)·v` holds to round-off.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::{self, Neumaier};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    half_width: f64,
    n: usize,
    spacing: f64,
}

impl GridSpec {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "nodes per axis must be even and positive, got {n}"
            )));
        }
        Ok(Self {
            half_width,
            n,
            spacing: 2.0 * half_width / n as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Quadrature weight of a single node.
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    /// Number of node rows in the open upper half plane `x₂ > 0`.
    pub fn half(&self) -> usize {
        self.n / 2
    }

    /// Coordinate of node `i` along either axis. Exactly antisymmetric:
    /// `coord(i) == -coord(n - 1 - i)`. Accepts indices outside `0..n` to
    /// address the infinite lattice extending the grid.
    pub fn coord(&self, i: isize) -> f64 {
        (i as f64 + 0.5 - (self.n / 2) as f64) * self.spacing
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    pub fn contains(&self, i: isize, j: isize) -> bool {
        i >= 0 && j >= 0 && (i as usize) < self.n && (j as usize) < self.n
    }

    pub fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self.n != other.n || self.half_width != other.half_width {
            return Err(Error::GridMismatch(format!(
                "(n = {}, L = {}) vs (n = {}, L = {})",
                self.n, self.half_width, other.n, other.half_width
            )));
        }
        Ok(())
    }
}

pub fn make_grid(half_width: f64, n: usize) -> Result<GridSpec> {
    GridSpec::new(half_width, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryClass {
    None,
    /// `u(x₁, −x₂) = −u(x₁, x₂)`.
    OddInX2,
}

impl SymmetryClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SymmetryClass::None => "none",
            SymmetryClass::OddInX2 => "odd_in_x2",
        }
    }

    pub fn apply(&self, u: &ScalarField) -> ScalarField {
        match self {
            SymmetryClass::None => u.clone(),
            SymmetryClass::OddInX2 => project_odd(u),
        }
    }
}

impl std::str::FromStr for SymmetryClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(SymmetryClass::None),
            "odd" | "odd_in_x2" => Ok(SymmetryClass::OddInX2),
            other => Err(Error::Config(format!("unknown symmetry class '{other}'"))),
        }
    }
}

impl std::fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Real values on the nodes of a [`GridSpec`], row-major:
/// `values[i * n + j] ≈ u(x_i, x_j)` with `i` along `x₁` and `j` along `x₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.len()],
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value at node {bad}")));
        }
        Ok(Self { spec, values })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = spec.n();
        let mut values = Vec::with_capacity(spec.len());
        for i in 0..n {
            let x1 = spec.coord(i as isize);
            for j in 0..n {
                values.push(f(x1, spec.coord(j as isize)));
            }
        }
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.spec.index(i, j);
        self.values[k] = v;
    }

    /// Value at a lattice node, zero outside the grid.
    pub fn get_extended(&self, i: isize, j: isize) -> f64 {
        if self.spec.contains(i, j) {
            self.get(i as usize, j as usize)
        } else {
            0.0
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.map(|v| t * v)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &ScalarField) -> Self {
        debug_assert_eq!(self.spec, other.spec);
        Self {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `|u|^p` nodewise.
    pub fn abs_pow(&self, p: f64) -> Self {
        self.map(|v| abs_pow(v, p))
    }

    /// Mirror image across the `x₁` axis, `u(x₁, −x₂)`.
    pub fn reflect_x2(&self) -> Self {
        let n = self.spec.n();
        let mut out = Self::zeros(self.spec);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.get(i, n - 1 - j));
            }
        }
        out
    }

    /// Mirror image across the `x₂` axis, `u(−x₁, x₂)`.
    pub fn reflect_x1(&self) -> Self {
        let n = self.spec.n();
        let mut out = Self::zeros(self.spec);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.get(n - 1 - i, j));
            }
        }
        out
    }

    /// Translate by whole nodes, `out(i, j) = u(i − di, j − dj)`, filling with
    /// zeros where the source falls off the grid.
    pub fn shifted(&self, di: isize, dj: isize) -> Self {
        let n = self.spec.n() as isize;
        let mut out = Self::zeros(self.spec);
        for i in 0..n {
            for j in 0..n {
                out.values[(i * n + j) as usize] = self.get_extended(i - di, j - dj);
            }
        }
        out
    }

    /// Restriction to the upper half plane `x₂ > 0`.
    pub fn upper_half(&self) -> UpperHalfField {
        let n = self.spec.n();
        let m = self.spec.half();
        let mut values = Vec::with_capacity(n * m);
        for i in 0..n {
            values.extend_from_slice(&self.values[i * n + m..(i + 1) * n]);
        }
        UpperHalfField {
            spec: self.spec,
            values,
        }
    }

    /// Exact odd-in-`x₂` test.
    pub fn is_odd(&self) -> bool {
        let n = self.spec.n();
        (0..n).all(|i| (0..n).all(|j| self.get(i, j) == -self.get(i, n - 1 - j)))
    }
}

/// Values on the upper-half nodes (`x₂ > 0`) of a grid: `n × n/2`, row-major,
/// `values[i * (n/2) + a] ≈ v(x_i, x_{n/2 + a})`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperHalfField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl UpperHalfField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.n() * spec.half()],
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.n() * spec.half() {
            return Err(Error::GridMismatch(format!(
                "expected {} upper-half values, got {}",
                spec.n() * spec.half(),
                values.len()
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = spec.n();
        let m = spec.half();
        let mut values = Vec::with_capacity(n * m);
        for i in 0..n {
            for a in 0..m {
                values.push(f(spec.coord(i as isize), spec.coord((m + a) as isize)));
            }
        }
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Number of rows (`n`) and columns (`n/2`).
    pub fn shape(&self) -> (usize, usize) {
        (self.spec.n(), self.spec.half())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, a: usize) -> f64 {
        self.values[i * self.spec.half() + a]
    }

    #[inline]
    pub fn set(&mut self, i: usize, a: usize, v: f64) {
        let m = self.spec.half();
        self.values[i * m + a] = v;
    }

    /// Value at an upper lattice node, zero outside the grid.
    pub fn get_extended(&self, i: isize, a: isize) -> f64 {
        let (n, m) = self.shape();
        if i >= 0 && a >= 0 && (i as usize) < n && (a as usize) < m {
            self.get(i as usize, a as usize)
        } else {
            0.0
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn abs_pow(&self, p: f64) -> Self {
        self.map(|v| abs_pow(v, p))
    }

    /// The field on the whole grid that is odd in `x₂` and agrees with `self`
    /// on the upper half.
    pub fn odd_extension(&self) -> ScalarField {
        let n = self.spec.n();
        let m = self.spec.half();
        let mut out = ScalarField::zeros(self.spec);
        for i in 0..n {
            for a in 0..m {
                let v = self.get(i, a);
                out.set(i, m + a, v);
                out.set(i, m - 1 - a, -v);
            }
        }
        out
    }
}

/// `|v|^p`, with the exact square for `p = 2`.
#[inline]
pub fn abs_pow(v: f64, p: f64) -> f64 {
    if p == 2.0 {
        v * v
    } else {
        v.abs().powf(p)
    }
}

/// `|v|^{p−2} v`, continuous at zero for every `p ≥ 2`.
#[inline]
pub fn signed_pow(v: f64, p: f64) -> f64 {
    if p == 2.0 {
        v
    } else if v == 0.0 {
        0.0
    } else {
        v.abs().powf(p - 2.0) * v
    }
}

/// `(u(x₁,x₂) − u(x₁,−x₂))/2` nodewise. Linear and idempotent; the result is
/// exactly odd.
pub fn project_odd(u: &ScalarField) -> ScalarField {
    let n = u.spec.n();
    let mut out = ScalarField::zeros(u.spec);
    for i in 0..n {
        for j in 0..n / 2 {
            let v = 0.5 * (u.get(i, j) - u.get(i, n - 1 - j));
            out.set(i, j, v);
            out.set(i, n - 1 - j, -v);
        }
    }
    out
}

/// Discrete `∫ (∇u·∇v + u v)`: forward differences with zero ghosts, summed
/// over every edge of the grid including the boundary edges.
pub fn h1_inner(u: &ScalarField, v: &ScalarField) -> f64 {
    debug_assert_eq!(u.spec, v.spec);
    let n = u.spec.n();
    let h2 = u.spec.cell_area();
    let mut acc = Neumaier::new();
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (u.get(i, j), v.get(i, j));
            // Edge from (i, j) to (i + 1, j) and to (i, j + 1); the grid value
            // beyond the last node is the zero ghost.
            let ax = if i + 1 < n { u.get(i + 1, j) } else { 0.0 } - a;
            let bx = if i + 1 < n { v.get(i + 1, j) } else { 0.0 } - b;
            let ay = if j + 1 < n { u.get(i, j + 1) } else { 0.0 } - a;
            let by = if j + 1 < n { v.get(i, j + 1) } else { 0.0 } - b;
            acc.add(ax * bx);
            acc.add(ay * by);
            acc.add(h2 * a * b);
        }
    }
    // Edges from the ghosts before the first node of every line.
    for k in 0..n {
        acc.add(u.get(0, k) * v.get(0, k));
        acc.add(u.get(k, 0) * v.get(k, 0));
    }
    acc.total()
}

/// `h²·Σ(|Du|² + u²)`, the discrete `‖u‖²_{H¹}`.
pub fn h1_norm_sq(u: &ScalarField) -> f64 {
    h1_inner(u, u)
}

/// `h²·Σ|u|^p`, the p-th power of the discrete `L^p` norm.
pub fn lp_norm_p(u: &ScalarField, p: f64) -> f64 {
    u.spec.cell_area() * sum::sum(u.values.iter().map(|&v| abs_pow(v, p)))
}

/// `h²·Σ log(1 + |x|)·|u|^p`, the p-th power of the weighted norm `‖u‖_*`.
pub fn star_norm_p(u: &ScalarField, p: f64) -> f64 {
    let spec = u.spec;
    let n = spec.n();
    let mut acc = Neumaier::new();
    for i in 0..n {
        let x1 = spec.coord(i as isize);
        for j in 0..n {
            let r = x1.hypot(spec.coord(j as isize));
            acc.add(r.ln_1p() * abs_pow(u.get(i, j), p));
        }
    }
    spec.cell_area() * acc.total()
}

/// Discrete `L²` inner product `h²·Σ u v`.
pub fn l2_inner(u: &ScalarField, v: &ScalarField) -> f64 {
    u.spec.cell_area() * sum::dot(&u.values, &v.values)
}

pub fn l2_norm(u: &ScalarField) -> f64 {
    l2_inner(u, u).sqrt()
}

/// 5-point Laplacian with homogeneous Dirichlet ghosts.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let n = u.spec.n();
    let inv_h2 = 1.0 / u.spec.cell_area();
    let mut out = ScalarField::zeros(u.spec);
    for i in 0..n {
        for j in 0..n {
            let c = u.get(i, j);
            let w = if i > 0 { u.get(i - 1, j) } else { 0.0 };
            let e = if i + 1 < n { u.get(i + 1, j) } else { 0.0 };
            let s = if j > 0 { u.get(i, j - 1) } else { 0.0 };
            let nn = if j + 1 < n { u.get(i, j + 1) } else { 0.0 };
            out.set(i, j, ((w + e) + (s + nn) - 4.0 * c) * inv_h2);
        }
    }
    out
}

/// Discrete `∫_{R²₊}(|∇v|² + v²)` for an upper-half field, with the odd
/// reflection as the ghost row below the axis. The edge crossing the axis is
/// shared with the lower half and carries weight ½, so for an odd field `u`
/// this is exactly `½·h1_norm_sq(u)`.
pub fn halfplane_h1_norm_sq(v: &UpperHalfField) -> f64 {
    let (n, m) = v.shape();
    let h2 = v.spec.cell_area();
    let mut acc = Neumaier::new();
    for i in 0..n {
        for a in 0..m {
            let c = v.get(i, a);
            let dx = if i + 1 < n { v.get(i + 1, a) } else { 0.0 } - c;
            let dy = if a + 1 < m { v.get(i, a + 1) } else { 0.0 } - c;
            acc.add(dx * dx);
            acc.add(dy * dy);
            acc.add(h2 * c * c);
        }
    }
    // Ghost edges before the first node along x₁.
    for a in 0..m {
        let c = v.get(0, a);
        acc.add(c * c);
    }
    // Axis edges: difference v − (−v) = 2v, weight ½.
    for i in 0..n {
        let c = v.get(i, 0);
        acc.add(2.0 * c * c);
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_field(spec: GridSpec, values: Vec<f64>) -> ScalarField {
        ScalarField::from_values(spec, values).unwrap()
    }

    #[test]
    fn tiny_grid_nodes() {
        let g = make_grid(1.0, 2).unwrap();
        assert_eq!(g.coord(0), -0.5);
        assert_eq!(g.coord(1), 0.5);
    }

    #[test]
    fn spacing_for_default_grid() {
        let g = make_grid(12.0, 256).unwrap();
        assert_eq!(g.spacing(), 0.09375);
        assert_eq!(g.spacing() * 256.0, 24.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(make_grid(1.0, 3).is_err());
        assert!(make_grid(0.0, 8).is_err());
        assert!(make_grid(-2.0, 8).is_err());
        assert!(make_grid(1.0, 0).is_err());
    }

    #[test]
    fn node_set_is_reflection_symmetric() {
        let g = make_grid(3.7, 38).unwrap();
        for i in 0..38 {
            assert_eq!(g.coord(i), -g.coord(37 - i));
            assert!(g.coord(i) != 0.0);
        }
    }

    #[test]
    fn project_odd_examples() {
        let g = make_grid(2.0, 8).unwrap();
        let x2 = ScalarField::from_fn(g, |_, y| y);
        assert_eq!(project_odd(&x2), x2);
        let one = ScalarField::from_fn(g, |_, _| 1.0);
        assert!(project_odd(&one).is_zero());
    }

    #[test]
    fn h1_of_single_node() {
        let g = make_grid(1.0, 4).unwrap();
        let a = 1.7;
        let mut u = ScalarField::zeros(g);
        u.set(1, 2, a);
        let h = g.spacing();
        let expected = a * a * h * h + 4.0 * a * a;
        assert!((h1_norm_sq(&u) - expected).abs() < 1e-14);
        // Also on a boundary node: still four edges (two of them to ghosts).
        let mut b = ScalarField::zeros(g);
        b.set(0, 3, a);
        assert!((h1_norm_sq(&b) - expected).abs() < 1e-14);
        assert_eq!(h1_norm_sq(&ScalarField::zeros(g)), 0.0);
    }

    #[test]
    fn h1_of_gaussian_converges() {
        // u = exp(−|x|²): ∫|∇u|² = π, ∫u² = π/2.
        let exact = 1.5 * std::f64::consts::PI;
        let mut errs = vec![];
        for n in [64, 128] {
            let g = make_grid(6.0, n).unwrap();
            let u = ScalarField::from_fn(g, |x, y| (-(x * x + y * y)).exp());
            errs.push((h1_norm_sq(&u) - exact).abs());
        }
        assert!(errs[0] < 0.05, "{errs:?}");
        // Second order: halving h cuts the error by ~4.
        assert!(errs[1] < errs[0] / 3.5, "{errs:?}");
    }

    #[test]
    fn lp_examples() {
        let g = make_grid(2.0, 8).unwrap();
        assert_eq!(g.spacing(), 0.5);
        let mut u = ScalarField::zeros(g);
        assert_eq!(lp_norm_p(&u, 3.0), 0.0);
        u.set(3, 5, 2.0);
        assert_eq!(lp_norm_p(&u, 2.0), 1.0);
    }

    #[test]
    fn lp_of_gaussian() {
        // ∫ exp(−p|x|²) = π/p.
        let g = make_grid(6.0, 128).unwrap();
        let u = ScalarField::from_fn(g, |x, y| (-(x * x + y * y)).exp());
        for p in [2.0, 3.0, 4.5] {
            let exact = std::f64::consts::PI / p;
            assert!((lp_norm_p(&u, p) - exact).abs() < 1e-10, "p = {p}");
        }
    }

    #[test]
    fn star_norm_single_node() {
        // Nodes sit at odd multiples of h/2, so |x| = 1 needs h = √2: the
        // node (√2/2, √2/2) on the L = 2√2, n = 4 grid.
        let g = make_grid(2.0 * std::f64::consts::SQRT_2, 4).unwrap();
        let (i, j) = (2usize, 2usize);
        let r = g.coord(i as isize).hypot(g.coord(j as isize));
        assert!((r - 1.0).abs() < 1e-15, "{r}");
        let mut u = ScalarField::zeros(g);
        u.set(i, j, 1.0);
        let expected = g.cell_area() * 2f64.ln();
        assert!((star_norm_p(&u, 2.0) - expected).abs() < 1e-14);
        assert_eq!(star_norm_p(&ScalarField::zeros(g), 2.0), 0.0);
    }

    #[test]
    fn laplacian_is_adjoint_of_forward_gradient() {
        let g = make_grid(1.5, 12).unwrap();
        let u = ScalarField::from_fn(g, |x, y| (x * 1.3).sin() + y * y - 0.2 * x * y);
        let v = ScalarField::from_fn(g, |x, y| (y - 0.4 * x).cos());
        let lhs = h1_inner(&u, &v);
        let minus_lap = laplacian(&u).scaled(-1.0);
        let rhs = l2_inner(&minus_lap.axpy(1.0, &u), &v);
        assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn halfplane_h1_is_half_of_full_for_odd() {
        let g = make_grid(2.0, 16).unwrap();
        let u = project_odd(&ScalarField::from_fn(g, |x, y| (x + 2.0 * y).sin() * (1.0 - 0.1 * x * y)));
        let full = h1_norm_sq(&u);
        let half = halfplane_h1_norm_sq(&u.upper_half());
        assert!((full - 2.0 * half).abs() < 1e-12 * full);
    }

    #[test]
    fn upper_half_round_trip() {
        let g = make_grid(2.0, 8).unwrap();
        let u = project_odd(&ScalarField::from_fn(g, |x, y| x * x + y + 0.3 * y * y * y));
        assert_eq!(u.upper_half().odd_extension(), u);
    }

    proptest! {
        #[test]
        fn project_odd_linear_idempotent_contractive(
            a in prop::collection::vec(-3.0f64..3.0, 64),
            b in prop::collection::vec(-3.0f64..3.0, 64),
            s in -2.0f64..2.0,
        ) {
            let g = make_grid(1.0, 8).unwrap();
            let u = random_field(g, a);
            let v = random_field(g, b);
            let pu = project_odd(&u);
            prop_assert!(pu.is_odd());
            prop_assert_eq!(&project_odd(&pu), &pu);
            let lhs = project_odd(&u.axpy(s, &v));
            let rhs = pu.axpy(s, &project_odd(&v));
            for (x, y) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert!(l2_norm(&pu) <= l2_norm(&u) + 1e-12);
        }

        #[test]
        fn norms_are_reflection_invariant(a in prop::collection::vec(-3.0f64..3.0, 100), p in 2.0f64..5.0) {
            let g = make_grid(2.5, 10).unwrap();
            let u = random_field(g, a);
            for r in [u.reflect_x1(), u.reflect_x2()] {
                prop_assert!((h1_norm_sq(&r) - h1_norm_sq(&u)).abs() <= 1e-12 * h1_norm_sq(&u));
                prop_assert!((lp_norm_p(&r, p) - lp_norm_p(&u, p)).abs() <= 1e-12 * lp_norm_p(&u, p));
                prop_assert!((star_norm_p(&r, p) - star_norm_p(&u, p)).abs() <= 1e-12 * star_norm_p(&u, p));
            }
        }

        #[test]
        fn weighted_norm_bounds_and_monotone(a in prop::collection::vec(-3.0f64..3.0, 100), p in 2.0f64..5.0) {
            let g = make_grid(2.5, 10).unwrap();
            let u = random_field(g, a);
            let bound = (1.0 + 2f64.sqrt() * g.half_width()).ln() * lp_norm_p(&u, p);
            prop_assert!(star_norm_p(&u, p) <= bound * (1.0 + 1e-12));
            let bigger = u.map(|v| v.abs() * 1.1 + 0.01);
            prop_assert!(lp_norm_p(&bigger, p) >= lp_norm_p(&u, p));
            prop_assert!(star_norm_p(&bigger, p) >= star_norm_p(&u, p));
        }

        #[test]
        fn h1_odd_is_twice_upper_half_sum(a in prop::collection::vec(-3.0f64..3.0, 144)) {
            let g = make_grid(1.5, 12).unwrap();
            let u = project_odd(&random_field(g, a));
            let full = h1_norm_sq(&u);
            prop_assert!((full - 2.0 * halfplane_h1_norm_sq(&u.upper_half())).abs() <= 1e-12 * full.max(1e-300));
        }
    }
}
