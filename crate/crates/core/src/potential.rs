//! Logarithmic convolution potentials.
//!
//! All potentials are midpoint-quadrature convolutions
//! `(K * ρ)(x_i) = h²·Σ_j K(x_i − x_j)·ρ(x_j)` against a kernel sampled at the
//! lattice displacements. For the singular kernels the zero-displacement
//! entry is the exact average of the kernel over one `h × h` cell, which keeps
//! the rule second order in spite of the integrable singularity.
//!
//! Two evaluation paths are provided: a direct double loop (reference, small
//! grids) and a zero-padded real FFT whose padded size is at least `2n − 1`
//! per axis, so the cyclic product reproduces the linear convolution exactly
//! up to round-off.
//!
//! The half-plane potentials act on upper-half fields:
//!
//! * `H₁(x) = 2·∫_{R²₊} log|x − y|·|u|^p(y) dy`
//! * `H₂(x) = ∫_{R²₊} log((x₁ − y₁)² + (x₂ + y₂)²)·|u|^p(y) dy`
//!
//! and for an odd field `H₁ + H₂ = 2·(log|·| * |u|^p)` on the upper half.

use std::sync::Arc;

use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, ScalarField, UpperHalfField};
use crate::sum::Neumaier;

/// `(1/h²)·∫_{[−h/2, h/2]²} log|z| dz`.
pub fn log_cell_average(h: f64) -> f64 {
    h.ln() - 0.5 * std::f64::consts::LN_2 - 1.5 + std::f64::consts::FRAC_PI_4
}

/// `(1/h²)·∫_{[−h/2, h/2]²} log(1 + |z|) dz`.
///
/// Polar coordinates over the eight triangles of the square; the radial
/// integral is done in closed form and the angular one by composite
/// Gauss–Legendre.
pub fn log1p_cell_average(h: f64) -> f64 {
    let half = 0.5 * h;
    let theta_max = std::f64::consts::FRAC_PI_4;
    let panels = 64;
    let width = theta_max / panels as f64;
    let mut acc = Neumaier::new();
    for k in 0..panels {
        let mid = (k as f64 + 0.5) * width;
        for (node, weight) in GAUSS5 {
            let theta = mid + 0.5 * width * node;
            acc.add(0.5 * width * weight * radial_log1p_moment(half / theta.cos()));
        }
    }
    8.0 * acc.total() / (h * h)
}

/// `∫_0^R r·log(1 + r) dr`.
fn radial_log1p_moment(r: f64) -> f64 {
    if r < 0.5 {
        // Σ_{k≥1} (−1)^{k+1} r^{k+2} / (k (k + 2))
        let mut term_pow = r * r * r;
        let mut acc = 0.0;
        for k in 1..200 {
            let kf = k as f64;
            let t = term_pow / (kf * (kf + 2.0));
            if k % 2 == 1 {
                acc += t;
            } else {
                acc -= t;
            }
            if t < 1e-18 * acc.abs() {
                break;
            }
            term_pow *= r;
        }
        acc
    } else {
        0.5 * (r * r - 1.0) * r.ln_1p() - 0.25 * r * r + 0.5 * r
    }
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    /// `log|d|`
    Log,
    /// `log(1 + |d|)`
    Log1p,
    /// `log(1 + 1/|d|)`
    Log1pInv,
    /// `log((x₁ − y₁)² + (x₂ + y₂)²)` between upper-half nodes.
    HalfplaneReflected,
}

/// Kernel value for a lattice displacement `(di, dj)` in units of `h`.
///
/// For [`KernelKind::HalfplaneReflected`] the second argument is the sum
/// `x₂ + y₂` in units of `h`, which is a positive integer for upper nodes.
pub fn kernel_value(kind: KernelKind, di: isize, dj: isize, h: f64) -> f64 {
    let r = h * (di as f64).hypot(dj as f64);
    match kind {
        KernelKind::Log if di == 0 && dj == 0 => log_cell_average(h),
        KernelKind::Log => r.ln(),
        KernelKind::Log1p if di == 0 && dj == 0 => log1p_cell_average(h),
        KernelKind::Log1p => r.ln_1p(),
        KernelKind::Log1pInv if di == 0 && dj == 0 => log1p_cell_average(h) - log_cell_average(h),
        KernelKind::Log1pInv => r.recip().ln_1p(),
        KernelKind::HalfplaneReflected => {
            debug_assert!(dj > 0);
            (r * r).ln()
        }
    }
}

/// Kernel samples for every displacement between the nodes of a
/// `rows × cols` block: a `(2·rows − 1) × (2·cols − 1)` table indexed by
/// `(di, dj)` with `di ∈ −(rows−1)..=rows−1`, `dj ∈ −(cols−1)..=cols−1`.
///
/// The half-plane reflected table is stored in convolution form against the
/// column-flipped source (see [`HalfPlane`]): entry `(di, dc)` holds the
/// kernel at `x₂ + y₂ = (dc + cols)·h`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    kind: KernelKind,
    rows: usize,
    cols: usize,
    spacing: f64,
    values: Vec<f64>,
}

impl KernelTable {
    /// Full-plane table (`n × n` block) for `Log`, `Log1p` or `Log1pInv`.
    pub fn full_plane(kind: KernelKind, spec: &GridSpec) -> Self {
        assert!(kind != KernelKind::HalfplaneReflected);
        Self::build(kind, spec.n(), spec.n(), spec.spacing(), 0)
    }

    /// `log|d|` between upper-half nodes (`n × n/2` block).
    pub fn halfplane_log(spec: &GridSpec) -> Self {
        Self::build(KernelKind::Log, spec.n(), spec.half(), spec.spacing(), 0)
    }

    /// Reflected kernel between upper-half nodes, in flipped-convolution form.
    pub fn halfplane_reflected(spec: &GridSpec) -> Self {
        Self::build(
            KernelKind::HalfplaneReflected,
            spec.n(),
            spec.half(),
            spec.spacing(),
            spec.half() as isize,
        )
    }

    fn build(kind: KernelKind, rows: usize, cols: usize, h: f64, col_offset: isize) -> Self {
        let (r, c) = (rows as isize, cols as isize);
        let width = 2 * cols - 1;
        let mut values = vec![0.0; (2 * rows - 1) * width];
        // The cell averages cost a quadrature each; evaluate them once.
        let centre = match kind {
            KernelKind::Log => log_cell_average(h),
            KernelKind::Log1p => log1p_cell_average(h),
            KernelKind::Log1pInv => log1p_cell_average(h) - log_cell_average(h),
            KernelKind::HalfplaneReflected => f64::NAN,
        };
        for di in -(r - 1)..r {
            for dj in -(c - 1)..c {
                let k = ((di + r - 1) as usize) * width + (dj + c - 1) as usize;
                values[k] = if kind != KernelKind::HalfplaneReflected && di == 0 && dj == 0 {
                    centre
                } else {
                    kernel_value(kind, di, dj + col_offset, h)
                };
            }
        }
        Self {
            kind,
            rows,
            cols,
            spacing: h,
            values,
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    #[inline]
    pub fn get(&self, di: isize, dj: isize) -> f64 {
        let width = 2 * self.cols - 1;
        let i = (di + self.rows as isize - 1) as usize;
        let j = (dj + self.cols as isize - 1) as usize;
        self.values[i * width + j]
    }
}

/// Direct `h²·Σ_k Σ_l K(i − k, j − l)·src(k, l)` on a `rows × cols` block.
/// Deterministic; `O(rows²·cols²)`.
pub fn convolve_direct(table: &KernelTable, src: &[f64]) -> Vec<f64> {
    let (rows, cols) = table.shape();
    assert_eq!(src.len(), rows * cols);
    let h2 = table.spacing() * table.spacing();
    let support: Vec<(isize, isize, f64)> = (0..rows)
        .flat_map(|k| (0..cols).map(move |l| (k, l)))
        .filter_map(|(k, l)| {
            let v = src[k * cols + l];
            (v != 0.0).then_some((k as isize, l as isize, v))
        })
        .collect();
    (0..rows * cols)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = ((idx / cols) as isize, (idx % cols) as isize);
            let mut acc = Neumaier::new();
            for &(k, l, v) in &support {
                acc.add(table.get(i - k, j - l) * v);
            }
            h2 * acc.total()
        })
        .collect()
}

/// Smallest `m ≥ min` of the form `2^a·3^b·5^c` with `a ≥ 1`.
pub fn fast_len(min: usize) -> usize {
    let mut m = min.max(2);
    loop {
        if m.is_multiple_of(2) {
            let mut k = m;
            for f in [2, 3, 5] {
                while k.is_multiple_of(f) {
                    k /= f;
                }
            }
            if k == 1 {
                return m;
            }
        }
        m += 1;
    }
}

/// Zero-padded FFT convolution against a fixed [`KernelTable`].
///
/// The kernel spectrum and the transform plans are built once; `apply` is
/// then a pure function of its input and safe to call from several threads.
pub struct Convolver {
    rows: usize,
    cols: usize,
    prows: usize,
    pcols: usize,
    weight: f64,
    spectrum: Vec<Complex64>,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("padded", &(self.prows, self.pcols))
            .finish()
    }
}

impl Convolver {
    pub fn new(table: &KernelTable) -> Self {
        let (rows, cols) = table.shape();
        let prows = fast_len(2 * rows - 1);
        let pcols = fast_len(2 * cols - 1);
        let mut real_planner = RealFftPlanner::<f64>::new();
        let mut planner = FftPlanner::<f64>::new();
        let mut conv = Self {
            rows,
            cols,
            prows,
            pcols,
            weight: table.spacing() * table.spacing() / (prows * pcols) as f64,
            spectrum: Vec::new(),
            r2c: real_planner.plan_fft_forward(pcols),
            c2r: real_planner.plan_fft_inverse(pcols),
            forward: planner.plan_fft_forward(prows),
            inverse: planner.plan_fft_inverse(prows),
        };
        let (r, c) = (rows as isize, cols as isize);
        let mut padded = vec![0.0; prows * pcols];
        for di in -(r - 1)..r {
            let pi = di.rem_euclid(prows as isize) as usize;
            for dj in -(c - 1)..c {
                let pj = dj.rem_euclid(pcols as isize) as usize;
                padded[pi * pcols + pj] = table.get(di, dj);
            }
        }
        conv.spectrum = conv.forward_2d(&padded, prows);
        conv
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn spectral_cols(&self) -> usize {
        self.pcols / 2 + 1
    }

    /// 2-D forward transform of a `prows × pcols` array whose rows beyond
    /// `nonzero_rows` are zero. Output is column-major over frequency columns.
    fn forward_2d(&self, data: &[f64], nonzero_rows: usize) -> Vec<Complex64> {
        let ncc = self.spectral_cols();
        let mut row_spec = vec![Complex64::new(0.0, 0.0); nonzero_rows * ncc];
        let mut row_in = vec![0.0; self.pcols];
        let mut r2c_scratch = self.r2c.make_scratch_vec();
        for r in 0..nonzero_rows {
            row_in.copy_from_slice(&data[r * self.pcols..(r + 1) * self.pcols]);
            self.r2c
                .process_with_scratch(&mut row_in, &mut row_spec[r * ncc..(r + 1) * ncc], &mut r2c_scratch)
                .expect("real FFT length mismatch");
        }
        let mut out = vec![Complex64::new(0.0, 0.0); ncc * self.prows];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        for c in 0..ncc {
            let col = &mut out[c * self.prows..(c + 1) * self.prows];
            for r in 0..nonzero_rows {
                col[r] = row_spec[r * ncc + c];
            }
            self.forward.process_with_scratch(col, &mut scratch);
        }
        out
    }

    /// `h²·Σ K(i − k, j − l)·src(k, l)` for a `rows × cols` source.
    pub fn apply(&self, src: &[f64]) -> Vec<f64> {
        assert_eq!(src.len(), self.rows * self.cols, "convolver shape mismatch");
        let ncc = self.spectral_cols();
        let mut padded = vec![0.0; self.rows * self.pcols];
        for r in 0..self.rows {
            padded[r * self.pcols..r * self.pcols + self.cols]
                .copy_from_slice(&src[r * self.cols..(r + 1) * self.cols]);
        }
        let mut spec = self.forward_2d(&padded, self.rows);
        for (s, k) in spec.iter_mut().zip(&self.spectrum) {
            *s *= k;
        }
        let mut rows_spec = vec![Complex64::new(0.0, 0.0); self.rows * ncc];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.inverse.get_inplace_scratch_len()];
        for c in 0..ncc {
            let col = &mut spec[c * self.prows..(c + 1) * self.prows];
            self.inverse.process_with_scratch(col, &mut scratch);
            for r in 0..self.rows {
                rows_spec[r * ncc + c] = col[r];
            }
        }
        let mut out = vec![0.0; self.rows * self.cols];
        let mut row_out = vec![0.0; self.pcols];
        let mut c2r_scratch = self.c2r.make_scratch_vec();
        for r in 0..self.rows {
            let row = &mut rows_spec[r * ncc..(r + 1) * ncc];
            // The exact result is real; drop the round-off imaginary parts the
            // inverse real transform requires to vanish.
            row[0].im = 0.0;
            row[ncc - 1].im = 0.0;
            self.c2r
                .process_with_scratch(row, &mut row_out, &mut c2r_scratch)
                .expect("inverse real FFT length mismatch");
            for (o, v) in out[r * self.cols..(r + 1) * self.cols].iter_mut().zip(&row_out) {
                *o = v * self.weight;
            }
        }
        out
    }
}

/// `w = log|·| * ρ` by the direct double loop.
pub fn log_convolve_direct(rho: &ScalarField) -> ScalarField {
    let table = KernelTable::full_plane(KernelKind::Log, rho.spec());
    let w = convolve_direct(&table, rho.values());
    ScalarField::from_values(*rho.spec(), w).expect("finite convolution")
}

/// `w = log|·| * ρ` by zero-padded FFT. For repeated use on one grid build a
/// [`FieldConvolver`] once instead.
pub fn log_convolve_fast(rho: &ScalarField) -> ScalarField {
    FieldConvolver::new(KernelKind::Log, rho.spec()).apply(rho)
}

/// A [`Convolver`] for full-grid fields.
#[derive(Debug)]
pub struct FieldConvolver {
    spec: GridSpec,
    kind: KernelKind,
    inner: Convolver,
}

impl FieldConvolver {
    pub fn new(kind: KernelKind, spec: &GridSpec) -> Self {
        Self {
            spec: *spec,
            kind,
            inner: Convolver::new(&KernelTable::full_plane(kind, spec)),
        }
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn apply(&self, rho: &ScalarField) -> ScalarField {
        assert_eq!(rho.spec(), &self.spec, "convolver grid mismatch");
        ScalarField::from_values(self.spec, self.inner.apply(rho.values()))
            .expect("finite convolution")
    }

    pub fn apply_raw(&self, rho: &[f64]) -> Vec<f64> {
        self.inner.apply(rho)
    }
}

/// FFT evaluators for the half-plane potentials `H₁` and `H₂` on one grid.
#[derive(Debug)]
pub struct HalfPlane {
    spec: GridSpec,
    log: Convolver,
    reflected: Convolver,
}

impl HalfPlane {
    pub fn new(spec: &GridSpec) -> Self {
        Self {
            spec: *spec,
            log: Convolver::new(&KernelTable::halfplane_log(spec)),
            reflected: Convolver::new(&KernelTable::halfplane_reflected(spec)),
        }
    }

    /// `H₁` from an upper-half density `ρ = |u|^p`.
    pub fn h1_from_density(&self, rho: &UpperHalfField) -> UpperHalfField {
        let w = self.log.apply(rho.values());
        UpperHalfField::from_values(self.spec, w.into_iter().map(|v| 2.0 * v).collect())
            .expect("shape")
    }

    /// `H₂` from an upper-half density.
    pub fn h2_from_density(&self, rho: &UpperHalfField) -> UpperHalfField {
        let (n, m) = rho.shape();
        let mut flipped = vec![0.0; n * m];
        for i in 0..n {
            for a in 0..m {
                flipped[i * m + (m - 1 - a)] = rho.get(i, a);
            }
        }
        UpperHalfField::from_values(self.spec, self.reflected.apply(&flipped)).expect("shape")
    }

    pub fn h1(&self, u_plus: &UpperHalfField, p: f64) -> UpperHalfField {
        self.h1_from_density(&u_plus.abs_pow(p))
    }

    pub fn h2(&self, u_plus: &UpperHalfField, p: f64) -> UpperHalfField {
        self.h2_from_density(&u_plus.abs_pow(p))
    }
}

/// `H₁(x) = 2·∫_{R²₊} log|x − y|·|u|^p(y) dy` on the upper-half nodes.
pub fn halfplane_h1(u_plus: &UpperHalfField, p: f64) -> UpperHalfField {
    HalfPlane::new(u_plus.spec()).h1(u_plus, p)
}

/// `H₂(x) = ∫_{R²₊} log((x₁−y₁)² + (x₂+y₂)²)·|u|^p(y) dy` on the upper-half
/// nodes.
pub fn halfplane_h2(u_plus: &UpperHalfField, p: f64) -> UpperHalfField {
    HalfPlane::new(u_plus.spec()).h2(u_plus, p)
}

/// `H₁` at an arbitrary upper lattice node `(i, a)` (possibly off the grid)
/// from an upper-half density, by direct summation.
pub fn halfplane_h1_at(rho: &UpperHalfField, i: isize, a: isize) -> f64 {
    let h = rho.spec().spacing();
    let centre = log_cell_average(h);
    let (n, m) = rho.shape();
    let mut acc = Neumaier::new();
    for k in 0..n {
        for b in 0..m {
            let v = rho.get(k, b);
            if v == 0.0 {
                continue;
            }
            let (di, db) = (i - k as isize, a - b as isize);
            let kern = if di == 0 && db == 0 {
                centre
            } else {
                kernel_value(KernelKind::Log, di, db, h)
            };
            acc.add(kern * v);
        }
    }
    2.0 * h * h * acc.total()
}

/// `H₂` at an arbitrary upper lattice node `(i, a)` by direct summation.
pub fn halfplane_h2_at(rho: &UpperHalfField, i: isize, a: isize) -> f64 {
    let h = rho.spec().spacing();
    let (n, m) = rho.shape();
    let mut acc = Neumaier::new();
    for k in 0..n {
        for b in 0..m {
            let v = rho.get(k, b);
            if v != 0.0 {
                let s = a + b as isize + 1;
                acc.add(kernel_value(KernelKind::HalfplaneReflected, i - k as isize, s, h) * v);
            }
        }
    }
    h * h * acc.total()
}

/// Split `H₂(x) = F(x) − G(x)` at the upper node `(i, a)`: `F` collects the
/// nodes outside the unit cap `Ω₁(x) = {y : (x₁−y₁)² + (x₂+y₂)² < 1}` where
/// the reflected log is nonnegative, `G` the negated contribution of the cap.
/// Both are nonnegative for a nonnegative density.
pub fn halfplane_f_g(u_plus: &UpperHalfField, p: f64, i: usize, a: usize) -> Result<(f64, f64)> {
    let (n, m) = u_plus.shape();
    if i >= n || a >= m {
        return Err(Error::NotUpperNode(i as isize, a as isize));
    }
    let h = u_plus.spec().spacing();
    let mut far = Neumaier::new();
    let mut cap = Neumaier::new();
    for k in 0..n {
        for b in 0..m {
            let rho = crate::grid::abs_pow(u_plus.get(k, b), p);
            if rho == 0.0 {
                continue;
            }
            let d1 = (i as f64 - k as f64) * h;
            let d2 = (a + b + 1) as f64 * h;
            let dist_sq = d1 * d1 + d2 * d2;
            let kern = kernel_value(KernelKind::HalfplaneReflected, i as isize - k as isize, (a + b + 1) as isize, h);
            if dist_sq >= 1.0 {
                far.add(kern.max(0.0) * rho);
            } else {
                cap.add((-kern).max(0.0) * rho);
            }
        }
    }
    Ok((h * h * far.total(), h * h * cap.total()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Adaptive tensor Gauss–Legendre over `[0, a]²`, refining only the
    /// sub-square touching the origin where the integrand is singular.
    fn quadrant_integral(f: &dyn Fn(f64, f64) -> f64, a: f64, depth: usize) -> f64 {
        let square = |x0: f64, y0: f64, s: f64| {
            let mut acc = 0.0;
            for (xn, xw) in GAUSS5 {
                for (yn, yw) in GAUSS5 {
                    let x = x0 + 0.5 * s * (1.0 + xn);
                    let y = y0 + 0.5 * s * (1.0 + yn);
                    acc += xw * yw * f(x, y);
                }
            }
            0.25 * s * s * acc
        };
        if depth == 0 {
            return square(0.0, 0.0, a);
        }
        let s = 0.5 * a;
        // Split into 4; the three away from the origin are smooth, but refine
        // them too (tensor 2×2 subdivision) for accuracy.
        let smooth = |x0: f64, y0: f64| {
            let t = 0.25 * s;
            let mut acc = 0.0;
            for p in 0..4 {
                for q in 0..4 {
                    acc += square(x0 + p as f64 * t, y0 + q as f64 * t, t);
                }
            }
            acc
        };
        smooth(s, 0.0) + smooth(0.0, s) + smooth(s, s) + quadrant_integral(f, s, depth - 1)
    }

    #[test]
    fn log_cell_average_matches_quadrature() {
        for h in [0.09375, 0.5, 2.0] {
            let f = |x: f64, y: f64| 0.5 * (x * x + y * y).ln();
            let avg = 4.0 * quadrant_integral(&f, 0.5 * h, 40) / (h * h);
            assert!((avg - log_cell_average(h)).abs() < 1e-12, "h={h}: {avg} vs {}", log_cell_average(h));
            assert!(log_cell_average(h) < 0.0 || h > 2.0);
        }
    }

    #[test]
    fn log1p_cell_average_matches_quadrature() {
        for h in [0.09375, 0.5, 2.0, 5.0] {
            let f = |x: f64, y: f64| x.hypot(y).ln_1p();
            let avg = 4.0 * quadrant_integral(&f, 0.5 * h, 40) / (h * h);
            assert!((avg - log1p_cell_average(h)).abs() < 1e-12, "h={h}: {avg} vs {}", log1p_cell_average(h));
        }
    }

    #[test]
    fn radial_moment_branches_agree() {
        let closed = |r: f64| 0.5 * (r * r - 1.0) * r.ln_1p() - 0.25 * r * r + 0.5 * r;
        for r in [0.3, 0.45, 0.499] {
            assert!((radial_log1p_moment(r) - closed(r)).abs() < 1e-14);
        }
    }

    #[test]
    fn split_identity_per_entry() {
        let g = make_grid(3.0, 16).unwrap();
        let log = KernelTable::full_plane(KernelKind::Log, &g);
        let a = KernelTable::full_plane(KernelKind::Log1p, &g);
        let b = KernelTable::full_plane(KernelKind::Log1pInv, &g);
        for di in -15..16 {
            for dj in -15..16 {
                let lhs = log.get(di, dj);
                let rhs = a.get(di, dj) - b.get(di, dj);
                assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * (1.0 + lhs.abs()), "({di},{dj})");
            }
        }
        assert!(log.get(0, 0) < 0.0);
    }

    #[test]
    fn fast_len_values() {
        assert_eq!(fast_len(511), 512);
        assert_eq!(fast_len(255), 256);
        assert_eq!(fast_len(63), 64);
        assert_eq!(fast_len(13), 16);
        assert_eq!(fast_len(25), 30);
    }

    #[test]
    fn single_mass_gives_fundamental_solution() {
        let g = make_grid(2.0, 16).unwrap();
        let (i0, j0) = (8usize, 8usize); // the node at (h/2, h/2)
        let mut rho = ScalarField::zeros(g);
        rho.set(i0, j0, 1.0 / g.cell_area());
        let w = log_convolve_direct(&rho);
        let wf = log_convolve_fast(&rho);
        let x0 = (g.coord(i0 as isize), g.coord(j0 as isize));
        for i in 0..16 {
            for j in 0..16 {
                if (i, j) == (i0, j0) {
                    continue;
                }
                let r = (g.coord(i as isize) - x0.0).hypot(g.coord(j as isize) - x0.1);
                assert!((w.get(i, j) - r.ln()).abs() < 1e-14);
                assert!((wf.get(i, j) - r.ln()).abs() < 1e-12);
            }
        }
        assert!(log_convolve_direct(&ScalarField::zeros(g)).is_zero());
        assert!(log_convolve_fast(&ScalarField::zeros(g)).sup_norm() == 0.0);
    }

    #[test]
    fn fast_matches_direct_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = make_grid(2.5, 20).unwrap();
        let rho = ScalarField::from_values(g, (0..g.len()).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let d = log_convolve_direct(&rho);
        let f = log_convolve_fast(&rho);
        let scale = d.sup_norm();
        let err = d.values().iter().zip(f.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err / scale < 1e-12, "{}", err / scale);
    }

    #[test]
    fn translation_equivariance() {
        let g = make_grid(3.0, 24).unwrap();
        let rho = ScalarField::from_fn(g, |x, y| (-(x * x + 2.0 * y * y) * 8.0).exp());
        let w = log_convolve_fast(&rho);
        let ws = log_convolve_fast(&rho.shifted(1, 0));
        for i in 1..24 {
            for j in 0..24 {
                assert!((ws.get(i, j) - w.get(i - 1, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn halfplane_single_masses() {
        let g = make_grid(2.0, 16).unwrap();
        let mut u = UpperHalfField::zeros(g);
        let (k, b) = (5usize, 2usize);
        u.set(k, b, 1.0);
        let h = g.spacing();
        let h1 = halfplane_h1(&u, 2.0);
        let h2 = halfplane_h2(&u, 2.0);
        let (a1, a2) = (g.coord(k as isize), g.coord((8 + b) as isize));
        for i in 0..16 {
            for a in 0..8 {
                let (x1, x2) = (g.coord(i as isize), g.coord((8 + a) as isize));
                let refl = ((x1 - a1).powi(2) + (x2 + a2).powi(2)).ln() * h * h;
                assert!((h2.get(i, a) - refl).abs() < 1e-13);
                if (i, a) != (k, b) {
                    let direct = 2.0 * (x1 - a1).hypot(x2 - a2).ln() * h * h;
                    assert!((h1.get(i, a) - direct).abs() < 1e-13);
                }
            }
        }
        let zero = UpperHalfField::zeros(g);
        assert_eq!(halfplane_h1(&zero, 2.0).values().iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
        assert_eq!(halfplane_h2(&zero, 2.0).values().iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
    }

    #[test]
    fn halfplane_fast_matches_pointwise_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = make_grid(2.0, 16).unwrap();
        let u = UpperHalfField::from_values(g, (0..g.len() / 2).map(|_| rng.gen::<f64>() - 0.3).collect()).unwrap();
        let p = 2.5;
        let rho = u.abs_pow(p);
        let h1 = halfplane_h1(&u, p);
        let h2 = halfplane_h2(&u, p);
        for i in 0..16 {
            for a in 0..8 {
                let d1 = halfplane_h1_at(&rho, i as isize, a as isize);
                let d2 = halfplane_h2_at(&rho, i as isize, a as isize);
                assert!((h1.get(i, a) - d1).abs() < 1e-12, "{} {}", h1.get(i, a), d1);
                assert!((h2.get(i, a) - d2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn f_g_examples() {
        let g = make_grid(4.0, 16).unwrap(); // h = 0.5
        let h = g.spacing();
        let u = UpperHalfField::zeros(g);
        assert_eq!(halfplane_f_g(&u, 2.0, 3, 1).unwrap(), (0.0, 0.0));
        // x at (i, a) = (8, 0): x₂ = h/2. Mass at (k, b) = (8, 3): y₂ = 3.5h.
        // Reflected distance = x₂ + y₂ = 4h = 2.
        let mut v = UpperHalfField::zeros(g);
        v.set(8, 3, 1.5);
        let rho = 1.5f64 * 1.5;
        let (f, gg) = halfplane_f_g(&v, 2.0, 8, 0).unwrap();
        assert!((f - h * h * rho * 4f64.ln()).abs() < 1e-14);
        assert_eq!(gg, 0.0);
        assert!(halfplane_f_g(&v, 2.0, 16, 0).is_err());
    }
}
