//! `(1 − Δ_h)⁻¹` with homogeneous Dirichlet ghosts, diagonalised by the
//! type-I discrete sine transform along each axis.

use std::sync::Arc;

use rustdct::{DctPlanner, Dst1};

use crate::grid::{GridSpec, ScalarField};

pub struct Preconditioner {
    spec: GridSpec,
    dst: Arc<dyn Dst1<f64>>,
    inv_eigen: Vec<f64>,
}

impl std::fmt::Debug for Preconditioner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Preconditioner").field("spec", &self.spec).finish()
    }
}

impl Preconditioner {
    pub fn new(spec: &GridSpec) -> Self {
        let n = spec.n();
        let h = spec.spacing();
        let sines: Vec<f64> = (1..=n)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * (n + 1) as f64)).sin();
                4.0 * s * s / (h * h)
            })
            .collect();
        // Two unnormalised DST-I passes per axis scale by ((n + 1)/2)².
        let norm = (2.0 / (n + 1) as f64).powi(2);
        let inv_eigen = sines
            .iter()
            .flat_map(|a| sines.iter().map(move |b| norm / (1.0 + a + b)))
            .collect();
        let mut planner = DctPlanner::new();
        Self {
            spec: *spec,
            dst: planner.plan_dst1(n),
            inv_eigen,
        }
    }

    /// Eigenvalue of `1 − Δ_h` for the sine mode `(k, l)`, `1 ≤ k, l ≤ n`.
    pub fn eigenvalue(&self, k: usize, l: usize) -> f64 {
        let n = self.spec.n();
        let norm = (2.0 / (n + 1) as f64).powi(2);
        norm / self.inv_eigen[(k - 1) * n + (l - 1)]
    }

    fn transform_2d(&self, data: &mut [f64]) {
        let n = self.spec.n();
        // A reused scratch buffer carries state between rustdct calls and
        // corrupts later transforms, so let each call allocate its own.
        for row in data.chunks_exact_mut(n) {
            self.dst.process_dst1(row);
        }
        let mut col = vec![0.0; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            self.dst.process_dst1(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }

    /// `z` with `(1 − Δ_h) z = r`.
    pub fn apply(&self, r: &ScalarField) -> ScalarField {
        assert_eq!(r.spec(), &self.spec, "preconditioner grid mismatch");
        let mut data = r.values().to_vec();
        self.transform_2d(&mut data);
        for (d, s) in data.iter_mut().zip(&self.inv_eigen) {
            *d *= s;
        }
        self.transform_2d(&mut data);
        ScalarField::from_values(self.spec, data).expect("finite")
    }
}
