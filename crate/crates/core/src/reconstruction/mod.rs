//! Per-cell polynomial reconstruction from cell means.
//!
//! Every operator works in the gnomonic tangent plane of its cell with the
//! cell center at the origin. An operator is an affine map
//! `c_rest = S · (φ̄_k − φ̄_i)_k`, `c₀ = φ̄_i − ā · c_rest`, where `ā` is zero
//! for the pointwise SG fit and the cell's own monomial averages for OG.

mod lsq;
mod monomials;
mod og;
mod poly;
mod sg;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use lsq::{pseudo_inverse, SVD_CUTOFF};
pub use monomials::{compute_monomial_averages, polygon_monomial_integrals, MonomialAverages};
pub use og::build_og_operator;
pub use poly::{evaluate_poly, monomial_count, monomial_exponents, monomial_values, PolyCoeffs};
pub use sg::{build_sg_operator, sg_directional_second_derivative};

pub(crate) use sg::hessian_form;

use crate::error::Result;
use crate::geometry::TangentFrame;
use crate::grid::GridTopology;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    Sg,
    Og2,
    Og3,
    Og4,
}

impl Flavor {
    pub fn degree(self) -> usize {
        match self {
            Flavor::Og2 => 1,
            Flavor::Sg | Flavor::Og3 => 2,
            Flavor::Og4 => 3,
        }
    }
}

/// Reconstruction stencil, center first.
#[derive(Clone, Debug, PartialEq)]
pub struct Stencil {
    pub center: usize,
    pub members: Vec<usize>,
}

/// Precomputed reconstruction of one cell.
#[derive(Clone, Debug)]
pub struct CellOperator {
    pub stencil: Stencil,
    pub frame: TangentFrame,
    pub degree: usize,
    /// `(M − 1) × (|stencil| − 1)` map from mean differences to `c₁…`.
    pub solve: DMatrix<f64>,
    /// `ā₁…` (zeros for SG).
    pub mean_row: Vec<f64>,
}

impl CellOperator {
    pub fn coefficients(&self, values: &[f64]) -> PolyCoeffs {
        let mut out = vec![0.0; monomial_count(self.degree)];
        self.apply_into(values, &mut out);
        PolyCoeffs::new(self.degree, out)
    }

    fn apply_into(&self, values: &[f64], out: &mut [f64]) {
        let center = values[self.stencil.center];
        let rows = self.solve.nrows();
        out[1..].iter_mut().for_each(|c| *c = 0.0);
        for (j, &k) in self.stencil.members[1..].iter().enumerate() {
            let d = values[k] - center;
            let col = self.solve.column(j);
            for r in 0..rows {
                out[r + 1] += col[r] * d;
            }
        }
        out[0] = center - self.mean_row.iter().zip(&out[1..]).map(|(a, c)| a * c).sum::<f64>();
    }
}

/// Reconstruction operators for every cell of a grid.
#[derive(Clone, Debug)]
pub struct ReconstructionOperator {
    pub flavor: Flavor,
    pub cells: Vec<CellOperator>,
}

impl ReconstructionOperator {
    pub fn build(grid: &GridTopology, flavor: Flavor) -> Result<Self> {
        let cells = (0..grid.cell_count())
            .into_par_iter()
            .map(|i| match flavor {
                Flavor::Sg => build_sg_operator(grid, i),
                f => build_og_operator(grid, i, f.degree()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ReconstructionOperator { flavor, cells })
    }

    pub fn degree(&self) -> usize {
        self.flavor.degree()
    }

    pub fn coeffs_per_cell(&self) -> usize {
        monomial_count(self.degree())
    }

    pub fn coefficients(&self, cell: usize, values: &[f64]) -> PolyCoeffs {
        self.cells[cell].coefficients(values)
    }

    /// All cells' coefficients, flattened cell-major into `out`.
    pub fn apply(&self, values: &[f64], out: &mut Vec<f64>) {
        let m = self.coeffs_per_cell();
        out.resize(self.cells.len() * m, 0.0);
        out.par_chunks_mut(m)
            .zip(self.cells.par_iter())
            .with_min_len(256)
            .for_each(|(slot, op)| op.apply_into(values, slot));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_icosahedral_grid, lloyd_optimize, DensityFunction, LloydOptions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_k_exact(grid: &GridTopology, flavor: Flavor, trials: usize, rng: &mut ChaCha8Rng) {
        let op = ReconstructionOperator::build(grid, flavor).unwrap();
        let m = op.coeffs_per_cell();
        let mut vals = vec![0.0; grid.cell_count()];
        for (i, cell) in op.cells.iter().enumerate() {
            let avgs: Vec<Vec<f64>> = cell
                .stencil
                .members
                .iter()
                .map(|&k| compute_monomial_averages(grid, &cell.frame, k, cell.degree).unwrap().values)
                .collect();
            for _ in 0..trials {
                let truth: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
                for (&k, a) in cell.stencil.members.iter().zip(&avgs) {
                    vals[k] = a.iter().zip(&truth).map(|(a, c)| a * c).sum();
                }
                let c = cell.coefficients(&vals);
                for (a, b) in c.coeffs.iter().zip(&truth) {
                    assert!((a - b).abs() < 1e-9, "{flavor:?} cell {i}: {a} vs {b}");
                }
                // random means: the center-cell mean is still reproduced
                for &k in &cell.stencil.members {
                    vals[k] = rng.random_range(-1.0..1.0);
                }
                let c = cell.coefficients(&vals);
                let mean: f64 = avgs[0].iter().zip(&c.coeffs).map(|(a, c)| a * c).sum();
                assert!((mean - vals[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn og_operators_are_k_exact_on_level_3() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = build_icosahedral_grid(3).unwrap();
        let g = lloyd_optimize(g, &DensityFunction::Uniform, LloydOptions { tol: 1e-8, max_iter: 5000 }).unwrap();
        for flavor in [Flavor::Og2, Flavor::Og3, Flavor::Og4] {
            check_k_exact(&g, flavor, 3, &mut rng);
        }
    }

    #[test]
    fn flat_apply_matches_per_cell() {
        let g = build_icosahedral_grid(2).unwrap();
        let vals: Vec<f64> = (0..g.cell_count()).map(|i| (i as f64 * 0.1).sin()).collect();
        for flavor in [Flavor::Sg, Flavor::Og2, Flavor::Og4] {
            let op = ReconstructionOperator::build(&g, flavor).unwrap();
            let mut flat = Vec::new();
            op.apply(&vals, &mut flat);
            let m = op.coeffs_per_cell();
            for i in [0, 50, 161] {
                assert_eq!(&flat[i * m..(i + 1) * m], op.coefficients(i, &vals).coeffs.as_slice());
            }
        }
    }
}
