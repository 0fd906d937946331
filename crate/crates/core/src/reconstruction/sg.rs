//! Pointwise quadratic least-squares fit on the first-level stencil.

use nalgebra::DMatrix;

use super::lsq::pseudo_inverse;
use super::poly::PolyCoeffs;
use super::{CellOperator, Stencil};
use crate::error::{Error, Result};
use crate::grid::GridTopology;

/// Builds the SG operator of cell `i`: the pseudoinverse of the 5-column
/// matrix `[x, y, x², xy, y²]` at the projected neighbor centers. It maps
/// `φ̄_k − φ̄_i` to `(c₁, …, c₅)`; `c₀ = φ̄_i`.
pub fn build_sg_operator(grid: &GridTopology, i: usize) -> Result<CellOperator> {
    let members = grid.first_level_stencil(i);
    if members.len() < 6 {
        return Err(Error::StencilTooSmall {
            cell: i,
            members: members.len(),
            required: 6,
        });
    }
    let frame = grid.cells[i].frame();
    let pts = members[1..]
        .iter()
        .map(|&k| frame.project(&grid.cells[k].center))
        .collect::<Result<Vec<_>>>()?;
    let h = pts.iter().map(|p| p[0].hypot(p[1])).fold(0.0, f64::max);
    let scale = [h, h, h * h, h * h, h * h];
    let mut a = DMatrix::zeros(pts.len(), 5);
    for (r, &[x, y]) in pts.iter().enumerate() {
        let row = [x, y, x * x, x * y, y * y];
        for c in 0..5 {
            a[(r, c)] = row[c] / scale[c];
        }
    }
    let (mut pinv, rank) = pseudo_inverse(&a);
    if rank < 5 {
        return Err(Error::RankDeficientStencil {
            cell: i,
            rank,
            required: 5,
        });
    }
    for c in 0..5 {
        pinv.row_mut(c).scale_mut(1.0 / scale[c]);
    }
    Ok(CellOperator {
        stencil: Stencil { center: i, members },
        frame,
        degree: 2,
        solve: pinv,
        mean_row: vec![0.0; 5],
    })
}

/// `n̂ᵀ H n̂` with `H = [[2c₃, c₄], [c₄, 2c₅]]`, the Hessian of a quadratic
/// (or the quadratic part of a higher-degree polynomial at the origin).
pub fn sg_directional_second_derivative(p: &PolyCoeffs, n: [f64; 2]) -> f64 {
    hessian_form(p.coeffs[3], p.coeffs[4], p.coeffs[5], n)
}

#[inline]
pub(crate) fn hessian_form(c3: f64, c4: f64, c5: f64, n: [f64; 2]) -> f64 {
    2.0 * c3 * n[0] * n[0] + 2.0 * c4 * n[0] * n[1] + 2.0 * c5 * n[1] * n[1]
}
