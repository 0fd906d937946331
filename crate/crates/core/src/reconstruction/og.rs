//! k-exact least-squares reconstruction with exact mean conservation.

use nalgebra::DMatrix;

use super::lsq::pseudo_inverse;
use super::monomials::compute_monomial_averages;
use super::poly::{monomial_count, monomial_exponents};
use super::{CellOperator, Stencil};
use crate::error::{Error, Result};
use crate::grid::GridTopology;

/// Builds the degree-`degree` operator of cell `i`.
///
/// The mean condition on `Ω_i` is `c₀ + Σ_m ā_m c_m = φ̄_i`. Substituting
/// `c₀` into the weighted neighbor rows gives
/// `w_j Σ_m (m̂_{j,m} − ā_m) c_m = w_j (φ̄_{k_j} − φ̄_i)`, solved in the
/// minimum-norm least-squares sense.
pub fn build_og_operator(grid: &GridTopology, i: usize, degree: usize) -> Result<CellOperator> {
    assert!((1..=3).contains(&degree), "OG degree must be 1, 2 or 3");
    let members = if degree == 1 {
        grid.first_level_stencil(i)
    } else {
        grid.second_level_stencil(i)
    };
    let m = monomial_count(degree);
    if members.len() < m {
        return Err(Error::StencilTooSmall {
            cell: i,
            members: members.len(),
            required: m,
        });
    }
    let frame = grid.cells[i].frame();
    let own = compute_monomial_averages(grid, &frame, i, degree)?;
    let mean_row = own.values[1..].to_vec();

    let n = members.len() - 1;
    let mut weights = Vec::with_capacity(n);
    let mut hats = Vec::with_capacity(n);
    let mut h: f64 = 0.0;
    for &k in &members[1..] {
        let [x, y] = frame.project(&grid.cells[k].center)?;
        let r2 = x * x + y * y;
        h = h.max(r2.sqrt());
        weights.push(1.0 / r2);
        hats.push(compute_monomial_averages(grid, &frame, k, degree)?.values);
    }
    let scale: Vec<f64> = monomial_exponents(degree)[1..]
        .iter()
        .map(|&(a, b)| h.powi((a + b) as i32))
        .collect();
    let mut b = DMatrix::zeros(n, m - 1);
    for j in 0..n {
        for c in 0..m - 1 {
            b[(j, c)] = weights[j] * (hats[j][c + 1] - mean_row[c]) / scale[c];
        }
    }
    let (mut solve, rank) = pseudo_inverse(&b);
    if rank < m - 1 {
        return Err(Error::RankDeficientStencil {
            cell: i,
            rank,
            required: m - 1,
        });
    }
    for c in 0..m - 1 {
        solve.row_mut(c).scale_mut(1.0 / scale[c]);
    }
    for j in 0..n {
        solve.column_mut(j).scale_mut(weights[j]);
    }
    Ok(CellOperator {
        stencil: Stencil { center: i, members },
        frame,
        degree,
        solve,
        mean_row,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_icosahedral_grid;
    use crate::reconstruction::poly::PolyCoeffs;

    #[test]
    fn constant_field_is_reproduced() {
        let g = build_icosahedral_grid(3).unwrap();
        for degree in 1..=3 {
            let op = build_og_operator(&g, 7, degree).unwrap();
            let c = op.coefficients(&vec![-1.25; g.cell_count()]);
            assert_eq!(c.coeffs[0], -1.25);
            assert!(c.coeffs[1..].iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn stencil_sizes() {
        let g = build_icosahedral_grid(3).unwrap();
        let hex = (0..g.cell_count()).find(|&i| g.cells[i].edges.len() == 6).unwrap();
        assert_eq!(build_og_operator(&g, hex, 1).unwrap().solve.shape(), (2, 6));
        assert_eq!(build_og_operator(&g, hex, 3).unwrap().solve.shape(), (9, 18));
    }

    #[test]
    fn cubic_means_recovered() {
        let g = build_icosahedral_grid(2).unwrap();
        let i = 40;
        let op = build_og_operator(&g, i, 3).unwrap();
        let truth: Vec<f64> = (0..10).map(|k| ((k as f64) * 1.3).cos()).collect();
        let mut vals = vec![0.0; g.cell_count()];
        for &k in &op.stencil.members {
            let avg = compute_monomial_averages(&g, &op.frame, k, 3).unwrap();
            vals[k] = avg.values.iter().zip(&truth).map(|(a, c)| a * c).sum();
        }
        let c = op.coefficients(&vals);
        let want = PolyCoeffs::new(3, truth);
        for (a, b) in c.coeffs.iter().zip(&want.coeffs) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}
