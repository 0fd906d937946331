//! Cell averages of tangent-plane monomials.
//!
//! A cell is projected gnomonically into the tangent plane of the reference
//! cell. Great-circle edges map to straight segments, so the image is a
//! planar polygon and `∫ x^m y^n dA = ∮ x^{m+1} y^n / (m+1) dy` is integrated
//! exactly by Gauss–Legendre quadrature on each segment.

use super::poly::{monomial_count, monomial_exponents};
use crate::error::Result;
use crate::geometry::TangentFrame;
use crate::grid::GridTopology;
use crate::quadrature::gauss_legendre_unit;

/// Averages of every monomial up to `degree` over one (projected) cell,
/// in basis order. The first entry is exactly 1.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialAverages {
    pub degree: usize,
    pub values: Vec<f64>,
}

/// Integrals of all monomials up to `degree` over a counterclockwise planar
/// polygon; entry 0 is the signed area.
pub fn polygon_monomial_integrals(polygon: &[[f64; 2]], degree: usize) -> Vec<f64> {
    let exps = monomial_exponents(degree);
    let mut out = vec![0.0; exps.len()];
    // integrand degree ≤ degree + 1
    let (t, w) = gauss_legendre_unit((degree + 3) / 2);
    let n = polygon.len();
    for k in 0..n {
        let [x0, y0] = polygon[k];
        let [x1, y1] = polygon[(k + 1) % n];
        let (dx, dy) = (x1 - x0, y1 - y0);
        if dy == 0.0 {
            continue;
        }
        for (tq, wq) in t.iter().zip(&w) {
            let x = x0 + tq * dx;
            let y = y0 + tq * dy;
            for (slot, &(m, n)) in out.iter_mut().zip(&exps) {
                *slot += wq * dy * x.powi(m as i32 + 1) * y.powi(n as i32) / (m as f64 + 1.0);
            }
        }
    }
    out
}

/// Averages of the monomials of `frame`'s coordinates over cell `target`.
pub fn compute_monomial_averages(
    grid: &GridTopology,
    frame: &TangentFrame,
    target: usize,
    degree: usize,
) -> Result<MonomialAverages> {
    let polygon = grid.cells[target]
        .vertices
        .iter()
        .map(|&v| frame.project(&grid.vertices[v]))
        .collect::<Result<Vec<_>>>()?;
    let integrals = polygon_monomial_integrals(&polygon, degree);
    let area = integrals[0];
    let mut values: Vec<f64> = integrals.iter().map(|v| v / area).collect();
    values[0] = 1.0;
    debug_assert_eq!(values.len(), monomial_count(degree));
    Ok(MonomialAverages { degree, values })
}
