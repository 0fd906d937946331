//! Linear least-squares reconstruction of the tangent wind at edge
//! quadrature points from edge-normal velocity samples.
//!
//! Around edge `e` with cells `i, j`, the samples are the normal velocities
//! on `EC(i) ∪ EC(j)`. In the tangent plane at the edge's sample point the
//! model `u(x, y) = a₀ + a₁x + a₂y` is fitted to `u(x_ℓ, y_ℓ)·n̂_ℓ = u_ℓ`
//! with weights `1/d²`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::advection::{EdgeQuadrature, EdgeWindField};
use crate::error::{Error, Result};
use crate::geometry::{SpherePoint, TangentFrame};
use crate::grid::GridTopology;
use crate::reconstruction::pseudo_inverse;
use crate::testcases::WindSpec;

/// Where an edge's normal velocity lives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplePoint {
    /// Midpoint of the Voronoi edge.
    #[default]
    Midpoint,
    /// Where the Delaunay edge crosses the Voronoi edge.
    Crossing,
}

impl SamplePoint {
    pub fn of(self, edge: &crate::grid::Edge) -> SpherePoint {
        match self {
            SamplePoint::Midpoint => edge.midpoint,
            SamplePoint::Crossing => edge.crossing,
        }
    }
}

impl fmt::Display for SamplePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplePoint::Midpoint => "midpoint",
            SamplePoint::Crossing => "crossing",
        })
    }
}

impl FromStr for SamplePoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(SamplePoint::Midpoint),
            "crossing" => Ok(SamplePoint::Crossing),
            _ => Err(Error::Config(format!("unknown sample point {s:?} (expected midpoint or crossing)"))),
        }
    }
}

/// Samples around one edge in its tangent plane.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeNormalSamples {
    pub positions: Vec<[f64; 2]>,
    /// Sample normals projected onto the plane.
    pub normals: Vec<[f64; 2]>,
    pub values: Vec<f64>,
}

/// Weighted least-squares map from sample values to `(a₀ˣ, a₀ʸ, a₁ˣ, a₁ʸ, a₂ˣ, a₂ʸ)`.
///
/// Weights are `1/d²`; a sample closer than `1e-12` to the origin gets the
/// largest weight among the others. Returns the effective rank on failure.
pub fn velocity_solve(positions: &[[f64; 2]], normals: &[[f64; 2]]) -> std::result::Result<DMatrix<f64>, usize> {
    let n = positions.len();
    let d2: Vec<f64> = positions.iter().map(|p| p[0] * p[0] + p[1] * p[1]).collect();
    let far = |d: f64| d.sqrt() >= 1e-12;
    let cap = d2.iter().filter(|&&d| far(d)).map(|d| 1.0 / d).fold(0.0, f64::max);
    let weights: Vec<f64> = d2.iter().map(|&d| if far(d) { 1.0 / d } else { cap.max(1.0) }).collect();
    let h = d2.iter().cloned().fold(0.0, f64::max).sqrt().max(1e-300);
    let mut a = DMatrix::zeros(n, 6);
    for r in 0..n {
        let ([x, y], [nx, ny]) = (positions[r], normals[r]);
        let row = [nx, ny, nx * x / h, ny * x / h, nx * y / h, ny * y / h];
        for c in 0..6 {
            a[(r, c)] = weights[r] * row[c];
        }
    }
    let (mut pinv, rank) = pseudo_inverse(&a);
    if rank < 6 {
        return Err(rank);
    }
    for c in 2..6 {
        pinv.row_mut(c).scale_mut(1.0 / h);
    }
    for r in 0..n {
        pinv.column_mut(r).scale_mut(weights[r]);
    }
    Ok(pinv)
}

/// Evaluates the fitted linear model at each query point.
pub fn reconstruct_velocity(samples: &EdgeNormalSamples, queries: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    let solve = velocity_solve(&samples.positions, &samples.normals)
        .map_err(|rank| Error::RankDeficientSamples { edge: usize::MAX, rank })?;
    let a = &solve * nalgebra::DVector::from_column_slice(&samples.values);
    Ok(queries
        .iter()
        .map(|&[x, y]| [a[0] + a[2] * x + a[4] * y, a[1] + a[3] * x + a[5] * y])
        .collect())
}

/// Per-edge precomputed maps from neighboring edge samples to normal
/// velocities at the flux points.
#[derive(Clone, Debug)]
pub struct WindReconstruction {
    pub sample_point: SamplePoint,
    pub points_per_edge: usize,
    /// Sample edges of each edge, the edge itself first.
    pub stencils: Vec<Vec<usize>>,
    /// `m × |stencil|` per edge.
    maps: Vec<DMatrix<f64>>,
}

fn plane_vector(frame: &TangentFrame, v: &crate::geometry::Vec3) -> [f64; 2] {
    [v.dot(&frame.e1), v.dot(&frame.e2)]
}

impl WindReconstruction {
    pub fn new(grid: &GridTopology, quad: &EdgeQuadrature, sample_point: SamplePoint) -> Result<Self> {
        let m = quad.points_per_edge;
        let built: Vec<(Vec<usize>, DMatrix<f64>)> = (0..grid.edge_count())
            .into_par_iter()
            .map(|e| {
                let edge = &grid.edges[e];
                let mut stencil = vec![e];
                for &c in &edge.cells {
                    for &l in &grid.cells[c].edges {
                        if !stencil.contains(&l) {
                            stencil.push(l);
                        }
                    }
                }
                let frame = TangentFrame::new(sample_point.of(edge));
                let positions = stencil
                    .iter()
                    .map(|&l| frame.project(&sample_point.of(&grid.edges[l])))
                    .collect::<Result<Vec<_>>>()?;
                let normals: Vec<[f64; 2]> = stencil.iter().map(|&l| plane_vector(&frame, &grid.edges[l].normal)).collect();
                let solve = velocity_solve(&positions, &normals).map_err(|rank| Error::RankDeficientSamples { edge: e, rank })?;
                let [nx, ny] = plane_vector(&frame, &edge.normal);
                let mut rows = DMatrix::zeros(m, 6);
                for (l, p) in quad.edge_points(e).iter().enumerate() {
                    let [x, y] = frame.project(p)?;
                    let r = [nx, ny, nx * x, ny * x, nx * y, ny * y];
                    for c in 0..6 {
                        rows[(l, c)] = r[c];
                    }
                }
                Ok((stencil, rows * solve))
            })
            .collect::<Result<_>>()?;
        let (stencils, maps) = built.into_iter().unzip();
        Ok(WindReconstruction {
            sample_point,
            points_per_edge: m,
            stencils,
            maps,
        })
    }

    /// Normal velocities at the flux points of every edge from one sample per edge.
    pub fn reconstruct_normals(&self, samples: &[f64], out: &mut [f64]) {
        let m = self.points_per_edge;
        out.par_chunks_mut(m)
            .enumerate()
            .with_min_len(256)
            .for_each(|(e, o)| {
                let map = &self.maps[e];
                for (l, v) in o.iter_mut().enumerate() {
                    *v = self.stencils[e].iter().enumerate().map(|(k, &s)| map[(l, k)] * samples[s]).sum();
                }
            });
    }

    /// Point samples `u(x_ℓ)·n_ℓ` of an analytic wind at every edge's sample point.
    pub fn sample(&self, grid: &GridTopology, wind: &WindSpec, t: f64) -> Vec<f64> {
        grid.edges
            .iter()
            .map(|e| wind.velocity(&self.sample_point.of(e), t).dot(&e.normal))
            .collect()
    }

    /// Edge winds for the flux evaluation: `u_e` is the edge's own sample,
    /// the flux-point values are reconstructed.
    pub fn edge_wind(&self, samples: &[f64]) -> EdgeWindField {
        let mut quad = vec![0.0; samples.len() * self.points_per_edge];
        self.reconstruct_normals(samples, &mut quad);
        EdgeWindField {
            points_per_edge: self.points_per_edge,
            mid: samples.to_vec(),
            quad,
        }
    }
}
