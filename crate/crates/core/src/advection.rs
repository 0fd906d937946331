//! Edge fluxes for the SG and OG schemes and the finite-volume tendency
//! `dφ̄_i/dt = −(1/|Ω_i|) Σ_{e∈EC(i)} n_{e,i} F_e`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{gauss_arc_points, SpherePoint};
use crate::grid::GridTopology;
use crate::reconstruction::{hessian_form, monomial_count, monomial_values, Flavor, ReconstructionOperator};
use crate::testcases::WindSpec;

/// Per-cell mean tracer values `φ̄_i`.
pub type ScalarField = Vec<f64>;

/// Per-edge numerical fluxes `F_e`, signed along `n_e`.
pub type FluxField = Vec<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    #[serde(rename = "SG2")]
    Sg2,
    #[serde(rename = "SG3")]
    Sg3,
    #[serde(rename = "SG4")]
    Sg4,
    #[serde(rename = "OG2")]
    Og2,
    #[serde(rename = "OG3")]
    Og3,
    #[serde(rename = "OG4")]
    Og4,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        SchemeKind::Sg2,
        SchemeKind::Sg3,
        SchemeKind::Sg4,
        SchemeKind::Og2,
        SchemeKind::Og3,
        SchemeKind::Og4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Sg2 => "SG2",
            SchemeKind::Sg3 => "SG3",
            SchemeKind::Sg4 => "SG4",
            SchemeKind::Og2 => "OG2",
            SchemeKind::Og3 => "OG3",
            SchemeKind::Og4 => "OG4",
        }
    }

    pub fn is_og(self) -> bool {
        matches!(self, SchemeKind::Og2 | SchemeKind::Og3 | SchemeKind::Og4)
    }

    /// Reconstruction needed by the scheme (`None` for SG2).
    pub fn flavor(self) -> Option<Flavor> {
        match self {
            SchemeKind::Sg2 => None,
            SchemeKind::Sg3 | SchemeKind::Sg4 => Some(Flavor::Sg),
            SchemeKind::Og2 => Some(Flavor::Og2),
            SchemeKind::Og3 => Some(Flavor::Og3),
            SchemeKind::Og4 => Some(Flavor::Og4),
        }
    }

    /// Flux points per edge: the midpoint for SG and OG2, two Gauss points for OG3/OG4.
    pub fn flux_points(self) -> usize {
        match self {
            SchemeKind::Og3 | SchemeKind::Og4 => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?} (expected SG2, SG3, SG4, OG2, OG3 or OG4)")))
    }
}

/// A scheme with its upwind weight `β` (used by SG3 only).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    pub kind: SchemeKind,
    pub beta: f64,
}

impl Scheme {
    pub fn new(kind: SchemeKind) -> Self {
        Scheme { kind, beta: 1.0 }
    }

    pub fn with_beta(kind: SchemeKind, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Config(format!("beta must lie in [0, 1], got {beta}")));
        }
        Ok(Scheme { kind, beta })
    }
}

/// `(φ̄_i + φ̄_j)/2`.
pub fn sg2_edge_value(phi_i: f64, phi_j: f64) -> f64 {
    0.5 * (phi_i + phi_j)
}

pub fn sg4_edge_value(phi_i: f64, phi_j: f64, d2_i: f64, d2_j: f64, dx: f64) -> f64 {
    0.5 * (phi_i + phi_j) - dx * dx / 12.0 * (d2_i + d2_j)
}

/// SG4 plus `sign(n_{e,i} u_e) β Δx²/12 (D²_j − D²_i)`, with `sign(0) = +1`.
#[allow(clippy::too_many_arguments)]
pub fn sg3_edge_value(phi_i: f64, phi_j: f64, d2_i: f64, d2_j: f64, dx: f64, u_e: f64, n_ei: f64, beta: f64) -> f64 {
    let s = if n_ei * u_e >= 0.0 { 1.0 } else { -1.0 };
    sg4_edge_value(phi_i, phi_j, d2_i, d2_j, dx) + s * beta * dx * dx / 12.0 * (d2_j - d2_i)
}

/// `F_e = φ_e u_e |Γ_e|`.
pub fn sg_flux(value: f64, u_e: f64, length: f64) -> f64 {
    value * u_e * length
}

/// `F_e = Σ_l w_l φ_{e,l} u_{e,l}`.
pub fn og_flux(values: &[f64], weights: &[f64], winds: &[f64]) -> f64 {
    values.iter().zip(weights).zip(winds).map(|((p, w), u)| w * p * u).sum()
}

/// Upwind side (0 or 1 into `edge.cells`) for a normal velocity along
/// `n_e`: side 0 when `u_e ≥ 0`.
#[inline]
pub fn upwind_side(u_e: f64) -> usize {
    if u_e >= 0.0 {
        0
    } else {
        1
    }
}

/// `−(1/|Ω_i|) Σ n_{e,i} F_e` for every cell.
pub fn tendency(grid: &GridTopology, flux: &[f64], out: &mut [f64]) {
    out.par_iter_mut()
        .zip(grid.cells.par_iter())
        .with_min_len(512)
        .for_each(|(o, cell)| {
            let s: f64 = cell.edges.iter().zip(&cell.orientation).map(|(&e, n)| n * flux[e]).sum();
            *o = -s / cell.area;
        });
}

/// Flux points on every Voronoi edge.
#[derive(Clone, Debug)]
pub struct EdgeQuadrature {
    pub points_per_edge: usize,
    /// Edge-major points on the Voronoi edges.
    pub points: Vec<SpherePoint>,
    /// Edge-major arc-length weights; they sum to `|Γ_e|`.
    pub weights: Vec<f64>,
    /// `+1` when `n_e = p × t̂` for the tangent `t̂` running from the edge's
    /// first to its second vertex, else `−1`.
    pub stream_sign: Vec<f64>,
}

impl EdgeQuadrature {
    pub fn new(grid: &GridTopology, m: usize) -> Result<Self> {
        let ne = grid.edge_count();
        let mut points = Vec::with_capacity(ne * m);
        let mut weights = Vec::with_capacity(ne * m);
        let mut stream_sign = Vec::with_capacity(ne);
        for (e, edge) in grid.edges.iter().enumerate() {
            let (a, b) = grid.edge_endpoints(e);
            match gauss_arc_points(&a, &b, m) {
                Ok(q) => {
                    points.extend(q.points);
                    weights.extend(q.weights);
                }
                Err(Error::DegenerateArc(_)) => {
                    points.extend(std::iter::repeat_n(edge.midpoint, m));
                    weights.extend(std::iter::repeat_n(0.0, m));
                }
                Err(err) => return Err(err),
            }
            let t = b.vec() - a.vec();
            let s = edge.midpoint.vec().cross(&t).dot(&edge.normal);
            stream_sign.push(if s >= 0.0 { 1.0 } else { -1.0 });
        }
        Ok(EdgeQuadrature {
            points_per_edge: m,
            points,
            weights,
            stream_sign,
        })
    }

    pub fn edge_points(&self, e: usize) -> &[SpherePoint] {
        let m = self.points_per_edge;
        &self.points[e * m..(e + 1) * m]
    }

    pub fn edge_weights(&self, e: usize) -> &[f64] {
        let m = self.points_per_edge;
        &self.weights[e * m..(e + 1) * m]
    }
}

/// Normal velocities on every edge.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeWindField {
    pub points_per_edge: usize,
    /// `u_e`, the edge-mean normal velocity: SG fluxes, upwind selection
    /// and the low-order flux use it.
    pub mid: Vec<f64>,
    /// `u_{e,l}` at the flux points, edge-major.
    pub quad: Vec<f64>,
}

impl EdgeWindField {
    pub fn zeros(edges: usize, points_per_edge: usize) -> Self {
        EdgeWindField {
            points_per_edge,
            mid: vec![0.0; edges],
            quad: vec![0.0; edges * points_per_edge],
        }
    }

    /// Samples an analytic wind at time `t`.
    ///
    /// `u_e` is the exact edge flux `±(ψ(b) − ψ(a))` divided by `|Γ_e|`, so the
    /// discrete divergence vanishes to round-off. Point samples at the flux
    /// points are shifted by one constant per edge so that their quadrature
    /// sum reproduces the same exact flux.
    pub fn analytic(grid: &GridTopology, quad: &EdgeQuadrature, wind: &WindSpec, t: f64) -> Self {
        let mut out = EdgeWindField::zeros(grid.edge_count(), quad.points_per_edge);
        out.fill_analytic(grid, quad, wind, t);
        out
    }

    pub fn fill_analytic(&mut self, grid: &GridTopology, quad: &EdgeQuadrature, wind: &WindSpec, t: f64) {
        let m = quad.points_per_edge;
        self.points_per_edge = m;
        self.mid.resize(grid.edge_count(), 0.0);
        self.quad.resize(grid.edge_count() * m, 0.0);
        let psi: Vec<f64> = grid.vertices.par_iter().map(|v| wind.stream_function(v, t)).collect();
        self.mid
            .par_iter_mut()
            .zip(self.quad.par_chunks_mut(m))
            .enumerate()
            .with_min_len(256)
            .for_each(|(e, (mid, q))| {
                let edge = &grid.edges[e];
                let [va, vb] = edge.vertices;
                let integral = quad.stream_sign[e] * (psi[vb] - psi[va]);
                let w = quad.edge_weights(e);
                for (ql, p) in q.iter_mut().zip(quad.edge_points(e)) {
                    *ql = wind.velocity(p, t).dot(&edge.normal);
                }
                if edge.length > 0.0 {
                    *mid = integral / edge.length;
                    let shift = (integral - q.iter().zip(w).map(|(v, wl)| v * wl).sum::<f64>()) / edge.length;
                    q.iter_mut().for_each(|v| *v += shift);
                } else {
                    *mid = q.iter().sum::<f64>() / m as f64;
                }
            });
    }

    /// Plain point samples `u(x)·n_e` at the flux points (no flux matching);
    /// `mid` is the sample at the Voronoi edge midpoint.
    pub fn pointwise(grid: &GridTopology, quad: &EdgeQuadrature, wind: &WindSpec, t: f64) -> Self {
        let m = quad.points_per_edge;
        let mid = grid
            .edges
            .iter()
            .map(|e| wind.velocity(&e.midpoint, t).dot(&e.normal))
            .collect();
        let quad_vals = (0..grid.edge_count())
            .flat_map(|e| {
                let n = grid.edges[e].normal;
                quad.edge_points(e).iter().map(move |p| wind.velocity(p, t).dot(&n))
            })
            .collect();
        EdgeWindField {
            points_per_edge: m,
            mid,
            quad: quad_vals,
        }
    }

    pub fn reversed(&self) -> Self {
        EdgeWindField {
            points_per_edge: self.points_per_edge,
            mid: self.mid.iter().map(|v| -v).collect(),
            quad: self.quad.iter().map(|v| -v).collect(),
        }
    }
}

/// Scratch buffers reused across tendency evaluations.
#[derive(Clone, Debug, Default)]
pub struct AdvectionWorkspace {
    coeffs: Vec<f64>,
    pub flux: FluxField,
}

/// Everything one scheme needs on one grid, precomputed.
#[derive(Clone, Debug)]
pub struct AdvectionOperator {
    pub scheme: Scheme,
    pub quadrature: EdgeQuadrature,
    pub reconstruction: Option<ReconstructionOperator>,
    /// SG: `n̂_e` in the frames of `cells[0]` and `cells[1]`.
    directions: Vec<[[f64; 2]; 2]>,
    /// OG: monomials at each flux point in both side frames, `[edge][side][point][M]`.
    monomials: Vec<f64>,
}

impl AdvectionOperator {
    pub fn new(grid: &GridTopology, scheme: Scheme) -> Result<Self> {
        let kind = scheme.kind;
        let quadrature = EdgeQuadrature::new(grid, kind.flux_points())?;
        let reconstruction = kind
            .flavor()
            .map(|f| ReconstructionOperator::build(grid, f))
            .transpose()?;
        let mut directions = Vec::new();
        let mut monomials = Vec::new();
        match kind {
            SchemeKind::Sg3 | SchemeKind::Sg4 => {
                directions = grid
                    .edges
                    .iter()
                    .map(|e| {
                        e.cells.map(|c| {
                            let f = grid.cells[c].frame();
                            let (x, y) = (e.normal.dot(&f.e1), e.normal.dot(&f.e2));
                            let r = x.hypot(y);
                            [x / r, y / r]
                        })
                    })
                    .collect();
            }
            SchemeKind::Og2 | SchemeKind::Og3 | SchemeKind::Og4 => {
                let degree = kind.flavor().map(Flavor::degree).unwrap_or(1);
                let big_m = monomial_count(degree);
                let m = quadrature.points_per_edge;
                let frames: Vec<_> = grid.cells.iter().map(|c| c.frame()).collect();
                monomials = vec![0.0; grid.edge_count() * 2 * m * big_m];
                for (e, edge) in grid.edges.iter().enumerate() {
                    for (side, &c) in edge.cells.iter().enumerate() {
                        for (l, p) in quadrature.edge_points(e).iter().enumerate() {
                            let [x, y] = frames[c].project(p)?;
                            let at = ((e * 2 + side) * m + l) * big_m;
                            monomial_values(degree, x, y, &mut monomials[at..at + big_m]);
                        }
                    }
                }
            }
            SchemeKind::Sg2 => {}
        }
        Ok(AdvectionOperator {
            scheme,
            quadrature,
            reconstruction,
            directions,
            monomials,
        })
    }

    pub fn points_per_edge(&self) -> usize {
        self.quadrature.points_per_edge
    }

    /// `F_e` for every edge.
    pub fn edge_fluxes(&self, grid: &GridTopology, phi: &[f64], wind: &EdgeWindField, ws: &mut AdvectionWorkspace) {
        if let Some(r) = &self.reconstruction {
            r.apply(phi, &mut ws.coeffs);
        }
        ws.flux.resize(grid.edge_count(), 0.0);
        let coeffs = &ws.coeffs;
        let kind = self.scheme.kind;
        let beta = self.scheme.beta;
        let m = self.quadrature.points_per_edge;
        ws.flux
            .par_iter_mut()
            .enumerate()
            .with_min_len(512)
            .for_each(|(e, f)| {
                let edge = &grid.edges[e];
                let [i, j] = edge.cells;
                let u = wind.mid[e];
                *f = match kind {
                    SchemeKind::Sg2 => sg_flux(sg2_edge_value(phi[i], phi[j]), u, edge.length),
                    SchemeKind::Sg3 | SchemeKind::Sg4 => {
                        let d2 = |side: usize, c: usize| {
                            let k = &coeffs[c * 6..c * 6 + 6];
                            hessian_form(k[3], k[4], k[5], self.directions[e][side])
                        };
                        let (di, dj) = (d2(0, i), d2(1, j));
                        let dx = edge.center_distance;
                        let value = if kind == SchemeKind::Sg3 {
                            sg3_edge_value(phi[i], phi[j], di, dj, dx, u, 1.0, beta)
                        } else {
                            sg4_edge_value(phi[i], phi[j], di, dj, dx)
                        };
                        sg_flux(value, u, edge.length)
                    }
                    _ => {
                        let side = upwind_side(u);
                        let c = edge.cells[side];
                        let big_m = coeffs.len() / grid.cell_count();
                        let k = &coeffs[c * big_m..(c + 1) * big_m];
                        let w = self.quadrature.edge_weights(e);
                        let winds = &wind.quad[e * m..(e + 1) * m];
                        let mut total = 0.0;
                        for l in 0..m {
                            let at = ((e * 2 + side) * m + l) * big_m;
                            let mono = &self.monomials[at..at + big_m];
                            let value: f64 = mono.iter().zip(k).map(|(a, b)| a * b).sum();
                            total += w[l] * value * winds[l];
                        }
                        total
                    }
                };
            });
    }

    /// `dφ̄/dt` into `out`; the fluxes stay in `ws.flux`.
    pub fn tendency_into(
        &self,
        grid: &GridTopology,
        phi: &[f64],
        wind: &EdgeWindField,
        ws: &mut AdvectionWorkspace,
        out: &mut [f64],
    ) {
        self.edge_fluxes(grid, phi, wind, ws);
        tendency(grid, &ws.flux, out);
    }
}
