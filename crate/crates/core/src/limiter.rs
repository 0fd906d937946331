//! Zalesak flux-corrected transport on the last Runge–Kutta stage.
//!
//! The low-order solution uses first-order upwind fluxes at `tⁿ`; the
//! correction `F^C = F^H(φ^{n+1/2}) − F^L(φⁿ)` is scaled edge by edge by
//! `R_e ∈ [0, 1]` so that no cell leaves its local bounds. Every update
//! includes the `1/|Ω_i|` of the finite-volume tendency.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridTopology;

/// Which neighbors bound a cell's new value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FctBounds {
    /// `NB(i) ∪ {i}`.
    #[default]
    AllNeighbors,
    /// The cell and the neighbors it receives flow from.
    UpwindOnly,
}

impl fmt::Display for FctBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FctBounds::AllNeighbors => "all",
            FctBounds::UpwindOnly => "upwind",
        })
    }
}

impl FromStr for FctBounds {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" | "all_neighbors" => Ok(FctBounds::AllNeighbors),
            "upwind" | "upwind_only" => Ok(FctBounds::UpwindOnly),
            _ => Err(Error::Config(format!("unknown FCT bounds {s:?} (expected all or upwind)"))),
        }
    }
}

/// First-order upwind flux `φ_upw u_e |Γ_e|`, where `u_e` is along `n_e`
/// (from cell `i` to cell `j`).
pub fn low_order_flux(phi_i: f64, phi_j: f64, u_e: f64, length: f64) -> f64 {
    let upwind = if u_e > 0.0 { phi_i } else { phi_j };
    upwind * u_e * length
}

/// Intermediate fields of one limited stage.
#[derive(Clone, Debug, Default)]
pub struct FctWorkspace {
    pub low_flux: Vec<f64>,
    /// `φᴸ`.
    pub low: Vec<f64>,
    /// `F^C`.
    pub correction: Vec<f64>,
    /// Low-order value with all outgoing corrections applied.
    pub plus: Vec<f64>,
    /// Low-order value with all incoming corrections applied.
    pub minus: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// `R_e`.
    pub ratio: Vec<f64>,
}

fn safe_ratio(num: f64, den: f64) -> f64 {
    if den.abs() < 1e-300 {
        1.0
    } else {
        (num / den).max(0.0)
    }
}

/// `φ_i − Δt/|Ω_i| Σ n_{e,i} F_e`.
fn update(grid: &GridTopology, phi: &[f64], flux: &[f64], dt: f64, out: &mut Vec<f64>) {
    out.resize(grid.cell_count(), 0.0);
    out.par_iter_mut()
        .enumerate()
        .with_min_len(512)
        .for_each(|(i, o)| {
            let c = &grid.cells[i];
            let s: f64 = c.edges.iter().zip(&c.orientation).map(|(&e, n)| n * flux[e]).sum();
            *o = phi[i] - dt / c.area * s;
        });
}

/// The limited last stage: returns `φⁿ⁺¹` and leaves the intermediate
/// fields in `ws`.
///
/// `wind_n` holds the edge normal velocities at `tⁿ` (they pick the upwind
/// cell of the low-order flux), `high_flux` the unlimited fluxes of `φ^{n+1/2}`.
pub fn fct_final_stage(
    grid: &GridTopology,
    phi_n: &[f64],
    high_flux: &[f64],
    wind_n: &[f64],
    dt: f64,
    bounds: FctBounds,
    ws: &mut FctWorkspace,
) -> Result<Vec<f64>> {
    let ne = grid.edge_count();
    let nc = grid.cell_count();
    ws.low_flux = (0..ne)
        .into_par_iter()
        .with_min_len(512)
        .map(|e| {
            let edge = &grid.edges[e];
            let [i, j] = edge.cells;
            low_order_flux(phi_n[i], phi_n[j], wind_n[e], edge.length)
        })
        .collect();
    update(grid, phi_n, &ws.low_flux, dt, &mut ws.low);
    ws.correction = high_flux.iter().zip(&ws.low_flux).map(|(h, l)| h - l).collect();

    let low = &ws.low;
    let correction = &ws.correction;
    let per_cell: Vec<[f64; 4]> = (0..nc)
        .into_par_iter()
        .with_min_len(512)
        .map(|i| {
            let c = &grid.cells[i];
            let (mut out, mut inc) = (0.0, 0.0);
            let (mut lo, mut hi) = (phi_n[i].min(low[i]), phi_n[i].max(low[i]));
            for ((&e, &n), &k) in c.edges.iter().zip(&c.orientation).zip(&c.neighbors) {
                let f = n * correction[e];
                if f > 0.0 {
                    out += f;
                } else {
                    inc += f;
                }
                if bounds == FctBounds::AllNeighbors || n * wind_n[e] < 0.0 {
                    lo = lo.min(phi_n[k]);
                    hi = hi.max(phi_n[k]);
                }
            }
            let s = dt / c.area;
            [low[i] - s * out, low[i] - s * inc, lo, hi]
        })
        .collect();
    ws.plus = per_cell.iter().map(|v| v[0]).collect();
    ws.minus = per_cell.iter().map(|v| v[1]).collect();
    ws.min = per_cell.iter().map(|v| v[2]).collect();
    ws.max = per_cell.iter().map(|v| v[3]).collect();

    let (plus, minus, min, max) = (&ws.plus, &ws.minus, &ws.min, &ws.max);
    ws.ratio = (0..ne)
        .into_par_iter()
        .with_min_len(512)
        .map(|e| {
            let [i, j] = grid.edges[e].cells;
            // `from` loses the correction, `to` receives it
            let (from, to) = if correction[e] > 0.0 { (i, j) } else { (j, i) };
            let r_out = safe_ratio(low[from] - min[from], low[from] - plus[from]);
            let r_in = safe_ratio(low[to] - max[to], low[to] - minus[to]);
            1f64.min(r_out).min(r_in)
        })
        .collect();

    let limited: Vec<f64> = ws.ratio.iter().zip(correction).map(|(r, c)| r * c).collect();
    let mut next = Vec::new();
    update(grid, low, &limited, dt, &mut next);
    if next.iter().chain(&ws.ratio).all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(Error::NonFiniteField("flux limiter"))
    }
}

/// `φⁿ − Δt/|Ω_i| Σ n_{e,i} [(1 − R_e) F^L_e + R_e F^H_e]`.
pub fn blended_update(
    grid: &GridTopology,
    phi_n: &[f64],
    low_flux: &[f64],
    high_flux: &[f64],
    ratio: &[f64],
    dt: f64,
) -> Vec<f64> {
    let flux: Vec<f64> = low_flux
        .iter()
        .zip(high_flux)
        .zip(ratio)
        .map(|((l, h), r)| (1.0 - r) * l + r * h)
        .collect();
    let mut out = Vec::new();
    update(grid, phi_n, &flux, dt, &mut out);
    out
}
