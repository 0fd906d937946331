//! Three-stage Runge–Kutta integration
//!
//! ```text
//! X*    = Xⁿ + Δt/3 · F(Xⁿ,  tⁿ)
//! X**   = Xⁿ + Δt/2 · F(X*,  tⁿ + Δt/3)
//! Xⁿ⁺¹ = Xⁿ + Δt   · F(X**, tⁿ + Δt/2)
//! ```

use crate::error::{Error, Result};
use crate::grid::GridTopology;
use crate::testcases::WindSpec;

type Complex64 = nalgebra::Complex<f64>;

/// Step size and step count that land exactly on the final time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub steps: usize,
    pub courant: f64,
}

/// The first two stages; returns `X**`.
fn leading_stages<F>(x: &[f64], t: f64, dt: f64, rhs: &mut F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], f64, &mut [f64]) -> Result<()>,
{
    let mut k = vec![0.0; x.len()];
    rhs(x, t, &mut k)?;
    let stage: Vec<f64> = x.iter().zip(&k).map(|(a, b)| a + dt / 3.0 * b).collect();
    rhs(&stage, t + dt / 3.0, &mut k)?;
    Ok(x.iter().zip(&k).map(|(a, b)| a + dt / 2.0 * b).collect())
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteField("time step"))
    }
}

/// One step of the scheme for `dX/dt = rhs(X, t)`.
pub fn rk3_step<F>(x: &[f64], t: f64, dt: f64, mut rhs: F) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], f64, &mut [f64]) -> Result<()>,
{
    let half = leading_stages(x, t, dt, &mut rhs)?;
    let mut k = vec![0.0; x.len()];
    rhs(&half, t + dt / 2.0, &mut k)?;
    let out: Vec<f64> = x.iter().zip(&k).map(|(a, b)| a + dt * b).collect();
    check_finite(&out)?;
    Ok(out)
}

/// One step whose last stage is supplied by `last(Xⁿ, X**, tⁿ + Δt/2)`,
/// e.g. a flux-limited update.
pub fn rk3_step_with_final<F, L>(x: &[f64], t: f64, dt: f64, mut rhs: F, last: L) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], f64, &mut [f64]) -> Result<()>,
    L: FnOnce(&[f64], &[f64], f64) -> Result<Vec<f64>>,
{
    let half = leading_stages(x, t, dt, &mut rhs)?;
    let out = last(x, &half, t + dt / 2.0)?;
    check_finite(&out)?;
    Ok(out)
}

/// `Δt = courant · min Δx_e / max |u|`, reduced so that `period / Δt` is an integer.
pub fn choose_dt(grid: &GridTopology, wind: &WindSpec, courant: f64) -> Result<IntegratorConfig> {
    let points: Vec<_> = grid.edges.iter().map(|e| e.midpoint).collect();
    choose_dt_for(grid.min_center_distance(), wind.max_speed(&points), wind.period(), courant)
}

pub fn choose_dt_for(min_dx: f64, max_speed: f64, period: f64, courant: f64) -> Result<IntegratorConfig> {
    if !(courant > 0.0) || !(max_speed > 0.0) || !(period > 0.0) {
        return Err(Error::ZeroWind);
    }
    let target = courant * min_dx / max_speed;
    let steps = (period / target).ceil().max(1.0) as usize;
    Ok(IntegratorConfig {
        dt: period / steps as f64,
        steps,
        courant,
    })
}

/// Amplification factor `1 + z + z²/2 + z³/6` of the scheme on `dX/dt = λX`, `z = λΔt`.
pub fn amplification(z: Complex64) -> Complex64 {
    1.0 + z + z * z / 2.0 + z * z * z / 6.0
}
