//! Error norms, relative errors, convergence rates and the CSV report.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridTopology;

/// `(max |φ_i|, sqrt(Σ φ_i² |Ω_i|))`. The L₂ norm is not divided by the total area.
pub fn norms(field: &[f64], grid: &GridTopology) -> (f64, f64) {
    let inf = field.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let l2 = field.iter().zip(&grid.cells).map(|(v, c)| v * v * c.area).sum::<f64>().sqrt();
    (inf, l2)
}

/// `(‖φ − φ_ref‖_∞ / ‖φ_ref‖_∞, ‖φ − φ_ref‖₂ / ‖φ_ref‖₂)`.
pub fn relative_errors(field: &[f64], reference: &[f64], grid: &GridTopology) -> Result<(f64, f64)> {
    let (ri, r2) = norms(reference, grid);
    if ri == 0.0 || r2 == 0.0 {
        return Err(Error::ZeroReference);
    }
    let diff: Vec<f64> = field.iter().zip(reference).map(|(a, b)| a - b).collect();
    let (di, d2) = norms(&diff, grid);
    Ok((di / ri, d2 / r2))
}

/// Rates between consecutive entries: `log₂(E_k / E_{k+1}) / (l_{k+1} − l_k)`.
pub fn convergence_rates(errors: &[f64], levels: &[u32]) -> Result<Vec<f64>> {
    if errors.len() < 2 || errors.len() != levels.len() {
        return Err(Error::TooFewLevels);
    }
    if let Some(&bad) = errors.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::NonPositiveError(bad));
    }
    Ok(errors
        .windows(2)
        .zip(levels.windows(2))
        .map(|(e, l)| (e[0] / e[1]).log2() / (l[1] as f64 - l[0] as f64))
        .collect())
}

/// `|M(t) − M(0)| / |M(0)|` for `M = Σ |Ω_i| φ_i`.
pub fn mass_drift(initial: f64, current: f64) -> f64 {
    if initial == 0.0 {
        (current - initial).abs()
    } else {
        ((current - initial) / initial).abs()
    }
}

/// One row of the error table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: u32,
    pub ncells: usize,
    pub dt: f64,
    pub steps: usize,
    pub scheme: String,
    pub limiter: String,
    #[serde(rename = "E_inf")]
    pub e_inf: f64,
    #[serde(rename = "E_2")]
    pub e_2: f64,
    pub rate_inf: Option<f64>,
    pub rate_2: Option<f64>,
    pub mass_drift: f64,
    /// Smallest value over all time levels.
    pub min: f64,
    /// Largest value over all time levels.
    pub max: f64,
    pub runtime_s: Option<f64>,
}

/// Per-level results of one experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<LevelResult>,
}

impl ErrorReport {
    /// Fills `rate_inf` and `rate_2` from the previous row (first row: none).
    pub fn fill_rates(&mut self) {
        for k in 1..self.rows.len() {
            let (prev, cur) = (&self.rows[k - 1], &self.rows[k]);
            let levels = [prev.level, cur.level];
            let rate = |a: f64, b: f64| convergence_rates(&[a, b], &levels).ok().map(|r| r[0]);
            let (ri, r2) = (rate(prev.e_inf, cur.e_inf), rate(prev.e_2, cur.e_2));
            self.rows[k].rate_inf = ri;
            self.rows[k].rate_2 = r2;
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record(CSV_HEADER)?;
        }
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header != CSV_HEADER {
            return Err(Error::Format(format!("unexpected CSV header {header:?}")));
        }
        let rows = r.deserialize().collect::<std::result::Result<_, _>>()?;
        Ok(ErrorReport { rows })
    }

    pub fn e_inf(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.e_inf).collect()
    }

    pub fn e_2(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.e_2).collect()
    }

    /// Rate between the last two rows (L∞, L₂).
    pub fn finest_rates(&self) -> Option<(f64, f64)> {
        let r = self.rows.last()?;
        Some((r.rate_inf?, r.rate_2?))
    }
}

pub const CSV_HEADER: [&str; 14] = [
    "level",
    "ncells",
    "dt",
    "steps",
    "scheme",
    "limiter",
    "E_inf",
    "E_2",
    "rate_inf",
    "rate_2",
    "mass_drift",
    "min",
    "max",
    "runtime_s",
];
