//! Binary grid files.
//!
//! Layout: the line `SPHFV-GRID 1`, one JSON header line, then the
//! generators as little-endian `f64` triples and the triangles as
//! little-endian `u32` triples. Everything else is recomputed on load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{precompute_geometry, GridTopology, LloydReport, Triangulation};
use crate::error::{Error, Result};
use crate::geometry::{SpherePoint, Vec3};

const MAGIC: &[u8] = b"SPHFV-GRID 1\n";

#[derive(Serialize, Deserialize)]
struct Header {
    level: u32,
    density: String,
    cells: usize,
    triangles: usize,
    lloyd: Option<LloydReport>,
}

pub fn write_grid<W: Write>(grid: &GridTopology, mut w: W) -> Result<()> {
    let tri = &grid.triangulation;
    let header = Header {
        level: grid.level,
        density: grid.density_tag.clone(),
        cells: tri.generators.len(),
        triangles: tri.triangles.len(),
        lloyd: grid.lloyd.clone(),
    };
    w.write_all(MAGIC)?;
    let json = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(json.as_bytes())?;
    w.write_all(b"\n")?;
    for g in &tri.generators {
        for c in [g.x(), g.y(), g.z()] {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    for t in &tri.triangles {
        for &k in t {
            let k = u32::try_from(k).map_err(|_| Error::Format(format!("index {k} exceeds u32")))?;
            w.write_all(&k.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid<R: Read>(r: R) -> Result<GridTopology> {
    let mut bytes = Vec::new();
    BufReader::new(r).read_to_end(&mut bytes)?;
    let body = bytes
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::Format("missing grid file signature".into()))?;
    let nl = body
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("missing header".into()))?;
    let header: Header = serde_json::from_slice(&body[..nl]).map_err(|e| Error::Format(e.to_string()))?;
    let data = &body[nl + 1..];
    let expected = header.cells * 24 + header.triangles * 12;
    if data.len() != expected {
        return Err(Error::Format(format!(
            "expected {expected} bytes of grid data, found {}",
            data.len()
        )));
    }
    let (gen_bytes, tri_bytes) = data.split_at(header.cells * 24);
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().unwrap());
    let generators = gen_bytes
        .chunks_exact(24)
        .map(|c| {
            let v = [f(&c[0..8]), f(&c[8..16]), f(&c[16..24])];
            let p = Vec3::new(v[0], v[1], v[2]);
            if !((p.norm() - 1.0).abs() < 1e-12) {
                return Err(Error::Format("generator is not a unit vector".into()));
            }
            Ok(SpherePoint::from_unit(p))
        })
        .collect::<Result<Vec<_>>>()?;
    let triangles = tri_bytes
        .chunks_exact(12)
        .map(|c| {
            let mut t = [0usize; 3];
            for (k, slot) in t.iter_mut().enumerate() {
                let idx = u32::from_le_bytes(c[4 * k..4 * k + 4].try_into().unwrap()) as usize;
                if idx >= header.cells {
                    return Err(Error::Format(format!("triangle index {idx} out of range")));
                }
                *slot = idx;
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut grid = precompute_geometry(Triangulation { generators, triangles }, header.level, &header.density)?;
    grid.lloyd = header.lloyd;
    Ok(grid)
}

pub fn save_grid(grid: &GridTopology, path: impl AsRef<Path>) -> Result<()> {
    write_grid(grid, BufWriter::new(File::create(path)?))
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<GridTopology> {
    read_grid(File::open(path)?)
}
