use std::collections::HashMap;

use super::{precompute_geometry, GridTopology, Triangulation};
use crate::error::{Error, Result};
use crate::geometry::SpherePoint;

/// Largest supported bisection level (10·4⁸+2 = 655 362 cells).
pub const MAX_LEVEL: u32 = 8;

const FACES: [[usize; 3]; 20] = [
    [0, 11, 5],
    [0, 5, 1],
    [0, 1, 7],
    [0, 7, 10],
    [0, 10, 11],
    [1, 5, 9],
    [5, 11, 4],
    [11, 10, 2],
    [10, 7, 6],
    [7, 1, 8],
    [3, 9, 4],
    [3, 4, 2],
    [3, 2, 6],
    [3, 6, 8],
    [3, 8, 9],
    [4, 9, 5],
    [2, 4, 11],
    [6, 2, 10],
    [8, 6, 7],
    [9, 8, 1],
];

fn base_icosahedron() -> Triangulation {
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let generators = raw.iter().map(|&(x, y, z)| SpherePoint::new(x, y, z)).collect();
    let mut tri = Triangulation {
        generators,
        triangles: FACES.to_vec(),
    };
    orient_outward(&mut tri);
    tri
}

fn orient_outward(tri: &mut Triangulation) {
    for t in tri.triangles.iter_mut() {
        let [a, b, c] = t.map(|k| *tri.generators[k].vec());
        if (b - a).cross(&(c - a)).dot(&(a + b + c)) < 0.0 {
            t.swap(1, 2);
        }
    }
}

fn bisect(tri: &Triangulation) -> Triangulation {
    let mut generators = tri.generators.clone();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, generators: &mut Vec<SpherePoint>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            generators.push(SpherePoint::from_vec(generators[a].vec() + generators[b].vec()));
            generators.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(tri.triangles.len() * 4);
    for &[a, b, c] in &tri.triangles {
        let ab = midpoint(a, b, &mut generators);
        let bc = midpoint(b, c, &mut generators);
        let ca = midpoint(c, a, &mut generators);
        triangles.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
    }
    Triangulation { generators, triangles }
}

/// Icosahedron bisected `level` times: `10·4^level + 2` generators.
pub fn icosahedral_triangulation(level: u32) -> Result<Triangulation> {
    if level > MAX_LEVEL {
        return Err(Error::LevelTooLarge { level, max: MAX_LEVEL });
    }
    let mut tri = base_icosahedron();
    for _ in 0..level {
        tri = bisect(&tri);
    }
    Ok(tri)
}

/// Voronoi grid dual to the bisected icosahedron (no Lloyd optimization).
pub fn build_icosahedral_grid(level: u32) -> Result<GridTopology> {
    precompute_geometry(icosahedral_triangulation(level)?, level, "none")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_counts_follow_bisection() {
        for level in 0..=5 {
            let g = build_icosahedral_grid(level).unwrap();
            assert_eq!(g.cell_count(), 10 * 4usize.pow(level) + 2);
            assert_eq!(g.edge_count(), 30 * 4usize.pow(level));
            assert_eq!(g.vertices.len(), 20 * 4usize.pow(level));
            assert_eq!(g.count_cells_with_sides(5), 12);
            assert_eq!(g.count_cells_with_sides(6), g.cell_count() - 12);
        }
    }

    #[test]
    fn level_zero_is_dodecahedron() {
        let g = build_icosahedral_grid(0).unwrap();
        assert_eq!(g.cell_count(), 12);
        assert!(g.cells.iter().all(|c| c.edges.len() == 5));
    }

    #[test]
    fn rejects_large_levels() {
        assert!(matches!(
            icosahedral_triangulation(MAX_LEVEL + 1),
            Err(Error::LevelTooLarge { .. })
        ));
    }
}
