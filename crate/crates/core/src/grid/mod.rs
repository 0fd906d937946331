//! Spherical Voronoi grids.
//!
//! A grid is stored as its Delaunay skeleton (generators plus
//! counterclockwise triangles); the Voronoi cells, edges, normals, areas and
//! orientation factors are derived from it by [`precompute_geometry`].
//!
//! Conventions:
//! - `cells[i].edges[m]` joins Voronoi vertices `vertices[m]` and
//!   `vertices[m + 1]` and is shared with `neighbors[m]`;
//! - every edge normal points from `edge.cells[0]` to `edge.cells[1]` and
//!   `edge.cells[0] < edge.cells[1]`, so `n_{e,i} = +1` for the lower index.

mod density;
mod icosahedron;
mod io;
mod lloyd;

use std::collections::HashMap;

pub use density::DensityFunction;
pub use icosahedron::{build_icosahedral_grid, icosahedral_triangulation, MAX_LEVEL};
pub use io::{load_grid, read_grid, save_grid, write_grid};
pub use lloyd::{lloyd_optimize, lloyd_relax, LloydOptions, LloydReport};

use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, spherical_polygon_area, SpherePoint, TangentFrame, Vec3};

/// Generators and their Delaunay triangles (counterclockwise seen from outside).
#[derive(Clone, Debug, PartialEq)]
pub struct Triangulation {
    pub generators: Vec<SpherePoint>,
    pub triangles: Vec<[usize; 3]>,
}

impl Triangulation {
    /// Circumcenter of triangle `t` (outward-facing, on the sphere).
    pub fn circumcenter(&self, t: usize) -> SpherePoint {
        let [a, b, c] = self.triangles[t].map(|k| *self.generators[k].vec());
        SpherePoint::from_vec((b - a).cross(&(c - a)))
    }

    /// For every generator, its incident triangles in counterclockwise order
    /// together with the "next" vertex of each (the neighbor across the
    /// Voronoi edge that follows that triangle's circumcenter).
    pub(crate) fn vertex_fans(&self) -> Result<Vec<Vec<(usize, usize)>>> {
        let n = self.generators.len();
        // successor[v]: map from vertex a to (triangle, b) for triangle (v, a, b)
        let mut successor: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); n];
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let v = tri[k];
                successor[v].push((tri[(k + 1) % 3], t, tri[(k + 2) % 3]));
            }
        }
        let mut fans = Vec::with_capacity(n);
        for (v, succ) in successor.iter().enumerate() {
            if succ.len() < 3 {
                return Err(Error::InvalidTopology(format!(
                    "generator {v} has {} incident triangles",
                    succ.len()
                )));
            }
            let lookup: HashMap<usize, (usize, usize)> =
                succ.iter().map(|&(a, t, b)| (a, (t, b))).collect();
            if lookup.len() != succ.len() {
                return Err(Error::InvalidTopology(format!("generator {v} has a non-manifold fan")));
            }
            let start = succ[0].0;
            let mut fan = Vec::with_capacity(succ.len());
            let mut a = start;
            loop {
                let &(t, b) = lookup.get(&a).ok_or_else(|| {
                    Error::InvalidTopology(format!("fan around generator {v} is not closed"))
                })?;
                fan.push((t, b));
                a = b;
                if a == start || fan.len() > succ.len() {
                    break;
                }
            }
            if fan.len() != succ.len() || a != start {
                return Err(Error::InvalidTopology(format!("fan around generator {v} is not a disk")));
            }
            fans.push(fan);
        }
        Ok(fans)
    }
}

/// A Voronoi cell.
#[derive(Clone, Debug)]
pub struct Cell {
    /// Generator `x_i`.
    pub center: SpherePoint,
    /// Voronoi vertex indices, counterclockwise.
    pub vertices: Vec<usize>,
    /// `EC(i)`, aligned with `vertices` (edge `m` runs from vertex `m` to `m+1`).
    pub edges: Vec<usize>,
    /// `NB(i)`, aligned with `edges`.
    pub neighbors: Vec<usize>,
    /// `n_{e,i}` for each entry of `edges`.
    pub orientation: Vec<f64>,
    /// `|Ω_i|` in steradians.
    pub area: f64,
}

impl Cell {
    pub fn frame(&self) -> TangentFrame {
        TangentFrame::new(self.center)
    }
}

/// A Voronoi edge `Γ_e` with its dual Delaunay edge.
#[derive(Clone, Debug)]
pub struct Edge {
    /// `CE(e)`; the normal points from `cells[0]` to `cells[1]`.
    pub cells: [usize; 2],
    /// Voronoi endpoints.
    pub vertices: [usize; 2],
    /// `x_e^mid`, the midpoint of the Voronoi edge.
    pub midpoint: SpherePoint,
    /// `x_e`, where the Delaunay edge crosses the Voronoi edge.
    pub crossing: SpherePoint,
    /// `n_e`: unit normal of the Voronoi edge's great-circle plane. It is
    /// tangent to the sphere along the whole edge.
    pub normal: Vec3,
    /// `|Γ_e|` in radians.
    pub length: f64,
    /// `Δx_e`, geodesic distance between the two generators.
    pub center_distance: f64,
}

impl Edge {
    /// `n_{e,i}` for a cell adjacent to this edge.
    pub fn orientation(&self, cell: usize) -> f64 {
        if cell == self.cells[0] {
            1.0
        } else {
            -1.0
        }
    }

    /// The adjacent cell that is not `cell`.
    pub fn other(&self, cell: usize) -> usize {
        if cell == self.cells[0] {
            self.cells[1]
        } else {
            self.cells[0]
        }
    }
}

/// Fully precomputed spherical Voronoi grid.
#[derive(Clone, Debug)]
pub struct GridTopology {
    pub level: u32,
    /// Density tag of the Lloyd optimization (`"none"` before optimization).
    pub density_tag: String,
    pub triangulation: Triangulation,
    /// Voronoi vertices (one per Delaunay triangle).
    pub vertices: Vec<SpherePoint>,
    pub cells: Vec<Cell>,
    pub edges: Vec<Edge>,
    pub lloyd: Option<LloydReport>,
}

impl GridTopology {
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    /// `Σ_i |Ω_i| φ_i`.
    pub fn mass(&self, values: &[f64]) -> f64 {
        self.cells.iter().zip(values).map(|(c, v)| c.area * v).sum()
    }

    pub fn cell_vertices(&self, cell: usize) -> Vec<SpherePoint> {
        self.cells[cell].vertices.iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn edge_endpoints(&self, edge: usize) -> (SpherePoint, SpherePoint) {
        let [a, b] = self.edges[edge].vertices;
        (self.vertices[a], self.vertices[b])
    }

    /// Number of cells with exactly `sides` edges.
    pub fn count_cells_with_sides(&self, sides: usize) -> usize {
        self.cells.iter().filter(|c| c.edges.len() == sides).count()
    }

    /// First-level stencil `NB(i) ∪ {i}`, center first.
    pub fn first_level_stencil(&self, cell: usize) -> Vec<usize> {
        let mut s = Vec::with_capacity(self.cells[cell].neighbors.len() + 1);
        s.push(cell);
        s.extend_from_slice(&self.cells[cell].neighbors);
        s
    }

    /// Second-level stencil: union of `NB(k) ∪ {k}` over the first-level
    /// members, deduplicated, in first-seen order.
    pub fn second_level_stencil(&self, cell: usize) -> Vec<usize> {
        let first = self.first_level_stencil(cell);
        let mut out = first.clone();
        for &k in &first {
            for &m in &self.cells[k].neighbors {
                if !out.contains(&m) {
                    out.push(m);
                }
            }
        }
        out
    }

    /// Minimum `Δx_e` over all edges.
    pub fn min_center_distance(&self) -> f64 {
        self.edges.iter().map(|e| e.center_distance).fold(f64::INFINITY, f64::min)
    }
}

/// Builds the full Voronoi grid (cells, edges, areas, normals, orientation
/// factors) from a Delaunay skeleton.
pub fn precompute_geometry(tri: Triangulation, level: u32, density_tag: &str) -> Result<GridTopology> {
    let fans = tri.vertex_fans()?;
    let vertices: Vec<SpherePoint> = (0..tri.triangles.len()).map(|t| tri.circumcenter(t)).collect();

    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut cells = Vec::with_capacity(tri.generators.len());

    for (i, fan) in fans.iter().enumerate() {
        let k = fan.len();
        let mut cell_edges = Vec::with_capacity(k);
        let mut neighbors = Vec::with_capacity(k);
        let mut orientation = Vec::with_capacity(k);
        for m in 0..k {
            let (t0, j) = fan[m];
            let t1 = fan[(m + 1) % k].0;
            let key = (i.min(j), i.max(j));
            let e = match edge_index.get(&key) {
                Some(&e) => e,
                None => {
                    let e = edges.len();
                    edges.push(make_edge(&tri, &vertices, key, [t0, t1]));
                    edge_index.insert(key, e);
                    e
                }
            };
            cell_edges.push(e);
            neighbors.push(j);
            orientation.push(if i == key.0 { 1.0 } else { -1.0 });
        }
        let cell_vertices: Vec<usize> = fan.iter().map(|&(t, _)| t).collect();
        let polygon: Vec<SpherePoint> = cell_vertices.iter().map(|&v| vertices[v]).collect();
        let area = spherical_polygon_area(&polygon).map_err(|_| Error::DegenerateCell { cell: i, area: 0.0 })?;
        if !(area >= 1e-14) {
            return Err(Error::DegenerateCell { cell: i, area });
        }
        cells.push(Cell {
            center: tri.generators[i],
            vertices: cell_vertices,
            edges: cell_edges,
            neighbors,
            orientation,
            area,
        });
    }

    Ok(GridTopology {
        level,
        density_tag: density_tag.to_string(),
        triangulation: tri,
        vertices,
        cells,
        edges,
        lloyd: None,
    })
}

fn make_edge(tri: &Triangulation, vertices: &[SpherePoint], cells: (usize, usize), ends: [usize; 2]) -> Edge {
    let (i, j) = cells;
    let xi = tri.generators[i];
    let xj = tri.generators[j];
    let (a, b) = (vertices[ends[0]], vertices[ends[1]]);
    let midpoint = SpherePoint::from_vec(a.vec() + b.vec());
    let crossing = SpherePoint::from_vec(xi.vec() + xj.vec());
    let d = xj.vec() - xi.vec();
    let plane = a.vec().cross(b.vec());
    let normal = if plane.norm() > 1e-15 {
        let n = plane / plane.norm();
        if n.dot(&d) < 0.0 {
            -n
        } else {
            n
        }
    } else {
        let m = midpoint.vec();
        let t = d - m * d.dot(m);
        t / t.norm()
    };
    Edge {
        cells: [i, j],
        vertices: ends,
        midpoint,
        crossing,
        normal,
        length: geodesic_distance(&a, &b),
        center_distance: geodesic_distance(&xi, &xj),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn orientation_is_antisymmetric() {
        let g = build_icosahedral_grid(2).unwrap();
        for (e, edge) in g.edges.iter().enumerate() {
            let [i, j] = edge.cells;
            assert_ne!(i, j);
            let pos_i = g.cells[i].edges.iter().position(|&x| x == e).unwrap();
            let pos_j = g.cells[j].edges.iter().position(|&x| x == e).unwrap();
            assert_eq!(g.cells[i].orientation[pos_i], -g.cells[j].orientation[pos_j]);
            assert_eq!(g.cells[i].orientation[pos_i], edge.orientation(i));
        }
    }

    #[test]
    fn normals_are_tangent_and_orthogonal_to_edges() {
        let g = build_icosahedral_grid(3).unwrap();
        for (e, edge) in g.edges.iter().enumerate() {
            let (a, b) = g.edge_endpoints(e);
            assert_abs_diff_eq!(edge.normal.dot(edge.midpoint.vec()), 0.0, epsilon = 1e-12);
            let dir = b.vec() - a.vec();
            assert_abs_diff_eq!(edge.normal.dot(&dir) / dir.norm(), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(edge.normal.norm(), 1.0, epsilon = 1e-14);
            let d = g.cells[edge.cells[1]].center.vec() - g.cells[edge.cells[0]].center.vec();
            assert!(edge.normal.dot(&d) > 0.0);
        }
    }

    #[test]
    fn areas_partition_sphere() {
        for level in 0..=4 {
            let g = build_icosahedral_grid(level).unwrap();
            assert_abs_diff_eq!(g.total_area(), 4.0 * PI, epsilon = 4.0 * PI * 1e-10);
        }
    }

    #[test]
    fn areas_match_polygon_area() {
        let g = build_icosahedral_grid(2).unwrap();
        for (i, c) in g.cells.iter().enumerate() {
            assert_eq!(c.area, spherical_polygon_area(&g.cell_vertices(i)).unwrap());
        }
    }

    #[test]
    fn discrete_divergence_of_constant_field_vanishes() {
        // Σ n_{e,i} |Γ_e| n_e summed around a closed spherical polygon has no
        // tangential component at the center beyond curvature terms; using a
        // constant 3-vector projected to each edge's tangent plane the
        // integral ∮ v·n dl vanishes exactly for the great-circle boundary.
        let g = build_icosahedral_grid(3).unwrap();
        let v = Vec3::new(0.3, -1.1, 0.7);
        for (i, cell) in g.cells.iter().enumerate() {
            let mut flux = 0.0;
            let mut perimeter = 0.0;
            for (&e, &o) in cell.edges.iter().zip(&cell.orientation) {
                let edge = &g.edges[e];
                let (a, b) = g.edge_endpoints(e);
                // ∫ v·n dl along a great-circle arc: n is constant, so exact.
                flux += o * v.dot(&edge.normal) * geodesic_distance(&a, &b);
                perimeter += edge.length;
            }
            // Divergence of the tangential projection of a constant vector is
            // -2 (v·p); compare against the closed-form cell integral.
            let moment: Vec3 = {
                let verts = g.cell_vertices(i);
                let n = verts.len();
                (0..n)
                    .map(|k| crate::geometry::triangle_first_moment(&cell.center, &verts[k], &verts[(k + 1) % n]))
                    .fold(Vec3::zeros(), |a, b| a + b)
            };
            let exact = -2.0 * v.dot(&moment);
            assert!((flux - exact).abs() < 1e-10 * perimeter, "cell {i}: {flux} vs {exact}");
        }
    }

    #[test]
    fn stencils() {
        let g = build_icosahedral_grid(3).unwrap();
        let hex = (0..g.cell_count()).find(|&i| g.cells[i].edges.len() == 6).unwrap();
        let s1 = g.first_level_stencil(hex);
        assert_eq!(s1.len(), 7);
        assert_eq!(s1[0], hex);
        let s2 = g.second_level_stencil(hex);
        assert_eq!(&s2[..7], &s1[..]);
        let mut dedup = s2.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), s2.len());
        assert_eq!(s2.len(), 19);
    }
}
