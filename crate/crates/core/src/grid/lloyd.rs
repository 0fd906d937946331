//! Lloyd iterations towards a spherical centroidal Voronoi tessellation.
//!
//! The Delaunay connectivity of the bisected icosahedron is kept and the
//! circumcenters are recomputed every sweep. Strong density gradients can
//! make a triangle pair non-Delaunay, so each sweep finishes with Lawson edge
//! flips to restore the empty-circumcircle property.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{precompute_geometry, DensityFunction, GridTopology, Triangulation};
use crate::error::Result;
use crate::geometry::{geodesic_distance, triangle_first_moment, SpherePoint, Vec3};
use crate::quadrature::{spherical_triangle_nodes, TRIANGLE_DEGREE_2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LloydOptions {
    /// Stop once the largest generator displacement (radians) is below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl LloydOptions {
    /// tol = 1e-10; 5000 sweeps up to level 5, 500 above.
    pub fn for_level(level: u32) -> Self {
        LloydOptions {
            tol: 1e-10,
            max_iter: if level <= 5 { 5000 } else { 500 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LloydReport {
    pub iterations: usize,
    /// Largest generator displacement of the last sweep, radians.
    pub final_movement: f64,
    pub converged: bool,
    pub flips: usize,
}

/// Density-weighted centroid of every Voronoi cell, projected to the sphere.
pub fn cell_centroids(tri: &Triangulation, fans: &[Vec<(usize, usize)>], density: &DensityFunction) -> Vec<SpherePoint> {
    let cc: Vec<SpherePoint> = (0..tri.triangles.len()).into_par_iter().map(|t| tri.circumcenter(t)).collect();
    fans.par_iter()
        .enumerate()
        .map(|(i, fan)| {
            let g = tri.generators[i];
            let k = fan.len();
            let mut moment = Vec3::zeros();
            for m in 0..k {
                let a = &cc[fan[m].0];
                let b = &cc[fan[(m + 1) % k].0];
                if density.is_uniform() {
                    moment += triangle_first_moment(&g, a, b);
                } else {
                    spherical_triangle_nodes(&g, a, b, TRIANGLE_DEGREE_2, 1, |p, w| {
                        moment += p.vec() * (w * density.eval(&p));
                    });
                }
            }
            SpherePoint::from_vec(moment)
        })
        .collect()
}

/// Runs Lloyd sweeps on a triangulation; returns the relaxed triangulation
/// and a report. Non-convergence is reported, not an error.
pub fn lloyd_relax(
    mut tri: Triangulation,
    density: &DensityFunction,
    opts: LloydOptions,
) -> Result<(Triangulation, LloydReport)> {
    let mut fans = tri.vertex_fans()?;
    let mut edges = shared_edges(&tri);
    let mut report = LloydReport {
        iterations: 0,
        final_movement: f64::INFINITY,
        converged: false,
        flips: 0,
    };
    for _ in 0..opts.max_iter {
        let centroids = cell_centroids(&tri, &fans, density);
        let movement = centroids
            .par_iter()
            .zip(tri.generators.par_iter())
            .map(|(c, g)| geodesic_distance(c, g))
            .reduce(|| 0.0, f64::max);
        tri.generators = centroids;
        report.iterations += 1;
        report.final_movement = movement;
        let flips = if edges.par_iter().any(|e| violates_delaunay(&tri, e)) {
            restore_delaunay(&mut tri)
        } else {
            0
        };
        if flips > 0 {
            report.flips += flips;
            fans = tri.vertex_fans()?;
            edges = shared_edges(&tri);
        }
        if movement < opts.tol && flips == 0 {
            report.converged = true;
            break;
        }
    }
    if !report.converged {
        log::warn!(
            "Lloyd iteration stopped after {} sweeps with movement {:.3e}",
            report.iterations,
            report.final_movement
        );
    }
    Ok((tri, report))
}

/// Lloyd-optimizes a grid with the given density; the returned grid carries
/// the iteration report.
pub fn lloyd_optimize(grid: GridTopology, density: &DensityFunction, opts: LloydOptions) -> Result<GridTopology> {
    let level = grid.level;
    let (tri, report) = lloyd_relax(grid.triangulation, density, opts)?;
    let mut out = precompute_geometry(tri, level, &density.tag())?;
    out.lloyd = Some(report);
    Ok(out)
}

/// Triangle pairs sharing a Delaunay edge: `(t1, k1, t2, k2)` where edge
/// `k1` of `t1` (from `t1[k1]` to `t1[k1 + 1]`) is edge `k2` of `t2` reversed.
fn shared_edges(tri: &Triangulation) -> Vec<(usize, usize, usize, usize)> {
    let mut owner = std::collections::HashMap::with_capacity(tri.triangles.len() * 3);
    for (t, tr) in tri.triangles.iter().enumerate() {
        for k in 0..3 {
            owner.insert((tr[k], tr[(k + 1) % 3]), (t, k));
        }
    }
    let mut out = Vec::with_capacity(tri.triangles.len() * 3 / 2);
    for (t1, tr) in tri.triangles.iter().enumerate() {
        for k1 in 0..3 {
            if let Some(&(t2, k2)) = owner.get(&(tr[(k1 + 1) % 3], tr[k1])) {
                if t1 < t2 {
                    out.push((t1, k1, t2, k2));
                }
            }
        }
    }
    out
}

/// Lawson flips until every edge is locally Delaunay. Returns the number of flips.
pub(crate) fn restore_delaunay(tri: &mut Triangulation) -> usize {
    let mut total = 0;
    for _ in 0..1000 {
        let flips = flip_pass(tri, &shared_edges(tri));
        total += flips;
        if flips == 0 {
            break;
        }
    }
    total
}

fn violates_delaunay(tri: &Triangulation, &(t1, k1, t2, k2): &(usize, usize, usize, usize)) -> bool {
    let a = tri.triangles[t1][k1];
    let b = tri.triangles[t1][(k1 + 1) % 3];
    let c = tri.triangles[t1][(k1 + 2) % 3];
    let d = tri.triangles[t2][(k2 + 2) % 3];
    let (pa, pb, pc, pd) = (
        tri.generators[a].vec(),
        tri.generators[b].vec(),
        tri.generators[c].vec(),
        tri.generators[d].vec(),
    );
    let n = (pb - pa).cross(&(pc - pa));
    n.dot(&(pd - pa)) > 1e-10 * n.norm() * (pd - pa).norm()
}

fn flip_pass(tri: &mut Triangulation, edges: &[(usize, usize, usize, usize)]) -> usize {
    let mut degree = vec![0usize; tri.generators.len()];
    for tr in &tri.triangles {
        for &v in tr {
            degree[v] += 1;
        }
    }
    let mut touched = vec![false; tri.triangles.len()];
    let mut flips = 0;
    for e @ &(t1, k1, t2, k2) in edges {
        if touched[t1] || touched[t2] || !violates_delaunay(tri, e) {
            continue;
        }
        let a = tri.triangles[t1][k1];
        let b = tri.triangles[t1][(k1 + 1) % 3];
        let c = tri.triangles[t1][(k1 + 2) % 3];
        let d = tri.triangles[t2][(k2 + 2) % 3];
        if degree[a] <= 3 || degree[b] <= 3 {
            continue;
        }
        tri.triangles[t1] = [c, a, d];
        tri.triangles[t2] = [d, b, c];
        touched[t1] = true;
        touched[t2] = true;
        degree[a] -= 1;
        degree[b] -= 1;
        degree[c] += 1;
        degree[d] += 1;
        flips += 1;
    }
    flips
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::icosahedral_triangulation;

    #[test]
    fn uniform_lloyd_reaches_fixed_point() {
        let tri = icosahedral_triangulation(3).unwrap();
        let (tri, report) = lloyd_relax(
            tri,
            &DensityFunction::Uniform,
            LloydOptions { tol: 1e-8, max_iter: 5000 },
        )
        .unwrap();
        assert!(report.converged, "{report:?}");
        assert_eq!(report.flips, 0);
        let fans = tri.vertex_fans().unwrap();
        let c = cell_centroids(&tri, &fans, &DensityFunction::Uniform);
        let worst = c
            .iter()
            .zip(&tri.generators)
            .map(|(c, g)| geodesic_distance(c, g))
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");

        // restarting from a fixed point stops after one sweep
        let (_, again) = lloyd_relax(
            tri,
            &DensityFunction::Uniform,
            LloydOptions { tol: 1e-8, max_iter: 10 },
        )
        .unwrap();
        assert!(again.iterations <= 1 && again.converged);
    }

    #[test]
    fn degree_two_centroid_agrees_with_exact_moment() {
        // A constant non-uniform density must give the same centroid as the
        // closed-form uniform moment, up to quadrature error.
        let tri = icosahedral_triangulation(3).unwrap();
        let fans = tri.vertex_fans().unwrap();
        let flat = DensityFunction::GaussianRefinement {
            center: SpherePoint::new(0.0, 0.0, 1.0),
            width: 1.0,
            spacing_ratio: 1.0,
        };
        let a = cell_centroids(&tri, &fans, &DensityFunction::Uniform);
        let b = cell_centroids(&tri, &fans, &flat);
        for (p, q) in a.iter().zip(&b) {
            assert!(geodesic_distance(p, q) < 1e-4);
        }
    }

    #[test]
    fn flips_repair_non_delaunay_pair() {
        let mut tri = icosahedral_triangulation(2).unwrap();
        // Drag one generator far towards a neighbor to break the Delaunay property.
        let [a, b, _] = tri.triangles[0];
        let pa = *tri.generators[a].vec();
        let pb = *tri.generators[b].vec();
        tri.generators[a] = SpherePoint::from_vec(pa + (pb - pa) * 0.8);
        let flips = restore_delaunay(&mut tri);
        assert!(flips > 0);
        let edges = shared_edges(&tri);
        assert_eq!(flip_pass(&mut tri, &edges), 0);
        assert!(tri.vertex_fans().is_ok());
    }
}
