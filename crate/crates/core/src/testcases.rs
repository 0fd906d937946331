//! Analytic winds, initial tracer fields and exact solutions for the
//! advection benchmarks on the unit sphere.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{geodesic_distance, SpherePoint, Vec3};
use crate::grid::GridTopology;
use crate::quadrature::{spherical_triangle_nodes, TRIANGLE_CENTROID, TRIANGLE_DEGREE_4};

/// Rotation period of both flows, in model time units.
pub const PERIOD: f64 = 5.0;

/// Deformation amplitude used by default.
pub const DEFAULT_DEFORM_K: f64 = 2.0;

/// Eastward solid-body wind `u = u₀ cos θ`, `v = 0`.
pub fn zonal_wind(p: &SpherePoint, u0: f64) -> Vec3 {
    Vec3::new(-p.y(), p.x(), 0.0) * u0
}

/// Deformational flow with a zonal background (returns to the initial
/// state at `t = period`):
///
/// `u = k sin²(λ') sin(2θ) cos(πt/T) + 2π cos θ / T`,
/// `v = k sin(2λ') cos θ cos(πt/T)`, `λ' = λ − 2πt/T`.
pub fn deformational_wind(p: &SpherePoint, t: f64, period: f64, k: f64) -> Vec3 {
    let (lon, lat) = (p.lon(), p.lat());
    let lp = lon - 2.0 * PI * t / period;
    let ct = (PI * t / period).cos();
    let u = k * lp.sin().powi(2) * (2.0 * lat).sin() * ct + 2.0 * PI * lat.cos() / period;
    let v = k * (2.0 * lp).sin() * lat.cos() * ct;
    p.east() * u + p.north() * v
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindSpec {
    ZonalSolidBody { period: f64 },
    Deformational { period: f64, k: f64 },
}

impl WindSpec {
    pub fn period(&self) -> f64 {
        match *self {
            WindSpec::ZonalSolidBody { period } | WindSpec::Deformational { period, .. } => period,
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, WindSpec::Deformational { .. })
    }

    pub fn velocity(&self, p: &SpherePoint, t: f64) -> Vec3 {
        match *self {
            WindSpec::ZonalSolidBody { period } => zonal_wind(p, 2.0 * PI / period),
            WindSpec::Deformational { period, k } => deformational_wind(p, t, period, k),
        }
    }

    /// Stream function with `u = p × ∇ψ`, so that the flux of `u` through an
    /// arc `a → b` along the normal `p × t̂` is `ψ(b) − ψ(a)`.
    pub fn stream_function(&self, p: &SpherePoint, t: f64) -> f64 {
        match *self {
            WindSpec::ZonalSolidBody { period } => -2.0 * PI / period * p.z(),
            WindSpec::Deformational { period, k } => {
                let lp = p.lon() - 2.0 * PI * t / period;
                let c2 = p.x() * p.x() + p.y() * p.y();
                k * lp.sin().powi(2) * c2 * (PI * t / period).cos() - 2.0 * PI / period * p.z()
            }
        }
    }

    /// Largest wind speed over the given points and over one period
    /// (sampled at 64 instants for time-dependent flows).
    pub fn max_speed(&self, points: &[SpherePoint]) -> f64 {
        let times: Vec<f64> = if self.is_time_dependent() {
            (0..=64).map(|k| self.period() * k as f64 / 64.0).collect()
        } else {
            vec![0.0]
        };
        times
            .iter()
            .flat_map(|&t| points.iter().map(move |p| self.velocity(p, t).norm()))
            .fold(0.0, f64::max)
    }
}

/// `exp(−b |p − c|²)` with the Cartesian chord distance.
pub fn gaussian_hill(p: &SpherePoint, center: &SpherePoint, b: f64) -> f64 {
    (-b * (p.vec() - center.vec()).norm_squared()).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TracerSpec {
    /// One Gaussian hill; centers are `(lon, lat)` in radians.
    GaussianHill { center: (f64, f64), b: f64 },
    TwoGaussianHills { centers: [(f64, f64); 2], b: f64 },
    /// Two slotted cylinders: the first slot opens southward, the second northward.
    SlottedCylinders {
        centers: [(f64, f64); 2],
        radius: f64,
        background: f64,
        height: f64,
    },
    Constant { value: f64 },
}

pub const HILL_B: f64 = 5.0;

/// Hill center on the quasi-uniform grid.
pub const UNIFORM_HILL_CENTER: (f64, f64) = (0.0, 0.0);
/// Hill center on the refined grid, inside the refined region.
pub const REFINED_HILL_CENTER: (f64, f64) = (-7.0 * PI / 18.0, -PI / 12.0);
pub const UNIFORM_PAIR_CENTERS: [(f64, f64); 2] = [(-PI / 6.0, 0.0), (PI / 6.0, 0.0)];
pub const REFINED_PAIR_CENTERS: [(f64, f64); 2] = [(-5.0 * PI / 9.0, -PI / 12.0), (-2.0 * PI / 9.0, -PI / 12.0)];

impl TracerSpec {
    pub fn slotted_cylinders(centers: [(f64, f64); 2]) -> Self {
        TracerSpec::SlottedCylinders {
            centers,
            radius: 0.5,
            background: 0.1,
            height: 1.0,
        }
    }

    pub fn is_smooth(&self) -> bool {
        !matches!(self, TracerSpec::SlottedCylinders { .. })
    }

    pub fn eval(&self, p: &SpherePoint) -> f64 {
        let at = |(lon, lat): (f64, f64)| SpherePoint::from_lon_lat(lon, lat);
        match self {
            TracerSpec::GaussianHill { center, b } => gaussian_hill(p, &at(*center), *b),
            TracerSpec::TwoGaussianHills { centers, b } => {
                gaussian_hill(p, &at(centers[0]), *b) + gaussian_hill(p, &at(centers[1]), *b)
            }
            TracerSpec::SlottedCylinders {
                centers,
                radius: r,
                background,
                height,
            } => {
                let (lon, lat) = (p.lon(), p.lat());
                for (i, &(lc, tc)) in centers.iter().enumerate() {
                    if geodesic_distance(p, &at((lc, tc))) > *r {
                        continue;
                    }
                    let dlon = wrap_angle(lon - lc).abs();
                    let inside = if dlon >= r / 6.0 {
                        true
                    } else if i == 0 {
                        lat - tc < -5.0 * r / 12.0
                    } else {
                        lat - tc > 5.0 * r / 12.0
                    };
                    if inside {
                        return *height;
                    }
                }
                *background
            }
            TracerSpec::Constant { value } => *value,
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Exact solution of solid-body zonal advection: the initial field at the
/// point rotated back by `u₀ t` about the polar axis.
pub fn exact_solid_body_solution(tracer: &TracerSpec, wind: &WindSpec, t: f64, p: &SpherePoint) -> Result<f64> {
    let WindSpec::ZonalSolidBody { period } = wind else {
        return Err(Error::UnsupportedWind);
    };
    let a = -2.0 * PI / period * t;
    let (s, c) = a.sin_cos();
    let q = SpherePoint::new(c * p.x() - s * p.y(), s * p.x() + c * p.y(), p.z());
    Ok(tracer.eval(&q))
}

/// How cell means are formed from a point function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeanRule {
    /// Degree-4 rule on every triangle of the cell's fan (smooth fields).
    Smooth,
    /// Centroids of a 4×4 subdivision of every fan triangle (discontinuous fields).
    Subdivided,
    /// Value at the generator.
    Point,
}

/// Cell means of a point function over every cell.
pub fn cell_means(grid: &GridTopology, rule: MeanRule, f: impl Fn(&SpherePoint) -> f64 + Sync) -> Vec<f64> {
    (0..grid.cell_count())
        .into_par_iter()
        .map(|i| cell_mean(grid, i, rule, &f))
        .collect()
}

pub fn cell_mean(grid: &GridTopology, i: usize, rule: MeanRule, f: &impl Fn(&SpherePoint) -> f64) -> f64 {
    let cell = &grid.cells[i];
    let (tri_rule, sub) = match rule {
        MeanRule::Point => return f(&cell.center),
        MeanRule::Smooth => (TRIANGLE_DEGREE_4, 1),
        MeanRule::Subdivided => (TRIANGLE_CENTROID, 4),
    };
    let n = cell.vertices.len();
    let (mut sum, mut area) = (0.0, 0.0);
    for k in 0..n {
        let a = &grid.vertices[cell.vertices[k]];
        let b = &grid.vertices[cell.vertices[(k + 1) % n]];
        spherical_triangle_nodes(&cell.center, a, b, tri_rule, sub, |p, w| {
            sum += w * f(&p);
            area += w;
        });
    }
    sum / area
}

/// Initial cell means of a tracer (degree-4 fan quadrature for smooth
/// fields, subdivided centroid sampling for the cylinders).
pub fn cell_mean_init(grid: &GridTopology, tracer: &TracerSpec) -> Vec<f64> {
    let rule = if tracer.is_smooth() {
        MeanRule::Smooth
    } else {
        MeanRule::Subdivided
    };
    cell_means(grid, rule, |p| tracer.eval(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gauss_arc_points, slerp};
    use crate::grid::build_icosahedral_grid;

    #[test]
    fn zonal_wind_examples() {
        let u0 = 2.0 * PI / PERIOD;
        let eq = SpherePoint::from_lon_lat(0.3, 0.0);
        assert!((zonal_wind(&eq, u0).norm() - u0).abs() < 1e-15);
        let pole = SpherePoint::new(0.0, 0.0, 1.0);
        assert_eq!(zonal_wind(&pole, u0).norm(), 0.0);
        assert!(zonal_wind(&eq, u0).dot(eq.vec()).abs() < 1e-15);
    }

    /// ∮ u·n around a spherical cap of angular radius ρ centered at `c`.
    fn cap_outflow(wind: impl Fn(&SpherePoint) -> Vec3, c: &SpherePoint, rho: f64) -> f64 {
        let n = 64;
        let frame = crate::geometry::TangentFrame::new(*c);
        let ring: Vec<SpherePoint> = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                let d = frame.e1 * a.cos() + frame.e2 * a.sin();
                SpherePoint::from_vec(c.vec() * rho.cos() + d * rho.sin())
            })
            .collect();
        let mut total = 0.0;
        for k in 0..n {
            let (a, b) = (&ring[k], &ring[(k + 1) % n]);
            // sub-arcs are great circles; the outward normal is −(a×b)/|a×b|
            for m in 0..8 {
                let (p, q) = (slerp(a, b, m as f64 / 8.0), slerp(a, b, (m + 1) as f64 / 8.0));
                let nrm = -p.vec().cross(q.vec()).normalize();
                let quad = gauss_arc_points(&p, &q, 2).unwrap();
                for (x, w) in quad.points.iter().zip(&quad.weights) {
                    total += w * wind(x).dot(&nrm);
                }
            }
        }
        total
    }

    #[test]
    fn winds_are_divergence_free() {
        let c = SpherePoint::from_lon_lat(0.4, 0.3);
        let zonal = cap_outflow(|p| zonal_wind(p, 1.0), &c, 0.5);
        assert!(zonal.abs() < 1e-10, "{zonal}");
        let deform = cap_outflow(|p| deformational_wind(p, 0.7, PERIOD, 2.0), &c, 0.5);
        // chord-polygon caps: compare against the refined-ring scale
        assert!(deform.abs() < 1e-10, "{deform}");
    }

    #[test]
    fn stream_function_generates_the_wind() {
        let h = 1e-6;
        for wind in [
            WindSpec::ZonalSolidBody { period: PERIOD },
            WindSpec::Deformational { period: PERIOD, k: 2.0 },
        ] {
            for (lon, lat, t) in [(0.3, 0.2, 0.0), (-2.0, -0.9, 1.7), (2.9, 0.5, 4.1)] {
                let p = SpherePoint::from_lon_lat(lon, lat);
                let u = wind.velocity(&p, t);
                // ψ difference across a short arc along the east direction is the northward-normal flux
                let along = |d: Vec3| {
                    let a = SpherePoint::from_vec(p.vec() - d * h);
                    let b = SpherePoint::from_vec(p.vec() + d * h);
                    (wind.stream_function(&b, t) - wind.stream_function(&a, t)) / (2.0 * h)
                };
                // normal p × t̂: for t̂ = east it is north, for t̂ = north it is −east
                assert!((along(p.east()) - u.dot(&p.north())).abs() < 1e-7);
                assert!((along(p.north()) + u.dot(&p.east())).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn deformational_wind_examples() {
        let p = SpherePoint::from_lon_lat(1.1, -0.4);
        let w = deformational_wind(&p, PERIOD / 2.0, PERIOD, 2.0);
        let background = p.east() * (2.0 * PI * p.lat().cos() / PERIOD);
        assert!((w - background).norm() < 1e-14);
        let near_pole = SpherePoint::from_lon_lat(0.3, PI / 2.0 - 1e-9);
        assert!(deformational_wind(&near_pole, 0.2, PERIOD, 2.0).dot(&near_pole.north()).abs() < 1e-8);
        // deformational part is antisymmetric about T/2 at the co-moving longitude
        let t = 1.3;
        let deform = |t: f64| {
            let lon = 0.5 + 2.0 * PI * t / PERIOD;
            let q = SpherePoint::from_lon_lat(lon, 0.6);
            let total = deformational_wind(&q, t, PERIOD, 2.0);
            (total - q.east() * (2.0 * PI * q.lat().cos() / PERIOD), q)
        };
        let (a, qa) = deform(t);
        let (b, qb) = deform(PERIOD - t);
        assert!((a.dot(&qa.east()) + b.dot(&qb.east())).abs() < 1e-13);
        assert!((a.dot(&qa.north()) + b.dot(&qb.north())).abs() < 1e-13);
    }

    #[test]
    fn hill_examples() {
        let c = SpherePoint::from_lon_lat(0.2, 0.1);
        assert_eq!(gaussian_hill(&c, &c, HILL_B), 1.0);
        let anti = SpherePoint::from_vec(-c.vec());
        assert!((gaussian_hill(&anti, &c, HILL_B) - (-20f64).exp()).abs() < 1e-20);
        let two = TracerSpec::TwoGaussianHills {
            centers: UNIFORM_PAIR_CENTERS,
            b: HILL_B,
        };
        let p = SpherePoint::from_lon_lat(0.1, 0.05);
        let sum = gaussian_hill(&p, &SpherePoint::from_lon_lat(-PI / 6.0, 0.0), HILL_B)
            + gaussian_hill(&p, &SpherePoint::from_lon_lat(PI / 6.0, 0.0), HILL_B);
        assert_eq!(two.eval(&p), sum);
    }

    #[test]
    fn cylinder_examples() {
        let cyl = TracerSpec::slotted_cylinders(UNIFORM_PAIR_CENTERS);
        let (lc, tc) = UNIFORM_PAIR_CENTERS[0];
        // center lies inside the slot; just east of the slot is solid
        assert_eq!(cyl.eval(&SpherePoint::from_lon_lat(lc, tc)), 0.1);
        assert_eq!(cyl.eval(&SpherePoint::from_lon_lat(lc + 0.2, tc)), 1.0);
        // the first slot is cut from the north, leaving a solid southern bridge
        assert_eq!(cyl.eval(&SpherePoint::from_lon_lat(lc, tc - 0.45)), 1.0);
        let (lc2, tc2) = UNIFORM_PAIR_CENTERS[1];
        assert_eq!(cyl.eval(&SpherePoint::from_lon_lat(lc2, tc2 + 0.45)), 1.0);
        assert_eq!(cyl.eval(&SpherePoint::from_lon_lat(lc2, tc2 - 0.45)), 0.1);
        assert_eq!(cyl.eval(&SpherePoint::from_lon_lat(2.5, 0.8)), 0.1);
        let g = build_icosahedral_grid(3).unwrap();
        for c in &g.cells {
            let v = cyl.eval(&c.center);
            assert!(v == 0.1 || v == 1.0);
        }
    }

    #[test]
    fn exact_solution_examples() {
        let hill = TracerSpec::GaussianHill {
            center: (0.4, 0.2),
            b: HILL_B,
        };
        let wind = WindSpec::ZonalSolidBody { period: PERIOD };
        let p = SpherePoint::from_lon_lat(-1.0, 0.3);
        assert!((exact_solid_body_solution(&hill, &wind, 0.0, &p).unwrap() - hill.eval(&p)).abs() < 1e-15);
        assert!((exact_solid_body_solution(&hill, &wind, PERIOD, &p).unwrap() - hill.eval(&p)).abs() < 1e-14);
        let moved = SpherePoint::from_lon_lat(0.4 + PI, 0.2);
        assert!((exact_solid_body_solution(&hill, &wind, PERIOD / 2.0, &moved).unwrap() - 1.0).abs() < 1e-14);
        let deform = WindSpec::Deformational { period: PERIOD, k: 2.0 };
        assert!(matches!(
            exact_solid_body_solution(&hill, &deform, 1.0, &p),
            Err(Error::UnsupportedWind)
        ));
    }

    #[test]
    fn cell_mean_examples() {
        let g = build_icosahedral_grid(3).unwrap();
        let c = cell_mean_init(&g, &TracerSpec::Constant { value: 0.37 });
        assert!(c.iter().all(|v| (v - 0.37).abs() < 1e-14));

        let hill = TracerSpec::GaussianHill {
            center: (0.0, 0.0),
            b: HILL_B,
        };
        let means = cell_mean_init(&g, &hill);
        let i = (0..g.cell_count())
            .min_by(|&a, &b| {
                let o = SpherePoint::from_lon_lat(0.0, 0.0);
                geodesic_distance(&g.cells[a].center, &o).total_cmp(&geodesic_distance(&g.cells[b].center, &o))
            })
            .unwrap();
        let far = g.cell_vertices(i).iter().map(|v| hill.eval(v)).fold(f64::INFINITY, f64::min);
        assert!(means[i] < 1.0 && means[i] > far);
    }

    #[test]
    fn smooth_means_are_converged() {
        let g = build_icosahedral_grid(4).unwrap();
        let hill = TracerSpec::GaussianHill {
            center: (0.3, -0.2),
            b: HILL_B,
        };
        let coarse = cell_mean_init(&g, &hill);
        for i in (0..g.cell_count()).step_by(7) {
            let cell = &g.cells[i];
            let n = cell.vertices.len();
            let (mut s, mut a) = (0.0, 0.0);
            for k in 0..n {
                let v0 = &g.vertices[cell.vertices[k]];
                let v1 = &g.vertices[cell.vertices[(k + 1) % n]];
                spherical_triangle_nodes(&cell.center, v0, v1, TRIANGLE_DEGREE_4, 2, |p, w| {
                    s += w * hill.eval(&p);
                    a += w;
                });
            }
            assert!((coarse[i] - s / a).abs() < 1e-8);
        }
    }
}
