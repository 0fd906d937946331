//! Spherical geometry on the unit sphere.
//!
//! Points are stored as unit Cartesian vectors. Lengths are in radians and
//! areas in steradians; a physical radius is only applied by callers.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::quadrature;

pub type Vec3 = Vector3<f64>;

/// Smallest `p·origin` accepted by the gnomonic projection.
pub const PROJECTION_LIMIT: f64 = 1e-10;

/// A point on the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint(Vec3);

impl SpherePoint {
    /// Normalizes `(x, y, z)` onto the sphere.
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self::from_vec(Vec3::new(x, y, z))
    }

    pub fn from_vec(v: Vec3) -> Self {
        SpherePoint(v / v.norm())
    }

    /// Wraps a vector that is already unit length. Only use on values that
    /// come out of a normalization.
    pub(crate) fn from_unit(v: Vec3) -> Self {
        SpherePoint(v)
    }

    /// Longitude and latitude in radians.
    pub fn from_lon_lat(lon: f64, lat: f64) -> Self {
        let (sl, cl) = lon.sin_cos();
        let (st, ct) = lat.sin_cos();
        SpherePoint(Vec3::new(ct * cl, ct * sl, st))
    }

    pub fn vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }
    pub fn y(&self) -> f64 {
        self.0.y
    }
    pub fn z(&self) -> f64 {
        self.0.z
    }

    /// Longitude in `[-π, π)`.
    pub fn lon(&self) -> f64 {
        let lon = self.0.y.atan2(self.0.x);
        if lon >= PI {
            lon - 2.0 * PI
        } else {
            lon
        }
    }

    /// Latitude in `[-π/2, π/2]`.
    pub fn lat(&self) -> f64 {
        self.0.z.clamp(-1.0, 1.0).asin()
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        self.0.dot(&other.0)
    }

    /// Unit eastward vector (falls back to +x at the poles).
    pub fn east(&self) -> Vec3 {
        let e = Vec3::new(-self.0.y, self.0.x, 0.0);
        let n = e.norm();
        if n < 1e-14 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            e / n
        }
    }

    /// Unit northward vector.
    pub fn north(&self) -> Vec3 {
        self.0.cross(&self.east())
    }
}

/// Great-circle distance in radians.
pub fn geodesic_distance(a: &SpherePoint, b: &SpherePoint) -> f64 {
    a.0.cross(&b.0).norm().atan2(a.0.dot(&b.0))
}

/// Spherical linear interpolation between `a` and `b`.
pub fn slerp(a: &SpherePoint, b: &SpherePoint, t: f64) -> SpherePoint {
    let angle = geodesic_distance(a, b);
    if angle < 1e-15 {
        return *a;
    }
    let s = angle.sin();
    let wa = ((1.0 - t) * angle).sin() / s;
    let wb = (t * angle).sin() / s;
    SpherePoint::from_vec(a.0 * wa + b.0 * wb)
}

/// Orthonormal basis of the tangent plane at `origin`.
///
/// `e1` points east and `e2` north; at the poles `e1` is pinned to +x.
#[derive(Clone, Copy, Debug)]
pub struct TangentFrame {
    pub origin: SpherePoint,
    pub e1: Vec3,
    pub e2: Vec3,
}

impl TangentFrame {
    pub fn new(origin: SpherePoint) -> Self {
        let o = origin.0;
        let e1 = if o.z.abs() > 1.0 - 1e-10 {
            Vec3::new(1.0, 0.0, 0.0)
        } else {
            let east = Vec3::z().cross(&o);
            east / east.norm()
        };
        let e2 = o.cross(&e1);
        TangentFrame {
            origin,
            e1,
            e2: e2 / e2.norm(),
        }
    }

    /// Gnomonic projection onto the tangent plane.
    pub fn project(&self, p: &SpherePoint) -> Result<[f64; 2]> {
        let s = p.0.dot(&self.origin.0);
        if s <= PROJECTION_LIMIT {
            return Err(Error::AntipodalPoint { dot: s });
        }
        let q = p.0 / s - self.origin.0;
        Ok([q.dot(&self.e1), q.dot(&self.e2)])
    }

    /// Inverse of [`TangentFrame::project`].
    pub fn unproject(&self, xy: [f64; 2]) -> SpherePoint {
        SpherePoint::from_vec(self.origin.0 + self.e1 * xy[0] + self.e2 * xy[1])
    }

    /// Pushforward of the 3-vector `v` attached at `at` under the gnomonic map.
    pub fn project_vector(&self, at: &SpherePoint, v: &Vec3) -> Result<[f64; 2]> {
        let s = at.0.dot(&self.origin.0);
        if s <= PROJECTION_LIMIT {
            return Err(Error::AntipodalPoint { dot: s });
        }
        let dv = v / s - at.0 * (v.dot(&self.origin.0) / (s * s));
        Ok([dv.dot(&self.e1), dv.dot(&self.e2)])
    }
}

/// Spherical excess of the triangle `abc` by l'Huilier's theorem.
pub fn triangle_area(a: &SpherePoint, b: &SpherePoint, c: &SpherePoint) -> f64 {
    let ab = geodesic_distance(a, b);
    let bc = geodesic_distance(b, c);
    let ca = geodesic_distance(c, a);
    let s = 0.5 * (ab + bc + ca);
    let t = (0.5 * s).tan()
        * (0.5 * (s - ab)).tan()
        * (0.5 * (s - bc)).tan()
        * (0.5 * (s - ca)).tan();
    4.0 * t.max(0.0).sqrt().atan()
}

/// Area of a spherical polygon given counterclockwise (seen from outside)
/// vertices, fanned from the normalized vertex mean.
pub fn spherical_polygon_area(vertices: &[SpherePoint]) -> Result<f64> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::DegeneratePolygon(0, 0));
    }
    for k in 0..n {
        let next = (k + 1) % n;
        if (vertices[k].0 - vertices[next].0).norm() < 1e-13 {
            return Err(Error::DegeneratePolygon(k, next));
        }
    }
    let center = vertex_mean(vertices);
    Ok((0..n)
        .map(|k| triangle_area(&center, &vertices[k], &vertices[(k + 1) % n]))
        .sum())
}

/// Normalized arithmetic mean of the vertices.
pub fn vertex_mean(vertices: &[SpherePoint]) -> SpherePoint {
    let sum = vertices.iter().fold(Vec3::zeros(), |acc, v| acc + v.0);
    SpherePoint::from_vec(sum)
}

/// Gauss points along a great-circle arc.
#[derive(Clone, Debug)]
pub struct ArcQuadrature {
    pub points: Vec<SpherePoint>,
    /// Arc-length weights in radians; they sum to the arc length.
    pub weights: Vec<f64>,
}

/// Gauss–Legendre rule with `m` points (1 or 2) placed on the arc `a → b`.
pub fn gauss_arc_points(a: &SpherePoint, b: &SpherePoint, m: usize) -> Result<ArcQuadrature> {
    let length = geodesic_distance(a, b);
    if length < 1e-13 {
        return Err(Error::DegenerateArc(length));
    }
    if !(1..=2).contains(&m) {
        return Err(Error::UnsupportedQuadrature(m));
    }
    let (nodes, weights) = quadrature::gauss_legendre_unit(m);
    Ok(ArcQuadrature {
        points: nodes.iter().map(|&t| slerp(a, b, t)).collect(),
        weights: weights.iter().map(|w| w * length).collect(),
    })
}

/// Exact integral of the position vector over a spherical triangle.
///
/// This is the "vector area" identity: ∫_T p dA = ½ Σ θ_k n̂_k over the
/// three edges, with θ_k the edge angle and n̂_k the unit normal of the
/// edge's great-circle plane oriented outward from the triangle.
pub fn triangle_first_moment(a: &SpherePoint, b: &SpherePoint, c: &SpherePoint) -> Vec3 {
    let edge = |p: &SpherePoint, q: &SpherePoint| {
        let n = p.0.cross(&q.0);
        let len = n.norm();
        if len < 1e-300 {
            Vec3::zeros()
        } else {
            n / len * geodesic_distance(p, q)
        }
    };
    (edge(a, b) + edge(b, c) + edge(c, a)) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn distance_special_cases() {
        let x = SpherePoint::new(1.0, 0.0, 0.0);
        let y = SpherePoint::new(0.0, 1.0, 0.0);
        assert_eq!(geodesic_distance(&x, &x), 0.0);
        assert_abs_diff_eq!(geodesic_distance(&x, &SpherePoint::new(-1.0, 0.0, 0.0)), PI);
        assert_abs_diff_eq!(geodesic_distance(&x, &y), FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn frame_is_orthonormal_everywhere() {
        for p in [
            SpherePoint::new(0.3, -0.2, 0.9),
            SpherePoint::new(0.0, 0.0, 1.0),
            SpherePoint::new(0.0, 0.0, -1.0),
            SpherePoint::new(-1.0, 0.0, 0.0),
        ] {
            let f = TangentFrame::new(p);
            assert_abs_diff_eq!(f.e1.dot(&f.e2), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(f.e1.dot(p.vec()), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(f.e2.dot(p.vec()), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(f.e1.norm(), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(f.e2.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn gnomonic_projection_examples() {
        let f = TangentFrame::new(SpherePoint::new(0.0, 0.0, 1.0));
        assert_eq!(f.project(&f.origin).unwrap(), [0.0, 0.0]);
        let [x, y] = f.project(&SpherePoint::new(1.0, 0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(x, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y, 0.0, epsilon = 1e-15);

        // tan α along the e1 great circle
        let g = TangentFrame::new(SpherePoint::from_lon_lat(0.4, -0.3));
        for alpha in [0.1f64, 0.7, 1.3] {
            let p = SpherePoint::from_vec(g.origin.vec() * alpha.cos() + g.e1 * alpha.sin());
            let [x, y] = g.project(&p).unwrap();
            assert_abs_diff_eq!(x, alpha.tan(), epsilon = 1e-12);
            assert_abs_diff_eq!(y, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_rejects_far_hemisphere() {
        let f = TangentFrame::new(SpherePoint::new(1.0, 0.0, 0.0));
        assert!(matches!(
            f.project(&SpherePoint::new(-1.0, 0.0, 0.0)),
            Err(Error::AntipodalPoint { .. })
        ));
        assert!(f.project(&SpherePoint::new(0.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn vector_pushforward() {
        let f = TangentFrame::new(SpherePoint::from_lon_lat(1.0, 0.5));
        let [a, b] = f.project_vector(&f.origin, &f.e1).unwrap();
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.0, epsilon = 1e-15);
        let [a, b] = f.project_vector(&f.origin, f.origin.vec()).unwrap();
        assert_abs_diff_eq!(a, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 0.0, epsilon = 1e-15);

        // finite-difference oracle away from the origin
        let p = SpherePoint::from_lon_lat(1.2, 0.3);
        let v = p.vec().cross(&Vec3::new(0.2, -0.5, 0.7));
        let h = 1e-6;
        let q0 = f.project(&p).unwrap();
        let q1 = f.project(&SpherePoint::from_vec(p.vec() + v * h)).unwrap();
        let fd = [(q1[0] - q0[0]) / h, (q1[1] - q0[1]) / h];
        let d = f.project_vector(&p, &v).unwrap();
        assert_abs_diff_eq!(fd[0], d[0], epsilon = 1e-5);
        assert_abs_diff_eq!(fd[1], d[1], epsilon = 1e-5);
    }

    #[test]
    fn octant_area() {
        let tri = [
            SpherePoint::new(1.0, 0.0, 0.0),
            SpherePoint::new(0.0, 1.0, 0.0),
            SpherePoint::new(0.0, 0.0, 1.0),
        ];
        assert_abs_diff_eq!(spherical_polygon_area(&tri).unwrap(), FRAC_PI_2, epsilon = 1e-14);
    }

    #[test]
    fn small_quad_area_is_planar() {
        let f = TangentFrame::new(SpherePoint::from_lon_lat(0.3, 0.2));
        let s = 1e-3;
        // Points at geodesic offsets ±s/2 along e1/e2 approximate a square of side s.
        let quad: Vec<_> = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)]
            .iter()
            .map(|&(a, b)| f.unproject([a * s, b * s]))
            .collect();
        let area = spherical_polygon_area(&quad).unwrap();
        assert!((area - s * s).abs() < 10.0 * s.powi(4), "{area}");
    }

    #[test]
    fn coincident_vertices_rejected() {
        let p = SpherePoint::new(1.0, 0.0, 0.0);
        let q = SpherePoint::new(0.0, 1.0, 0.0);
        let r = SpherePoint::new(0.0, 0.0, 1.0);
        assert!(matches!(
            spherical_polygon_area(&[p, q, q, r]),
            Err(Error::DegeneratePolygon(1, 2))
        ));
    }

    #[test]
    fn arc_quadrature_examples() {
        let a = SpherePoint::new(1.0, 0.0, 0.0);
        let b = SpherePoint::new(0.0, 1.0, 0.0);
        let q1 = gauss_arc_points(&a, &b, 1).unwrap();
        assert_abs_diff_eq!(q1.weights[0], FRAC_PI_2, epsilon = 1e-15);
        let mid = SpherePoint::new(1.0, 1.0, 0.0);
        assert_abs_diff_eq!((q1.points[0].vec() - mid.vec()).norm(), 0.0, epsilon = 1e-15);

        let q2 = gauss_arc_points(&a, &b, 2).unwrap();
        assert_abs_diff_eq!(q2.weights[0], PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q2.weights[1], PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            geodesic_distance(&q2.points[0], &a),
            geodesic_distance(&q2.points[1], &b),
            epsilon = 1e-15
        );

        // degree-3 polynomial in arc length s ∈ [0, L]: ∫ (1 + 2s − s² + 3s³) ds
        let len = FRAC_PI_2;
        let f = |s: f64| 1.0 + 2.0 * s - s * s + 3.0 * s.powi(3);
        let exact = len + len * len - len.powi(3) / 3.0 + 0.75 * len.powi(4);
        let approx: f64 = q2
            .points
            .iter()
            .zip(&q2.weights)
            .map(|(p, w)| w * f(geodesic_distance(&a, p)))
            .sum();
        assert_abs_diff_eq!(approx, exact, epsilon = 1e-12);
    }

    #[test]
    fn arc_quadrature_errors() {
        let a = SpherePoint::new(1.0, 0.0, 0.0);
        assert!(matches!(gauss_arc_points(&a, &a, 1), Err(Error::DegenerateArc(_))));
        let b = SpherePoint::new(0.0, 1.0, 0.0);
        assert!(gauss_arc_points(&a, &b, 3).is_err());
    }

    #[test]
    fn first_moment_of_octant() {
        // ∫ p dA over the octant is (π/4)(1, 1, 1).
        let m = triangle_first_moment(
            &SpherePoint::new(1.0, 0.0, 0.0),
            &SpherePoint::new(0.0, 1.0, 0.0),
            &SpherePoint::new(0.0, 0.0, 1.0),
        );
        for c in m.iter() {
            assert_abs_diff_eq!(*c, PI / 4.0, epsilon = 1e-14);
        }
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn point() -> impl Strategy<Value = SpherePoint> {
        (-PI..PI, -1.5f64..1.5).prop_map(|(lon, lat)| SpherePoint::from_lon_lat(lon, lat))
    }

    proptest! {
        #[test]
        fn distance_is_symmetric(a in point(), b in point()) {
            prop_assert_eq!(geodesic_distance(&a, &b), geodesic_distance(&b, &a));
        }

        #[test]
        fn project_unproject_round_trip(o in point(), az in 0.0..(2.0 * PI), r in 0.0f64..(PI / 3.0)) {
            let f = TangentFrame::new(o);
            let p = SpherePoint::from_vec(o.vec() * r.cos() + (f.e1 * az.cos() + f.e2 * az.sin()) * r.sin());
            let back = f.unproject(f.project(&p).unwrap());
            prop_assert!((back.vec() - p.vec()).norm() < 1e-12);
        }

        #[test]
        fn arc_weights_sum_to_length(a in point(), b in point(), m in 1usize..=2) {
            prop_assume!(geodesic_distance(&a, &b) > 1e-6 && geodesic_distance(&a, &b) < 3.0);
            let q = gauss_arc_points(&a, &b, m).unwrap();
            let sum: f64 = q.weights.iter().sum();
            prop_assert!((sum - geodesic_distance(&a, &b)).abs() <= 1e-13 * sum.max(1.0));
        }

        #[test]
        fn area_invariant_under_rotation_of_vertex_list(o in point(), shift in 0usize..6) {
            let f = TangentFrame::new(o);
            let hex: Vec<_> = (0..6)
                .map(|k| {
                    let a = k as f64 * PI / 3.0 + 0.1 * (k as f64).sin();
                    f.unproject([0.05 * a.cos(), 0.05 * a.sin()])
                })
                .collect();
            let mut rotated = hex.clone();
            rotated.rotate_left(shift);
            let a0 = spherical_polygon_area(&hex).unwrap();
            let a1 = spherical_polygon_area(&rotated).unwrap();
            prop_assert!((a0 - a1).abs() < 1e-13);
        }
    }
}
