//! Fixed quadrature rules: Gauss–Legendre on [0, 1] and symmetric triangle
//! rules, plus integration over spherical triangles by radial projection.

use crate::geometry::{SpherePoint, Vec3};

/// Gauss–Legendre nodes and weights on `[0, 1]` (weights sum to 1).
/// Exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w): (&[f64], &[f64]) = match n {
        1 => (&[0.0], &[2.0]),
        2 => {
            const A: f64 = 0.577_350_269_189_625_8;
            (&[-A, A], &[1.0, 1.0])
        }
        3 => (
            &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
            &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
        ),
        4 => (
            &[
                -0.861_136_311_594_052_6,
                -0.339_981_043_584_856_3,
                0.339_981_043_584_856_3,
                0.861_136_311_594_052_6,
            ],
            &[
                0.347_854_845_137_453_9,
                0.652_145_154_862_546_1,
                0.652_145_154_862_546_1,
                0.347_854_845_137_453_9,
            ],
        ),
        _ => panic!("Gauss-Legendre rule with {n} points not tabulated"),
    };
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|w| 0.5 * w).collect(),
    )
}

/// Symmetric triangle rule as barycentric coordinates and weights summing to 1.
#[derive(Clone, Copy, Debug)]
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    pub weights: &'static [f64],
}

/// Three-point rule, exact for degree 2.
pub const TRIANGLE_DEGREE_2: TriangleRule = TriangleRule {
    points: &[
        [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
        [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
        [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    ],
    weights: &[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
};

const D4_A: f64 = 0.108_103_018_168_070;
const D4_B: f64 = 0.445_948_490_915_965;
const D4_C: f64 = 0.816_847_572_980_459;
const D4_D: f64 = 0.091_576_213_509_771;
const D4_WA: f64 = 0.223_381_589_678_011;
const D4_WC: f64 = 0.109_951_743_655_322;

/// Six-point Dunavant rule, exact for degree 4.
pub const TRIANGLE_DEGREE_4: TriangleRule = TriangleRule {
    points: &[
        [D4_A, D4_B, D4_B],
        [D4_B, D4_A, D4_B],
        [D4_B, D4_B, D4_A],
        [D4_C, D4_D, D4_D],
        [D4_D, D4_C, D4_D],
        [D4_D, D4_D, D4_C],
    ],
    weights: &[D4_WA, D4_WA, D4_WA, D4_WC, D4_WC, D4_WC],
};

/// Single centroid point, exact for degree 1.
pub const TRIANGLE_CENTROID: TriangleRule = TriangleRule {
    points: &[[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]],
    weights: &[1.0],
};

/// Quadrature nodes on the spherical triangle `abc`: points on the sphere and
/// weights in steradians.
///
/// The flat triangle is mapped radially onto the sphere; the area element
/// picks up the factor `(N·P) / |P|³` where `N` is the flat triangle's unit
/// normal and `P` the flat point. `subdivisions` splits each edge into that
/// many pieces before applying the rule.
pub fn spherical_triangle_nodes(
    a: &SpherePoint,
    b: &SpherePoint,
    c: &SpherePoint,
    rule: TriangleRule,
    subdivisions: usize,
    mut visit: impl FnMut(SpherePoint, f64),
) {
    let n = subdivisions.max(1);
    let (pa, pb, pc) = (*a.vec(), *b.vec(), *c.vec());
    let cross = (pb - pa).cross(&(pc - pa));
    let twice_area = cross.norm();
    if twice_area == 0.0 {
        return;
    }
    let normal = cross / twice_area;
    let offset = normal.dot(&pa).abs();
    let sub_area = 0.5 * twice_area / (n * n) as f64;
    let lattice = |i: usize, j: usize| -> Vec3 {
        let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
        pa + (pb - pa) * u + (pc - pa) * v
    };
    let mut emit = |p0: Vec3, p1: Vec3, p2: Vec3| {
        for (bary, w) in rule.points.iter().zip(rule.weights) {
            let p = p0 * bary[0] + p1 * bary[1] + p2 * bary[2];
            let r = p.norm();
            visit(SpherePoint::from_unit(p / r), w * sub_area * offset / (r * r * r));
        }
    };
    for i in 0..n {
        for j in 0..(n - i) {
            emit(lattice(i, j), lattice(i + 1, j), lattice(i, j + 1));
            if i + j + 1 < n {
                emit(lattice(i + 1, j), lattice(i + 1, j + 1), lattice(i, j + 1));
            }
        }
    }
}
