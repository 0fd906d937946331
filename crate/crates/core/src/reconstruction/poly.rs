/// Number of monomials of total degree ≤ `degree` in two variables.
pub const fn monomial_count(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Exponents `(m, n)` of `x^m y^n` in graded lexicographic order:
/// `1, x, y, x², xy, y², x³, x²y, xy², y³, …`.
pub fn monomial_exponents(degree: usize) -> Vec<(u32, u32)> {
    let mut out = Vec::with_capacity(monomial_count(degree));
    for d in 0..=degree as u32 {
        for m in (0..=d).rev() {
            out.push((m, d - m));
        }
    }
    out
}

/// Writes all monomials up to `degree` at `(x, y)` into `out`, in basis order.
pub fn monomial_values(degree: usize, x: f64, y: f64, out: &mut [f64]) {
    debug_assert!(out.len() >= monomial_count(degree));
    out[0] = 1.0;
    let mut start = 0;
    for d in 1..=degree {
        // row d is row d-1 times x, followed by the last entry times y
        let prev = start;
        start += d;
        for k in 0..d {
            out[start + k] = out[prev + k] * x;
        }
        out[start + d] = out[prev + d - 1] * y;
    }
}

/// Polynomial in the tangent-plane coordinates of its owning cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyCoeffs {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl PolyCoeffs {
    pub fn new(degree: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), monomial_count(degree), "coefficient count does not match degree");
        PolyCoeffs { degree, coeffs }
    }

    pub fn constant(value: f64) -> Self {
        PolyCoeffs {
            degree: 0,
            coeffs: vec![value],
        }
    }
}

/// Evaluates the polynomial at `(x, y)` by nested Horner schemes: for every
/// power of `y`, the `x` polynomial multiplying it.
pub fn evaluate_poly(p: &PolyCoeffs, x: f64, y: f64) -> f64 {
    evaluate_slice(p.degree, &p.coeffs, x, y)
}

pub(crate) fn evaluate_slice(degree: usize, c: &[f64], x: f64, y: f64) -> f64 {
    // index of x^m y^n in graded order: d(d+1)/2 + n with d = m + n
    let idx = |m: usize, n: usize| {
        let d = m + n;
        d * (d + 1) / 2 + n
    };
    let mut outer = 0.0;
    for n in (0..=degree).rev() {
        let mut inner = 0.0;
        for m in (0..=(degree - n)).rev() {
            inner = inner * x + c[idx(m, n)];
        }
        outer = outer * y + inner;
    }
    outer
}
