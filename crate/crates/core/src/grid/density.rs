use crate::geometry::{geodesic_distance, SpherePoint};

/// Lloyd density function. Cell spacing scales like `ρ^(-1/4)`.
#[derive(Clone, Debug, PartialEq)]
pub enum DensityFunction {
    Uniform,
    /// `ρ(p) = (γ + (1 − γ)·exp(−(d(p, c)/σ)²))⁴`: spacing at the center is
    /// `γ` times the far-field spacing.
    GaussianRefinement {
        center: SpherePoint,
        /// σ in radians.
        width: f64,
        /// γ, the spacing ratio between the refined core and the far field.
        spacing_ratio: f64,
    },
}

impl DensityFunction {
    /// Synthetic stand-in for a topography-based refinement over the Andes:
    /// centered at (70°W, 20°S), σ = 20°, three times finer spacing.
    pub fn synthetic_andes() -> Self {
        DensityFunction::GaussianRefinement {
            center: SpherePoint::from_lon_lat((-70f64).to_radians(), (-20f64).to_radians()),
            width: 20f64.to_radians(),
            spacing_ratio: 1.0 / 3.0,
        }
    }

    pub fn eval(&self, p: &SpherePoint) -> f64 {
        match self {
            DensityFunction::Uniform => 1.0,
            DensityFunction::GaussianRefinement {
                center,
                width,
                spacing_ratio,
            } => {
                let d = geodesic_distance(p, center) / width;
                let g = spacing_ratio + (1.0 - spacing_ratio) * (-d * d).exp();
                g.powi(4)
            }
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, DensityFunction::Uniform)
    }

    /// Short tag stored in grid files and CSV output.
    pub fn tag(&self) -> String {
        match self {
            DensityFunction::Uniform => "uniform".into(),
            DensityFunction::GaussianRefinement {
                center,
                width,
                spacing_ratio,
            } => format!(
                "synthetic-gauss(lon={:.4},lat={:.4},sigma={:.4},ratio={:.4})",
                center.lon().to_degrees(),
                center.lat().to_degrees(),
                width.to_degrees(),
                spacing_ratio
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn andes_density_contrast() {
        let d = DensityFunction::synthetic_andes();
        let DensityFunction::GaussianRefinement { center, .. } = &d else {
            unreachable!()
        };
        let far = SpherePoint::from_lon_lat(110f64.to_radians(), 20f64.to_radians());
        let ratio = d.eval(center) / d.eval(&far);
        // spacing ratio 3 ⇒ density ratio 3⁴
        assert!((ratio - 81.0).abs() < 1e-6, "{ratio}");
        assert!(d.eval(&far) > 0.0);
    }
}
