use crate::error::{Error, Result};
use crate::math;

/// Radial Lévy density `μ(r)` with low singularity, `∫(1∧|y|)μ(|y|)dy < ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevyDensity {
    /// `C·r^{−N−α}` with `α ∈ (0, 1)`.
    PowerLaw { alpha: f64, amplitude: f64 },
    /// `C·𝟙_{r ≤ r₀}`: a bounded, compactly supported jump density.
    CompactBump { radius: f64, amplitude: f64 },
}

impl LevyDensity {
    pub fn power_law(alpha: f64, amplitude: f64) -> Result<Self> {
        let d = LevyDensity::PowerLaw { alpha, amplitude };
        d.validate()?;
        Ok(d)
    }

    pub fn compact_bump(radius: f64, amplitude: f64) -> Result<Self> {
        let d = LevyDensity::CompactBump { radius, amplitude };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LevyDensity::PowerLaw { alpha, amplitude } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::InvalidParameter {
                        name: "alpha",
                        value: alpha,
                        reason: "must lie in (0, 1) for the Levy integral to converge",
                    });
                }
                check_amplitude(amplitude)
            }
            LevyDensity::CompactBump { radius, amplitude } => {
                if !(radius > 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "radius",
                        value: radius,
                        reason: "must be positive and finite",
                    });
                }
                check_amplitude(amplitude)
            }
        }
    }

    #[inline]
    pub fn value(&self, dim: usize, r: f64) -> f64 {
        match *self {
            LevyDensity::PowerLaw { alpha, amplitude } => {
                amplitude * math::pow(r, -(dim as f64) - alpha)
            }
            LevyDensity::CompactBump { radius, amplitude } => {
                if r <= radius {
                    amplitude
                } else {
                    0.0
                }
            }
        }
    }

    pub fn support_radius(&self) -> f64 {
        match *self {
            LevyDensity::PowerLaw { .. } => f64::INFINITY,
            LevyDensity::CompactBump { radius, .. } => radius,
        }
    }
}

fn check_amplitude(amplitude: f64) -> Result<()> {
    if !(amplitude > 0.0) || !amplitude.is_finite() {
        return Err(Error::InvalidParameter {
            name: "amplitude",
            value: amplitude,
            reason: "must be positive and finite",
        });
    }
    Ok(())
}
