//! Real Mobius transformations and the Cayley map between the upper
//! half-plane and the unit disk.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MobiusError {
    #[error("coefficients are degenerate: ad - bc = {0}")]
    Degenerate(f64),
    #[error("evaluation at the pole of the transformation")]
    AtPole,
}

/// `z -> (a z + b) / (c z + d)` with real coefficients, normalised so that
/// `ad - bc = 1`. Real coefficients preserve the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl MobiusMap {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, MobiusError> {
        let det = a * d - b * c;
        if det.abs() < 1e-300 {
            return Err(MobiusError::Degenerate(det));
        }
        let s = det.abs().sqrt() * det.signum();
        Ok(Self {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    pub fn identity() -> Self {
        Self {
            a: 1.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Composition `self after other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn apply(&self, z: Complex64) -> Result<Complex64, MobiusError> {
        mobius_apply(self, z)
    }
}

pub fn mobius_apply(m: &MobiusMap, z: Complex64) -> Result<Complex64, MobiusError> {
    let denom = m.c * z + m.d;
    if denom.norm() < 1e-300 {
        return Err(MobiusError::AtPole);
    }
    Ok((m.a * z + m.b) / denom)
}

/// The Cayley map `z -> i (z - i) / (z + i)` taking the upper half-plane onto
/// the unit disk, with `i -> 0` and the real axis onto the unit circle.
pub fn half_plane_to_disk(z: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    i * (z - i) / (z + i)
}

/// Inverse of [`half_plane_to_disk`]: `w -> i (i + w) / (i - w)`.
pub fn disk_to_half_plane(w: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    i * (i + w) / (i - w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cayley_sends_i_to_origin() {
        let w = half_plane_to_disk(Complex64::new(0.0, 1.0));
        assert!(w.norm() < 1e-15);
    }

    #[test]
    fn cayley_sends_real_axis_to_circle() {
        for x in [-5.0, -1.0, 0.0, 0.3, 2.0, 100.0] {
            let w = half_plane_to_disk(Complex64::new(x, 0.0));
            assert!((w.norm() - 1.0).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn cayley_round_trip() {
        for &(re, im) in &[(0.0, 1.0), (0.5, 2.0), (-3.0, 0.1)] {
            let z = Complex64::new(re, im);
            let back = disk_to_half_plane(half_plane_to_disk(z));
            assert!((z - back).norm() < 1e-13);
        }
    }

    #[test]
    fn normalisation_and_inverse() {
        let m = MobiusMap::new(2.0, 1.0, 0.0, 2.0).unwrap();
        assert!((m.a * m.d - m.b * m.c - 1.0).abs() < 1e-14);
        let z = Complex64::new(0.3, 0.7);
        let w = m.apply(z).unwrap();
        let back = m.inverse().apply(w).unwrap();
        assert!((z - back).norm() < 1e-14);
    }

    #[test]
    fn composition_with_inverse_is_identity() {
        let m = MobiusMap::new(1.0, 2.0, 3.0, 7.0).unwrap();
        let id = m.compose(&m.inverse());
        let z = Complex64::new(-0.4, 1.2);
        assert!((id.apply(z).unwrap() - z).norm() < 1e-14);
    }

    #[test]
    fn degenerate_coefficients_rejected() {
        assert_eq!(
            MobiusMap::new(1.0, 2.0, 2.0, 4.0),
            Err(MobiusError::Degenerate(0.0))
        );
    }

    #[test]
    fn evaluation_at_pole_is_an_error() {
        let m = MobiusMap::new(0.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(m.apply(Complex64::new(0.0, 0.0)), Err(MobiusError::AtPole));
    }
}
