//! The narrow-target Schwarz-Christoffel map.
//!
//! `sc_map` is the conformal map of the upper half-plane onto a rectangle
//! sending the prevertices `0, 1, 1+eps, inf` to the corners, given by the
//! contour integral of `1 / (sqrt(xi) sqrt(xi - 1) sqrt(xi - (1+eps)))`.
//! Each square root takes the branch cut along the downward vertical ray from
//! its prevertex and is positive on the real ray to the right of it, which
//! makes the integrand analytic on the closed upper half-plane minus the
//! prevertices and puts the rectangle in the third quadrant: the corners are
//! `0`, `-L_eps`, `-L_eps - i l_eps`, `-i l_eps`.

use num_complex::Complex64;
use thiserror::Error;

use super::elliptic::{l_big_epsilon, l_small_epsilon};
use super::quad::{integrate, QuadError};

pub type ComplexValue = Complex64;

#[derive(Debug, Error)]
pub enum ScError {
    #[error("point lies on a branch cut or at a prevertex")]
    OnCut,
    #[error("point lies outside the closed upper half-plane")]
    OutsideHalfPlane,
    #[error("quadrature failure: {0}")]
    Quadrature(#[from] QuadError),
}

/// Parameters of the narrow-target map; prevertices are fixed at
/// `{0, 1, 1+eps, inf}`.
#[derive(Debug, Clone, Copy)]
pub struct ScMapSpec {
    pub epsilon: f64,
}

impl ScMapSpec {
    pub fn new(epsilon: f64) -> Self {
        assert!(epsilon > 0.0, "epsilon must be positive");
        Self { epsilon }
    }

    pub fn prevertices(&self) -> [f64; 3] {
        [0.0, 1.0, 1.0 + self.epsilon]
    }

    /// Long rectangle side `L_eps` (closed form).
    pub fn side_long(&self) -> f64 {
        l_big_epsilon(self.epsilon)
    }

    /// Short rectangle side `l_eps` (closed form).
    pub fn side_short(&self) -> f64 {
        l_small_epsilon(self.epsilon)
    }
}

/// Square root with the branch cut along the downward vertical ray from 0,
/// positive on the positive real axis: `arg` taken in `[-pi/2, 3 pi/2)`.
fn branch_sqrt_downcut(w: Complex64) -> Complex64 {
    let mut theta = w.im.atan2(w.re);
    if theta < -std::f64::consts::FRAC_PI_2 {
        theta += 2.0 * std::f64::consts::PI;
    }
    Complex64::from_polar(w.norm().sqrt(), 0.5 * theta)
}

/// The Schwarz-Christoffel integrand
/// `1 / (sqrt(xi) sqrt(xi - 1) sqrt(xi - (1+eps)))` with downward cuts.
///
/// Errors if `xi` sits at a prevertex or on one of the cut rays.
pub fn sc_integrand(xi: Complex64, epsilon: f64) -> Result<Complex64, ScError> {
    let mut prod = Complex64::new(1.0, 0.0);
    for a in [0.0, 1.0, 1.0 + epsilon] {
        let w = xi - a;
        if w.norm() == 0.0 || (w.re == 0.0 && w.im < 0.0) {
            return Err(ScError::OnCut);
        }
        prod *= branch_sqrt_downcut(w);
    }
    Ok(prod.finv())
}

/// Raw integrand without the cut checks, for use on contours already known to
/// avoid the cuts.
fn integrand_unchecked(xi: Complex64, epsilon: f64) -> Complex64 {
    (branch_sqrt_downcut(xi)
        * branch_sqrt_downcut(xi - 1.0)
        * branch_sqrt_downcut(xi - (1.0 + epsilon)))
    .finv()
}

const QUAD_TOL: f64 = 1e-12;

/// Integrates the map integrand along the straight segment `a -> b`.
///
/// When an endpoint coincides with a prevertex the local substitution
/// `xi = A + d s^2` removes the inverse-square-root singularity there.
fn integrate_segment(a: Complex64, b: Complex64, eps: f64) -> Result<Complex64, ScError> {
    let prevertices = [0.0, 1.0, 1.0 + eps];
    let is_prevertex =
        |z: Complex64| prevertices.iter().any(|&p| (z - p).norm() < 1e-14 * (1.0 + p));
    let d = b - a;
    if d.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let sing_a = is_prevertex(a);
    let sing_b = is_prevertex(b);
    let value = if sing_a && sing_b {
        // split at the midpoint, substitute at each end
        let m = a + 0.5 * d;
        integrate_segment(a, m, eps)? + integrate_segment(m, b, eps)?
    } else if sing_a {
        // xi = a + d s^2, dxi = 2 s d ds
        integrate(
            |s| integrand_unchecked(a + d * (s * s), eps) * (2.0 * s) * d,
            0.0,
            1.0,
            QUAD_TOL,
        )?
    } else if sing_b {
        // xi = b - d s^2 walking backwards from b
        integrate(
            |s| integrand_unchecked(b - d * (s * s), eps) * (2.0 * s) * d,
            0.0,
            1.0,
            QUAD_TOL,
        )?
    } else {
        integrate(|t| integrand_unchecked(a + d * t, eps) * d, 0.0, 1.0, QUAD_TOL)?
    };
    Ok(value)
}

/// Integrates the map integrand along a polyline contour.
///
/// The contour must stay in the closed upper half-plane and may touch the
/// real axis only at isolated points; prevertex endpoints are handled by the
/// substitution in [`integrate_segment`]. Exposed so tests can compare
/// homotopic contours.
pub fn sc_map_along(contour: &[Complex64], spec: &ScMapSpec) -> Result<Complex64, ScError> {
    let mut total = Complex64::new(0.0, 0.0);
    for pair in contour.windows(2) {
        total += integrate_segment(pair[0], pair[1], spec.epsilon)?;
    }
    Ok(total)
}

/// Evaluates the map at `z` in the closed upper half-plane.
///
/// The default contour rises from 0 to height `h`, runs horizontally above
/// the prevertices, and descends to `z`; the integrand is analytic in the
/// open half-plane so the value is contour-independent.
pub fn sc_map(z: Complex64, spec: &ScMapSpec) -> Result<Complex64, ScError> {
    if z.im < 0.0 {
        return Err(ScError::OutsideHalfPlane);
    }
    if z.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let h = 0.5f64.max(0.5 * z.im.min(4.0));
    let mut contour = vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, h)];
    let top = Complex64::new(z.re, h.max(z.im));
    if (top - *contour.last().unwrap()).norm() > 1e-15 {
        contour.push(top);
    }
    if (z - *contour.last().unwrap()).norm() > 1e-15 {
        contour.push(z);
    }
    sc_map_along(&contour, spec)
}

/// The small-target limit of the map at `z0 = R e^{i theta}`:
/// `lim_{eps -> 0} f_eps(z0) = (e^{-i theta/2} / sqrt(R)) *
/// int_0^1 dt / (sqrt(t) (t - e^{-i theta}/R))`.
///
/// The prefactor is required for agreement with `sc_map` as eps -> 0; see the
/// extrapolation test below.
pub fn limit_f0(z0: Complex64) -> Result<Complex64, ScError> {
    let r = z0.norm();
    let theta = z0.im.atan2(z0.re);
    if r == 0.0 || theta <= 0.0 || theta >= std::f64::consts::PI {
        return Err(ScError::OutsideHalfPlane);
    }
    let w = Complex64::from_polar(1.0 / r, -theta);
    let prefactor = Complex64::from_polar(1.0 / r.sqrt(), -0.5 * theta);
    // t = s^2 removes the sqrt(t) endpoint singularity.
    let integral = integrate(|s| (Complex64::new(s * s, 0.0) - w).finv() * 2.0, 0.0, 1.0, QUAD_TOL)?;
    Ok(prefactor * integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn integrand_real_beyond_last_prevertex() {
        let v = sc_integrand(Complex64::new(3.0, 0.0), 1.0).unwrap();
        assert_abs_diff_eq!(v.re, 1.0 / 6.0f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn integrand_branch_signs_on_real_axis() {
        // on (0, 1) two factors are negative: the integrand is real negative
        let v = sc_integrand(Complex64::new(0.5, 0.0), 0.1).unwrap();
        assert!(v.re < 0.0 && v.im.abs() < 1e-12, "{v}");
        // on (1, 1+eps) one factor is negative: the integrand is imaginary
        let w = sc_integrand(Complex64::new(1.05, 0.0), 0.1).unwrap();
        assert!(w.im.abs() > 1.0 && w.re.abs() < 1e-9, "{w}");
    }

    #[test]
    fn integrand_errors_on_cut_and_prevertex() {
        assert!(sc_integrand(Complex64::new(1.0, 0.0), 0.1).is_err());
        assert!(sc_integrand(Complex64::new(1.0, -0.5), 0.1).is_err());
    }

    #[test]
    fn integrand_continuous_around_i() {
        // small circle around i crosses no cut
        let mut prev: Option<Complex64> = None;
        for k in 0..=64 {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            let xi = Complex64::new(0.0, 1.0) + Complex64::from_polar(0.3, a);
            let v = sc_integrand(xi, 0.1).unwrap();
            if let Some(p) = prev {
                assert!((v - p).norm() < 0.2, "jump near angle {a}");
            }
            prev = Some(v);
        }
    }

    #[test]
    fn map_fixes_origin() {
        let spec = ScMapSpec::new(0.1);
        let v = sc_map(Complex64::new(0.0, 0.0), &spec).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn map_sends_one_to_minus_l() {
        let spec = ScMapSpec::new(0.1);
        let v = sc_map(Complex64::new(1.0, 0.0), &spec).unwrap();
        assert_abs_diff_eq!(v.re, -spec.side_long(), epsilon = 1e-8);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn map_sends_one_plus_eps_to_lower_corner() {
        let spec = ScMapSpec::new(0.1);
        let v = sc_map(Complex64::new(1.1, 0.0), &spec).unwrap();
        assert_abs_diff_eq!(v.re, -spec.side_long(), epsilon = 1e-8);
        assert_abs_diff_eq!(v.im, -spec.side_short(), epsilon = 1e-8);
    }

    #[test]
    fn reference_value_at_i() {
        // Frozen from an independent multiprecision contour integration.
        let spec = ScMapSpec::new(0.1);
        let v = sc_map(Complex64::new(0.0, 1.0), &spec).unwrap();
        assert_abs_diff_eq!(v.re, -0.859911670709, epsilon = 1e-9);
        assert_abs_diff_eq!(v.im, -1.50071699258, epsilon = 1e-9);
    }

    #[test]
    fn contour_independence() {
        // straight polyline vs a semicircular detour, both homotopic in H
        let spec = ScMapSpec::new(0.3);
        let z = Complex64::new(0.6, 1.2);
        let direct = sc_map(z, &spec).unwrap();
        let mut arc: Vec<Complex64> = vec![Complex64::new(0.0, 0.0)];
        // semicircle from 0 to z bulging leftwards
        let c = 0.5 * z;
        let rad = c.norm();
        let base = (z - c).im.atan2((z - c).re);
        for k in 0..=64 {
            let a = base + std::f64::consts::PI - k as f64 * std::f64::consts::PI / 64.0;
            let p = c + Complex64::from_polar(rad, a);
            if p.im > 1e-12 || k == 64 {
                arc.push(p);
            }
        }
        let via_arc = sc_map_along(&arc, &spec).unwrap();
        assert!(
            (direct - via_arc).norm() < 1e-9,
            "{direct} vs {via_arc}"
        );
    }

    #[test]
    fn limit_requires_prefactor() {
        // eps -> 0 extrapolation oracle: limit_f0 must agree with sc_map at
        // eps = 1e-8 to 1e-3 (resolves the prefactor question in favour of
        // keeping e^{-i theta/2} / sqrt(R)).
        let z0 = Complex64::new(0.0, 1.0);
        let lim = limit_f0(z0).unwrap();
        let near = sc_map(z0, &ScMapSpec::new(1e-8)).unwrap();
        assert!((lim - near).norm() < 1e-3, "{lim} vs {near}");
        // and the version without the prefactor does not
        let w = Complex64::new(0.0, -1.0);
        let no_pref = integrate(
            |s| (Complex64::new(s * s, 0.0) - w).finv() * 2.0,
            0.0,
            1.0,
            1e-12,
        )
        .unwrap();
        assert!((no_pref - near).norm() > 0.5);
    }

    #[test]
    fn limit_at_i_matches_small_eps_map() {
        let z0 = Complex64::new(0.0, 1.0);
        let lim = limit_f0(z0).unwrap();
        let near = sc_map(z0, &ScMapSpec::new(1e-6)).unwrap();
        assert!((lim - near).norm() < 1e-2);
        // known closed form: Re lim = -ln(1 + sqrt 2)
        assert_abs_diff_eq!(lim.re, -(1.0 + 2.0f64.sqrt()).ln(), epsilon = 1e-9);
    }

    #[test]
    fn limit_image_lies_in_left_half_strip() {
        for &(re, im) in &[(0.0, 1.0), (0.5, 0.5), (-1.0, 2.0), (2.0, 0.3)] {
            let v = limit_f0(Complex64::new(re, im)).unwrap();
            assert!(v.re < 0.0, "Re limit_f0({re}+{im}i) = {} >= 0", v.re);
            assert!(v.im.is_finite() && v.im.abs() < 10.0);
        }
    }

    #[test]
    fn limit_rejects_boundary_start() {
        assert!(limit_f0(Complex64::new(1.0, 0.0)).is_err());
        assert!(limit_f0(Complex64::new(-1.0, 0.0)).is_err());
    }

    #[test]
    fn vertex_angles_are_right() {
        // approach the corner at 1 along the two boundary directions and
        // check the image turns by pi/2 (within 1e-6 rad at moderate eps)
        let spec = ScMapSpec::new(0.5);
        let f1 = sc_map(Complex64::new(1.0, 0.0), &spec).unwrap();
        let d = 1e-6;
        let before = sc_map(Complex64::new(1.0 - d, 0.0), &spec).unwrap();
        let after = sc_map(Complex64::new(1.0 + d, 0.0), &spec).unwrap();
        let v1 = f1 - before;
        let v2 = after - f1;
        let angle = (v2 / v1).arg().abs();
        assert!(
            (angle - std::f64::consts::FRAC_PI_2).abs() < 1e-5,
            "corner angle {angle}"
        );
    }
}
