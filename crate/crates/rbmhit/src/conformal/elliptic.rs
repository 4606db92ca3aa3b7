//! Complete elliptic integral of the first kind via the arithmetic-geometric
//! mean, and the rectangle side lengths of the narrow-target half-plane map.
//!
//! Modulus convention: `K(k) = int_0^{pi/2} dtheta / sqrt(1 - k^2 sin^2 theta)`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EllipticError {
    #[error("modulus must satisfy 0 <= k < 1, got {0}")]
    ModulusOutOfRange(f64),
}

/// `K(k)` by AGM iteration, relative tolerance 1e-13.
///
/// `K(k) = pi / (2 agm(1, k'))` with `k' = sqrt(1 - k^2)`; the iteration
/// converges quadratically.
pub fn elliptic_k(k: f64) -> Result<f64, EllipticError> {
    if !(0.0..1.0).contains(&k) {
        return Err(EllipticError::ModulusOutOfRange(k));
    }
    Ok(elliptic_k_from_complement(((1.0 - k) * (1.0 + k)).sqrt()))
}

/// `K(k)` from the complementary modulus `k' = sqrt(1 - k^2)`; usable when
/// `k` itself would round to 1.
fn elliptic_k_from_complement(kp: f64) -> f64 {
    let mut a = 1.0f64;
    let mut b = kp;
    for _ in 0..60 {
        if (a - b).abs() <= 1e-13 * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    std::f64::consts::PI / (2.0 * a)
}

/// Long side of the image rectangle of the narrow-target half-plane map:
/// `L_eps = int_0^1 dxi / sqrt(xi (1-xi) (1+eps-xi)) = 2 K(1/sqrt(1+eps)) / sqrt(1+eps)`.
pub fn l_big_epsilon(eps: f64) -> f64 {
    let s = (1.0 + eps).sqrt();
    // complementary modulus sqrt(eps/(1+eps)) stays representable for
    // eps far below f64 resolution of 1/sqrt(1+eps)
    2.0 * elliptic_k_from_complement((eps / (1.0 + eps)).sqrt()) / s
}

/// Short side: `l_eps = int_1^{1+eps} dxi / sqrt(xi (xi-1) (1+eps-xi))
/// = 2 K(sqrt(eps/(1+eps))) / sqrt(1+eps)` (conjugate modulus of `L_eps`).
pub fn l_small_epsilon(eps: f64) -> f64 {
    let s = (1.0 + eps).sqrt();
    2.0 * elliptic_k((eps / (1.0 + eps)).sqrt()).expect("modulus < 1") / s
}
