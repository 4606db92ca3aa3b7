//! Conformal machinery: adaptive complex quadrature, complete elliptic
//! integrals, the narrow-target half-plane map, and Mobius transformations.

pub mod elliptic;
pub mod mobius;
pub mod quad;
pub mod sc;

pub use elliptic::{elliptic_k, l_big_epsilon, l_small_epsilon, EllipticError};
pub use mobius::{disk_to_half_plane, half_plane_to_disk, mobius_apply, MobiusError, MobiusMap};
pub use quad::{integrate, integrate_real, QuadError};
pub use sc::{limit_f0, sc_integrand, sc_map, sc_map_along, ComplexValue, ScError, ScMapSpec};
