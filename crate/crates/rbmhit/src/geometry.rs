//! Domain catalog, boundary partitions, and point classification.
//!
//! Each domain in the catalog carries its boundary in natural coordinates:
//! the real line for the half-plane, two vertical walls for the strip, angular
//! arcs for the disk, concentric spheres for the annulus, and a plane-plus-
//! hemisphere pair for the half-ball. A [`BoundaryPartition`] splits that
//! boundary into target, absorbing, and reflecting sets; [`classify_point`]
//! is the single authority every simulator and oracle defers to.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative boundary tolerance: a point within `BOUNDARY_TOL * scale` of the
/// boundary counts as a boundary point.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("point lies outside the closed domain")]
    OutsideDomain,
    #[error("point dimension {got} does not match domain dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("partition {partition} is not defined on domain {domain}")]
    IncompatiblePartition {
        domain: &'static str,
        partition: &'static str,
    },
    #[error("invalid domain parameters: {0}")]
    BadDomain(String),
}

/// One of the catalog simulation domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DomainSpec {
    /// Upper half-plane `{Im z > 0}`; boundary is the real line.
    HalfPlane2D,
    /// Vertical strip `{-length < Re z < 0}`, unbounded in Im.
    Strip2D { length: f64 },
    /// Rectangle `(-length, 0) x (0, width)`.
    Rectangle2D { length: f64, width: f64 },
    /// Disk of the given radius centred at the origin.
    Disk2D { radius: f64 },
    /// n-dimensional spherical shell `{r_inner < |x| < r_outer}`.
    Annulus {
        dim: usize,
        r_inner: f64,
        r_outer: f64,
    },
    /// Half-space `{x_1 > 0}` in n dimensions.
    HalfSpaceND { dim: usize },
    /// Half-ball `{x_1 > 0, |x| < radius}`.
    HalfBallND { dim: usize, radius: f64 },
}

impl DomainSpec {
    pub fn dimension(&self) -> usize {
        match *self {
            DomainSpec::HalfPlane2D
            | DomainSpec::Strip2D { .. }
            | DomainSpec::Rectangle2D { .. }
            | DomainSpec::Disk2D { .. } => 2,
            DomainSpec::Annulus { dim, .. }
            | DomainSpec::HalfSpaceND { dim }
            | DomainSpec::HalfBallND { dim, .. } => dim,
        }
    }

    /// Characteristic length used to scale the boundary tolerance.
    pub fn scale(&self) -> f64 {
        match *self {
            DomainSpec::HalfPlane2D | DomainSpec::HalfSpaceND { .. } => 1.0,
            DomainSpec::Strip2D { length } => length,
            DomainSpec::Rectangle2D { length, width } => length.max(width),
            DomainSpec::Disk2D { radius } | DomainSpec::HalfBallND { radius, .. } => radius,
            DomainSpec::Annulus { r_outer, .. } => r_outer,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: &str| Err(GeometryError::BadDomain(msg.to_string()));
        match *self {
            DomainSpec::HalfPlane2D => Ok(()),
            DomainSpec::Strip2D { length } => {
                if length > 0.0 {
                    Ok(())
                } else {
                    bad("strip length must be positive")
                }
            }
            DomainSpec::Rectangle2D { length, width } => {
                if length > 0.0 && width > 0.0 {
                    Ok(())
                } else {
                    bad("rectangle sides must be positive")
                }
            }
            DomainSpec::Disk2D { radius } => {
                if radius > 0.0 {
                    Ok(())
                } else {
                    bad("disk radius must be positive")
                }
            }
            DomainSpec::Annulus {
                dim,
                r_inner,
                r_outer,
            } => {
                if dim < 2 {
                    bad("annulus dimension must be at least 2")
                } else if !(0.0 < r_inner && r_inner < r_outer) {
                    bad("annulus needs 0 < r_inner < r_outer")
                } else {
                    Ok(())
                }
            }
            DomainSpec::HalfSpaceND { dim } => {
                if dim >= 2 {
                    Ok(())
                } else {
                    bad("half-space dimension must be at least 2")
                }
            }
            DomainSpec::HalfBallND { dim, radius } => {
                if dim < 2 {
                    bad("half-ball dimension must be at least 2")
                } else if radius <= 0.0 {
                    bad("half-ball radius must be positive")
                } else {
                    Ok(())
                }
            }
        }
    }

    fn name(&self) -> &'static str {
        match self {
            DomainSpec::HalfPlane2D => "HalfPlane2D",
            DomainSpec::Strip2D { .. } => "Strip2D",
            DomainSpec::Rectangle2D { .. } => "Rectangle2D",
            DomainSpec::Disk2D { .. } => "Disk2D",
            DomainSpec::Annulus { .. } => "Annulus",
            DomainSpec::HalfSpaceND { .. } => "HalfSpaceND",
            DomainSpec::HalfBallND { .. } => "HalfBallND",
        }
    }
}

/// Disjoint target / absorbing / reflecting decomposition of a domain
/// boundary, in the domain's natural boundary coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "partition", rename_all = "snake_case")]
pub enum BoundaryPartition {
    /// Half-plane layout with a narrow target next to a long absorbing ray:
    /// target `[1, 1+eps]`, absorbing `(-inf, 0]`, reflecting the rest of the
    /// real line.
    HalfPlaneNarrowTarget { epsilon: f64 },
    /// Half-plane with target interval `[a, b]` and the rest of the real line
    /// absorbing (plain absorbed Brownian motion; no reflecting part).
    HalfPlaneInterval { a: f64, b: f64 },
    /// Strip with target wall `Re = -length` and absorbing wall `Re = 0`.
    StripEnds,
    /// Rectangle with target wall `Re = -length`, absorbing wall `Re = 0`,
    /// and reflecting sides `Im = 0` and `Im = width`.
    RectangleEnds,
    /// Disk with a target arc and an absorbing arc (angles in radians,
    /// counterclockwise, classified modulo 2 pi); the rest reflects.
    DiskArcs {
        target: (f64, f64),
        absorbing: (f64, f64),
    },
    /// Annulus with target inner sphere and absorbing outer sphere.
    AnnulusShells,
    /// Half-space wall with a spherical-cap target of radius `epsilon` at the
    /// origin, absorbing wall beyond `absorb_radius`, reflecting in between.
    HalfSpaceWall { epsilon: f64, absorb_radius: f64 },
    /// Half-ball with a disk target of radius `epsilon` at the centre of the
    /// flat wall, the rest of the flat wall reflecting, and the spherical
    /// shell absorbing.
    HalfBallWallTarget { epsilon: f64 },
}

impl BoundaryPartition {
    /// Target size parameter, where the partition has one.
    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            BoundaryPartition::HalfPlaneNarrowTarget { epsilon }
            | BoundaryPartition::HalfSpaceWall { epsilon, .. }
            | BoundaryPartition::HalfBallWallTarget { epsilon } => Some(epsilon),
            BoundaryPartition::HalfPlaneInterval { a, b } => Some(b - a),
            _ => None,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            BoundaryPartition::HalfPlaneNarrowTarget { .. } => "HalfPlaneNarrowTarget",
            BoundaryPartition::HalfPlaneInterval { .. } => "HalfPlaneInterval",
            BoundaryPartition::StripEnds => "StripEnds",
            BoundaryPartition::RectangleEnds => "RectangleEnds",
            BoundaryPartition::DiskArcs { .. } => "DiskArcs",
            BoundaryPartition::AnnulusShells => "AnnulusShells",
            BoundaryPartition::HalfSpaceWall { .. } => "HalfSpaceWall",
            BoundaryPartition::HalfBallWallTarget { .. } => "HalfBallWallTarget",
        }
    }

    pub fn compatible_with(&self, domain: &DomainSpec) -> bool {
        matches!(
            (domain, self),
            (
                DomainSpec::HalfPlane2D,
                BoundaryPartition::HalfPlaneNarrowTarget { .. }
                    | BoundaryPartition::HalfPlaneInterval { .. }
            ) | (DomainSpec::Strip2D { .. }, BoundaryPartition::StripEnds)
                | (
                    DomainSpec::Rectangle2D { .. },
                    BoundaryPartition::RectangleEnds
                )
                | (DomainSpec::Disk2D { .. }, BoundaryPartition::DiskArcs { .. })
                | (DomainSpec::Annulus { .. }, BoundaryPartition::AnnulusShells)
                | (
                    DomainSpec::HalfSpaceND { .. },
                    BoundaryPartition::HalfSpaceWall { .. }
                )
                | (
                    DomainSpec::HalfBallND { .. },
                    BoundaryPartition::HalfBallWallTarget { .. }
                )
        )
    }
}

/// Classification of a point relative to a partitioned boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryClass {
    Target,
    Absorbing,
    Reflecting,
    Interior,
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Angle of `(x, y)` normalised into `[0, 2 pi)`.
fn angle_of(x: f64, y: f64) -> f64 {
    let a = y.atan2(x);
    if a < 0.0 {
        a + 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// True when `angle` lies in the closed arc from `a0` counterclockwise to
/// `a1` (all angles taken mod 2 pi), within `tol`.
fn in_arc(angle: f64, (a0, a1): (f64, f64), tol: f64) -> bool {
    let two_pi = 2.0 * std::f64::consts::PI;
    let span = (a1 - a0).rem_euclid(two_pi);
    let rel = (angle - a0).rem_euclid(two_pi);
    rel <= span + tol || rel >= two_pi - tol
}

/// Classifies `p` as target, absorbing, reflecting, or interior.
///
/// Points on the closed overlap of target and absorbing classify as target:
/// a measure-zero choice, fixed for reproducibility. Errors if `p` lies
/// outside the closed domain by more than the boundary tolerance.
pub fn classify_point(
    domain: &DomainSpec,
    partition: &BoundaryPartition,
    p: &[f64],
) -> Result<BoundaryClass, GeometryError> {
    if p.len() != domain.dimension() {
        return Err(GeometryError::DimensionMismatch {
            got: p.len(),
            want: domain.dimension(),
        });
    }
    if !partition.compatible_with(domain) {
        return Err(GeometryError::IncompatiblePartition {
            domain: domain.name(),
            partition: partition.name(),
        });
    }
    let tol = BOUNDARY_TOL * domain.scale();

    match (*domain, *partition) {
        (DomainSpec::HalfPlane2D, part) => {
            let (x, y) = (p[0], p[1]);
            if y < -tol {
                return Err(GeometryError::OutsideDomain);
            }
            if y > tol {
                return Ok(BoundaryClass::Interior);
            }
            Ok(match part {
                BoundaryPartition::HalfPlaneNarrowTarget { epsilon } => {
                    if (1.0 - tol..=1.0 + epsilon + tol).contains(&x) {
                        BoundaryClass::Target
                    } else if x <= tol {
                        BoundaryClass::Absorbing
                    } else {
                        BoundaryClass::Reflecting
                    }
                }
                BoundaryPartition::HalfPlaneInterval { a, b } => {
                    if (a - tol..=b + tol).contains(&x) {
                        BoundaryClass::Target
                    } else {
                        BoundaryClass::Absorbing
                    }
                }
                _ => unreachable!("checked by compatible_with"),
            })
        }
        (DomainSpec::Strip2D { length }, BoundaryPartition::StripEnds) => {
            let x = p[0];
            if x < -length - tol || x > tol {
                Err(GeometryError::OutsideDomain)
            } else if x <= -length + tol {
                Ok(BoundaryClass::Target)
            } else if x >= -tol {
                Ok(BoundaryClass::Absorbing)
            } else {
                Ok(BoundaryClass::Interior)
            }
        }
        (DomainSpec::Rectangle2D { length, width }, BoundaryPartition::RectangleEnds) => {
            let (x, y) = (p[0], p[1]);
            if x < -length - tol || x > tol || y < -tol || y > width + tol {
                Err(GeometryError::OutsideDomain)
            } else if x <= -length + tol {
                Ok(BoundaryClass::Target)
            } else if x >= -tol {
                Ok(BoundaryClass::Absorbing)
            } else if y <= tol || y >= width - tol {
                Ok(BoundaryClass::Reflecting)
            } else {
                Ok(BoundaryClass::Interior)
            }
        }
        (DomainSpec::Disk2D { radius }, BoundaryPartition::DiskArcs { target, absorbing }) => {
            let r = norm(p);
            if r > radius + tol {
                Err(GeometryError::OutsideDomain)
            } else if r < radius - tol {
                Ok(BoundaryClass::Interior)
            } else {
                let a = angle_of(p[0], p[1]);
                let atol = tol / radius;
                if in_arc(a, target, atol) {
                    Ok(BoundaryClass::Target)
                } else if in_arc(a, absorbing, atol) {
                    Ok(BoundaryClass::Absorbing)
                } else {
                    Ok(BoundaryClass::Reflecting)
                }
            }
        }
        (
            DomainSpec::Annulus {
                r_inner, r_outer, ..
            },
            BoundaryPartition::AnnulusShells,
        ) => {
            let r = norm(p);
            if r < r_inner - tol || r > r_outer + tol {
                Err(GeometryError::OutsideDomain)
            } else if r <= r_inner + tol {
                Ok(BoundaryClass::Target)
            } else if r >= r_outer - tol {
                Ok(BoundaryClass::Absorbing)
            } else {
                Ok(BoundaryClass::Interior)
            }
        }
        (
            DomainSpec::HalfSpaceND { .. },
            BoundaryPartition::HalfSpaceWall {
                epsilon,
                absorb_radius,
            },
        ) => {
            let z = p[0];
            if z < -tol {
                Err(GeometryError::OutsideDomain)
            } else if z > tol {
                Ok(BoundaryClass::Interior)
            } else {
                let rho = norm(&p[1..]);
                if rho <= epsilon + tol {
                    Ok(BoundaryClass::Target)
                } else if rho >= absorb_radius - tol {
                    Ok(BoundaryClass::Absorbing)
                } else {
                    Ok(BoundaryClass::Reflecting)
                }
            }
        }
        (
            DomainSpec::HalfBallND { radius, .. },
            BoundaryPartition::HalfBallWallTarget { epsilon },
        ) => {
            let z = p[0];
            let r = norm(p);
            if z < -tol || r > radius + tol {
                Err(GeometryError::OutsideDomain)
            } else if z <= tol {
                // flat wall; target takes precedence at the rim overlap
                let rho = norm(&p[1..]);
                if rho <= epsilon + tol {
                    Ok(BoundaryClass::Target)
                } else if r >= radius - tol {
                    Ok(BoundaryClass::Absorbing)
                } else {
                    Ok(BoundaryClass::Reflecting)
                }
            } else if r >= radius - tol {
                Ok(BoundaryClass::Absorbing)
            } else {
                Ok(BoundaryClass::Interior)
            }
        }
        _ => unreachable!("checked by compatible_with"),
    }
}

/// Euclidean distance from an interior point to the domain boundary.
pub fn distance_to_boundary(domain: &DomainSpec, p: &[f64]) -> Result<f64, GeometryError> {
    if p.len() != domain.dimension() {
        return Err(GeometryError::DimensionMismatch {
            got: p.len(),
            want: domain.dimension(),
        });
    }
    let tol = BOUNDARY_TOL * domain.scale();
    let d = match *domain {
        DomainSpec::HalfPlane2D => p[1],
        DomainSpec::Strip2D { length } => (p[0] + length).min(-p[0]),
        DomainSpec::Rectangle2D { length, width } => {
            (p[0] + length).min(-p[0]).min(p[1]).min(width - p[1])
        }
        DomainSpec::Disk2D { radius } => radius - norm(p),
        DomainSpec::Annulus {
            r_inner, r_outer, ..
        } => {
            let r = norm(p);
            (r - r_inner).min(r_outer - r)
        }
        DomainSpec::HalfSpaceND { .. } => p[0],
        DomainSpec::HalfBallND { radius, .. } => p[0].min(radius - norm(p)),
    };
    if d < -tol {
        Err(GeometryError::OutsideDomain)
    } else {
        Ok(d.max(0.0))
    }
}

/// Triangle-wave fold of `Im z` onto `[0, 1]`.
///
/// Identifies reflected Brownian motion in the unit-height rectangle with
/// Brownian motion in the strip: the fold is the pointwise limit of the
/// iterated reflections `h_0(z) = |Im z|`, `h_n = 1 - |1 - |h_{n-1}||`,
/// evaluated in closed form.
pub fn fold_strip(z: Complex64) -> f64 {
    fold_unit(z.im)
}

/// Triangle-wave fold of a real coordinate onto `[0, 1]`.
pub fn fold_unit(y: f64) -> f64 {
    let m = y.abs() % 2.0;
    1.0 - (1.0 - m).abs()
}

/// Fold onto `[0, width]` (reflection between two parallel walls).
pub fn fold_interval(y: f64, width: f64) -> f64 {
    width * fold_unit(y / width)
}
