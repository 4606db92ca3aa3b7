//! Reflected Brownian path simulation and the hitting-probability estimator.
//!
//! The walker is Euler-Maruyama with exact absolute-value folding of the
//! coordinate normal to a flat reflecting wall, mirror reflection across
//! curved reflecting walls, linear interpolation of the boundary-crossing
//! location on mixed walls, and optional Brownian-bridge corrections for
//! intra-step wall excursions.
//!
//! The half-plane narrow-target partition gets a different treatment: the
//! wall-touch time and location are sampled exactly (the normal coordinate is
//! an independent folded Brownian motion, so the first touch happens at
//! `tau = y^2 / Z^2` with `Z` standard normal and the tangential coordinate
//! smears by `N(0, tau)`). Exit times there have the heavy tail
//! `P(tau > t) ~ t^{-1/4}`, which fixed-step walking cannot exhaust; the
//! touch-jump form costs O(1) per wall visit regardless of how long the
//! excursion between visits lasts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    classify_point, fold_interval, BoundaryClass, BoundaryPartition, DomainSpec, GeometryError,
};
use crate::rng::{seed_path_rng, RngStream};
use crate::stats::{binomial_estimate_seeded, Estimate, StatsError};

#[derive(Debug, Error)]
pub enum SdeError {
    #[error("start point must lie strictly inside the domain")]
    StartNotInterior,
    #[error("invalid simulation config: {0}")]
    BadConfig(String),
    #[error("bridge probability requires non-negative wall distances, got ({0}, {1})")]
    NegativeBridgeDistance(f64, f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Walker position and elapsed time along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub position: Vec<f64>,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeClass {
    HitTarget,
    HitAbsorbing,
    Timeout,
}

/// Terminal record of one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub class: OutcomeClass,
    pub exit_point: Vec<f64>,
    pub exit_time: f64,
    pub steps: u64,
}

/// Discretisation and replication parameters shared by all experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub max_time: f64,
    pub bridge_correction: bool,
    pub master_seed: u64,
    pub n_paths: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SdeError> {
        if !(self.dt > 0.0) {
            return Err(SdeError::BadConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.max_time >= self.dt) {
            return Err(SdeError::BadConfig(format!(
                "max_time ({}) must be at least dt ({})",
                self.max_time, self.dt
            )));
        }
        if self.n_paths == 0 {
            return Err(SdeError::BadConfig("n_paths must be at least 1".into()));
        }
        Ok(())
    }
}

/// An [`Estimate`] plus horizon diagnostics. Timed-out paths count as
/// non-hits; a timeout fraction above 1% sets the warning flag, which signals
/// that `max_time` is too short for the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HitEstimate {
    pub estimate: Estimate,
    pub n_timeouts: u64,
    pub timeout_fraction: f64,
    pub timeout_warning: bool,
}

/// Probability that a Brownian bridge over one step of length `dt`, running
/// between wall distances `y0` and `y1`, touches the wall: `exp(-2 y0 y1 / dt)`.
pub fn bridge_crossing_probability(y0: f64, y1: f64, dt: f64) -> Result<f64, SdeError> {
    if y0 < 0.0 || y1 < 0.0 {
        return Err(SdeError::NegativeBridgeDistance(y0, y1));
    }
    if !(dt > 0.0) {
        return Err(SdeError::BadConfig(format!("dt must be positive, got {dt}")));
    }
    Ok((-2.0 * y0 * y1 / dt).exp())
}

/// Applies one step's Brownian increments `dw` to `position`, folding at the
/// domain's reflecting structure. Pure increment plumbing, split out from
/// [`step_reflected`] so the folding rules are testable with chosen
/// increments.
pub fn step_from_increments(domain: &DomainSpec, position: &[f64], dw: &[f64]) -> Vec<f64> {
    assert_eq!(position.len(), dw.len());
    let mut p: Vec<f64> = position.iter().zip(dw).map(|(x, d)| x + d).collect();
    match *domain {
        DomainSpec::HalfPlane2D => p[1] = p[1].abs(),
        DomainSpec::HalfSpaceND { .. } | DomainSpec::HalfBallND { .. } => p[0] = p[0].abs(),
        DomainSpec::Rectangle2D { width, .. } => p[1] = fold_interval(p[1], width),
        DomainSpec::Strip2D { .. } => {}
        DomainSpec::Disk2D { radius } => {
            let r = norm(&p);
            if r > radius {
                // mirror across the circle; curvature error is O(dt)
                let rf = (2.0 * radius - r).max(0.0);
                scale_to_radius(&mut p, rf);
            }
        }
        DomainSpec::Annulus {
            r_inner, r_outer, ..
        } => {
            let r = norm(&p);
            if r > r_outer {
                scale_to_radius(&mut p, (2.0 * r_outer - r).max(r_inner));
            } else if r < r_inner {
                scale_to_radius(&mut p, (2.0 * r_inner - r).min(r_outer));
            }
        }
    }
    if let DomainSpec::HalfBallND { radius, .. } = *domain {
        let r = norm(&p);
        if r > radius {
            let rf = (2.0 * radius - r).max(0.0);
            scale_to_radius(&mut p, rf);
        }
    }
    p
}

/// One Euler-Maruyama step of duration `dt` with every boundary treated as
/// reflecting.
pub fn step_reflected(
    domain: &DomainSpec,
    s: &PathState,
    dt: f64,
    rng: &mut RngStream,
) -> PathState {
    let sd = dt.sqrt();
    let dw: Vec<f64> = (0..s.position.len()).map(|_| sd * rng.normal()).collect();
    let position = step_from_increments(domain, &s.position, &dw);
    debug_assert!(normal_coordinate_ok(domain, &position));
    PathState {
        position,
        time: s.time + dt,
    }
}

fn normal_coordinate_ok(domain: &DomainSpec, p: &[f64]) -> bool {
    match *domain {
        DomainSpec::HalfPlane2D => p[1] >= 0.0,
        DomainSpec::HalfSpaceND { .. } | DomainSpec::HalfBallND { .. } => p[0] >= 0.0,
        _ => true,
    }
}

fn norm(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn scale_to_radius(p: &mut [f64], r: f64) {
    let n = norm(p);
    if n > 0.0 {
        let f = r / n;
        for x in p.iter_mut() {
            *x *= f;
        }
    }
}

/// Runs one path until it hits the target or absorbing boundary, or the
/// horizon elapses. The start must be strictly interior.
pub fn run_path(
    domain: &DomainSpec,
    partition: &BoundaryPartition,
    start: &[f64],
    cfg: &SimConfig,
    rng: &mut RngStream,
) -> Result<PathOutcome, SdeError> {
    cfg.validate()?;
    domain.validate()?;
    if classify_point(domain, partition, start)? != BoundaryClass::Interior {
        return Err(SdeError::StartNotInterior);
    }
    Ok(run_path_unchecked(domain, partition, start, cfg, rng))
}

/// [`run_path`] minus the precondition checks, for use in the hot path after
/// the estimator has validated once.
fn run_path_unchecked(
    domain: &DomainSpec,
    partition: &BoundaryPartition,
    start: &[f64],
    cfg: &SimConfig,
    rng: &mut RngStream,
) -> PathOutcome {
    match (*domain, *partition) {
        (DomainSpec::HalfPlane2D, BoundaryPartition::HalfPlaneNarrowTarget { epsilon }) => {
            run_half_plane_narrow(start, epsilon, cfg, rng)
        }
        (DomainSpec::HalfPlane2D, BoundaryPartition::HalfPlaneInterval { a, b }) => {
            run_half_plane_interval(start, a, b, cfg, rng)
        }
        (DomainSpec::Strip2D { length }, BoundaryPartition::StripEnds) => {
            run_two_wall(start, length, f64::INFINITY, cfg, rng)
        }
        (DomainSpec::Rectangle2D { length, width }, BoundaryPartition::RectangleEnds) => {
            run_two_wall(start, length, width, cfg, rng)
        }
        (DomainSpec::Disk2D { radius }, BoundaryPartition::DiskArcs { .. }) => {
            run_disk(start, radius, domain, partition, cfg, rng)
        }
        (
            DomainSpec::Annulus {
                r_inner, r_outer, ..
            },
            BoundaryPartition::AnnulusShells,
        ) => run_annulus(start, r_inner, r_outer, cfg, rng),
        (
            DomainSpec::HalfSpaceND { .. },
            BoundaryPartition::HalfSpaceWall {
                epsilon,
                absorb_radius,
            },
        ) => run_half_space(start, epsilon, absorb_radius, f64::INFINITY, cfg, rng),
        (
            DomainSpec::HalfBallND { radius, .. },
            BoundaryPartition::HalfBallWallTarget { epsilon },
        ) => run_half_space(start, epsilon, f64::INFINITY, radius, cfg, rng),
        _ => unreachable!("partition compatibility checked by classify_point"),
    }
}

fn timeout(position: Vec<f64>, time: f64, steps: u64) -> PathOutcome {
    PathOutcome {
        class: OutcomeClass::Timeout,
        exit_point: position,
        exit_time: time,
        steps,
    }
}

/// Half-plane with target `[1, 1+eps]`, absorbing ray `(-inf, 0]`, reflecting
/// in between and beyond.
///
/// Wall visits are sampled exactly: from height `y` the first touch is at
/// `tau = (y/Z)^2` and the tangential coordinate gains `N(0, tau)`. A visit
/// landing on the reflecting part restarts with one Euler step whose length
/// shrinks near the class-transition abscissae `{0, 1, 1+eps}` so the next
/// touch classifies at the right scale.
fn run_half_plane_narrow(
    start: &[f64],
    epsilon: f64,
    cfg: &SimConfig,
    rng: &mut RngStream,
) -> PathOutcome {
    let (mut x, mut y) = (start[0], start[1]);
    let mut t = 0.0;
    let mut steps = 0u64;
    loop {
        if y > 0.0 {
            steps += 1;
            let z: f64 = rng.normal();
            let tau = (y / z).powi(2);
            if !tau.is_finite() || t + tau > cfg.max_time {
                return timeout(vec![x, y], cfg.max_time, steps);
            }
            t += tau;
            x += tau.sqrt() * rng.normal();
        }
        if x <= 0.0 {
            return PathOutcome {
                class: OutcomeClass::HitAbsorbing,
                exit_point: vec![x, 0.0],
                exit_time: t,
                steps,
            };
        }
        if x >= 1.0 && x <= 1.0 + epsilon {
            return PathOutcome {
                class: OutcomeClass::HitTarget,
                exit_point: vec![x, 0.0],
                exit_time: t,
                steps,
            };
        }
        // reflecting visit: step at a scale resolving the nearest transition
        let d = if x < 1.0 {
            x.min(1.0 - x)
        } else {
            x - (1.0 + epsilon)
        };
        // purely scale-adaptive: a fixed floor lets the restart step jump
        // across a transition narrower than its own standard deviation, which
        // silently undercounts hits on small targets
        let dt_loc = (0.2 * d.max(1e-12)).powi(2);
        if t + dt_loc > cfg.max_time {
            return timeout(vec![x, 0.0], cfg.max_time, steps);
        }
        let sd = dt_loc.sqrt();
        x += sd * rng.normal();
        y = (sd * rng.normal()).abs();
        t += dt_loc;
        steps += 1;
    }
}

/// Half-plane with target interval `[a, b]` and everything else absorbing:
/// one exact wall touch decides the path.
fn run_half_plane_interval(
    start: &[f64],
    a: f64,
    b: f64,
    cfg: &SimConfig,
    rng: &mut RngStream,
) -> PathOutcome {
    let (x0, y0) = (start[0], start[1]);
    let z: f64 = rng.normal();
    let tau = (y0 / z).powi(2);
    if !tau.is_finite() || tau > cfg.max_time {
        return timeout(vec![x0, y0], cfg.max_time, 1);
    }
    let x = x0 + tau.sqrt() * rng.normal();
    let class = if (a..=b).contains(&x) {
        OutcomeClass::HitTarget
    } else {
        OutcomeClass::HitAbsorbing
    };
    PathOutcome {
        class,
        exit_point: vec![x, 0.0],
        exit_time: tau,
        steps: 1,
    }
}

/// Strip and rectangle: target wall at `Re = -length`, absorbing wall at
/// `Re = 0`; a finite `width` folds the second coordinate (rectangle), an
/// infinite one leaves it free (strip).
fn run_two_wall(
    start: &[f64],
    length: f64,
    width: f64,
    cfg: &SimConfig,
    rng: &mut RngStream,
) -> PathOutcome {
    let (mut x, mut y) = (start[0], start[1]);
    let mut t = 0.0;
    let mut steps = 0u64;
    let sd = cfg.dt.sqrt();
    loop {
        let dx = sd * rng.normal();
        let dy = sd * rng.normal();
        let x1 = x + dx;
        let mut y1 = y + dy;
        if width.is_finite() {
            y1 = fold_interval(y1, width);
        }
        steps += 1;
        let hit_target = x1 <= -length;
        let hit_absorb = x1 >= 0.0;
        if hit_target || hit_absorb {
            // pick the wall whose crossing comes first along the step
            let frac_t = if hit_target { (x + length) / (x - x1) } else { f64::INFINITY };
            let frac_a = if hit_absorb { -x / (x1 - x) } else { f64::INFINITY };
            let (class, wall, frac) = if frac_t <= frac_a {
                (OutcomeClass::HitTarget, -length, frac_t)
            } else {
                (OutcomeClass::HitAbsorbing, 0.0, frac_a)
            };
            let mut ye = y + frac * dy;
            if width.is_finite() {
                ye = fold_interval(ye, width);
            }
            return PathOutcome {
                class,
                exit_point: vec![wall, ye],
                exit_time: t + frac * cfg.dt,
                steps,
            };
        }
        if cfg.bridge_correction {
            let p_t = (-2.0 * (x + length) * (x1 + length) / cfg.dt).exp();
            let p_a = (-2.0 * x * x1 / cfg.dt).exp();
            if p_t + p_a > 1e-14 {
                let u = rng.uniform();
                if u < p_t + p_a {
                    let (class, wall, d0, d1) = if u < p_t {
                        (OutcomeClass::HitTarget, -length, x + length, x1 + length)
                    } else {
                        (OutcomeClass::HitAbsorbing, 0.0, -x, -x1)
                    };
                    let frac = d0 / (d0 + d1);
                    let mut ye = y + frac * dy;
                    if width.is_finite() {
                        ye = fold_interval(ye, width);
                    }
                    return PathOutcome {
                        class,
                        exit_point: vec![wall, ye],
                        exit_time: t + frac * cfg.dt,
                        steps,
                    };
                }
            }
        }
        x = x1;
        y = y1;
        t += cfg.dt;
        if t >= cfg.max_time {
            return timeout(vec![x, y], cfg.max_time, steps);
        }
    }
}

/// Disk with mixed arcs: the crossing angle decides the class; reflecting
/// crossings mirror across the circle.
fn run_disk(
    start: &[f64],
    radius: f64,
    domain: &DomainSpec,
    partition: &BoundaryPartition,
    cfg: &SimConfig,
    rng: &mut RngStream,
) -> PathOutcome {
    let mut p = [start[0], start[1]];
    let mut t = 0.0;
    let mut steps = 0u64;
    let sd = cfg.dt.sqrt();
    let classify_touch = |q: [f64; 2]| -> BoundaryClass {
        classify_point(domain, partition, &q).expect("touch point is on the circle")
    };
    loop {
        let dw = [sd * rng.normal(), sd * rng.normal()];
        let p1 = [p[0] + dw[0], p[1] + dw[1]];
        let r0 = norm(&p);
        let r1 = norm(&p1);
        steps += 1;
        let mut touched: Option<(f64, [f64; 2])> = None;
        if r1 >= radius {
            let frac = ((radius - r0) / (r1 - r0)).clamp(0.0, 1.0);
            let mut q = [p[0] + frac * dw[0], p[1] + frac * dw[1]];
            scale_to_radius(&mut q, radius);
            touched = Some((frac, q));
        } else if cfg.bridge_correction {
            let (d0, d1) = (radius - r0, radius - r1);
            let pb = (-2.0 * d0 * d1 / cfg.dt).exp();
            if pb > 1e-14 && rng.uniform() < pb {
                let frac = d0 / (d0 + d1);
                let mut q = [p[0] + frac * dw[0], p[1] + frac * dw[1]];
                scale_to_radius(&mut q, radius);
                touched = Some((frac, q));
            }
        }
        if let Some((frac, q)) = touched {
            match classify_touch(q) {
                BoundaryClass::Target => {
                    return PathOutcome {
                        class: OutcomeClass::HitTarget,
                        exit_point: q.to_vec(),
                        exit_time: t + frac * cfg.dt,
                        steps,
                    }
                }
                BoundaryClass::Absorbing => {
                    return PathOutcome {
                        class: OutcomeClass::HitAbsorbing,
                        exit_point: q.to_vec(),
                        exit_time: t + frac * cfg.dt,
                        steps,
                    }
                }
                _ => {
                    // reflecting arc: mirror any overshoot back inside
                    if r1 >= radius {
                        let mut refl = p1;
                        scale_to_radius(&mut refl, (2.0 * radius - r1).max(0.0));
                        p = refl;
                    } else {
                        p = p1;
                    }
                }
            }
        } else {
            p = p1;
        }
        t += cfg.dt;
        if t >= cfg.max_time {
            return timeout(p.to_vec(), cfg.max_time, steps);
        }
    }
}

/// Annulus with target inner sphere and absorbing outer sphere; radial
/// distances drive crossing detection and the bridge correction.
fn run_annulus(
    start: &[f64],
    r_inner: f64,
    r_outer: f64,
    cfg: &SimConfig,
    rng: &mut RngStream,
) -> PathOutcome {
    let dim = start.len();
    let mut p = start.to_vec();
    let mut p1 = vec![0.0; dim];
    let mut t = 0.0;
    let mut steps = 0u64;
    let sd = cfg.dt.sqrt();
    loop {
        for i in 0..dim {
            p1[i] = p[i] + sd * rng.normal();
        }
        let r0 = norm(&p);
        let r1 = norm(&p1);
        steps += 1;
        let finish = |q: &[f64], frac: f64, r: f64, class: OutcomeClass, steps: u64| {
            let mut e: Vec<f64> = q.to_vec();
            scale_to_radius(&mut e, r);
            PathOutcome {
                class,
                exit_point: e,
                exit_time: t + frac * cfg.dt,
                steps,
            }
        };
        if r1 <= r_inner {
            let frac = ((r0 - r_inner) / (r0 - r1)).clamp(0.0, 1.0);
            let q: Vec<f64> = p.iter().zip(&p1).map(|(a, b)| a + frac * (b - a)).collect();
            return finish(&q, frac, r_inner, OutcomeClass::HitTarget, steps);
        }
        if r1 >= r_outer {
            let frac = ((r_outer - r0) / (r1 - r0)).clamp(0.0, 1.0);
            let q: Vec<f64> = p.iter().zip(&p1).map(|(a, b)| a + frac * (b - a)).collect();
            return finish(&q, frac, r_outer, OutcomeClass::HitAbsorbing, steps);
        }
        if cfg.bridge_correction {
            let (i0, i1) = (r0 - r_inner, r1 - r_inner);
            let (o0, o1) = (r_outer - r0, r_outer - r1);
            let pb_in = (-2.0 * i0 * i1 / cfg.dt).exp();
            let pb_out = (-2.0 * o0 * o1 / cfg.dt).exp();
            if pb_in + pb_out > 1e-14 {
                let u = rng.uniform();
                if u < pb_in {
                    let frac = i0 / (i0 + i1);
                    let q: Vec<f64> =
                        p.iter().zip(&p1).map(|(a, b)| a + frac * (b - a)).collect();
                    return finish(&q, frac, r_inner, OutcomeClass::HitTarget, steps);
                } else if u < pb_in + pb_out {
                    let frac = o0 / (o0 + o1);
                    let q: Vec<f64> =
                        p.iter().zip(&p1).map(|(a, b)| a + frac * (b - a)).collect();
                    return finish(&q, frac, r_outer, OutcomeClass::HitAbsorbing, steps);
                }
            }
        }
        std::mem::swap(&mut p, &mut p1);
        t += cfg.dt;
        if t >= cfg.max_time {
            return timeout(p, cfg.max_time, steps);
        }
    }
}

/// Half-space and half-ball: exact folding of the first coordinate, wall
/// touches located by linear interpolation of the tangential coordinates,
/// classified by the tangential radius; an optional enclosing sphere absorbs
/// (half-ball), an optional wall annulus beyond `absorb_radius` absorbs
/// (half-space).
fn run_half_space(
    start: &[f64],
    epsilon: f64,
    absorb_radius: f64,
    ball_radius: f64,
    cfg: &SimConfig,
    rng: &mut RngStream,
) -> PathOutcome {
    let dim = start.len();
    let mut p = start.to_vec();
    let mut dw = vec![0.0; dim];
    let mut t = 0.0;
    let mut steps = 0u64;
    let sd = cfg.dt.sqrt();
    loop {
        for d in dw.iter_mut() {
            *d = sd * rng.normal();
        }
        let z0 = p[0];
        let z_raw = z0 + dw[0];
        steps += 1;

        // absorbing sphere first (half-ball): crossing in radius
        if ball_radius.is_finite() {
            let mut p1 = vec![0.0; dim];
            p1[0] = z_raw.abs();
            for i in 1..dim {
                p1[i] = p[i] + dw[i];
            }
            let r0 = norm(&p);
            let r1 = norm(&p1);
            if r1 >= ball_radius {
                let frac = ((ball_radius - r0) / (r1 - r0)).clamp(0.0, 1.0);
                let mut q: Vec<f64> =
                    p.iter().zip(&p1).map(|(a, b)| a + frac * (b - a)).collect();
                scale_to_radius(&mut q, ball_radius);
                q[0] = q[0].abs();
                return PathOutcome {
                    class: OutcomeClass::HitAbsorbing,
                    exit_point: q,
                    exit_time: t + frac * cfg.dt,
                    steps,
                };
            }
        }

        // wall touch: actual sign crossing, or a bridge excursion
        let mut touch_frac: Option<f64> = None;
        if z_raw <= 0.0 {
            touch_frac = Some((z0 / (z0 - z_raw)).clamp(0.0, 1.0));
        } else if cfg.bridge_correction {
            let pb = (-2.0 * z0 * z_raw / cfg.dt).exp();
            if pb > 1e-14 && rng.uniform() < pb {
                touch_frac = Some(z0 / (z0 + z_raw));
            }
        }
        if let Some(frac) = touch_frac {
            let rho2: f64 = (1..dim).map(|i| (p[i] + frac * dw[i]).powi(2)).sum();
            let rho = rho2.sqrt();
            if rho <= epsilon {
                let mut q = vec![0.0; dim];
                for i in 1..dim {
                    q[i] = p[i] + frac * dw[i];
                }
                return PathOutcome {
                    class: OutcomeClass::HitTarget,
                    exit_point: q,
                    exit_time: t + frac * cfg.dt,
                    steps,
                };
            }
            if rho >= absorb_radius {
                let mut q = vec![0.0; dim];
                for i in 1..dim {
                    q[i] = p[i] + frac * dw[i];
                }
                return PathOutcome {
                    class: OutcomeClass::HitAbsorbing,
                    exit_point: q,
                    exit_time: t + frac * cfg.dt,
                    steps,
                };
            }
            // reflecting wall: folding already handles the excursion
        }
        p[0] = z_raw.abs();
        for i in 1..dim {
            p[i] += dw[i];
        }
        debug_assert!(p[0] >= 0.0);
        t += cfg.dt;
        if t >= cfg.max_time {
            return timeout(p, cfg.max_time, steps);
        }
    }
}

/// Outcome of a path stopped at an intermediate sphere, for two-stage
/// factorized estimation.
#[derive(Debug, Clone, PartialEq)]
pub enum StageOutcome {
    /// Crossed the stage sphere; carries the entry point.
    ReachedSphere(Vec<f64>),
    HitTarget(Vec<f64>),
    HitAbsorbing,
    Timeout,
}

/// Half-ball path stopped the first time it enters the sphere of radius
/// `r_stage` around the origin, for restarting a second estimation stage
/// there. The start must lie outside the stage sphere.
pub fn run_path_until_sphere(
    domain: &DomainSpec,
    partition: &BoundaryPartition,
    start: &[f64],
    r_stage: f64,
    cfg: &SimConfig,
    rng: &mut RngStream,
) -> Result<StageOutcome, SdeError> {
    let (radius, epsilon) = match (*domain, *partition) {
        (
            DomainSpec::HalfBallND { radius, .. },
            BoundaryPartition::HalfBallWallTarget { epsilon },
        ) => (radius, epsilon),
        _ => {
            return Err(SdeError::BadConfig(
                "staged runs support the half-ball wall-target setup only".into(),
            ))
        }
    };
    cfg.validate()?;
    if !(r_stage > epsilon && r_stage < radius) {
        return Err(SdeError::BadConfig(format!(
            "stage radius {r_stage} must separate target ({epsilon}) from shell ({radius})"
        )));
    }
    if classify_point(domain, partition, start)? != BoundaryClass::Interior {
        return Err(SdeError::StartNotInterior);
    }
    if norm(start) <= r_stage {
        return Err(SdeError::BadConfig(
            "start must lie outside the stage sphere".into(),
        ));
    }
    let dim = start.len();
    let mut p = start.to_vec();
    let mut dw = vec![0.0; dim];
    let mut t = 0.0;
    let sd = cfg.dt.sqrt();
    loop {
        for d in dw.iter_mut() {
            *d = sd * rng.normal();
        }
        let z_raw = p[0] + dw[0];
        let mut p1 = vec![z_raw.abs()];
        p1.extend((1..dim).map(|i| p[i] + dw[i]));
        let r0 = norm(&p);
        let r1 = norm(&p1);
        if r1 <= r_stage {
            let frac = ((r0 - r_stage) / (r0 - r1)).clamp(0.0, 1.0);
            let mut q: Vec<f64> = p.iter().zip(&p1).map(|(a, b)| a + frac * (b - a)).collect();
            scale_to_radius(&mut q, r_stage);
            q[0] = q[0].abs();
            return Ok(StageOutcome::ReachedSphere(q));
        }
        if r1 >= radius {
            return Ok(StageOutcome::HitAbsorbing);
        }
        if z_raw <= 0.0 {
            let frac = (p[0] / (p[0] - z_raw)).clamp(0.0, 1.0);
            let rho2: f64 = (1..dim).map(|i| (p[i] + frac * dw[i]).powi(2)).sum();
            if rho2.sqrt() <= epsilon {
                let mut q = vec![0.0; dim];
                for i in 1..dim {
                    q[i] = p[i] + frac * dw[i];
                }
                return Ok(StageOutcome::HitTarget(q));
            }
        }
        p = p1;
        t += cfg.dt;
        if t >= cfg.max_time {
            return Ok(StageOutcome::Timeout);
        }
    }
}

/// Runs `cfg.n_paths` independent paths and aggregates the hit count into a
/// Wilson-interval estimate. Path `i` draws from `seed_path_rng(master_seed, i)`
/// and results merge by integer addition, so output is identical for any
/// worker count.
pub fn estimate_hit_probability(
    domain: &DomainSpec,
    partition: &BoundaryPartition,
    start: &[f64],
    cfg: &SimConfig,
) -> Result<HitEstimate, SdeError> {
    estimate_hit_probability_with_workers(domain, partition, start, cfg, workers_from_env())
}

/// Reads the `RBMHIT_WORKERS` override; `None` means hardware default.
pub fn workers_from_env() -> Option<usize> {
    std::env::var("RBMHIT_WORKERS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// [`estimate_hit_probability`] with an explicit worker count.
pub fn estimate_hit_probability_with_workers(
    domain: &DomainSpec,
    partition: &BoundaryPartition,
    start: &[f64],
    cfg: &SimConfig,
    workers: Option<usize>,
) -> Result<HitEstimate, SdeError> {
    cfg.validate()?;
    domain.validate()?;
    if classify_point(domain, partition, start)? != BoundaryClass::Interior {
        return Err(SdeError::StartNotInterior);
    }
    let compute = || -> (u64, u64) {
        (0..cfg.n_paths)
            .into_par_iter()
            .map(|i| {
                let mut rng = seed_path_rng(cfg.master_seed, i);
                let outcome = run_path_unchecked(domain, partition, start, cfg, &mut rng);
                match outcome.class {
                    OutcomeClass::HitTarget => (1u64, 0u64),
                    OutcomeClass::HitAbsorbing => (0, 0),
                    OutcomeClass::Timeout => (0, 1),
                }
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    };
    let (hits, timeouts) = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SdeError::BadConfig(format!("worker pool: {e}")))?
            .install(compute),
        None => compute(),
    };
    let estimate = binomial_estimate_seeded(hits, cfg.n_paths, 0.95, cfg.master_seed)?;
    let timeout_fraction = timeouts as f64 / cfg.n_paths as f64;
    Ok(HitEstimate {
        estimate,
        n_timeouts: timeouts,
        timeout_fraction,
        timeout_warning: timeout_fraction > 0.01,
    })
}
