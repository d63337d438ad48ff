//! Reproducible random fields for property batteries and constant estimation.
//!
//! A single 64-bit seed plus a stream number determines every draw; distinct
//! batteries use distinct streams so that adding samples to one never shifts
//! another. Smooth samples are defined in physical coordinates, so the same
//! seed yields the same functions on every grid resolution.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain_grid::{Domain, Field, Grid, Point};

/// Stream numbers of the built-in batteries.
pub mod streams {
    pub const CZ: u64 = 1;
    pub const EMBEDDING: u64 = 2;
    pub const PROPERTY: u64 = 3;
    pub const RIESZ: u64 = 4;
}

pub struct FieldSampler {
    rng: ChaCha8Rng,
}

impl FieldSampler {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        FieldSampler { rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Independent uniform values in `[lo, hi)` per node.
    pub fn uniform(&mut self, grid: &Arc<Grid>, lo: f64, hi: f64) -> Field {
        let v = (0..grid.len()).map(|_| self.rng.random_range(lo..hi)).collect();
        Field::new(Arc::clone(grid), v).expect("length matches grid")
    }

    /// Random point of the domain at boundary distance at least `margin`.
    fn interior_point(&mut self, domain: &Domain, margin: f64) -> Point {
        let c = domain.incenter();
        let r = domain.inradius();
        for _ in 0..10_000 {
            let p = match domain.dimension() {
                1 => [c[0] + r * self.rng.random_range(-1.0..1.0), 0.0],
                _ => [
                    c[0] + r * self.rng.random_range(-1.0..1.0),
                    c[1] + r * self.rng.random_range(-1.0..1.0),
                ],
            };
            let bd = domain.boundary_distance(p);
            if !bd.exterior && bd.distance >= margin {
                return p;
            }
        }
        c
    }

    /// Sum of one to three Gaussian bumps with random centers, widths in
    /// `[0.05, 0.5] diam` and amplitudes in `(0, 1]`; optionally with random signs.
    pub fn bumps(&mut self, grid: &Arc<Grid>, signed: bool) -> Field {
        let domain = *grid.domain();
        let diam = domain.diameter();
        let k = self.rng.random_range(1..=3);
        let parts: Vec<(Point, f64, f64)> = (0..k)
            .map(|_| {
                let c = self.interior_point(&domain, 0.0);
                let w = diam * self.rng.random_range(0.05..0.5);
                let mut a = self.rng.random_range(0.05..1.0);
                if signed && self.rng.random_bool(0.5) {
                    a = -a;
                }
                (c, w, a)
            })
            .collect();
        Field::from_fn(grid, |p| {
            parts
                .iter()
                .map(|(c, w, a)| {
                    let d2 = (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2);
                    a * (-d2 / (w * w)).exp()
                })
                .sum()
        })
    }

    /// Narrow bump of fixed physical width centered near the boundary.
    pub fn boundary_bump(&mut self, grid: &Arc<Grid>) -> Field {
        let domain = *grid.domain();
        let r = domain.inradius();
        let w = 0.1 * r;
        let c = domain.incenter();
        let (cx, cy) = match domain.dimension() {
            1 => {
                let side = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
                (c[0] + side * (r - 1.5 * w), 0.0)
            }
            _ => {
                let th = self.rng.random_range(0.0..2.0 * PI);
                let mut rho = 0.0;
                // Walk outward to the boundary along the ray, then step back inside.
                let mut step = r;
                while step > 1e-6 * r {
                    let p = [c[0] + (rho + step) * th.cos(), c[1] + (rho + step) * th.sin()];
                    if domain.contains(p) {
                        rho += step;
                    }
                    step *= 0.5;
                }
                let rho = (rho - 1.5 * w).max(0.0);
                (c[0] + rho * th.cos(), c[1] + rho * th.sin())
            }
        };
        Field::from_fn(grid, |p| {
            let d2 = (p[0] - cx).powi(2) + (p[1] - cy).powi(2);
            (-d2 / (w * w)).exp()
        })
    }
}

/// The non-negative right-hand sides used to measure the Calderon-Zygmund
/// constant: `h = 1`, then alternating boundary bumps and random bump mixtures.
pub fn cz_battery(grid: &Arc<Grid>, count: usize, seed: u64) -> Vec<Field> {
    let mut s = FieldSampler::new(seed, streams::CZ);
    let mut out = vec![Field::constant(grid, 1.0)];
    for k in 1..count {
        out.push(if k % 4 == 1 { s.boundary_bump(grid) } else { s.bumps(grid, false) });
    }
    out
}
