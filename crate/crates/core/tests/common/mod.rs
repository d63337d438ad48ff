//! Independent reference implementations shared by the integration tests.
//!
//! Everything here works from the defining double integrals on a 1D interval
//! whose cells tile the domain exactly, with closed-form cell and tail
//! integrals. None of it touches the crate's kernel tables or caches.

#![allow(dead_code)]

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

/// `a(N, sigma) = 2^{2 sigma} Gamma(N/2 + sigma) / (pi^{N/2} |Gamma(-sigma)|)`.
pub fn a_const(n: f64, sigma: f64) -> f64 {
    -(4f64.powf(sigma)) * gamma(n / 2.0 + sigma) / (PI.powf(n / 2.0) * gamma(-sigma))
}

/// `mu(N, t) = 2^t Gamma((N + t + 1)/2) / (pi^{N/2} Gamma((1 - t)/2))`.
pub fn mu_const(n: f64, t: f64) -> f64 {
    2f64.powf(t) * gamma((n + t + 1.0) / 2.0) / (PI.powf(n / 2.0) * gamma((1.0 - t) / 2.0))
}

/// 1D interval `(a, b)` tiled by `n` cells.
#[derive(Clone, Copy, Debug)]
pub struct Tiling {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Tiling {
    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.a + (i as f64 + 0.5) * self.h()
    }

    pub fn cell(&self, j: usize) -> (f64, f64) {
        (self.a + j as f64 * self.h(), self.a + (j + 1) as f64 * self.h())
    }

    /// `int_cell |x - y|^{-1-beta} dy` for `x` outside the cell.
    pub fn even(&self, x: f64, j: usize, beta: f64) -> f64 {
        let (y0, y1) = self.cell(j);
        let (d0, d1) = ((x - y0).abs(), (x - y1).abs());
        let (near, far) = (d0.min(d1), d0.max(d1));
        (near.powf(-beta) - far.powf(-beta)) / beta
    }

    /// `int_cell sign(x - y) |x - y|^{-1-t} dy` for `x` outside the cell.
    pub fn odd(&self, x: f64, j: usize, t: f64) -> f64 {
        let (y0, _) = self.cell(j);
        let sign = if y0 < x { 1.0 } else { -1.0 };
        sign * self.even(x, j, t)
    }

    /// `int_{R \ (a,b)} |x - y|^{-1-beta} dy`.
    pub fn tail(&self, x: f64, beta: f64) -> f64 {
        ((x - self.a).powf(-beta) + (self.b - x).powf(-beta)) / beta
    }

    /// `int_{R \ (a,b)} sign(x - y) |x - y|^{-1-t} dy`.
    pub fn odd_tail(&self, x: f64, t: f64) -> f64 {
        ((x - self.a).powf(-t) - (self.b - x).powf(-t)) / t
    }

    /// `(-Delta)^{t/2} u` at the nodes.
    pub fn half_laplacian(&self, u: &[f64], t: f64) -> Vec<f64> {
        let c = a_const(1.0, t / 2.0);
        (0..self.n)
            .map(|i| {
                let x = self.node(i);
                let mut s = self.tail(x, t) * u[i];
                for j in (0..self.n).filter(|j| *j != i) {
                    s += self.even(x, j, t) * (u[i] - u[j]);
                }
                c * s
            })
            .collect()
    }

    /// Riesz t-gradient at the nodes, with the exterior term kept explicitly.
    pub fn riesz_gradient(&self, u: &[f64], t: f64) -> Vec<f64> {
        let c = mu_const(1.0, t);
        (0..self.n)
            .map(|i| {
                let x = self.node(i);
                let mut s = self.odd_tail(x, t) * u[i];
                for j in (0..self.n).filter(|j| *j != i) {
                    s += self.odd(x, j, t) * (u[i] - u[j]);
                }
                c * s
            })
            .collect()
    }

    /// Stein t-functional at the nodes.
    pub fn stein(&self, u: &[f64], t: f64) -> Vec<f64> {
        let c = a_const(1.0, t) / 2.0;
        (0..self.n)
            .map(|i| {
                let x = self.node(i);
                let mut s = self.tail(x, 2.0 * t) * u[i] * u[i];
                for j in (0..self.n).filter(|j| *j != i) {
                    s += self.even(x, j, 2.0 * t) * (u[i] - u[j]).powi(2);
                }
                (c * s).sqrt()
            })
            .collect()
    }

    /// Gagliardo seminorm over `D_Omega`.
    pub fn gagliardo(&self, u: &[f64], sigma: f64, p: f64) -> f64 {
        let beta = sigma * p;
        let mut total = 0.0;
        for i in 0..self.n {
            let x = self.node(i);
            total += 2.0 * self.tail(x, beta) * u[i].abs().powf(p);
            for j in (0..self.n).filter(|j| *j != i) {
                total += self.even(x, j, beta) * (u[i] - u[j]).abs().powf(p);
            }
        }
        (total * self.h()).powf(1.0 / p)
    }
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
}
