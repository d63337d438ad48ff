//! Cell quadrature for power-law kernels on the grid lattice.
//!
//! All kernels used by the crate are powers of `|z|`, so the integral of a
//! kernel over a lattice cell at offset `k` scales exactly with `h`:
//!
//! ```text
//!   int_{h C_k} |z|^{-(N+beta)} dz = h^{-beta} int_{C_k} |z|^{-(N+beta)} dz
//! ```
//!
//! where `C_k` is the unit cell centered at `k`. Tables of these unit
//! integrals are therefore computed once per exponent and grid extent and
//! reused for every node pair (the translation structure of a uniform grid).
//!
//! One-dimensional cell integrals use exact antiderivatives. Two-dimensional
//! ones use tensor 4x4 Gauss-Legendre rules with recursive subdivision of
//! cells close to the singularity. Integrals over the exterior of the lattice
//! bounding box are exact (1D) or reduce to incomplete beta functions (2D).

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock, RwLock};

use rayon::prelude::*;
use statrs::function::beta::{beta, beta_reg};

use crate::domain_grid::{distance, Grid, Point};

const GL4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL4_W: [f64; 4] = [
    0.347_854_845_137_453_8,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_8,
];
const GL2_X: [f64; 2] = [-0.577_350_269_189_625_8, 0.577_350_269_189_625_8];

/// Composite 4-point Gauss-Legendre rule for a smooth integrand on `[a, b]`.
pub(crate) fn gauss_composite(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let w = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        for q in 0..4 {
            sum += GL4_W[q] * f(mid + 0.5 * w * GL4_X[q]);
        }
    }
    0.5 * w * sum
}

/// `int_{lo}^{hi} |z|^{-e} dz` for an interval not containing the origin.
fn power_antiderivative_1d(lo: f64, hi: f64, e: f64) -> f64 {
    debug_assert!(lo * hi >= 0.0 && lo < hi);
    let (a, b) = if hi <= 0.0 { (-hi, -lo) } else { (lo, hi) };
    if (e - 1.0).abs() < 1e-14 {
        return (b / a).ln();
    }
    // (a^{1-e} - b^{1-e}) / (e - 1) written to avoid cancellation for b close to a.
    let c = 1.0 - e;
    if a == 0.0 {
        return b.powf(c) / c;
    }
    a.powf(c) * (c * (b / a).ln()).exp_m1() / c
}

/// Integral of `|z|^{-(1+beta)}` over the unit cell `[k - 1/2, k + 1/2]`, `k != 0`.
fn unit_power_1d(k: i64, beta: f64) -> f64 {
    let a = k.unsigned_abs() as f64 - 0.5;
    power_antiderivative_1d(a, a + 1.0, 1.0 + beta)
}

/// Tensor Gauss integral of `f` over `[x0, x1] x [y0, y1]`.
fn gauss_rect(f: &impl Fn(f64, f64) -> f64, x0: f64, x1: f64, y0: f64, y1: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let (cx, hx) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
    let (cy, hy) = (0.5 * (y0 + y1), 0.5 * (y1 - y0));
    let mut sum = 0.0;
    for (xi, wi) in nodes.iter().zip(weights) {
        for (yj, wj) in nodes.iter().zip(weights) {
            sum += wi * wj * f(cx + hx * xi, cy + hy * yj);
        }
    }
    sum * hx * hy
}

/// Distance from the origin to the rectangle `[x0, x1] x [y0, y1]`.
fn rect_distance(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let dx = x0.max(0.0).max(-x1);
    let dy = y0.max(0.0).max(-y1);
    dx.hypot(dy)
}

/// Integral of `f(z)` over a rectangle away from a point singularity at the
/// origin, subdividing while the rectangle is closer than `ratio` diameters.
fn adaptive_rect(f: &impl Fn(f64, f64) -> f64, x0: f64, x1: f64, y0: f64, y1: f64, ratio: f64, depth: u32) -> f64 {
    let diam = (x1 - x0).hypot(y1 - y0);
    let dist = rect_distance(x0, x1, y0, y1);
    if dist >= ratio * diam || depth == 0 {
        return gauss_rect(f, x0, x1, y0, y1, &GL4_X, &GL4_W);
    }
    let xm = 0.5 * (x0 + x1);
    let ym = 0.5 * (y0 + y1);
    adaptive_rect(f, x0, xm, y0, ym, ratio, depth - 1)
        + adaptive_rect(f, xm, x1, y0, ym, ratio, depth - 1)
        + adaptive_rect(f, x0, xm, ym, y1, ratio, depth - 1)
        + adaptive_rect(f, xm, x1, ym, y1, ratio, depth - 1)
}

/// Integral of `|z|^{-(2+beta)}` over the unit cell centered at `(i, j) != 0`.
fn unit_power_2d(i: i64, j: i64, beta: f64) -> f64 {
    let e = 2.0 + beta;
    let f = |x: f64, y: f64| (x * x + y * y).powf(-0.5 * e);
    let (x, y) = (i as f64, j as f64);
    adaptive_rect(&f, x - 0.5, x + 0.5, y - 0.5, y + 0.5, 1.5, 8)
}

/// Integral of `z_1 |z|^{-(3+t)}` over the unit cell centered at `(i, j) != 0`.
fn unit_odd_2d_x(i: i64, j: i64, t: f64) -> f64 {
    let e = 3.0 + t;
    let f = |x: f64, y: f64| x * (x * x + y * y).powf(-0.5 * e);
    let (x, y) = (i as f64, j as f64);
    adaptive_rect(&f, x - 0.5, x + 0.5, y - 0.5, y + 0.5, 1.5, 8)
}

/// Same-cell integral of the weakly singular kernel `|z|^{alpha - N}` over the
/// centered unit cell: exact over the inscribed ball, quadrature over the corners.
fn unit_weak_self(dim: usize, alpha: f64) -> f64 {
    match dim {
        1 => 2.0 * 0.5_f64.powf(alpha) / alpha,
        _ => {
            let r0 = 0.5_f64;
            let ball = 2.0 * PI * r0.powf(alpha) / alpha;
            // Corner regions in polar form: 8 symmetric wedges of angle pi/4.
            let corner = gauss_composite(
                |th| ((r0 / th.cos()).powf(alpha) - r0.powf(alpha)) / alpha,
                0.0,
                PI / 4.0,
                8,
            );
            ball + 8.0 * corner
        }
    }
}

/// `int_0^phi cos^beta(theta) d theta` for `|phi| < pi/2`, `beta > -1`.
fn cos_power_integral(phi: f64, beta: f64) -> f64 {
    let s2 = phi.sin().powi(2);
    let b = 0.5 * (beta + 1.0);
    let v = 0.5 * beta_reg(0.5, b, s2) * statrs_beta(0.5, b);
    v.copysign(phi)
}

fn statrs_beta(a: f64, b: f64) -> f64 {
    beta(a, b)
}

/// Exact `int_{R^N \ B} |x - y|^{-(N + beta)} dy` for the axis box `B = [lo, hi]`
/// containing `x` in its interior and `beta > 0`.
pub(crate) fn box_exterior_integral(dim: usize, x: Point, lo: Point, hi: Point, beta: f64) -> f64 {
    match dim {
        1 => ((x[0] - lo[0]).powf(-beta) + (hi[0] - x[0]).powf(-beta)) / beta,
        _ => {
            // Each side contributes d^{-beta}/beta * int cos^beta over its angular range.
            let side = |d: f64, t0: f64, t1: f64| {
                let (p0, p1) = ((t0 / d).atan(), (t1 / d).atan());
                d.powf(-beta) / beta * (cos_power_integral(p1, beta) - cos_power_integral(p0, beta))
            };
            side(hi[0] - x[0], lo[1] - x[1], hi[1] - x[1])
                + side(x[0] - lo[0], lo[1] - x[1], hi[1] - x[1])
                + side(hi[1] - x[1], lo[0] - x[0], hi[0] - x[0])
                + side(x[1] - lo[1], lo[0] - x[0], hi[0] - x[0])
        }
    }
}

/// Integral of `|p - y|^{-e}` over the grid cell centered at `c` (side `h`), for
/// `p` outside that cell.
pub(crate) fn point_cell_power(dim: usize, p: Point, c: Point, h: f64, e: f64) -> f64 {
    match dim {
        1 => {
            let lo = c[0] - 0.5 * h - p[0];
            power_antiderivative_1d(lo, lo + h, e)
        }
        _ => {
            let (x0, y0) = (c[0] - p[0] - 0.5 * h, c[1] - p[1] - 0.5 * h);
            let d = distance(p, c);
            if d >= 24.0 * h {
                return h * h * d.powf(-e);
            }
            let f = |x: f64, y: f64| (x * x + y * y).powf(-0.5 * e);
            if d >= 6.0 * h {
                let w = [1.0, 1.0];
                return gauss_rect(&f, x0, x0 + h, y0, y0 + h, &GL2_X, &w);
            }
            adaptive_rect(&f, x0, x0 + h, y0, y0 + h, 1.5, 10)
        }
    }
}

/// Unit-cell integrals of `|z|^{-(N + beta)}` indexed by lattice offset.
///
/// For `beta > 0` the kernel is hypersingular and the zero-offset entry is 0
/// (the same-cell principal value is dropped). For `-N < beta < 0` the kernel
/// is weakly singular (`alpha = -beta`) and the zero-offset entry is the exact
/// same-cell integral.
#[derive(Debug)]
pub struct PowerTable {
    dim: usize,
    beta: f64,
    ext: [i64; 2],
    data: Vec<f64>,
}

impl PowerTable {
    pub fn new(dim: usize, beta: f64, ext: [i64; 2]) -> Self {
        let ext = if dim == 1 { [ext[0], 0] } else { [ext[0].max(ext[1]); 2] };
        let stride = (ext[1] + 1) as usize;
        let mut data = vec![0.0; (ext[0] + 1) as usize * stride];
        if dim == 1 {
            for k in 1..=ext[0] {
                data[k as usize] = unit_power_1d(k, beta);
            }
        } else {
            // Symmetric in (i, j) <-> (j, i); compute the lower triangle only.
            let pairs: Vec<(i64, i64)> = (0..=ext[0]).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
            let vals: Vec<f64> = pairs
                .par_iter()
                .map(|&(i, j)| if i == 0 && j == 0 { 0.0 } else { unit_power_2d(i, j, beta) })
                .collect();
            for (&(i, j), v) in pairs.iter().zip(vals) {
                data[i as usize * stride + j as usize] = v;
                data[j as usize * stride + i as usize] = v;
            }
        }
        if beta < 0.0 {
            data[0] = unit_weak_self(dim, -beta);
        }
        PowerTable { dim, beta, ext, data }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Unit-cell integral at lattice offset `(dx, dy)`.
    #[inline]
    pub fn unit(&self, dx: i64, dy: i64) -> f64 {
        let (a, b) = (dx.unsigned_abs() as usize, dy.unsigned_abs() as usize);
        self.data[a * (self.ext[1] as usize + 1) + b]
    }

    /// Physical scale factor `h^{-beta}`.
    pub fn scale(&self, h: f64) -> f64 {
        h.powf(-self.beta)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Unit-cell integrals of the odd kernel `z |z|^{-(N + 1 + t)}`.
///
/// Stores the first component for non-negative offsets; the second component
/// follows from the `(x, y) <-> (y, x)` symmetry and signs from oddness.
#[derive(Debug)]
pub struct OddTable {
    dim: usize,
    t: f64,
    ext: i64,
    data: Vec<f64>,
}

impl OddTable {
    pub fn new(dim: usize, t: f64, ext: [i64; 2]) -> Self {
        let e = if dim == 1 { ext[0] } else { ext[0].max(ext[1]) };
        let stride = (e + 1) as usize;
        let mut data = vec![0.0; if dim == 1 { stride } else { stride * stride }];
        if dim == 1 {
            for k in 1..=e {
                data[k as usize] = unit_power_1d(k, t);
            }
        } else {
            let pairs: Vec<(i64, i64)> = (0..=e).flat_map(|i| (0..=e).map(move |j| (i, j))).collect();
            let vals: Vec<f64> = pairs
                .par_iter()
                .map(|&(i, j)| if i == 0 { 0.0 } else { unit_odd_2d_x(i, j, t) })
                .collect();
            for (&(i, j), v) in pairs.iter().zip(vals) {
                data[i as usize * stride + j as usize] = v;
            }
        }
        OddTable { dim, t, ext: e, data }
    }

    /// Vector unit-cell integral at lattice offset `(dx, dy)`.
    #[inline]
    pub fn unit(&self, dx: i64, dy: i64) -> [f64; 2] {
        let (a, b) = (dx.unsigned_abs() as usize, dy.unsigned_abs() as usize);
        if self.dim == 1 {
            return [(dx.signum() as f64) * self.data[a], 0.0];
        }
        let stride = self.ext as usize + 1;
        [
            dx.signum() as f64 * self.data[a * stride + b],
            dy.signum() as f64 * self.data[b * stride + a],
        ]
    }

    pub fn scale(&self, h: f64) -> f64 {
        h.powf(-self.t)
    }
}

/// Quadrature nodes covering `R^N` minus the union of grid cells.
///
/// Near the domain the exterior lattice cells themselves are used (one point
/// per cell, weight `h^N`), matching how the interior is sampled. Farther out,
/// graded panels with Gauss points are used, and the remainder beyond
/// `far_radius` around `center` is handled analytically by callers through
/// [`far_field_integral`].
#[derive(Debug)]
pub struct ExteriorQuadrature {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub center: Point,
    pub far_radius: f64,
}

const EXTERIOR_MARGIN: i64 = 4;
const EXTERIOR_DOUBLINGS: usize = 14;

impl ExteriorQuadrature {
    pub fn new(grid: &Grid) -> Self {
        let h = grid.spacing();
        let (lo, hi) = grid.lattice_box();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let dim = grid.dimension();
        if dim == 1 {
            let (blo, bhi) = grid.box_bounds();
            let center = [0.5 * (blo[0] + bhi[0]), 0.0];
            let m = EXTERIOR_MARGIN as f64;
            let mut far = 0.0;
            for (edge, dir) in [(bhi[0], 1.0), (blo[0], -1.0)] {
                for k in 0..EXTERIOR_MARGIN {
                    points.push([edge + dir * (k as f64 + 0.5) * h, 0.0]);
                    weights.push(h);
                }
                let mut a = m * h;
                for _ in 0..EXTERIOR_DOUBLINGS {
                    let b = 2.0 * a;
                    for q in 0..4 {
                        let d = 0.5 * (a + b) + 0.5 * (b - a) * GL4_X[q];
                        points.push([edge + dir * d, 0.0]);
                        weights.push(0.5 * (b - a) * GL4_W[q]);
                    }
                    a = b;
                }
                far = (edge + dir * a - center[0]).abs();
            }
            ExteriorQuadrature {
                points,
                weights,
                center,
                far_radius: far,
            }
        } else {
            let elo = [lo[0] - EXTERIOR_MARGIN, lo[1] - EXTERIOR_MARGIN];
            let ehi = [hi[0] + EXTERIOR_MARGIN, hi[1] + EXTERIOR_MARGIN];
            for j in elo[1]..=ehi[1] {
                for i in elo[0]..=ehi[0] {
                    if grid.node_at([i, j]).is_none() {
                        points.push(grid.cell_center([i, j]));
                        weights.push(h * h);
                    }
                }
            }
            let o = grid.origin();
            let bx0 = [o[0] + elo[0] as f64 * h, o[1] + elo[1] as f64 * h];
            let bx1 = [o[0] + (ehi[0] + 1) as f64 * h, o[1] + (ehi[1] + 1) as f64 * h];
            let center = [0.5 * (bx0[0] + bx1[0]), 0.5 * (bx0[1] + bx1[1])];
            let (hx, hy) = (0.5 * (bx1[0] - bx0[0]), 0.5 * (bx1[1] - bx0[1]));
            // Angular panels break at the box corners so r_box(theta) is smooth on each.
            let c = hy.atan2(hx);
            let breaks = [-c, c, PI - c, PI + c, 2.0 * PI - c];
            let r_box = |th: f64| {
                let (s, co) = (th.sin().abs(), th.cos().abs());
                (hx / co.max(1e-300)).min(hy / s.max(1e-300))
            };
            let mut far = f64::INFINITY;
            for w in breaks.windows(2) {
                let panels = 3;
                let pw = (w[1] - w[0]) / panels as f64;
                for p in 0..panels {
                    let mid = w[0] + (p as f64 + 0.5) * pw;
                    for q in 0..4 {
                        let th = mid + 0.5 * pw * GL4_X[q];
                        let wt = 0.5 * pw * GL4_W[q];
                        let mut a = r_box(th);
                        for _ in 0..EXTERIOR_DOUBLINGS {
                            let b = 2.0 * a;
                            for qq in 0..4 {
                                let r = 0.5 * (a + b) + 0.5 * (b - a) * GL4_X[qq];
                                points.push([center[0] + r * th.cos(), center[1] + r * th.sin()]);
                                weights.push(wt * 0.5 * (b - a) * GL4_W[qq] * r);
                            }
                            a = b;
                        }
                        far = far.min(a);
                    }
                }
            }
            ExteriorQuadrature {
                points,
                weights,
                center,
                far_radius: far,
            }
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `int_{|x - c| > rho} (A |x - c|^{-decay})^p dx` for `decay * p > N`.
pub(crate) fn far_field_integral(dim: usize, amplitude: f64, decay: f64, p: f64, rho: f64) -> f64 {
    let k = decay * p - dim as f64;
    if k <= 0.0 || amplitude == 0.0 {
        return 0.0;
    }
    let surface = if dim == 1 { 2.0 } else { 2.0 * PI };
    amplitude.powf(p) * surface * rho.powf(-k) / k
}

fn key(v: f64) -> u64 {
    v.to_bits()
}

/// Per-grid cache of kernel tables, exterior tails and exterior weights.
#[derive(Default)]
pub(crate) struct KernelCache {
    power: RwLock<HashMap<u64, Arc<PowerTable>>>,
    odd: RwLock<HashMap<u64, Arc<OddTable>>>,
    tails: RwLock<HashMap<u64, Arc<Vec<f64>>>>,
    exterior: OnceLock<Arc<ExteriorQuadrature>>,
    exterior_weights: RwLock<HashMap<u64, Arc<Vec<f64>>>>,
}

fn cached<T>(map: &RwLock<HashMap<u64, Arc<T>>>, k: u64, build: impl FnOnce() -> T) -> Arc<T> {
    if let Some(v) = map.read().expect("kernel cache poisoned").get(&k) {
        return Arc::clone(v);
    }
    let v = Arc::new(build());
    let mut w = map.write().expect("kernel cache poisoned");
    Arc::clone(w.entry(k).or_insert(v))
}

fn table_extent(grid: &Grid) -> [i64; 2] {
    let (lo, hi) = grid.lattice_box();
    [hi[0] - lo[0], hi[1] - lo[1]]
}

/// Unit-cell table of `|z|^{-(N+beta)}` sized for the grid's lattice box.
pub(crate) fn power_table(grid: &Grid, beta: f64) -> Arc<PowerTable> {
    cached(&grid.cache.power, key(beta), || {
        PowerTable::new(grid.dimension(), beta, table_extent(grid))
    })
}

pub(crate) fn odd_table(grid: &Grid, t: f64) -> Arc<OddTable> {
    cached(&grid.cache.odd, key(t), || OddTable::new(grid.dimension(), t, table_extent(grid)))
}

/// `tail_i = int_{R^N \ cells} |x_i - y|^{-(N+beta)} dy` for every node, `beta > 0`.
///
/// Split into the exact integral outside the lattice bounding box and the
/// lattice cells inside the box that are not grid cells.
pub(crate) fn exterior_tails(grid: &Grid, beta: f64) -> Arc<Vec<f64>> {
    cached(&grid.cache.tails, key(beta), || {
        let table = power_table(grid, beta);
        let scale = table.scale(grid.spacing());
        let (lo, hi) = grid.lattice_box();
        let (blo, bhi) = grid.box_bounds();
        let mut holes = Vec::new();
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                if grid.node_at([i, j]).is_none() {
                    holes.push([i, j]);
                }
            }
        }
        let dim = grid.dimension();
        (0..grid.len())
            .into_par_iter()
            .map(|n| {
                let k = grid.lattice_index(n);
                let inner: f64 = holes.iter().map(|c| table.unit(c[0] - k[0], c[1] - k[1])).sum();
                scale * inner + box_exterior_integral(dim, grid.node(n), blo, bhi, beta)
            })
            .collect()
    })
}

pub(crate) fn exterior_quadrature(grid: &Grid) -> Arc<ExteriorQuadrature> {
    Arc::clone(grid.cache.exterior.get_or_init(|| Arc::new(ExteriorQuadrature::new(grid))))
}

/// Row-major `(exterior points) x (nodes)` matrix of `int_{cell_j} |x_e - y|^{-e} dy`.
pub(crate) fn exterior_weights(grid: &Grid, e: f64) -> Arc<Vec<f64>> {
    cached(&grid.cache.exterior_weights, key(e), || {
        let ext = exterior_quadrature(grid);
        let n = grid.len();
        let dim = grid.dimension();
        let h = grid.spacing();
        let mut out = vec![0.0; ext.len() * n];
        out.par_chunks_mut(n).zip(ext.points.par_iter()).for_each(|(row, &p)| {
            for (j, w) in row.iter_mut().enumerate() {
                *w = point_cell_power(dim, p, grid.node(j), h, e);
            }
        });
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_grid::{make_grid, Domain};

    /// Independent midpoint-rule oracle on a fine sub-lattice.
    fn brute_rect(f: impl Fn(f64, f64) -> f64, x0: f64, x1: f64, y0: f64, y1: f64, n: usize) -> f64 {
        let (dx, dy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += f(x0 + (i as f64 + 0.5) * dx, y0 + (j as f64 + 0.5) * dy);
            }
        }
        s * dx * dy
    }

    #[test]
    fn one_dimensional_cells_match_closed_form() {
        for beta in [0.3, 1.0, 1.6, -0.4] {
            for k in [1_i64, 2, 7, 1000] {
                let a = k as f64 - 0.5;
                let want = (a.powf(-beta) - (a + 1.0).powf(-beta)) / beta;
                let got = unit_power_1d(k, beta);
                assert!(((got - want) / want).abs() < 1e-11, "beta {beta} k {k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn two_dimensional_cells_match_brute_force() {
        for beta in [0.8, 1.2] {
            for (i, j) in [(1, 0), (1, 1), (3, 2), (10, 0)] {
                let got = unit_power_2d(i, j, beta);
                let f = |x: f64, y: f64| (x * x + y * y).powf(-0.5 * (2.0 + beta));
                let (x, y) = (i as f64, j as f64);
                let want = brute_rect(f, x - 0.5, x + 0.5, y - 0.5, y + 0.5, 2000);
                assert!(((got - want) / want).abs() < 1e-5, "({i},{j}) beta {beta}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn weak_self_cell_matches_brute_force() {
        for alpha in [0.5, 1.0, 1.5] {
            let got = unit_weak_self(2, alpha);
            // Polar oracle over the square: 8 int_0^{pi/4} (1/(2cos))^alpha / alpha.
            let n = 200_000;
            let mut s = 0.0;
            for k in 0..n {
                let th = (k as f64 + 0.5) * (PI / 4.0) / n as f64;
                s += (0.5 / th.cos()).powf(alpha) / alpha;
            }
            let want = 8.0 * s * (PI / 4.0) / n as f64;
            assert!(((got - want) / want).abs() < 1e-9, "alpha {alpha}: {got} vs {want}");
        }
    }

    #[test]
    fn box_exterior_matches_polar_quadrature() {
        let (lo, hi) = ([-1.0, -0.5], [2.0, 1.0]);
        for beta in [0.4, 1.0, 1.8] {
            for x in [[0.0, 0.0], [1.9, 0.9], [-0.99, 0.2]] {
                let got = box_exterior_integral(2, x, lo, hi, beta);
                // Oracle: integrate r_box(theta)^{-beta}/beta in theta with a fine midpoint rule.
                let n = 400_000;
                let mut s = 0.0;
                for k in 0..n {
                    let th = (k as f64 + 0.5) * 2.0 * PI / n as f64;
                    let (c, sn) = (th.cos(), th.sin());
                    let rx = if c > 0.0 { (hi[0] - x[0]) / c } else { (lo[0] - x[0]) / c };
                    let ry = if sn > 0.0 { (hi[1] - x[1]) / sn } else { (lo[1] - x[1]) / sn };
                    s += rx.min(ry).powf(-beta) / beta;
                }
                let want = s * 2.0 * PI / n as f64;
                assert!(((got - want) / want).abs() < 1e-6, "beta {beta} x {x:?}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn box_exterior_1d() {
        let v = box_exterior_integral(1, [0.0, 0.0], [-1.0, 0.0], [1.0, 0.0], 1.0);
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn point_cell_matches_table_on_lattice() {
        let g = make_grid(Domain::unit_ball(2), 0.1).unwrap();
        let beta = 0.7;
        let t = power_table(&g, beta);
        let (a, b) = (g.node(0), g.node(5));
        let (ka, kb) = (g.lattice_index(0), g.lattice_index(5));
        let from_table = t.scale(0.1) * t.unit(kb[0] - ka[0], kb[1] - ka[1]);
        let direct = point_cell_power(2, a, b, 0.1, 2.0 + beta);
        assert!(((from_table - direct) / direct).abs() < 1e-5);
    }

    #[test]
    fn exterior_quadrature_integrates_decaying_kernel() {
        // int_{R \ (-1,1)} |x|^{-3} dx = 1 on the unit interval (box matches domain).
        let g = make_grid(Domain::unit_ball(1), 1.0 / 64.0).unwrap();
        let q = exterior_quadrature(&g);
        let s: f64 = q.points.iter().zip(&q.weights).map(|(p, w)| w * p[0].abs().powi(-3)).sum();
        let far = far_field_integral(1, 1.0, 3.0, 1.0, q.far_radius);
        assert!((s + far - 1.0).abs() < 2e-3, "{}", s + far);
    }

    #[test]
    fn exterior_quadrature_2d_area() {
        // int over R^2 \ cells of |x|^{-4}: compare with ring integral outside the disk.
        let g = make_grid(Domain::unit_ball(2), 1.0 / 16.0).unwrap();
        let q = exterior_quadrature(&g);
        let s: f64 = q.points.iter().zip(&q.weights).map(|(p, w)| w * (p[0].hypot(p[1])).powi(-4)).sum();
        let far = far_field_integral(2, 1.0, 4.0, 1.0, q.far_radius);
        let want = PI; // 2 pi int_1^inf r^{-3} dr
        assert!(((s + far - want) / want).abs() < 0.05, "{} vs {want}", s + far);
    }
}
