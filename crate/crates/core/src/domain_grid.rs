//! Bounded domains, uniform cell-centered grids and grid functions.
//!
//! Every grid is the intersection of a uniform Cartesian lattice with the
//! domain: a lattice cell is kept iff its center lies strictly inside. Fields
//! store one value per kept cell and are implicitly zero everywhere else in
//! `R^N`, which is how the exterior Dirichlet condition enters every
//! operator in this crate.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::KernelCache;

/// A point of `R^N`. In one dimension the second coordinate is ignored and kept at zero.
pub type Point = [f64; 2];

/// Euclidean distance between two points (both coordinates; 1D points carry a zero second coordinate).
pub fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Bounded domain `Omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Domain {
    /// Open interval `(a, b)` of the real line.
    Interval { a: f64, b: f64 },
    /// Open disk in the plane.
    Disk { center: [f64; 2], radius: f64 },
    /// Open axis-aligned square `corner + (0, side)^2`.
    Square { corner: [f64; 2], side: f64 },
}

/// Distance from a point to the boundary of a domain, with the side it was measured from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryDistance {
    pub distance: f64,
    /// The point lies outside the open domain (or on its boundary).
    pub exterior: bool,
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        let d = Domain::Interval { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Result<Self> {
        let d = Domain::Disk { center, radius };
        d.validate()?;
        Ok(d)
    }

    pub fn square(corner: [f64; 2], side: f64) -> Result<Self> {
        let d = Domain::Square { corner, side };
        d.validate()?;
        Ok(d)
    }

    /// The unit ball of the given dimension, centered at the origin.
    pub fn unit_ball(dimension: usize) -> Self {
        match dimension {
            1 => Domain::Interval { a: -1.0, b: 1.0 },
            _ => Domain::Disk {
                center: [0.0, 0.0],
                radius: 1.0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match *self {
            Domain::Interval { a, b } => {
                if !finite(&[a, b]) || a >= b {
                    return Err(Error::InvalidDomain(format!("interval requires a < b, got ({a}, {b})")));
                }
            }
            Domain::Disk { center, radius } => {
                if !finite(&[center[0], center[1], radius]) || radius <= 0.0 {
                    return Err(Error::InvalidDomain(format!("disk radius must be positive, got {radius}")));
                }
            }
            Domain::Square { corner, side } => {
                if !finite(&[corner[0], corner[1], side]) || side <= 0.0 {
                    return Err(Error::InvalidDomain(format!("square side must be positive, got {side}")));
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Lebesgue measure `|Omega|`.
    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Disk { radius, .. } => std::f64::consts::PI * radius * radius,
            Domain::Square { side, .. } => side * side,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Disk { radius, .. } => 2.0 * radius,
            Domain::Square { side, .. } => side * std::f64::consts::SQRT_2,
        }
    }

    /// Distance from the origin to the closure of the domain (zero if the origin is inside).
    pub fn dist_to_origin(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => {
                if a <= 0.0 && 0.0 <= b {
                    0.0
                } else {
                    a.abs().min(b.abs())
                }
            }
            Domain::Disk { center, radius } => (center[0].hypot(center[1]) - radius).max(0.0),
            Domain::Square { corner, side } => {
                let gap = |lo: f64| (lo - 0.0).max(0.0).max(0.0 - (lo + side));
                gap(corner[0]).hypot(gap(corner[1]))
            }
        }
    }

    /// Center of the largest inscribed ball.
    pub fn incenter(&self) -> Point {
        match *self {
            Domain::Interval { a, b } => [0.5 * (a + b), 0.0],
            Domain::Disk { center, .. } => center,
            Domain::Square { corner, side } => [corner[0] + 0.5 * side, corner[1] + 0.5 * side],
        }
    }

    pub fn inradius(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => 0.5 * (b - a),
            Domain::Disk { radius, .. } => radius,
            Domain::Square { side, .. } => 0.5 * side,
        }
    }

    /// Whether `p` lies in the open domain.
    pub fn contains(&self, p: Point) -> bool {
        !self.boundary_distance(p).exterior
    }

    /// Exact distance from `p` to the boundary. Points on the boundary count as exterior.
    pub fn boundary_distance(&self, p: Point) -> BoundaryDistance {
        match *self {
            Domain::Interval { a, b } => {
                let x = p[0];
                let exterior = x <= a || x >= b;
                let distance = if exterior { (a - x).max(x - b) } else { (x - a).min(b - x) };
                BoundaryDistance { distance, exterior }
            }
            Domain::Disk { center, radius } => {
                let r = distance(p, center);
                BoundaryDistance {
                    distance: (radius - r).abs(),
                    exterior: r >= radius,
                }
            }
            Domain::Square { corner, side } => {
                let (x0, y0) = (corner[0], corner[1]);
                let (x1, y1) = (x0 + side, y0 + side);
                let inside = p[0] > x0 && p[0] < x1 && p[1] > y0 && p[1] < y1;
                if inside {
                    let d = (p[0] - x0).min(x1 - p[0]).min(p[1] - y0).min(y1 - p[1]);
                    BoundaryDistance {
                        distance: d,
                        exterior: false,
                    }
                } else {
                    let dx = (x0 - p[0]).max(0.0).max(p[0] - x1);
                    let dy = (y0 - p[1]).max(0.0).max(p[1] - y1);
                    BoundaryDistance {
                        distance: dx.hypot(dy),
                        exterior: true,
                    }
                }
            }
        }
    }

    /// Radius `R >= 1/3 + 4/3 (diam + dist(0, Omega))` beyond which the far-field
    /// estimates for exterior evaluation apply.
    pub fn tail_radius(&self) -> f64 {
        1.0 / 3.0 + 4.0 / 3.0 * (self.diameter() + self.dist_to_origin())
    }
}

/// A uniform cell-centered grid on a [`Domain`].
///
/// Cell `k` of the underlying lattice has center `origin + (k + 1/2) h`
/// (componentwise); only the cells whose centers lie inside the domain are
/// nodes. The lattice bounding box of the nodes is kept because the exterior
/// tail integrals are computed relative to it.
pub struct Grid {
    domain: Domain,
    h: f64,
    origin: Point,
    lattice: Vec<[i64; 2]>,
    nodes: Vec<Point>,
    delta: Vec<f64>,
    box_lo: [i64; 2],
    box_hi: [i64; 2],
    tail_radius: f64,
    index: HashMap<[i64; 2], usize>,
    pub(crate) cache: KernelCache,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("domain", &self.domain)
            .field("h", &self.h)
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

/// Builds the grid of cell centers of spacing `h` inside `domain`.
pub fn make_grid(domain: Domain, h: f64) -> Result<Arc<Grid>> {
    Grid::new(domain, h).map(Arc::new)
}

impl Grid {
    pub fn new(domain: Domain, h: f64) -> Result<Self> {
        domain.validate()?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::out_of_range("h", h, "(0, inf)"));
        }
        let (origin, extent) = match domain {
            Domain::Interval { a, b } => ([a, 0.0], [((b - a) / h).ceil() as i64 + 1, 1]),
            Domain::Square { corner, side } => {
                let k = (side / h).ceil() as i64 + 1;
                (corner, [k, k])
            }
            Domain::Disk { center, radius } => {
                let m = (radius / h).ceil() as i64 + 1;
                ([center[0] - m as f64 * h, center[1] - m as f64 * h], [2 * m, 2 * m])
            }
        };
        if extent[0] > 1 << 24 || extent[0] * extent[1] > 1 << 26 {
            return Err(Error::out_of_range("h", h, "too fine for a dense grid"));
        }
        let dim = domain.dimension();
        let mut lattice = Vec::new();
        let mut nodes = Vec::new();
        let mut delta = Vec::new();
        for j in 0..extent[1] {
            for i in 0..extent[0] {
                let c = [
                    origin[0] + (i as f64 + 0.5) * h,
                    if dim == 1 { 0.0 } else { origin[1] + (j as f64 + 0.5) * h },
                ];
                let bd = domain.boundary_distance(c);
                if !bd.exterior && bd.distance > 0.0 {
                    lattice.push([i, j]);
                    nodes.push(c);
                    delta.push(bd.distance);
                }
            }
        }
        if nodes.len() < 3 {
            return Err(Error::GridTooCoarse { h, nodes: nodes.len() });
        }
        let mut box_lo = [i64::MAX; 2];
        let mut box_hi = [i64::MIN; 2];
        for k in &lattice {
            for d in 0..2 {
                box_lo[d] = box_lo[d].min(k[d]);
                box_hi[d] = box_hi[d].max(k[d]);
            }
        }
        let index = lattice.iter().enumerate().map(|(n, k)| (*k, n)).collect();
        Ok(Grid {
            domain,
            h,
            origin,
            lattice,
            nodes,
            delta,
            box_lo,
            box_hi,
            tail_radius: domain.tail_radius(),
            index,
            cache: KernelCache::default(),
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    /// Lattice index of node `i`.
    pub fn lattice_index(&self, i: usize) -> [i64; 2] {
        self.lattice[i]
    }

    pub fn lattice(&self) -> &[[i64; 2]] {
        &self.lattice
    }

    /// Node number of the cell with the given lattice index, if it is a node.
    pub fn node_at(&self, k: [i64; 2]) -> Option<usize> {
        self.index.get(&k).copied()
    }

    /// Volume `h^N` of every cell.
    pub fn cell_measure(&self) -> f64 {
        self.h.powi(self.dimension() as i32)
    }

    /// Total measure of the kept cells, the discrete `|Omega|`.
    pub fn total_measure(&self) -> f64 {
        self.cell_measure() * self.len() as f64
    }

    /// Boundary distance `delta(x_i)` of every node.
    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn tail_radius(&self) -> f64 {
        self.tail_radius
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    /// Center of the lattice cell `k`.
    pub fn cell_center(&self, k: [i64; 2]) -> Point {
        let y = if self.dimension() == 1 {
            0.0
        } else {
            self.origin[1] + (k[1] as f64 + 0.5) * self.h
        };
        [self.origin[0] + (k[0] as f64 + 0.5) * self.h, y]
    }

    /// Inclusive lattice bounding box of the nodes.
    pub fn lattice_box(&self) -> ([i64; 2], [i64; 2]) {
        (self.box_lo, self.box_hi)
    }

    /// Physical corners `(lower, upper)` of the lattice bounding box.
    pub fn box_bounds(&self) -> (Point, Point) {
        let lo = [
            self.origin[0] + self.box_lo[0] as f64 * self.h,
            self.origin[1] + self.box_lo[1] as f64 * self.h,
        ];
        let hi = [
            self.origin[0] + (self.box_hi[0] + 1) as f64 * self.h,
            self.origin[1] + (self.box_hi[1] + 1) as f64 * self.h,
        ];
        (lo, hi)
    }

    /// Lattice cell containing `p`, if any node cell does.
    pub fn cell_containing(&self, p: Point) -> Option<usize> {
        let i = ((p[0] - self.origin[0]) / self.h).floor() as i64;
        let j = if self.dimension() == 1 {
            0
        } else {
            ((p[1] - self.origin[1]) / self.h).floor() as i64
        };
        self.node_at([i, j])
    }

    /// Node whose center coincides with `p` up to `1e-9 h`, if any.
    pub fn node_matching(&self, p: Point) -> Option<usize> {
        self.cell_containing(p)
            .filter(|&n| distance(self.nodes[n], p) <= 1e-9 * self.h)
    }
}

/// Real values on the nodes of a grid; zero everywhere outside the kept cells.
#[derive(Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("nodes", &self.values.len())
            .field("h", &self.grid.h)
            .finish()
    }
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(values.len(), grid.len()));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(Point) -> f64) -> Self {
        Field {
            grid: Arc::clone(grid),
            values: grid.nodes.iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Node-wise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.check_same_grid(other)?;
        Ok(Field {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + c * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Quadrature of the field over `Omega`: `sum_i u_i h^N`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_measure()
    }

    /// Weighted inner product `sum_i u_i v_i h^N`.
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.grid.cell_measure())
    }

    pub(crate) fn check_same_grid(&self, other: &Field) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, &other.grid) {
            return Err(Error::GridMismatch(self.len(), other.len()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_half_spacing_has_four_nodes() {
        let g = make_grid(Domain::interval(-1.0, 1.0).unwrap(), 0.5).unwrap();
        let xs: Vec<f64> = g.nodes().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-0.75, -0.25, 0.25, 0.75]);
        for (p, d) in g.nodes().iter().zip(g.delta()) {
            assert_eq!(*d, 1.0 - p[0].abs());
        }
    }

    #[test]
    fn coarse_disk_is_rejected() {
        let err = make_grid(Domain::disk([0.0, 0.0], 1.0).unwrap(), 2.5).unwrap_err();
        assert!(matches!(err, Error::GridTooCoarse { .. }));
    }

    #[test]
    fn square_lattice_fills_the_square() {
        let g = make_grid(Domain::square([0.0, 0.0], 1.0).unwrap(), 1.0 / 64.0).unwrap();
        assert_eq!(g.len(), 4096);
        assert_eq!(g.total_measure(), 1.0);
    }

    #[test]
    fn boundary_distance_examples() {
        let i = Domain::interval(-1.0, 1.0).unwrap();
        assert_eq!(i.boundary_distance([0.0, 0.0]).distance, 1.0);
        let d = Domain::disk([0.0, 0.0], 1.0).unwrap();
        assert!((d.boundary_distance([0.6, 0.0]).distance - 0.4).abs() < 1e-15);
        let s = Domain::square([0.0, 0.0], 1.0).unwrap();
        assert_eq!(s.boundary_distance([0.5, 0.125]).distance, 0.125);
        let out = s.boundary_distance([2.0, 2.0]);
        assert!(out.exterior);
        assert!((out.distance - std::f64::consts::SQRT_2).abs() < 1e-15);
        let out = i.boundary_distance([3.0, 0.0]);
        assert!(out.exterior && out.distance == 2.0);
    }

    #[test]
    fn invalid_domains_rejected() {
        assert!(Domain::interval(1.0, 1.0).is_err());
        assert!(Domain::disk([0.0, 0.0], -1.0).is_err());
        assert!(Domain::square([0.0, 0.0], 0.0).is_err());
        assert!(make_grid(Domain::unit_ball(1), 0.0).is_err());
    }

    #[test]
    fn tail_radius_bound() {
        for d in [
            Domain::unit_ball(1),
            Domain::unit_ball(2),
            Domain::square([1.0, 2.0], 0.5).unwrap(),
        ] {
            let g = make_grid(d, 0.05).unwrap();
            assert!(g.tail_radius() >= 1.0 / 3.0 + 4.0 / 3.0 * (d.diameter() + d.dist_to_origin()) - 1e-15);
        }
        let s = Domain::square([1.0, 2.0], 0.5).unwrap();
        assert!((s.dist_to_origin() - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn disk_measure_converges() {
        let d = Domain::unit_ball(2);
        let mut errs = Vec::new();
        for h in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
            let g = make_grid(d, h).unwrap();
            let e = (g.total_measure() - d.measure()).abs() / d.measure();
            assert!(e <= 2.0 * h, "relative error {e} at h = {h}");
            errs.push(e);
        }
        assert!(errs.last().unwrap() < errs.first().unwrap());
    }

    #[test]
    fn nodes_are_interior() {
        for d in [Domain::unit_ball(1), Domain::unit_ball(2), Domain::square([0.0, 0.0], 1.0).unwrap()] {
            let g = make_grid(d, 0.07).unwrap();
            for (&p, &dl) in g.nodes().iter().zip(g.delta()) {
                assert!(d.contains(p));
                assert!(dl > 0.0);
            }
        }
    }

    #[test]
    fn refinement_covers_coarse_cells() {
        for d in [Domain::unit_ball(1), Domain::unit_ball(2), Domain::square([0.0, 0.0], 1.0).unwrap()] {
            let coarse = make_grid(d, 0.1).unwrap();
            let fine = make_grid(d, 0.05).unwrap();
            let mut covered = vec![false; coarse.len()];
            for &p in fine.nodes() {
                if let Some(c) = coarse.cell_containing(p) {
                    covered[c] = true;
                }
            }
            assert!(covered.iter().all(|&c| c), "{d:?}");
        }
    }

    #[test]
    fn delta_is_one_lipschitz() {
        let g = make_grid(Domain::square([0.0, 0.0], 1.0).unwrap(), 0.1).unwrap();
        let n = g.len();
        for i in 0..n {
            for j in 0..n {
                let lhs = (g.delta()[i] - g.delta()[j]).abs();
                assert!(lhs <= distance(g.node(i), g.node(j)) + 1e-14);
            }
        }
    }

    #[test]
    fn domain_json_round_trip() {
        let d: Domain = serde_json::from_str(r#"{"shape":"disk","center":[0,0],"radius":1}"#).unwrap();
        assert_eq!(d, Domain::unit_ball(2));
        let err = serde_json::from_str::<Domain>(r#"{"shape":"interval","a":0,"b":1,"c":2}"#);
        assert!(err.is_err());
    }
}
