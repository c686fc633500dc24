//! Node-centered fields on uniform grids over boxes in one and two dimensions.
//!
//! Nodes are stored row-major with the first axis fastest: node `(i, j)` has
//! index `j * nx + i`. One-dimensional grids use the second axis with a single node.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::PotentialParams;
use crate::scalar::Real;

/// Relative slack used to snap sample coordinates onto grid nodes.
const SNAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    pub dim: usize,
    pub origin: [T; 2],
    pub extent: [T; 2],
    /// Cells per axis; the unused axis of a 1D grid has 0 cells.
    pub n_cells: [usize; 2],
    pub h: T,
}

impl<T: Real> Grid<T> {
    pub fn new_1d(origin: T, n_cells: usize, h: T) -> Result<Self> {
        if n_cells == 0 || !(h > T::zero()) || !origin.is_finite() {
            return Err(Error::Shape(format!("1D grid needs n >= 1 and h > 0 (n = {n_cells}, h = {h})")));
        }
        Ok(Self {
            dim: 1,
            origin: [origin, T::zero()],
            extent: [h * T::of_usize(n_cells), T::zero()],
            n_cells: [n_cells, 0],
            h,
        })
    }

    pub fn new_2d(origin: [T; 2], n_cells: [usize; 2], h: T) -> Result<Self> {
        if n_cells[0] == 0 || n_cells[1] == 0 || !(h > T::zero()) {
            return Err(Error::Shape(format!("2D grid needs n >= 1 per axis and h > 0 (n = {n_cells:?}, h = {h})")));
        }
        Ok(Self {
            dim: 2,
            origin,
            extent: [h * T::of_usize(n_cells[0]), h * T::of_usize(n_cells[1])],
            n_cells,
            h,
        })
    }

    /// Grid over a box given by its side lengths; the spacing must agree across axes.
    pub fn from_extent(dim: usize, origin: [T; 2], extent: [T; 2], n_cells: [usize; 2]) -> Result<Self> {
        match dim {
            1 => Self::new_1d(origin[0], n_cells[0], extent[0] / T::of_usize(n_cells[0].max(1))),
            2 => {
                let h0 = extent[0] / T::of_usize(n_cells[0].max(1));
                let h1 = extent[1] / T::of_usize(n_cells[1].max(1));
                if ((h0 - h1) / h0).abs() > T::of(1e-12) {
                    return Err(Error::Shape(format!("spacing differs across axes: {h0} vs {h1}")));
                }
                Self::new_2d(origin, n_cells, h0)
            }
            _ => Err(Error::Shape(format!("dimension {dim} not supported"))),
        }
    }

    /// `[0, 1]` with `n` cells.
    pub fn unit_interval(n: usize) -> Result<Self> {
        Self::new_1d(T::zero(), n, T::one() / T::of_usize(n.max(1)))
    }

    /// `[0, 1]²` with `n` cells per axis.
    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new_2d([T::zero(); 2], [n, n], T::one() / T::of_usize(n.max(1)))
    }

    /// Node counts per axis.
    pub fn shape(&self) -> [usize; 2] {
        [self.n_cells[0] + 1, self.n_cells[1] + 1]
    }

    pub fn len(&self) -> usize {
        let [nx, ny] = self.shape();
        nx * ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.n_cells[0] + 1) + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        let nx = self.n_cells[0] + 1;
        (idx % nx, idx / nx)
    }

    pub fn position(&self, idx: usize) -> [T; 2] {
        let (i, j) = self.coords(idx);
        [
            self.origin[0] + T::of_usize(i) * self.h,
            self.origin[1] + T::of_usize(j) * self.h,
        ]
    }

    /// `h^dim`, the volume attributed to one node.
    pub fn cell_volume(&self) -> T {
        self.h.powi(self.dim as i32)
    }

    /// Outermost layer of nodes.
    pub fn is_outer(&self, idx: usize) -> bool {
        let (i, j) = self.coords(idx);
        let [nx, ny] = self.shape();
        i == 0 || i + 1 == nx || (self.dim == 2 && (j == 0 || j + 1 == ny))
    }

    /// Axis neighbors of a node inside the grid.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> {
        let (i, j) = self.coords(idx);
        let [nx, ny] = self.shape();
        let dim = self.dim;
        let mut out = [usize::MAX; 4];
        if i > 0 {
            out[0] = idx - 1;
        }
        if i + 1 < nx {
            out[1] = idx + 1;
        }
        if dim == 2 {
            if j > 0 {
                out[2] = idx - nx;
            }
            if j + 1 < ny {
                out[3] = idx + nx;
            }
        }
        out.into_iter().filter(|&k| k != usize::MAX)
    }

    /// Each axis edge `(a, b)` with `b = a + e_axis`, once.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let [nx, ny] = self.shape();
        let horizontal = (0..ny).flat_map(move |j| (0..nx - 1).map(move |i| (j * nx + i, j * nx + i + 1)));
        let vertical = (0..ny.saturating_sub(1)).flat_map(move |j| (0..nx).map(move |i| (j * nx + i, (j + 1) * nx + i)));
        horizontal.chain(vertical)
    }

    /// Fractional node coordinates of a point, snapped onto nodes within `SNAP`.
    fn locate(&self, x: [T; 2]) -> Result<[(usize, T); 2]> {
        let mut out = [(0, T::zero()); 2];
        for axis in 0..self.dim {
            let n = self.n_cells[axis];
            let s = (x[axis] - self.origin[axis]) / self.h;
            let nearest = s.round();
            let s = if (s - nearest).abs() <= T::of(SNAP) { nearest } else { s };
            if !(s >= T::zero() && s <= T::of_usize(n)) {
                return Err(Error::OutOfBox(format!(
                    "coordinate {} on axis {axis} outside [{}, {}]",
                    x[axis],
                    self.origin[axis],
                    self.origin[axis] + self.extent[axis]
                )));
            }
            let cell = s.floor().to_usize().unwrap_or(0).min(n.saturating_sub(1));
            out[axis] = (cell, s - T::of_usize(cell));
        }
        Ok(out)
    }

    /// Grid with half the cells per axis over the same box, when the counts are even.
    pub fn coarsen(&self) -> Option<Self> {
        let even = |n: usize| n >= 2 && n % 2 == 0;
        match self.dim {
            1 if even(self.n_cells[0]) => Self::new_1d(self.origin[0], self.n_cells[0] / 2, self.h * T::of(2.0)).ok(),
            2 if even(self.n_cells[0]) && even(self.n_cells[1]) => {
                Self::new_2d(self.origin, [self.n_cells[0] / 2, self.n_cells[1] / 2], self.h * T::of(2.0)).ok()
            }
            _ => None,
        }
    }
}

/// Nodal values `u >= 0` with a Dirichlet mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField<T> {
    pub grid: Grid<T>,
    pub values: Vec<T>,
    pub boundary_mask: Vec<bool>,
}

impl<T: Real> ScalarField<T> {
    /// Checks shape, finiteness and nonnegativity; the mask defaults to the outer layer.
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("value at node {k}")));
        }
        if let Some(k) = values.iter().position(|&v| v < T::zero()) {
            return Err(Error::Domain(format!("negative value {} at node {k}", values[k])));
        }
        let boundary_mask = (0..grid.len()).map(|k| grid.is_outer(k)).collect();
        Ok(Self {
            grid,
            values,
            boundary_mask,
        })
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        Self::new(grid, vec![T::zero(); grid.len()]).expect("zero field is valid")
    }

    pub fn from_fn<F: Fn([T; 2]) -> T>(grid: Grid<T>, f: F) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.position(k))).collect();
        Self::new(grid, values)
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.values.len() {
            return Err(Error::Shape("boundary mask length differs from node count".into()));
        }
        self.boundary_mask = mask;
        Ok(self)
    }

    /// Bilinear (linear in 1D) interpolation at a point of the box.
    pub fn sample(&self, x: [T; 2]) -> Result<T> {
        let g = &self.grid;
        let [(i, fx), (j, fy)] = g.locate(x)?;
        let v = |di: usize, dj: usize| self.values[g.index(i + di, j + dj)];
        let one = T::one();
        let along = |dj: usize| -> T {
            if fx == T::zero() || g.n_cells[0] == 0 {
                v(0, dj)
            } else if fx == one {
                v(1, dj)
            } else {
                v(0, dj) * (one - fx) + v(1, dj) * fx
            }
        };
        if g.dim == 1 || fy == T::zero() {
            Ok(along(0))
        } else if fy == one {
            Ok(along(1))
        } else {
            Ok(along(0) * (one - fy) + along(1) * fy)
        }
    }

    pub fn max_value(&self) -> T {
        self.values.iter().cloned().fold(T::zero(), T::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndicatorField<T> {
    pub grid: Grid<T>,
    pub member: Vec<bool>,
}

impl<T: Real> IndicatorField<T> {
    pub fn new(grid: Grid<T>, member: Vec<bool>) -> Result<Self> {
        if member.len() != grid.len() {
            return Err(Error::Shape(format!("{} flags for {} nodes", member.len(), grid.len())));
        }
        Ok(Self { grid, member })
    }

    pub fn from_fn<F: Fn([T; 2]) -> bool>(grid: Grid<T>, f: F) -> Self {
        let member = (0..grid.len()).map(|k| f(grid.position(k))).collect();
        Self { grid, member }
    }

    pub fn full(grid: Grid<T>) -> Self {
        Self {
            grid,
            member: vec![true; grid.len()],
        }
    }

    pub fn empty(grid: Grid<T>) -> Self {
        Self {
            grid,
            member: vec![false; grid.len()],
        }
    }

    pub fn count(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.member.iter().any(|&m| m)
    }

    pub fn complement(&self) -> Self {
        Self {
            grid: self.grid,
            member: self.member.iter().map(|m| !m).collect(),
        }
    }

    pub fn and(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            member: self.member.iter().zip(&other.member).map(|(a, b)| *a && *b).collect(),
        }
    }

    /// Members whose axis neighbors are all members.
    pub fn erode(&self) -> Self {
        let g = &self.grid;
        let member = (0..g.len())
            .map(|k| self.member[k] && g.neighbors(k).all(|n| self.member[n]))
            .collect();
        Self { grid: self.grid, member }
    }

    /// `|set| h^dim`.
    pub fn volume(&self) -> T {
        T::of_usize(self.count()) * self.grid.cell_volume()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceField<T> {
    pub grid: Grid<T>,
    pub dist: Vec<T>,
}

impl<T: Real> DistanceField<T> {
    /// Largest `|d(p) - d(q)| - h` over adjacent nodes; nonpositive for a 1-Lipschitz field.
    pub fn lipschitz_excess(&self) -> T {
        self.grid
            .edges()
            .map(|(a, b)| (self.dist[a] - self.dist[b]).abs() - self.grid.h)
            .fold(T::neg_infinity(), T::max)
    }

    pub fn as_field(&self) -> ScalarField<T> {
        ScalarField::new(self.grid, self.dist.clone()).expect("distances are finite and nonnegative")
    }
}

/// Nodes with `|x - center| <= r`.
pub fn ball_mask<T: Real>(grid: &Grid<T>, center: [T; 2], r: T) -> IndicatorField<T> {
    let r2 = r * r;
    IndicatorField::from_fn(*grid, |x| {
        let dx = x[0] - center[0];
        let dy = if grid.dim == 2 { x[1] - center[1] } else { T::zero() };
        dx * dx + dy * dy <= r2
    })
}

/// Exact Euclidean distance from every node to the nearest member node.
///
/// Separable lower-envelope transform on squared distances in index units, which are
/// integers and therefore exact in `f64`.
pub fn distance_transform<T: Real>(set: &IndicatorField<T>) -> Result<DistanceField<T>> {
    if set.is_empty() {
        return Err(Error::EmptySet("distance transform of an empty set".into()));
    }
    let g = &set.grid;
    let [nx, ny] = g.shape();
    let mut d2: Vec<f64> = set.member.iter().map(|&m| if m { 0.0 } else { f64::INFINITY }).collect();
    let mut line = Vec::new();
    let mut out = Vec::new();
    for j in 0..ny {
        line.clear();
        line.extend((0..nx).map(|i| d2[j * nx + i]));
        lower_envelope(&line, &mut out);
        for i in 0..nx {
            d2[j * nx + i] = out[i];
        }
    }
    if g.dim == 2 {
        for i in 0..nx {
            line.clear();
            line.extend((0..ny).map(|j| d2[j * nx + i]));
            lower_envelope(&line, &mut out);
            for j in 0..ny {
                d2[j * nx + i] = out[j];
            }
        }
    }
    Ok(DistanceField {
        grid: *g,
        dist: d2.into_iter().map(|v| T::of(v.sqrt()) * g.h).collect(),
    })
}

/// `out[q] = min_p f[p] + (q - p)²` by the parabola lower envelope.
fn lower_envelope(f: &[f64], out: &mut Vec<f64>) {
    let n = f.len();
    out.clear();
    out.resize(n, f64::INFINITY);
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k: usize = 0;
    let mut started = false;
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        if !started {
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            started = true;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            // z[0] = -inf, so this never pops the first parabola
            if s <= z[k] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    if !started {
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let d = q as f64 - p as f64;
        *o = f[p] + d * d;
    }
}

/// Direct minimum over all member nodes; quadratic cost, kept as the reference.
pub fn distance_transform_brute<T: Real>(set: &IndicatorField<T>) -> Result<DistanceField<T>> {
    if set.is_empty() {
        return Err(Error::EmptySet("distance transform of an empty set".into()));
    }
    let g = &set.grid;
    let members: Vec<(i64, i64)> = (0..g.len())
        .filter(|&k| set.member[k])
        .map(|k| {
            let (i, j) = g.coords(k);
            (i as i64, j as i64)
        })
        .collect();
    let dist = (0..g.len())
        .map(|k| {
            let (i, j) = g.coords(k);
            let best = members
                .iter()
                .map(|&(a, b)| (a - i as i64).pow(2) + (b - j as i64).pow(2))
                .min()
                .unwrap();
            T::of((best as f64).sqrt()) * g.h
        })
        .collect();
    Ok(DistanceField { grid: *g, dist })
}

/// `ũ(x) = u(y₀ + λx)/λ^α` sampled on the grid of `u`.
pub fn rescale<T: Real>(u: &ScalarField<T>, p: &PotentialParams<T>, y0: [T; 2], lambda: T) -> Result<ScalarField<T>> {
    rescale_onto(u, p, y0, lambda, &u.grid)
}

/// `ũ(x) = u(y₀ + λx)/λ^α` sampled on an arbitrary target grid.
pub fn rescale_onto<T: Real>(
    u: &ScalarField<T>,
    p: &PotentialParams<T>,
    y0: [T; 2],
    lambda: T,
    target: &Grid<T>,
) -> Result<ScalarField<T>> {
    if !(lambda > T::zero()) {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    let scale = lambda.powf(p.alpha);
    let unit = lambda == T::one();
    let values = (0..target.len())
        .map(|k| {
            let x = target.position(k);
            let y = [y0[0] + lambda * x[0], y0[1] + lambda * x[1]];
            let v = u.sample(y)?;
            Ok(if unit { v } else { v / scale })
        })
        .collect::<Result<Vec<T>>>()?;
    ScalarField::new(*target, values)
}

/// Nodes with `u > dead_tol`.
pub fn positivity_set<T: Real>(u: &ScalarField<T>, dead_tol: T) -> IndicatorField<T> {
    IndicatorField {
        grid: u.grid,
        member: u.values.iter().map(|&v| v > dead_tol).collect(),
    }
}

/// Positions of the interface band: nodes with an axis neighbor of the other kind.
pub fn boundary_cells<T: Real>(set: &IndicatorField<T>) -> Vec<[T; 2]> {
    let g = &set.grid;
    (0..g.len())
        .filter(|&k| g.neighbors(k).any(|n| set.member[n] != set.member[k]))
        .map(|k| g.position(k))
        .collect()
}

/// Symmetrized Hausdorff distance between two point sets.
pub fn hausdorff_distance<T: Real>(a: &[[T; 2]], b: &[[T; 2]]) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet("Hausdorff distance needs nonempty point sets".into()));
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

fn directed_hausdorff<T: Real>(a: &[[T; 2]], b: &[[T; 2]]) -> T {
    a.iter()
        .map(|p| {
            b.iter()
                .map(|q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
                .fold(T::infinity(), T::min)
        })
        .fold(T::zero(), T::max)
        .sqrt()
}

fn write_header<T: Real, W: Write>(grid: &Grid<T>, out: &mut W) -> Result<()> {
    let [nx, ny] = grid.shape();
    if grid.dim == 1 {
        writeln!(out, "1 {} {} {}", nx, grid.h, grid.origin[0])?;
    } else {
        writeln!(out, "2 {} {} {} {} {}", nx, ny, grid.h, grid.origin[0], grid.origin[1])?;
    }
    Ok(())
}

/// Text format: header `dim n1 [n2] h ox [oy]` (node counts), then one value per line.
pub fn write_field<T: Real, W: Write>(u: &ScalarField<T>, mut out: W) -> Result<()> {
    write_header(&u.grid, &mut out)?;
    for v in &u.values {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

pub fn write_indicator<T: Real, W: Write>(set: &IndicatorField<T>, mut out: W) -> Result<()> {
    write_header(&set.grid, &mut out)?;
    for &m in &set.member {
        writeln!(out, "{}", m as u8)?;
    }
    Ok(())
}

fn read_body<T: Real, R: BufRead>(input: R) -> Result<(Grid<T>, Vec<T>)> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let num = |s: &str| -> Result<f64> { s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))) };
    let count = |s: &str| -> Result<usize> {
        match s.parse::<usize>() {
            Ok(n) if n >= 2 => Ok(n),
            _ => Err(Error::Parse(format!("node count {s:?} must be an integer >= 2"))),
        }
    };
    let grid = match parts.as_slice() {
        ["1", n1, h, ox] => Grid::new_1d(T::of(num(ox)?), count(n1)? - 1, T::of(num(h)?))?,
        ["2", n1, n2, h, ox, oy] => Grid::new_2d(
            [T::of(num(ox)?), T::of(num(oy)?)],
            [count(n1)? - 1, count(n2)? - 1],
            T::of(num(h)?),
        )?,
        _ => return Err(Error::Parse(format!("bad header {header:?}"))),
    };
    let mut values = Vec::with_capacity(grid.len());
    for line in lines {
        let line = line?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        values.push(T::of(num(s)?));
    }
    if values.len() != grid.len() {
        return Err(Error::Parse(format!("expected {} values, found {}", grid.len(), values.len())));
    }
    Ok((grid, values))
}

pub fn read_field<T: Real, R: BufRead>(input: R) -> Result<ScalarField<T>> {
    let (grid, values) = read_body(input)?;
    ScalarField::new(grid, values)
}

pub fn read_indicator<T: Real, R: BufRead>(input: R) -> Result<IndicatorField<T>> {
    let (grid, values) = read_body::<T, R>(input)?;
    let member = values
        .iter()
        .map(|&v| {
            if v == T::zero() {
                Ok(false)
            } else if v == T::one() {
                Ok(true)
            } else {
                Err(Error::Parse(format!("indicator value {v} is not 0 or 1")))
            }
        })
        .collect::<Result<Vec<bool>>>()?;
    IndicatorField::new(grid, member)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type G = Grid<f64>;

    #[test]
    fn grid_shape_and_spacing() {
        let g = G::unit_square(4).unwrap();
        assert_eq!(g.shape(), [5, 5]);
        assert_eq!(g.len(), 25);
        assert_eq!(g.position(g.index(4, 2)), [1.0, 0.5]);
        assert!(G::from_extent(2, [0.0; 2], [1.0, 0.5], [4, 3]).is_err());
        let r = G::from_extent(2, [0.0; 2], [1.0, 0.5], [8, 4]).unwrap();
        assert_eq!(r.h, 0.125);
        assert_eq!(g.edges().count(), 2 * 4 * 5);
        let line = G::unit_interval(10).unwrap();
        assert_eq!(line.edges().count(), 10);
        assert_eq!(line.neighbors(0).count(), 1);
        assert!(line.is_outer(10) && !line.is_outer(5));
    }

    #[test]
    fn ball_area() {
        let g = G::unit_square(256).unwrap();
        let m = ball_mask(&g, [0.5, 0.5], 0.25);
        let area = m.volume();
        let exact = std::f64::consts::PI / 16.0;
        assert!((area - exact).abs() / exact < 0.02);
        assert_eq!(ball_mask(&g, [0.5, 0.5], 2.0).count(), g.len());
        assert_eq!(ball_mask(&g, [0.5, 0.5], 0.4 / 256.0).count(), 1);
    }

    #[test]
    fn distance_to_singleton_and_half_plane() {
        let g = G::unit_square(16).unwrap();
        let p = g.index(3, 5);
        let mut set = IndicatorField::empty(g);
        set.member[p] = true;
        let d = distance_transform(&set).unwrap();
        for k in 0..g.len() {
            let (a, b) = (g.position(k), g.position(p));
            let exact = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            assert!((d.dist[k] - exact).abs() < 1e-14);
        }
        let half = IndicatorField::from_fn(g, |x| x[0] <= 0.5);
        let d = distance_transform(&half).unwrap();
        for k in 0..g.len() {
            let x = g.position(k);
            assert!((d.dist[k] - (x[0] - 0.5).max(0.0)).abs() <= g.h);
        }
        let full = distance_transform(&IndicatorField::full(g)).unwrap();
        assert!(full.dist.iter().all(|&v| v == 0.0));
        assert!(matches!(distance_transform(&IndicatorField::empty(g)), Err(Error::EmptySet(_))));
    }

    #[test]
    fn distance_in_one_dimension() {
        let g = G::unit_interval(8).unwrap();
        let set = IndicatorField::from_fn(g, |x| x[0] == 0.25 || x[0] == 1.0);
        let d = distance_transform(&set).unwrap();
        let exact = [0.25, 0.125, 0.0, 0.125, 0.25, 0.375, 0.25, 0.125, 0.0];
        assert_eq!(d.dist, exact);
    }

    proptest! {
        #[test]
        fn fast_transform_matches_brute_force(
            nx in 1usize..12, ny in 1usize..12, bits in proptest::collection::vec(any::<bool>(), 169)
        ) {
            let g = G::new_2d([0.0; 2], [nx, ny], 0.25).unwrap();
            let mut member: Vec<bool> = bits[..g.len()].to_vec();
            member[0] |= !member.iter().any(|&m| m);
            let set = IndicatorField::new(g, member).unwrap();
            let fast = distance_transform(&set).unwrap();
            let brute = distance_transform_brute(&set).unwrap();
            prop_assert_eq!(&fast.dist, &brute.dist);
            prop_assert!(fast.lipschitz_excess() <= 0.0);
            for k in 0..g.len() {
                if set.member[k] {
                    prop_assert_eq!(fast.dist[k], 0.0);
                }
            }
        }

        #[test]
        fn rescale_composition(l1 in 0.3f64..1.0, l2 in 0.3f64..1.0) {
            let p = PotentialParams::new(1.0).unwrap();
            let g = G::unit_square(32).unwrap();
            let u = ScalarField::from_fn(g, |x| 1.0 + x[0] * x[0] + 0.5 * x[1]).unwrap();
            let twice = rescale(&rescale(&u, &p, [0.0; 2], l1).unwrap(), &p, [0.0; 2], l2).unwrap();
            let once = rescale(&u, &p, [0.0; 2], l1 * l2).unwrap();
            for (a, b) in twice.values.iter().zip(&once.values) {
                prop_assert!((a - b).abs() <= 2.0 * g.h);
            }
        }
    }

    #[test]
    fn rescale_identity_is_bitwise() {
        let p = PotentialParams::new(1.3).unwrap();
        let g = G::new_2d([0.1, -0.2], [24, 16], 0.1 / 3.0).unwrap();
        let u = ScalarField::from_fn(g, |x| (x[0] * 7.0).sin().abs() + x[1] * x[1]).unwrap();
        let same = rescale(&u, &p, [0.0; 2], 1.0).unwrap();
        assert_eq!(same.values, u.values);
    }

    #[test]
    fn rescale_preserves_homogeneous_profile() {
        let p = PotentialParams::new(1.0).unwrap();
        let g = G::unit_interval(1024).unwrap();
        let phi = |t: f64| p.c_star * t.max(0.0).powf(p.alpha);
        let u = ScalarField::from_fn(g, |x| phi(x[0])).unwrap();
        for lambda in [0.5, 0.25] {
            let v = rescale(&u, &p, [0.0; 2], lambda).unwrap();
            for k in 1..g.len() {
                let x = g.position(k)[0];
                // linear interpolation error of a concave power law
                assert!((v.values[k] - phi(x)).abs() < 2e-3, "lambda {lambda} x {x}");
            }
        }
        assert!(matches!(rescale(&u, &p, [0.5, 0.0], 1.0), Err(Error::OutOfBox(_))));
        assert!(rescale(&u, &p, [0.0; 2], 0.0).is_err());
    }

    #[test]
    fn positivity_and_band() {
        let p = PotentialParams::new(1.0).unwrap();
        let g = G::unit_square(64).unwrap();
        let u = ScalarField::from_fn(g, |x| p.c_star * (x[0] - 0.5).max(0.0).powf(p.alpha)).unwrap();
        let pos = positivity_set(&u, 0.0);
        for k in 0..g.len() {
            assert_eq!(pos.member[k], g.position(k)[0] > 0.5);
        }
        let tol = p.c_star * g.h.powf(p.alpha);
        let shifted = positivity_set(&u, tol);
        let edge = |s: &IndicatorField<f64>| {
            (0..g.len())
                .filter(|&k| s.member[k])
                .map(|k| g.position(k)[0])
                .fold(f64::INFINITY, f64::min)
        };
        assert!(edge(&shifted) - edge(&pos) <= 2.0 * g.h);
        assert!(positivity_set(&ScalarField::zeros(g), 0.0).is_empty());

        let band = boundary_cells(&pos);
        assert!(band.iter().all(|x| (x[0] - 0.5).abs() <= g.h + 1e-12));
        assert_eq!(band.len(), 2 * 65);
        assert!(boundary_cells(&IndicatorField::full(g)).is_empty());
        assert!(boundary_cells(&IndicatorField::empty(g)).is_empty());
    }

    #[test]
    fn disk_band_size() {
        let g = G::unit_square(256).unwrap();
        let r = 0.3;
        let band = boundary_cells(&ball_mask(&g, [0.5, 0.5], r));
        let expected = 2.0 * std::f64::consts::PI * r / g.h;
        let ratio = band.len() as f64 / expected;
        assert!((ratio - 1.0).abs() < 0.3 || (ratio / 2.0 - 1.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn hausdorff_examples() {
        let a = vec![[0.0, 0.0], [1.0, 0.0]];
        assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff_distance(&[[0.0, 0.0]], &[[3.0, 4.0]]).unwrap(), 5.0);
        let h = 0.01;
        let l1: Vec<[f64; 2]> = (0..=100).map(|i| [0.2, i as f64 * h]).collect();
        let l2: Vec<[f64; 2]> = (0..=100).map(|i| [0.5, i as f64 * h]).collect();
        assert!((hausdorff_distance(&l1, &l2).unwrap() - 0.3).abs() <= h);
        assert!(hausdorff_distance::<f64>(&[], &a).is_err());
    }

    #[test]
    fn field_file_round_trip() {
        let g = G::new_2d([0.25, -1.0], [3, 2], 0.1).unwrap();
        let u = ScalarField::from_fn(g, |x| (x[0] + 2.0 * x[1]).abs() / 3.0).unwrap();
        let mut buf = Vec::new();
        write_field(&u, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), "2 4 3 0.1 0.25 -1");
        let back: ScalarField<f64> = read_field(buf.as_slice()).unwrap();
        assert_eq!(back, u);

        let set = positivity_set(&u, 0.2);
        let mut buf = Vec::new();
        write_indicator(&set, &mut buf).unwrap();
        let back: IndicatorField<f64> = read_indicator(buf.as_slice()).unwrap();
        assert_eq!(back, set);

        let line = G::unit_interval(4).unwrap();
        let v = ScalarField::from_fn(line, |x| x[0]).unwrap();
        let mut buf = Vec::new();
        write_field(&v, &mut buf).unwrap();
        assert_eq!(read_field::<f64, _>(buf.as_slice()).unwrap(), v);

        assert!(read_field::<f64, _>("2 4 3 0.1 0 0\n1\n".as_bytes()).is_err());
        assert!(read_field::<f64, _>("3 4\n".as_bytes()).is_err());
    }

    #[test]
    fn field_validation() {
        let g = G::unit_interval(2).unwrap();
        assert!(ScalarField::new(g, vec![0.0, -1.0, 0.0]).is_err());
        assert!(ScalarField::new(g, vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(ScalarField::new(g, vec![0.0]).is_err());
        let u = ScalarField::new(g, vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(u.boundary_mask, vec![true, false, true]);
    }

    #[test]
    fn erosion_and_coarsening() {
        let g = G::unit_square(8).unwrap();
        let half = IndicatorField::from_fn(g, |x| x[0] <= 0.5);
        let er = half.erode();
        for k in 0..g.len() {
            let x = g.position(k)[0];
            assert_eq!(er.member[k], x <= 0.5 - g.h + 1e-12);
        }
        let c = g.coarsen().unwrap();
        assert_eq!(c.n_cells, [4, 4]);
        assert_eq!(c.h, 0.25);
        assert!(G::unit_square(3).unwrap().coarsen().is_none());
    }

    #[test]
    fn single_precision_field() {
        let g = Grid::<f32>::unit_square(16).unwrap();
        let set = ball_mask(&g, [0.5, 0.5], 0.25);
        let d = distance_transform(&set).unwrap();
        assert!(d.lipschitz_excess() <= 0.0);
        let u = d.as_field();
        assert!(u.sample([0.5, 0.5]).unwrap() == 0.0);
    }
}
