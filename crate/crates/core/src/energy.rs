//! Discrete energies: `J` with the singular potential, the limit pair energy
//! `F(u, E)`, perimeter estimators and the total variation of `u^β`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid, IndicatorField, ScalarField};
use crate::potential::PotentialParams;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown<T> {
    pub dirichlet: T,
    pub potential: T,
    pub total: T,
    pub region_volume: T,
}

impl<T: Real> EnergyBreakdown<T> {
    pub fn record(&self, gamma: T, h: T) -> EnergyRecord {
        EnergyRecord {
            gamma: gamma.to_f64_lossy(),
            h: h.to_f64_lossy(),
            dirichlet: self.dirichlet.to_f64_lossy(),
            potential: self.potential.to_f64_lossy(),
            total: self.total.to_f64_lossy(),
            region_volume: self.region_volume.to_f64_lossy(),
        }
    }
}

/// Flat JSON form of an energy evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub gamma: f64,
    pub h: f64,
    pub dirichlet: f64,
    pub potential: f64,
    pub total: f64,
    pub region_volume: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEnergy<T> {
    pub dirichlet: T,
    pub perimeter: T,
    pub total: T,
}

fn same_grid<T: Real>(a: &Grid<T>, b: &Grid<T>) -> Result<()> {
    if a.dim != b.dim || a.n_cells != b.n_cells {
        return Err(Error::Shape(format!(
            "grids differ: {:?} vs {:?} cells",
            a.n_cells, b.n_cells
        )));
    }
    Ok(())
}

/// Forward-difference Dirichlet energy over edges with both ends in `region`.
fn dirichlet<T: Real>(u: &ScalarField<T>, region: &IndicatorField<T>) -> T {
    let g = &u.grid;
    let scale = g.h.powi(g.dim as i32 - 2);
    let mut sum = T::zero();
    for (a, b) in g.edges() {
        if region.member[a] && region.member[b] {
            let d = u.values[a] - u.values[b];
            sum = sum + d * d;
        }
    }
    sum * scale
}

/// `J` restricted to `region`: forward differences plus nodal quadrature of
/// `W(u) χ{u > 0}`.
pub fn eval_j<T: Real>(
    u: &ScalarField<T>,
    p: &PotentialParams<T>,
    region: &IndicatorField<T>,
) -> Result<EnergyBreakdown<T>> {
    same_grid(&u.grid, &region.grid)?;
    let dirichlet = dirichlet(u, region);
    let mut potential = T::zero();
    for (k, &v) in u.values.iter().enumerate() {
        if region.member[k] && v > T::zero() {
            potential = potential + p.w_nonneg(v);
        }
    }
    let vol = u.grid.cell_volume();
    let potential = potential * vol;
    Ok(EnergyBreakdown {
        dirichlet,
        potential,
        total: dirichlet + potential,
        region_volume: T::of_usize(region.count()) * vol,
    })
}

/// Length of the `level` contour of nodal `values` by marching squares with
/// linear interpolation along cell edges. Only cells for which `keep_cell`
/// returns true (given the lower-left node index) contribute. In 1D this is
/// the number of cells where the values cross the level.
pub fn contour_length<T: Real, F: Fn(usize) -> bool>(
    grid: &Grid<T>,
    values: &[T],
    level: T,
    keep_cell: F,
) -> T {
    let [nx, ny] = grid.shape();
    let above = |v: T| v >= level;
    if grid.dim == 1 {
        let cuts = (0..nx - 1)
            .filter(|&i| keep_cell(i) && above(values[i]) != above(values[i + 1]))
            .count();
        return T::of_usize(cuts);
    }
    let h = grid.h;
    let cross = |a: T, b: T| (level - a) / (b - a);
    let mut total = T::zero();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let k = grid.index(i, j);
            if !keep_cell(k) {
                continue;
            }
            let v00 = values[k];
            let v10 = values[k + 1];
            let v01 = values[k + nx];
            let v11 = values[k + nx + 1];
            let case = (above(v00) as u8) | (above(v10) as u8) << 1 | (above(v11) as u8) << 2 | (above(v01) as u8) << 3;
            if case == 0 || case == 15 {
                continue;
            }
            // Crossing points on the bottom, right, top and left edges, in units of h.
            let pts = [
                (above(v00) != above(v10)).then(|| [cross(v00, v10), T::zero()]),
                (above(v10) != above(v11)).then(|| [T::one(), cross(v10, v11)]),
                (above(v01) != above(v11)).then(|| [cross(v01, v11), T::one()]),
                (above(v00) != above(v01)).then(|| [T::zero(), cross(v00, v01)]),
            ];
            let seg = |a: [T; 2], b: [T; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            let found: Vec<[T; 2]> = pts.iter().flatten().copied().collect();
            let len = if found.len() == 2 {
                seg(found[0], found[1])
            } else {
                let [b, r, t, l] = pts.map(|q| q.unwrap_or([T::zero(); 2]));
                let centre_above = above((v00 + v10 + v01 + v11) / T::of(4.0));
                // Saddle: pair crossings so that the centre joins the diagonal it agrees with.
                if centre_above == above(v00) {
                    seg(b, r) + seg(t, l)
                } else {
                    seg(l, b) + seg(r, t)
                }
            };
            total = total + len * h;
        }
    }
    total
}

/// Passes of the separable `[1, 2, 1] / 4` filter applied to a 2D indicator
/// before contouring. Without it the 0.5 contour of a binary field follows the
/// pixel staircase and overestimates curved lengths by about 6%.
pub const INDICATOR_SMOOTHING_PASSES: usize = 2;

fn smooth_121<T: Real>(grid: &Grid<T>, values: &mut [T]) {
    let [nx, ny] = grid.shape();
    let quarter = T::of(0.25);
    let half = T::of(0.5);
    let mut tmp = values.to_vec();
    for j in 0..ny {
        for i in 0..nx {
            let k = grid.index(i, j);
            let l = values[if i > 0 { k - 1 } else { k }];
            let r = values[if i + 1 < nx { k + 1 } else { k }];
            tmp[k] = quarter * (l + r) + half * values[k];
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            let k = grid.index(i, j);
            let d = tmp[if j > 0 { k - nx } else { k }];
            let u = tmp[if j + 1 < ny { k + nx } else { k }];
            values[k] = quarter * (d + u) + half * tmp[k];
        }
    }
}

/// Perimeter of `set` inside `region`. In 2D: marching squares on the 0.5 level
/// of the nodal indicator after [`INDICATOR_SMOOTHING_PASSES`] binomial passes.
/// In 1D: count of cut cells.
pub fn perimeter<T: Real>(set: &IndicatorField<T>, region: &IndicatorField<T>) -> Result<T> {
    same_grid(&set.grid, &region.grid)?;
    let g = &set.grid;
    let mut values: Vec<T> = set.member.iter().map(|&m| if m { T::one() } else { T::zero() }).collect();
    if g.dim == 2 {
        for _ in 0..INDICATOR_SMOOTHING_PASSES {
            smooth_121(g, &mut values);
        }
    }
    let nx = g.shape()[0];
    let r = &region.member;
    let keep = |k: usize| {
        if g.dim == 1 {
            r[k] && r[k + 1]
        } else {
            r[k] && r[k + 1] && r[k + nx] && r[k + nx + 1]
        }
    };
    Ok(contour_length(g, &values, T::of(0.5), keep))
}

/// Anisotropic perimeter `h^{dim-1} · #{cut edges}` over edges inside `region`.
pub fn perimeter_edge_count<T: Real>(set: &IndicatorField<T>, region: &IndicatorField<T>) -> Result<T> {
    same_grid(&set.grid, &region.grid)?;
    let g = &set.grid;
    let cuts = g
        .edges()
        .filter(|&(a, b)| region.member[a] && region.member[b] && set.member[a] != set.member[b])
        .count();
    Ok(T::of_usize(cuts) * g.h.powi(g.dim as i32 - 1))
}

/// `F(u, E)` on `region`. Fails on the first member node of `E` where `u > 0`.
pub fn eval_f<T: Real>(
    u: &ScalarField<T>,
    e: &IndicatorField<T>,
    region: &IndicatorField<T>,
) -> Result<PairEnergy<T>> {
    same_grid(&u.grid, &e.grid)?;
    same_grid(&u.grid, &region.grid)?;
    if let Some(node) = (0..u.values.len()).find(|&k| e.member[k] && u.values[k] > T::zero()) {
        return Err(Error::Admissibility { node, value: u.values[node].to_f64_lossy() });
    }
    let dirichlet = dirichlet(u, region);
    let perimeter = perimeter(e, region)?;
    Ok(PairEnergy { dirichlet, perimeter, total: dirichlet + perimeter })
}

/// Edgewise total variation of `v = u^β` inside `region`.
pub fn bv_of_transform<T: Real>(
    u: &ScalarField<T>,
    p: &PotentialParams<T>,
    region: &IndicatorField<T>,
) -> Result<T> {
    same_grid(&u.grid, &region.grid)?;
    let beta = p.beta();
    let v: Vec<T> = u.values.iter().map(|&x| if x > T::zero() { x.powf(beta) } else { T::zero() }).collect();
    let g = &u.grid;
    let mut sum = T::zero();
    for (a, b) in g.edges() {
        if region.member[a] && region.member[b] {
            sum = sum + (v[a] - v[b]).abs();
        }
    }
    Ok(sum * g.h.powi(g.dim as i32 - 1))
}
