//! Minimization of the discrete `J` by nonlinear Gauss–Seidel relaxation.
//!
//! Every update minimizes the one-node energy
//! `e(v) = h^{dim-2} Σ (v - u_j)² + h^dim W(v) χ{v > 0}` exactly: the positive
//! branch is convex with a unique stationary point, which is then compared
//! against `v = 0`. The change of the global energy is the change of the
//! one-node energy, so the energy trace is accumulated update by update and
//! every rejected (energy-raising) move is discarded.
//!
//! Single-node moves cannot shift a free boundary across a grid cell without
//! passing an energy barrier: every free boundary position the relaxation
//! reaches is a strict local minimum of the discrete energy, so the result
//! depends on the seed. Optional homotopy stages start from a regularized
//! potential, linear below a floor `δ` at the data scale (a convex
//! obstacle-type problem), and lower `δ` geometrically, which makes the result
//! independent of the seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::eval_j;
use crate::error::{Error, Result};
use crate::field::{distance_transform, Grid, IndicatorField, ScalarField};
use crate::potential::PotentialParams;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    Lexicographic,
    RedBlack,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedProfile {
    /// Harmonic extension of the boundary data.
    Flat,
    /// `φ(d)` with `d` the distance to the nodes carrying zero boundary data.
    DistanceProfile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions<T> {
    /// Sweep budget per grid level.
    pub max_sweeps: usize,
    /// Relative energy decrease per sweep below which a stage may stop.
    pub energy_tol: T,
    /// Regularization floors in units of `φ(h)`, strictly decreasing and ending
    /// at 0. Below the floor the potential is replaced by its chord to zero.
    pub delta_schedule: Vec<T>,
    pub ordering: Ordering,
    pub seed_profile: SeedProfile,
    /// Over-relaxation factor; an over-relaxed value is kept only if it lowers
    /// the node energy. `None` picks `2 / (1 + sin(π / N))` for `N` cells per axis.
    pub sor_omega: Option<T>,
    /// Geometric regularization stages from the data scale down to the first
    /// schedule entry; at the data scale the relaxed problem is convex. With a
    /// cascade they run on the coarsest grid only.
    pub homotopy_stages: usize,
    /// Number of coarser grids solved first, each seeding the next finer one.
    pub cascade_levels: usize,
    /// Largest nodal change per sweep, relative to the data scale, required to stop.
    pub update_tol: T,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            max_sweeps: 20_000,
            energy_tol: T::of(1e-12),
            delta_schedule: [1e-2, 1e-3, 1e-4, 0.0].iter().map(|&d| T::of(d)).collect(),
            ordering: Ordering::Lexicographic,
            seed_profile: SeedProfile::DistanceProfile,
            sor_omega: None,
            homotopy_stages: 0,
            cascade_levels: 0,
            update_tol: T::of(1e-10),
        }
    }
}

impl<T: Real> SolveReport<T> {
    /// True when the trace never increases inside a regularization stage.
    pub fn is_monotone(&self) -> bool {
        let mut bounds = self.stage_starts.clone();
        bounds.push(self.energy_trace.len());
        bounds.windows(2).all(|w| self.energy_trace[w[0]..w[1]].windows(2).all(|e| e[1] <= e[0]))
    }
}

impl<T: Real> SolverOptions<T> {
    pub fn validate(&self) -> Result<()> {
        let d = &self.delta_schedule;
        if d.is_empty() || *d.last().unwrap() != T::zero() {
            return Err(Error::Domain("delta schedule must end with 0".into()));
        }
        if d.windows(2).any(|w| !(w[0] > w[1])) || d[0] < T::zero() {
            return Err(Error::Domain("delta schedule must be strictly decreasing and nonnegative".into()));
        }
        if let Some(w) = self.sor_omega {
            if !(w > T::zero() && w < T::of(2.0)) {
                return Err(Error::Domain(format!("sor_omega = {w} outside (0, 2)")));
            }
        }
        if self.max_sweeps == 0 {
            return Err(Error::Domain("max_sweeps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport<T> {
    /// Energy after each sweep on the finest grid. A new regularization stage
    /// re-baselines the trace; `stage_starts` lists where.
    pub energy_trace: Vec<T>,
    pub stage_starts: Vec<usize>,
    pub sweeps_used: usize,
    /// Fraction of free nodes that are exactly zero.
    pub dead_fraction: T,
    pub converged: bool,
    /// Sweeps spent on each level, coarsest first.
    pub level_sweeps: Vec<usize>,
    /// Energy of the output recomputed from scratch.
    pub final_energy: T,
}

/// Scaled one-node energy `q(v) = deg v² - 2 v S + h² W_δ(v) / c · c`, with
/// `q(0) = 0`; it differs from `e(v) / h^{dim-2}` by a constant. Below `δ` the
/// potential is replaced by its chord to the origin, `W_δ(v) = W(δ) v / δ`,
/// which is continuous at zero; `δ = 0` is the exact potential.
#[derive(Clone, Copy)]
struct Local<T> {
    deg: T,
    s: T,
    h2c: T,
    gamma: T,
    delta: T,
}

impl<T: Real> Local<T> {
    fn pot(&self, v: T) -> T {
        if v <= T::zero() {
            T::zero()
        } else if v < self.delta {
            self.h2c * self.delta.powf(-self.gamma - T::one()) * v
        } else {
            self.h2c * v.powf(-self.gamma)
        }
    }

    fn q_diff(&self, new: T, old: T) -> T {
        (new - old) * (self.deg * (new + old) - T::of(2.0) * self.s) + self.pot(new) - self.pot(old)
    }

    fn slope(&self, v: T) -> T {
        T::of(2.0) * (self.deg * v - self.s) - self.gamma * self.h2c * v.powf(-self.gamma - T::one())
    }

    /// Minimizer of `q` over `v >= max(δ, 0+)`: the unique root of `q'` found by
    /// Newton from the left inside `[max(S/deg, a, δ), S/deg + a]`,
    /// `a = (h² γ c / (2 deg))^{1/(γ+2)}`, or `δ` itself when `q'(δ) >= 0`.
    fn upper_branch(&self, node: usize) -> Result<T> {
        let two = T::of(2.0);
        let g = self.gamma;
        if self.delta > T::zero() && self.slope(self.delta) >= T::zero() {
            return Ok(self.delta);
        }
        let a = (self.h2c * g / (two * self.deg)).powf(T::one() / (g + two));
        let mean = self.s / self.deg;
        let hi = mean + a;
        let mut v = mean.max(a).max(self.delta);
        for _ in 0..100 {
            let f = self.slope(v);
            if f >= T::zero() {
                break;
            }
            let fp = two * self.deg + g * (g + T::one()) * self.h2c * v.powf(-g - two);
            let next = (v - f / fp).min(hi);
            if next <= v * (T::one() + T::epsilon()) {
                break;
            }
            v = next;
        }
        if !(v.is_finite() && v > T::zero()) {
            return Err(Error::RootBracket { node });
        }
        Ok(v)
    }

    /// Exact minimizer over `v >= 0`; ties go to the smaller value.
    fn minimize(&self, node: usize) -> Result<T> {
        let high = self.upper_branch(node)?;
        let low = if self.delta > T::zero() {
            let m = self.h2c * self.delta.powf(-self.gamma - T::one());
            ((T::of(2.0) * self.s - m) / (T::of(2.0) * self.deg)).max(T::zero()).min(self.delta)
        } else {
            T::zero()
        };
        Ok(if self.q_diff(high, low) < T::zero() { high } else { low })
    }
}

struct Problem<'a, T> {
    grid: &'a Grid<T>,
    free: Vec<usize>,
    h2c: T,
    gamma: T,
}

impl<T: Real> Problem<'_, T> {
    fn local(&self, u: &[T], k: usize, delta: T) -> Option<Local<T>> {
        let mut deg = 0usize;
        let mut s = T::zero();
        for j in self.grid.neighbors(k) {
            deg += 1;
            s = s + u[j];
        }
        (deg > 0).then(|| Local { deg: T::of_usize(deg), s, h2c: self.h2c, gamma: self.gamma, delta })
    }

    /// New value of node `k` and the change of `q`.
    fn relax(&self, u: &[T], k: usize, delta: T, omega: T) -> Result<(T, T)> {
        let old = u[k];
        let Some(loc) = self.local(u, k, delta) else {
            return Ok((old, T::zero()));
        };
        let best = loc.minimize(k)?;
        let mut new = best;
        if best > T::zero() && old > T::zero() && omega != T::one() {
            let over = old + omega * (best - old);
            if over > T::zero() && loc.q_diff(over, old) <= T::zero() {
                new = over;
            }
        }
        let dq = loc.q_diff(new, old);
        if dq > T::zero() || new == old {
            return Ok((old, T::zero()));
        }
        Ok((new, dq))
    }

    /// Discrete energy with the potential regularized below `delta`.
    fn energy(&self, u: &[T], delta: T) -> T {
        let g = self.grid;
        let mut dir = T::zero();
        for (a, b) in g.edges() {
            let d = u[a] - u[b];
            dir = dir + d * d;
        }
        let loc = Local { deg: T::zero(), s: T::zero(), h2c: self.h2c, gamma: self.gamma, delta };
        let pot = u.iter().fold(T::zero(), |acc, &v| acc + loc.pot(v));
        (dir + pot) * g.h.powi(g.dim as i32 - 2)
    }

    /// One sweep; returns the change of the global energy and the largest nodal change.
    fn sweep(&self, u: &mut [T], ordering: Ordering, delta: T, omega: T) -> Result<(T, T)> {
        let scale = self.grid.h.powi(self.grid.dim as i32 - 2);
        let mut de = T::zero();
        let mut max_change = T::zero();
        match ordering {
            Ordering::Lexicographic => {
                for &k in &self.free {
                    let (new, dq) = self.relax(u, k, delta, omega)?;
                    max_change = max_change.max((new - u[k]).abs());
                    u[k] = new;
                    de = de + dq * scale;
                }
            }
            Ordering::RedBlack => {
                for colour in 0..2 {
                    let updates: Vec<(usize, T, T)> = {
                        let frozen: &[T] = u;
                        self.free
                            .par_iter()
                            .filter(|&&k| {
                                let (i, j) = self.grid.coords(k);
                                (i + j) % 2 == colour
                            })
                            .map(|&k| self.relax(frozen, k, delta, omega).map(|(v, dq)| (k, v, dq)))
                            .collect::<Result<_>>()?
                    };
                    for (k, new, dq) in updates {
                        max_change = max_change.max((new - u[k]).abs());
                        u[k] = new;
                        de = de + dq * scale;
                    }
                }
            }
        }
        Ok((de, max_change))
    }
}

fn validate_boundary<T: Real>(grid: &Grid<T>, boundary: &ScalarField<T>) -> Result<()> {
    if boundary.grid.dim != grid.dim || boundary.grid.n_cells != grid.n_cells {
        return Err(Error::Shape("boundary field does not live on the solver grid".into()));
    }
    for (k, &v) in boundary.values.iter().enumerate() {
        if boundary.boundary_mask[k] && !(v.is_finite()) {
            return Err(Error::NonFinite(format!("boundary value at node {k}")));
        }
        if boundary.boundary_mask[k] && v < T::zero() {
            return Err(Error::Domain(format!("negative boundary value {v} at node {k}")));
        }
    }
    Ok(())
}

/// Harmonic extension of the masked values by SOR.
fn harmonic_extension<T: Real>(grid: &Grid<T>, values: &mut [T], free: &[usize]) {
    let n = grid.n_cells[0].max(grid.n_cells[1]).max(1);
    let omega = T::of(2.0 / (1.0 + (std::f64::consts::PI / n as f64).sin()));
    let scale = values.iter().fold(T::zero(), |m, &v| m.max(v.abs())).max(T::of(1e-300));
    for _ in 0..50 * n * n {
        let mut change = T::zero();
        for &k in free {
            let mut deg = 0usize;
            let mut s = T::zero();
            for j in grid.neighbors(k) {
                deg += 1;
                s = s + values[j];
            }
            let target = s / T::of_usize(deg);
            let new = (values[k] + omega * (target - values[k])).max(T::zero());
            change = change.max((new - values[k]).abs());
            values[k] = new;
        }
        if change <= T::of(1e-12) * scale {
            break;
        }
    }
}

fn seed<T: Real>(
    grid: &Grid<T>,
    p: &PotentialParams<T>,
    boundary: &ScalarField<T>,
    free: &[usize],
    profile: SeedProfile,
) -> Result<Vec<T>> {
    let mut u = boundary.values.clone();
    for &k in free {
        u[k] = T::zero();
    }
    let zero_data: Vec<bool> = (0..u.len())
        .map(|k| boundary.boundary_mask[k] && boundary.values[k] == T::zero())
        .collect();
    match profile {
        SeedProfile::DistanceProfile if zero_data.iter().any(|&z| z) => {
            let d = distance_transform(&IndicatorField::new(*grid, zero_data)?)?;
            for &k in free {
                u[k] = p.c_star * d.dist[k].powf(p.alpha);
            }
        }
        _ => harmonic_extension(grid, &mut u, free),
    }
    Ok(u)
}

/// Injection of boundary data onto the grid with every other node.
fn restrict<T: Real>(fine: &ScalarField<T>, coarse: &Grid<T>) -> ScalarField<T> {
    let [cx, cy] = coarse.shape();
    let mut values = Vec::with_capacity(cx * cy);
    let mut mask = Vec::with_capacity(cx * cy);
    for j in 0..cy {
        for i in 0..cx {
            let k = fine.grid.index(2 * i, if coarse.dim == 2 { 2 * j } else { 0 });
            values.push(fine.values[k]);
            mask.push(fine.boundary_mask[k]);
        }
    }
    ScalarField { grid: *coarse, values, boundary_mask: mask }
}

struct LevelOutcome<T> {
    values: Vec<T>,
    trace: Vec<T>,
    stage_starts: Vec<usize>,
    sweeps: usize,
    converged: bool,
}

fn solve_level<T: Real>(
    grid: &Grid<T>,
    p: &PotentialParams<T>,
    boundary: &ScalarField<T>,
    start: Vec<T>,
    opts: &SolverOptions<T>,
    homotopy_stages: usize,
) -> Result<LevelOutcome<T>> {
    let free: Vec<usize> = (0..grid.len()).filter(|&k| !boundary.boundary_mask[k]).collect();
    let problem = Problem { grid, free, h2c: grid.h * grid.h * p.c_gamma, gamma: p.gamma };
    let mut u = start;
    let phi_h = p.c_star * grid.h.powf(p.alpha);
    let data_scale = boundary.values.iter().fold(phi_h, |m, &v| m.max(v));
    let omega = opts.sor_omega.unwrap_or_else(|| {
        let n = grid.n_cells[0].max(grid.n_cells[1]).max(2) as f64;
        T::of(2.0 / (1.0 + (std::f64::consts::PI / n).sin()))
    });
    let mut deltas = Vec::new();
    let first = opts.delta_schedule[0] * phi_h;
    if homotopy_stages > 0 && data_scale > first && first > T::zero() {
        let ratio = (first / data_scale).powf(T::one() / T::of_usize(homotopy_stages));
        let mut d = data_scale;
        for _ in 0..homotopy_stages {
            deltas.push(d);
            d = d * ratio;
        }
    }
    deltas.extend(opts.delta_schedule.iter().map(|&d| d * phi_h));
    let mut stages: Vec<(T, T)> = deltas.into_iter().map(|d| (d, omega)).collect();
    if omega != T::one() {
        stages.push((T::zero(), T::one()));
    }

    let mut trace = Vec::new();
    let mut stage_starts = Vec::new();
    let mut sweeps = 0;
    let run = |u: &mut Vec<T>, trace: &mut Vec<T>, sweeps: &mut usize, delta: T, omega: T, mut energy: T| -> Result<(T, bool)> {
        loop {
            if *sweeps >= opts.max_sweeps {
                return Ok((energy, false));
            }
            let (de, change) = problem.sweep(u, opts.ordering, delta, omega)?;
            *sweeps += 1;
            let before = energy;
            energy = energy + de;
            trace.push(energy);
            let rel = (before - energy) / energy.abs().max(T::min_positive_value());
            if rel < opts.energy_tol && change <= opts.update_tol * data_scale {
                return Ok((energy, true));
            }
        }
    };
    let mut converged = true;
    for (delta, omega) in stages {
        let energy = problem.energy(&u, delta);
        stage_starts.push(trace.len());
        trace.push(energy);
        let (_, ok) = run(&mut u, &mut trace, &mut sweeps, delta, omega, energy)?;
        if !ok {
            converged = false;
            break;
        }
    }
    Ok(LevelOutcome { values: u, trace, stage_starts, sweeps, converged })
}

/// Minimizes the discrete `J` with the data of `boundary` on its masked nodes.
pub fn minimize_j<T: Real>(
    grid: &Grid<T>,
    p: &PotentialParams<T>,
    boundary: &ScalarField<T>,
    opts: &SolverOptions<T>,
) -> Result<(ScalarField<T>, SolveReport<T>)> {
    minimize(grid, p, boundary, opts, None)
}

/// Like [`minimize_j`] but relaxes from the free values of `start`; the seed
/// profile and the cascade are not used.
pub fn minimize_j_from<T: Real>(
    grid: &Grid<T>,
    p: &PotentialParams<T>,
    boundary: &ScalarField<T>,
    start: &ScalarField<T>,
    opts: &SolverOptions<T>,
) -> Result<(ScalarField<T>, SolveReport<T>)> {
    if start.grid != *grid {
        return Err(Error::Shape("start field lives on a different grid".into()));
    }
    if let Some(k) = start.values.iter().position(|v| !(v.is_finite() && *v >= T::zero())) {
        return Err(Error::Domain(format!("start value {} at node {k}", start.values[k])));
    }
    minimize(grid, p, boundary, opts, Some(start))
}

/// Start field `φ(dist(x, E))` on the free nodes for a guessed zero set `E`,
/// with the data of `boundary` on its masked nodes.
pub fn seed_from_zero_set<T: Real>(
    p: &PotentialParams<T>,
    boundary: &ScalarField<T>,
    zero_set: &IndicatorField<T>,
) -> Result<ScalarField<T>> {
    if zero_set.grid != boundary.grid {
        return Err(Error::Shape("zero set lives on a different grid".into()));
    }
    let d = distance_transform(zero_set)?;
    let values = (0..boundary.values.len())
        .map(|k| if boundary.boundary_mask[k] { boundary.values[k] } else { p.c_star * d.dist[k].powf(p.alpha) })
        .collect();
    Ok(ScalarField { grid: boundary.grid, values, boundary_mask: boundary.boundary_mask.clone() })
}

fn minimize<T: Real>(
    grid: &Grid<T>,
    p: &PotentialParams<T>,
    boundary: &ScalarField<T>,
    opts: &SolverOptions<T>,
    start: Option<&ScalarField<T>>,
) -> Result<(ScalarField<T>, SolveReport<T>)> {
    opts.validate()?;
    validate_boundary(grid, boundary)?;
    let mut levels = vec![*grid];
    while start.is_none() && levels.len() <= opts.cascade_levels {
        match levels.last().unwrap().coarsen() {
            Some(g) => levels.push(g),
            None => break,
        }
    }
    levels.reverse();
    let mut data = vec![boundary.clone()];
    for g in levels.iter().rev().skip(1) {
        let finer = data.last().unwrap();
        data.push(restrict(finer, g));
    }
    data.reverse();

    let mut level_sweeps = Vec::with_capacity(levels.len());
    let mut previous: Option<ScalarField<T>> = None;
    let mut outcome = None;
    for (g, bd) in levels.iter().zip(&data) {
        let free: Vec<usize> = (0..g.len()).filter(|&k| !bd.boundary_mask[k]).collect();
        let init = match &previous {
            None => match start {
                Some(st) => (0..g.len()).map(|k| if bd.boundary_mask[k] { bd.values[k] } else { st.values[k] }).collect(),
                None => seed(g, p, bd, &free, opts.seed_profile)?,
            },
            Some(coarse) => {
                let mut u = bd.values.clone();
                for &k in &free {
                    u[k] = coarse.sample(g.position(k))?;
                }
                u
            }
        };
        let stages = if previous.is_none() { opts.homotopy_stages } else { 0 };
        let out = solve_level(g, p, bd, init, opts, stages)?;
        level_sweeps.push(out.sweeps);
        previous = Some(ScalarField { grid: *g, values: out.values.clone(), boundary_mask: bd.boundary_mask.clone() });
        outcome = Some(out);
    }
    let out = outcome.expect("at least one level");
    let field = ScalarField { grid: *grid, values: out.values, boundary_mask: boundary.boundary_mask.clone() };
    let free_count = field.boundary_mask.iter().filter(|&&m| !m).count();
    let dead = (0..field.values.len())
        .filter(|&k| !field.boundary_mask[k] && field.values[k] == T::zero())
        .count();
    let final_energy = eval_j(&field, p, &IndicatorField::full(*grid))?.total;
    let report = SolveReport {
        energy_trace: out.trace,
        stage_starts: out.stage_starts,
        sweeps_used: out.sweeps,
        dead_fraction: if free_count == 0 { T::zero() } else { T::of_usize(dead) / T::of_usize(free_count) },
        converged: out.converged,
        level_sweeps,
        final_energy,
    };
    Ok((field, report))
}

/// Smallest `C` with `u(x) <= C |x - x0|^α` over nodes within `radius` of `x0`.
pub fn certify_growth<T: Real>(u: &ScalarField<T>, p: &PotentialParams<T>, x0: usize, radius: T) -> Result<T> {
    let g = &u.grid;
    if x0 >= g.len() {
        return Err(Error::Shape(format!("node {x0} outside the grid")));
    }
    if u.values[x0] != T::zero() || !g.neighbors(x0).any(|j| u.values[j] > T::zero()) {
        let zero_field = u.values.iter().all(|&v| v == T::zero());
        if zero_field && u.values[x0] == T::zero() {
            return Ok(T::zero());
        }
        return Err(Error::Domain(format!("node {x0} is not a free boundary node")));
    }
    let c = g.position(x0);
    let mut best = T::zero();
    for k in 0..g.len() {
        let x = g.position(k);
        let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
        if k != x0 && r <= radius && u.values[k] > T::zero() {
            best = best.max(u.values[k] / r.powf(p.alpha));
        }
    }
    Ok(best)
}

/// Largest decrease of the discrete energy obtainable by moving one free node by
/// `±h²`, to zero, or to its positive stationary value. Nonpositive at a local minimum.
pub fn local_optimality_gap<T: Real>(u: &ScalarField<T>, p: &PotentialParams<T>) -> Result<T> {
    let g = &u.grid;
    let scale = g.h.powi(g.dim as i32 - 2);
    let h2 = g.h * g.h;
    let mut worst = T::neg_infinity();
    for k in (0..g.len()).filter(|&k| !u.boundary_mask[k]) {
        let mut deg = 0usize;
        let mut s = T::zero();
        for j in g.neighbors(k) {
            deg += 1;
            s = s + u.values[j];
        }
        if deg == 0 {
            continue;
        }
        let loc = Local { deg: T::of_usize(deg), s, h2c: h2 * p.c_gamma, gamma: p.gamma, delta: T::zero() };
        let old = u.values[k];
        let mut candidates = vec![T::zero(), loc.upper_branch(k)?];
        candidates.push(old + h2);
        if old - h2 > T::zero() {
            candidates.push(old - h2);
        }
        for v in candidates {
            worst = worst.max(-loc.q_diff(v, old) * scale);
        }
    }
    Ok(worst)
}

/// Largest relative Euler–Lagrange residual `|2Δ_h u - W'(u)| / max(1, |W'(u)|)`
/// over free nodes whose value and neighbors are all positive.
pub fn euler_lagrange_residual<T: Real>(u: &ScalarField<T>, p: &PotentialParams<T>) -> T {
    let g = &u.grid;
    let h2 = g.h * g.h;
    let mut worst = T::zero();
    for k in (0..g.len()).filter(|&k| !u.boundary_mask[k] && u.values[k] > T::zero()) {
        if g.neighbors(k).any(|j| u.values[j] <= T::zero()) {
            continue;
        }
        let deg = g.neighbors(k).count();
        let s = g.neighbors(k).fold(T::zero(), |a, j| a + u.values[j]);
        let lap = (s - T::of_usize(deg) * u.values[k]) / h2;
        let wp = p.w_prime_pos(u.values[k]);
        worst = worst.max((T::of(2.0) * lap - wp).abs() / wp.abs().max(T::one()));
    }
    worst
}
