//! Experiment harness in double precision: boundary data templates, density
//! ratios at free boundary points, recovery sequences, γ sweeps and the
//! liminf comparison against the pair energy.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{contour_length, eval_f, eval_j, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::field::{
    distance_transform, hausdorff_distance, positivity_set, DistanceField, Grid, IndicatorField,
    ScalarField,
};
use crate::profile::exact_phi;
use crate::solver::{minimize_j, SolveReport, SolverOptions};
use crate::{Field, Params};

/// Dirichlet data on the outer layer of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BoundaryTemplate {
    Zero,
    Constant { value: f64 },
    /// `φ(x₁ - x₀)` measured from the left end of the box.
    PhiRight,
    /// `φ((x₁ - x_fb)⁺)`.
    Planar { x_fb: f64 },
    /// Zero for `x₁ < split`, `e_to_j_scale · psi0` for `x₁ >= split`. In the
    /// limit the zero set is `{x₁ < split}` and the interface the chord `x₁ = split`.
    Chord { psi0: f64, split: f64 },
}

impl BoundaryTemplate {
    pub fn data(&self, grid: &Grid<f64>, p: &Params) -> Result<Field> {
        let x0 = grid.origin[0];
        let f = |x: [f64; 2]| -> f64 {
            match *self {
                BoundaryTemplate::Zero => 0.0,
                BoundaryTemplate::Constant { value } => value,
                BoundaryTemplate::PhiRight => exact_phi(p, x[0] - x0),
                BoundaryTemplate::Planar { x_fb } => exact_phi(p, x[0] - x_fb),
                BoundaryTemplate::Chord { psi0, split } => {
                    if x[0] >= split - 1e-12 {
                        p.e_to_j_scale() * psi0
                    } else {
                        0.0
                    }
                }
            }
        };
        if let BoundaryTemplate::Constant { value } = self {
            if !(value.is_finite() && *value >= 0.0) {
                return Err(Error::Domain(format!("constant boundary value {value}")));
            }
        }
        ScalarField::from_fn(*grid, f)
    }

    /// Limiting zero set and sampled limiting interface, where one is known in closed form.
    pub fn reference(&self, grid: &Grid<f64>) -> Option<Reference> {
        let h = grid.h;
        let [x0, y0] = grid.origin;
        let [lx, ly] = grid.extent;
        let chord = |xs: f64| -> Vec<[f64; 2]> {
            if grid.dim == 1 {
                return vec![[xs, 0.0]];
            }
            let n = (ly / (0.5 * h)).round() as usize;
            (0..=n).map(|i| [xs, y0 + ly * i as f64 / n as f64]).collect()
        };
        let (zero, interface) = match *self {
            BoundaryTemplate::PhiRight => (IndicatorField::from_fn(*grid, |x| x[0] <= x0), chord(x0)),
            BoundaryTemplate::Planar { x_fb } => (IndicatorField::from_fn(*grid, |x| x[0] <= x_fb), chord(x_fb)),
            BoundaryTemplate::Chord { split, .. } => {
                (IndicatorField::from_fn(*grid, |x| x[0] < split - 1e-12), chord(split))
            }
            _ => return None,
        };
        let _ = lx;
        Some(Reference { zero_set: zero, interface })
    }
}

/// Limiting pair data used by sweeps.
#[derive(Clone, Debug)]
pub struct Reference {
    /// The set `E` where the limit vanishes.
    pub zero_set: IndicatorField<f64>,
    /// Points sampled on the limiting interface at spacing at most `h / 2`.
    pub interface: Vec<[f64; 2]>,
}

/// Interior nodes with value zero and at least one positive axis neighbor.
pub fn free_boundary_nodes(u: &Field) -> Vec<usize> {
    let g = &u.grid;
    (0..g.len())
        .filter(|&k| !g.is_outer(k) && u.values[k] == 0.0 && g.neighbors(k).any(|j| u.values[j] > 0.0))
        .collect()
}

/// Positions of interior nodes adjacent to the other phase of `{u > 0}`.
pub fn interface_points(u: &Field) -> Vec<[f64; 2]> {
    let g = &u.grid;
    let pos = positivity_set(u, 0.0);
    (0..g.len())
        .filter(|&k| !g.is_outer(k) && g.neighbors(k).any(|j| pos.member[j] != pos.member[k]))
        .map(|k| g.position(k))
        .collect()
}

/// Free boundary node closest to `point` (ties to the lower index).
pub fn nearest_free_boundary_node(u: &Field, point: [f64; 2]) -> Option<usize> {
    let d2 = |k: usize| {
        let x = u.grid.position(k);
        (x[0] - point[0]).powi(2) + (x[1] - point[1]).powi(2)
    };
    free_boundary_nodes(u).into_iter().min_by(|&a, &b| d2(a).total_cmp(&d2(b)))
}

/// Distance from a node to the boundary of the grid box.
fn distance_to_box(grid: &Grid<f64>, x: [f64; 2]) -> f64 {
    let mut d = f64::INFINITY;
    for axis in 0..grid.dim {
        d = d.min(x[axis] - grid.origin[axis]).min(grid.origin[axis] + grid.extent[axis] - x[axis]);
    }
    d
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub center: [f64; 2],
    pub radii: Vec<f64>,
    pub ratios_positive: Vec<f64>,
    pub ratios_zero: Vec<f64>,
}

impl DensityReport {
    /// Smallest of both ratios over all radii.
    pub fn min_ratio(&self) -> f64 {
        self.ratios_positive.iter().chain(&self.ratios_zero).copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_ratio(&self) -> f64 {
        self.ratios_positive.iter().chain(&self.ratios_zero).copied().fold(0.0, f64::max)
    }
}

/// Node-count fractions of `{u > 0}` and `{u = 0}` in balls around the free boundary node `x0`.
pub fn density_scan(u: &Field, x0: usize, radii: &[f64]) -> Result<DensityReport> {
    let g = &u.grid;
    if x0 >= g.len() {
        return Err(Error::Shape(format!("node {x0} outside the grid")));
    }
    if g.is_outer(x0) || u.values[x0] != 0.0 || !g.neighbors(x0).any(|j| u.values[j] > 0.0) {
        return Err(Error::Domain(format!("node {x0} is not on the free boundary")));
    }
    let c = g.position(x0);
    let limit = 0.5 * distance_to_box(g, c);
    let mut out = DensityReport { center: c, radii: radii.to_vec(), ratios_positive: vec![], ratios_zero: vec![] };
    for &r in radii {
        if !(r > 0.0) || r > limit + 1e-12 {
            return Err(Error::ParameterRange(format!(
                "radius {r} exceeds half the distance {limit} from the center to the box boundary"
            )));
        }
        let (mut pos, mut total) = (0usize, 0usize);
        for k in 0..g.len() {
            let x = g.position(k);
            if (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) <= r * r {
                total += 1;
                pos += (u.values[k] > 0.0) as usize;
            }
        }
        let fp = pos as f64 / total as f64;
        out.ratios_positive.push(fp);
        out.ratios_zero.push(1.0 - fp);
    }
    Ok(out)
}

/// `count` radii spaced geometrically over `[lo, hi]`.
pub fn geometric_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect()
}

/// Radii in `[8h, 1/4]`, clipped to half the distance from `x0` to the box boundary.
pub fn standard_radii(u: &Field, x0: usize, count: usize) -> Vec<f64> {
    let g = &u.grid;
    let hi = 0.25f64.min(0.5 * distance_to_box(g, g.position(x0)));
    let lo = 8.0 * g.h;
    if hi < lo {
        return Vec::new();
    }
    geometric_radii(lo, hi, count)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    /// Truncation level: `ũ = (u - 2 eps)⁺`.
    pub eps: f64,
    pub gamma_list: Vec<f64>,
    /// How the set is approximated before the distance collar is built.
    pub smoothing: String,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            gamma_list: vec![1.5, 1.8, 1.9, 1.95, 1.99],
            smoothing: "erode-one-cell".into(),
        }
    }
}

/// A recovery competitor `u_k = max{φ_k(d), ũ}` with the pieces it is built from.
#[derive(Clone, Debug)]
pub struct RecoveryField {
    pub field: Field,
    pub params: Params,
    /// Distance to the approximating set `Ẽ`.
    pub distance: DistanceField<f64>,
    /// Nodes where the truncated function dominates the profile.
    pub bulk: IndicatorField<f64>,
    /// Width of the collar around `Ẽ` on which `ũ` vanishes.
    pub collar: f64,
}

/// Builds the recovery competitor for the pair `(u, E)` at the exponent of `p`.
pub fn recovery_sequence(u: &Field, e: &IndicatorField<f64>, cfg: &RecoveryConfig, p: &Params) -> Result<RecoveryField> {
    if !(cfg.eps > 0.0) {
        return Err(Error::Domain(format!("eps = {} must be positive", cfg.eps)));
    }
    if let Some(node) = (0..u.values.len()).find(|&k| e.member[k] && u.values[k] > 0.0) {
        return Err(Error::Admissibility { node, value: u.values[node] });
    }
    let smoothed = match cfg.smoothing.as_str() {
        "erode-one-cell" => e.erode(),
        "none" => e.clone(),
        other => return Err(Error::Parse(format!("unknown smoothing '{other}'"))),
    };
    let distance = distance_transform(&smoothed)?;
    let truncated: Vec<f64> = u.values.iter().map(|&v| (v - 2.0 * cfg.eps).max(0.0)).collect();
    let collar = (0..u.values.len())
        .filter(|&k| truncated[k] > 0.0)
        .map(|k| distance.dist[k])
        .fold(f64::INFINITY, f64::min);
    if !(collar > 0.0) {
        return Err(Error::Construction(format!(
            "no positive collar: (u - 2 eps)+ is positive on the approximating set (eps = {})",
            cfg.eps
        )));
    }
    let profile: Vec<f64> = distance.dist.iter().map(|&d| exact_phi(p, d)).collect();
    let bulk = IndicatorField::new(u.grid, truncated.iter().zip(&profile).map(|(t, f)| t > f).collect())?;
    let values = profile.iter().zip(&truncated).map(|(f, t)| f.max(*t)).collect();
    let field = ScalarField::new(u.grid, values)?.with_mask(u.boundary_mask.clone())?;
    Ok(RecoveryField { field, params: *p, distance, bulk, collar })
}

/// Energy of a recovery competitor evaluated without nodal quadrature of the
/// profile layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryEnergy {
    /// `J(φ(d))` on the cells where the profile dominates, by the coarea formula.
    pub layer: f64,
    /// Nodal `J` on the nodes where `ũ` dominates.
    pub bulk: f64,
    pub total: f64,
    /// Plain nodal `J` of the same field, for comparison.
    pub nodal: f64,
}

impl RecoveryField {
    /// On the profile part `|∇φ(d)|² + W(φ(d)) = ω(d)` with `∫_a^b ω = φ(b)^β - φ(a)^β`,
    /// so `J(φ(d)) = Σ_j H¹({d = t_j*}) · (φ(t_{j+1})^β - φ(t_j)^β)` over bands of width `h/2`,
    /// with level lengths measured by marching squares at band midpoints.
    pub fn energy(&self) -> Result<RecoveryEnergy> {
        let p = &self.params;
        let g = &self.field.grid;
        let beta = p.beta();
        let d = &self.distance.dist;
        let nx = g.shape()[0];
        let prof = |k: usize| !self.bulk.member[k];
        let keep = |k: usize| {
            if g.dim == 1 {
                prof(k) && prof(k + 1)
            } else {
                prof(k) && prof(k + 1) && prof(k + nx) && prof(k + nx + 1)
            }
        };
        let d_max = d.iter().copied().fold(0.0, f64::max);
        let dt = 0.5 * g.h;
        let bands = (d_max / dt).ceil() as usize;
        let mass = |t: f64| exact_phi(p, t).powf(beta);
        let mut layer = 0.0;
        for j in 0..bands {
            let (a, b) = (j as f64 * dt, ((j + 1) as f64 * dt).min(d_max));
            let len = contour_length(g, d, 0.5 * (a + b), keep);
            layer += len * (mass(b) - mass(a));
        }
        let bulk = if self.bulk.is_empty() { 0.0 } else { eval_j(&self.field, p, &self.bulk)?.total };
        let nodal = eval_j(&self.field, p, &IndicatorField::full(*g))?.total;
        Ok(RecoveryEnergy { layer, bulk, total: layer + bulk, nodal })
    }
}

/// `h^dim Σ |u^β - χ_{E^c}|`.
pub fn transform_l1_gap(u: &Field, p: &Params, zero_set: &IndicatorField<f64>) -> f64 {
    let vol = u.grid.cell_volume();
    u.values
        .iter()
        .zip(&zero_set.member)
        .map(|(&v, &z)| (p.phase_transform(v) - if z { 0.0 } else { 1.0 }).abs())
        .sum::<f64>()
        * vol
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub gamma: f64,
    pub h: f64,
    pub energy: EnergyBreakdown<f64>,
    pub fb_hausdorff_to_reference: f64,
    /// NaN when no free boundary point admits a radius in `[8h, 1/4]`.
    pub density_min: f64,
    pub density_max: f64,
    pub transform_l1_gap: f64,
    /// Total variation of `u^β`, for the coarea comparison with `energy.total`.
    pub bv_transform: f64,
    pub free_boundary_nodes: usize,
}

/// Everything a sweep produces for one exponent.
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub record: SweepRecord,
    pub field: Field,
    pub report: SolveReport<f64>,
    pub density: Option<DensityReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepProblem {
    pub template: BoundaryTemplate,
    pub grid: Grid<f64>,
    /// Free boundary points and reference interface are compared inside this
    /// box only, which keeps the pinned contact points on the outer edges out.
    pub window: Option<[[f64; 2]; 2]>,
    /// Point near which the density center is taken.
    pub density_center: [f64; 2],
    pub density_radii: usize,
}

impl SweepProblem {
    /// Single chord `x₁ = 1/2` in the unit square with `ψ₀ = 1`.
    pub fn chord(n: usize) -> Result<Self> {
        Ok(Self {
            template: BoundaryTemplate::Chord { psi0: 1.0, split: 0.5 },
            grid: Grid::unit_square(n)?,
            window: Some([[0.0, 0.125], [1.0, 0.875]]),
            density_center: [0.5, 0.5],
            density_radii: 8,
        })
    }

    fn in_window(&self, x: [f64; 2]) -> bool {
        match self.window {
            None => true,
            Some([lo, hi]) => (0..self.grid.dim).all(|a| x[a] >= lo[a] - 1e-12 && x[a] <= hi[a] + 1e-12),
        }
    }

    /// Solves and measures one exponent.
    pub fn run(&self, gamma: f64, opts: &SolverOptions<f64>) -> Result<SweepOutcome> {
        let wrap = |e: Error| Error::Sweep { gamma, source: Box::new(e) };
        let p = Params::new(gamma).map_err(wrap)?;
        let data = self.template.data(&self.grid, &p).map_err(wrap)?;
        let (u, report) = minimize_j(&self.grid, &p, &data, opts).map_err(wrap)?;
        self.measure(&p, u, report).map_err(wrap)
    }

    fn measure(&self, p: &Params, u: Field, report: SolveReport<f64>) -> Result<SweepOutcome> {
        let full = IndicatorField::full(self.grid);
        let energy = eval_j(&u, p, &full)?;
        let bv_transform = crate::energy::bv_of_transform(&u, p, &full)?;
        let reference = self.template.reference(&self.grid);
        let fb: Vec<[f64; 2]> = interface_points(&u).into_iter().filter(|&x| self.in_window(x)).collect();
        let (hausdorff, gap) = match &reference {
            Some(r) => {
                let iface: Vec<[f64; 2]> = r.interface.iter().copied().filter(|&x| self.in_window(x)).collect();
                let hd = if fb.is_empty() { f64::INFINITY } else { hausdorff_distance(&fb, &iface)? };
                (hd, transform_l1_gap(&u, p, &r.zero_set))
            }
            None => (f64::NAN, f64::NAN),
        };
        let fb_count = free_boundary_nodes(&u).len();
        let density = match nearest_free_boundary_node(&u, self.density_center) {
            Some(x0) => {
                let radii = standard_radii(&u, x0, self.density_radii);
                if radii.is_empty() {
                    None
                } else {
                    Some(density_scan(&u, x0, &radii)?)
                }
            }
            None => None,
        };
        let (density_min, density_max) = density.as_ref().map_or((f64::NAN, f64::NAN), |d| (d.min_ratio(), d.max_ratio()));
        let record = SweepRecord {
            gamma: p.gamma,
            h: self.grid.h,
            energy,
            fb_hausdorff_to_reference: hausdorff,
            density_min,
            density_max,
            transform_l1_gap: gap,
            bv_transform,
            free_boundary_nodes: fb_count,
        };
        Ok(SweepOutcome { record, field: u, report, density })
    }
}

/// Runs every exponent independently (in parallel on the current rayon pool)
/// and returns the outcomes sorted by `γ`.
pub fn gamma_sweep(problem: &SweepProblem, gammas: &[f64], opts: &SolverOptions<f64>) -> Result<Vec<SweepOutcome>> {
    let mut out = gammas.par_iter().map(|&g| problem.run(g, opts)).collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.record.gamma.total_cmp(&b.record.gamma));
    Ok(out)
}

pub const SWEEP_CSV_HEADER: &str = "gamma,h,dirichlet,potential,total,hausdorff,density_min,density_max,l1_gap";

pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], mut out: W) -> Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.gamma,
            r.h,
            r.energy.dirichlet,
            r.energy.potential,
            r.energy.total,
            r.fb_hausdorff_to_reference,
            r.density_min,
            r.density_max,
            r.transform_l1_gap
        )?;
    }
    Ok(())
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LscReport {
    pub energies: Vec<f64>,
    pub limit_energy: f64,
    /// `min(tail energies) - F(limit)`.
    pub margin: f64,
    pub pass: bool,
}

/// Compares the tail of a sequence of energies with `F` of the limit pair.
/// The tail is the last half of the sequence; the check passes when the margin
/// is at least `-0.05 F`.
pub fn lsc_check<S>(
    seq: &[S],
    energy: impl Fn(&S) -> Result<f64>,
    limit: (&Field, &IndicatorField<f64>),
) -> Result<LscReport> {
    if seq.is_empty() {
        return Err(Error::EmptySet("empty sequence".into()));
    }
    let energies = seq.iter().map(energy).collect::<Result<Vec<_>>>()?;
    let f = eval_f(limit.0, limit.1, &IndicatorField::full(limit.0.grid))?.total;
    let tail = &energies[energies.len() / 2..];
    let margin = tail.iter().copied().fold(f64::INFINITY, f64::min) - f;
    Ok(LscReport { energies, limit_energy: f, margin, pass: margin >= -0.05 * f })
}
