//! One-dimensional profiles.
//!
//! The homogeneous solution `φ(t) = c* t^α` satisfies `φ' = √W(φ)`. A general
//! increasing profile `ψ` is encoded by its generator `g(s) = ψ'(ψ⁻¹(s))²`, so
//! that `2ψ'' = g'(ψ)` and `ψ = G⁻¹` with `G(r) = ∫₀^r g^{-1/2}`. The three
//! barrier constructions below are perturbations of `g = W` and are certified
//! pointwise through these identities.

use std::io::Write;

use crate::error::{Error, Result};
use crate::quad;
use crate::Params;

/// Default spacing of the `t` and `s` grids.
pub const DEFAULT_RESOLUTION: f64 = 1e-4;

/// Minimum number of grid intervals across the active part of a profile.
const MIN_INTERVALS: f64 = 2000.0;

/// Number of geometric refinement levels of the `s` grid below its first uniform step.
const GRADED_LEVELS: usize = 48;

/// `φ(t) = c* (t⁺)^α`.
pub fn exact_phi(p: &Params, t: f64) -> f64 {
    if t > 0.0 {
        p.c_star * t.powf(p.alpha)
    } else {
        0.0
    }
}

/// `φ'(t)` for `t > 0`.
pub fn exact_phi_prime(p: &Params, t: f64) -> f64 {
    p.alpha * p.c_star * t.powf(p.alpha - 1.0)
}

/// `φ''(t)` for `t > 0`.
pub fn exact_phi_second(p: &Params, t: f64) -> f64 {
    p.alpha * (p.alpha - 1.0) * p.c_star * t.powf(p.alpha - 2.0)
}

/// The `t` at which `φ(t) = s`.
pub fn exact_phi_inverse(p: &Params, s: f64) -> f64 {
    if s > 0.0 {
        (s / p.c_star).powf(1.0 / p.alpha)
    } else {
        0.0
    }
}

/// Energy density `ω(t) = 2√W(φ(t)) φ'(t)` of the homogeneous profile.
pub fn profile_weight(p: &Params, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("profile weight at t = {t} <= 0")));
    }
    let phi = exact_phi(p, t);
    Ok(2.0 * p.w_nonneg(phi).sqrt() * exact_phi_prime(p, t))
}

/// `∫₀^a ω = φ(a)^{1-γ/2}`, the primitive of `2√W` evaluated along `φ`.
pub fn profile_mass(p: &Params, a: f64) -> f64 {
    p.phase_transform(exact_phi(p, a))
}

/// `J(φ, (0, r)) = ∫₀^r φ'² + W(φ)` by quadrature in `ln t` down to `t = 1e-300`;
/// below that the density is a pure power of `t` and is integrated exactly.
pub fn profile_energy(p: &Params, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("profile energy on (0, {r})")));
    }
    let density = |t: f64| exact_phi_prime(p, t).powi(2) + p.w_nonneg(exact_phi(p, t));
    let floor = 1e-300f64.min(r * 1e-12);
    let head = density(floor) * floor / (2.0 * p.alpha - 1.0);
    let body = quad::adaptive_simpson(&|s: f64| density(s.exp()) * s.exp(), floor.ln(), r.ln(), 1e-15);
    Ok(head + body)
}

/// Explicit generators used by the constructions. All of them agree with `W`
/// to leading order at `s = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClosedForm {
    /// `g = W`; reproduces `φ`.
    Potential,
    /// `g = W + ε̄`.
    Shifted { eps_bar: f64 },
    /// `g = W + ε̄ + C₁ s^{1-γ/2}`, the growth barrier.
    Growth { eps_bar: f64, c1: f64 },
    /// `g = W + (-½ + C_n (s^{1-γ/2} - s₁^{1-γ/2})) χ[s₁, 1]`, the density barrier.
    Density { c_n: f64, s1: f64 },
}

impl ClosedForm {
    /// `g - W` at `s > 0`.
    pub fn excess(&self, p: &Params, s: f64) -> f64 {
        match *self {
            ClosedForm::Potential => 0.0,
            ClosedForm::Shifted { eps_bar } => eps_bar,
            ClosedForm::Growth { eps_bar, c1 } => eps_bar + c1 * s.powf(p.beta()),
            ClosedForm::Density { c_n, s1 } => {
                if s >= s1 {
                    -0.5 + c_n * (s.powf(p.beta()) - s1.powf(p.beta()))
                } else {
                    0.0
                }
            }
        }
    }

    /// `g' - W'` at `s > 0` (one-sided from the right at the jump of the density form).
    pub fn excess_prime(&self, p: &Params, s: f64) -> f64 {
        match *self {
            ClosedForm::Potential | ClosedForm::Shifted { .. } => 0.0,
            ClosedForm::Growth { c1, .. } => c1 * p.beta() * s.powf(-p.gamma / 2.0),
            ClosedForm::Density { c_n, s1 } => {
                if s >= s1 {
                    c_n * p.beta() * s.powf(-p.gamma / 2.0)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval(&self, p: &Params, s: f64) -> f64 {
        if s <= 0.0 {
            return f64::INFINITY;
        }
        p.w_nonneg(s) + self.excess(p, s)
    }
}

/// The generator `g` of a profile, tabulated on an increasing `s` grid starting at 0.
#[derive(Clone, Debug)]
pub struct GeneratorG {
    pub s_grid: Vec<f64>,
    /// `g(0)` is `+∞` for every profile starting at the free boundary.
    pub g_vals: Vec<f64>,
    pub closed_form: Option<ClosedForm>,
}

impl GeneratorG {
    pub fn tabulated(s_grid: Vec<f64>, g_vals: Vec<f64>) -> Result<Self> {
        if s_grid.len() < 2 || s_grid.len() != g_vals.len() {
            return Err(Error::Shape(format!(
                "generator needs >= 2 matching samples, got {} s and {} g",
                s_grid.len(),
                g_vals.len()
            )));
        }
        if s_grid[0] != 0.0 || s_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Shape(
                "s grid must start at 0 and increase strictly".into(),
            ));
        }
        Ok(Self {
            s_grid,
            g_vals,
            closed_form: None,
        })
    }

    /// Tabulates a closed form on `[0, s_max]` with spacing at most `ds`, graded
    /// geometrically towards 0 and containing every entry of `knots` below `s_max`.
    pub fn closed(p: &Params, form: ClosedForm, s_max: f64, ds: f64, knots: &[f64]) -> Self {
        let s_grid = graded_grid(s_max, ds, knots);
        let g_vals = s_grid.iter().map(|&s| form.eval(p, s)).collect();
        Self {
            s_grid,
            g_vals,
            closed_form: Some(form),
        }
    }

    /// `g(s)`: the closed form when available, else linear interpolation.
    pub fn g(&self, p: &Params, s: f64) -> f64 {
        if let Some(form) = self.closed_form {
            return form.eval(p, s);
        }
        if s <= 0.0 {
            return self.g_vals[0];
        }
        let i = cell_of(&self.s_grid, s);
        let (a, b) = (self.s_grid[i], self.s_grid[i + 1]);
        let th = (s - a) / (b - a);
        if !self.g_vals[i].is_finite() {
            // Singular first sample: interpolate the ratio g/W instead.
            let ratio_b = self.g_vals[i + 1] / p.w_nonneg(b);
            return p.w_nonneg(s) * ((1.0 - th) + th * ratio_b);
        }
        self.g_vals[i] * (1.0 - th) + self.g_vals[i + 1] * th
    }

    /// `g'(s) - W'(s)`: analytic for closed forms, centered differences otherwise.
    pub fn excess_prime(&self, p: &Params, s: f64) -> f64 {
        if let Some(form) = self.closed_form {
            return form.excess_prime(p, s);
        }
        let i = cell_of(&self.s_grid, s).max(1).min(self.s_grid.len() - 2);
        let e = |j: usize| self.g_vals[j] - p.w_nonneg(self.s_grid[j]);
        (e(i + 1) - e(i - 1)) / (self.s_grid[i + 1] - self.s_grid[i - 1])
    }
}

/// Index `i` of the grid cell `[x_i, x_{i+1}]` containing `x` (clamped).
fn cell_of(grid: &[f64], x: f64) -> usize {
    let n = grid.len();
    match grid.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => i.min(n - 2),
        Err(i) => i.saturating_sub(1).min(n - 2),
    }
}

fn graded_grid(s_max: f64, ds: f64, knots: &[f64]) -> Vec<f64> {
    let step = ds.min(s_max / MIN_INTERVALS);
    let mut grid = vec![0.0];
    for k in (1..=GRADED_LEVELS).rev() {
        grid.push(step * 0.5f64.powi(k as i32));
    }
    let n = (s_max / step).ceil() as usize;
    for i in 1..n {
        grid.push(step * i as f64);
    }
    grid.push(s_max);
    for &k in knots {
        if k > 0.0 && k < s_max {
            grid.push(k);
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs().max(1e-300));
    grid
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum CellRule {
    /// `∫ W^{-1/2} q` with `q = √(W/g)` linear across the cell.
    Product,
    /// `∫ (g_lin)^{-1/2}` with `g` linear across the cell; exact at a simple zero.
    LinearG,
}

/// Cumulative `G(s) = ∫₀^s g^{-1/2}` on the generator grid.
struct GTable {
    s: Vec<f64>,
    g: Vec<f64>,
    cum: Vec<f64>,
    rule: Vec<CellRule>,
    q: Vec<f64>,
    root_c: f64,
    /// `1 + γ/2`: `s^{1+γ/2}` is proportional to `G` when `g = W`.
    tau_exp: f64,
}

impl GTable {
    fn build(gen: &GeneratorG, p: &Params) -> Result<Self> {
        let s = &gen.s_grid;
        let g = &gen.g_vals;
        let n = s.len();
        for i in 1..n {
            let last = i == n - 1;
            if g[i].is_nan() || g[i] < 0.0 || (g[i] == 0.0 && !last) {
                return Err(Error::Construction(format!(
                    "generator vanishes at interior s = {} (profile stalls)",
                    s[i]
                )));
            }
        }
        let k = p.gamma / 2.0;
        let root_c = p.c_gamma.sqrt();
        let q = |i: usize| -> f64 {
            if s[i] == 0.0 {
                if g[i].is_finite() { 0.0 } else { 1.0 }
            } else {
                (p.w_nonneg(s[i]) / g[i]).sqrt()
            }
        };
        let mut cum = vec![0.0; n];
        let mut rule = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let (a, b) = (s[i], s[i + 1]);
            let (qa, qb) = (q(i), q(i + 1));
            let w_dominated = (0.5..=2.0).contains(&qa) && (0.5..=2.0).contains(&qb);
            let piece = if w_dominated || (a == 0.0 && !g[0].is_finite()) {
                rule.push(CellRule::Product);
                let m0 = pow_diff(a, b, k + 1.0) / (k + 1.0) / root_c;
                let m1 = (pow_diff(a, b, k + 2.0) / (k + 2.0) - a * pow_diff(a, b, k + 1.0) / (k + 1.0))
                    / ((b - a) * root_c);
                qa * (m0 - m1) + qb * m1
            } else {
                rule.push(CellRule::LinearG);
                2.0 * (b - a) / (g[i].sqrt() + g[i + 1].sqrt())
            };
            cum[i + 1] = cum[i] + piece;
        }
        Ok(Self {
            s: s.clone(),
            g: g.clone(),
            cum,
            rule,
            q: (0..n).map(q).collect(),
            root_c,
            tau_exp: 1.0 + k,
        })
    }

    /// `∫_a^s W^{-1/2} q` over the product cell `[a, b]` starting at `a`.
    fn product_partial(&self, i: usize, s: f64) -> f64 {
        let (a, b) = (self.s[i], self.s[i + 1]);
        let k = self.tau_exp - 1.0;
        let slope = (self.q[i + 1] - self.q[i]) / (b - a);
        let m0 = pow_diff(a, s, k + 1.0) / (k + 1.0);
        let m1 = pow_diff(a, s, k + 2.0) / (k + 2.0) - a * pow_diff(a, s, k + 1.0) / (k + 1.0);
        (self.q[i] * m0 + slope * m1) / self.root_c
    }

    fn product_density(&self, i: usize, s: f64) -> f64 {
        let (a, b) = (self.s[i], self.s[i + 1]);
        let q = self.q[i] + (self.q[i + 1] - self.q[i]) * (s - a) / (b - a);
        q * s.powf(self.tau_exp - 1.0) / self.root_c
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// `G(s)` at a grid value or by in-cell interpolation of the cumulative table.
    fn g_at(&self, s: f64) -> f64 {
        let i = cell_of(&self.s, s);
        let (a, b) = (self.s[i], self.s[i + 1]);
        let th = ((s - a) / (b - a)).clamp(0.0, 1.0);
        self.cum[i] + th * (self.cum[i + 1] - self.cum[i])
    }

    /// The `s` with `G(s) = t`.
    fn invert(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= self.total() {
            return *self.s.last().unwrap();
        }
        let i = cell_of(&self.cum, t);
        let (a, b) = (self.s[i], self.s[i + 1]);
        let (ga, gb) = (self.cum[i], self.cum[i + 1]);
        let frac = ((t - ga) / (gb - ga)).clamp(0.0, 1.0);
        let s = match self.rule[i] {
            CellRule::Product => {
                let (ta, tb) = (a.powf(self.tau_exp), b.powf(self.tau_exp));
                let mut s = (ta + frac * (tb - ta)).powf(1.0 / self.tau_exp);
                // Newton on the in-cell primitive, which the table was built from
                for _ in 0..8 {
                    let r = self.product_partial(i, s) - (t - ga);
                    let d = self.product_density(i, s);
                    if !(d > 0.0) {
                        break;
                    }
                    let next = (s - r / d).clamp(a, b);
                    if (next - s).abs() <= 1e-16 * s {
                        s = next;
                        break;
                    }
                    s = next;
                }
                s
            }
            CellRule::LinearG => {
                let (va, vb) = (self.g[i], self.g[i + 1]);
                let slope = (vb - va) / (b - a);
                if slope.abs() < 1e-300 {
                    a + (t - ga) * va.sqrt()
                } else {
                    let root = va.sqrt() + slope * (t - ga) / 2.0;
                    a + (root * root - va) / slope
                }
            }
        };
        s.clamp(a, b)
    }
}

/// `b^m - a^m` without cancellation for nearby positive arguments.
fn pow_diff(a: f64, b: f64, m: f64) -> f64 {
    if a == 0.0 {
        return b.powf(m);
    }
    a.powf(m) * (m * ((b - a) / a).ln_1p()).exp_m1()
}

/// A named abscissa or ordinate of a profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Knot {
    pub name: &'static str,
    pub value: f64,
}

/// One certified property of a profile.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Smallest margin over the checked points; nonnegative means the property holds.
    pub min_margin: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Certificate {
    pub checks: Vec<Check>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn min_margin(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.min_margin)
            .fold(f64::INFINITY, f64::min)
    }
}

/// A sampled nondecreasing profile `ψ` on an increasing `t` grid.
#[derive(Clone, Debug)]
pub struct Profile1D {
    pub ts: Vec<f64>,
    pub vals: Vec<f64>,
    /// `ψ'` at each grid point (`+∞` at a free-boundary endpoint).
    pub slopes: Vec<f64>,
    /// Residual of the certified differential inequality; NaN where none applies.
    pub margins: Vec<f64>,
    pub params: Params,
    pub t_knots: Vec<Knot>,
    pub s_knots: Vec<Knot>,
    pub generator: Option<GeneratorG>,
    pub certificate: Option<Certificate>,
}

impl Profile1D {
    pub fn t_knot(&self, name: &str) -> Option<f64> {
        self.t_knots.iter().find(|k| k.name == name).map(|k| k.value)
    }

    pub fn s_knot(&self, name: &str) -> Option<f64> {
        self.s_knots.iter().find(|k| k.name == name).map(|k| k.value)
    }

    /// Linear interpolation of `ψ`.
    pub fn value_at(&self, t: f64) -> f64 {
        if t <= self.ts[0] {
            return self.vals[0];
        }
        if t >= *self.ts.last().unwrap() {
            return *self.vals.last().unwrap();
        }
        let i = cell_of(&self.ts, t);
        let th = (t - self.ts[i]) / (self.ts[i + 1] - self.ts[i]);
        self.vals[i] + th * (self.vals[i + 1] - self.vals[i])
    }

    /// CSV with columns `t,psi,psi_prime,margin`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,psi,psi_prime,margin")?;
        for i in 0..self.ts.len() {
            writeln!(
                out,
                "{},{},{},{}",
                self.ts[i], self.vals[i], self.slopes[i], self.margins[i]
            )?;
        }
        Ok(())
    }
}

/// The homogeneous solution sampled on `[0, t_max]`.
pub fn exact_profile(p: &Params, t_max: f64, dt: f64) -> Profile1D {
    let ts = uniform_grid(0.0, t_max, dt);
    let vals = ts.iter().map(|&t| exact_phi(p, t)).collect();
    let slopes = ts
        .iter()
        .map(|&t| if t > 0.0 { exact_phi_prime(p, t) } else { f64::INFINITY })
        .collect();
    let margins = ts
        .iter()
        .map(|&t| {
            // residual of φ' = √W(φ)
            if t > 0.0 {
                exact_phi_prime(p, t) - p.w_nonneg(exact_phi(p, t)).sqrt()
            } else {
                f64::NAN
            }
        })
        .collect();
    Profile1D {
        ts,
        vals,
        slopes,
        margins,
        params: *p,
        t_knots: vec![],
        s_knots: vec![],
        generator: None,
        certificate: None,
    }
}

fn uniform_grid(a: f64, b: f64, dt: f64) -> Vec<f64> {
    let n = ((b - a) / dt).ceil().max(1.0) as usize;
    let mut ts: Vec<f64> = (0..n).map(|i| a + i as f64 * dt).collect();
    if ts.last().map_or(true, |&t| t < b) {
        ts.push(b);
    }
    ts
}

/// Recovers `ψ = G⁻¹` from its generator on a `t` grid of spacing at most `resolution`.
pub fn psi_from_g(gen: &GeneratorG, p: &Params, resolution: f64) -> Result<Profile1D> {
    let table = GTable::build(gen, p)?;
    let t_end = table.total();
    let dt = resolution.min(t_end / MIN_INTERVALS);
    let ts = uniform_grid(0.0, t_end, dt);
    Ok(profile_on(gen, p, &table, ts))
}

fn profile_on(gen: &GeneratorG, p: &Params, table: &GTable, ts: Vec<f64>) -> Profile1D {
    let vals: Vec<f64> = ts.iter().map(|&t| table.invert(t)).collect();
    let slopes = vals
        .iter()
        .map(|&s| {
            if s > 0.0 {
                gen.g(p, s).max(0.0).sqrt()
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let margins = vec![f64::NAN; ts.len()];
    Profile1D {
        ts,
        vals,
        slopes,
        margins,
        params: *p,
        t_knots: vec![],
        s_knots: vec![],
        generator: Some(gen.clone()),
        certificate: None,
    }
}

/// Records a check over pointwise margins; returns the first violation if any.
fn check_margins(
    cert: &mut Certificate,
    name: &str,
    ts: &[f64],
    margins: impl Iterator<Item = (usize, f64)>,
) -> Option<Error> {
    let mut min_margin = f64::INFINITY;
    let mut points = 0;
    let mut violation = None;
    for (i, m) in margins {
        points += 1;
        min_margin = min_margin.min(m);
        if !(m >= 0.0) && violation.is_none() {
            violation = Some(Error::Certification {
                what: name.to_string(),
                index: i,
                t: ts.get(i).copied().unwrap_or(f64::NAN),
                margin: m,
            });
        }
    }
    cert.checks.push(Check {
        name: name.to_string(),
        passed: violation.is_none(),
        min_margin,
        points,
    });
    violation
}

fn check_scalar(cert: &mut Certificate, name: &str, margin: f64, index: usize, t: f64) -> Option<Error> {
    let passed = margin >= 0.0;
    cert.checks.push(Check {
        name: name.to_string(),
        passed,
        min_margin: margin,
        points: 1,
    });
    (!passed).then(|| Error::Certification {
        what: name.to_string(),
        index,
        t,
        margin,
    })
}

fn finish(mut prof: Profile1D, cert: Certificate, failures: Vec<Option<Error>>) -> Result<Profile1D> {
    prof.certificate = Some(cert);
    match failures.into_iter().flatten().next() {
        Some(e) => Err(e),
        None => Ok(prof),
    }
}

/// Crossing point `s₀` of `C₁ s^{1-γ/2}` and `W(s)` for the growth barrier.
pub fn growth_crossing(p: &Params, c1: f64) -> f64 {
    (p.c_gamma / c1).powf(1.0 / (1.0 + p.gamma / 2.0))
}

/// Growth barrier: `g = W + ε̄ + C₁ s^{1-γ/2}`, `C₁ = 8n`, on `[0, t₀]` with
/// `ψ(t₀) = s₀`. Certifies `2ψ'' ≥ 4nψ' + W'(ψ)` in the interior,
/// `ψ(t₀) ≤ 1`, `ψ'(t₀) ≤ √(3C₁)` and `t₀ ≤ ¼`.
pub fn growth_barrier(p: &Params, n: usize, eps_bar: f64, resolution: f64) -> Result<Profile1D> {
    if n == 0 || !(eps_bar > 0.0) {
        return Err(Error::Domain(format!(
            "growth barrier needs n >= 1 and eps_bar > 0 (n = {n}, eps_bar = {eps_bar})"
        )));
    }
    let nf = n as f64;
    let c1 = 8.0 * nf;
    let s0 = growth_crossing(p, c1);
    if !(s0 > 0.0 && s0 < 1.0) {
        return Err(Error::ParameterRange(format!("s0 = {s0} not in (0, 1)")));
    }
    let form = ClosedForm::Growth { eps_bar, c1 };
    let gen = GeneratorG::closed(p, form, s0, resolution, &[]);
    let mut prof = psi_from_g(&gen, p, resolution)?;
    let t0 = *prof.ts.last().unwrap();
    let last = prof.ts.len() - 1;

    let margin_at = |s: f64| form.excess_prime(p, s) - 4.0 * nf * form.eval(p, s).sqrt();
    prof.margins = prof
        .vals
        .iter()
        .enumerate()
        .map(|(i, &s)| if i > 0 && i < last { margin_at(s) } else { f64::NAN })
        .collect();

    let mut cert = Certificate::default();
    let mut failures = vec![check_margins(
        &mut cert,
        "2psi'' - 4n psi' - W'(psi) on t-grid",
        &prof.ts,
        (1..last).map(|i| (i, prof.margins[i])),
    )];
    let s_inner = &gen.s_grid[1..gen.s_grid.len() - 1];
    failures.push(check_margins(
        &mut cert,
        "g' - 4n sqrt(g) - W' on s-grid",
        &[],
        s_inner.iter().enumerate().map(|(i, &s)| (i + 1, margin_at(s))),
    ));
    let slope_t0 = form.eval(p, s0).sqrt();
    let c0 = (3.0 * c1).sqrt();
    failures.push(check_scalar(&mut cert, "psi(t0) <= 1", 1.0 - prof.vals[last], last, t0));
    failures.push(check_scalar(&mut cert, "psi'(t0) <= sqrt(3 C1)", c0 - slope_t0, last, t0));
    failures.push(check_scalar(&mut cert, "t0 <= 1/4", 0.25 - t0, last, t0));

    prof.t_knots = vec![Knot { name: "t0", value: t0 }];
    prof.s_knots = vec![
        Knot { name: "s0", value: s0 },
        Knot { name: "slope_t0", value: slope_t0 },
        Knot { name: "C0", value: c0 },
    ];
    finish(prof, cert, failures)
}

/// `ψ(t) - φ(t)` for the growth barrier, evaluated without tabulation.
///
/// Uses `G_W(ψ) - G_W(φ) = D(ψ)` with `D(s) = ∫₀^s (W^{-1/2} - g^{-1/2})`, so that
/// `ψ(t) = φ(t + D(ψ(t)))`, solved by fixed-point iteration.
pub fn growth_barrier_offset(p: &Params, n: usize, eps_bar: f64, t: f64) -> f64 {
    let form = ClosedForm::Growth {
        eps_bar,
        c1: 8.0 * n as f64,
    };
    let d_of = |s: f64| -> f64 {
        let integrand = |x: f64| {
            let w = p.w_nonneg(x);
            let g = form.eval(p, x);
            let (rw, rg) = (w.sqrt(), g.sqrt());
            (g - w) / (rw * rg * (rw + rg))
        };
        let scale = integrand(s) * s;
        quad::log_simpson(&integrand, s * 1e-16, s, scale.abs() * 1e-12)
    };
    let mut psi = exact_phi(p, t);
    let mut d = 0.0;
    for _ in 0..30 {
        let next_d = d_of(psi);
        let settled = (next_d - d).abs() <= 1e-13 * next_d.abs();
        d = next_d;
        psi = exact_phi(p, t + d);
        if settled {
            break;
        }
    }
    // φ(t + d) - φ(t) without cancellation
    p.c_star * t.powf(p.alpha) * (p.alpha * (d / t).ln_1p()).exp_m1()
}

/// Leading coefficient `ε` of `ψ(t) - φ(t) ≈ ε t^{2-α}` for the growth barrier,
/// from the `ε̄` term of `g^{-1/2} = W^{-1/2}(1 - ½ ε̄/W + …)`.
pub fn growth_barrier_leading_coefficient(p: &Params, eps_bar: f64) -> f64 {
    let e = 1.0 + 1.5 * p.gamma;
    p.alpha * p.c_star * eps_bar * p.c_star.powf(e) / (2.0 * p.c_gamma.powf(1.5) * e)
}

/// Ratios `(ψ - φ)/t^{2-α}` of the growth barrier and the next-order exponent
/// fitted from three consecutive samples.
#[derive(Clone, Debug)]
pub struct ExpansionReport {
    pub ts: Vec<f64>,
    pub ratios: Vec<f64>,
    pub leading_coefficient: f64,
    pub next_order_exponent: Option<f64>,
}

pub fn growth_barrier_expansion(p: &Params, n: usize, eps_bar: f64, ts: &[f64]) -> ExpansionReport {
    let ratios: Vec<f64> = ts
        .iter()
        .map(|&t| growth_barrier_offset(p, n, eps_bar, t) / t.powf(2.0 - p.alpha))
        .collect();
    let next_order_exponent = (ts.len() >= 3).then(|| {
        let (d1, d2) = (ratios[0] - ratios[1], ratios[1] - ratios[2]);
        (d1 / d2).ln() / (ts[0] / ts[1]).ln()
    });
    ExpansionReport {
        ts: ts.to_vec(),
        ratios,
        leading_coefficient: growth_barrier_leading_coefficient(p, eps_bar),
        next_order_exponent: next_order_exponent.filter(|x| x.is_finite()),
    }
}

/// Level `s₀` with `W(s₀) = 1`, and the matching `t₀ = φ⁻¹(s₀)` where `φ'(t₀) = 1`.
pub fn unit_level(p: &Params) -> (f64, f64) {
    let s0 = p.c_gamma.powf(1.0 / p.gamma);
    (s0, exact_phi_inverse(p, s0))
}

/// The increasing correction `a(t)` with `a'' + 2n a' = -c`, `a(t₀) = 0`, solved
/// explicitly as `A(1 - e^{-2nτ}) - cτ/(2n)` with `A` chosen so that `a' > 0` on `[t₀, 1]`.
#[derive(Clone, Copy, Debug)]
struct Correction {
    t0: f64,
    n: f64,
    c: f64,
    amp: f64,
}

impl Correction {
    fn new(t0: f64, n: f64, c: f64) -> Self {
        // twice the amplitude needed for a'(1) = 0
        let amp = c * (2.0 * n * (1.0 - t0)).exp() / (2.0 * n * n);
        Self { t0, n, c, amp }
    }

    fn value(&self, t: f64) -> f64 {
        let tau = t - self.t0;
        self.amp * (-(-2.0 * self.n * tau).exp_m1()) - self.c * tau / (2.0 * self.n)
    }

    fn d1(&self, t: f64) -> f64 {
        let tau = t - self.t0;
        2.0 * self.n * self.amp * (-2.0 * self.n * tau).exp() - self.c / (2.0 * self.n)
    }

    fn d2(&self, t: f64) -> f64 {
        let tau = t - self.t0;
        -4.0 * self.n * self.n * self.amp * (-2.0 * self.n * tau).exp()
    }
}

/// Interior barrier `ψ = φ + K a(t) χ{t ≥ t₀}` on `[0, 1]`, where `W(φ(t₀)) = 1`.
/// Certifies `2ψ'' + 4nψ' ≤ W'(ψ)` on `(t₀, 1]` (closed form and centered
/// differences with tolerance `10 h²`), `ψ = φ` on `[0, t₀]` and `ψ(1) ≥ 2C₀`.
pub fn interior_barrier(p: &Params, n: usize, k: f64, c0: f64, resolution: f64) -> Result<Profile1D> {
    if n == 0 || !(k > 0.0) {
        return Err(Error::Domain(format!("interior barrier needs n >= 1 and K > 0 (n = {n}, K = {k})")));
    }
    let nf = n as f64;
    let (s0, t0) = unit_level(p);
    if !(t0 < 1.0) {
        return Err(Error::ParameterRange(format!("t0 = {t0} >= 1")));
    }
    let corr = Correction::new(t0, nf, 1.0);
    let ts = uniform_grid(0.0, 1.0, resolution);
    let above = |t: f64| t > t0;
    let vals: Vec<f64> = ts
        .iter()
        .map(|&t| exact_phi(p, t) + if t >= t0 { k * corr.value(t) } else { 0.0 })
        .collect();
    let slopes: Vec<f64> = ts
        .iter()
        .map(|&t| {
            if t == 0.0 {
                f64::INFINITY
            } else {
                exact_phi_prime(p, t) + if above(t) { k * corr.d1(t) } else { 0.0 }
            }
        })
        .collect();
    let margins: Vec<f64> = ts
        .iter()
        .zip(&vals)
        .map(|(&t, &psi)| {
            if above(t) {
                let second = exact_phi_second(p, t) + k * corr.d2(t);
                let first = exact_phi_prime(p, t) + k * corr.d1(t);
                p.w_prime_pos(psi) - 2.0 * second - 4.0 * nf * first
            } else {
                f64::NAN
            }
        })
        .collect();

    let mut cert = Certificate::default();
    let last = ts.len() - 1;
    let mut failures = vec![check_margins(
        &mut cert,
        "W'(psi) - 2psi'' - 4n psi' on (t0, 1]",
        &ts,
        (0..ts.len()).filter(|&i| above(ts[i])).map(|i| (i, margins[i])),
    )];
    let tol = 10.0 * resolution * resolution;
    failures.push(check_margins(
        &mut cert,
        "centered-difference margin on (t0, 1]",
        &ts,
        (1..last).filter(|&i| ts[i - 1] > t0).map(|i| {
            let (hl, hr) = (ts[i] - ts[i - 1], ts[i + 1] - ts[i]);
            let second = 2.0 * (hl * vals[i + 1] - (hl + hr) * vals[i] + hr * vals[i - 1]) / (hl * hr * (hl + hr));
            let first = (vals[i + 1] - vals[i - 1]) / (hl + hr);
            (i, p.w_prime_pos(vals[i]) - 2.0 * second - 4.0 * nf * first + tol)
        }),
    ));
    let mismatch = ts
        .iter()
        .zip(&vals)
        .filter(|(&t, _)| t <= t0)
        .map(|(&t, &v)| (v - exact_phi(p, t)).abs())
        .fold(0.0, f64::max);
    failures.push(check_scalar(&mut cert, "psi = phi on [0, t0]", -mismatch, 0, 0.0));
    failures.push(check_scalar(&mut cert, "psi(1) >= 2 C0", vals[last] - 2.0 * c0, last, 1.0));

    let prof = Profile1D {
        ts,
        vals,
        slopes,
        margins,
        params: *p,
        t_knots: vec![Knot { name: "t0", value: t0 }],
        s_knots: vec![
            Knot { name: "s0", value: s0 },
            Knot { name: "K", value: k },
            Knot {
                name: "slope_t0",
                value: exact_phi_prime(p, t0) + k * corr.d1(t0),
            },
        ],
        generator: None,
        certificate: None,
    };
    finish(prof, cert, failures)
}

/// Smallest `K = 2^j` (`j ≥ -8`) for which the interior barrier certifies.
pub fn interior_barrier_min_k(p: &Params, n: usize, c0: f64, resolution: f64) -> Result<Profile1D> {
    let mut last_err = None;
    for j in -8..=30 {
        match interior_barrier(p, n, 2f64.powi(j), c0, resolution) {
            Ok(prof) => return Ok(prof),
            Err(e @ Error::Certification { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

/// Levels of the density barrier: `W(s₁) = M`, `W(s₀) = 1`, `W(s₂) = ¼`.
pub fn density_levels(p: &Params, m_level: f64) -> (f64, f64, f64) {
    let s = |w: f64| (p.c_gamma / w).powf(1.0 / p.gamma);
    (s(m_level), s(1.0), s(0.25))
}

/// Density barrier from `g = W + (-½ + C_n(s^{1-γ/2} - s₁^{1-γ/2}))χ[s₁, 1]`,
/// `C_n = 8n`, followed until `g` vanishes at `σ ∈ [s₀, s₂]`; `ψ` is constant
/// afterwards. Certifies on the `[0, 1]` grid: `ψ = φ` on `[0, t₁]`,
/// `2ψ'' - 8nψ' ≥ W'(ψ)` on `(t₁, 1]`, `½W(ψ) ≤ (ψ')² ≤ W(ψ)` on `[0, t₀]`, and
/// that the active part has length at most `¼`.
pub fn density_barrier(p: &Params, n: usize, m_level: f64, resolution: f64) -> Result<Profile1D> {
    if n == 0 {
        return Err(Error::Domain("density barrier needs n >= 1".into()));
    }
    if !(m_level > 1.0) {
        return Err(Error::ParameterRange(format!("M = {m_level} must exceed 1 so that s1 < s0")));
    }
    let nf = n as f64;
    let c_n = 8.0 * nf;
    let beta = p.beta();
    let (s1, s0, s2) = density_levels(p, m_level);
    // g(s₂) < 0 is necessary for a zero of g below s₂
    let reach = c_n * (s2.powf(beta) - s1.powf(beta));
    if !(reach < 0.25) {
        return Err(Error::ParameterRange(format!(
            "gamma = {} not close enough to 2 for n = {n}, M = {m_level}: C_n (s2^b - s1^b) = {reach} >= 1/4",
            p.gamma
        )));
    }
    let form = ClosedForm::Density { c_n, s1 };
    let sigma = first_zero(|s| form.eval(p, s), s1, s2).ok_or_else(|| {
        Error::Construction(format!("g has no zero in [s1, s2] = [{s1}, {s2}]"))
    })?;
    if sigma < s0 {
        return Err(Error::Construction(format!("g vanishes at {sigma} < s0 = {s0}")));
    }

    let mut gen = GeneratorG::closed(p, form, sigma, resolution, &[s1, s0]);
    *gen.g_vals.last_mut().unwrap() = 0.0;
    let table = GTable::build(&gen, p)?;
    let t_star = table.total();
    let (t1, t0) = (table.g_at(s1), table.g_at(s0));

    let dt_fine = resolution.min(t_star / MIN_INTERVALS);
    let mut ts = uniform_grid(0.0, t_star, dt_fine);
    if t_star < 1.0 {
        let coarse = uniform_grid(t_star, 1.0, resolution);
        ts.extend(coarse.into_iter().skip(1));
    }
    let mut prof = profile_on(&gen, p, &table, ts);
    let ts = prof.ts.clone();
    let w_prime_sigma = p.w_prime_pos(sigma);

    // residual of 2ψ'' - 8nψ' - W'(ψ) in g-form: (g' - W') - 8n√g
    let upper_margin = |s: f64| -> f64 {
        if s >= sigma {
            -w_prime_sigma
        } else {
            form.excess_prime(p, s) - 8.0 * nf * form.eval(p, s).max(0.0).sqrt()
        }
    };
    prof.margins = ts
        .iter()
        .zip(&prof.vals)
        .map(|(&t, &s)| {
            if t > t1 {
                upper_margin(s)
            } else if s > 0.0 {
                let excess = form.excess(p, s);
                (0.5 * p.w_nonneg(s) + excess).min(-excess)
            } else {
                f64::NAN
            }
        })
        .collect();
    for (t, v) in ts.iter().zip(prof.vals.iter_mut()) {
        if *t >= t_star {
            *v = sigma;
        }
    }
    for (t, d) in ts.iter().zip(prof.slopes.iter_mut()) {
        if *t >= t_star {
            *d = 0.0;
        }
    }

    let mut cert = Certificate::default();
    let phi_mismatch = ts
        .iter()
        .zip(&prof.vals)
        .filter(|(&t, _)| t <= t1)
        .map(|(&t, &v)| (v - exact_phi(p, t)).abs() / exact_phi(p, t).max(1e-300))
        .fold(0.0, f64::max);
    let mut failures = vec![check_scalar(&mut cert, "psi = phi on [0, t1] (relative 1e-9)", 1e-9 - phi_mismatch, 0, 0.0)];
    failures.push(check_margins(
        &mut cert,
        "2psi'' - 8n psi' - W'(psi) on (t1, 1]",
        &ts,
        (0..ts.len()).filter(|&i| ts[i] > t1).map(|i| (i, prof.margins[i])),
    ));
    let s_mid: Vec<(usize, f64)> = gen
        .s_grid
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > s1 && s < sigma)
        .map(|(i, &s)| (i, s))
        .collect();
    failures.push(check_margins(
        &mut cert,
        "g' - 8n sqrt(g) - W' on s-grid (s1, sigma)",
        &[],
        s_mid.iter().map(|&(i, s)| (i, upper_margin(s))),
    ));
    let lower_upper = |s: f64| -> (f64, f64) {
        let excess = form.excess(p, s);
        (0.5 * p.w_nonneg(s) + excess, -excess)
    };
    failures.push(check_margins(
        &mut cert,
        "(psi')^2 - W(psi)/2 on [0, t0]",
        &ts,
        (1..ts.len()).filter(|&i| ts[i] <= t0).map(|i| (i, lower_upper(prof.vals[i]).0)),
    ));
    failures.push(check_margins(
        &mut cert,
        "W(psi) - (psi')^2 on [0, t0]",
        &ts,
        (1..ts.len()).filter(|&i| ts[i] <= t0).map(|i| (i, lower_upper(prof.vals[i]).1)),
    ));
    failures.push(check_scalar(&mut cert, "active length <= 1/4", 0.25 - t_star, 0, t_star));

    prof.t_knots = vec![
        Knot { name: "t1", value: t1 },
        Knot { name: "t0", value: t0 },
        Knot { name: "t_star", value: t_star },
    ];
    prof.s_knots = vec![
        Knot { name: "s1", value: s1 },
        Knot { name: "s0", value: s0 },
        Knot { name: "s2", value: s2 },
        Knot { name: "sigma", value: sigma },
    ];
    finish(prof, cert, failures)
}

/// First sign change of `f` from positive to nonpositive on `[a, b]`, refined by bisection.
fn first_zero<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Option<f64> {
    const SCAN: usize = 20_000;
    let ratio = (b / a).powf(1.0 / SCAN as f64);
    let mut lo = a;
    if !(f(lo) > 0.0) {
        return None;
    }
    for _ in 0..SCAN {
        let hi = (lo * ratio).min(b);
        if !(f(hi) > 0.0) {
            let (mut l, mut h) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (l + h);
                if m <= l || m >= h {
                    break;
                }
                if f(m) > 0.0 {
                    l = m;
                } else {
                    h = m;
                }
            }
            return Some(h);
        }
        lo = hi;
    }
    None
}
