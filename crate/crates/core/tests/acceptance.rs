//! Acceptance run: one line per criterion, nonzero exit if any criterion fails.

use std::time::{Duration, Instant};

use alt_phillips::energy::{bv_of_transform, eval_j};
use alt_phillips::field::{ball_mask, rescale_onto, Grid, IndicatorField, ScalarField};
use alt_phillips::lab::{
    gamma_sweep, interface_points, ls_slope, nearest_free_boundary_node, recovery_sequence, standard_radii,
    BoundaryTemplate, RecoveryConfig, SweepOutcome, SweepProblem,
};
use alt_phillips::profile::{
    density_barrier, exact_phi, exact_phi_prime, growth_barrier, interior_barrier_min_k, profile_energy, psi_from_g,
    ClosedForm, GeneratorG,
};
use alt_phillips::solver::{minimize_j, minimize_j_from, seed_from_zero_set};
use alt_phillips::{Field, Options, Params, Result};

const SWEEP_GAMMAS: [f64; 5] = [1.0, 1.5, 1.8, 1.9, 1.95];

/// Half of the smallest density ratio of the `γ = 1` chord solution at `h = 1/256`
/// (0.4571); frozen.
const DENSITY_FLOOR: f64 = 0.2285;

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, summary: String::new(), details: Vec::new() }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.details.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }
}

/// Every discrete field produced along the way, for the coarea check.
#[derive(Default)]
struct Corpus {
    fields: Vec<(String, Params, Field)>,
}

impl Corpus {
    fn push(&mut self, name: impl Into<String>, p: &Params, u: &Field) {
        self.fields.push((name.into(), *p, u.clone()));
    }
}

fn params(gamma: f64) -> Params {
    Params::new(gamma).expect("gamma in range")
}

fn full(g: &Grid<f64>) -> IndicatorField<f64> {
    IndicatorField::full(*g)
}

fn normalization() -> Result<Outcome> {
    let mut out = Outcome::new();
    let mut worst: f64 = 0.0;
    for g in [0.1, 0.5, 1.0, 1.5, 1.9, 1.99] {
        let err = (params(g).normalization_integral() - 1.0).abs();
        worst = worst.max(err);
        out.check(err <= 1e-10, format!("gamma {g}: |I - 1| = {err:.2e}"));
    }
    out.summary = format!("max |I - 1| = {worst:.2e} (tol 1e-10)");
    Ok(out)
}

fn exact_profile() -> Result<Outcome> {
    let mut out = Outcome::new();
    let (mut worst_res, mut worst_gen): (f64, f64) = (0.0, 0.0);
    for g in [0.1, 0.5, 1.0, 1.5, 1.9, 1.99] {
        let p = params(g);
        let res = (1..=10_000)
            .map(|i| {
                let t = i as f64 * 1e-4;
                (exact_phi_prime(&p, t) - p.w_nonneg(exact_phi(&p, t)).sqrt()).abs()
            })
            .fold(0.0, f64::max);
        let gen = GeneratorG::closed(&p, ClosedForm::Potential, exact_phi(&p, 1.0), 1e-4, &[]);
        let prof = psi_from_g(&gen, &p, 1e-4)?;
        let err = prof.ts.iter().zip(&prof.vals).map(|(&t, &v)| (v - exact_phi(&p, t)).abs()).fold(0.0, f64::max);
        worst_res = worst_res.max(res);
        worst_gen = worst_gen.max(err);
        out.check(res <= 1e-8 && err <= 1e-6, format!("gamma {g}: ode residual {res:.2e}, psi_from_g error {err:.2e}"));
    }
    out.summary = format!("ode residual {worst_res:.2e} (tol 1e-8), generator error {worst_gen:.2e} (tol 1e-6)");
    Ok(out)
}

fn solver_recovery(corpus: &mut Corpus) -> Result<Outcome> {
    let mut out = Outcome::new();
    let p = params(1.0);
    let g = Grid::unit_interval(1000)?;
    let data = BoundaryTemplate::PhiRight.data(&g, &p)?;
    let (u, rep) = minimize_j(&g, &p, &data, &Options::default())?;
    let err = (0..g.len()).map(|k| (u.values[k] - exact_phi(&p, g.position(k)[0])).abs()).fold(0.0, f64::max);
    let dead: Vec<usize> = (0..g.len()).filter(|&k| u.values[k] == 0.0).collect();
    out.check(err <= 5e-3, format!("max nodal error {err:.3e} (tol 5e-3)"));
    out.check(dead == [0], format!("dead nodes {:?}", &dead[..dead.len().min(8)]));
    out.check(rep.converged, format!("converged after {} sweeps", rep.sweeps_used));
    out.summary = format!("error {err:.2e}, dead set size {}", dead.len());
    corpus.push("1d solver output, gamma 1", &p, &u);
    Ok(out)
}

/// Planar data `φ((x₁ - ½)⁺)` on the unit square, solved from the zero-set guess `{x₁ ≤ ½}`.
fn planar_solution(gamma: f64, n: usize) -> Result<Field> {
    let p = params(gamma);
    let g = Grid::unit_square(n)?;
    let data = BoundaryTemplate::Planar { x_fb: 0.5 }.data(&g, &p)?;
    let guess = IndicatorField::from_fn(g, |x| x[0] <= 0.5);
    let start = seed_from_zero_set(&p, &data, &guess)?;
    let (u, _) = minimize_j_from(&g, &p, &data, &start, &Options::default())?;
    Ok(u)
}

fn log_slope(rs: &[f64], js: &[f64]) -> f64 {
    let lr: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let lj: Vec<f64> = js.iter().map(|j| j.ln()).collect();
    ls_slope(&lr, &lj)
}

fn energy_scaling(corpus: &mut Corpus) -> Result<Outcome> {
    let mut out = Outcome::new();
    let radii: Vec<f64> = (0..=12).map(|i| 1e-3 * 1e3f64.powf(i as f64 / 12.0)).collect();
    for g in [0.5, 1.0, 1.5, 1.9, 1.95] {
        let p = params(g);
        let js = radii.iter().map(|&r| profile_energy(&p, r)).collect::<Result<Vec<_>>>()?;
        let slope = log_slope(&radii, &js);
        let expect = 1.0 - p.alpha * g;
        out.check((slope - expect).abs() <= 1e-3, format!("1d gamma {g}: slope {slope:.6} vs {expect:.6}"));
    }
    let mut worst: f64 = 0.0;
    for g in SWEEP_GAMMAS {
        let p = params(g);
        let u = planar_solution(g, 256)?;
        let x0 = nearest_free_boundary_node(&u, [0.5, 0.5]).expect("free boundary point");
        let c = u.grid.position(x0);
        let rs = standard_radii(&u, x0, 10);
        let js = rs
            .iter()
            .map(|&r| Ok(eval_j(&u, &p, &ball_mask(&u.grid, c, r))?.total))
            .collect::<Result<Vec<_>>>()?;
        let slope = log_slope(&rs, &js);
        let expect = 2.0 - p.alpha * g;
        worst = worst.max((slope - expect).abs());
        out.check(
            (slope - expect).abs() <= 0.15,
            format!("2d planar gamma {g} at ({:.3}, {:.3}): slope {slope:.4} vs {expect:.4}", c[0], c[1]),
        );
        corpus.push(format!("2d planar solver output, gamma {g}"), &p, &u);
    }
    out.summary = format!("2d worst slope deviation {worst:.3} (tol 0.15)");
    Ok(out)
}

fn rescaling(corpus: &mut Corpus) -> Result<Outcome> {
    let mut out = Outcome::new();
    let p = params(1.0);
    let n = 512;
    let g = Grid::unit_square(n)?;
    let target = Grid::from_extent(2, [-1.0, -1.0], [2.0, 2.0], [2 * n, 2 * n])?;
    let y0 = [0.5, 0.5];
    let smooth = ScalarField::from_fn(g, |x| 1.0 + x[0] * x[0] + 0.5 * x[1])?;
    let planar = ScalarField::from_fn(g, |x| exact_phi(&p, x[0] - 0.5))?;
    let mut worst: f64 = 0.0;
    for (name, u) in [("smooth positive field", &smooth), ("planar profile through y0", &planar)] {
        for lambda in [0.5, 0.25] {
            let scaled = rescale_onto(u, &p, y0, lambda, &target)?;
            let lhs = eval_j(&scaled, &p, &ball_mask(&target, [0.0, 0.0], 1.0))?.total;
            let rhs = lambda.powf(p.alpha * p.gamma - 2.0) * eval_j(u, &p, &ball_mask(&g, y0, lambda))?.total;
            let rel = (lhs - rhs).abs() / rhs;
            worst = worst.max(rel);
            out.check(rel <= 0.01, format!("{name}, lambda {lambda}: {lhs:.6} vs {rhs:.6} (rel {rel:.2e})"));
        }
        corpus.push(format!("rescaling input: {name}"), &p, u);
    }
    out.summary = format!("worst relative mismatch {worst:.2e} (tol 1e-2)");
    Ok(out)
}

fn barriers() -> Result<Outcome> {
    let mut out = Outcome::new();
    let mut report = |name: &str, g: f64, res: Result<alt_phillips::profile::Profile1D>| match res {
        Ok(prof) => {
            let cert = prof.certificate.as_ref().expect("certificate");
            let m = cert.min_margin();
            out.check(cert.passed() && m >= 0.0, format!("{name} gamma {g}: min margin {m:.3e}"));
        }
        Err(e) => out.check(false, format!("{name} gamma {g}: {e}")),
    };
    for g in [1.8, 1.9, 1.95] {
        report("growth barrier", g, growth_barrier(&params(g), 2, 1e-4, 1e-4));
    }
    for g in [1.0, 1.5] {
        report("interior barrier", g, interior_barrier_min_k(&params(g), 2, 1.0, 1e-4));
    }
    for g in [1.8, 1.9, 1.95] {
        report("density barrier", g, density_barrier(&params(g), 1, 2.0, 1e-4));
    }
    let failed = out.details.iter().filter(|d| d.starts_with("FAIL")).count();
    out.summary = format!("{} of {} constructions certified", out.details.len() - failed, out.details.len());
    Ok(out)
}

fn recovery(corpus: &mut Corpus) -> Result<Outcome> {
    let mut out = Outcome::new();
    let g = Grid::unit_square(512)?;
    let e = IndicatorField::from_fn(g, |x| x[0] <= 0.5);
    let zero = ScalarField::zeros(g);
    let cfg = RecoveryConfig::default();
    let mut gaps = Vec::new();
    for gm in [1.5, 1.8, 1.9, 1.95] {
        let p = params(gm);
        let rec = recovery_sequence(&zero, &e, &cfg, &p)?;
        let en = rec.energy()?;
        gaps.push((en.total - 1.0).abs());
        out.details.push(format!("     gamma {gm}: J = {:.5} (nodal evaluation {:.5})", en.total, en.nodal));
        corpus.push(format!("recovery field, gamma {gm}"), &p, &rec.field);
    }
    let last = *gaps.last().unwrap();
    out.check(last <= 0.1, format!("|J - 1| at gamma 1.95 = {last:.4} (tol 0.1)"));
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    out.check(decreasing, format!("|J - 1| strictly decreasing: {gaps:.4?}"));
    out.summary = format!("|J - 1| = {last:.4} at gamma 1.95");
    Ok(out)
}

fn chord_sweep() -> Result<Vec<SweepOutcome>> {
    let problem = SweepProblem::chord(256)?;
    let opts = Options { homotopy_stages: 17, cascade_levels: 2, ..Default::default() };
    gamma_sweep(&problem, &SWEEP_GAMMAS, &opts)
}

fn free_boundary_convergence(sweep: &[SweepOutcome]) -> Result<Outcome> {
    let mut out = Outcome::new();
    let h = sweep[0].record.h;
    let hd: Vec<f64> = sweep.iter().map(|s| s.record.fb_hausdorff_to_reference).collect();
    for s in sweep {
        let xs: Vec<f64> = interface_points(&s.field).iter().filter(|x| (x[1] - 0.5).abs() < 0.25).map(|x| x[0]).collect();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.details.push(format!(
            "     gamma {}: hausdorff {:.5} ({:.1} h), interface x in [{lo:.4}, {hi:.4}] for |y - 1/2| < 1/4",
            s.record.gamma,
            s.record.fb_hausdorff_to_reference,
            s.record.fb_hausdorff_to_reference / h
        ));
    }
    let decreasing = hd.windows(2).all(|w| w[1] < w[0]);
    out.check(decreasing, format!("hausdorff strictly decreasing in gamma: {hd:.5?}"));
    let last = *hd.last().unwrap();
    out.check(last <= 4.0 * h, format!("final hausdorff {last:.5} <= 4h = {:.5}", 4.0 * h));
    out.summary = format!("final hausdorff {:.1} h (tol 4 h)", last / h);
    Ok(out)
}

fn density(sweep: &[SweepOutcome]) -> Result<Outcome> {
    let mut out = Outcome::new();
    let mut worst = f64::INFINITY;
    for s in sweep {
        match &s.density {
            Some(d) => {
                let m = d.min_ratio();
                worst = worst.min(m);
                out.check(
                    m >= DENSITY_FLOOR,
                    format!(
                        "gamma {}: min ratio {m:.4} over r in [{:.4}, {:.4}] at ({:.4}, {:.4})",
                        s.record.gamma,
                        d.radii[0],
                        d.radii.last().unwrap(),
                        d.center[0],
                        d.center[1]
                    ),
                );
            }
            None => out.details.push(format!("     gamma {}: no free boundary point", s.record.gamma)),
        }
    }
    out.summary = format!("worst ratio {worst:.4}, frozen floor {DENSITY_FLOOR}");
    Ok(out)
}

fn coarea(corpus: &Corpus) -> Result<Outcome> {
    let mut out = Outcome::new();
    let mut violations = 0;
    for (name, p, u) in &corpus.fields {
        let all = full(&u.grid);
        let bv = bv_of_transform(u, p, &all)?;
        let j = eval_j(u, p, &all)?.total;
        let ok = bv <= j + 10.0 * u.grid.h;
        violations += (!ok) as usize;
        out.check(ok, format!("{name}: bv {bv:.5} <= J {j:.5} + 10h"));
    }
    for g in [1.0, 1.5, 1.9] {
        let p = params(g);
        let grid = Grid::unit_interval(10_000)?;
        let u = ScalarField::from_fn(grid, |x| exact_phi(&p, x[0]))?;
        let all = full(&grid);
        let bv = bv_of_transform(&u, &p, &all)?;
        let j = eval_j(&u, &p, &all)?.total;
        out.check(bv <= j + 10.0 * grid.h, format!("exact 1d profile gamma {g}, h 1e-4: bv {bv:.5} <= J {j:.5} + 10h"));
        let rel = (bv - j).abs() / j;
        out.check(rel <= 0.02, format!("exact 1d profile gamma {g}, h 1e-4: |bv - J| / J = {rel:.4} (tol 0.02)"));
    }
    out.summary = format!("{violations} of {} corpus fields violate the inequality", corpus.fields.len());
    Ok(out)
}

fn main() {
    let mut corpus = Corpus::default();
    let mut sweep: Option<Vec<SweepOutcome>> = None;
    let mut all_pass = true;
    let criteria: [(&str, Duration); 10] = [
        ("normalization identity", Duration::from_secs(1)),
        ("exact 1d profile", Duration::from_secs(5)),
        ("solver recovery", Duration::from_secs(30)),
        ("energy scaling", Duration::from_secs(120)),
        ("rescaling identity", Duration::from_secs(60)),
        ("barrier certification", Duration::from_secs(30)),
        ("recovery sequence", Duration::from_secs(300)),
        ("free boundary convergence", Duration::from_secs(1800)),
        ("density non-degeneracy", Duration::from_secs(1800)),
        ("coarea inequality", Duration::from_secs(60)),
    ];
    let mut sweep_time = Duration::ZERO;
    for (i, (name, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = match i {
            0 => normalization(),
            1 => exact_profile(),
            2 => solver_recovery(&mut corpus),
            3 => energy_scaling(&mut corpus),
            4 => rescaling(&mut corpus),
            5 => barriers(),
            6 => recovery(&mut corpus),
            7 | 8 => {
                if sweep.is_none() {
                    let t = Instant::now();
                    let s = chord_sweep();
                    sweep_time = t.elapsed();
                    match s {
                        Ok(s) => {
                            for o in &s {
                                corpus.push(format!("chord sweep output, gamma {}", o.record.gamma), &params(o.record.gamma), &o.field);
                            }
                            sweep = Some(s);
                        }
                        Err(e) => {
                            println!("criterion {} {name}: FAIL (sweep error: {e})", i + 1);
                            all_pass = false;
                            continue;
                        }
                    }
                }
                let s = sweep.as_deref().unwrap();
                if i == 7 { free_boundary_convergence(s) } else { density(s) }
            }
            _ => coarea(&corpus),
        };
        let mut elapsed = start.elapsed();
        if i == 8 {
            elapsed += sweep_time;
        }
        match result {
            Ok(mut o) => {
                let in_time = elapsed <= *limit;
                if !in_time {
                    o.details.push(format!("FAIL runtime {:.1} s over the {} s limit", elapsed.as_secs_f64(), limit.as_secs()));
                }
                let pass = o.pass && in_time;
                all_pass &= pass;
                println!(
                    "criterion {:>2} {name}: {} ({}; {:.1} s)",
                    i + 1,
                    if pass { "PASS" } else { "FAIL" },
                    o.summary,
                    elapsed.as_secs_f64()
                );
                for d in o.details {
                    println!("      {d}");
                }
            }
            Err(e) => {
                all_pass = false;
                println!("criterion {:>2} {name}: FAIL (error: {e})", i + 1);
            }
        }
    }
    if !all_pass {
        std::process::exit(1);
    }
}
