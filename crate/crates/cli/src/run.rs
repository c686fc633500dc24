use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use alt_phillips::energy::eval_j;
use alt_phillips::field::{read_field, write_field, Grid, IndicatorField, ScalarField};
use alt_phillips::lab::{
    density_scan, gamma_sweep, lsc_check, nearest_free_boundary_node, recovery_sequence, standard_radii,
    write_sweep_csv, RecoveryConfig, SweepRecord,
};
use alt_phillips::profile::{
    density_barrier, exact_phi, exact_profile, growth_barrier, interior_barrier, interior_barrier_min_k,
    profile_energy, psi_from_g, Certificate, ClosedForm, GeneratorG, Profile1D,
};
use alt_phillips::solver::{minimize_j, SolverOptions};
use alt_phillips::Params;
use serde::Serialize;
use serde_json::json;

use crate::config::{self, *};
use crate::svg;
use crate::{
    BarrierArgs, CheckArgs, CliError, Command, Common, DensityArgs, ProfileArgs, RecoveryArgs, SolveArgs,
    SolverFlags, SweepArgs,
};

pub fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Profile(a) => profile(a),
        Command::Barrier(a) => barrier(a),
        Command::Solve(a) => solve(a),
        Command::Density(a) => density(a),
        Command::Sweep(a) => sweep(a),
        Command::Recovery(a) => recovery(a),
        Command::Check(a) => check(a),
    }
}

fn params(gamma: f64) -> Result<Params, CliError> {
    Ok(Params::new(gamma)?)
}

fn out_dir(common: &Common) -> Result<PathBuf, CliError> {
    let dir = common.out.clone().ok_or_else(|| CliError::Config("missing --out".into()))?;
    fs::create_dir_all(&dir)
        .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
    Ok(dir)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    fs::write(dir.join(name), text + "\n")?;
    Ok(())
}

fn apply_solver(opts: &mut SolverOptions<f64>, f: &SolverFlags) -> Result<(), CliError> {
    if let Some(v) = f.max_sweeps {
        opts.max_sweeps = v;
    }
    if let Some(v) = &f.delta_schedule {
        opts.delta_schedule = v.0.clone();
    }
    if let Some(v) = &f.ordering {
        config::set_ordering(opts, v)?;
    }
    if let Some(v) = &f.seed {
        config::set_seed(opts, v)?;
    }
    if let Some(v) = f.sor_omega {
        opts.sor_omega = Some(v);
    }
    if let Some(v) = f.homotopy_stages {
        opts.homotopy_stages = v;
    }
    if let Some(v) = f.cascade_levels {
        opts.cascade_levels = v;
    }
    Ok(())
}

fn certificate_json(c: &Option<Certificate>) -> serde_json::Value {
    match c {
        None => json!(null),
        Some(c) => json!({
            "passed": c.passed(),
            "min_margin": c.min_margin(),
            "checks": c.checks.iter().map(|k| json!({
                "name": k.name,
                "passed": k.passed,
                "min_margin": k.min_margin,
                "points": k.points,
            })).collect::<Vec<_>>(),
        }),
    }
}

fn write_profile(dir: &Path, csv: &str, prof: &Profile1D) -> Result<(), CliError> {
    let mut w = create(dir, csv)?;
    prof.write_csv(&mut w)?;
    w.flush()?;
    let knots = |ks: &[alt_phillips::profile::Knot]| -> serde_json::Map<String, serde_json::Value> {
        ks.iter().map(|k| (k.name.to_string(), json!(k.value))).collect()
    };
    write_json(
        dir,
        "certificate.json",
        &json!({
            "gamma": prof.params.gamma,
            "t_knots": knots(&prof.t_knots),
            "s_knots": knots(&prof.s_knots),
            "certificate": certificate_json(&prof.certificate),
        }),
    )
}

fn profile(a: ProfileArgs) -> Result<(), CliError> {
    let mut c: ProfileConfig = config::load(a.common.config.as_deref(), "profile")?;
    if let Some(v) = a.gamma {
        c.gamma = v;
    }
    if let Some(v) = &a.kind {
        c.kind = if v == "exact" { ProfileKind::Exact } else { ProfileKind::Generator };
    }
    if let Some(v) = a.t_max {
        c.t_max = v;
    }
    if let Some(v) = a.resolution {
        c.resolution = v;
    }
    c.validate()?;
    let dir = out_dir(&a.common)?;
    let p = params(c.gamma)?;
    let prof = match c.kind {
        ProfileKind::Exact => exact_profile(&p, c.t_max, c.resolution),
        ProfileKind::Generator => {
            let gen = GeneratorG::closed(&p, ClosedForm::Potential, exact_phi(&p, c.t_max), c.resolution, &[]);
            psi_from_g(&gen, &p, c.resolution)?
        }
    };
    write_profile(&dir, "profile.csv", &prof)?;
    config::write_manifest(&dir, "profile", &c)?;
    println!("profile: {} points on [0, {}] written to {}", prof.ts.len(), c.t_max, dir.display());
    Ok(())
}

fn barrier(a: BarrierArgs) -> Result<(), CliError> {
    let mut c: BarrierConfig = config::load(a.common.config.as_deref(), "barrier")?;
    if let Some(v) = a.gamma {
        c.gamma = v;
    }
    if let Some(v) = &a.kind {
        c.kind = match v.as_str() {
            "growth" => BarrierKind::Growth,
            "interior" => BarrierKind::Interior,
            _ => BarrierKind::Density,
        };
    }
    if let Some(v) = a.n {
        c.n = v;
    }
    if let Some(v) = a.eps_bar {
        c.eps_bar = v;
    }
    if a.k.is_some() {
        c.k = a.k;
    }
    if let Some(v) = a.c0 {
        c.c0 = v;
    }
    if let Some(v) = a.m_level {
        c.m_level = v;
    }
    if let Some(v) = a.resolution {
        c.resolution = v;
    }
    c.validate()?;
    let dir = out_dir(&a.common)?;
    let p = params(c.gamma)?;
    let prof = match c.kind {
        BarrierKind::Growth => growth_barrier(&p, c.n, c.eps_bar, c.resolution)?,
        BarrierKind::Interior => match c.k {
            Some(k) => interior_barrier(&p, c.n, k, c.c0, c.resolution)?,
            None => interior_barrier_min_k(&p, c.n, c.c0, c.resolution)?,
        },
        BarrierKind::Density => density_barrier(&p, c.n, c.m_level, c.resolution)?,
    };
    write_profile(&dir, "barrier.csv", &prof)?;
    config::write_manifest(&dir, "barrier", &c)?;
    let cert = prof.certificate.as_ref();
    let passed = cert.is_none_or(|c| c.passed());
    println!(
        "barrier {:?} at gamma {}: certificate {} (min margin {:.3e})",
        c.kind,
        c.gamma,
        if passed { "passed" } else { "FAILED" },
        cert.map_or(f64::NAN, |c| c.min_margin())
    );
    if passed {
        Ok(())
    } else {
        Err(CliError::Numerical("barrier certificate failed".into()))
    }
}

fn solve(a: SolveArgs) -> Result<(), CliError> {
    let mut c: SolveConfig = config::load(a.common.config.as_deref(), "solve")?;
    if let Some(v) = a.gamma {
        c.gamma = v;
    }
    if let Some(v) = a.grid {
        c.grid = v;
    }
    if let Some(v) = a.bc {
        c.bc = v;
    }
    apply_solver(&mut c.solver, &a.solver)?;
    c.validate()?;
    let dir = out_dir(&a.common)?;
    let p = params(c.gamma)?;
    let grid = c.grid.grid()?;
    let data = c.bc.0.data(&grid, &p)?;
    let (u, report) = minimize_j(&grid, &p, &data, &c.solver)?;
    let energy = eval_j(&u, &p, &IndicatorField::full(grid))?;
    let mut w = create(&dir, "field.txt")?;
    write_field(&u, &mut w)?;
    w.flush()?;
    write_json(&dir, "report.json", &report)?;
    write_json(&dir, "energy.json", &energy.record(c.gamma, grid.h))?;
    config::write_manifest(&dir, "solve", &c)?;
    println!(
        "solve: gamma {} on {}, energy {:.8}, {} sweeps, dead fraction {:.4}, converged {}",
        c.gamma, c.grid, report.final_energy, report.sweeps_used, report.dead_fraction, report.converged
    );
    if report.converged {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("solver did not converge within {} sweeps", c.solver.max_sweeps)))
    }
}

fn density(a: DensityArgs) -> Result<(), CliError> {
    let mut c: DensityConfig = config::load(a.common.config.as_deref(), "density")?;
    if let Some(v) = a.field {
        c.field = v;
    }
    if a.node.is_some() {
        c.node = a.node;
    }
    if let Some(v) = a.near {
        c.near = v;
    }
    if let Some(v) = a.radii {
        c.radii = Some(v.0);
    }
    if let Some(v) = a.count {
        c.count = v;
    }
    c.validate()?;
    let dir = out_dir(&a.common)?;
    let file = File::open(&c.field).map_err(|e| CliError::Config(format!("{}: {e}", c.field.display())))?;
    let u: ScalarField<f64> = read_field(BufReader::new(file))?;
    let x0 = match c.node {
        Some(k) => k,
        None => nearest_free_boundary_node(&u, c.near)
            .ok_or_else(|| CliError::Numerical("field has no free boundary node".into()))?,
    };
    let radii = match &c.radii {
        Some(r) => r.clone(),
        None => standard_radii(&u, x0, c.count),
    };
    if radii.is_empty() {
        return Err(CliError::Config(format!("node {x0} is too close to the box for radii of at least 8h")));
    }
    let d = density_scan(&u, x0, &radii)?;
    write_json(&dir, "density.json", &json!({ "node": x0, "min_ratio": d.min_ratio(), "max_ratio": d.max_ratio(), "scan": d }))?;
    config::write_manifest(&dir, "density", &c)?;
    println!(
        "density at node {x0} ({:.4}, {:.4}): ratios in [{:.4}, {:.4}] over {} radii",
        d.center[0],
        d.center[1],
        d.min_ratio(),
        d.max_ratio(),
        radii.len()
    );
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), CliError> {
    let mut c: SweepConfig = config::load(a.common.config.as_deref(), "sweep")?;
    if let Some(v) = a.gammas {
        c.gammas = v.0;
    }
    if let Some(v) = a.problem {
        c.problem = v;
    }
    if let Some(v) = a.grid {
        c.grid = v;
    }
    if a.density_floor.is_some() {
        c.density_floor = a.density_floor;
    }
    apply_solver(&mut c.solver, &a.solver)?;
    c.validate()?;
    let dir = out_dir(&a.common)?;
    let problem = c.problem()?;
    let outcomes = gamma_sweep(&problem, &c.gammas, &c.solver)?;
    let records: Vec<SweepRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    let mut w = create(&dir, "sweep.csv")?;
    write_sweep_csv(&records, &mut w)?;
    w.flush()?;
    write_json(&dir, "records.json", &records)?;
    for o in &outcomes {
        let mut w = create(&dir, &format!("field-gamma-{}.txt", o.record.gamma))?;
        write_field(&o.field, &mut w)?;
        w.flush()?;
    }
    if problem.grid.dim == 2 {
        let curves: Vec<svg::Curve> = outcomes
            .iter()
            .map(|o| svg::Curve {
                label: format!("gamma = {}", o.record.gamma),
                segments: svg::free_boundary_segments(&o.field),
            })
            .collect();
        let refs: Vec<Vec<[f64; 2]>> = problem
            .template
            .reference(&problem.grid)
            .map(|r| vec![vec![r.interface[0], *r.interface.last().unwrap()]])
            .unwrap_or_default();
        let title = format!("free boundaries, {:?} problem, h = {}", c.problem, problem.grid.h);
        fs::write(dir.join("overlay.svg"), svg::overlay(&title, &curves, &refs))?;
    }
    config::write_manifest(&dir, "sweep", &c)?;
    for r in &records {
        let floor = match c.density_floor {
            Some(f) if !r.density_min.is_nan() => {
                if r.density_min >= f {
                    format!(", density floor {f} met")
                } else {
                    format!(", density floor {f} NOT met")
                }
            }
            _ => String::new(),
        };
        println!(
            "gamma {}: J = {:.6}, hausdorff {:.5}, density [{:.4}, {:.4}]{floor}",
            r.gamma, r.energy.total, r.fb_hausdorff_to_reference, r.density_min, r.density_max
        );
    }
    println!("sweep: {} rows written to {}", records.len(), dir.join("sweep.csv").display());
    Ok(())
}

fn recovery(a: RecoveryArgs) -> Result<(), CliError> {
    let mut c: RecoveryCmdConfig = config::load(a.common.config.as_deref(), "recovery")?;
    if let Some(v) = a.gammas {
        c.gammas = v.0;
    }
    if let Some(v) = a.grid {
        c.grid = v;
    }
    if let Some(v) = &a.set {
        c.set = if v == "disk" { RecoverySet::Disk } else { RecoverySet::HalfSquare };
    }
    if let Some(v) = a.eps {
        c.eps = v;
    }
    if let Some(v) = a.smoothing {
        c.smoothing = v;
    }
    c.validate()?;
    let dir = out_dir(&a.common)?;
    let grid: Grid<f64> = c.grid.grid()?;
    let e = match c.set {
        RecoverySet::HalfSquare => IndicatorField::from_fn(grid, |x| x[0] <= 0.5),
        RecoverySet::Disk => IndicatorField::from_fn(grid, |x| (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) <= 0.0625),
    };
    let zero = ScalarField::zeros(grid);
    let cfg = RecoveryConfig { eps: c.eps, gamma_list: c.gammas.clone(), smoothing: c.smoothing.clone() };
    let fields = c
        .gammas
        .iter()
        .map(|&g| recovery_sequence(&zero, &e, &cfg, &params(g)?).map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let mut w = create(&dir, "recovery.csv")?;
    writeln!(w, "gamma,h,layer,bulk,total,nodal,collar")?;
    for f in &fields {
        let en = f.energy()?;
        writeln!(w, "{},{},{},{},{},{},{}", f.params.gamma, grid.h, en.layer, en.bulk, en.total, en.nodal, f.collar)?;
        println!("gamma {}: J = {:.6} (nodal {:.6})", f.params.gamma, en.total, en.nodal);
    }
    w.flush()?;
    let lsc = lsc_check(&fields, |f| f.energy().map(|e| e.total), (&zero, &e))?;
    write_json(&dir, "lsc.json", &lsc)?;
    config::write_manifest(&dir, "recovery", &c)?;
    println!(
        "limit energy F = {:.6}, tail margin {:.4e}: {}",
        lsc.limit_energy,
        lsc.margin,
        if lsc.pass { "pass" } else { "FAIL" }
    );
    Ok(())
}

#[derive(Serialize)]
struct Row {
    identity: &'static str,
    gamma: f64,
    value: f64,
    tolerance: f64,
    pass: bool,
}

/// Normalization of the potential, equipartition of the sampled exact profile
/// under the nodal energy, and the power law `J(φ, (0, r)) ∝ r^{1-αγ}` of the
/// resolved profile energy.
fn identities() -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for g in [0.1, 0.5, 1.0, 1.5, 1.9, 1.99] {
        let v = (params(g)?.normalization_integral() - 1.0).abs();
        rows.push(Row { identity: "normalization", gamma: g, value: v, tolerance: 1e-10, pass: v <= 1e-10 });
    }
    for g in [1.0, 1.5, 1.9] {
        let p = params(g)?;
        let grid = Grid::unit_interval(1000)?;
        let u = ScalarField::from_fn(grid, |x| exact_phi(&p, x[0]))?;
        let e = eval_j(&u, &p, &IndicatorField::full(grid))?;
        let v = (e.dirichlet - e.potential).abs() / e.total;
        rows.push(Row { identity: "equipartition", gamma: g, value: v, tolerance: 0.02, pass: v <= 0.02 });
    }
    for g in [0.5, 1.0, 1.5, 1.9, 1.95] {
        let p = params(g)?;
        let rs: Vec<f64> = (0..8).map(|i| 0.125 * 2f64.powf(i as f64 * 3.0 / 7.0)).collect();
        let js = rs.iter().map(|&r| profile_energy(&p, r)).collect::<Result<Vec<_>, _>>()?;
        let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = js.iter().map(|j| j.ln()).collect();
        let slope = alt_phillips::lab::ls_slope(&xs, &ys);
        let alpha = 2.0 / (2.0 + g);
        let v = (slope - (1.0 - alpha * g)).abs();
        rows.push(Row { identity: "scaling", gamma: g, value: v, tolerance: 1e-3, pass: v <= 1e-3 });
    }
    Ok(rows)
}

fn check(a: CheckArgs) -> Result<(), CliError> {
    let mut c: CheckConfig = config::load(a.common.config.as_deref(), "check")?;
    if let Some(v) = a.suite {
        c.suite = v;
    }
    c.validate()?;
    let rows = identities()?;
    println!("{:<15} {:>6} {:>12} {:>10}  result", "identity", "gamma", "deviation", "tol");
    for r in &rows {
        println!(
            "{:<15} {:>6} {:>12.3e} {:>10.1e}  {}",
            r.identity,
            r.gamma,
            r.value,
            r.tolerance,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    println!("{} of {} rows pass", rows.len() - failed, rows.len());
    if a.common.out.is_some() {
        let dir = out_dir(&a.common)?;
        write_json(&dir, "check.json", &rows)?;
        config::write_manifest(&dir, "check", &c)?;
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("{failed} identity rows failed")))
    }
}
