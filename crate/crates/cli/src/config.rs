//! Command configurations. Every command reads an optional JSON file whose keys
//! mirror its flags; flags given on the command line override file values.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use alt_phillips::field::Grid;
use alt_phillips::lab::{BoundaryTemplate, SweepProblem};
use alt_phillips::solver::{Ordering, SeedProfile, SolverOptions};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `1d:N` or `2d:N`: `N` cells per axis on the unit interval or square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridSpec {
    pub dim: usize,
    pub cells: usize,
}

impl GridSpec {
    pub fn grid(&self) -> Result<Grid<f64>, CliError> {
        let g = if self.dim == 1 { Grid::unit_interval(self.cells) } else { Grid::unit_square(self.cells) };
        g.map_err(CliError::from)
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (dim, n) = s.split_once(':').ok_or_else(|| format!("grid '{s}' is not of the form 1d:N or 2d:N"))?;
        let dim = match dim {
            "1d" => 1,
            "2d" => 2,
            _ => return Err(format!("unknown grid dimension '{dim}'")),
        };
        let cells: usize = n.parse().map_err(|_| format!("bad cell count '{n}'"))?;
        if cells < 2 {
            return Err(format!("grid needs at least 2 cells, got {cells}"));
        }
        Ok(Self { dim, cells })
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}d:{}", self.dim, self.cells)
    }
}

impl TryFrom<String> for GridSpec {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<GridSpec> for String {
    fn from(g: GridSpec) -> String {
        g.to_string()
    }
}

/// Boundary template by name: `zero`, `constant:V`, `phi-right`, `planar:X`, `chord:PSI0:SPLIT`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BcSpec(pub BoundaryTemplate);

impl FromStr for BcSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let nums = parts
            .map(|x| x.parse::<f64>().map_err(|_| format!("bad number '{x}' in boundary spec '{s}'")))
            .collect::<Result<Vec<_>, _>>()?;
        let arity = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(format!("boundary '{name}' takes {k} parameter(s), got {}", nums.len()))
            }
        };
        let t = match name {
            "zero" => {
                arity(0)?;
                BoundaryTemplate::Zero
            }
            "constant" => {
                arity(1)?;
                BoundaryTemplate::Constant { value: nums[0] }
            }
            "phi-right" => {
                arity(0)?;
                BoundaryTemplate::PhiRight
            }
            "planar" => {
                arity(1)?;
                BoundaryTemplate::Planar { x_fb: nums[0] }
            }
            "chord" => {
                arity(2)?;
                BoundaryTemplate::Chord { psi0: nums[0], split: nums[1] }
            }
            _ => return Err(format!("unknown boundary template '{name}'")),
        };
        Ok(Self(t))
    }
}

impl fmt::Display for BcSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            BoundaryTemplate::Zero => write!(f, "zero"),
            BoundaryTemplate::Constant { value } => write!(f, "constant:{value}"),
            BoundaryTemplate::PhiRight => write!(f, "phi-right"),
            BoundaryTemplate::Planar { x_fb } => write!(f, "planar:{x_fb}"),
            BoundaryTemplate::Chord { psi0, split } => write!(f, "chord:{psi0}:{split}"),
        }
    }
}

impl TryFrom<String> for BcSpec {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<BcSpec> for String {
    fn from(b: BcSpec) -> String {
        b.to_string()
    }
}

/// Comma separated reals, e.g. `1.0,1.5,1.9`.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad number '{x}'")))
        .collect()
}

/// A list flag value; a newtype so that the flag takes one comma separated argument.
#[derive(Clone, Debug, PartialEq)]
pub struct Reals(pub Vec<f64>);

impl FromStr for Reals {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_list(s).map(Reals)
    }
}

pub fn parse_point(s: &str) -> Result<[f64; 2], String> {
    match parse_list(s)?.as_slice() {
        [x] => Ok([*x, 0.0]),
        [x, y] => Ok([*x, *y]),
        _ => Err(format!("point '{s}' needs one or two coordinates")),
    }
}

fn check_gamma(g: f64) -> Result<(), CliError> {
    if g > 0.0 && g < 2.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("gamma = {g} outside (0, 2)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Exact,
    Generator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub gamma: f64,
    pub kind: ProfileKind,
    pub t_max: f64,
    pub resolution: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self { gamma: 1.0, kind: ProfileKind::Exact, t_max: 1.0, resolution: 1e-4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierKind {
    Growth,
    Interior,
    Density,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierConfig {
    pub gamma: f64,
    pub kind: BarrierKind,
    /// Space dimension entering the constants.
    pub n: usize,
    pub eps_bar: f64,
    /// Interior barrier amplitude; the smallest certifying power of two when absent.
    pub k: Option<f64>,
    pub c0: f64,
    pub m_level: f64,
    pub resolution: f64,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self {
            gamma: 1.9,
            kind: BarrierKind::Growth,
            n: 2,
            eps_bar: 1e-4,
            k: None,
            c0: 1.0,
            m_level: 2.0,
            resolution: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub gamma: f64,
    pub grid: GridSpec,
    pub bc: BcSpec,
    pub solver: SolverOptions<f64>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            grid: GridSpec { dim: 1, cells: 1000 },
            bc: BcSpec(BoundaryTemplate::PhiRight),
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    pub field: PathBuf,
    /// Center node index; when absent the free boundary node nearest `near` is used.
    pub node: Option<usize>,
    pub near: [f64; 2],
    /// Explicit radii; when absent `count` radii in `[8h, 1/4]` are used.
    pub radii: Option<Vec<f64>>,
    pub count: usize,
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self { field: PathBuf::new(), node: None, near: [0.5, 0.5], radii: None, count: 8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Chord,
    Planar,
    PhiRight,
}

impl FromStr for ProblemKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "chord" => Ok(Self::Chord),
            "planar" => Ok(Self::Planar),
            "phi-right" => Ok(Self::PhiRight),
            _ => Err(format!("unknown problem '{s}' (chord, planar, phi-right)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub gammas: Vec<f64>,
    pub problem: ProblemKind,
    pub grid: GridSpec,
    pub solver: SolverOptions<f64>,
    /// Lower bound reported against the density ratios of every output.
    pub density_floor: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gammas: vec![1.0, 1.5, 1.8, 1.9, 1.95],
            problem: ProblemKind::Chord,
            grid: GridSpec { dim: 2, cells: 256 },
            solver: SolverOptions { homotopy_stages: 17, cascade_levels: 2, ..Default::default() },
            density_floor: Some(0.2285),
        }
    }
}

impl SweepConfig {
    pub fn problem(&self) -> Result<SweepProblem, CliError> {
        let grid = self.grid.grid()?;
        let dim2 = self.grid.dim == 2;
        let window = dim2.then_some([[0.0, 0.125], [1.0, 0.875]]);
        let template = match self.problem {
            ProblemKind::Chord => BoundaryTemplate::Chord { psi0: 1.0, split: 0.5 },
            ProblemKind::Planar => BoundaryTemplate::Planar { x_fb: 0.5 },
            ProblemKind::PhiRight => BoundaryTemplate::PhiRight,
        };
        if self.problem != ProblemKind::PhiRight && !dim2 {
            return Err(CliError::Config(format!("problem {:?} needs a 2d grid", self.problem)));
        }
        Ok(SweepProblem { template, grid, window, density_center: [0.5, 0.5], density_radii: 8 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoverySet {
    HalfSquare,
    Disk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryCmdConfig {
    pub gammas: Vec<f64>,
    pub grid: GridSpec,
    pub set: RecoverySet,
    pub eps: f64,
    pub smoothing: String,
}

impl Default for RecoveryCmdConfig {
    fn default() -> Self {
        Self {
            gammas: vec![1.5, 1.8, 1.9, 1.95],
            grid: GridSpec { dim: 2, cells: 512 },
            set: RecoverySet::HalfSquare,
            eps: 1e-3,
            smoothing: "erode-one-cell".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub suite: String,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { suite: "identities".into() }
    }
}

/// Validation shared by all commands.
pub trait Validate {
    fn validate(&self) -> Result<(), CliError>;
}

impl Validate for ProfileConfig {
    fn validate(&self) -> Result<(), CliError> {
        check_gamma(self.gamma)?;
        if !(self.t_max > 0.0 && self.resolution > 0.0 && self.resolution < self.t_max) {
            return Err(CliError::Config("need 0 < resolution < t-max".into()));
        }
        Ok(())
    }
}

impl Validate for BarrierConfig {
    fn validate(&self) -> Result<(), CliError> {
        check_gamma(self.gamma)?;
        if !(self.resolution > 0.0) {
            return Err(CliError::Config("resolution must be positive".into()));
        }
        Ok(())
    }
}

impl Validate for SolveConfig {
    fn validate(&self) -> Result<(), CliError> {
        check_gamma(self.gamma)?;
        self.solver.validate().map_err(CliError::from)
    }
}

impl Validate for DensityConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.field.as_os_str().is_empty() {
            return Err(CliError::Config("density needs --field".into()));
        }
        if self.radii.is_none() && self.count == 0 {
            return Err(CliError::Config("radius count must be positive".into()));
        }
        Ok(())
    }
}

impl Validate for SweepConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.gammas.is_empty() {
            return Err(CliError::Config("empty gamma list".into()));
        }
        self.gammas.iter().try_for_each(|&g| check_gamma(g))?;
        self.solver.validate().map_err(CliError::from)?;
        self.problem().map(|_| ())
    }
}

impl Validate for RecoveryCmdConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.gammas.is_empty() {
            return Err(CliError::Config("empty gamma list".into()));
        }
        self.gammas.iter().try_for_each(|&g| check_gamma(g))?;
        if self.grid.dim != 2 {
            return Err(CliError::Config("recovery runs on a 2d grid".into()));
        }
        Ok(())
    }
}

impl Validate for CheckConfig {
    fn validate(&self) -> Result<(), CliError> {
        match self.suite.as_str() {
            "identities" => Ok(()),
            other => Err(CliError::Config(format!("unknown suite '{other}'"))),
        }
    }
}

/// Reads a configuration file: either a bare configuration or a manifest
/// written by an earlier run of the same command.
pub fn load<C: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> Result<C, CliError> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let body = match value.get("manifest_version") {
        Some(_) => {
            let cmd = value.get("command").and_then(|c| c.as_str()).unwrap_or_default();
            if cmd != command {
                return Err(CliError::Config(format!("manifest is for '{cmd}', not '{command}'")));
            }
            value.get("config").cloned().unwrap_or_default()
        }
        None => value,
    };
    serde_json::from_value(body).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
pub struct Manifest<'a, C> {
    pub manifest_version: u32,
    pub command: &'a str,
    pub program_version: &'a str,
    pub config: &'a C,
}

pub fn write_manifest<C: Serialize>(dir: &Path, command: &str, config: &C) -> Result<(), CliError> {
    let m = Manifest { manifest_version: 1, command, program_version: env!("CARGO_PKG_VERSION"), config };
    let text = serde_json::to_string_pretty(&m).map_err(|e| CliError::Numerical(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

pub fn set_ordering(opts: &mut SolverOptions<f64>, s: &str) -> Result<(), CliError> {
    opts.ordering = match s {
        "lexicographic" => Ordering::Lexicographic,
        "red-black" => Ordering::RedBlack,
        _ => return Err(CliError::Config(format!("unknown ordering '{s}'"))),
    };
    Ok(())
}

pub fn set_seed(opts: &mut SolverOptions<f64>, s: &str) -> Result<(), CliError> {
    opts.seed_profile = match s {
        "flat" => SeedProfile::Flat,
        "distance-profile" => SeedProfile::DistanceProfile,
        _ => return Err(CliError::Config(format!("unknown seed '{s}'"))),
    };
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_parse_and_print() {
        for s in ["1d:1000", "2d:256"] {
            assert_eq!(s.parse::<GridSpec>().unwrap().to_string(), s);
        }
        for s in ["3d:10", "2d", "2d:x", "1d:1"] {
            assert!(s.parse::<GridSpec>().is_err(), "{s}");
        }
        for s in ["zero", "constant:0.3", "phi-right", "planar:0.5", "chord:1:0.5"] {
            assert_eq!(s.parse::<BcSpec>().unwrap().to_string(), s);
        }
        for s in ["planar", "chord:1", "wave:2", "constant:a"] {
            assert!(s.parse::<BcSpec>().is_err(), "{s}");
        }
        assert_eq!(parse_list("1.0, 1.5,1.9").unwrap(), vec![1.0, 1.5, 1.9]);
        assert_eq!(parse_point("0.25").unwrap(), [0.25, 0.0]);
        assert!(parse_point("1,2,3").is_err());
    }

    #[test]
    fn configs_round_trip_through_json() {
        let mut c = SweepConfig::default();
        c.gammas = vec![0.1 + 0.2, 1.0 / 3.0, 1.95];
        c.solver.sor_omega = Some(1.7);
        let back: SweepConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        let s = SolveConfig::default();
        let back: SolveConfig = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<SolveConfig>(r#"{"gama": 1.0}"#).is_err());
        let partial: SolveConfig = serde_json::from_str(r#"{"gamma": 1.5, "bc": "planar:0.25"}"#).unwrap();
        assert_eq!(partial.gamma, 1.5);
        assert_eq!(partial.bc.0, BoundaryTemplate::Planar { x_fb: 0.25 });
        assert_eq!(partial.grid, SolveConfig::default().grid);
    }
}
