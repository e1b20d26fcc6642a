//! Run configuration: a TOML file with `[plant]`, `[exosystem]`,
//! `[regulator]` and `[simulation]` tables. Every key is optional and an
//! empty file yields the heat-exchanger scenario.
//!
//! ```toml
//! [plant]
//! n_grid = 2001
//! g = { linear = 0.4 }
//! b = { exp = { gamma = 1.0, bbar = 0.5 } }
//! bd = 0.2
//!
//! [regulator]
//! ly = []          # empty: search for a stabilizing gain
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use hxreg::nalgebra::{DMatrix, DVector, RowDVector};
use hxreg::{ExoSystem, PlantConfig, Profile, SpatialGrid};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "config error at line {line}, key `{}`: {}", self.key, self.message),
            None => write!(f, "config error, key `{}`: {}", self.key, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Spatial profile given by shape rather than by samples.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `c · z`
    Linear(f64),
    /// `gamma · exp(−bbar · z)`
    Exp { gamma: f64, bbar: f64 },
    Constant(f64),
    /// Two-column CSV `z,value` covering `[0, 1]`, linearly interpolated.
    Table(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    pub n_grid: usize,
    pub cfl: f64,
    pub g: ProfileSpec,
    pub b: ProfileSpec,
    pub bd: f64,
    pub z0: f64,
    pub z1: f64,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            n_grid: 2001,
            cfl: 1.0,
            g: ProfileSpec::Linear(0.4),
            b: ProfileSpec::Exp { gamma: 1.0, bbar: 0.5 },
            bd: 0.2,
            z0: 1.0,
            z1: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExoSection {
    pub alpha: f64,
    pub upsilon: f64,
    pub s: Option<Vec<Vec<f64>>>,
    pub f: Option<Vec<f64>>,
    pub q: Option<Vec<f64>>,
    pub w0: Option<Vec<f64>>,
}

impl Default for ExoSection {
    fn default() -> Self {
        Self { alpha: 2.0, upsilon: 5.0, s: None, f: None, q: None, w0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegulatorSection {
    pub k1: f64,
    /// Output-injection gain; empty requests the automatic search.
    pub ly: Vec<f64>,
    pub r_w0: Vec<f64>,
}

impl Default for RegulatorSection {
    fn default() -> Self {
        Self { k1: 0.0, ly: vec![0.1, 1.0], r_w0: vec![0.1, 4.6] }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub t_final: f64,
    pub transient: f64,
    pub snapshots: Vec<f64>,
    pub output: PathBuf,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self { t_final: 20.0, transient: 15.0, snapshots: Vec::new(), output: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub plant: PlantSection,
    pub exosystem: ExoSection,
    pub regulator: RegulatorSection,
    pub simulation: SimulationSection,
    /// Directory that relative table paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        key: "<file>".into(),
        line: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base)
}

pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| from_toml(text, &e))?;
    cfg.base_dir = base_dir.to_path_buf();
    cfg.validate().map_err(|(section, key, message)| ConfigError {
        line: locate(text, section, key),
        key: format!("{section}.{key}"),
        message,
    })?;
    Ok(cfg)
}

type Invalid = (&'static str, &'static str, String);

fn invalid(section: &'static str, key: &'static str, message: impl Into<String>) -> Invalid {
    (section, key, message.into())
}

impl RunConfig {
    fn validate(&self) -> Result<(), Invalid> {
        let p = &self.plant;
        if p.n_grid < 2 {
            return Err(invalid("plant", "n_grid", format!("need at least 2 grid points, got {}", p.n_grid)));
        }
        if !(p.cfl > 0.0 && p.cfl <= 1.0) {
            return Err(invalid("plant", "cfl", format!("{} violates 0 < cfl <= 1", p.cfl)));
        }
        for (key, v) in [("z0", p.z0), ("z1", p.z1)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(invalid("plant", key, format!("{v} outside (0, 1]")));
            }
        }
        if !p.bd.is_finite() {
            return Err(invalid("plant", "bd", "not finite"));
        }
        let grid = SpatialGrid::new(p.n_grid).map_err(|e| invalid("plant", "n_grid", e.to_string()))?;
        self.profile(&p.g, grid).map_err(|m| invalid("plant", "g", m))?;
        let b = self.profile(&p.b, grid).map_err(|m| invalid("plant", "b", m))?;
        if b.values().iter().any(|v| *v <= 0.0) {
            return Err(invalid("plant", "b", "actuator profile must be positive on [0, 1]"));
        }

        let exo = self.exosystem().map_err(|(key, m)| invalid("exosystem", key, m))?;
        let n = exo.dim();
        let r = &self.regulator;
        if !r.k1.is_finite() {
            return Err(invalid("regulator", "k1", "not finite"));
        }
        if !r.ly.is_empty() && r.ly.len() != n {
            return Err(invalid("regulator", "ly", format!("{} entries for a {n}-dimensional exosystem", r.ly.len())));
        }
        if r.r_w0.len() != n {
            return Err(invalid("regulator", "r_w0", format!("{} entries for a {n}-dimensional exosystem", r.r_w0.len())));
        }
        if r.ly.iter().chain(&r.r_w0).any(|v| !v.is_finite()) {
            return Err(invalid("regulator", "ly", "entries must be finite"));
        }

        let s = &self.simulation;
        if !(s.t_final > 0.0 && s.t_final.is_finite()) {
            return Err(invalid("simulation", "t_final", format!("{} must be positive", s.t_final)));
        }
        if !(s.transient >= 0.0 && s.transient < s.t_final) {
            return Err(invalid("simulation", "transient", format!("{} must lie in [0, t_final)", s.transient)));
        }
        if let Some(t) = s.snapshots.iter().find(|t| !(**t >= 0.0 && **t <= s.t_final)) {
            return Err(invalid("simulation", "snapshots", format!("time {t} outside [0, t_final]")));
        }
        Ok(())
    }

    fn profile(&self, spec: &ProfileSpec, grid: SpatialGrid) -> Result<Profile, String> {
        let built = match spec {
            ProfileSpec::Linear(c) => Profile::from_fn(grid, |z| c * z),
            ProfileSpec::Exp { gamma, bbar } => Profile::from_fn(grid, |z| gamma * (-bbar * z).exp()),
            ProfileSpec::Constant(c) => Profile::constant(grid, *c),
            ProfileSpec::Table(path) => return self.table(path, grid),
        };
        built.map_err(|e| e.to_string())
    }

    fn table(&self, path: &Path, grid: SpatialGrid) -> Result<Profile, String> {
        let full = if path.is_absolute() { path.to_path_buf() } else { self.base_dir.join(path) };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(&full)
            .map_err(|e| format!("cannot open table {}: {e}", full.display()))?;
        let mut rows: Vec<(f64, f64)> = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| format!("{}: {e}", full.display()))?;
            let parsed = (rec.get(0).map(str::parse::<f64>), rec.get(1).map(str::parse::<f64>));
            match parsed {
                (Some(Ok(z)), Some(Ok(v))) => rows.push((z, v)),
                // A non-numeric first row is a header.
                _ if i == 0 => {}
                _ => return Err(format!("{}: row {} is not `z,value`", full.display(), i + 1)),
            }
        }
        if rows.len() < 2 || rows.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(format!("{}: need at least two rows with increasing z", full.display()));
        }
        let (first, last) = (rows[0].0, rows[rows.len() - 1].0);
        if first > 1e-12 || last < 1.0 - 1e-12 {
            return Err(format!("{}: z range [{first}, {last}] does not cover [0, 1]", full.display()));
        }
        Profile::from_fn(grid, |z| {
            let k = rows.partition_point(|r| r.0 <= z).clamp(1, rows.len() - 1);
            let ((za, va), (zb, vb)) = (rows[k - 1], rows[k]);
            va + (vb - va) * (z - za) / (zb - za)
        })
        .map_err(|e| e.to_string())
    }

    /// Plant on `n_grid` points, or on `grid_override` when given.
    pub fn plant_config(&self, grid_override: Option<usize>) -> hxreg::Result<PlantConfig> {
        let p = &self.plant;
        let grid = SpatialGrid::new(grid_override.unwrap_or(p.n_grid))?;
        let profile = |spec| self.profile(spec, grid).map_err(hxreg::Error::Config);
        PlantConfig::new(profile(&p.g)?, profile(&p.b)?, Profile::constant(grid, p.bd)?, p.z1, p.z0, p.cfl)
    }

    pub fn exosystem(&self) -> Result<ExoSystem, (&'static str, String)> {
        let e = &self.exosystem;
        let n = e.s.as_ref().map_or(2, Vec::len);
        for (key, v) in [("alpha", e.alpha), ("upsilon", e.upsilon)] {
            if !v.is_finite() {
                return Err((key, "not finite".into()));
            }
        }
        let s = match &e.s {
            None => DMatrix::from_row_slice(2, 2, &[0.0, e.alpha, -e.alpha, 0.0]),
            Some(rows) => {
                if n == 0 || rows.iter().any(|r| r.len() != n) {
                    return Err(("s", "must be a non-empty square matrix".into()));
                }
                DMatrix::from_fn(n, n, |i, j| rows[i][j])
            }
        };
        let defaults_apply = n == 2;
        let vector = |key: &'static str, v: &Option<Vec<f64>>, default: [f64; 2]| -> Result<Vec<f64>, (&'static str, String)> {
            match v {
                Some(v) if v.len() == n => Ok(v.clone()),
                Some(v) => Err((key, format!("{} entries, expected {n}", v.len()))),
                None if defaults_apply => Ok(default.to_vec()),
                None => Err((key, format!("required when s is {n}×{n}"))),
            }
        };
        let f = vector("f", &e.f, [0.0, 1.0])?;
        let q = vector("q", &e.q, [1.0, 0.0])?;
        let w0 = vector("w0", &e.w0, [0.0, e.upsilon])?;
        ExoSystem::new(s, RowDVector::from_vec(f), RowDVector::from_vec(q), DVector::from_vec(w0))
            .map_err(|err| (if e.s.is_some() { "s" } else { "alpha" }, err.to_string()))
    }

    pub fn ly_candidate(&self) -> Option<DVector<f64>> {
        (!self.regulator.ly.is_empty()).then(|| DVector::from_column_slice(&self.regulator.ly))
    }
}

/// Line of `key = …` inside `[section]`, 1-based.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let Some((lhs, _)) = line.split_once('=') else { continue };
        let lhs = lhs.trim();
        let dotted = format!("{section}.{key}");
        if (current == section && lhs == key) || (current.is_empty() && lhs == dotted) {
            return Some(i + 1);
        }
    }
    None
}

fn from_toml(text: &str, err: &toml::de::Error) -> ConfigError {
    let line = err.span().map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1);
    let message = err.message().to_string();
    let key = message
        .split('`')
        .nth(1)
        .filter(|_| message.starts_with("unknown field"))
        .map(str::to_string)
        .or_else(|| {
            let l = text.lines().nth(line? - 1)?;
            l.split_once('=').map(|(k, _)| k.trim().to_string())
        })
        .unwrap_or_else(|| "<syntax>".into());
    ConfigError { key, line, message }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config_str(text, Path::new("."))
    }

    #[test]
    fn empty_file_is_the_default_scenario() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg, RunConfig { base_dir: PathBuf::from("."), ..RunConfig::default() });
        let plant = cfg.plant_config(None).unwrap();
        let reference = PlantConfig::heat_exchanger(2001).unwrap();
        assert_eq!(plant.g(), reference.g());
        assert_eq!(plant.b(), reference.b());
        assert_eq!(plant.b_d(), reference.b_d());
        assert_eq!((plant.z0(), plant.z1(), plant.cfl()), (1.0, 0.5, 1.0));
        let exo = cfg.exosystem().unwrap();
        assert_eq!(exo.s(), ExoSystem::harmonic(2.0, 5.0).unwrap().s());
        assert_eq!(exo.w0().as_slice(), &[0.0, 5.0]);
        assert_eq!(cfg.ly_candidate().unwrap().as_slice(), &[0.1, 1.0]);
    }

    #[test]
    fn zero_frequency_is_valid() {
        let cfg = parse("[exosystem]\nalpha = 0\n").unwrap();
        assert_eq!(cfg.exosystem().unwrap().s(), &DMatrix::<f64>::zeros(2, 2));
    }

    #[test]
    fn cfl_violation_names_key_and_line() {
        let err = parse("# comment\n[plant]\nn_grid = 101\ncfl = 1.5\n").unwrap_err();
        assert_eq!(err.key, "plant.cfl");
        assert_eq!(err.line, Some(4));
        assert!(err.to_string().contains("cfl"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse("[plant]\nn_grid = 11\nspeed = 2\n").unwrap_err();
        assert_eq!(err.key, "speed");
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn type_mismatch_is_rejected() {
        let err = parse("[simulation]\nt_final = \"long\"\n").unwrap_err();
        assert_eq!(err.key, "t_final");
        assert_eq!(err.line, Some(2));
    }

    #[test]
    fn typed_profiles() {
        let cfg = parse("[plant]\nn_grid = 11\ng = { constant = -0.3 }\nb = { linear = 2.0 }\n");
        // b = 2z vanishes at the inlet
        assert_eq!(cfg.unwrap_err().key, "plant.b");
        let cfg = parse("[plant]\nn_grid = 11\ng = { constant = -0.3 }\nb = { exp = { gamma = 2.0, bbar = 0.0 } }\n").unwrap();
        let plant = cfg.plant_config(None).unwrap();
        assert!(plant.g().values().iter().all(|v| *v == -0.3));
        assert!(plant.b().values().iter().all(|v| *v == 2.0));
    }

    #[test]
    fn table_profile_from_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("g.csv"), "z,value\n0,0\n0.5,1\n1,0\n").unwrap();
        let cfg_path = dir.path().join("run.toml");
        std::fs::write(&cfg_path, "[plant]\nn_grid = 5\ng = { table = \"g.csv\" }\n").unwrap();
        let cfg = parse_config(&cfg_path).unwrap();
        let plant = cfg.plant_config(None).unwrap();
        assert_eq!(plant.g().values(), &[0.0, 0.5, 1.0, 0.5, 0.0]);

        std::fs::write(&cfg_path, "[plant]\ng = { table = \"missing.csv\" }\n").unwrap();
        let err = parse_config(&cfg_path).unwrap_err();
        assert_eq!((err.key.as_str(), err.line), ("plant.g", Some(2)));
    }

    #[test]
    fn exosystem_overrides() {
        let cfg = parse("[exosystem]\nq = [0, 0]\nf = [0, 0]\n").unwrap();
        let exo = cfg.exosystem().unwrap();
        assert_eq!(exo.f().amax() + exo.q().amax(), 0.0);

        let text = "[exosystem]\ns = [[0.0]]\nf = [1.0]\nq = [1.0]\nw0 = [2.0]\n[regulator]\nr_w0 = [0.0]\nly = []\n";
        assert_eq!(parse(text).unwrap().exosystem().unwrap().dim(), 1);
        let err = parse("[exosystem]\ns = [[0.0]]\nf = [1.0]\nq = [1.0]\nw0 = [2.0]\n").unwrap_err();
        assert_eq!(err.key, "regulator.ly");
        let err = parse("[exosystem]\ns = [[0.0, 1.0], [1.0, 0.0]]\n").unwrap_err();
        assert_eq!((err.key.as_str(), err.line), ("exosystem.s", Some(2)));
    }

    #[test]
    fn simulation_ranges() {
        assert_eq!(parse("[simulation]\nt_final = 10\n").unwrap_err().key, "simulation.transient");
        assert_eq!(parse("[simulation]\nsnapshots = [1, 30]\n").unwrap_err().key, "simulation.snapshots");
        assert_eq!(parse("simulation.t_final = -1\n").unwrap_err().line, Some(1));
    }
}
