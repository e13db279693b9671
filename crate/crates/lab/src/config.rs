//! Experiment configuration: TOML (or a previous run's `meta.json`), with `--set` overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Spectrum,
    Identities,
    LinearFlows,
    Stability,
    Scatter,
    Inverse,
    Norms,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Spectrum,
        Experiment::Identities,
        Experiment::LinearFlows,
        Experiment::Stability,
        Experiment::Scatter,
        Experiment::Inverse,
        Experiment::Norms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Identities => "identities",
            Experiment::LinearFlows => "linear-flows",
            Experiment::Stability => "stability",
            Experiment::Scatter => "scatter",
            Experiment::Inverse => "inverse",
            Experiment::Norms => "norms",
        }
    }

    pub fn parse(s: &str) -> Option<Experiment> {
        Experiment::ALL.into_iter().find(|e| e.name() == s)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A norm index in `[1, ∞]`; written as a number or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Index(pub f64);

impl Serialize for Index {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Index {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Index(v)),
            Raw::Int(v) => Ok(Index(v as f64)),
            Raw::Text(t) if t == "inf" || t == "infinity" => Ok(Index(f64::INFINITY)),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("norm index `{t}` is neither a number nor \"inf\""))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
    pub length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { n: 1024, length: 80.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dt: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub sponge: bool,
    pub sponge_fraction: f64,
    pub sponge_strength: f64,
    pub snapshot_stride: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            dt: 1e-3,
            t_final: 1.0,
            sponge: false,
            sponge_fraction: 0.1,
            sponge_strength: 5.0,
            snapshot_stride: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModulationSection {
    pub kappa: f64,
    pub newton_tol: f64,
}

impl Default for ModulationSection {
    fn default() -> Self {
        ModulationSection { kappa: 10.0, newton_tol: 1e-12 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormsSection {
    pub dyadic_base: f64,
    pub epsilon: f64,
    pub besov_s: f64,
    pub besov_p: Index,
    pub besov_q: Index,
}

impl Default for NormsSection {
    fn default() -> Self {
        NormsSection { dyadic_base: 2.0, epsilon: 0.1, besov_s: -1.0 / 6.0, besov_p: Index(2.0), besov_q: Index(f64::INFINITY) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolitonSection {
    pub c: f64,
    pub y: f64,
}

impl Default for SolitonSection {
    fn default() -> Self {
        SolitonSection { c: 1.0, y: 0.0 }
    }
}

/// Band-limited noise: `amplitude` is its L² norm; `orthogonal` projects it off `Q` and `Q′`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSection {
    pub amplitude: f64,
    pub kmax: f64,
    pub width: f64,
    /// Offset of the envelope center from the soliton.
    pub offset: f64,
    pub orthogonal: bool,
}

impl Default for PerturbationSection {
    fn default() -> Self {
        PerturbationSection { amplitude: 1e-3, kmax: 1.5, width: 2.0, offset: 0.0, orthogonal: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScatterSection {
    /// Final fraction of the run averaged into `z₀`.
    pub window: f64,
    /// Horizon `S` of the inverse construction.
    pub horizon: f64,
    pub c_inf: f64,
    pub shooting_tol: f64,
    pub bracket: f64,
    /// Smallness threshold δ on `‖v₀‖` in Ḃ^{−1/6,2}_∞.
    pub delta: f64,
    /// Run the forward scatter on the constructed `Ψ(0)` as well.
    pub round_trip: bool,
}

impl Default for ScatterSection {
    fn default() -> Self {
        ScatterSection { window: 0.25, horizon: 40.0, c_inf: 1.0, shooting_tol: 1e-6, bracket: 0.5, delta: 0.1, round_trip: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub modulation: ModulationSection,
    #[serde(default)]
    pub norms: NormsSection,
    #[serde(default)]
    pub soliton: SolitonSection,
    #[serde(default)]
    pub perturbation: PerturbationSection,
    #[serde(default)]
    pub scatter: ScatterSection,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Reads a TOML config, or a JSON file (a previous run's `meta.json` holds the config
/// under `"config"`).
pub fn load_table(path: &Path) -> Result<toml::Table, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|e| e == "json") {
        let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| err(format!("{}: {e}", path.display())))?;
        if let Some(inner) = v.get_mut("config") {
            v = inner.take();
        }
        toml::Table::try_from(v).map_err(|e| err(format!("{}: {e}", path.display())))
    } else {
        text.parse::<toml::Table>().map_err(|e| err(format!("{}: {e}", path.display())))
    }
}

/// Applies `a.b.c=value`; the value is parsed as a TOML literal, falling back to a string.
pub fn apply_set(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| err(format!("--set `{assignment}`: expected key=value")))?;
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(err(format!("--set `{assignment}`: empty key segment")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| err(format!("--set `{assignment}`: `{p}` is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    pub fn from_table(table: toml::Table) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| err(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, experiment: Option<&str>, sets: &[String]) -> Result<Self, ConfigError> {
        let mut table = load_table(path)?;
        if let Some(e) = experiment {
            table.insert("experiment".into(), toml::Value::String(e.into()));
        }
        for s in sets {
            apply_set(&mut table, s)?;
        }
        Self::from_table(table)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("runs").join(self.experiment.name()))
    }

    pub fn to_table(&self) -> toml::Table {
        toml::Table::try_from(self).expect("config serializes to a table")
    }

    /// Every numeric parameter is checked up front so no recipe starts on bad input.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let pos = |name: &str, v: f64| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(err(format!("{name} = {v} must be positive"))) };
        gkdv_core::GridSpec::new(self.grid.n, self.grid.length).map_err(|e| err(e.to_string()))?;
        pos("solver.dt", self.solver.dt)?;
        pos("solver.T", self.solver.t_final)?;
        if self.solver.dt > self.solver.t_final {
            return Err(err("solver.dt exceeds solver.T"));
        }
        if self.solver.snapshot_stride == 0 {
            return Err(err("solver.snapshot_stride must be ≥ 1"));
        }
        if !(self.solver.sponge_fraction > 0.0 && self.solver.sponge_fraction < 0.5) {
            return Err(err("solver.sponge_fraction must lie in (0, 0.5)"));
        }
        if !(self.solver.sponge_strength >= 0.0 && self.solver.sponge_strength.is_finite()) {
            return Err(err("solver.sponge_strength must be ≥ 0"));
        }
        if !(self.modulation.kappa >= 1.0 && self.modulation.kappa.is_finite()) {
            return Err(err("modulation.kappa must be ≥ 1"));
        }
        pos("modulation.newton_tol", self.modulation.newton_tol)?;
        if !(self.norms.dyadic_base > 1.0 && self.norms.dyadic_base.is_finite()) {
            return Err(err("norms.dyadic_base must exceed 1"));
        }
        if !(self.norms.epsilon > 0.0 && self.norms.epsilon <= 0.5) {
            return Err(err("norms.epsilon must lie in (0, 0.5]"));
        }
        if !self.norms.besov_s.is_finite() {
            return Err(err("norms.besov_s must be finite"));
        }
        for (n, v) in [("norms.besov_p", self.norms.besov_p.0), ("norms.besov_q", self.norms.besov_q.0)] {
            if v.is_nan() || v < 1.0 {
                return Err(err(format!("{n} = {v} must be ≥ 1 or \"inf\"")));
            }
        }
        pos("soliton.c", self.soliton.c)?;
        if !self.soliton.y.is_finite() {
            return Err(err("soliton.y must be finite"));
        }
        if !(self.perturbation.amplitude >= 0.0 && self.perturbation.amplitude.is_finite()) {
            return Err(err("perturbation.amplitude must be ≥ 0"));
        }
        pos("perturbation.kmax", self.perturbation.kmax)?;
        pos("perturbation.width", self.perturbation.width)?;
        if !(self.scatter.window > 0.0 && self.scatter.window <= 1.0) {
            return Err(err("scatter.window must lie in (0, 1]"));
        }
        pos("scatter.horizon", self.scatter.horizon)?;
        pos("scatter.c_inf", self.scatter.c_inf)?;
        pos("scatter.shooting_tol", self.scatter.shooting_tol)?;
        pos("scatter.bracket", self.scatter.bracket)?;
        pos("scatter.delta", self.scatter.delta)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> toml::Table {
        text.parse().unwrap()
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_table(table("experiment = \"spectrum\"")).unwrap();
        assert_eq!(cfg.grid, GridSection::default());
        assert_eq!(cfg.output_dir(), PathBuf::from("runs/spectrum"));
        assert!(cfg.norms.besov_q.0.is_infinite());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::from_table(table("experiment = \"spectrum\"\ncolour = 1")).is_err());
        assert!(ExperimentConfig::from_table(table("experiment = \"spectrum\"\n[grid]\nnn = 3")).is_err());
        assert!(ExperimentConfig::from_table(table("experiment = \"nope\"")).is_err());
    }

    #[test]
    fn validation_runs_before_anything_else() {
        let e = ExperimentConfig::from_table(table("experiment = \"stability\"\n[grid]\nn = 1000")).unwrap_err();
        assert!(e.0.contains("power of two"), "{e}");
        assert!(ExperimentConfig::from_table(table("experiment = \"stability\"\n[solver]\ndt = -1")).is_err());
        assert!(ExperimentConfig::from_table(table("experiment = \"norms\"\n[norms]\nbesov_q = \"big\"")).is_err());
    }

    #[test]
    fn set_overrides_nested_keys() {
        let mut t = table("experiment = \"spectrum\"");
        apply_set(&mut t, "grid.n=256").unwrap();
        apply_set(&mut t, "solver.T=2.5").unwrap();
        apply_set(&mut t, "norms.besov_q=inf").unwrap();
        apply_set(&mut t, "experiment=norms").unwrap();
        let cfg = ExperimentConfig::from_table(t).unwrap();
        assert_eq!(cfg.grid.n, 256);
        assert_eq!(cfg.solver.t_final, 2.5);
        assert_eq!(cfg.experiment, Experiment::Norms);
        assert!(apply_set(&mut table(""), "novalue").is_err());
    }

    #[test]
    fn round_trips_through_json_and_toml() {
        let mut cfg = ExperimentConfig::from_table(table("experiment = \"norms\"\nseed = 9")).unwrap();
        cfg.output_dir = Some("x/y".into());
        let json = serde_json::json!({ "config": serde_json::to_value(&cfg).unwrap(), "versions": {} });
        let dir = std::env::temp_dir().join(format!("gkdv-lab-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("meta.json");
        std::fs::write(&p, serde_json::to_string(&json).unwrap()).unwrap();
        assert_eq!(ExperimentConfig::load(&p, None, &[]).unwrap(), cfg);
        assert_eq!(ExperimentConfig::from_table(cfg.to_table()).unwrap(), cfg);
        std::fs::remove_dir_all(dir).ok();
    }
}
