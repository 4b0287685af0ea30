//! Run configuration: a TOML document with one section per concern. Every
//! field has a default, so an empty file is a valid configuration.

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::counterexample::linspace;
use crate::lattice::{Boundary, CouplingScheme, LatticeConfig};
use crate::recipe::{ChiRecipe, StateRecipe};
use crate::verify::SuitePlan;

pub const DEFAULT_SEED: u64 = 20240611;

/// Configuration errors, split by how the user should react.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// The file could not be read.
    Io { path: PathBuf, message: String },
    /// The text is not valid TOML.
    Parse { location: String, message: String },
    /// Valid TOML that does not describe a run.
    Schema { location: String, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => {
                write!(f, "cannot read config {}: {message}", path.display())
            }
            ConfigError::Parse { location, message } => {
                write!(f, "config parse error at {location}: {message}")
            }
            ConfigError::Schema { location, message } => {
                write!(f, "config schema error at {location}: {message}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Peierls,
    Linear,
    Both,
}

impl SchemeChoice {
    pub fn schemes(self) -> Vec<CouplingScheme> {
        match self {
            SchemeChoice::Peierls => vec![CouplingScheme::Peierls],
            SchemeChoice::Linear => vec![CouplingScheme::Linear],
            SchemeChoice::Both => vec![CouplingScheme::Peierls, CouplingScheme::Linear],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    pub n_sites: usize,
    pub spacing: f64,
    pub mass: f64,
    pub wilson_r: f64,
    pub boundary: Boundary,
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self {
            n_sites: 16,
            spacing: 0.5,
            mass: 1.0,
            wilson_r: 1.0,
            boundary: Boundary::Periodic,
        }
    }
}

impl LatticeSection {
    pub fn to_config(&self) -> LatticeConfig {
        LatticeConfig {
            n_sites: self.n_sites,
            spacing: self.spacing,
            mass: self.mass,
            wilson_r: self.wilson_r,
            boundary: self.boundary,
        }
    }
}

/// Either an explicit list of amplitudes or an inclusive evenly spaced range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_values: Option<Vec<f64>>,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            f_values: None,
            start: 0.0,
            stop: 200.0,
            count: 401,
        }
    }
}

impl SweepSection {
    pub fn values(&self) -> Vec<f64> {
        match &self.f_values {
            Some(v) => v.clone(),
            None => linspace(self.start, self.stop, self.count),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefinementSection {
    /// Halvings of the spacing for the convergence fits.
    pub halvings: u32,
    /// Halvings for the vacuum-shift ratio, run on a small box.
    pub probe_halvings: u32,
    /// Sites of that box at the base spacing.
    pub probe_sites: usize,
}

impl Default for RefinementSection {
    fn default() -> Self {
        Self {
            halvings: 3,
            probe_halvings: 5,
            probe_sites: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub prefix: String,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            prefix: "dirac-lab".into(),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub random_states: usize,
    pub vacuum_sites: usize,
    pub gauge_sites: Vec<usize>,
    pub gauge_trials: usize,
    pub oracle: bool,
    pub oracle_sites: usize,
    pub oracle_trials: usize,
    pub amplitude_factors: Vec<f64>,
    pub conservation_time: f64,
    pub conservation_steps: usize,
    pub continuity_dts: Vec<f64>,
}

impl Default for VerifySection {
    fn default() -> Self {
        let plan = SuitePlan::default();
        Self {
            random_states: plan.random_states,
            vacuum_sites: plan.vacuum_sites,
            gauge_sites: plan.gauge_sites,
            gauge_trials: plan.gauge_trials,
            oracle: plan.oracle,
            oracle_sites: plan.oracle_sites,
            oracle_trials: plan.oracle_trials,
            amplitude_factors: plan.amplitude_factors,
            conservation_time: plan.conservation_time,
            conservation_steps: plan.conservation_steps,
            continuity_dts: plan.continuity_dts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub scheme: SchemeChoice,
    pub lattice: LatticeSection,
    pub state: StateRecipe,
    pub chi: ChiRecipe,
    pub sweep: SweepSection,
    pub refinement: RefinementSection,
    pub output: OutputSection,
    pub verify: VerifySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            scheme: SchemeChoice::Both,
            lattice: LatticeSection::default(),
            state: StateRecipe::default(),
            chi: ChiRecipe::default(),
            sweep: SweepSection::default(),
            refinement: RefinementSection::default(),
            output: OutputSection::default(),
            verify: VerifySection::default(),
        }
    }
}

fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, col)
}

fn locate(origin: &str, source: &str, span: Option<Range<usize>>) -> String {
    match span {
        Some(span) => {
            let (line, col) = line_col(source, span.start);
            format!("{origin}:{line}:{col}")
        }
        None => origin.to_string(),
    }
}

fn schema(location: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema {
        location: location.into(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// `origin` names the source in error locations.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        text.parse::<toml::Table>().map_err(|e| ConfigError::Parse {
            location: locate(origin, text, e.span()),
            message: e.message().trim().to_string(),
        })?;
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Schema {
            location: locate(origin, text, e.span()),
            message: e.message().trim().to_string(),
        })?;
        config.validate(origin)?;
        Ok(config)
    }

    /// Checks that need more than the types: lattice ranges, recipe
    /// compatibility and study sizes.
    pub fn validate(&self, origin: &str) -> Result<(), ConfigError> {
        let at = |field: &str| format!("{origin} [{field}]");
        // TOML integers are signed 64-bit
        let seeds = [Some(self.seed), match self.state {
            StateRecipe::Random { seed } => seed,
            _ => None,
        }];
        if let Some(big) = seeds.into_iter().flatten().find(|&s| s > i64::MAX as u64) {
            return Err(schema(at("seed"), format!("seed {big} exceeds {}", i64::MAX)));
        }
        self.lattice
            .to_config()
            .validate()
            .map_err(|e| schema(at("lattice"), e.to_string()))?;
        if let StateRecipe::Wavepacket { width, .. } = self.state {
            if !(width > 0.0 && width.is_finite()) {
                return Err(schema(at("state"), format!("width must be positive, got {width}")));
            }
        }
        if let ChiRecipe::Samples { values } = &self.chi {
            if values.len() != self.lattice.n_sites {
                return Err(schema(
                    at("chi"),
                    format!("{} samples for {} sites", values.len(), self.lattice.n_sites),
                ));
            }
        }
        let f = self.sweep.values();
        if f.is_empty() {
            return Err(schema(at("sweep"), "no amplitudes to sweep"));
        }
        if let Some(bad) = f.iter().find(|v| !v.is_finite()) {
            return Err(schema(at("sweep"), format!("amplitude {bad} is not finite")));
        }
        if self.refinement.halvings < 1 || self.refinement.probe_halvings < 1 {
            return Err(schema(at("refinement"), "refinement needs at least one halving"));
        }
        if self.refinement.probe_sites < 2 {
            return Err(schema(at("refinement"), "probe_sites must be at least 2"));
        }
        if self.output.formats.is_empty() {
            return Err(schema(at("output"), "formats must name csv, json or both"));
        }
        if self.verify.oracle && !(2..=crate::verify::MAX_ORACLE_SITES).contains(&self.verify.oracle_sites) {
            return Err(schema(
                at("verify"),
                format!(
                    "oracle_sites must lie in 2..={}, got {}",
                    crate::verify::MAX_ORACLE_SITES,
                    self.verify.oracle_sites
                ),
            ));
        }
        if self.verify.continuity_dts.len() < 2 {
            return Err(schema(at("verify"), "continuity_dts needs at least two steps"));
        }
        Ok(())
    }

    /// The resolved configuration as TOML, for provenance.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    pub fn lattice_config(&self) -> LatticeConfig {
        self.lattice.to_config()
    }

    pub fn suite_plan(&self) -> SuitePlan {
        let v = &self.verify;
        SuitePlan {
            lattice: self.lattice_config(),
            state: self.state.clone(),
            chi: self.chi.clone(),
            schemes: self.scheme.schemes(),
            seed: self.seed,
            random_states: v.random_states,
            vacuum_sites: v.vacuum_sites,
            gauge_sites: v.gauge_sites.clone(),
            gauge_trials: v.gauge_trials,
            oracle: v.oracle,
            oracle_sites: v.oracle_sites,
            oracle_trials: v.oracle_trials,
            halvings: self.refinement.halvings,
            probe_halvings: self.refinement.probe_halvings,
            probe_sites: self.refinement.probe_sites,
            amplitude_factors: v.amplitude_factors.clone(),
            conservation_time: v.conservation_time,
            conservation_steps: v.conservation_steps,
            continuity_dts: v.continuity_dts.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default() {
        assert_eq!(RunConfig::from_toml("", "t").unwrap(), RunConfig::default());
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut c = RunConfig::default();
        c.sweep.f_values = Some(vec![0.0, 0.5, 1.0]);
        c.chi = ChiRecipe::Bump {
            center: 2.0,
            width: 0.5,
            amplitude: 1.0,
        };
        let back = RunConfig::from_toml(&c.to_toml(), "t").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let err = RunConfig::from_toml("seed = 1\n[lattice\nn_sites = 4\n", "cfg.toml").unwrap_err();
        match err {
            ConfigError::Parse { location, .. } => assert!(location.starts_with("cfg.toml:2:"), "{location}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_and_bad_types_are_schema_errors() {
        let err = RunConfig::from_toml("[lattice]\nn_sitez = 4\n", "c").unwrap_err();
        assert!(matches!(&err, ConfigError::Schema { location, message }
            if location.starts_with("c:2:") && message.contains("n_sitez")), "{err}");
        let err = RunConfig::from_toml("[lattice]\nspacing = \"wide\"\n", "c").unwrap_err();
        assert!(matches!(err, ConfigError::Schema { .. }));
        let err = RunConfig::from_toml("[state]\nkind = \"thermal\"\n", "c").unwrap_err();
        assert!(matches!(err, ConfigError::Schema { .. }));
    }

    #[test]
    fn semantic_errors_name_the_section() {
        let err = RunConfig::from_toml("[lattice]\nwilson_r = 2.0\n", "c").unwrap_err();
        assert!(err.to_string().contains("[lattice]") && err.to_string().contains("wilson_r"), "{err}");
        let err = RunConfig::from_toml("[verify]\noracle_sites = 5\n", "c").unwrap_err();
        assert!(err.to_string().contains("[verify]"), "{err}");
        let err = RunConfig::from_toml("[sweep]\ncount = 0\n", "c").unwrap_err();
        assert!(err.to_string().contains("[sweep]"), "{err}");
    }

    #[test]
    fn explicit_amplitudes_take_precedence() {
        let c = RunConfig::from_toml("[sweep]\nf_values = [0.0, 2.0]\ncount = 7\n", "c").unwrap();
        assert_eq!(c.sweep.values(), vec![0.0, 2.0]);
        assert_eq!(RunConfig::default().sweep.values().len(), 401);
    }

    #[test]
    fn seeds_must_fit_a_toml_integer() {
        let mut c = RunConfig::default();
        c.seed = u64::MAX;
        assert!(matches!(c.validate("c"), Err(ConfigError::Schema { .. })));
        c.seed = i64::MAX as u64;
        assert!(c.validate("c").is_ok());
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = RunConfig::from_path(Path::new("/nonexistent/dirac.toml")).unwrap_err();
        assert!(matches!(err, ConfigError::Io { .. }));
    }

    #[test]
    fn small_oracle_lattice_is_accepted() {
        let c = RunConfig::from_toml("[verify]\noracle_sites = 3\n", "c").unwrap();
        assert_eq!(c.suite_plan().oracle_sites, 3);
    }
}
