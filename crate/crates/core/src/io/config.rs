use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimands::{Estimand, Population};
use crate::model::ModelSettings;
use crate::sensitivity::SensitivitySpec;
use crate::simulation::{ReplicationSettings, SimulationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Analyze,
    Simulate,
    Sensitivity,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    /// The cohort was built by matching treated units to controls; effects
    /// then default to the treated population.
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolingSection {
    /// Complete-data degrees of freedom for the Barnard-Rubin adjustment.
    /// When unset, `n - p` is used for cohorts smaller than
    /// `small_sample_threshold`.
    pub nu_com: Option<f64>,
    pub small_sample_threshold: usize,
    /// Finite-sample estimands use percentile intervals from this many
    /// imputations on.
    pub percentile_min_imputations: usize,
}

impl Default for PoolingSection {
    fn default() -> Self {
        PoolingSection {
            nu_com: None,
            small_sample_threshold: 200,
            percentile_min_imputations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub force: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            force: false,
        }
    }
}

/// Generator choice for simulation runs: a named case study or explicit
/// parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    /// `case_study_1` or `case_study_2`; ignored when `generator` is set.
    pub case_study: String,
    /// `logit` or `burr`, applied to a named case study.
    pub link: Option<crate::glm::LinkFunction<f64>>,
    pub generator: Option<SimulationConfig>,
    /// Covariate pool CSV (header row, numeric columns); the built-in pool
    /// when unset.
    pub pool: Option<PathBuf>,
    pub replications: ReplicationSettings,
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            case_study: "case_study_1".into(),
            link: None,
            generator: None,
            pool: None,
            replications: ReplicationSettings::default(),
        }
    }
}

impl SimulationSection {
    pub fn generator(&self) -> Result<SimulationConfig> {
        let mut c = match &self.generator {
            Some(g) => g.clone(),
            None => match self.case_study.as_str() {
                "case_study_1" => SimulationConfig::case_study_1(),
                "case_study_2" => SimulationConfig::case_study_2(),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown case study '{other}'"
                    )))
                }
            },
        };
        if let Some(link) = self.link {
            c = c.with_link(link);
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivitySection {
    /// One grid per value.
    pub mu_z_control: Vec<f64>,
    pub grid: SensitivitySpec,
}

impl Default for SensitivitySection {
    fn default() -> Self {
        SensitivitySection {
            mu_z_control: vec![-1.0, 1.0],
            grid: SensitivitySpec::default(),
        }
    }
}

/// Everything that affects the numbers of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub imputations: usize,
    pub alpha: f64,
    /// Defaults to treated units for matched data, all units otherwise.
    pub population: Option<Population>,
    /// Estimands to report; all of them when unset.
    pub estimands: Option<Vec<Estimand>>,
    pub data: DataSection,
    pub model: ModelSettings,
    pub pooling: PoolingSection,
    pub output: OutputSection,
    pub simulation: SimulationSection,
    pub sensitivity: SensitivitySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Analyze,
            seed: 1,
            imputations: 500,
            alpha: 0.05,
            population: None,
            estimands: None,
            data: DataSection::default(),
            model: ModelSettings::default(),
            pooling: PoolingSection::default(),
            output: OutputSection::default(),
            simulation: SimulationSection::default(),
            sensitivity: SensitivitySection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Read a TOML config; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = c.data.path.as_mut() {
            rebase(p);
        }
        if let Some(p) = c.simulation.pool.as_mut() {
            rebase(p);
        }
        rebase(&mut c.output.dir);
        Ok(c)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn population(&self) -> Population {
        self.population.unwrap_or(if self.data.matched {
            Population::Treated
        } else {
            Population::All
        })
    }

    pub fn estimands(&self) -> Vec<Estimand> {
        self.estimands.clone().unwrap_or_else(Estimand::all)
    }

    pub fn validate(&self) -> Result<()> {
        if self.imputations < 2 {
            return Err(Error::InvalidConfig(format!(
                "at least 2 imputations are needed, got {}",
                self.imputations
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        self.model.priors.validate()?;
        self.model.propensity_prior.validate()?;
        self.model.link.validate()?;
        match self.mode {
            Mode::Analyze | Mode::Sensitivity => match &self.data.path {
                Some(p) if p.is_file() => {}
                Some(p) => {
                    return Err(Error::InvalidConfig(format!(
                        "data file {} does not exist",
                        p.display()
                    )))
                }
                None => return Err(Error::InvalidConfig("no data path configured".into())),
            },
            Mode::Simulate => {
                self.simulation.generator()?;
                if let Some(p) = &self.simulation.pool {
                    if !p.is_file() {
                        return Err(Error::InvalidConfig(format!(
                            "covariate pool {} does not exist",
                            p.display()
                        )));
                    }
                }
            }
        }
        if self.mode == Mode::Sensitivity {
            self.sensitivity.grid.validate()?;
            if self.sensitivity.mu_z_control.is_empty() {
                return Err(Error::InvalidConfig("no mu_z_control values".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_and_population_default() {
        let c = RunConfig::from_toml_str(
            "seed = 7\nimputations = 20\n[data]\nmatched = true\n[model.knots]\nkind = \"quantile\"\ninternal_knots = 4\n",
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.population(), Population::Treated);
        assert_eq!(
            c.model.knots,
            crate::outcome::KnotRule::Quantile { internal_knots: 4 }
        );
        assert!(RunConfig::from_toml_str("sede = 7").is_err());
    }

    #[test]
    fn validation_checks_paths() {
        let c = RunConfig {
            data: DataSection {
                path: Some("/nonexistent/x.csv".into()),
                matched: false,
            },
            ..RunConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        let sim = RunConfig {
            mode: Mode::Simulate,
            ..RunConfig::default()
        };
        assert!(sim.validate().is_ok());
    }
}
