use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::LinkFunction;

/// Outcome-generating parameters of one arm.
///
/// `P(A(w) = 1) = u^-1(phi_a + X xi_a)` and
/// `P(D(w) = 1) = u^-1(phi_d + X xi_d + zeta A(w))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmParameters {
    pub phi_a: f64,
    pub phi_d: f64,
    pub xi_a: Vec<f64>,
    pub xi_d: Vec<f64>,
    pub zeta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resample {
    Resample,
}

/// Assignment coefficients: fixed, or drawn from `N(0, I)` per replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Fixed(Vec<f64>),
    Resample(Resample),
}

/// Data-generating mechanism of a simulated cohort. `P(W = 1) = u^-1(X alpha)`
/// without intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub link: LinkFunction<f64>,
    pub alpha: AlphaSpec,
    pub active: ArmParameters,
    pub control: ArmParameters,
}

const XI_A_ACTIVE: [f64; 5] = [0.21, 0.32, 0.21, -2.3, -1.4];
const XI_A_CONTROL: [f64; 5] = [0.21, 0.07, 0.21, -2.61, -2.0];
const XI_D_ACTIVE: [f64; 5] = [-0.03, 0.18, -0.13, -1.08, -0.19];
const XI_D_CONTROL: [f64; 5] = [0.20, 0.22, 0.08, -1.08, -0.55];

impl SimulationConfig {
    fn with_scalars(phi_a: [f64; 2], phi_d: [f64; 2], zeta: [f64; 2]) -> Self {
        SimulationConfig {
            n: 2016,
            link: LinkFunction::Logit,
            alpha: AlphaSpec::Resample(Resample::Resample),
            active: ArmParameters {
                phi_a: phi_a[1],
                phi_d: phi_d[1],
                xi_a: XI_A_ACTIVE.to_vec(),
                xi_d: XI_D_ACTIVE.to_vec(),
                zeta: zeta[1],
            },
            control: ArmParameters {
                phi_a: phi_a[0],
                phi_d: phi_d[0],
                xi_a: XI_A_CONTROL.to_vec(),
                xi_d: XI_D_CONTROL.to_vec(),
                zeta: zeta[0],
            },
        }
    }

    /// Adverse events and deaths co-occur more often under the active arm.
    pub fn case_study_1() -> Self {
        Self::with_scalars([1.0, 1.0], [0.75, 0.5], [0.5, 1.5])
    }

    /// Fewer adverse events under the active arm, but deadlier ones.
    pub fn case_study_2() -> Self {
        Self::with_scalars([0.15, -0.25], [-0.75, -0.25], [1.0, 2.0])
    }

    pub fn with_link(mut self, link: LinkFunction<f64>) -> Self {
        self.link = link;
        self
    }

    pub fn arm(&self, w: u8) -> &ArmParameters {
        if w == 1 {
            &self.active
        } else {
            &self.control
        }
    }

    pub fn n_covariates(&self) -> usize {
        self.active.xi_a.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.link.validate()?;
        if self.n == 0 {
            return Err(Error::InvalidConfig("cohort size must be positive".into()));
        }
        let p = self.n_covariates();
        for (name, arm) in [("active", &self.active), ("control", &self.control)] {
            if arm.xi_a.len() != p || arm.xi_d.len() != p {
                return Err(Error::InvalidConfig(format!(
                    "{name} arm coefficient vectors must have length {p}"
                )));
            }
            let all = [arm.phi_a, arm.phi_d, arm.zeta]
                .into_iter()
                .chain(arm.xi_a.iter().copied())
                .chain(arm.xi_d.iter().copied());
            if all.into_iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} arm parameters must be finite"
                )));
            }
        }
        if let AlphaSpec::Fixed(a) = &self.alpha {
            if a.len() != p {
                return Err(Error::InvalidConfig(format!(
                    "alpha has {} entries for {p} covariates",
                    a.len()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let c = SimulationConfig::case_study_2().with_link(LinkFunction::Burr { c: 0.5 });
        let text = toml::to_string(&c).unwrap();
        let back: SimulationConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
        let fixed = SimulationConfig {
            alpha: AlphaSpec::Fixed(vec![0.0; 5]),
            ..SimulationConfig::case_study_1()
        };
        let back: SimulationConfig = toml::from_str(&toml::to_string(&fixed).unwrap()).unwrap();
        assert_eq!(back, fixed);
    }

    #[test]
    fn validation() {
        let mut c = SimulationConfig::case_study_1();
        assert!(c.validate().is_ok());
        c.control.xi_d.pop();
        assert!(c.validate().is_err());
    }
}
