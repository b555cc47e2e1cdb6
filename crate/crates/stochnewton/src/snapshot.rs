//! JSON snapshots of an estimator state.
//!
//! ```json
//! {"algorithm": "tsn", "n": 5000, "theta": [...], "inv": [[...], ...],
//!  "config": {"c_alpha": 1e-10, "beta": 0.49}}
//! ```
//!
//! `inv` is present for the Newton-type and RLS estimators, `theta_bar`
//! for averaged SGD. Reals are written in shortest round-trip form, so a
//! reloaded state is bit-identical to the saved one.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stochnewton_core::estimators::StepSchedule;
use stochnewton_core::linalg::SquareMatrix;
use stochnewton_core::{Algorithm, EstimatorConfig, EstimatorState, InverseAccumulator, Parameters, TruncationConfig};

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error("{}: {source}", path.display())]
    Io { path: std::path::PathBuf, source: std::io::Error },
    #[error("malformed snapshot: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid snapshot: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_exp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub algorithm: String,
    pub n: u64,
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inv: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_bar: Option<Vec<f64>>,
    pub config: ConfigDoc,
}

impl Snapshot {
    pub fn from_state(state: &EstimatorState) -> Self {
        let config = match state.config() {
            EstimatorConfig::Tsn(t) => ConfigDoc { c_alpha: Some(t.c_alpha()), beta: Some(t.beta()), ..Default::default() },
            EstimatorConfig::Sgd(s) | EstimatorConfig::Asgd(s) => {
                ConfigDoc { c_gamma: Some(s.c_gamma()), gamma_exp: Some(s.exponent()), ..Default::default() }
            }
            EstimatorConfig::Sn | EstimatorConfig::Rls => ConfigDoc::default(),
        };
        Self {
            algorithm: state.algorithm().name().to_string(),
            n: state.n(),
            theta: state.theta().to_vec(),
            inv: state.accumulator().map(|acc| acc.inverse().rows().map(<[f64]>::to_vec).collect()),
            theta_bar: state.theta_bar().map(|b| b.to_vec()),
            config,
        }
    }

    pub fn to_state(&self) -> Result<EstimatorState, SnapshotError> {
        let invalid = |e: stochnewton_core::Error| SnapshotError::Invalid(e.to_string());
        let algorithm: Algorithm = self.algorithm.parse().map_err(invalid)?;
        let c = &self.config;
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| SnapshotError::Invalid(format!("{algorithm} snapshot needs config.{key}")))
        };
        let config = match algorithm {
            Algorithm::Tsn => {
                EstimatorConfig::Tsn(TruncationConfig::new(need(c.c_alpha, "c_alpha")?, need(c.beta, "beta")?).map_err(invalid)?)
            }
            Algorithm::Sgd | Algorithm::Asgd => {
                let s = StepSchedule::new(need(c.c_gamma, "c_gamma")?, need(c.gamma_exp, "gamma_exp")?).map_err(invalid)?;
                if algorithm == Algorithm::Sgd {
                    EstimatorConfig::Sgd(s)
                } else {
                    EstimatorConfig::Asgd(s)
                }
            }
            Algorithm::Sn => EstimatorConfig::Sn,
            Algorithm::Rls => EstimatorConfig::Rls,
        };
        let theta = Parameters::new(self.theta.clone()).map_err(invalid)?;
        let acc = match &self.inv {
            Some(rows) => {
                let m = SquareMatrix::from_rows(rows).map_err(invalid)?;
                Some(InverseAccumulator::from_inverse(m, self.n).map_err(invalid)?)
            }
            None => None,
        };
        let theta_bar = match &self.theta_bar {
            Some(b) => Some(Parameters::new(b.clone()).map_err(invalid)?),
            None => None,
        };
        EstimatorState::from_parts(config, theta, acc, theta_bar, self.n).map_err(invalid)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot fields are finite")
    }

    pub fn from_json(text: &str) -> Result<Self, SnapshotError> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn save_state(path: impl AsRef<Path>, state: &EstimatorState) -> Result<(), SnapshotError> {
    let path = path.as_ref();
    let mut text = Snapshot::from_state(state).to_json();
    text.push('\n');
    fs::write(path, text).map_err(|source| SnapshotError::Io { path: path.to_path_buf(), source })
}

pub fn load_state(path: impl AsRef<Path>) -> Result<EstimatorState, SnapshotError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SnapshotError::Io { path: path.to_path_buf(), source })?;
    Snapshot::from_json(&text)?.to_state()
}

#[cfg(test)]
mod tests {
    use super::*;
    use stochnewton_core::Observation;

    fn trained(config: EstimatorConfig) -> EstimatorState {
        let mut state = EstimatorState::zeros(config, 2);
        for (i, y) in [1.0, 0.0, 1.0, 1.0, 0.0].into_iter().enumerate() {
            let obs = Observation::from_covariates(&[0.1 + 0.17 * i as f64], y).unwrap();
            state.step(&obs).unwrap();
        }
        state
    }

    #[test]
    fn every_algorithm_round_trips_bit_exactly() {
        let step = StepSchedule::new(1.7, 0.66).unwrap();
        for config in [
            EstimatorConfig::Tsn(TruncationConfig::default()),
            EstimatorConfig::Sn,
            EstimatorConfig::Sgd(step),
            EstimatorConfig::Asgd(step),
        ] {
            let state = trained(config);
            let json = Snapshot::from_state(&state).to_json();
            let back = Snapshot::from_json(&json).unwrap().to_state().unwrap();
            assert_eq!(back, state, "{json}");
        }
    }

    #[test]
    fn optional_fields_follow_the_algorithm() {
        let s = Snapshot::from_state(&trained(EstimatorConfig::Sn));
        assert!(s.inv.is_some() && s.theta_bar.is_none());
        let s = Snapshot::from_state(&trained(EstimatorConfig::Asgd(StepSchedule::new(1.0, 1.0).unwrap())));
        assert!(s.inv.is_none() && s.theta_bar.is_some());
        assert_eq!(s.config.gamma_exp, Some(1.0));
    }

    #[test]
    fn rejects_inconsistent_documents() {
        let mut s = Snapshot::from_state(&trained(EstimatorConfig::Sn));
        s.inv = None;
        assert!(matches!(s.to_state(), Err(SnapshotError::Invalid(_))));

        let mut s = Snapshot::from_state(&trained(EstimatorConfig::Tsn(TruncationConfig::default())));
        s.config.beta = None;
        assert!(s.to_state().unwrap_err().to_string().contains("beta"));

        let mut s = Snapshot::from_state(&trained(EstimatorConfig::Sn));
        s.algorithm = "newton".into();
        assert!(s.to_state().is_err());

        assert!(Snapshot::from_json(r#"{"algorithm":"sn","n":0,"theta":[0],"config":{},"extra":1}"#).is_err());
    }
}
