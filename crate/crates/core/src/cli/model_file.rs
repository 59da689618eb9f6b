//! JSON persistence of fitted models.
//!
//! Floats are written in the shortest decimal form that parses back to the
//! same `f64`, so `load(save(model))` is bit-exact for finite parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datasets::Scaling;
use crate::distribution::MBParams;
use crate::error::{Error, Result};
use crate::mixture::{FitReport, MixtureModel};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentEntry {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReportEntry {
    pub trace: Vec<f64>,
    pub n_iter: usize,
    pub converged: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingEntry {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    #[serde(rename = "M")]
    pub dim: usize,
    #[serde(rename = "C")]
    pub n_clusters: usize,
    pub weights: Vec<f64>,
    pub components: Vec<ComponentEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_report: Option<FitReportEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingEntry>,
}

impl ModelFile {
    pub fn new(
        model: &MixtureModel,
        report: Option<&FitReport>,
        scaling: Option<&Scaling>,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            dim: model.dim(),
            n_clusters: model.n_clusters(),
            weights: model.weights().to_vec(),
            components: model
                .components()
                .iter()
                .map(|c| ComponentEntry {
                    a: c.a().to_vec(),
                    b: c.b(),
                })
                .collect(),
            fit_report: report.map(|r| FitReportEntry {
                trace: r.log_likelihood_trace.clone(),
                n_iter: r.n_iter,
                converged: r.converged,
                seed: r.seed,
            }),
            scaling: scaling.map(|s| ScalingEntry {
                min: s.ranges.iter().map(|r| r.0).collect(),
                max: s.ranges.iter().map(|r| r.1).collect(),
            }),
        }
    }

    pub fn model(&self) -> Result<MixtureModel> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::InvalidParams(format!(
                "unsupported model format_version {}",
                self.format_version
            )));
        }
        if self.components.len() != self.n_clusters {
            return Err(Error::InvalidParams(format!(
                "C = {} but {} components listed",
                self.n_clusters,
                self.components.len()
            )));
        }
        let components = self
            .components
            .iter()
            .map(|c| {
                if c.a.len() != self.dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim,
                        actual: c.a.len(),
                    });
                }
                MBParams::new(c.a.clone(), c.b)
            })
            .collect::<Result<Vec<_>>>()?;
        MixtureModel::new(self.weights.clone(), components)
    }

    pub fn scaling(&self) -> Result<Option<Scaling>> {
        let Some(s) = &self.scaling else {
            return Ok(None);
        };
        if s.min.len() != self.dim || s.max.len() != self.dim {
            return Err(Error::InvalidParams(
                "scaling length does not match M".into(),
            ));
        }
        Ok(Some(Scaling {
            ranges: s.min.iter().copied().zip(s.max.iter().copied()).collect(),
        }))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidParams(format!("malformed model file: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
