//! JSON model files.

use serde::{Deserialize, Serialize};

use super::{CdnModel, CopulaFactor, Variable};
use crate::copulas::CopulaKind;
use crate::error::{CdnError, Result};
use crate::margins::NormalMargin;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginJson {
    #[serde(rename = "type")]
    pub kind: String,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableJson {
    pub name: String,
    pub margin: MarginJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorJson {
    pub kind: CopulaKind,
    pub param: f64,
    pub scope: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    pub variables: Vec<VariableJson>,
    pub factors: Vec<FactorJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportJson {
    pub energy: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
    pub method: String,
}

/// Model file with an attached learning report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnedModelJson {
    pub variables: Vec<VariableJson>,
    pub factors: Vec<FactorJson>,
    pub report: ReportJson,
}

impl ModelJson {
    pub fn from_model(m: &CdnModel) -> Self {
        Self {
            variables: m
                .variables()
                .iter()
                .map(|v| VariableJson {
                    name: v.name.clone(),
                    margin: MarginJson { kind: "normal".into(), mu: v.margin.mu, sigma: v.margin.sigma },
                })
                .collect(),
            factors: m
                .factors()
                .iter()
                .map(|f| FactorJson { kind: f.kind, param: f.param, scope: f.scope.clone() })
                .collect(),
        }
    }

    pub fn into_model(self) -> Result<CdnModel> {
        let mut vars = Vec::with_capacity(self.variables.len());
        for v in self.variables {
            if v.margin.kind != "normal" {
                return Err(CdnError::Json(format!("unsupported margin type {:?}", v.margin.kind)));
            }
            vars.push(Variable { name: v.name, margin: NormalMargin::new(v.margin.mu, v.margin.sigma)? });
        }
        let factors = self
            .factors
            .into_iter()
            .map(|f| CopulaFactor { kind: f.kind, param: f.param, scope: f.scope })
            .collect();
        CdnModel::build(vars, factors)
    }
}

/// Parses and validates a model file.
pub fn parse_model(text: &str) -> Result<CdnModel> {
    let j: ModelJson = serde_json::from_str(text)
        .map_err(|e| CdnError::Json(format!("line {} column {}: {e}", e.line(), e.column())))?;
    j.into_model()
}

pub fn model_to_json(m: &CdnModel) -> String {
    serde_json::to_string_pretty(&ModelJson::from_model(m)).expect("model serializes")
}

pub fn learned_to_json(m: &CdnModel, report: ReportJson) -> String {
    let j = ModelJson::from_model(m);
    let l = LearnedModelJson { variables: j.variables, factors: j.factors, report };
    serde_json::to_string_pretty(&l).expect("model serializes")
}
