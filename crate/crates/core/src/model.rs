//! Trained models behind one type, and their JSON persistence.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes::{BayesConfig, BayesError, NaiveBayesModel};
use crate::table::{Dataset, Header, Value};
use crate::tree::{DecisionTreeModel, TreeConfig, TreeError};

pub const MODEL_FORMAT: &str = "churnseg-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error("model json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a {MODEL_FORMAT} file (format {0:?})")]
    Format(String),
    #[error("unsupported model version {0}")]
    Version(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Model {
    #[serde(rename = "c45")]
    Tree(DecisionTreeModel),
    #[serde(rename = "nb")]
    Bayes(NaiveBayesModel),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: Model,
}

impl Model {
    pub fn header(&self) -> &Header {
        match self {
            Model::Tree(m) => &m.header,
            Model::Bayes(m) => &m.header,
        }
    }

    pub fn predict(&self, row: &[Value]) -> (usize, Vec<f64>) {
        match self {
            Model::Tree(m) => m.predict(row),
            Model::Bayes(m) => m.predict(row),
        }
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Model, ModelError> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(ModelError::Format(file.format));
        }
        if file.version != MODEL_VERSION {
            return Err(ModelError::Version(file.version));
        }
        Ok(file.model)
    }
}

/// Which learner to train, with its settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LearnerSpec {
    C45(TreeConfig),
    Nb(BayesConfig),
}

impl LearnerSpec {
    pub fn fit(&self, data: &Dataset) -> Result<Model, ModelError> {
        Ok(match self {
            LearnerSpec::C45(cfg) => Model::Tree(DecisionTreeModel::train(data, *cfg)?),
            LearnerSpec::Nb(cfg) => Model::Bayes(NaiveBayesModel::train(data, *cfg)?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerSpec::C45(_) => "c45",
            LearnerSpec::Nb(_) => "nb",
        }
    }
}

impl fmt::Display for LearnerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c45" | "c4.5" | "tree" => Ok(LearnerSpec::C45(TreeConfig::default())),
            "nb" | "bayes" => Ok(LearnerSpec::Nb(BayesConfig::default())),
            other => Err(format!("unknown model type {other:?} (expected c45 or nb)")),
        }
    }
}
