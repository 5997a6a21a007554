//! Per-stage model parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::schema::{Cursor, SchemaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Step1,
    Step2,
    Step3,
    #[serde(rename = "step3_1")]
    Step3_1,
    #[serde(rename = "step3_2")]
    Step3_2,
    Judge,
    Classifier,
}

impl Stage {
    pub const ALL: [Stage; 7] =
        [Stage::Step1, Stage::Step2, Stage::Step3, Stage::Step3_1, Stage::Step3_2, Stage::Judge, Stage::Classifier];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Step1 => "step1",
            Stage::Step2 => "step2",
            Stage::Step3 => "step3",
            Stage::Step3_1 => "step3_1",
            Stage::Step3_2 => "step3_2",
            Stage::Judge => "judge",
            Stage::Classifier => "classifier",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

/// Model parameters for one pipeline stage. `temperature` is omitted from
/// requests when absent, since reasoning models reject it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub stage: Stage,
    pub model_id: String,
    pub max_tokens: u32,
    pub top_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StageConfigError {
    #[error("{stage}: max_tokens must be at least 1")]
    MaxTokens { stage: Stage },
    #[error("{stage}: top_p {value} outside (0, 1]")]
    TopP { stage: Stage, value: f64 },
    #[error("{stage}: temperature {value} outside [0, 2]")]
    Temperature { stage: Stage, value: f64 },
    #[error("{stage}: model id is empty")]
    Model { stage: Stage },
}

impl StageConfig {
    /// The defaults used when the config file does not override a stage.
    pub fn default_for(stage: Stage) -> Self {
        let (model_id, max_tokens, temperature) = match stage {
            Stage::Step1 => ("o1", 2048, None),
            Stage::Step2 | Stage::Step3 => ("o3-mini", 2048, None),
            Stage::Step3_1 | Stage::Step3_2 => ("gpt-4.1", 2048, Some(0.2)),
            Stage::Judge => ("o3-mini", 40_000, None),
            Stage::Classifier => ("gpt-4o", 2048, Some(0.0)),
        };
        StageConfig { stage, model_id: model_id.to_string(), max_tokens, top_p: 1.0, temperature }
    }

    pub fn check(&self) -> Result<(), StageConfigError> {
        let stage = self.stage;
        if self.model_id.trim().is_empty() {
            return Err(StageConfigError::Model { stage });
        }
        if self.max_tokens == 0 {
            return Err(StageConfigError::MaxTokens { stage });
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(StageConfigError::TopP { stage, value: self.top_p });
        }
        if let Some(t) = self.temperature {
            if !(0.0..=2.0).contains(&t) {
                return Err(StageConfigError::Temperature { stage, value: t });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("stage".into(), Value::String(self.stage.as_str().into()));
        m.insert("model_id".into(), Value::String(self.model_id.clone()));
        m.insert("max_tokens".into(), Value::from(self.max_tokens));
        m.insert("top_p".into(), Value::from(self.top_p));
        if let Some(t) = self.temperature {
            m.insert("temperature".into(), Value::from(t));
        }
        Value::Object(m)
    }

    pub(crate) fn from_cursor(c: &Cursor<'_>) -> Result<Self, SchemaError> {
        let stage_c = c.field("stage")?;
        let stage = stage_c.str()?.parse().map_err(|e: String| stage_c.invalid(e))?;
        let max_c = c.field("max_tokens")?;
        let cfg = StageConfig {
            stage,
            model_id: c.field("model_id")?.str()?.to_string(),
            max_tokens: u32::try_from(max_c.u64()?).map_err(|_| max_c.invalid("value out of range"))?,
            top_p: c.field("top_p")?.f64()?,
            temperature: c.opt_field("temperature")?.map(|t| t.f64()).transpose()?,
        };
        cfg.check().map_err(|e| c.invalid(e.to_string()))?;
        Ok(cfg)
    }
}
