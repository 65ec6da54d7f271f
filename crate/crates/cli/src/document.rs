//! Serializable output documents.

use outlyingness::{SpadimoConfig, SpadimoReport, StandardizationParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub n: usize,
    pub p: usize,
    pub column_names: Vec<String>,
    pub sha256: String,
    pub dropped_lines: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorInfo {
    pub alpha: f64,
    pub n_w: f64,
    /// 1-based numbers of the cases with weight zero.
    pub outlying_cases: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Converged,
    GridExhausted,
    NotOutlying,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseExplanation {
    /// 1-based case number.
    pub case: usize,
    pub status: CaseStatus,
    pub message: Option<String>,
    /// Labels of the flagged variables, in flagging order.
    pub flagged_variables: Vec<String>,
    pub report: Option<SpadimoReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDocument {
    pub tool: ToolInfo,
    pub dataset: DatasetFingerprint,
    pub standardization: StandardizationParams,
    pub detector: DetectorInfo,
    pub settings: SpadimoConfig,
    pub cases: Vec<CaseExplanation>,
}

impl ExplanationDocument {
    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn is_partial(&self) -> bool {
        self.cases.iter().any(|c| c.status != CaseStatus::Converged)
    }
}
