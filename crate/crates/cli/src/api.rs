//! Operations shared by the command line and the HTTP service.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use parcc_core::evaluator::{check_spec_classes, explain, ViolationReport};
use parcc_core::formula::{parse_spec, Spec};
use parcc_core::geometry::Demonstration;
use parcc_core::inference::{infer, InferenceError, InferenceParams, Template};
use parcc_core::io::{DocumentError, InferenceReport, IoError};
use parcc_core::synthesizer::{sample_satisfying_set_with, Infeasibility, Inventory, SynthError};

/// Failure classes, each with its own exit code and HTTP status.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AppError {
    /// Unreadable or malformed input: files, JSON documents, spec text.
    #[error("{}{message}", path.as_ref().map(|p| format!("at `{p}`: ")).unwrap_or_default())]
    Input { path: Option<String>, message: String },
    /// Well-formed input that does not make sense together.
    #[error("{0}")]
    Semantic(String),
}

impl AppError {
    pub fn input(message: impl Into<String>) -> Self {
        AppError::Input { path: None, message: message.into() }
    }

    pub fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        AppError::Input { path: Some(path.into()), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Input { .. } => exit::INPUT,
            AppError::Semantic(_) => exit::SEMANTIC,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Input { .. } => "input",
            AppError::Semantic(_) => "semantic",
        }
    }

    pub fn to_json(&self) -> Value {
        let (path, message) = match self {
            AppError::Input { path, message } => (path.clone(), message.clone()),
            AppError::Semantic(m) => (None, m.clone()),
        };
        serde_json::json!({ "error": { "kind": self.kind(), "path": path, "message": message } })
    }

    /// Prefixes the JSON path of a document error with `prefix`.
    pub fn from_document(prefix: &str, error: DocumentError) -> Self {
        let message = match &error {
            DocumentError::Schema { message, .. } => message.clone(),
            DocumentError::VersionMismatch { .. } => error.to_string(),
        };
        let inner = error.path().unwrap_or("");
        let path = match (prefix.is_empty(), inner.is_empty()) {
            (true, _) => inner.to_string(),
            (false, true) => prefix.to_string(),
            (false, false) if inner.starts_with('[') => format!("{prefix}{inner}"),
            (false, false) => format!("{prefix}.{inner}"),
        };
        AppError::Input { path: (!path.is_empty()).then_some(path), message }
    }
}

impl From<IoError> for AppError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Document { ref path, ref error } => AppError::Input {
                path: error.path().map(String::from),
                message: format!("{}: {error}", path.display()),
            },
            other => AppError::input(other.to_string()),
        }
    }
}

impl From<InferenceError> for AppError {
    fn from(e: InferenceError) -> Self {
        AppError::Semantic(e.to_string())
    }
}

impl From<SynthError> for AppError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidInventory(m) => AppError::at("inventory", m),
            other => AppError::Semantic(other.to_string()),
        }
    }
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const UNSATISFIED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const INPUT: i32 = 3;
    pub const SEMANTIC: i32 = 4;
    pub const INFEASIBLE: i32 = 5;
}

pub fn parse_spec_text(text: &str, field: &str) -> Result<Spec, AppError> {
    parse_spec(text).map_err(|e| AppError::at(field, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub satisfied: bool,
    pub violations: Vec<ViolationReport>,
}

pub fn check(spec: &Spec, demo: &Demonstration, tau: f64) -> Result<CheckOutcome, AppError> {
    check_spec_classes(spec, demo).map_err(|e| AppError::Semantic(e.to_string()))?;
    let violations = explain(spec, demo, tau);
    Ok(CheckOutcome { satisfied: violations.is_empty(), violations })
}

/// A built-in template name or a full template definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TemplateChoice {
    Name(String),
    Custom(Template),
}

impl Default for TemplateChoice {
    fn default() -> Self {
        TemplateChoice::Name("original".into())
    }
}

impl TemplateChoice {
    pub fn resolve(&self, extra: &[Template]) -> Result<Template, AppError> {
        let t = match self {
            TemplateChoice::Custom(t) => t.clone(),
            TemplateChoice::Name(name) => match extra.iter().find(|t| &t.name == name) {
                Some(t) => t.clone(),
                None => Template::builtin(name).map_err(|e| AppError::at("template", e.to_string()))?,
            },
        };
        t.validate().map_err(|e| AppError::at("template", e.to_string()))?;
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InferOutcome {
    pub spec_text: String,
    pub report: InferenceReport,
}

pub fn run_infer(
    demos: &[Demonstration],
    template: &Template,
    params: &InferenceParams,
    tau: f64,
) -> Result<InferOutcome, AppError> {
    let inference = infer(demos, template, params, tau)?;
    let report = InferenceReport::new(&inference, template, params, tau, demos.len());
    Ok(InferOutcome { spec_text: report.spec_text.clone(), report })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PlaceOutcome {
    Placed { infeasible: bool, demos: Vec<Value> },
    Infeasible { infeasible: bool, index: usize, detail: Infeasibility },
}

impl PlaceOutcome {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, PlaceOutcome::Infeasible { .. })
    }
}

/// `k` layouts; returns the first failure if any layout cannot be produced.
pub fn run_place(
    spec: &Spec,
    inventory: &Inventory,
    k: usize,
    seed: u64,
    budget: usize,
    tau: f64,
) -> Result<(PlaceOutcome, Vec<Demonstration>), AppError> {
    match sample_satisfying_set_with(spec, |_| inventory.clone(), k, seed, budget, tau) {
        Ok(demos) => {
            let docs = demos.iter().map(parcc_core::io::demo_to_value).collect();
            Ok((PlaceOutcome::Placed { infeasible: false, demos: docs }, demos))
        }
        Err(SynthError::Infeasible { index, infeasible }) => {
            Ok((PlaceOutcome::Infeasible { infeasible: true, index, detail: infeasible }, Vec::new()))
        }
        Err(e) => Err(e.into()),
    }
}

/// Built-in template definitions as JSON.
pub fn template_descriptors() -> Vec<Value> {
    Template::builtins().into_iter().map(|t| serde_json::to_value(&t).expect("templates serialize")).collect()
}
