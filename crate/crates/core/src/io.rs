//! JSON documents for demonstrations, inventories and inference reports,
//! and plain-text spec files.
//!
//! Every document carries `schema_version`. Decoding checks the version
//! first, then the structure, then referential integrity, and reports the
//! first problem with the JSON path of the offending value.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::formula::{parse_spec, print_spec, ParseError, Spec};
use crate::geometry::{Demonstration, ObjectClass, SceneObject, Space};
use crate::inference::{CandidateReport, Inference, InferenceParams, InferenceStats, Template};
use crate::synthesizer::{Inventory, InventoryItem};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DocumentError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("unsupported schema_version {found} (this build reads version {expected})")]
    VersionMismatch { found: String, expected: u64 },
}

impl DocumentError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        DocumentError::Schema { path: path.into(), message: message.into() }
    }

    /// JSON path of the problem, if it has one.
    pub fn path(&self) -> Option<&str> {
        match self {
            DocumentError::Schema { path, .. } => Some(path),
            DocumentError::VersionMismatch { .. } => Some("schema_version"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Fs { path: PathBuf, source: std::io::Error },
    #[error("{}: {error}", path.display())]
    Document { path: PathBuf, error: DocumentError },
    #[error("{}:{error}", path.display())]
    Spec { path: PathBuf, error: ParseError },
    #[error("{}: no demonstration files (*.json)", path.display())]
    EmptyDirectory { path: PathBuf },
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Fs { path: path.into(), source })
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Fs { path: path.into(), source })
}

/// Parses JSON text, checks `schema_version`, and decodes the document with
/// path-annotated errors.
fn decode<T: DeserializeOwned>(text: &str) -> Result<T, DocumentError> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        DocumentError::schema("", format!("invalid JSON at line {} column {}: {e}", e.line(), e.column()))
    })?;
    decode_value(value)
}

fn decode_value<T: DeserializeOwned>(value: Value) -> Result<T, DocumentError> {
    let Some(obj) = value.as_object() else {
        return Err(DocumentError::schema("", "expected a JSON object"));
    };
    match obj.get("schema_version") {
        None => return Err(DocumentError::schema("schema_version", "missing field")),
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION) => {}
        Some(v) => return Err(DocumentError::VersionMismatch { found: v.to_string(), expected: SCHEMA_VERSION }),
    }
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        DocumentError::schema(if path == "." { String::new() } else { path }, e.into_inner().to_string())
    })
}

fn encode<T: Serialize>(doc: &T) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("documents serialize");
    text.push('\n');
    text
}

/// On-disk form of a [`Demonstration`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemonstrationDocument {
    pub schema_version: u64,
    pub space: Space,
    pub classes: Vec<ObjectClass>,
    pub objects: Vec<SceneObject>,
}

impl DemonstrationDocument {
    pub fn from_demo(demo: &Demonstration) -> Self {
        DemonstrationDocument {
            schema_version: SCHEMA_VERSION,
            space: demo.space,
            classes: demo.classes.clone(),
            objects: demo.objects.clone(),
        }
    }

    pub fn into_demo(self) -> Result<Demonstration, DocumentError> {
        if self.space.validate().is_err() {
            return Err(DocumentError::schema("space", "x_min < x_max and y_min < y_max required"));
        }
        let mut names = BTreeSet::new();
        for (i, c) in self.classes.iter().enumerate() {
            if !names.insert(c.name.as_str()) {
                return Err(DocumentError::schema(
                    format!("classes[{i}].name"),
                    format!("duplicate class `{}`", c.name),
                ));
            }
        }
        let mut ids = BTreeSet::new();
        for (i, o) in self.objects.iter().enumerate() {
            check_object(o, &format!("objects[{i}]"))?;
            if !ids.insert(o.id.as_str()) {
                return Err(DocumentError::schema(format!("objects[{i}].id"), format!("duplicate id `{}`", o.id)));
            }
            let Some(class) = self.classes.iter().find(|c| c.name == o.cls) else {
                return Err(DocumentError::schema(format!("objects[{i}].class"), format!("unknown class `{}`", o.cls)));
            };
            if !class.fixed && !self.space.contains_point(o.x, o.y) {
                return Err(DocumentError::schema(format!("objects[{i}]"), "center lies outside the space"));
            }
        }
        Demonstration::new(self.objects, self.space, self.classes).map_err(|e| DocumentError::schema("", e.to_string()))
    }
}

fn check_object(o: &SceneObject, at: &str) -> Result<(), DocumentError> {
    for (field, v) in [("l", o.l), ("w", o.w), ("x", o.x), ("y", o.y)] {
        if !v.is_finite() {
            return Err(DocumentError::schema(format!("{at}.{field}"), "must be finite"));
        }
    }
    for (field, v) in [("l", o.l), ("w", o.w)] {
        if v <= 0.0 {
            return Err(DocumentError::schema(format!("{at}.{field}"), "extent must be positive"));
        }
    }
    Ok(())
}

pub fn demo_from_str(text: &str) -> Result<Demonstration, DocumentError> {
    decode::<DemonstrationDocument>(text)?.into_demo()
}

pub fn demo_from_value(value: Value) -> Result<Demonstration, DocumentError> {
    decode_value::<DemonstrationDocument>(value)?.into_demo()
}

/// Canonical text: pretty JSON in field order, shortest round-trip floats,
/// trailing newline.
pub fn demo_to_string(demo: &Demonstration) -> String {
    encode(&DemonstrationDocument::from_demo(demo))
}

pub fn demo_to_value(demo: &Demonstration) -> Value {
    serde_json::to_value(DemonstrationDocument::from_demo(demo)).expect("documents serialize")
}

pub fn load_demo(path: impl AsRef<Path>) -> Result<Demonstration, IoError> {
    let path = path.as_ref();
    demo_from_str(&read(path)?).map_err(|error| IoError::Document { path: path.into(), error })
}

pub fn save_demo(demo: &Demonstration, path: impl AsRef<Path>) -> Result<(), IoError> {
    write(path.as_ref(), &demo_to_string(demo))
}

/// All `*.json` files of a directory, in file-name order.
pub fn load_demo_dir(dir: impl AsRef<Path>) -> Result<Vec<(PathBuf, Demonstration)>, IoError> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|source| IoError::Fs { path: dir.into(), source })?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|source| IoError::Fs { path: dir.into(), source })?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(IoError::EmptyDirectory { path: dir.into() });
    }
    paths.sort();
    paths.into_iter().map(|p| load_demo(&p).map(|d| (p, d))).collect()
}

/// Writes `demos` as `demo_000.json`, `demo_001.json`, ... into `dir`.
pub fn save_demo_dir(demos: &[Demonstration], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, IoError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| IoError::Fs { path: dir.into(), source })?;
    let width = demos.len().saturating_sub(1).to_string().len().max(3);
    demos
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let path = dir.join(format!("demo_{i:0width$}.json"));
            save_demo(d, &path).map(|_| path)
        })
        .collect()
}

/// On-disk form of an [`Inventory`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InventoryDocument {
    pub schema_version: u64,
    pub space: Space,
    pub items: Vec<InventoryItem>,
    #[serde(default)]
    pub fixed_objects: Vec<SceneObject>,
}

impl InventoryDocument {
    pub fn from_inventory(inv: &Inventory) -> Self {
        InventoryDocument {
            schema_version: SCHEMA_VERSION,
            space: inv.space,
            items: inv.items.clone(),
            fixed_objects: inv.fixed_objects.clone(),
        }
    }

    pub fn into_inventory(self) -> Result<Inventory, DocumentError> {
        if self.space.validate().is_err() {
            return Err(DocumentError::schema("space", "x_min < x_max and y_min < y_max required"));
        }
        for (i, item) in self.items.iter().enumerate() {
            for (field, v) in [("l", item.l), ("w", item.w)] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(DocumentError::schema(format!("items[{i}].{field}"), "extent must be positive"));
                }
            }
            if item.count == 0 {
                return Err(DocumentError::schema(format!("items[{i}].count"), "must be at least 1"));
            }
        }
        for (i, o) in self.fixed_objects.iter().enumerate() {
            check_object(o, &format!("fixed_objects[{i}]"))?;
        }
        let inv = Inventory { space: self.space, items: self.items, fixed_objects: self.fixed_objects };
        inv.validate().map_err(|e| DocumentError::schema("", e.to_string()))?;
        Ok(inv)
    }
}

pub fn inventory_from_str(text: &str) -> Result<Inventory, DocumentError> {
    decode::<InventoryDocument>(text)?.into_inventory()
}

pub fn inventory_from_value(value: Value) -> Result<Inventory, DocumentError> {
    decode_value::<InventoryDocument>(value)?.into_inventory()
}

pub fn inventory_to_string(inv: &Inventory) -> String {
    encode(&InventoryDocument::from_inventory(inv))
}

pub fn load_inventory(path: impl AsRef<Path>) -> Result<Inventory, IoError> {
    let path = path.as_ref();
    inventory_from_str(&read(path)?).map_err(|error| IoError::Document { path: path.into(), error })
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<Spec, IoError> {
    let path = path.as_ref();
    parse_spec(&read(path)?).map_err(|error| IoError::Spec { path: path.into(), error })
}

/// Spec file text: one clause per line in canonical order.
pub fn spec_to_string(spec: &Spec) -> String {
    let mut text = print_spec(spec);
    if !text.is_empty() {
        text.push('\n');
    }
    text
}

pub fn save_spec(spec: &Spec, path: impl AsRef<Path>) -> Result<(), IoError> {
    write(path.as_ref(), &spec_to_string(spec))
}

/// Everything needed to audit an inference run. Contains no timings, so
/// identical inputs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceReport {
    pub schema_version: u64,
    pub template: Template,
    pub params: InferenceParams,
    pub tau: f64,
    pub demonstrations: usize,
    pub spec_text: String,
    pub stats: InferenceStats,
    pub reports: Vec<CandidateReport>,
}

impl InferenceReport {
    pub fn new(
        inference: &Inference,
        template: &Template,
        params: &InferenceParams,
        tau: f64,
        demonstrations: usize,
    ) -> Self {
        InferenceReport {
            schema_version: SCHEMA_VERSION,
            template: template.clone(),
            params: *params,
            tau,
            demonstrations,
            spec_text: spec_to_string(&inference.spec),
            stats: inference.stats.clone(),
            reports: inference.reports.clone(),
        }
    }
}

pub fn report_to_string(report: &InferenceReport) -> String {
    encode(report)
}

pub fn report_from_str(text: &str) -> Result<InferenceReport, DocumentError> {
    decode(text)
}

pub fn save_report(report: &InferenceReport, path: impl AsRef<Path>) -> Result<(), IoError> {
    write(path.as_ref(), &report_to_string(report))
}
