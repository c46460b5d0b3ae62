//! The executable case-pack record: one driver update linked to the kernel
//! change that triggered it, self-contained enough for offline replay.
//!
//! On disk a case pack is a UTF-8 JSON object with exactly these keys:
//! `message`, `files`, `patch`, `hash`, `kernel-hash`, `type`, `contents`,
//! and optionally `link` and `description`. A directory of packs plus an
//! `index.json` file constitutes a corpus.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::udiff;

/// Fine-grained maintenance intent of a driver commit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FineLabel {
    Deprecation,
    Transfer,
    Rename,
    Removal,
    Simplification,
    Optimisation,
    Security,
    Regression,
    Hygiene,
}

impl FineLabel {
    pub const ALL: [FineLabel; 9] = [
        FineLabel::Deprecation,
        FineLabel::Transfer,
        FineLabel::Rename,
        FineLabel::Removal,
        FineLabel::Simplification,
        FineLabel::Optimisation,
        FineLabel::Security,
        FineLabel::Regression,
        FineLabel::Hygiene,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FineLabel::Deprecation => "deprecation",
            FineLabel::Transfer => "transfer",
            FineLabel::Rename => "rename",
            FineLabel::Removal => "removal",
            FineLabel::Simplification => "simplification",
            FineLabel::Optimisation => "optimisation",
            FineLabel::Security => "security",
            FineLabel::Regression => "regression",
            FineLabel::Hygiene => "hygiene",
        }
    }
}

impl fmt::Display for FineLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown label: {0}")]
pub struct UnknownLabel(pub String);

impl FromStr for FineLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FineLabel::ALL
            .iter()
            .find(|l| l.as_str() == s)
            .copied()
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

/// Consolidated coarse category. `optimisation_like` is a reserved third
/// value so the enum can absorb a future split without a schema change; the
/// consolidation rule never produces it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoarseLabel {
    ApiMigration,
    Regression,
    OptimisationLike,
}

impl CoarseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoarseLabel::ApiMigration => "api_migration",
            CoarseLabel::Regression => "regression",
            CoarseLabel::OptimisationLike => "optimisation_like",
        }
    }
}

impl fmt::Display for CoarseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoarseLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "api_migration" => Ok(CoarseLabel::ApiMigration),
            "regression" => Ok(CoarseLabel::Regression),
            "optimisation_like" => Ok(CoarseLabel::OptimisationLike),
            other => Err(UnknownLabel(other.to_string())),
        }
    }
}

/// Collapse a fine label into its coarse category: the four API-disappearance
/// labels and the four behaviour-preserving improvement labels both land in
/// `api_migration`; `regression` is retained as-is.
pub fn consolidate_label(fine: FineLabel) -> CoarseLabel {
    match fine {
        FineLabel::Deprecation
        | FineLabel::Removal
        | FineLabel::Rename
        | FineLabel::Transfer
        | FineLabel::Optimisation
        | FineLabel::Hygiene
        | FineLabel::Simplification
        | FineLabel::Security => CoarseLabel::ApiMigration,
        FineLabel::Regression => CoarseLabel::Regression,
    }
}

/// Where a label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelOrigin {
    Human,
    Propagated,
}

/// Taxonomy label attached to a case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyLabel {
    pub coarse: CoarseLabel,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fine: Option<FineLabel>,
    pub confidence: f64,
    pub origin: LabelOrigin,
}

impl TaxonomyLabel {
    /// Human label derived from a fine category: coarse is consolidated and
    /// confidence is pinned to 1.0.
    pub fn human(fine: FineLabel) -> Self {
        TaxonomyLabel {
            coarse: consolidate_label(fine),
            fine: Some(fine),
            confidence: 1.0,
            origin: LabelOrigin::Human,
        }
    }

    pub fn propagated(coarse: CoarseLabel, confidence: f64) -> Self {
        TaxonomyLabel {
            coarse,
            fine: None,
            confidence,
            origin: LabelOrigin::Propagated,
        }
    }

    pub fn validate(&self) -> Result<(), CasePackError> {
        if !(0.0..=1.0).contains(&self.confidence) || !self.confidence.is_finite() {
            return Err(CasePackError::InvariantViolation(format!(
                "label confidence {} outside [0,1]",
                self.confidence
            )));
        }
        if self.origin == LabelOrigin::Human && self.confidence != 1.0 {
            return Err(CasePackError::InvariantViolation(
                "human-origin label must have confidence 1.0".into(),
            ));
        }
        match self.fine {
            Some(
                FineLabel::Deprecation | FineLabel::Transfer | FineLabel::Rename | FineLabel::Removal,
            ) if self.coarse != CoarseLabel::ApiMigration => {
                Err(CasePackError::InvariantViolation(format!(
                    "fine label {} requires coarse api_migration",
                    self.fine.unwrap()
                )))
            }
            Some(FineLabel::Regression) if self.coarse != CoarseLabel::Regression => {
                Err(CasePackError::InvariantViolation(
                    "fine label regression requires coarse regression".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

/// Named runtime check sets a patched driver must satisfy: functional
/// invariants and security invariants, as declared oracle id lists.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationPlan {
    pub functional_checks: Vec<String>,
    pub security_checks: Vec<String>,
}

impl ValidationPlan {
    pub fn validate(&self) -> Result<(), CasePackError> {
        let mut seen = std::collections::BTreeSet::new();
        for id in self.functional_checks.iter().chain(&self.security_checks) {
            if !seen.insert(id) {
                return Err(CasePackError::InvariantViolation(format!(
                    "duplicate check id {id:?} in validation plan"
                )));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.functional_checks.is_empty() && self.security_checks.is_empty()
    }
}

/// One executable kernel-to-driver co-evolution record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasePack {
    /// Driver commit message.
    pub message: String,
    /// Modified driver source files, repo-relative.
    pub files: Vec<String>,
    /// Unified diff of the driver update.
    pub patch: String,
    /// Driver commit hash (40 lowercase hex).
    pub hash: String,
    /// Triggering kernel commit hash (40 lowercase hex).
    pub kernel_hash: String,
    pub type_label: TaxonomyLabel,
    /// Full pre-update source text per file. Files created by the patch map
    /// to the empty string.
    pub contents: BTreeMap<String, String>,
    pub link: Option<String>,
    pub description: Option<String>,
}

#[derive(Debug, Error)]
pub enum CasePackError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

fn is_commit_hash(s: &str) -> bool {
    s.len() == 40
        && s.chars()
            .all(|c| c.is_ascii_digit() || ('a'..='f').contains(&c))
}

impl CasePack {
    /// Check every record invariant: hash shapes, file/contents closure,
    /// patch syntax, and the label rules.
    pub fn validate(&self) -> Result<(), CasePackError> {
        if !is_commit_hash(&self.hash) {
            return Err(CasePackError::InvariantViolation(format!(
                "hash {:?} is not 40 lowercase hex chars",
                self.hash
            )));
        }
        if !is_commit_hash(&self.kernel_hash) {
            return Err(CasePackError::InvariantViolation(format!(
                "kernel-hash {:?} is not 40 lowercase hex chars",
                self.kernel_hash
            )));
        }
        if self.hash == self.kernel_hash {
            return Err(CasePackError::InvariantViolation(
                "hash and kernel-hash must be distinct".into(),
            ));
        }
        self.type_label.validate()?;

        let diff = udiff::parse_diff(&self.patch)
            .map_err(|e| CasePackError::InvariantViolation(format!("patch does not parse: {e}")))?;
        let verdict = udiff::validate_diff_syntax(&diff);
        if !verdict.passed() {
            return Err(CasePackError::InvariantViolation(format!(
                "patch fails syntax validation: {}",
                verdict
                    .violations
                    .iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; ")
            )));
        }
        for path in diff.touched_paths() {
            if !self.files.iter().any(|f| f == &path) {
                return Err(CasePackError::InvariantViolation(format!(
                    "patch touches {path:?} which is absent from files"
                )));
            }
        }
        for file in &self.files {
            if !self.contents.contains_key(file) {
                return Err(CasePackError::InvariantViolation(format!(
                    "file {file:?} has no entry in contents"
                )));
            }
        }
        Ok(())
    }
}

fn take_string(obj: &Map<String, Value>, key: &str) -> Result<String, CasePackError> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(CasePackError::SchemaViolation(format!(
            "{key}: expected string"
        ))),
        None => Err(CasePackError::SchemaViolation(key.to_string())),
    }
}

fn take_opt_string(obj: &Map<String, Value>, key: &str) -> Result<Option<String>, CasePackError> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(CasePackError::SchemaViolation(format!(
            "{key}: expected string"
        ))),
        None => Ok(None),
    }
}

fn parse_label(value: &Value) -> Result<TaxonomyLabel, CasePackError> {
    let obj = value
        .as_object()
        .ok_or_else(|| CasePackError::SchemaViolation("type: expected object".into()))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "coarse" | "fine" | "confidence" | "origin") {
            return Err(CasePackError::SchemaViolation(format!(
                "type.{key}: unknown key"
            )));
        }
    }
    let coarse = take_string(obj, "coarse")
        .map_err(|_| CasePackError::SchemaViolation("type.coarse".into()))?
        .parse::<CoarseLabel>()
        .map_err(|e| CasePackError::SchemaViolation(format!("type.coarse: {e}")))?;
    let fine = match obj.get("fine") {
        Some(Value::String(s)) => Some(
            s.parse::<FineLabel>()
                .map_err(|e| CasePackError::SchemaViolation(format!("type.fine: {e}")))?,
        ),
        Some(Value::Null) | None => None,
        Some(_) => {
            return Err(CasePackError::SchemaViolation(
                "type.fine: expected string".into(),
            ))
        }
    };
    let confidence = obj
        .get("confidence")
        .and_then(Value::as_f64)
        .ok_or_else(|| CasePackError::SchemaViolation("type.confidence".into()))?;
    let origin = match take_string(obj, "origin")
        .map_err(|_| CasePackError::SchemaViolation("type.origin".into()))?
        .as_str()
    {
        "human" => LabelOrigin::Human,
        "propagated" => LabelOrigin::Propagated,
        other => {
            return Err(CasePackError::SchemaViolation(format!(
                "type.origin: unknown value {other:?}"
            )))
        }
    };
    Ok(TaxonomyLabel {
        coarse,
        fine,
        confidence,
        origin,
    })
}

/// Parse one case-pack JSON document. Unknown keys are rejected; all record
/// invariants are checked before the pack is returned.
pub fn parse_case_pack(raw: &[u8]) -> Result<CasePack, CasePackError> {
    let value: Value = serde_json::from_slice(raw)
        .map_err(|e| CasePackError::MalformedDocument(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CasePackError::MalformedDocument("top level is not an object".into()))?;

    const KNOWN: &[&str] = &[
        "message",
        "files",
        "patch",
        "hash",
        "kernel-hash",
        "type",
        "contents",
        "link",
        "description",
    ];
    for key in obj.keys() {
        if !KNOWN.contains(&key.as_str()) {
            return Err(CasePackError::SchemaViolation(format!(
                "{key}: unknown key"
            )));
        }
    }

    let files = match obj.get("files") {
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| CasePackError::SchemaViolation("files: expected strings".into()))
            })
            .collect::<Result<Vec<_>, _>>()?,
        Some(_) => return Err(CasePackError::SchemaViolation("files: expected array".into())),
        None => return Err(CasePackError::SchemaViolation("files".into())),
    };
    let contents = match obj.get("contents") {
        Some(Value::Object(map)) => {
            let mut out = BTreeMap::new();
            for (k, v) in map {
                let text = v.as_str().ok_or_else(|| {
                    CasePackError::SchemaViolation(format!("contents.{k}: expected string"))
                })?;
                out.insert(k.clone(), text.to_string());
            }
            out
        }
        Some(_) => {
            return Err(CasePackError::SchemaViolation(
                "contents: expected object".into(),
            ))
        }
        None => return Err(CasePackError::SchemaViolation("contents".into())),
    };
    let label = parse_label(
        obj.get("type")
            .ok_or_else(|| CasePackError::SchemaViolation("type".into()))?,
    )?;

    let pack = CasePack {
        message: take_string(obj, "message")?,
        files,
        patch: take_string(obj, "patch")?,
        hash: take_string(obj, "hash")?,
        kernel_hash: take_string(obj, "kernel-hash")?,
        type_label: label,
        contents,
        link: take_opt_string(obj, "link")?,
        description: take_opt_string(obj, "description")?,
    };
    pack.validate()?;
    Ok(pack)
}

fn label_to_value(label: &TaxonomyLabel) -> Value {
    let mut obj = Map::new();
    obj.insert("coarse".into(), json!(label.coarse.as_str()));
    if let Some(fine) = label.fine {
        obj.insert("fine".into(), json!(fine.as_str()));
    }
    obj.insert("confidence".into(), json!(label.confidence));
    obj.insert(
        "origin".into(),
        json!(match label.origin {
            LabelOrigin::Human => "human",
            LabelOrigin::Propagated => "propagated",
        }),
    );
    Value::Object(obj)
}

/// Serialize a case pack to its canonical JSON form: sorted keys, two-space
/// indentation, trailing newline, optional keys omitted entirely when absent.
/// `parse_case_pack(serialize_case_pack(cp)) == cp` for every valid pack.
pub fn serialize_case_pack(cp: &CasePack) -> Vec<u8> {
    // serde_json maps are BTree-backed, so insertion order is irrelevant and
    // the output keys come out sorted.
    let mut obj = Map::new();
    obj.insert("message".into(), json!(cp.message));
    obj.insert("files".into(), json!(cp.files));
    obj.insert("patch".into(), json!(cp.patch));
    obj.insert("hash".into(), json!(cp.hash));
    obj.insert("kernel-hash".into(), json!(cp.kernel_hash));
    obj.insert("type".into(), label_to_value(&cp.type_label));
    obj.insert("contents".into(), json!(cp.contents));
    if let Some(link) = &cp.link {
        obj.insert("link".into(), json!(link));
    }
    if let Some(description) = &cp.description {
        obj.insert("description".into(), json!(description));
    }
    let mut bytes = serde_json::to_vec_pretty(&Value::Object(obj)).expect("json serialization");
    bytes.push(b'\n');
    bytes
}

/// One corpus index entry: pack filename, driver hash, coarse category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub file: String,
    pub hash: String,
    pub coarse: CoarseLabel,
}

/// Index of a case-pack corpus directory.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CorpusIndex {
    pub entries: Vec<IndexEntry>,
}

impl CorpusIndex {
    pub const FILE_NAME: &'static str = "index.json";

    pub fn save(&self, dir: &Path) -> std::io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("json serialization");
        bytes.push(b'\n');
        std::fs::write(dir.join(Self::FILE_NAME), bytes)
    }

    pub fn load(dir: &Path) -> Result<Self, CasePackError> {
        let bytes = std::fs::read(dir.join(Self::FILE_NAME))
            .map_err(|e| CasePackError::MalformedDocument(format!("index: {e}")))?;
        serde_json::from_slice(&bytes)
            .map_err(|e| CasePackError::MalformedDocument(format!("index: {e}")))
    }
}

/// Load every pack listed in a corpus index, in index order.
pub fn load_corpus(dir: &Path) -> Result<Vec<CasePack>, CasePackError> {
    let index = CorpusIndex::load(dir)?;
    index
        .entries
        .iter()
        .map(|entry| {
            let bytes = std::fs::read(dir.join(&entry.file)).map_err(|e| {
                CasePackError::MalformedDocument(format!("{}: {e}", entry.file))
            })?;
            parse_case_pack(&bytes)
        })
        .collect()
}
