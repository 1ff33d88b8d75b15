//! Case sessions with revision tokens, kept in memory and mirrored to a data
//! directory as canonical case documents.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use caseval_core::confidence::{compute_confidence, ConfidenceConfig, ConfidenceReport};
use caseval_core::io::{parse_case, serialize_case, CaseDocument, ParseMode};
use caseval_core::propagate::{assess, case_status, AssessmentMap, CaseStatus, VerdictChange};
use caseval_core::validate::{has_errors, validate_structure, Diagnostic};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tokio::sync::{Mutex, RwLock};

use crate::ops::{apply_ops, Op, Rejection};

/// Verdicts, status and confidence for one revision of a case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub assessments: AssessmentMap,
    pub status: CaseStatus,
    pub confidence: Option<ConfidenceReport>,
    /// Why confidence is missing, when it is.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence_error: Option<String>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Snapshot {
    pub fn of(doc: &CaseDocument) -> Result<Snapshot, Rejection> {
        let diagnostics = validate_structure(&doc.graph);
        if has_errors(&diagnostics) {
            return Err(Rejection { error: "case is not well formed".into(), diagnostics });
        }
        let (assessments, _) = assess(&doc.graph).map_err(|e| Rejection { error: e.to_string(), diagnostics: vec![] })?;
        let status = case_status(&doc.graph, &assessments);
        let config = ConfidenceConfig { overrides: doc.overrides.clone(), ..ConfidenceConfig::default() };
        let (confidence, confidence_error) = match compute_confidence(&doc.graph, &assessments, &config) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        };
        Ok(Snapshot { assessments, status, confidence, confidence_error, diagnostics })
    }
}

#[derive(Debug)]
pub struct Session {
    pub id: String,
    pub doc: CaseDocument,
    pub revision: u64,
    /// The in-memory state has not reached disk.
    pub dirty: bool,
    pub snapshot: Snapshot,
}

#[derive(Debug, Serialize)]
pub struct CaseSummary {
    pub id: String,
    pub name: String,
    pub revision: u64,
}

#[derive(Debug, PartialEq, Serialize)]
pub struct Preview {
    pub revision: u64,
    pub delta: Vec<VerdictChange>,
    pub snapshot: Snapshot,
}

#[derive(Debug)]
pub enum StoreError {
    NotFound(String),
    Exists(String),
    BadId(String),
    Stale { current: u64 },
    Rejected(Rejection),
    Io(String),
}

pub fn valid_case_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// All cases. Each case has its own lock, so edits to one case are applied
/// one at a time while other cases stay available.
#[derive(Debug, Default)]
pub struct Store {
    dir: Option<PathBuf>,
    cases: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
}

fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)
}

impl Store {
    /// A store that keeps nothing on disk.
    pub fn in_memory() -> Self {
        Store::default()
    }

    /// Opens `dir`, creating it if needed, and loads every `<id>.json` case
    /// in it with its `<id>.revision` counter.
    pub fn open(dir: impl Into<PathBuf>) -> anyhow::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let mut cases = BTreeMap::new();
        let mut entries: Vec<_> = std::fs::read_dir(&dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let path = entry.path();
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else { continue };
            if path.extension().and_then(|e| e.to_str()) != Some("json") || !valid_case_id(&id) {
                continue;
            }
            let text = std::fs::read_to_string(&path)?;
            let doc = parse_case(&text, ParseMode::Lenient).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            let revision = match std::fs::read_to_string(path.with_extension("revision")) {
                Ok(r) => r.trim().parse()?,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => 0,
                Err(e) => return Err(e.into()),
            };
            let snapshot = Snapshot::of(&doc).map_err(|r| anyhow::anyhow!("{}: {}", path.display(), r.error))?;
            let session = Session { id: id.clone(), doc, revision, dirty: false, snapshot };
            cases.insert(id, Arc::new(Mutex::new(session)));
        }
        Ok(Store { dir: Some(dir), cases: RwLock::new(cases) })
    }

    fn persist(&self, session: &mut Session) -> Result<(), StoreError> {
        let Some(dir) = &self.dir else {
            session.dirty = true;
            return Ok(());
        };
        let path = dir.join(format!("{}.json", session.id));
        let result = write_atomic(&path, &serialize_case(&session.doc))
            .and_then(|_| write_atomic(&path.with_extension("revision"), &format!("{}\n", session.revision)));
        session.dirty = result.is_err();
        result.map_err(|e| StoreError::Io(e.to_string()))
    }

    pub async fn list(&self) -> Vec<CaseSummary> {
        let cases = self.cases.read().await;
        let mut out = Vec::with_capacity(cases.len());
        for s in cases.values() {
            let s = s.lock().await;
            out.push(CaseSummary { id: s.id.clone(), name: s.doc.graph.metadata.name.clone(), revision: s.revision });
        }
        out
    }

    pub async fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, StoreError> {
        self.cases.read().await.get(id).cloned().ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    pub async fn create(&self, id: &str, doc: CaseDocument) -> Result<Arc<Mutex<Session>>, StoreError> {
        if !valid_case_id(id) {
            return Err(StoreError::BadId(id.to_string()));
        }
        let snapshot = Snapshot::of(&doc).map_err(StoreError::Rejected)?;
        let mut cases = self.cases.write().await;
        if cases.contains_key(id) {
            return Err(StoreError::Exists(id.to_string()));
        }
        let mut session = Session { id: id.to_string(), doc, revision: 0, dirty: true, snapshot };
        self.persist(&mut session)?;
        let session = Arc::new(Mutex::new(session));
        cases.insert(id.to_string(), session.clone());
        Ok(session)
    }

    /// Applies `ops` if `revision` is current. Returns the new revision's
    /// preview with the delta against the previous one.
    pub async fn mutate(&self, id: &str, revision: u64, ops: &[Op]) -> Result<Preview, StoreError> {
        let session = self.get(id).await?;
        let mut s = session.lock().await;
        if s.revision != revision {
            return Err(StoreError::Stale { current: s.revision });
        }
        let doc = apply_ops(&s.doc, ops).map_err(StoreError::Rejected)?;
        let snapshot = Snapshot::of(&doc).map_err(StoreError::Rejected)?;
        let delta = s.snapshot.assessments.delta(&snapshot.assessments);
        let previous = (std::mem::replace(&mut s.doc, doc), s.revision, s.snapshot.clone());
        s.revision += 1;
        s.snapshot = snapshot.clone();
        if let Err(e) = self.persist(&mut s) {
            (s.doc, s.revision, s.snapshot) = previous;
            return Err(e);
        }
        Ok(Preview { revision: s.revision, delta, snapshot })
    }

    /// What `mutate` would return, without changing anything.
    pub async fn preview(&self, id: &str, ops: &[Op]) -> Result<Preview, StoreError> {
        let session = self.get(id).await?;
        let s = session.lock().await;
        let doc = apply_ops(&s.doc, ops).map_err(StoreError::Rejected)?;
        let snapshot = Snapshot::of(&doc).map_err(StoreError::Rejected)?;
        let delta = s.snapshot.assessments.delta(&snapshot.assessments);
        Ok(Preview { revision: s.revision, delta, snapshot })
    }

    /// SHA-256 over every case's id, revision and canonical document.
    pub async fn digest(&self) -> String {
        let cases = self.cases.read().await;
        let mut h = Sha256::new();
        for s in cases.values() {
            let s = s.lock().await;
            h.update(s.id.as_bytes());
            h.update([0]);
            h.update(s.revision.to_le_bytes());
            h.update(serialize_case(&s.doc).as_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
