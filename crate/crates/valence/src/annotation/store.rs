//! Annotation state and its append-only record log.
//!
//! Every mutation is one JSON line appended to `<data-dir>/annotations.jsonl`
//! and synced to disk before it is applied in memory, so the in-memory state
//! is always a replay of the log. A torn final line (a crash mid-write, never
//! acknowledged) is dropped on reload.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use valence_core::metrics::{accuracy_of, committee_aggregate, fleiss_kappa, roc_auc, RatingMatrix};
use valence_core::Sign;

use crate::manifest::sha256_hex;

pub const LOG_FILE: &str = "annotations.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceConfig {
    pub folds: u32,
    /// Annotations per item used for agreement statistics.
    pub min_annotations: usize,
    /// Answers needed to be ranked on the leaderboard.
    pub min_answers: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { folds: 5, min_annotations: 4, min_answers: 10 }
    }
}

/// One line of `items.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemSpec {
    pub item_id: String,
    pub media_ref: String,
    pub choices: Vec<String>,
    pub ground_truth: String,
}

/// What a client sees of an item before answering it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PublicItem {
    pub item_id: String,
    pub dataset: String,
    pub media_ref: String,
    pub choices: Vec<String>,
    pub fold: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Session { dataset: String, annotator_id: String, fold: u32, timestamp_ms: u64 },
    Answer { dataset: String, annotator_id: String, item_id: String, guess: String, correct: bool, timestamp_ms: u64 },
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown item `{0}`")]
    UnknownItem(String),
    #[error("item `{0}` is not in this session's fold")]
    NotInFold(String),
    #[error("item `{0}` was already answered in this session")]
    AlreadyAnswered(String),
    #[error("`{0}` is not one of the item's choices")]
    InvalidChoice(String),
    #[error("annotator id must be 1 to 64 printable characters")]
    InvalidAnnotator,
    #[error("dataset `{0}` has no annotations")]
    NoData(String),
    #[error("storage: {0}")]
    Storage(#[from] io::Error),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownDataset(_) => "UnknownDataset",
            ServiceError::UnknownSession(_) => "UnknownSession",
            ServiceError::UnknownItem(_) => "UnknownItem",
            ServiceError::NotInFold(_) => "NotInFold",
            ServiceError::AlreadyAnswered(_) => "AlreadyAnswered",
            ServiceError::InvalidChoice(_) => "InvalidChoice",
            ServiceError::InvalidAnnotator => "InvalidAnnotator",
            ServiceError::NoData(_) => "NoData",
            ServiceError::Storage(_) => "Storage",
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Invalid { path: PathBuf, line: usize, message: String },
}

struct Dataset {
    items: Vec<ItemSpec>,
    index: HashMap<String, usize>,
    folds: Vec<u32>,
    /// Answers per item, across all sessions.
    counts: Vec<usize>,
    /// Answer records of this dataset, in log order.
    answers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionState {
    pub session_id: String,
    pub annotator_id: String,
    pub dataset: String,
    pub answered: usize,
    pub correct: usize,
    pub assigned_fold: u32,
    pub running_accuracy: f64,
}

struct Session {
    annotator_id: String,
    dataset: String,
    fold: u32,
    answered: HashSet<String>,
    correct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerResult {
    pub correct: bool,
    pub running_accuracy: f64,
    pub answered: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoardEntry {
    pub rank: Option<usize>,
    pub annotator_id: String,
    pub accuracy: f64,
    pub answered: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leaderboard {
    pub dataset: String,
    pub min_answers: usize,
    pub ranked: Vec<BoardEntry>,
    pub unranked: Vec<BoardEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotatorScore {
    pub annotator_id: String,
    pub accuracy: f64,
    pub answered: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HumanStats {
    pub dataset: String,
    pub answers: usize,
    pub annotators: Vec<AnnotatorScore>,
    pub mean_accuracy: f64,
    /// Population standard deviation of per-annotator accuracy.
    pub std_accuracy: f64,
    pub kappa: Option<f64>,
    /// Items with at least `kappa_raters` answers; the first that many count.
    pub kappa_items: usize,
    pub kappa_raters: usize,
    pub committee_items: usize,
    pub committee_accuracy: f64,
    /// Only for two-choice datasets whose answered items include both truths.
    pub committee_auc: Option<f64>,
}

/// Session ids are derived from the dataset and annotator, so a returning
/// annotator gets the same session.
pub fn session_id(dataset: &str, annotator_id: &str) -> String {
    sha256_hex(format!("{dataset}\n{annotator_id}").as_bytes())[..32].to_string()
}

/// Fold of an item: a stable hash of its id.
pub fn item_fold(item_id: &str, folds: u32) -> u32 {
    let hex = sha256_hex(item_id.as_bytes());
    (u64::from_str_radix(&hex[..16], 16).expect("hex digest") % u64::from(folds)) as u32
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn valid_annotator(id: &str) -> bool {
    (1..=64).contains(&id.chars().count()) && !id.chars().any(char::is_control)
}

pub struct Service {
    config: ServiceConfig,
    datasets: BTreeMap<String, Dataset>,
    sessions: HashMap<String, Session>,
    records: Vec<LogRecord>,
    log: Option<File>,
}

impl Service {
    /// An empty service without persistence.
    pub fn in_memory(config: ServiceConfig) -> Self {
        Service { config, datasets: BTreeMap::new(), sessions: HashMap::new(), records: Vec::new(), log: None }
    }

    pub fn config(&self) -> ServiceConfig {
        self.config
    }

    pub fn add_dataset(&mut self, name: &str, mut items: Vec<ItemSpec>) -> Result<(), String> {
        items.sort_by(|a, b| a.item_id.cmp(&b.item_id));
        let mut index = HashMap::new();
        for (i, item) in items.iter().enumerate() {
            if index.insert(item.item_id.clone(), i).is_some() {
                return Err(format!("duplicate item id `{}`", item.item_id));
            }
            if !item.choices.contains(&item.ground_truth) {
                return Err(format!("item `{}`: ground truth is not a choice", item.item_id));
            }
        }
        let folds = items.iter().map(|it| item_fold(&it.item_id, self.config.folds)).collect();
        let counts = vec![0; items.len()];
        self.datasets.insert(name.into(), Dataset { items, index, folds, counts, answers: Vec::new() });
        Ok(())
    }

    /// Loads every `<data-dir>/datasets/<name>/items.jsonl`, then replays the record log.
    pub fn open(data_dir: &Path, config: ServiceConfig) -> Result<Self, LoadError> {
        let mut service = Service::in_memory(config);
        let root = data_dir.join("datasets");
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| LoadError::Io { path, source }
        };
        let mut names = Vec::new();
        if root.is_dir() {
            for entry in fs::read_dir(&root).map_err(io_err(&root))? {
                let entry = entry.map_err(io_err(&root))?;
                if entry.path().join("items.jsonl").is_file() {
                    names.push(entry.file_name().to_string_lossy().into_owned());
                }
            }
        }
        names.sort();
        for name in names {
            let path = root.join(&name).join("items.jsonl");
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let mut items = Vec::new();
            for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let item = serde_json::from_str(line).map_err(|e| LoadError::Invalid {
                    path: path.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                items.push(item);
            }
            service.add_dataset(&name, items).map_err(|message| LoadError::Invalid {
                path: path.clone(),
                line: 0,
                message,
            })?;
        }

        let log_path = data_dir.join(LOG_FILE);
        if log_path.exists() {
            service.replay(&log_path)?;
        }
        fs::create_dir_all(data_dir).map_err(io_err(data_dir))?;
        let file = OpenOptions::new().create(true).append(true).open(&log_path).map_err(io_err(&log_path))?;
        service.log = Some(file);
        Ok(service)
    }

    fn replay(&mut self, path: &Path) -> Result<(), LoadError> {
        let io_err = |source| LoadError::Io { path: path.to_path_buf(), source };
        let file = File::open(path).map_err(io_err)?;
        let mut reader = BufReader::new(file);
        let mut line = String::new();
        let mut offset = 0u64;
        let mut number = 0;
        loop {
            line.clear();
            let n = reader.read_line(&mut line).map_err(io_err)?;
            if n == 0 {
                break;
            }
            number += 1;
            if !line.ends_with('\n') {
                // Torn write from a crash: the record was never acknowledged.
                OpenOptions::new().write(true).open(path).and_then(|f| f.set_len(offset)).map_err(io_err)?;
                break;
            }
            let record: LogRecord = serde_json::from_str(&line).map_err(|e| LoadError::Invalid {
                path: path.to_path_buf(),
                line: number,
                message: e.to_string(),
            })?;
            self.apply(record).map_err(|e| LoadError::Invalid {
                path: path.to_path_buf(),
                line: number,
                message: e.to_string(),
            })?;
            offset += n as u64;
        }
        Ok(())
    }

    fn persist(&mut self, record: &LogRecord) -> Result<(), ServiceError> {
        if let Some(file) = self.log.as_mut() {
            let mut line = serde_json::to_string(record).expect("records serialize");
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.sync_data()?;
        }
        Ok(())
    }

    /// Applies a record that has already passed validation or came from the log.
    fn apply(&mut self, record: LogRecord) -> Result<(), ServiceError> {
        match &record {
            LogRecord::Session { dataset, annotator_id, fold, .. } => {
                if !self.datasets.contains_key(dataset) {
                    return Err(ServiceError::UnknownDataset(dataset.clone()));
                }
                self.sessions.entry(session_id(dataset, annotator_id)).or_insert_with(|| Session {
                    annotator_id: annotator_id.clone(),
                    dataset: dataset.clone(),
                    fold: *fold,
                    answered: HashSet::new(),
                    correct: 0,
                });
            }
            LogRecord::Answer { dataset, annotator_id, item_id, correct, .. } => {
                let sid = session_id(dataset, annotator_id);
                let session = self.sessions.get_mut(&sid).ok_or(ServiceError::UnknownSession(sid))?;
                if !session.answered.insert(item_id.clone()) {
                    return Err(ServiceError::AlreadyAnswered(item_id.clone()));
                }
                session.correct += usize::from(*correct);
                let ds = self.datasets.get_mut(dataset).ok_or_else(|| ServiceError::UnknownDataset(dataset.clone()))?;
                let idx = *ds.index.get(item_id).ok_or_else(|| ServiceError::UnknownItem(item_id.clone()))?;
                ds.counts[idx] += 1;
                ds.answers.push(self.records.len());
            }
        }
        self.records.push(record);
        Ok(())
    }

    pub fn datasets(&self) -> Vec<(String, usize, Vec<String>)> {
        self.datasets
            .iter()
            .map(|(name, ds)| {
                let mut choices: Vec<String> = Vec::new();
                for item in &ds.items {
                    for c in &item.choices {
                        if !choices.contains(c) {
                            choices.push(c.clone());
                        }
                    }
                }
                (name.clone(), ds.items.len(), choices)
            })
            .collect()
    }

    fn state(&self, sid: &str) -> Result<SessionState, ServiceError> {
        let s = self.sessions.get(sid).ok_or_else(|| ServiceError::UnknownSession(sid.into()))?;
        let answered = s.answered.len();
        Ok(SessionState {
            session_id: sid.into(),
            annotator_id: s.annotator_id.clone(),
            dataset: s.dataset.clone(),
            answered,
            correct: s.correct,
            assigned_fold: s.fold,
            running_accuracy: if answered == 0 { 0.0 } else { s.correct as f64 / answered as f64 },
        })
    }

    pub fn session(&self, sid: &str) -> Result<SessionState, ServiceError> {
        self.state(sid)
    }

    /// Binds an annotator to the fold with the fewest annotators (lowest index
    /// on ties). A returning annotator resumes their session.
    pub fn create_session(&mut self, annotator_id: &str, dataset: &str) -> Result<SessionState, ServiceError> {
        if !valid_annotator(annotator_id) {
            return Err(ServiceError::InvalidAnnotator);
        }
        if !self.datasets.contains_key(dataset) {
            return Err(ServiceError::UnknownDataset(dataset.into()));
        }
        let sid = session_id(dataset, annotator_id);
        if !self.sessions.contains_key(&sid) {
            let mut per_fold = vec![0usize; self.config.folds as usize];
            for s in self.sessions.values().filter(|s| s.dataset == dataset) {
                if let Some(c) = per_fold.get_mut(s.fold as usize) {
                    *c += 1;
                }
            }
            let fold = (0..per_fold.len()).min_by_key(|&f| (per_fold[f], f)).unwrap_or(0) as u32;
            let record = LogRecord::Session {
                dataset: dataset.into(),
                annotator_id: annotator_id.into(),
                fold,
                timestamp_ms: now_ms(),
            };
            self.persist(&record)?;
            self.apply(record)?;
        }
        self.state(&sid)
    }

    /// The unanswered item of the session's fold with the fewest annotations,
    /// ties broken by item id; `None` when the fold is exhausted.
    pub fn next_item(&self, sid: &str) -> Result<Option<PublicItem>, ServiceError> {
        let s = self.sessions.get(sid).ok_or_else(|| ServiceError::UnknownSession(sid.into()))?;
        let ds = &self.datasets[&s.dataset];
        let best = (0..ds.items.len())
            .filter(|&i| ds.folds[i] == s.fold && !s.answered.contains(&ds.items[i].item_id))
            .min_by(|&a, &b| {
                ds.counts[a].cmp(&ds.counts[b]).then_with(|| ds.items[a].item_id.cmp(&ds.items[b].item_id))
            });
        Ok(best.map(|i| {
            let item = &ds.items[i];
            PublicItem {
                item_id: item.item_id.clone(),
                dataset: s.dataset.clone(),
                media_ref: item.media_ref.clone(),
                choices: item.choices.clone(),
                fold: ds.folds[i],
            }
        }))
    }

    /// Records a guess durably, then updates the running score.
    pub fn submit_answer(&mut self, sid: &str, item_id: &str, guess: &str) -> Result<AnswerResult, ServiceError> {
        let s = self.sessions.get(sid).ok_or_else(|| ServiceError::UnknownSession(sid.into()))?;
        let ds = &self.datasets[&s.dataset];
        let idx = *ds.index.get(item_id).ok_or_else(|| ServiceError::UnknownItem(item_id.into()))?;
        if ds.folds[idx] != s.fold {
            return Err(ServiceError::NotInFold(item_id.into()));
        }
        if s.answered.contains(item_id) {
            return Err(ServiceError::AlreadyAnswered(item_id.into()));
        }
        let item = &ds.items[idx];
        if !item.choices.iter().any(|c| c == guess) {
            return Err(ServiceError::InvalidChoice(guess.into()));
        }
        let correct = item.ground_truth == guess;
        let record = LogRecord::Answer {
            dataset: s.dataset.clone(),
            annotator_id: s.annotator_id.clone(),
            item_id: item_id.into(),
            guess: guess.into(),
            correct,
            timestamp_ms: now_ms(),
        };
        self.persist(&record)?;
        self.apply(record)?;
        let state = self.state(sid)?;
        Ok(AnswerResult { correct, running_accuracy: state.running_accuracy, answered: state.answered })
    }

    fn scores(&self, dataset: &str) -> Vec<AnnotatorScore> {
        let mut scores: Vec<AnnotatorScore> = self
            .sessions
            .values()
            .filter(|s| s.dataset == dataset && !s.answered.is_empty())
            .map(|s| AnnotatorScore {
                annotator_id: s.annotator_id.clone(),
                accuracy: s.correct as f64 / s.answered.len() as f64,
                answered: s.answered.len(),
            })
            .collect();
        scores.sort_by(|a, b| {
            b.accuracy
                .total_cmp(&a.accuracy)
                .then(b.answered.cmp(&a.answered))
                .then_with(|| a.annotator_id.cmp(&b.annotator_id))
        });
        scores
    }

    /// Accuracy descending, then answers descending, then id. Annotators
    /// below `min_answers` are listed unranked in the same order.
    pub fn leaderboard(&self, dataset: &str) -> Result<Leaderboard, ServiceError> {
        if !self.datasets.contains_key(dataset) {
            return Err(ServiceError::UnknownDataset(dataset.into()));
        }
        let min = self.config.min_answers;
        let (ranked, unranked): (Vec<_>, Vec<_>) = self.scores(dataset).into_iter().partition(|s| s.answered >= min);
        let entry = |(i, s): (usize, AnnotatorScore), ranked: bool| BoardEntry {
            rank: ranked.then_some(i + 1),
            annotator_id: s.annotator_id,
            accuracy: s.accuracy,
            answered: s.answered,
        };
        Ok(Leaderboard {
            dataset: dataset.into(),
            min_answers: min,
            ranked: ranked.into_iter().enumerate().map(|e| entry(e, true)).collect(),
            unranked: unranked.into_iter().enumerate().map(|e| entry(e, false)).collect(),
        })
    }

    pub fn human_stats(&self, dataset: &str) -> Result<HumanStats, ServiceError> {
        let ds = self.datasets.get(dataset).ok_or_else(|| ServiceError::UnknownDataset(dataset.into()))?;
        if ds.answers.is_empty() {
            return Err(ServiceError::NoData(dataset.into()));
        }
        let annotators = self.scores(dataset);
        let n = annotators.len() as f64;
        let mean = annotators.iter().map(|a| a.accuracy).sum::<f64>() / n;
        let var = annotators.iter().map(|a| (a.accuracy - mean).powi(2)).sum::<f64>() / n;

        // Guesses per item in log order, as choice indices.
        let mut guesses: Vec<Vec<usize>> = vec![Vec::new(); ds.items.len()];
        for &r in &ds.answers {
            if let LogRecord::Answer { item_id, guess, .. } = &self.records[r] {
                let idx = ds.index[item_id];
                let choice = ds.items[idx].choices.iter().position(|c| c == guess).expect("validated guess");
                guesses[idx].push(choice);
            }
        }

        let k = self.config.min_annotations.max(2);
        let categories = ds.items.iter().map(|i| i.choices.len()).max().unwrap_or(0);
        let rated: Vec<Vec<usize>> = guesses.iter().filter(|g| g.len() >= k).map(|g| g[..k].to_vec()).collect();
        let kappa = if rated.is_empty() {
            None
        } else {
            RatingMatrix::from_assignments(categories, &rated).and_then(|m| fleiss_kappa(&m)).ok()
        };

        let answered: Vec<usize> = (0..ds.items.len()).filter(|&i| !guesses[i].is_empty()).collect();
        let truth =
            |i: usize| ds.items[i].choices.iter().position(|c| *c == ds.items[i].ground_truth).expect("validated");
        let binary = ds.items.iter().all(|i| i.choices.len() == 2);
        let (committee_accuracy, committee_auc) = if binary {
            // The first choice is the positive class.
            let sign = |c: usize| if c == 0 { Sign::Plus } else { Sign::Minus };
            let per_item: Vec<Vec<Sign>> =
                answered.iter().map(|&i| guesses[i].iter().map(|&c| sign(c)).collect()).collect();
            let votes = committee_aggregate(&per_item).expect("every listed item has a guess");
            let truths: Vec<Sign> = answered.iter().map(|&i| sign(truth(i))).collect();
            let pairs: Vec<(Sign, Sign)> = votes.iter().map(|v| v.label).zip(truths.iter().copied()).collect();
            let scored: Vec<(f64, Sign)> = votes.iter().map(|v| v.score).zip(truths.iter().copied()).collect();
            (accuracy_of(&pairs).expect("non-empty"), roc_auc(&scored).ok())
        } else {
            // Plurality vote; ties go to the lowest choice index.
            let pairs: Vec<(usize, usize)> = answered
                .iter()
                .map(|&i| {
                    let mut counts = vec![0usize; ds.items[i].choices.len()];
                    for &g in &guesses[i] {
                        counts[g] += 1;
                    }
                    let top =
                        (0..counts.len()).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a))).expect("choices");
                    (top, truth(i))
                })
                .collect();
            (accuracy_of(&pairs).expect("non-empty"), None)
        };

        Ok(HumanStats {
            dataset: dataset.into(),
            answers: ds.answers.len(),
            annotators,
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
            kappa,
            kappa_items: rated.len(),
            kappa_raters: k,
            committee_items: answered.len(),
            committee_accuracy,
            committee_auc,
        })
    }

    /// Every record in log order.
    pub fn records(&self) -> &[LogRecord] {
        &self.records
    }
}
