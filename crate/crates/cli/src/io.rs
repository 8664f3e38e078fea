//! On-disk formats.
//!
//! A dataset archive is a directory holding `events.csv`, `surveys.jsonl`,
//! `schema.json` and a `manifest.json`. Text outputs start with a
//! `# config_hash=<hex>` comment line; readers skip `#` lines.

use crate::error::{CliError, CliResult};
use memimprint::domain::{
    AlterAnswer, Channel, Dataset, Event, ParticipantId, Question, QuestionSchema, SurveyResponse,
    Timestamp,
};
use memimprint::evaluation::{CellRecord, EvalReport, ModelSummary, ReportKind, SentinelStats};
use memimprint::groundtruth::GroundTruthRanking;
use memimprint::metrics::RboConfig;
use memimprint::synthdata::LatentTruth;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const EVENTS_FILE: &str = "events.csv";
pub const SURVEYS_FILE: &str = "surveys.jsonl";
pub const SCHEMA_FILE: &str = "schema.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LATENT_FILE: &str = "latent_truth.csv";
pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRIALS_FILE: &str = "trials.jsonl";

const EVENTS_HEADER: [&str; 5] = ["timestamp", "sender", "receiver", "channel", "length"];
const RECORDS_HEADER: [&str; 6] = ["fold", "semester", "ego", "model", "rbo", "truth_len"];

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn hash_line(hash: &str) -> String {
    format!("# config_hash={hash}\n")
}

fn json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn channel_name(c: Channel) -> &'static str {
    match c {
        Channel::Call => "call",
        Channel::Text => "text",
    }
}

/// Event rows dropped at ingest, by reason.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Rejections {
    pub counts: BTreeMap<String, usize>,
    /// Up to 20 (line, reason) examples.
    pub examples: Vec<(usize, String)>,
}

impl Rejections {
    fn add(&mut self, line: usize, reason: String) {
        let key = reason.split(' ').take(2).collect::<Vec<_>>().join(" ");
        *self.counts.entry(key).or_default() += 1;
        if self.examples.len() < 20 {
            self.examples.push((line, reason));
        }
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

/// Reads a CDR-style event CSV. Malformed rows are parse errors; rows on a
/// filtered channel or with sender = receiver are rejected and counted.
pub fn parse_events(text: &str, origin: &str) -> CliResult<(Vec<Event>, Rejections)> {
    let mut events = Vec::new();
    let mut rejected = Rejections::default();
    let mut header_seen = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if !header_seen {
            if fields != EVENTS_HEADER {
                return Err(CliError::Parse(format!(
                    "{origin} line {line}: expected header {:?}, found {row:?}",
                    EVENTS_HEADER.join(",")
                )));
            }
            header_seen = true;
            continue;
        }
        let bad = |what: &str| CliError::Parse(format!("{origin} line {line}: {what} in {row:?}"));
        if fields.len() != EVENTS_HEADER.len() {
            return Err(bad(&format!("expected 5 fields, found {}", fields.len())));
        }
        let ts: i64 = fields[0].parse().map_err(|_| bad("bad timestamp"))?;
        let sender: ParticipantId = fields[1].parse().map_err(|_| bad("bad sender"))?;
        let receiver: ParticipantId = fields[2].parse().map_err(|_| bad("bad receiver"))?;
        let length: u64 = fields[4].parse().map_err(|_| bad("bad length"))?;
        let channel: Channel = match fields[3].parse() {
            Ok(c) => c,
            Err(_) => {
                rejected.add(line, format!("filtered channel {:?}", fields[3]));
                continue;
            }
        };
        match Event::new(Timestamp(ts), sender, receiver, channel, length) {
            Ok(e) => events.push(e),
            Err(e) => rejected.add(line, invalid_reason(&e)),
        }
    }
    if !header_seen {
        return Err(CliError::Parse(format!("{origin}: missing header")));
    }
    Ok((events, rejected))
}

fn invalid_reason(err: &memimprint::Error) -> String {
    match err {
        memimprint::Error::Validation(msg) => format!("invalid row: {msg}"),
        other => format!("invalid row: {other}"),
    }
}

pub fn format_events(events: &[Event], hash: &str) -> String {
    let mut out = hash_line(hash);
    out.push_str(&EVENTS_HEADER.join(","));
    out.push('\n');
    for e in events {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            e.timestamp.0,
            e.sender,
            e.receiver,
            channel_name(e.channel),
            e.length
        );
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlterLine {
    alter: ParticipantId,
    #[serde(default)]
    answers: BTreeMap<String, u32>,
    duration: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurveyLine {
    ego: ParticipantId,
    survey_time: Timestamp,
    semester: u32,
    alters: Vec<AlterLine>,
}

/// One JSON object per (ego, survey time).
pub fn parse_surveys(text: &str, origin: &str) -> CliResult<Vec<SurveyResponse>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let s: SurveyLine = serde_json::from_str(row)
            .map_err(|e| CliError::Parse(format!("{origin} line {}: {e}", i + 1)))?;
        out.push(SurveyResponse {
            ego: s.ego,
            survey_time: s.survey_time,
            semester_index: s.semester,
            alters: s
                .alters
                .into_iter()
                .map(|a| AlterAnswer {
                    alter: a.alter,
                    graded_answers: a.answers,
                    duration: a.duration,
                })
                .collect(),
        });
    }
    Ok(out)
}

pub fn format_surveys(surveys: &[SurveyResponse], hash: &str) -> String {
    let mut out = hash_line(hash);
    for s in surveys {
        let line = SurveyLine {
            ego: s.ego,
            survey_time: s.survey_time,
            semester: s.semester_index,
            alters: s
                .alters
                .iter()
                .map(|a| AlterLine {
                    alter: a.alter,
                    answers: a.graded_answers.clone(),
                    duration: a.duration,
                })
                .collect(),
        };
        out.push_str(&serde_json::to_string(&line).expect("serializable"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SchemaFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
    questions: Vec<Question>,
}

pub fn parse_schema(text: &str, origin: &str) -> CliResult<QuestionSchema> {
    let f: SchemaFile =
        serde_json::from_str(text).map_err(|e| CliError::Parse(format!("{origin}: {e}")))?;
    Ok(QuestionSchema::new(f.questions)?)
}

pub fn format_schema(schema: &QuestionSchema, hash: &str) -> String {
    json_pretty(&SchemaFile {
        config_hash: Some(hash.to_string()),
        questions: schema.questions.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub config_hash: String,
    pub events: usize,
    pub surveys: usize,
    pub egos: usize,
    #[serde(default)]
    pub rejected: Rejections,
}

/// Writes a dataset archive into `dir`.
pub fn write_archive(dir: &Path, dataset: &Dataset, hash: &str, rejected: &Rejections) -> CliResult<()> {
    write_text(&dir.join(EVENTS_FILE), &format_events(dataset.events(), hash))?;
    write_text(&dir.join(SURVEYS_FILE), &format_surveys(dataset.surveys(), hash))?;
    write_text(&dir.join(SCHEMA_FILE), &format_schema(dataset.schema(), hash))?;
    let manifest = Manifest {
        name: dataset.name.clone(),
        config_hash: hash.to_string(),
        events: dataset.events().len(),
        surveys: dataset.surveys().len(),
        egos: dataset.egos().len(),
        rejected: rejected.clone(),
    };
    write_text(&dir.join(MANIFEST_FILE), &json_pretty(&manifest))
}

/// Loads a dataset from three files.
pub fn load_dataset(
    name: &str,
    events: &Path,
    surveys: &Path,
    schema: &Path,
) -> CliResult<(Dataset, Rejections)> {
    let (ev, rejected) = parse_events(&read_text(events)?, &events.display().to_string())?;
    let sv = parse_surveys(&read_text(surveys)?, &surveys.display().to_string())?;
    let sc = parse_schema(&read_text(schema)?, &schema.display().to_string())?;
    Ok((Dataset::new(name, ev, sv, sc)?, rejected))
}

/// Loads an archive directory; the name comes from its manifest, or the
/// directory name when there is none.
pub fn read_archive(dir: &Path) -> CliResult<Dataset> {
    if !dir.is_dir() {
        return Err(CliError::Config(format!("{}: not a dataset directory", dir.display())));
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    let name = if manifest_path.exists() {
        let m: Manifest = serde_json::from_str(&read_text(&manifest_path)?)
            .map_err(|e| CliError::Parse(format!("{}: {e}", manifest_path.display())))?;
        m.name
    } else {
        dir.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    };
    let (d, rejected) = load_dataset(
        &name,
        &dir.join(EVENTS_FILE),
        &dir.join(SURVEYS_FILE),
        &dir.join(SCHEMA_FILE),
    )?;
    if rejected.total() > 0 {
        log::warn!("{}: {} event rows rejected", dir.display(), rejected.total());
    }
    Ok(d)
}

pub fn format_latent(truth: &LatentTruth, hash: &str) -> String {
    let mut out = hash_line(hash);
    out.push_str("ego,alter,semester,strength\n");
    for ((ego, alter, sem), s) in truth {
        let _ = writeln!(out, "{ego},{alter},{sem},{s}");
    }
    out
}

pub fn parse_latent(text: &str) -> CliResult<LatentTruth> {
    let mut out = LatentTruth::new();
    for (i, row) in text.lines().enumerate() {
        if row.starts_with('#') || row.starts_with("ego,") || row.trim().is_empty() {
            continue;
        }
        let bad = || CliError::Parse(format!("latent truth line {}: {row:?}", i + 1));
        let f: Vec<&str> = row.split(',').collect();
        if f.len() != 4 {
            return Err(bad());
        }
        out.insert(
            (
                f[0].parse().map_err(|_| bad())?,
                f[1].parse().map_err(|_| bad())?,
                f[2].parse().map_err(|_| bad())?,
            ),
            f[3].parse().map_err(|_| bad())?,
        );
    }
    Ok(out)
}

pub fn format_ground_truth(
    rankings: &BTreeMap<(ParticipantId, Timestamp), GroundTruthRanking>,
    hash: &str,
) -> String {
    let mut out = hash_line(hash);
    for r in rankings.values() {
        out.push_str(&serde_json::to_string(r).expect("serializable"));
        out.push('\n');
    }
    out
}

pub fn format_records(records: &[CellRecord], hash: &str) -> String {
    let mut out = hash_line(hash);
    out.push_str(&RECORDS_HEADER.join(","));
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.fold, r.semester, r.ego, r.model, r.rbo, r.truth_len
        );
    }
    out
}

pub fn parse_records(text: &str, origin: &str) -> CliResult<Vec<CellRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    reader
        .deserialize()
        .map(|r| r.map_err(|e| CliError::Parse(format!("{origin}: {e}"))))
        .collect()
}

/// Summary file of one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub config_hash: String,
    pub kind: ReportKind,
    pub label: String,
    pub rbo: RboConfig,
    pub sentinel: SentinelStats,
    /// Sorted by final score, best first.
    pub models: Vec<ModelSummary>,
}

impl SummaryFile {
    pub fn from_report(report: &EvalReport, hash: &str) -> Self {
        let mut models = report.summaries.clone();
        models.sort_by(|a, b| b.final_score.total_cmp(&a.final_score).then(a.model.cmp(&b.model)));
        SummaryFile {
            config_hash: hash.to_string(),
            kind: report.kind,
            label: report.label.clone(),
            rbo: report.rbo,
            sentinel: report.sentinel,
            models,
        }
    }
}

pub fn format_trials(report: &EvalReport, hash: &str) -> String {
    let mut out = hash_line(hash);
    for t in &report.tuning {
        out.push_str(&serde_json::to_string(t).expect("serializable"));
        out.push('\n');
    }
    out
}

/// Writes records, summary and trial log into `dir`; returns their paths.
pub fn write_report(dir: &Path, report: &EvalReport, hash: &str) -> CliResult<Vec<PathBuf>> {
    let paths = vec![dir.join(RECORDS_FILE), dir.join(SUMMARY_FILE), dir.join(TRIALS_FILE)];
    write_text(&paths[0], &format_records(&report.records, hash))?;
    write_text(&paths[1], &json_pretty(&SummaryFile::from_report(report, hash)))?;
    write_text(&paths[2], &format_trials(report, hash))?;
    Ok(paths)
}

pub fn read_summary(path: &Path) -> CliResult<SummaryFile> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Reads a ranked list file: one id per line, best first.
pub fn parse_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect()
}
