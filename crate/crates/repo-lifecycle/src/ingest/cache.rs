//! Commit cache: one JSON object per line, append-only.
//!
//! Fields per line: `sha`, `author_name`, `author_email`, `timestamp`
//! (RFC 3339 UTC), `additions`, `deletions`. The cache stores raw author
//! fields; canonicalization happens when records are loaded, so identity
//! policy changes never require a re-fetch.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::author::{canonicalize_author, BotPatterns};
use crate::ingest::CommitRecord;

/// One cache line: a commit with raw author identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedCommit {
    pub sha: String,
    pub author_name: String,
    pub author_email: String,
    pub timestamp: DateTime<Utc>,
    pub additions: u64,
    pub deletions: u64,
}

impl CachedCommit {
    pub fn canonicalize(&self, bots: &BotPatterns) -> CommitRecord {
        let author = canonicalize_author(&self.author_name, &self.author_email, bots);
        CommitRecord {
            sha: self.sha.clone(),
            author_id: author.id,
            author_is_bot: author.is_bot,
            timestamp: self.timestamp,
            additions: self.additions,
            deletions: self.deletions,
        }
    }
}

/// Raw line shape; validated into [`CachedCommit`] with field-level errors.
#[derive(Deserialize)]
struct RawLine {
    sha: Option<String>,
    author_name: Option<String>,
    author_email: Option<String>,
    timestamp: Option<String>,
    additions: Option<i64>,
    deletions: Option<i64>,
}

fn parse_line(path: &str, line_no: usize, line: &str) -> Result<CachedCommit> {
    let err = |message: String| Error::Parse {
        path: path.to_string(),
        line: line_no,
        message,
    };
    let raw: RawLine = serde_json::from_str(line).map_err(|e| err(format!("invalid JSON: {e}")))?;
    let sha = raw
        .sha
        .filter(|s| !s.is_empty())
        .ok_or_else(|| err("missing field 'sha'".into()))?;
    let ts_raw = raw
        .timestamp
        .ok_or_else(|| err("missing field 'timestamp'".into()))?;
    let timestamp = DateTime::parse_from_rfc3339(&ts_raw)
        .map_err(|_| err(format!("unparseable timestamp '{ts_raw}'")))?
        .with_timezone(&Utc);
    let non_negative = |v: Option<i64>, name: &str| -> Result<u64> {
        let v = v.ok_or_else(|| err(format!("missing field '{name}'")))?;
        u64::try_from(v).map_err(|_| err(format!("field '{name}' must be non-negative, got {v}")))
    };
    Ok(CachedCommit {
        sha,
        author_name: raw.author_name.unwrap_or_default(),
        author_email: raw.author_email.unwrap_or_default(),
        timestamp,
        additions: non_negative(raw.additions, "additions")?,
        deletions: non_negative(raw.deletions, "deletions")?,
    })
}

/// Read a cache file. Blank lines are skipped; malformed lines are errors
/// with their line number; duplicate shas keep the first occurrence.
pub fn read_cache(path: &Path) -> Result<Vec<CachedCommit>> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    read_cache_from(&path.display().to_string(), BufReader::new(file))
}

pub fn read_cache_from<R: BufRead>(path: &str, reader: R) -> Result<Vec<CachedCommit>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Io {
            path: path.to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let commit = parse_line(path, idx + 1, &line)?;
        if seen.insert(commit.sha.clone()) {
            out.push(commit);
        }
    }
    Ok(out)
}

/// Load and canonicalize a commit log.
pub fn load_commit_log(path: &Path, bots: &BotPatterns) -> Result<Vec<CommitRecord>> {
    Ok(read_cache(path)?
        .iter()
        .map(|c| c.canonicalize(bots))
        .collect())
}

/// Append commits to a cache file, creating it if needed.
pub fn append_cache(path: &Path, commits: &[CachedCommit]) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for c in commits {
        serde_json::to_writer(&mut w, c).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e),
        })?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
