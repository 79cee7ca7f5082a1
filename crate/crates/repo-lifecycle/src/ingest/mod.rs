//! Commit acquisition and monthly aggregation.
//!
//! Commits arrive either from the GitHub REST API ([`GithubClient`]) or
//! from a cache file written by an earlier fetch; both paths produce
//! [`CommitRecord`]s that [`aggregate_monthly`] buckets into the
//! [`MonthlySeries`] every model consumes.

mod author;
mod cache;
mod github;

pub use author::{canonicalize_author, BotPatterns, CanonicalAuthor};
pub use cache::{append_cache, load_commit_log, read_cache, read_cache_from, CachedCommit};
pub use github::GithubClient;

use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Utc};

use crate::month::Month;
use crate::series::MonthlySeries;

/// One commit, author identity already canonicalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitRecord {
    pub sha: String,
    pub author_id: String,
    pub author_is_bot: bool,
    pub timestamp: DateTime<Utc>,
    /// Lines added, non-negative by construction.
    pub additions: u64,
    /// Lines deleted, non-negative by construction.
    pub deletions: u64,
}

impl CommitRecord {
    /// Lines changed: additions plus deletions, both counted as work done.
    pub fn lines_changed(&self) -> u64 {
        self.additions + self.deletions
    }
}

/// Aggregation policy.
#[derive(Debug, Clone)]
pub struct AggregateOptions {
    /// Drop commits whose author is flagged as a bot. The models describe
    /// human engagement, so this defaults on.
    pub exclude_bots: bool,
    /// Drop commits after this month and pad the series out to it.
    pub cutoff: Option<Month>,
}

impl Default for AggregateOptions {
    fn default() -> Self {
        AggregateOptions {
            exclude_bots: true,
            cutoff: None,
        }
    }
}

/// Bucket commits into a monthly series.
///
/// Commits are bucketed by the UTC calendar month of their author
/// timestamp. Per month: the developer count is the number of distinct
/// canonical author ids, and lines changed is the sum of additions plus
/// deletions over all commits (merge commits count like any other). The
/// series runs contiguously from the first commit month, interior quiet
/// months present with zeros, and ends at the last commit month or the
/// cutoff. An empty input (or one that filters down to empty) gives an
/// empty series.
pub fn aggregate_monthly(
    project: impl Into<String>,
    commits: &[CommitRecord],
    opts: &AggregateOptions,
) -> MonthlySeries {
    let project = project.into();
    let mut buckets: BTreeMap<Month, (HashSet<&str>, u64)> = BTreeMap::new();
    for commit in commits {
        if opts.exclude_bots && commit.author_is_bot {
            continue;
        }
        let month = Month::containing(commit.timestamp);
        if opts.cutoff.is_some_and(|cutoff| month > cutoff) {
            continue;
        }
        let entry = buckets.entry(month).or_default();
        entry.0.insert(&commit.author_id);
        entry.1 += commit.lines_changed();
    }
    let Some((&first, _)) = buckets.first_key_value() else {
        return MonthlySeries::empty(project);
    };
    let &last = buckets.last_key_value().expect("non-empty").0;
    let mut developers = Vec::new();
    let mut lines = Vec::new();
    for month in first.range_inclusive(last) {
        match buckets.get(&month) {
            Some((devs, dl)) => {
                developers.push(devs.len() as u32);
                lines.push(*dl);
            }
            None => {
                developers.push(0);
                lines.push(0);
            }
        }
    }
    let mut series = MonthlySeries::from_monthly(project, first, developers, lines);
    if let Some(cutoff) = opts.cutoff {
        series.extend_to(cutoff);
    }
    series
}
