//! GitHub commit-history client: paginated listing, lazy per-commit stats,
//! bounded-parallel fetching, rate-limit backoff, incremental cache writes.

use std::collections::HashSet;
use std::path::Path;
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, TimeZone, Utc};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::ingest::cache::{append_cache, read_cache, CachedCommit};

#[derive(Debug, Clone)]
pub struct GithubClient {
    base_url: String,
    token: Option<String>,
    /// Where the token came from, for actionable auth errors.
    token_source: String,
    /// Parallel per-commit stat requests.
    pub concurrency: usize,
    /// Attempts per request before giving up on rate limits or server errors.
    pub max_retries: u32,
    /// Base backoff between retries; doubled per attempt.
    pub backoff: Duration,
    /// Commits per listing page.
    pub page_size: usize,
    http: reqwest::blocking::Client,
}

impl GithubClient {
    pub fn new(token: Option<String>, token_source: &str) -> GithubClient {
        GithubClient {
            base_url: "https://api.github.com".to_string(),
            token,
            token_source: token_source.to_string(),
            concurrency: 4,
            max_retries: 3,
            backoff: Duration::from_secs(2),
            page_size: 100,
            http: reqwest::blocking::Client::builder()
                .user_agent("repo-lifecycle")
                .timeout(Duration::from_secs(30))
                .build()
                .expect("default TLS backend available"),
        }
    }

    /// Point the client at a different API root (fixture servers in tests).
    pub fn with_base_url(mut self, base_url: impl Into<String>) -> GithubClient {
        self.base_url = base_url.into();
        self
    }

    fn get(&self, repo: &str, url: &str) -> Result<reqwest::blocking::Response> {
        let mut attempt = 0;
        loop {
            let mut req = self
                .http
                .get(url)
                .header("Accept", "application/vnd.github+json");
            if let Some(token) = &self.token {
                req = req.header("Authorization", format!("Bearer {token}"));
            }
            let resp = req.send().map_err(|e| Error::Http {
                url: url.to_string(),
                message: e.to_string(),
            })?;
            let status = resp.status();
            if status.is_success() {
                return Ok(resp);
            }
            match status.as_u16() {
                401 => {
                    let hint = match &self.token {
                        Some(_) => format!("token from {} was rejected", self.token_source),
                        None => "no token provided; set GITHUB_TOKEN or pass --token".to_string(),
                    };
                    return Err(Error::AuthFailed {
                        repo: repo.to_string(),
                        hint,
                    });
                }
                404 => {
                    return Err(Error::RepoNotFound {
                        repo: repo.to_string(),
                    })
                }
                403 | 429 if rate_limited(&resp) => {
                    let reset = reset_time(&resp);
                    attempt += 1;
                    if attempt > self.max_retries {
                        return Err(Error::RateLimited {
                            repo: repo.to_string(),
                            reset,
                        });
                    }
                    std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
                }
                500..=599 => {
                    attempt += 1;
                    if attempt > self.max_retries {
                        return Err(Error::Http {
                            url: url.to_string(),
                            message: format!("server error {status} after {attempt} attempts"),
                        });
                    }
                    std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
                }
                // GitHub answers 409 for a repository with no commits
                409 => {
                    return Err(Error::Http {
                        url: url.to_string(),
                        message: "empty repository".to_string(),
                    });
                }
                _ => {
                    return Err(Error::Http {
                        url: url.to_string(),
                        message: format!("unexpected status {status}"),
                    })
                }
            }
        }
    }

    /// List commit summaries, following pagination until a short page.
    fn list_commits(&self, repo: &str, since: Option<DateTime<Utc>>) -> Result<Vec<ListedCommit>> {
        let mut out = Vec::new();
        let mut page = 1;
        loop {
            let mut url = format!(
                "{}/repos/{}/commits?per_page={}&page={}",
                self.base_url, repo, self.page_size, page
            );
            if let Some(since) = since {
                url.push_str(&format!("&since={}", since.to_rfc3339()));
            }
            let resp = match self.get(repo, &url) {
                Ok(r) => r,
                Err(Error::Http { message, .. }) if message == "empty repository" => {
                    return Ok(Vec::new())
                }
                Err(e) => return Err(e),
            };
            let batch: Vec<ListedCommit> = resp.json().map_err(|e| Error::Http {
                url: url.clone(),
                message: format!("invalid listing payload: {e}"),
            })?;
            let short = batch.len() < self.page_size;
            out.extend(batch);
            if short {
                return Ok(out);
            }
            page += 1;
        }
    }

    /// Fetch one commit's line stats.
    fn commit_detail(&self, repo: &str, sha: &str) -> Result<CachedCommit> {
        let url = format!("{}/repos/{}/commits/{}", self.base_url, repo, sha);
        let resp = self.get(repo, &url)?;
        let detail: CommitDetail = resp.json().map_err(|e| Error::Http {
            url,
            message: format!("invalid commit payload: {e}"),
        })?;
        Ok(detail.into_cached())
    }

    /// Fetch every commit of `repo`, updating the cache at `cache_path`.
    ///
    /// Commits already cached (by sha) are not re-fetched; new commits get
    /// their stats pulled with `concurrency` parallel requests and are
    /// appended to the cache as results arrive, so an interrupted run
    /// resumes where it stopped. Returns the full cached history. The
    /// result is the same when run twice — the second run finds nothing
    /// new to fetch.
    pub fn fetch_commits(
        &self,
        repo: &str,
        cache_path: &Path,
        since: Option<DateTime<Utc>>,
    ) -> Result<Vec<CachedCommit>> {
        let mut cached = if cache_path.exists() {
            read_cache(cache_path)?
        } else {
            append_cache(cache_path, &[])?; // materialize an empty cache file
            Vec::new()
        };
        let known: HashSet<String> = cached.iter().map(|c| c.sha.clone()).collect();
        let listed = self.list_commits(repo, since)?;
        let todo: Vec<String> = listed
            .into_iter()
            .map(|c| c.sha)
            .filter(|sha| !known.contains(sha))
            .collect();
        if todo.is_empty() {
            cached.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.sha.cmp(&b.sha)));
            return Ok(cached);
        }

        let queue = Arc::new(Mutex::new(todo));
        let (tx, rx) = mpsc::channel::<Result<CachedCommit>>();
        let workers = self.concurrency.max(1);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                let queue = Arc::clone(&queue);
                let tx = tx.clone();
                scope.spawn(move || loop {
                    let sha = { queue.lock().expect("queue lock").pop() };
                    let Some(sha) = sha else { break };
                    let result = self.commit_detail(repo, &sha);
                    let failed = result.is_err();
                    if tx.send(result).is_err() || failed {
                        break;
                    }
                });
            }
            drop(tx);
            // single writer: results are appended as they arrive
            let mut first_error = None;
            for result in rx {
                match result {
                    Ok(commit) => {
                        append_cache(cache_path, std::slice::from_ref(&commit))?;
                        cached.push(commit);
                    }
                    Err(e) => {
                        // drain remaining work so the workers stop
                        queue.lock().expect("queue lock").clear();
                        first_error.get_or_insert(e);
                    }
                }
            }
            match first_error {
                Some(e) => Err(e),
                None => Ok(()),
            }
        })?;
        cached.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then(a.sha.cmp(&b.sha)));
        Ok(cached)
    }
}

fn rate_limited(resp: &reqwest::blocking::Response) -> bool {
    resp.headers()
        .get("x-ratelimit-remaining")
        .and_then(|v| v.to_str().ok())
        .map(|v| v == "0")
        .unwrap_or(false)
        || resp.status().as_u16() == 429
}

fn reset_time(resp: &reqwest::blocking::Response) -> DateTime<Utc> {
    resp.headers()
        .get("x-ratelimit-reset")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<i64>().ok())
        .and_then(|secs| Utc.timestamp_opt(secs, 0).single())
        .unwrap_or_else(Utc::now)
}

#[derive(Deserialize)]
struct ListedCommit {
    sha: String,
}

#[derive(Deserialize)]
struct CommitDetail {
    sha: String,
    commit: CommitMeta,
    #[serde(default)]
    stats: Stats,
}

#[derive(Deserialize)]
struct CommitMeta {
    author: Option<Signature>,
    committer: Option<Signature>,
}

#[derive(Deserialize)]
struct Signature {
    #[serde(default)]
    name: String,
    #[serde(default)]
    email: String,
    date: Option<DateTime<Utc>>,
}

#[derive(Deserialize, Default)]
struct Stats {
    #[serde(default)]
    additions: u64,
    #[serde(default)]
    deletions: u64,
}

impl CommitDetail {
    fn into_cached(self) -> CachedCommit {
        // author date is the bucketing timestamp; committer only as fallback
        let author = self.commit.author.as_ref();
        let committer = self.commit.committer.as_ref();
        let timestamp = author
            .and_then(|s| s.date)
            .or_else(|| committer.and_then(|s| s.date))
            .unwrap_or_else(Utc::now);
        CachedCommit {
            sha: self.sha,
            author_name: author.map(|s| s.name.clone()).unwrap_or_default(),
            author_email: author.map(|s| s.email.clone()).unwrap_or_default(),
            timestamp,
            additions: self.stats.additions,
            deletions: self.stats.deletions,
        }
    }
}
