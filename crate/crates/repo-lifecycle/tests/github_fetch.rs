//! API-client integration against a local fixture server: pagination,
//! idempotent re-fetch, auth and rate-limit handling.

mod common;

use std::collections::HashSet;
use std::time::Duration;

use common::{commit_detail, listed_commit, page_of, FixtureServer};
use repo_lifecycle::error::Error;
use repo_lifecycle::ingest::{load_commit_log, read_cache, BotPatterns, GithubClient};

fn shas(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("sha{i:04}")).collect()
}

/// Serve `total` commits in listing pages of `page_size`, with stats
/// details for each.
fn paged_server(total: usize, page_size: usize) -> FixtureServer {
    let all = shas(total);
    FixtureServer::start(move |path| {
        if let Some(rest) = path.strip_prefix("/repos/o/r/commits/") {
            let sha = rest.split('?').next().unwrap_or(rest);
            let idx: usize = sha.trim_start_matches("sha").parse().unwrap_or(0);
            return (
                200,
                vec![],
                commit_detail(
                    sha,
                    "Dev A",
                    "dev@x.com",
                    &format!("2020-{:02}-15T10:00:00Z", (idx % 12) + 1),
                    10 + idx as u64,
                    idx as u64,
                ),
            );
        }
        if path.starts_with("/repos/o/r/commits") {
            let page = page_of(path);
            let start = (page - 1) * page_size;
            let entries: Vec<String> = all
                .iter()
                .skip(start)
                .take(page_size)
                .map(|sha| listed_commit(sha))
                .collect();
            return (200, vec![], format!("[{}]", entries.join(",")));
        }
        (404, vec![], r#"{"message":"Not Found"}"#.to_string())
    })
}

fn client(url: &str) -> GithubClient {
    let mut c = GithubClient::new(Some("test-token".into()), "test").with_base_url(url);
    c.backoff = Duration::from_millis(1);
    c
}

#[test]
fn three_pages_of_two_yield_six_unique_records() {
    let server = paged_server(6, 2);
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("o__r.jsonl");
    let mut c = client(server.url());
    c.page_size = 2;
    let commits = c.fetch_commits("o/r", &cache, None).unwrap();
    assert_eq!(commits.len(), 6);
    let unique: HashSet<&str> = commits.iter().map(|c| c.sha.as_str()).collect();
    assert_eq!(unique.len(), 6);
    // stats came from the detail endpoint
    assert!(commits.iter().any(|c| c.additions >= 10));
    // the cache file holds the same six records
    let log = load_commit_log(&cache, &BotPatterns::default()).unwrap();
    assert_eq!(log.len(), 6);
}

#[test]
fn refetch_is_idempotent_and_skips_detail_requests() {
    let server = paged_server(4, 100);
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("o__r.jsonl");
    let c = client(server.url());
    let first = c.fetch_commits("o/r", &cache, None).unwrap();
    let hits_after_first = server.hit_count();
    let second = c.fetch_commits("o/r", &cache, None).unwrap();
    assert_eq!(first, second);
    // second run only re-lists; the four detail requests are not repeated
    assert_eq!(server.hit_count(), hits_after_first + 1);
    let bytes_once = std::fs::read(&cache).unwrap();
    let third = c.fetch_commits("o/r", &cache, None).unwrap();
    assert_eq!(second, third);
    assert_eq!(std::fs::read(&cache).unwrap(), bytes_once);
}

#[test]
fn empty_repository_gives_empty_cache() {
    let server = FixtureServer::start(|path| {
        if path.starts_with("/repos/o/empty/commits") {
            (
                409,
                vec![],
                r#"{"message":"Git Repository is empty."}"#.into(),
            )
        } else {
            (404, vec![], "{}".into())
        }
    });
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("o__empty.jsonl");
    let commits = client(server.url())
        .fetch_commits("o/empty", &cache, None)
        .unwrap();
    assert!(commits.is_empty());
    assert!(cache.exists());
    assert_eq!(std::fs::read_to_string(&cache).unwrap(), "");
}

#[test]
fn auth_failure_names_the_credential_source() {
    let server = FixtureServer::start(|_| (401, vec![], r#"{"message":"Bad credentials"}"#.into()));
    let dir = tempfile::tempdir().unwrap();
    let mut c = GithubClient::new(Some("bad".into()), "GITHUB_TOKEN").with_base_url(server.url());
    c.backoff = Duration::from_millis(1);
    let err = c
        .fetch_commits("o/r", &dir.path().join("c.jsonl"), None)
        .unwrap_err();
    match &err {
        Error::AuthFailed { hint, .. } => assert!(hint.contains("GITHUB_TOKEN"), "{hint}"),
        other => panic!("expected AuthFailed, got {other:?}"),
    }
    assert_eq!(err.exit_class(), 3);

    let server = FixtureServer::start(|_| (401, vec![], "{}".into()));
    let mut c = GithubClient::new(None, "none").with_base_url(server.url());
    c.backoff = Duration::from_millis(1);
    let err = c
        .fetch_commits("o/r", &dir.path().join("c2.jsonl"), None)
        .unwrap_err();
    assert!(err.to_string().contains("no token provided"), "{err}");
}

#[test]
fn repo_not_found() {
    let server = FixtureServer::start(|_| (404, vec![], r#"{"message":"Not Found"}"#.into()));
    let dir = tempfile::tempdir().unwrap();
    let err = client(server.url())
        .fetch_commits("o/missing", &dir.path().join("c.jsonl"), None)
        .unwrap_err();
    assert!(matches!(err, Error::RepoNotFound { .. }), "{err:?}");
}

#[test]
fn rate_limit_retries_then_reports_reset_time() {
    const RESET: i64 = 1893456000; // 2030-01-01T00:00:00Z
    let server = FixtureServer::start(|_| {
        (
            403,
            vec![
                ("x-ratelimit-remaining".into(), "0".into()),
                ("x-ratelimit-reset".into(), RESET.to_string()),
            ],
            r#"{"message":"rate limit exceeded"}"#.into(),
        )
    });
    let dir = tempfile::tempdir().unwrap();
    let mut c = client(server.url());
    c.max_retries = 2;
    let err = c
        .fetch_commits("o/r", &dir.path().join("c.jsonl"), None)
        .unwrap_err();
    match &err {
        Error::RateLimited { reset, .. } => {
            assert_eq!(reset.timestamp(), RESET);
        }
        other => panic!("expected RateLimited, got {other:?}"),
    }
    // initial attempt plus two retries
    assert_eq!(server.hit_count(), 3);
    assert_eq!(err.exit_class(), 3);
}

#[test]
fn server_errors_are_retried() {
    use std::sync::atomic::{AtomicUsize, Ordering};
    let failures = AtomicUsize::new(0);
    let server = FixtureServer::start(move |path| {
        if path.starts_with("/repos/o/r/commits") && failures.fetch_add(1, Ordering::SeqCst) < 1 {
            (500, vec![], "{}".into())
        } else {
            (200, vec![], "[]".into())
        }
    });
    let dir = tempfile::tempdir().unwrap();
    let commits = client(server.url())
        .fetch_commits("o/r", &dir.path().join("c.jsonl"), None)
        .unwrap();
    assert!(commits.is_empty());
    assert_eq!(server.hit_count(), 2);
}

#[test]
fn since_is_forwarded() {
    use std::sync::{Arc, Mutex};
    let seen: Arc<Mutex<Vec<String>>> = Arc::default();
    let seen_server = Arc::clone(&seen);
    let server = FixtureServer::start(move |path| {
        seen_server.lock().unwrap().push(path.to_string());
        (200, vec![], "[]".into())
    });
    let dir = tempfile::tempdir().unwrap();
    let since = chrono::DateTime::parse_from_rfc3339("2021-06-01T00:00:00Z")
        .unwrap()
        .with_timezone(&chrono::Utc);
    client(server.url())
        .fetch_commits("o/r", &dir.path().join("c.jsonl"), Some(since))
        .unwrap();
    let paths = seen.lock().unwrap();
    assert!(paths[0].contains("since=2021-06-01T00:00:00"), "{paths:?}");
}

#[test]
fn cache_round_trip_preserves_multiset() {
    let server = paged_server(5, 100);
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("o__r.jsonl");
    let fetched = client(server.url())
        .fetch_commits("o/r", &cache, None)
        .unwrap();
    let reloaded = read_cache(&cache).unwrap();
    let mut a: Vec<String> = fetched.iter().map(|c| format!("{c:?}")).collect();
    let mut b: Vec<String> = reloaded.iter().map(|c| format!("{c:?}")).collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);
}
