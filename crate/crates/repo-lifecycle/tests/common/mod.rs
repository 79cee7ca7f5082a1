//! Minimal HTTP fixture server for exercising the API client without a
//! network. Serves canned responses from a routing closure; one connection
//! per request (`Connection: close`).
#![allow(dead_code)] // each test binary uses its own subset of helpers

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

pub type Response = (u16, Vec<(String, String)>, String);
pub type Router = dyn Fn(&str) -> Response + Send + Sync + 'static;

pub struct FixtureServer {
    base_url: String,
    hits: Arc<AtomicUsize>,
}

impl FixtureServer {
    /// Start serving on an ephemeral localhost port. The accept thread runs
    /// for the rest of the test process.
    pub fn start(route: impl Fn(&str) -> Response + Send + Sync + 'static) -> FixtureServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind fixture server");
        let addr = listener.local_addr().expect("local addr");
        let hits = Arc::new(AtomicUsize::new(0));
        let hits_thread = Arc::clone(&hits);
        let route: Arc<Router> = Arc::new(route);
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                hits_thread.fetch_add(1, Ordering::SeqCst);
                let route = Arc::clone(&route);
                std::thread::spawn(move || handle(stream, &route));
            }
        });
        FixtureServer {
            base_url: format!("http://{addr}"),
            hits,
        }
    }

    pub fn url(&self) -> &str {
        &self.base_url
    }

    pub fn hit_count(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn handle(mut stream: TcpStream, route: &Arc<Router>) {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 1024];
    while !buf.windows(4).any(|w| w == b"\r\n\r\n") {
        match stream.read(&mut chunk) {
            Ok(0) => return,
            Ok(n) => buf.extend_from_slice(&chunk[..n]),
            Err(_) => return,
        }
        if buf.len() > 64 * 1024 {
            return;
        }
    }
    let request = String::from_utf8_lossy(&buf);
    let path = request
        .lines()
        .next()
        .and_then(|line| line.split_whitespace().nth(1))
        .unwrap_or("/")
        .to_string();
    let (status, headers, body) = route(&path);
    let reason = match status {
        200 => "OK",
        401 => "Unauthorized",
        403 => "Forbidden",
        404 => "Not Found",
        409 => "Conflict",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        _ => "Response",
    };
    let mut out = format!("HTTP/1.1 {status} {reason}\r\n");
    for (k, v) in &headers {
        out.push_str(&format!("{k}: {v}\r\n"));
    }
    out.push_str(&format!(
        "Content-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
        body.len()
    ));
    out.push_str(&body);
    let _ = stream.write_all(out.as_bytes());
}

/// JSON for one listing entry.
pub fn listed_commit(sha: &str) -> String {
    format!(
        r#"{{"sha":"{sha}","commit":{{"author":{{"name":"Dev","email":"dev@x.com","date":"2020-01-01T00:00:00Z"}}}}}}"#
    )
}

/// JSON for one commit-detail response.
pub fn commit_detail(sha: &str, name: &str, email: &str, date: &str, add: u64, del: u64) -> String {
    format!(
        r#"{{"sha":"{sha}","commit":{{"author":{{"name":"{name}","email":"{email}","date":"{date}"}},"committer":{{"name":"{name}","email":"{email}","date":"{date}"}}}},"stats":{{"additions":{add},"deletions":{del},"total":{}}}}}"#,
        add + del
    )
}

/// Extract `page=N` from a query string, defaulting to 1.
pub fn page_of(path: &str) -> usize {
    path.split(['?', '&'])
        .find_map(|kv| kv.strip_prefix("page="))
        .and_then(|v| v.parse().ok())
        .unwrap_or(1)
}
