mod common;

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use tvcpd_core::corpus::{ingest, Filters};
use tvcpd_core::guardian::GuardianClient;
use tvcpd_core::Error;

const PAGE1: &str = include_str!("fixtures/guardian_page1.json");
const PAGE2: &str = include_str!("fixtures/guardian_page2.json");
const EMPTY: &str = r#"{"response":{"status":"ok","total":0,"pages":0,"results":[]}}"#;

struct Reply {
    status: u16,
    headers: Vec<(&'static str, String)>,
    body: String,
}

fn ok(body: &str) -> Reply {
    Reply { status: 200, headers: vec![], body: body.into() }
}

/// Serves `replies` in order and records each request target.
fn serve(replies: Vec<Reply>) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = Arc::clone(&seen);
    thread::spawn(move || {
        for reply in replies {
            let Ok((mut stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            log.lock().unwrap().push(line.split(' ').nth(1).unwrap_or_default().to_string());
            loop {
                let mut h = String::new();
                if reader.read_line(&mut h).unwrap() == 0 || h == "\r\n" {
                    break;
                }
            }
            let mut head = format!(
                "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n",
                reply.status,
                reply.body.len()
            );
            for (k, v) in &reply.headers {
                head.push_str(&format!("{k}: {v}\r\n"));
            }
            head.push_str("\r\n");
            stream.write_all(head.as_bytes()).unwrap();
            stream.write_all(reply.body.as_bytes()).unwrap();
        }
    });
    (format!("http://{addr}"), seen)
}

fn client(base: &str) -> GuardianClient {
    let mut c = GuardianClient::new("test-key").unwrap();
    c.base_url = base.into();
    c.backoff = Duration::from_millis(1);
    c.max_retries = 3;
    c
}

fn may() -> (chrono::NaiveDate, chrono::NaiveDate) {
    (common::d("2015-05-01"), common::d("2015-05-07"))
}

#[test]
fn paginates_and_maps_fields() {
    let (base, seen) = serve(vec![ok(PAGE1), ok(PAGE2)]);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("uk.jsonl");
    assert_eq!(client(&base).fetch("uk-news", may(), &out).unwrap(), 5);

    let corpus = ingest(&out, &Filters::default()).unwrap();
    assert_eq!(corpus.len(), 5);
    let last = &corpus.documents()[4];
    assert_eq!(last.date, common::d("2015-05-07"));
    assert_eq!(last.category, "UK news");
    assert_eq!(last.title, "Polls close in general election");
    assert!(last.body.starts_with("Voters across the UK"));

    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 2);
    for (i, target) in seen.iter().enumerate() {
        assert!(target.starts_with("/search?"));
        for part in ["section=uk-news", "from-date=2015-05-01", "to-date=2015-05-07", "show-fields=bodyText", "api-key=test-key"] {
            assert!(target.contains(part), "{target} lacks {part}");
        }
        assert!(target.contains(&format!("page={}", i + 1)));
    }
}

#[test]
fn unauthorized_surfaces_body() {
    let body = r#"{"message":"Unauthorized"}"#;
    let (base, _) = serve(vec![Reply { status: 401, headers: vec![], body: body.into() }]);
    let dir = tempfile::tempdir().unwrap();
    match client(&base).fetch("uk-news", may(), dir.path().join("x.jsonl")) {
        Err(Error::Unauthorized { status, body: b }) => {
            assert_eq!(status, 401);
            assert_eq!(b, body);
        }
        other => panic!("expected unauthorized, got {other:?}"),
    }
}

#[test]
fn retries_rate_limits_and_server_errors() {
    let (base, seen) = serve(vec![
        Reply { status: 429, headers: vec![("Retry-After", "0".into())], body: "slow down".into() },
        Reply { status: 503, headers: vec![], body: "busy".into() },
        ok(PAGE1),
        ok(PAGE2),
    ]);
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(client(&base).fetch("uk-news", may(), dir.path().join("x.jsonl")).unwrap(), 5);
    assert_eq!(seen.lock().unwrap().len(), 4);
}

#[test]
fn gives_up_after_bounded_retries() {
    let fail = || Reply { status: 500, headers: vec![], body: "down".into() };
    let (base, seen) = serve(vec![fail(), fail(), fail(), fail()]);
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(client(&base).fetch("uk-news", may(), dir.path().join("x.jsonl")), Err(Error::Http(_))));
    assert_eq!(seen.lock().unwrap().len(), 4);
}

#[test]
fn empty_result_writes_empty_file() {
    let (base, _) = serve(vec![ok(EMPTY)]);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("none.jsonl");
    assert_eq!(client(&base).fetch("uk-news", may(), &out).unwrap(), 0);
    assert_eq!(std::fs::read(&out).unwrap(), b"");
}

#[test]
fn reversed_range_and_empty_key_fail_before_requests() {
    let (base, seen) = serve(vec![]);
    let dir = tempfile::tempdir().unwrap();
    let backwards = (common::d("2015-05-07"), common::d("2015-05-01"));
    assert!(matches!(
        client(&base).fetch("uk-news", backwards, dir.path().join("x.jsonl")),
        Err(Error::InvalidArgument(_))
    ));
    assert!(GuardianClient::new("  ").is_err());
    assert!(seen.lock().unwrap().is_empty());
}

#[test]
fn cache_replays_without_network() {
    let (base, _) = serve(vec![ok(PAGE1), ok(PAGE2)]);
    let dir = tempfile::tempdir().unwrap();
    let mut c = client(&base);
    c.cache_dir = Some(dir.path().join("cache"));
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    c.fetch("uk-news", may(), &a).unwrap();
    c.base_url = "http://127.0.0.1:9".into();
    c.max_retries = 0;
    c.fetch("uk-news", may(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
