//! Fetch client for the Guardian content API.
//!
//! Articles are written in the corpus JSONL format without any filtering;
//! filters are applied later at ingest.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use chrono::NaiveDate;
use serde::Deserialize;

use crate::corpus::{write_jsonl, Document};
use crate::error::{Error, Result};

pub const DEFAULT_BASE_URL: &str = "https://content.guardianapis.com";
pub const API_KEY_ENV: &str = "GUARDIAN_API_KEY";

#[derive(Debug, Deserialize)]
struct Envelope {
    response: SearchResponse,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct SearchResponse {
    status: String,
    #[serde(default)]
    pages: u32,
    #[serde(default)]
    results: Vec<Article>,
    #[serde(default)]
    message: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Article {
    id: String,
    #[serde(default)]
    section_name: String,
    web_publication_date: String,
    web_title: String,
    #[serde(default)]
    fields: Fields,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Fields {
    #[serde(default)]
    body_text: String,
}

impl Article {
    fn into_document(self) -> Result<Document> {
        let day = self.web_publication_date.get(..10).unwrap_or_default();
        let date = NaiveDate::parse_from_str(day, "%Y-%m-%d").map_err(|e| {
            Error::Http(format!(
                "article `{}` has bad publication date `{}`: {e}",
                self.id, self.web_publication_date
            ))
        })?;
        Ok(Document {
            id: self.id,
            date,
            category: self.section_name,
            title: self.web_title,
            body: self.fields.body_text,
        })
    }
}

#[derive(Debug, Clone)]
pub struct GuardianClient {
    pub base_url: String,
    api_key: String,
    pub page_size: u32,
    pub max_retries: u32,
    pub backoff: Duration,
    /// Raw page responses are stored here and replayed on later runs.
    pub cache_dir: Option<PathBuf>,
}

enum Attempt {
    Done(String),
    Retry(Option<Duration>, String),
}

impl GuardianClient {
    pub fn new(api_key: impl Into<String>) -> Result<Self> {
        let api_key = api_key.into();
        if api_key.trim().is_empty() {
            return Err(Error::InvalidArgument("Guardian API key is empty".into()));
        }
        Ok(Self {
            base_url: DEFAULT_BASE_URL.into(),
            api_key,
            page_size: 50,
            max_retries: 5,
            backoff: Duration::from_millis(500),
            cache_dir: None,
        })
    }

    pub fn from_env() -> Result<Self> {
        let key = std::env::var(API_KEY_ENV)
            .map_err(|_| Error::InvalidArgument(format!("environment variable {API_KEY_ENV} is not set")))?;
        Self::new(key)
    }

    fn cache_file(&self, section: &str, range: (NaiveDate, NaiveDate), page: u32) -> Option<PathBuf> {
        let safe: String = section
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
            .collect();
        self.cache_dir
            .as_ref()
            .map(|d| d.join(format!("{safe}_{}_{}_p{page}.json", range.0, range.1)))
    }

    fn request(&self, section: &str, range: (NaiveDate, NaiveDate), page: u32) -> Result<Attempt> {
        let url = format!("{}/search", self.base_url.trim_end_matches('/'));
        let resp = ureq::get(&url)
            .query("section", section)
            .query("from-date", &range.0.to_string())
            .query("to-date", &range.1.to_string())
            .query("page", &page.to_string())
            .query("page-size", &self.page_size.to_string())
            .query("order-by", "oldest")
            .query("show-fields", "bodyText")
            .query("api-key", &self.api_key)
            .timeout(Duration::from_secs(30))
            .call();
        match resp {
            Ok(r) => r
                .into_string()
                .map(Attempt::Done)
                .or_else(|e| Ok(Attempt::Retry(None, e.to_string()))),
            Err(ureq::Error::Status(status, r)) => {
                let retry_after = r
                    .header("Retry-After")
                    .and_then(|v| v.trim().parse::<u64>().ok())
                    .map(Duration::from_secs);
                let body = r.into_string().unwrap_or_default();
                match status {
                    401 | 403 => Err(Error::Unauthorized { status, body }),
                    429 => Ok(Attempt::Retry(Some(retry_after.unwrap_or(self.backoff)), format!("rate limited: {body}"))),
                    500..=599 => Ok(Attempt::Retry(None, format!("status {status}: {body}"))),
                    _ => Err(Error::Http(format!("status {status}: {body}"))),
                }
            }
            Err(e) => Ok(Attempt::Retry(None, e.to_string())),
        }
    }

    fn page(&self, section: &str, range: (NaiveDate, NaiveDate), page: u32) -> Result<SearchResponse> {
        let cache = self.cache_file(section, range, page);
        if let Some(p) = cache.as_ref().filter(|p| p.exists()) {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            return parse_page(&text);
        }
        let mut last = String::new();
        for attempt in 0..=self.max_retries {
            match self.request(section, range, page)? {
                Attempt::Done(text) => {
                    let parsed = parse_page(&text)?;
                    if let Some(p) = &cache {
                        if let Some(dir) = p.parent() {
                            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                        }
                        fs::write(p, &text).map_err(|e| Error::io(p, e))?;
                    }
                    return Ok(parsed);
                }
                Attempt::Retry(wait, why) => {
                    last = why;
                    if attempt < self.max_retries {
                        thread::sleep(wait.unwrap_or(self.backoff * 2u32.pow(attempt)));
                    }
                }
            }
        }
        Err(Error::Http(format!(
            "giving up after {} attempts: {last}",
            self.max_retries + 1
        )))
    }

    /// Fetches every page for `section` within `range` and writes the
    /// articles to `out_path`, replacing any previous file.
    pub fn fetch(&self, section: &str, range: (NaiveDate, NaiveDate), out_path: impl AsRef<Path>) -> Result<usize> {
        if range.0 > range.1 {
            return Err(Error::InvalidArgument(format!(
                "empty date range: {} is after {}",
                range.0, range.1
            )));
        }
        let mut docs = Vec::new();
        let mut page = 1;
        loop {
            let resp = self.page(section, range, page)?;
            for a in resp.results {
                docs.push(a.into_document()?);
            }
            if page >= resp.pages {
                break;
            }
            page += 1;
        }
        write_jsonl(out_path, &docs)?;
        Ok(docs.len())
    }
}

fn parse_page(text: &str) -> Result<SearchResponse> {
    let env: Envelope = serde_json::from_str(text)?;
    if env.response.status != "ok" {
        return Err(Error::Http(format!(
            "api status `{}`: {}",
            env.response.status,
            env.response.message.unwrap_or_default()
        )));
    }
    Ok(env.response)
}

/// Fetches with the default endpoint.
pub fn fetch_guardian(
    api_key: &str,
    section: &str,
    range: (NaiveDate, NaiveDate),
    out_path: impl AsRef<Path>,
) -> Result<usize> {
    GuardianClient::new(api_key)?.fetch(section, range, out_path)
}
