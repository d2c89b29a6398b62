use std::time::Duration;

use ctxsearch_core::search::SearchHit;
use ctxsearch_core::session::{Offer, Phase, SessionApi, SessionInfo, SessionMetrics, Stage};
use ctxsearch_core::{Error, Result};
use reqwest::blocking::{Client, RequestBuilder};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::{Envelope, ErrorResponse};

/// Blocking client for a running server. Must not be used from inside an
/// async runtime.
#[derive(Debug, Clone)]
pub struct HttpSessionClient {
    base: String,
    http: Client,
}

#[derive(Deserialize)]
struct SessionBody {
    session: SessionInfo,
}

#[derive(Deserialize)]
struct HitsBody {
    hits: Vec<SearchHit>,
}

#[derive(Deserialize)]
struct MetricsBody {
    metrics: SessionMetrics,
}

fn stage_name(stage: Stage) -> &'static str {
    match stage {
        Stage::Senses => "senses",
        Stage::Metas => "metas",
        Stage::Concepts => "concepts",
    }
}

impl HttpSessionClient {
    pub fn new(base_url: impl Into<String>) -> Result<Self> {
        let http = Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| Error::Adapter(format!("http client: {e}")))?;
        Ok(Self {
            base: base_url.into().trim_end_matches('/').to_string(),
            http,
        })
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn send<T: DeserializeOwned>(&self, req: RequestBuilder) -> Result<T> {
        let resp = req
            .send()
            .map_err(|e| Error::Adapter(format!("service unreachable: {e}")))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| Error::Adapter(format!("reading response: {e}")))?;
        if !status.is_success() {
            let err: Envelope<ErrorResponse> = serde_json::from_str(&text)
                .map_err(|_| Error::Adapter(format!("HTTP {status}: {text}")))?;
            let msg = err.body.error.message;
            return Err(match err.body.error.kind.as_str() {
                "validation" => Error::Validation(msg),
                "not_found" => Error::NotFound(msg),
                "state" => Error::State(msg),
                _ => Error::Adapter(msg),
            });
        }
        let env: Envelope<T> = serde_json::from_str(&text)
            .map_err(|e| Error::Adapter(format!("unexpected response body: {e}")))?;
        Ok(env.body)
    }
}

impl SessionApi for HttpSessionClient {
    fn create_session(&self, user_id: &str, phase: Phase, task_id: &str) -> Result<SessionInfo> {
        let body = json!({ "user_id": user_id, "phase": phase, "task_id": task_id });
        let out: SessionBody = self.send(self.http.post(self.url("/sessions")).json(&body))?;
        Ok(out.session)
    }

    fn submit_query(&self, session_id: &str, raw_query: &str) -> Result<Offer> {
        let url = self.url(&format!("/sessions/{session_id}/query"));
        self.send(self.http.post(url).json(&json!({ "query": raw_query })))
    }

    fn recommendations(&self, session_id: &str) -> Result<Offer> {
        self.send(self.http.get(self.url(&format!("/sessions/{session_id}/recommendations"))))
    }

    fn apply_selection(&self, session_id: &str, stage: Stage, chosen: &[String]) -> Result<Offer> {
        let url = self.url(&format!("/sessions/{session_id}/selections"));
        self.send(self.http.post(url).json(&json!({ "stage": stage_name(stage), "chosen": chosen })))
    }

    fn results(&self, session_id: &str, page: usize) -> Result<Vec<SearchHit>> {
        let url = self.url(&format!("/sessions/{session_id}/results?page={page}"));
        let out: HitsBody = self.send(self.http.get(url))?;
        Ok(out.hits)
    }

    fn report_click(&self, session_id: &str, url: &str) -> Result<SessionMetrics> {
        let endpoint = self.url(&format!("/sessions/{session_id}/clicks"));
        let out: MetricsBody = self.send(self.http.post(endpoint).json(&json!({ "url": url })))?;
        Ok(out.metrics)
    }

    fn complete_task(&self, session_id: &str, found: bool) -> Result<SessionMetrics> {
        let url = self.url(&format!("/sessions/{session_id}/complete"));
        let out: MetricsBody = self.send(self.http.post(url).json(&json!({ "found": found })))?;
        Ok(out.metrics)
    }

    fn metrics(&self, session_id: &str) -> Result<SessionMetrics> {
        let out: MetricsBody = self.send(self.http.get(self.url(&format!("/sessions/{session_id}/metrics"))))?;
        Ok(out.metrics)
    }
}
