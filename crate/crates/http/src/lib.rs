//! HTTP front end for the session service and a blocking client that
//! implements [`SessionApi`](ctxsearch_core::session::SessionApi) over it.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | POST | `/sessions` | `{user_id, phase, task_id}` | `{session}` |
//! | GET | `/sessions/{id}` | | `{session, query}` |
//! | POST | `/sessions/{id}/query` | `{query}` | offer |
//! | GET | `/sessions/{id}/recommendations` | | offer |
//! | POST | `/sessions/{id}/selections` | `{stage, chosen}` | offer |
//! | GET | `/sessions/{id}/results?page=n` | | `{page, hits}` |
//! | POST | `/sessions/{id}/clicks` | `{url}` | `{metrics}` |
//! | POST | `/sessions/{id}/complete` | `{found}` | `{metrics}` |
//! | GET | `/sessions/{id}/metrics` | | `{metrics, state}` |
//! | GET | `/users/{id}/profile?limit=n` | | `{user_id, entries}` |
//! | GET | `/sckb/stats` | | `{enabled, entries, contributions}` |
//!
//! Every body carries `schema_version`. An offer is tagged by `stage`
//! (`senses`, `metas`, `concepts`, `results` or `none`). Errors are
//! `{schema_version, error: {kind, message}}` with 400 for validation, 404 for
//! unknown sessions or users, 409 for state errors, 502 for search backend
//! failures and 500 otherwise. `POST /sessions` takes the user id from the
//! `x-user-id` header when the body omits it.

mod client;
mod server;

pub use client::HttpSessionClient;
pub use server::{router, serve};

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Response envelope: the schema version next to the payload fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Envelope<T> {
    pub fn new(body: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            body,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: ErrorBody,
}
