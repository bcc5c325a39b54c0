use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock as AsyncRwLock};
use tracing::{info, warn};
use tutor_core::memory::CoursePlan;
use tutor_core::orchestrator::{Phase, Turn};
use tutor_core::{
    Difficulty, Gateway, Session, SessionSpec, SessionState, SystemResponse, Variant,
};

use crate::catalog::{self, TopicEntry};
use crate::error::{ApiError, ApiResult};
use crate::store::{EventStore, Quarantined, SNAPSHOT_EVERY};

const CATALOG_FILE: &str = "topics.csv";

/// Read-only view of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub topic: String,
    pub difficulty: Difficulty,
    pub variant: Variant,
    pub round: u32,
    pub phase: Phase,
    pub plan: CoursePlan,
}

impl SessionSummary {
    pub fn of(session: &Session) -> Self {
        let s = session.state();
        Self {
            session_id: s.session_id.clone(),
            topic: s.topic.clone(),
            difficulty: s.difficulty,
            variant: s.variant,
            round: s.round,
            phase: s.phase,
            plan: s.plan.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub topic: String,
    /// Looked up in the catalog when absent.
    #[serde(default)]
    pub difficulty: Option<i64>,
    #[serde(default)]
    pub variant: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    #[serde(flatten)]
    pub summary: SessionSummary,
    pub opening: SystemResponse,
}

#[derive(Debug, Deserialize)]
pub struct PostMessage {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Reply {
    pub session_id: String,
    pub round: u32,
    pub phase: Phase,
    pub response: SystemResponse,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_quiz: Option<SystemResponse>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Transcript {
    pub session_id: String,
    pub round: u32,
    pub phase: Phase,
    pub turns: Vec<Turn>,
}

#[derive(Debug, Deserialize)]
pub struct UploadCatalog {
    pub csv: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Ingested {
    pub count: usize,
}

type SessionHandle = Arc<Mutex<Session>>;

struct Inner {
    gateway: Arc<Gateway>,
    store: EventStore,
    data_dir: PathBuf,
    sessions: RwLock<HashMap<String, SessionHandle>>,
    /// Writers (ingestion) exclude session creation.
    catalog: AsyncRwLock<Vec<TopicEntry>>,
}

#[derive(Clone)]
pub struct App {
    inner: Arc<Inner>,
}

impl App {
    /// Opens the data directory, loads the catalog (the bundled one when
    /// none was uploaded) and replays every stored session.
    pub fn open(
        gateway: Arc<Gateway>,
        data_dir: &Path,
    ) -> anyhow::Result<(Self, Vec<Quarantined>)> {
        let store = EventStore::open(data_dir)?;
        let catalog_text = match std::fs::read_to_string(data_dir.join(CATALOG_FILE)) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => catalog::BUNDLED.to_string(),
            Err(e) => return Err(e.into()),
        };
        let entries = catalog::parse(&catalog_text)?;
        let recovery = store.recover(gateway.clone())?;
        info!(
            sessions = recovery.sessions.len(),
            quarantined = recovery.quarantined.len(),
            topics = entries.len(),
            "recovered"
        );
        let sessions = recovery
            .sessions
            .into_iter()
            .map(|s| (s.state().session_id.clone(), Arc::new(Mutex::new(s))))
            .collect();
        let app = Self {
            inner: Arc::new(Inner {
                gateway,
                store,
                data_dir: data_dir.to_path_buf(),
                sessions: RwLock::new(sessions),
                catalog: AsyncRwLock::new(entries),
            }),
        };
        Ok((app, recovery.quarantined))
    }

    pub fn router(&self) -> Router {
        Router::new()
            .route("/sessions", post(create_session))
            .route("/sessions/{id}", get(get_session))
            .route("/sessions/{id}/messages", post(post_message))
            .route("/sessions/{id}/plan", get(get_plan))
            .route("/sessions/{id}/transcript", get(get_transcript))
            .route("/topics", get(list_topics).post(ingest_topics))
            .with_state(self.clone())
    }

    /// Summaries of all live sessions, ordered by id.
    pub async fn summaries(&self) -> Vec<SessionSummary> {
        let handles: Vec<SessionHandle> = self
            .inner
            .sessions
            .read()
            .unwrap()
            .values()
            .cloned()
            .collect();
        let mut out = Vec::with_capacity(handles.len());
        for h in handles {
            out.push(SessionSummary::of(&*h.lock().await));
        }
        out.sort_by(|a, b| a.session_id.cmp(&b.session_id));
        out
    }

    /// Copy of one session's live state.
    pub async fn state_of(&self, id: &str) -> Option<SessionState> {
        let handle = self.handle(id).ok()?;
        let session = handle.lock().await;
        Some(session.state().clone())
    }

    fn handle(&self, id: &str) -> ApiResult<SessionHandle> {
        self.inner
            .sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

async fn create_session(
    State(app): State<App>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Created>)> {
    let Json(req) = body?;
    let topic = req.topic.trim().to_string();
    if topic.is_empty() {
        return Err(ApiError::validation("topic is empty"));
    }
    let variant = match req.variant.as_deref() {
        None => Variant::Main,
        Some(v) => v
            .parse()
            .map_err(|e| ApiError::validation(format!("{e}")))?,
    };

    let catalog = app.inner.catalog.read().await;
    let difficulty = match req.difficulty {
        Some(level) => Difficulty::new(level).map_err(|e| ApiError::validation(e.to_string()))?,
        None => catalog::find(&catalog, &topic)
            .map(|e| e.difficulty)
            .ok_or_else(|| {
                ApiError::validation(format!(
                    "{topic:?} is not in the catalog; give a difficulty"
                ))
            })?,
    };
    let spec = SessionSpec {
        session_id: uuid::Uuid::new_v4().to_string(),
        topic,
        difficulty,
        variant,
    };

    let inner = app.inner.clone();
    let (session, opening) = blocking(move || {
        let (session, opening) = Session::start(inner.gateway.clone(), spec)?;
        inner
            .store
            .create(&session.state().session_id, session.events())
            .map_err(ApiError::storage)?;
        Ok((session, opening))
    })
    .await?;
    drop(catalog);

    let summary = SessionSummary::of(&session);
    info!(session = %summary.session_id, topic = %summary.topic, "session created");
    app.inner
        .sessions
        .write()
        .unwrap()
        .insert(summary.session_id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(Created { summary, opening })))
}

async fn get_session(
    State(app): State<App>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<SessionSummary>> {
    let handle = app.handle(&id)?;
    let session = handle.lock().await;
    Ok(Json(SessionSummary::of(&session)))
}

/// Messages to one session queue on its mutex; the reply is sent only
/// after the round's events are synced to disk.
async fn post_message(
    State(app): State<App>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<PostMessage>, JsonRejection>,
) -> ApiResult<Json<Reply>> {
    let Json(req) = body?;
    let handle = app.handle(&id)?;
    let mut session = handle.lock_owned().await;
    let inner = app.inner.clone();
    blocking(move || {
        let outcome = session.handle_user_message(&req.text)?;
        if let Err(e) = inner.store.append(&id, &outcome.events) {
            // Memory is ahead of disk; fall back to what was persisted.
            match inner.store.load(&id, inner.gateway.clone()) {
                Ok(reloaded) => *session = reloaded,
                Err(reason) => {
                    warn!(session = %id, %reason, "could not reload after a failed append")
                }
            }
            return Err(ApiError::storage(e));
        }
        let state = session.state();
        if outcome.round % SNAPSHOT_EVERY == 0 {
            if let Err(e) = inner.store.write_snapshot(state) {
                warn!(session = %id, error = %e, "snapshot failed");
            }
        }
        Ok(Json(Reply {
            session_id: id,
            round: outcome.round,
            phase: state.phase,
            response: outcome.response,
            final_quiz: outcome.final_quiz,
        }))
    })
    .await
}

async fn get_plan(
    State(app): State<App>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<CoursePlan>> {
    let handle = app.handle(&id)?;
    let session = handle.lock().await;
    Ok(Json(session.state().plan.clone()))
}

async fn get_transcript(
    State(app): State<App>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<Transcript>> {
    let handle = app.handle(&id)?;
    let session = handle.lock().await;
    let s = session.state();
    Ok(Json(Transcript {
        session_id: s.session_id.clone(),
        round: s.round,
        phase: s.phase,
        turns: s.transcript.clone(),
    }))
}

async fn list_topics(State(app): State<App>) -> Json<Vec<TopicEntry>> {
    Json(app.inner.catalog.read().await.clone())
}

/// Replaces the catalog. The new file is written before the swap, so a
/// failed upload leaves both disk and memory unchanged.
async fn ingest_topics(
    State(app): State<App>,
    body: Result<Json<UploadCatalog>, JsonRejection>,
) -> ApiResult<Json<Ingested>> {
    let Json(req) = body?;
    let entries = catalog::parse(&req.csv).map_err(|e| ApiError::validation(e.to_string()))?;
    let mut catalog = app.inner.catalog.write().await;
    let path = app.inner.data_dir.join(CATALOG_FILE);
    let text = catalog::render(&entries);
    blocking(move || {
        let tmp = path.with_extension("csv.tmp");
        std::fs::write(&tmp, text)
            .and_then(|_| std::fs::File::open(&tmp)?.sync_all())
            .and_then(|_| std::fs::rename(&tmp, &path))
            .map_err(ApiError::storage)
    })
    .await?;
    let count = entries.len();
    *catalog = entries;
    info!(count, "catalog replaced");
    Ok(Json(Ingested { count }))
}
