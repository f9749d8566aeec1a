use std::sync::Arc;

use axum::body::Body;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, State};
use axum::http::header;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use phrasal::eval::AnnotationRecord;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::service::{Health, StudyService};
use crate::session::{Ack, InstancePayload, SessionInfo, SurveyResponse};

type Shared = Arc<StudyService>;

#[derive(Debug, Deserialize, Serialize)]
pub struct CreateSession {
    pub study_id: String,
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    session: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ExportKind {
    Annotations,
    Surveys,
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    study: String,
    #[serde(default = "default_kind")]
    kind: ExportKind,
}

fn default_kind() -> ExportKind {
    ExportKind::Annotations
}

fn body<T>(r: std::result::Result<Json<T>, JsonRejection>) -> Result<T> {
    r.map(|Json(v)| v)
        .map_err(|e| ServiceError::Validation(e.body_text()))
}

fn query<T>(r: std::result::Result<Query<T>, QueryRejection>) -> Result<T> {
    r.map(|Query(v)| v)
        .map_err(|e| ServiceError::Validation(e.body_text()))
}

/// Runs a blocking service call (it may sync the store to disk) off the
/// async workers.
async fn blocking<T, F>(svc: Shared, f: F) -> Result<T>
where
    T: Send + 'static,
    F: FnOnce(&StudyService) -> Result<T> + Send + 'static,
{
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ServiceError::Storage(std::io::Error::other(e)))?
}

async fn create_session(
    State(svc): State<Shared>,
    req: std::result::Result<Json<CreateSession>, JsonRejection>,
) -> Result<Json<SessionInfo>> {
    let req = body(req)?;
    blocking(svc, move |s| s.create_session(&req.study_id))
        .await
        .map(Json)
}

async fn next(
    State(svc): State<Shared>,
    q: std::result::Result<Query<NextQuery>, QueryRejection>,
) -> Result<Json<InstancePayload>> {
    let q = query(q)?;
    svc.next_instance(&q.session).map(Json)
}

async fn annotation(
    State(svc): State<Shared>,
    req: std::result::Result<Json<AnnotationRecord>, JsonRejection>,
) -> Result<Json<Ack>> {
    let rec = body(req)?;
    blocking(svc, move |s| s.submit_annotation(rec))
        .await
        .map(Json)
}

async fn survey(
    State(svc): State<Shared>,
    req: std::result::Result<Json<SurveyResponse>, JsonRejection>,
) -> Result<Json<Ack>> {
    let sv = body(req)?;
    blocking(svc, move |s| s.submit_survey(sv)).await.map(Json)
}

fn ndjson<T: Serialize>(records: &[T]) -> Response {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialise");
        out.push(b'\n');
    }
    (
        [(header::CONTENT_TYPE, "application/x-ndjson")],
        Body::from(out),
    )
        .into_response()
}

async fn export(
    State(svc): State<Shared>,
    q: std::result::Result<Query<ExportQuery>, QueryRejection>,
) -> Result<Response> {
    let q = query(q)?;
    Ok(match q.kind {
        ExportKind::Annotations => ndjson(&svc.export_annotations(&q.study)?),
        ExportKind::Surveys => ndjson(&svc.export_surveys(&q.study)?),
    })
}

async fn health(State(svc): State<Shared>) -> Json<Health> {
    Json(svc.health())
}

async fn not_found(uri: axum::http::Uri) -> ServiceError {
    ServiceError::NoRoute(uri.path().to_string())
}

pub fn router(svc: Shared) -> Router {
    Router::new()
        .route("/api/session", post(create_session))
        .route("/api/next", get(next))
        .route("/api/annotation", post(annotation))
        .route("/api/survey", post(survey))
        .route("/api/export", get(export))
        .route("/api/health", get(health))
        .fallback(not_found)
        .with_state(svc)
}

/// Serves the API on `listener` until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, svc: Shared) -> std::io::Result<()> {
    axum::serve(listener, router(svc))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
