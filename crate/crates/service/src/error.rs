use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("study {0:?} not found")]
    StudyNotFound(String),
    #[error("session {0:?} not found")]
    SessionNotFound(String),
    #[error("session {0:?} is complete")]
    SessionComplete(String),
    #[error("no endpoint {0}")]
    NoRoute(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    DuplicateSubmission(String),
    #[error("storage: {0}")]
    Storage(#[from] std::io::Error),
    #[error("{0}")]
    Core(#[from] phrasal::Error),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::StudyNotFound(_) => "study_not_found",
            ServiceError::SessionNotFound(_) => "session_not_found",
            ServiceError::SessionComplete(_) => "session_complete",
            ServiceError::NoRoute(_) => "not_found",
            ServiceError::Validation(_) => "validation_error",
            ServiceError::DuplicateSubmission(_) => "duplicate_submission",
            ServiceError::Storage(_) => "storage_error",
            ServiceError::Core(_) => "data_error",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::StudyNotFound(_)
            | ServiceError::SessionNotFound(_)
            | ServiceError::NoRoute(_) => StatusCode::NOT_FOUND,
            ServiceError::SessionComplete(_) | ServiceError::DuplicateSubmission(_) => {
                StatusCode::CONFLICT
            }
            ServiceError::Validation(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Storage(_) | ServiceError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// Wire shape of every error response.
#[derive(Debug, Serialize, serde::Deserialize, PartialEq, Eq)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code().to_string(),
            message: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
