use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use ownet_core::Error;
use serde::Serialize;

/// Error body: `{"code": ..., "message": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code,
                message: message.into(),
            },
        }
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what} {id}"))
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_payload", message)
    }

    pub fn replay(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::CONFLICT, "replay_failed", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. }
            | Error::DuplicateEntity { .. }
            | Error::DuplicateEdge { .. }
            | Error::DanglingEdge { .. }
            | Error::ShareOutOfRange { .. }
            | Error::Csv(_)
            | Error::Json(_) => "invalid_graph",
            Error::UnknownEntity { .. } => "unknown_entity",
            Error::NotACompany { .. } => "not_a_company",
            Error::InsufficientShare { .. } => "insufficient_share",
            Error::DivergentCycle { .. } => "divergent_cycle",
            Error::TakeoverPreexists(_) => "takeover_preexists",
            Error::NotSubgraph { .. } => "not_subgraph",
            Error::InvalidScenario(_) => "invalid_scenario",
            Error::InvalidParameter(_) | Error::InfeasibleConfig(_) => "invalid_parameter",
            Error::Io(_) => return ApiError::internal(e.to_string()),
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
