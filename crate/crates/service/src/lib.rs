//! HTTP facade for what-if analysis over uploaded ownership graphs.
//!
//! Graphs are immutable once uploaded and shared by every session on them.
//! A session keeps a scenario and an ordered list of staged transactions;
//! verdict endpoints evaluate against that staged state and only change it
//! when called with `?commit=true`. With a data directory, uploads and
//! staging operations go to a journal that is replayed on start.
//!
//! There is no authentication; run behind a reverse proxy.

mod error;
pub mod journal;
mod routes;
mod state;

use std::net::SocketAddr;
use std::path::PathBuf;

use axum::extract::DefaultBodyLimit;
use axum::routing::{delete, get, post};
use axum::Router;

pub use error::{ApiError, ErrorBody};
pub use routes::{MAX_RADIUS, NODE_CAP};
pub use state::{AppState, Session};

/// Upload size cap for `POST /graphs`.
pub const MAX_UPLOAD_BYTES: usize = 1 << 30;

pub fn router(state: AppState) -> Router {
    use routes::*;
    Router::new()
        .route(
            "/graphs",
            post(upload_graph).layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES)),
        )
        .route("/graphs/{id}/stats", get(graph_stats))
        .route("/graphs/{id}/conglomerates", get(graph_conglomerates))
        .route("/graphs/{id}/entities/{eid}/neighborhood", get(neighborhood))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/stage", post(stage))
        .route("/sessions/{id}/stage/{k}", delete(unstage))
        .route("/sessions/{id}/check", post(check))
        .route("/sessions/{id}/collude", post(collude))
        .route("/sessions/{id}/cautious", post(cautious))
        .route("/sessions/{id}/limit", post(limit))
        .route("/sessions/{id}/protect", post(protect))
        .with_state(state)
}

/// Serves until Ctrl-C. Without `data_dir` nothing is persisted.
pub async fn serve(addr: SocketAddr, data_dir: Option<PathBuf>) -> ownet_core::Result<()> {
    let state = match data_dir {
        Some(dir) => AppState::open(dir)?,
        None => AppState::ephemeral(),
    };
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
