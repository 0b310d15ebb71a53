use axum::body::Bytes;
use axum::extract::multipart::MultipartRejection;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Multipart, Path, Query, State};
use axum::http::StatusCode;
use axum::Json;
use ownet_core::analytics::{analytics_report, AnalyticsReport};
use ownet_core::conglomerate::{conglomerates, ConglomeratePartition};
use ownet_core::golden_power::{
    cautious_gp_check, collusion_gp_check, gp_check, gp_limit, gp_protection, GpLimit, GpVerdict, ProtectionObjective,
    ProtectionPlan, Scenario, DEFAULT_LIMIT_QUANTUM, DEFAULT_PROTECTION_QUANTUM,
};
use ownet_core::graph::io::to_json_value;
use ownet_core::Transaction;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::journal::Event;
use crate::state::{now, AppState, Graph};

pub const MAX_RADIUS: usize = 3;
pub const NODE_CAP: usize = 300;

type ApiResult<T> = Result<T, ApiError>;

fn parse<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid(e.to_string()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v).map_err(|e| ApiError::invalid(e.body_text()))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

pub async fn upload_graph(
    State(st): State<AppState>,
    multipart: Result<Multipart, MultipartRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let mut multipart = multipart.map_err(|e| ApiError::invalid(e.body_text()))?;
    let (mut nodes, mut edges) = (None, None);
    while let Some(field) = multipart.next_field().await.map_err(|e| ApiError::invalid(e.body_text()))? {
        let name = field.name().unwrap_or_default().to_string();
        let data = field.bytes().await.map_err(|e| ApiError::invalid(e.body_text()))?;
        match name.as_str() {
            "nodes" => nodes = Some(data),
            "edges" => edges = Some(data),
            other => return Err(ApiError::invalid(format!("unexpected field {other:?}"))),
        }
    }
    let (Some(nodes), Some(edges)) = (nodes, edges) else {
        return Err(ApiError::invalid("multipart needs both 'nodes' and 'edges' parts"));
    };
    let (id, g) = blocking(move || st.add_graph(&nodes, &edges)).await?;
    Ok((
        StatusCode::CREATED,
        Json(json!({"graph_id": id, "node_count": g.len(), "edge_count": g.edge_count()})),
    ))
}

pub async fn graph_stats(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<AnalyticsReport>> {
    let g = st.graph(&id)?;
    blocking(move || Ok(Json(analytics_report(&g)))).await
}

#[derive(Deserialize)]
pub struct EpsilonQuery {
    epsilon: Option<f64>,
}

pub async fn graph_conglomerates(
    State(st): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<EpsilonQuery>, QueryRejection>,
) -> ApiResult<Json<ConglomeratePartition>> {
    let eps = query(q)?.epsilon.unwrap_or(ownet_core::conglomerate::DEFAULT_EPSILON);
    let g = st.graph(&id)?;
    blocking(move || Ok(Json(conglomerates(&g, &eps)?))).await
}

#[derive(Deserialize)]
pub struct RadiusQuery {
    radius: Option<usize>,
}

pub async fn neighborhood(
    State(st): State<AppState>,
    Path((id, eid)): Path<(String, String)>,
    q: Result<Query<RadiusQuery>, QueryRejection>,
) -> ApiResult<Json<Value>> {
    let radius = query(q)?.radius.unwrap_or(1);
    if radius > MAX_RADIUS {
        return Err(ApiError::invalid(format!("radius must be at most {MAX_RADIUS}")));
    }
    let g = st.graph(&id)?;
    let center = g.index_of(&eid).ok_or_else(|| ApiError::not_found("entity", &eid))?;
    let sub = g.neighborhood(center, radius, NODE_CAP);
    let mut body = to_json_value(&sub);
    body["center"] = json!(eid);
    body["radius"] = json!(radius);
    body["truncated"] = json!(sub.len() >= NODE_CAP);
    Ok(Json(body))
}

#[derive(Deserialize)]
struct CreateSession {
    graph_id: String,
    #[serde(default)]
    scenario: Option<Scenario>,
}

pub async fn create_session(State(st): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: CreateSession = parse(&body)?;
    let id = blocking(move || st.add_session(&req.graph_id, req.scenario)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id }))))
}

pub async fn get_session(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let session = st.session(&id)?;
    let s = session.lock().await;
    s.usable()?;
    Ok(Json(json!(s.view())))
}

#[derive(Deserialize)]
struct TxRequest {
    transaction: Transaction,
}

fn staged_body(staged: &[Transaction]) -> Json<Value> {
    Json(json!({ "staged": staged }))
}

pub async fn stage(State(st): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: TxRequest = parse(&body)?;
    let session = st.session(&id)?;
    let mut s = session.lock().await;
    s.usable()?;
    let overlay = s.preview(std::slice::from_ref(&req.transaction))?;
    let at = now();
    st.record(&Event::Stage {
        session_id: id,
        transaction: req.transaction.clone(),
        at,
    })?;
    s.commit(vec![req.transaction], overlay, at);
    Ok(staged_body(&s.scenario.staged))
}

pub async fn unstage(State(st): State<AppState>, Path((id, k)): Path<(String, usize)>) -> ApiResult<Json<Value>> {
    let session = st.session(&id)?;
    let mut s = session.lock().await;
    s.usable()?;
    if k >= s.scenario.staged.len() {
        return Err(ApiError::not_found("staged transaction", &k.to_string()));
    }
    // dry run first: later transactions may depend on the one removed
    let mut trial = Scenario {
        staged: s.scenario.staged.clone(),
        ..s.sets()
    };
    trial.staged.remove(k);
    trial
        .staged_graph(&s.base)
        .map_err(|e| ApiError::replay(format!("cannot unstage {k}: {e}")))?;
    let at = now();
    st.record(&Event::Unstage {
        session_id: id,
        index: k,
        at,
    })?;
    s.unstage(k, at)?;
    Ok(staged_body(&s.scenario.staged))
}

#[derive(Deserialize, Default)]
pub struct CommitQuery {
    #[serde(default)]
    commit: bool,
}

/// Runs `compute` against the session's staged state. With `commit`, the
/// transactions it returns are staged afterwards, under the same lock.
async fn evaluate<T, F>(st: AppState, id: String, commit: bool, compute: F) -> ApiResult<Json<T>>
where
    T: Serialize + Send + 'static,
    F: FnOnce(&Graph, &Scenario) -> ApiResult<(T, Vec<Transaction>)> + Send + 'static,
{
    let session = st.session(&id)?;
    let mut guard = session.lock_owned().await;
    guard.usable()?;
    let (overlay, sets) = (guard.overlay.clone(), guard.sets());
    if !commit {
        drop(guard);
        let (value, _) = blocking(move || compute(&overlay, &sets)).await?;
        return Ok(Json(value));
    }
    let (value, txs, next) = blocking(move || {
        let (value, txs) = compute(&overlay, &sets)?;
        let next = ownet_core::graph::apply_all(&overlay, &txs)?;
        Ok((value, txs, next))
    })
    .await?;
    let at = now();
    for t in &txs {
        st.record(&Event::Stage {
            session_id: id.clone(),
            transaction: t.clone(),
            at,
        })?;
    }
    guard.commit(txs, next, at);
    Ok(Json(value))
}

fn verdict_txs(v: GpVerdict, t: Transaction) -> ApiResult<(GpVerdict, Vec<Transaction>)> {
    Ok((v, vec![t]))
}

pub async fn check(
    State(st): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<CommitQuery>, QueryRejection>,
    body: Bytes,
) -> ApiResult<Json<GpVerdict>> {
    let commit = query(q)?.commit;
    let TxRequest { transaction: t } = parse(&body)?;
    evaluate(st, id, commit, move |g, sc| verdict_txs(gp_check(g, sc, &t)?, t)).await
}

pub async fn collude(
    State(st): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<CommitQuery>, QueryRejection>,
    body: Bytes,
) -> ApiResult<Json<GpVerdict>> {
    let commit = query(q)?.commit;
    let TxRequest { transaction: t } = parse(&body)?;
    evaluate(st, id, commit, move |g, sc| verdict_txs(collusion_gp_check(g, sc, &t)?, t)).await
}

#[derive(Deserialize)]
struct CautiousRequest {
    transaction: Transaction,
    f: String,
}

pub async fn cautious(
    State(st): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<CommitQuery>, QueryRejection>,
    body: Bytes,
) -> ApiResult<Json<GpVerdict>> {
    let commit = query(q)?.commit;
    let CautiousRequest { transaction: t, f } = parse(&body)?;
    evaluate(st, id, commit, move |g, sc| verdict_txs(cautious_gp_check(g, sc, &t, &f)?, t)).await
}

fn default_limit_quantum() -> f64 {
    DEFAULT_LIMIT_QUANTUM
}

#[derive(Deserialize)]
struct LimitRequest {
    buyer: String,
    target: String,
    #[serde(default = "default_limit_quantum")]
    quantum: f64,
}

pub async fn limit(
    State(st): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<CommitQuery>, QueryRejection>,
    body: Bytes,
) -> ApiResult<Json<GpLimit>> {
    let commit = query(q)?.commit;
    let req: LimitRequest = parse(&body)?;
    evaluate(st, id, commit, move |g, sc| {
        let r = gp_limit(g, sc, &req.buyer, &req.target, req.quantum)?;
        let t = Transaction::new(req.buyer, req.target, r.max_share);
        Ok((r, vec![t]))
    })
    .await
}

fn default_protection_quantum() -> f64 {
    DEFAULT_PROTECTION_QUANTUM
}

#[derive(Deserialize)]
struct ProtectRequest {
    #[serde(default)]
    with_intermediaries: bool,
    #[serde(default = "default_protection_quantum")]
    quantum: f64,
    #[serde(default)]
    objective: ProtectionObjective,
}

pub async fn protect(
    State(st): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<CommitQuery>, QueryRejection>,
    body: Bytes,
) -> ApiResult<Json<ProtectionPlan>> {
    let commit = query(q)?.commit;
    let req: ProtectRequest = parse(&body)?;
    evaluate(st, id, commit, move |g, sc| {
        let plan = gp_protection(g, sc, req.with_intermediaries, req.quantum, req.objective)?;
        // acquisitions add to existing holdings; a transaction sets the total
        let mut work = (**g).clone();
        let mut txs = Vec::new();
        for a in &plan.acquisitions {
            let held = work.share_by_id(&a.public, &a.target).copied().unwrap_or(0.0);
            let t = Transaction::new(a.public.clone(), a.target.clone(), (held + a.delta).min(1.0));
            work = ownet_core::graph::apply_transaction(&work, &t)?;
            txs.push(t);
        }
        Ok((plan, txs))
    })
    .await
}
