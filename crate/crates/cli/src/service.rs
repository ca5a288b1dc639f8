//! HTTP façade over one immutable model. Sessions accumulate evidence; every
//! query is recomputed from the stored evidence.
//!
//! | method | path | result |
//! |---|---|---|
//! | GET | `/model` | variables, states, edges, decision node |
//! | POST | `/session` | `201 {"id"}` |
//! | PUT | `/session/{id}/evidence` | body `{VAR: label \| null}`; current evidence |
//! | GET | `/session/{id}/posterior?target=V&what_if=VAR=label,...` | posterior of `V` |
//! | GET | `/session/{id}/diagnosis` | classification plus value-of-information ranking |
//! | DELETE | `/session/{id}` | `204` |
//!
//! Errors are `{"error": code, "detail": text}` with 404 for an unknown
//! session, 422 for bad evidence and 409 for evidence of probability zero.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::SystemTime;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use emsbn::inference::query_posterior;
use emsbn::{classify, Assignment, Error, JunctionTree, Network};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error_code;

/// The served model and its sessions.
pub struct Service {
    network: Network,
    jt: JunctionTree,
    decision: usize,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub evidence: Assignment,
    pub created: SystemTime,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    detail: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, detail: impl Into<String>) -> Self {
        ApiError { status, code: code.into(), detail: detail.into() }
    }

    fn unknown_session(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "UnknownSession", format!("no session {id:?}"))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::ZeroEvidence => StatusCode::CONFLICT,
            Error::Validation(_)
            | Error::Parse { .. }
            | Error::StateOutOfRange { .. }
            | Error::SchemaMismatch(_)
            | Error::TargetInEvidence(_)
            | Error::InvalidArgument(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let detail = match e {
            Error::ZeroEvidence => "the evidence is contradictory: it has probability zero under the model".to_string(),
            ref other => other.to_string(),
        };
        ApiError { status, code: error_code(&e).into(), detail }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.code, "detail": self.detail }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

impl Service {
    pub fn new(network: Network, decision: usize) -> Arc<Self> {
        assert!(decision < network.len(), "decision index out of range");
        let jt = JunctionTree::new(&network);
        Arc::new(Service { network, jt, decision, sessions: Mutex::new(HashMap::new()), next_id: AtomicU64::new(1) })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn decision(&self) -> usize {
        self.decision
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.sessions.lock().expect("session map lock").get(id).cloned().ok_or_else(|| ApiError::unknown_session(id))
    }

    fn evidence(&self, id: &str) -> ApiResult<Assignment> {
        Ok(self.session(id)?.lock().expect("session lock").evidence.clone())
    }

    fn var(&self, name: &str) -> ApiResult<usize> {
        self.network.index_of(name).ok_or_else(|| {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "UnknownVariable", format!("no variable {name:?}"))
        })
    }

    fn state(&self, v: usize, label: &str) -> ApiResult<usize> {
        let var = self.network.variable(v);
        var.state_index(label).ok_or_else(|| {
            ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "UnknownState",
                format!("{label:?} is not a state of {}; expected one of {:?}", var.name, var.states),
            )
        })
    }

    fn evidence_json(&self, e: &Assignment) -> Value {
        let map: BTreeMap<&str, &str> = e
            .observed()
            .map(|(v, s)| {
                let var = self.network.variable(v);
                (var.name.as_str(), var.states[s].as_str())
            })
            .collect();
        json!(map)
    }

    fn posterior_json(&self, evidence: &Assignment, target: usize) -> ApiResult<Value> {
        let p = query_posterior(&self.jt, evidence, target)?;
        let var = self.network.variable(target);
        Ok(json!({ "variable": var.name, "states": var.states, "distribution": p.distribution }))
    }

    /// Expected reduction of the decision node's entropy, in nats, from
    /// observing each unobserved variable, sorted from most informative.
    pub fn value_of_information(&self, evidence: &Assignment) -> Result<Vec<(usize, f64)>, Error> {
        let base = self.jt.calibrate(evidence)?;
        let h0 = entropy(&self.jt.marginal(&base, self.decision));
        let mut ranking = Vec::new();
        for v in 0..self.network.len() {
            if v == self.decision || evidence.get(v).is_some() {
                continue;
            }
            let pv = self.jt.marginal(&base, v);
            let mut expected = 0.0;
            for (s, &p) in pv.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                let post = query_posterior(&self.jt, &evidence.clone().with(v, s), self.decision)?;
                expected += p * entropy(&post.distribution);
            }
            ranking.push((v, h0 - expected));
        }
        ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(ranking)
    }
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/model", get(model))
        .route("/session", post(create_session))
        .route("/session/{id}", axum::routing::delete(delete_session))
        .route("/session/{id}/evidence", put(put_evidence).get(get_evidence))
        .route("/session/{id}/posterior", get(posterior))
        .route("/session/{id}/diagnosis", get(diagnosis))
        .with_state(service)
}

async fn model(State(svc): State<Arc<Service>>) -> Json<Value> {
    let net = &svc.network;
    let variables: Vec<Value> =
        net.variables().iter().map(|v| json!({ "name": v.name, "states": v.states })).collect();
    let edges: Vec<[&str; 2]> = net
        .dag()
        .edges()
        .into_iter()
        .map(|(p, c)| [net.variable(p).name.as_str(), net.variable(c).name.as_str()])
        .collect();
    Json(json!({ "variables": variables, "edges": edges, "decision": net.variable(svc.decision).name }))
}

async fn create_session(State(svc): State<Arc<Service>>) -> (StatusCode, Json<Value>) {
    let id = format!("s{}", svc.next_id.fetch_add(1, Ordering::Relaxed));
    let session = Session { evidence: Assignment::empty(svc.network.len()), created: SystemTime::now() };
    svc.sessions.lock().expect("session map lock").insert(id.clone(), Arc::new(Mutex::new(session)));
    (StatusCode::CREATED, Json(json!({ "id": id })))
}

async fn delete_session(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    match svc.sessions.lock().expect("session map lock").remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::unknown_session(&id)),
    }
}

async fn get_evidence(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let e = svc.evidence(&id)?;
    Ok(Json(json!({ "evidence": svc.evidence_json(&e) })))
}

/// Applies every change or none: labels are checked first, then the merged
/// evidence must have positive probability.
async fn put_evidence(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let session = svc.session(&id)?;
    let changes: Map<String, Value> = serde_json::from_slice(&body).map_err(|e| {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidBody", format!("expected {{\"VAR\": label | null}}: {e}"))
    })?;
    let mut parsed = Vec::with_capacity(changes.len());
    for (name, value) in &changes {
        let v = svc.var(name)?;
        let s = match value {
            Value::Null => None,
            Value::String(label) => Some(svc.state(v, label)?),
            other => {
                return Err(ApiError::new(
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "InvalidBody",
                    format!("value for {name} must be a state label or null, got {other}"),
                ))
            }
        };
        parsed.push((v, s));
    }
    // held across the check so that writes to one session are serialized
    let mut guard = session.lock().expect("session lock");
    let mut next = guard.evidence.clone();
    for (v, s) in parsed {
        next.set(v, s);
    }
    svc.jt.calibrate(&next)?;
    guard.evidence = next;
    Ok(Json(json!({ "evidence": svc.evidence_json(&guard.evidence) })))
}

#[derive(Debug, Deserialize)]
struct PosteriorQuery {
    target: Option<String>,
    /// Hypothetical `VAR=label,...` applied on top of the session evidence
    /// without storing it.
    what_if: Option<String>,
}

async fn posterior(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
    Query(q): Query<PosteriorQuery>,
) -> ApiResult<Json<Value>> {
    let mut evidence = svc.evidence(&id)?;
    let target = match &q.target {
        Some(name) => svc.var(name)?,
        None => svc.decision,
    };
    for item in q.what_if.iter().flat_map(|w| w.split(',')).map(str::trim).filter(|s| !s.is_empty()) {
        let (name, label) = item.split_once('=').ok_or_else(|| {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "InvalidQuery", format!("what_if item {item:?} is not VAR=label"))
        })?;
        let v = svc.var(name)?;
        evidence.set(v, Some(svc.state(v, label)?));
    }
    Ok(Json(svc.posterior_json(&evidence, target)?))
}

async fn diagnosis(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let evidence = svc.evidence(&id)?;
    let c = classify(&svc.jt, &evidence, svc.decision)?;
    let var = svc.network.variable(svc.decision);
    let voi: Vec<Value> = svc
        .value_of_information(&evidence)?
        .into_iter()
        .map(|(v, gain)| json!({ "variable": svc.network.variable(v).name, "expected_entropy_reduction": gain }))
        .collect();
    Ok(Json(json!({
        "decision": var.name,
        "state": var.states[c.state],
        "states": var.states,
        "distribution": c.posterior.distribution,
        "evidence": svc.evidence_json(&evidence),
        "value_of_information": voi,
    })))
}
