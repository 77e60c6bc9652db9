//! HTTP front for the extender and the settings shared by the subcommands.

pub mod config;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use hintsched_core::extender::{Extender, WireResponse};
use hintsched_core::sim::{scenario, testbed_nodes, ScenarioId};
use hintsched_core::state::{node_from_raw, ClusterSnapshot, StateCache};

pub fn router(extender: Arc<Extender>) -> Router {
    Router::new()
        .route("/filter", post(filter))
        .route("/prioritize", post(prioritize))
        .route("/healthz", get(healthz))
        .with_state(extender)
}

fn json_response(wire: WireResponse) -> Response {
    let status = StatusCode::from_u16(wire.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(header::CONTENT_TYPE, "application/json")], wire.body).into_response()
}

// Hint analysis may block on a remote model, so the verbs run on the blocking pool.
async fn run_blocking(extender: Arc<Extender>, body: Bytes, verb: fn(&Extender, &[u8]) -> WireResponse) -> Response {
    match tokio::task::spawn_blocking(move || verb(&extender, &body)).await {
        Ok(wire) => json_response(wire),
        Err(e) => json_response(WireResponse {
            status: 500,
            body: serde_json::json!({ "error": format!("handler panicked: {e}") }).to_string(),
        }),
    }
}

async fn filter(State(extender): State<Arc<Extender>>, body: Bytes) -> Response {
    run_blocking(extender, body, Extender::handle_filter).await
}

async fn prioritize(State(extender): State<Arc<Extender>>, body: Bytes) -> Response {
    run_blocking(extender, body, Extender::handle_prioritize).await
}

async fn healthz(State(extender): State<Arc<Extender>>) -> Response {
    let body = serde_json::json!({
        "status": "ok",
        "nodes": extender.state().node_count(),
        "pods": extender.state().pod_count(),
        "analyzer": extender.analyzer().backend_source().name(),
    });
    json_response(WireResponse {
        status: 200,
        body: body.to_string(),
    })
}

/// Fills a state cache from a snapshot file, or from the bundled testbed
/// topology when no file is given.
pub fn load_state(snapshot: Option<&Path>, deployment_label: &str) -> anyhow::Result<Arc<StateCache>> {
    let state = Arc::new(StateCache::new());
    match snapshot {
        Some(path) => {
            let snap = ClusterSnapshot::load(path).with_context(|| format!("reading snapshot {}", path.display()))?;
            state
                .load_snapshot(&snap, deployment_label)
                .with_context(|| format!("snapshot {}", path.display()))?;
        }
        None => {
            let nodes = testbed_nodes(&scenario(ScenarioId::A))
                .iter()
                .map(node_from_raw)
                .collect::<Result<Vec<_>, _>>()?;
            state.full_resync(nodes, Vec::new());
        }
    }
    Ok(state)
}

pub struct ServeOptions {
    pub listen: SocketAddr,
    /// Snapshot re-read on this period; stands in for watch plus periodic relist.
    pub resync: Option<(PathBuf, Duration)>,
    pub deployment_label: String,
}

pub async fn serve(extender: Arc<Extender>, opts: ServeOptions) -> anyhow::Result<()> {
    if let Some((path, period)) = opts.resync.clone() {
        let state = extender.state().clone();
        let label = opts.deployment_label.clone();
        tokio::spawn(async move {
            let mut ticker = tokio::time::interval(period);
            ticker.tick().await;
            loop {
                ticker.tick().await;
                match ClusterSnapshot::load(&path) {
                    Ok(snap) => {
                        if let Err(e) = state.load_snapshot(&snap, &label) {
                            log::warn!("resync from {} failed: {e}", path.display());
                        }
                    }
                    Err(e) => log::warn!("resync from {} failed: {e}", path.display()),
                }
            }
        });
    }

    let listener = tokio::net::TcpListener::bind(opts.listen)
        .await
        .with_context(|| format!("binding {}", opts.listen))?;
    log::info!("extender listening on {}", listener.local_addr()?);
    axum::serve(listener, router(extender))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
