//! Stateless JSON service over the shared operations.
//!
//! Bodies are parsed here rather than by an extractor so that every schema
//! error carries the JSON path of the offending value.

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use parcc_core::geometry::DEFAULT_TAU;
use parcc_core::inference::InferenceParams;
use parcc_core::io::{demo_from_value, inventory_from_value};
use parcc_core::synthesizer::DEFAULT_BUDGET;

use crate::api::{self, AppError, TemplateChoice};

pub const BIND_ENV: &str = "PARCC_BIND";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

pub struct ApiError(AppError);

impl From<AppError> for ApiError {
    fn from(e: AppError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0 {
            AppError::Input { .. } => StatusCode::BAD_REQUEST,
            AppError::Semantic(_) => StatusCode::UNPROCESSABLE_ENTITY,
        };
        (status, Json(self.0.to_json())).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

fn body<T: DeserializeOwned>(bytes: Result<Bytes, BytesRejection>) -> Result<T, AppError> {
    let bytes = bytes.map_err(|e| AppError::input(e.body_text()))?;
    let mut de = serde_json::Deserializer::from_slice(&bytes);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().to_string();
        if path == "." {
            AppError::input(message)
        } else {
            AppError::at(path, message)
        }
    })
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckRequest {
    spec_text: String,
    demo: Value,
    #[serde(default = "default_tau")]
    tau: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InferRequest {
    demos: Vec<Value>,
    #[serde(default)]
    template: TemplateChoice,
    #[serde(default)]
    params: InferenceParams,
    #[serde(default = "default_tau")]
    tau: f64,
}

fn default_k() -> usize {
    1
}

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaceRequest {
    spec_text: String,
    inventory: Value,
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_budget")]
    budget: usize,
    #[serde(default = "default_tau")]
    tau: f64,
}

fn check_tau(tau: f64) -> Result<(), AppError> {
    if tau.is_finite() && tau >= 0.0 {
        Ok(())
    } else {
        Err(AppError::at("tau", "must be a finite, non-negative number"))
    }
}

/// Runs CPU-bound work off the async executor.
async fn blocking<F>(f: F) -> ApiResult
where
    F: FnOnce() -> Result<Value, AppError> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(result) => Ok(Json(result?)),
        Err(e) => Err(AppError::Semantic(format!("worker failed: {e}")).into()),
    }
}

async fn check(bytes: Result<Bytes, BytesRejection>) -> ApiResult {
    let req: CheckRequest = body(bytes)?;
    check_tau(req.tau)?;
    let spec = api::parse_spec_text(&req.spec_text, "spec_text")?;
    let demo = demo_from_value(req.demo).map_err(|e| AppError::from_document("demo", e))?;
    blocking(move || Ok(serde_json::to_value(api::check(&spec, &demo, req.tau)?).expect("serializes"))).await
}

async fn infer(bytes: Result<Bytes, BytesRejection>) -> ApiResult {
    let req: InferRequest = body(bytes)?;
    check_tau(req.tau)?;
    let template = req.template.resolve(&[])?;
    let demos = req
        .demos
        .into_iter()
        .enumerate()
        .map(|(i, d)| demo_from_value(d).map_err(|e| AppError::from_document(&format!("demos[{i}]"), e)))
        .collect::<Result<Vec<_>, _>>()?;
    blocking(move || {
        let out = api::run_infer(&demos, &template, &req.params, req.tau)?;
        Ok(json!({
            "spec_text": out.spec_text,
            "reports": out.report.reports,
            "stats": out.report.stats,
            "template": out.report.template,
            "params": out.report.params,
        }))
    })
    .await
}

async fn place(bytes: Result<Bytes, BytesRejection>) -> ApiResult {
    let req: PlaceRequest = body(bytes)?;
    check_tau(req.tau)?;
    if req.k == 0 {
        return Err(AppError::at("k", "must be at least 1").into());
    }
    let spec = api::parse_spec_text(&req.spec_text, "spec_text")?;
    let inventory = inventory_from_value(req.inventory).map_err(|e| AppError::from_document("inventory", e))?;
    blocking(move || {
        let (outcome, _) = api::run_place(&spec, &inventory, req.k, req.seed, req.budget, req.tau)?;
        Ok(serde_json::to_value(outcome).expect("serializes"))
    })
    .await
}

async fn templates() -> Json<Value> {
    Json(Value::Array(api::template_descriptors()))
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

pub fn router() -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/templates", get(templates))
        .route("/api/check", post(check))
        .route("/api/infer", post(infer))
        .route("/api/place", post(place))
}

/// Serves until Ctrl-C.
pub async fn serve(bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router())
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
