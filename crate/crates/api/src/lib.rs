//! Wire types for the braillecam HTTP API, shared by the service and the
//! client. Request bodies all accept an optional inline [`JobConfig`];
//! absent sections fall back to defaults on the service side.

use serde::{Deserialize, Serialize};

pub use braillecam_core::config::JobConfig;
pub use braillecam_core::sender::{TransferError, TransferReport};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslateRequest {
    pub text: String,
    #[serde(default)]
    pub config: Option<JobConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranslateResponse {
    /// Unicode Braille text, one char per cell, newlines preserved.
    pub braille: String,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutRequest {
    pub text: String,
    #[serde(default)]
    pub mirror: bool,
    #[serde(default)]
    pub config: Option<JobConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GcodeRequest {
    pub text: String,
    #[serde(default)]
    pub mirror: bool,
    #[serde(default)]
    pub config: Option<JobConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GcodeResponse {
    /// The emitted program, byte-deterministic for identical requests.
    pub program: String,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateRequest {
    pub program: String,
    #[serde(default)]
    pub config: Option<JobConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateResponse {
    /// Strike raster in the shared JSON schema.
    pub raster: serde_json::Value,
    pub svg: String,
    pub elapsed_s: f64,
    pub strike_count: u64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundtripRequest {
    pub text: String,
    #[serde(default)]
    pub mirror: bool,
    #[serde(default)]
    pub config: Option<JobConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundtripResponse {
    pub pass: bool,
    /// Text recovered from the simulated page, when decoding got that far.
    #[serde(default)]
    pub decoded: Option<String>,
    /// Pipeline stage that failed: encode, layout, mirror, emit, parse,
    /// execute or decode.
    #[serde(default)]
    pub stage: Option<String>,
    #[serde(default)]
    pub message: Option<String>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SendRequest {
    pub program: String,
    #[serde(default)]
    pub config: Option<JobConfig>,
    /// Record the full wire exchange and return it next to the report.
    #[serde(default)]
    pub record_transcript: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SendResponse {
    pub report: TransferReport,
    #[serde(default)]
    pub transcript: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateControllerRequest {
    #[serde(default)]
    pub config: Option<JobConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControllerCreated {
    pub id: u64,
    pub planner_depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedRequest {
    /// One protocol line, LF optional.
    pub line: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeedResponse {
    /// The raw controller response line.
    pub response: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ControllerStatus {
    pub id: u64,
    pub received: u64,
    pub free_slots: usize,
    pub occupied_slots: usize,
    pub planner_depth: usize,
    pub overflow_count: u64,
    pub clock_s: f64,
    pub x: f64,
    pub y: f64,
    pub homed_x: bool,
    pub homed_y: bool,
    pub strike_count: u64,
    #[serde(default)]
    pub fault: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DrainResponse {
    pub clock_s: f64,
    pub strike_count: u64,
}

/// Error envelope for every non-2xx response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ApiError,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApiError {
    /// Stable machine-readable kind, e.g. "unsupported_character",
    /// "page_overflow", "travel_exceeded", "soft_limit".
    pub kind: String,
    pub message: String,
}
