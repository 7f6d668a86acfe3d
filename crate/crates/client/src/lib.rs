//! Thin HTTP client for the braillecam service. One method per endpoint,
//! typed with the shared wire structs; service-side errors surface as
//! [`ClientError::Api`] with their stable kind.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

mod transport;

pub use transport::HttpControllerTransport;

use braillecam_api::{
    ControllerCreated, ControllerStatus, CreateControllerRequest, DrainResponse, ErrorBody,
    FeedRequest, FeedResponse, GcodeRequest, GcodeResponse, Health, JobConfig, LayoutRequest,
    RoundtripRequest, RoundtripResponse, SendRequest, SendResponse, SimulateRequest,
    SimulateResponse, TranslateRequest, TranslateResponse,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("{kind}: {message}")]
    Api {
        status: u16,
        kind: String,
        message: String,
    },
    #[error("cannot reach server: {0}")]
    Transport(String),
    #[error("unexpected response: {0}")]
    Decode(String),
}

impl ClientError {
    pub fn kind(&self) -> Option<&str> {
        match self {
            ClientError::Api { kind, .. } => Some(kind),
            _ => None,
        }
    }
}

pub struct Client {
    base: String,
    agent: ureq::Agent,
}

impl Client {
    pub fn new(base_url: &str) -> Client {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(5))
            .build();
        Client {
            base: base_url.trim_end_matches('/').to_string(),
            agent,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn decode<R: DeserializeOwned>(body: String) -> Result<R, ClientError> {
        serde_json::from_str(&body).map_err(|e| ClientError::Decode(e.to_string()))
    }

    fn handle<R: DeserializeOwned>(
        result: Result<ureq::Response, ureq::Error>,
    ) -> Result<R, ClientError> {
        match result {
            Ok(response) => {
                let body = response
                    .into_string()
                    .map_err(|e| ClientError::Decode(e.to_string()))?;
                Self::decode(body)
            }
            Err(ureq::Error::Status(status, response)) => {
                let body = response.into_string().unwrap_or_default();
                match serde_json::from_str::<ErrorBody>(&body) {
                    Ok(envelope) => Err(ClientError::Api {
                        status,
                        kind: envelope.error.kind,
                        message: envelope.error.message,
                    }),
                    Err(_) => Err(ClientError::Api {
                        status,
                        kind: "http_error".to_string(),
                        message: body,
                    }),
                }
            }
            Err(ureq::Error::Transport(t)) => Err(ClientError::Transport(t.to_string())),
        }
    }

    fn post<T: Serialize, R: DeserializeOwned>(
        &self,
        path: &str,
        body: &T,
    ) -> Result<R, ClientError> {
        let payload =
            serde_json::to_string(body).map_err(|e| ClientError::Decode(e.to_string()))?;
        let result = self
            .agent
            .post(&format!("{}{}", self.base, path))
            .set("content-type", "application/json")
            .send_string(&payload);
        Self::handle(result)
    }

    fn get<R: DeserializeOwned>(&self, path: &str) -> Result<R, ClientError> {
        Self::handle(self.agent.get(&format!("{}{}", self.base, path)).call())
    }

    pub fn health(&self) -> Result<Health, ClientError> {
        self.get("/healthz")
    }

    pub fn default_config(&self) -> Result<JobConfig, ClientError> {
        self.get("/v1/config/default")
    }

    pub fn translate(&self, req: &TranslateRequest) -> Result<TranslateResponse, ClientError> {
        self.post("/v1/translate", req)
    }

    pub fn layout(&self, req: &LayoutRequest) -> Result<serde_json::Value, ClientError> {
        self.post("/v1/layout", req)
    }

    pub fn gcode(&self, req: &GcodeRequest) -> Result<GcodeResponse, ClientError> {
        self.post("/v1/gcode", req)
    }

    pub fn simulate(&self, req: &SimulateRequest) -> Result<SimulateResponse, ClientError> {
        self.post("/v1/simulate", req)
    }

    pub fn roundtrip(&self, req: &RoundtripRequest) -> Result<RoundtripResponse, ClientError> {
        self.post("/v1/roundtrip", req)
    }

    pub fn send(&self, req: &SendRequest) -> Result<SendResponse, ClientError> {
        self.post("/v1/send", req)
    }

    pub fn create_controller(
        &self,
        req: &CreateControllerRequest,
    ) -> Result<ControllerCreated, ClientError> {
        self.post("/v1/controllers", req)
    }

    pub fn controller_status(&self, id: u64) -> Result<ControllerStatus, ClientError> {
        self.get(&format!("/v1/controllers/{id}"))
    }

    /// Feeds one protocol line and returns the controller's raw response
    /// line.
    pub fn controller_feed(&self, id: u64, line: &str) -> Result<FeedResponse, ClientError> {
        self.post(
            &format!("/v1/controllers/{id}/feed"),
            &FeedRequest {
                line: line.to_string(),
            },
        )
    }

    pub fn controller_drain(&self, id: u64) -> Result<DrainResponse, ClientError> {
        self.post(
            &format!("/v1/controllers/{id}/drain"),
            &serde_json::json!({}),
        )
    }

    pub fn controller_raster(&self, id: u64) -> Result<serde_json::Value, ClientError> {
        self.get(&format!("/v1/controllers/{id}/raster"))
    }

    pub fn delete_controller(&self, id: u64) -> Result<(), ClientError> {
        let result = self
            .agent
            .delete(&format!("{}/v1/controllers/{id}", self.base))
            .call();
        match result {
            Ok(_) => Ok(()),
            Err(ureq::Error::Status(status, response)) => {
                let body = response.into_string().unwrap_or_default();
                match serde_json::from_str::<ErrorBody>(&body) {
                    Ok(envelope) => Err(ClientError::Api {
                        status,
                        kind: envelope.error.kind,
                        message: envelope.error.message,
                    }),
                    Err(_) => Err(ClientError::Api {
                        status,
                        kind: "http_error".to_string(),
                        message: body,
                    }),
                }
            }
            Err(ureq::Error::Transport(t)) => Err(ClientError::Transport(t.to_string())),
        }
    }
}
