//! Mapping from core errors to HTTP responses with stable error kinds.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use braillecam_api::{ApiError, ErrorBody};
use braillecam_core::braille::BrailleError;
use braillecam_core::config::ConfigError;
use braillecam_core::decoder::DecodeError;
use braillecam_core::gcode::GcodeError;
use braillecam_core::layout::LayoutError;
use braillecam_core::sender::TransportError;
use braillecam_core::sim::SimError;

/// A failed request: status plus the error envelope.
#[derive(Debug)]
pub struct ApiFailure {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
}

impl ApiFailure {
    pub fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> ApiFailure {
        ApiFailure {
            status,
            kind,
            message: message.into(),
        }
    }

    pub fn not_found(what: &str) -> ApiFailure {
        ApiFailure::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("{what} not found"),
        )
    }
}

impl IntoResponse for ApiFailure {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ApiError {
                kind: self.kind.to_string(),
                message: self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

const UNPROCESSABLE: StatusCode = StatusCode::UNPROCESSABLE_ENTITY;

impl From<BrailleError> for ApiFailure {
    fn from(e: BrailleError) -> ApiFailure {
        let kind = match &e {
            BrailleError::UnsupportedCharacter { .. } => "unsupported_character",
            BrailleError::AmbiguousNumericLetter { .. } => "ambiguous_numeric_letter",
            BrailleError::UndecodableSequence(_) => "undecodable_sequence",
            BrailleError::MaskOutOfRange(_) | BrailleError::CodepointOutOfRange(_) => {
                "braille_range"
            }
        };
        ApiFailure::new(UNPROCESSABLE, kind, e.to_string())
    }
}

impl From<LayoutError> for ApiFailure {
    fn from(e: LayoutError) -> ApiFailure {
        let kind = match &e {
            LayoutError::PageTooNarrow { .. } => "page_too_narrow",
            LayoutError::PageOverflow { .. } => "page_overflow",
            LayoutError::InvalidGeometry(_) | LayoutError::InvalidPage(_) => "invalid_layout",
            LayoutError::MirrorRequiresFrontSide => "mirror_side",
        };
        ApiFailure::new(UNPROCESSABLE, kind, e.to_string())
    }
}

impl From<GcodeError> for ApiFailure {
    fn from(e: GcodeError) -> ApiFailure {
        let kind = match &e {
            GcodeError::TravelExceeded { .. } => "travel_exceeded",
            GcodeError::Syntax { .. } => "gcode_syntax",
            GcodeError::UnsupportedWord { .. } => "unsupported_word",
            GcodeError::InvalidOptions(_) => "invalid_options",
        };
        ApiFailure::new(UNPROCESSABLE, kind, e.to_string())
    }
}

impl From<SimError> for ApiFailure {
    fn from(e: SimError) -> ApiFailure {
        let kind = match &e {
            SimError::SoftLimit { .. } => "soft_limit",
            SimError::NoSwitchConfigured(_) => "no_switch",
            SimError::NotHomed { .. } => "not_homed",
            SimError::InvalidConfig(_) => "invalid_config",
        };
        ApiFailure::new(UNPROCESSABLE, kind, e.to_string())
    }
}

impl From<DecodeError> for ApiFailure {
    fn from(e: DecodeError) -> ApiFailure {
        match e {
            DecodeError::Layout(inner) => inner.into(),
            DecodeError::InvalidOptions(_) => {
                ApiFailure::new(UNPROCESSABLE, "invalid_options", e.to_string())
            }
            DecodeError::UnassignedStrike { .. } => {
                ApiFailure::new(UNPROCESSABLE, "unassigned_strike", e.to_string())
            }
            DecodeError::DuplicateStrike { .. } => {
                ApiFailure::new(UNPROCESSABLE, "duplicate_strike", e.to_string())
            }
        }
    }
}

impl From<ConfigError> for ApiFailure {
    fn from(e: ConfigError) -> ApiFailure {
        match &e {
            ConfigError::Parse(_) => {
                ApiFailure::new(StatusCode::BAD_REQUEST, "config_parse", e.to_string())
            }
            ConfigError::Invalid(_) => {
                ApiFailure::new(UNPROCESSABLE, "invalid_config", e.to_string())
            }
        }
    }
}

impl From<TransportError> for ApiFailure {
    fn from(e: TransportError) -> ApiFailure {
        match e {
            TransportError::Sim(inner) => inner.into(),
            other => ApiFailure::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "transport",
                other.to_string(),
            ),
        }
    }
}
