//! Pipeline orchestration behind the endpoints: each function wires the
//! core stages for one operation.

use braillecam_api::{
    GcodeResponse, RoundtripResponse, SendResponse, SimulateResponse, TranslateResponse,
};
use braillecam_core::braille::{
    decode_cells, encode_text, tokens_from_lines, unicode_string, CellToken, TranslationTable,
};
use braillecam_core::config::JobConfig;
use braillecam_core::decoder::{raster_to_cells, unfold_back_side};
use braillecam_core::gcode::{emit_program, parse_program};
use braillecam_core::layout::{layout_dots, mirror_dotmap, DotMap, LayoutWarning, Side};
use braillecam_core::sender::{
    stream, LoopbackTransport, RecordingTransport, Transport, TransportError,
};
use braillecam_core::sim::{execute, MachineState};
use braillecam_core::svg::raster_to_svg;

use crate::error::ApiFailure;

fn encode_warnings(w: &[braillecam_core::braille::EncodeWarning]) -> Vec<String> {
    w.iter()
        .map(|w| {
            format!(
                "character {:?} at position {} replaced with a blank cell",
                w.ch, w.position
            )
        })
        .collect()
}

fn layout_warnings(w: &[LayoutWarning]) -> Vec<String> {
    w.iter()
        .map(|w| match w {
            LayoutWarning::AsymmetricMargins { left, right } => format!(
                "margins are asymmetric ({left} vs {right} mm); mirrored dots may leave the printable band"
            ),
        })
        .collect()
}

fn sim_warnings(w: &[braillecam_core::sim::SimWarning]) -> Vec<String> {
    w.iter()
        .map(|w| match w {
            braillecam_core::sim::SimWarning::NotHomed { axis, line } => {
                format!("line {line}: motion on unhomed {axis} axis")
            }
        })
        .collect()
}

pub fn translate(text: &str, cfg: &JobConfig) -> Result<TranslateResponse, ApiFailure> {
    let table = TranslationTable::grade1();
    let encoded = encode_text(text, &table, cfg.braille.unknown_chars)?;
    Ok(TranslateResponse {
        braille: unicode_string(&encoded.tokens),
        warnings: encode_warnings(&encoded.warnings),
    })
}

/// encode + layout (+ mirror). Shared by the layout and gcode endpoints.
pub fn lay_out(
    text: &str,
    mirror: bool,
    cfg: &JobConfig,
) -> Result<(Vec<CellToken>, DotMap, Vec<String>), ApiFailure> {
    let table = TranslationTable::grade1();
    let encoded = encode_text(text, &table, cfg.braille.unknown_chars)?;
    let mut warnings = encode_warnings(&encoded.warnings);
    let map = layout_dots(&encoded.tokens, &cfg.page, &cfg.geometry)?;
    let map = if mirror {
        let (mirrored, layout_warns) = mirror_dotmap(&map)?;
        warnings.extend(layout_warnings(&layout_warns));
        mirrored
    } else {
        map
    };
    Ok((encoded.tokens, map, warnings))
}

pub fn gcode(text: &str, mirror: bool, cfg: &JobConfig) -> Result<GcodeResponse, ApiFailure> {
    let (_, map, warnings) = lay_out(text, mirror, cfg)?;
    let program = emit_program(&map, &cfg.machine, &cfg.emit)?;
    Ok(GcodeResponse { program, warnings })
}

pub fn simulate(program_text: &str, cfg: &JobConfig) -> Result<SimulateResponse, ApiFailure> {
    let program = parse_program(program_text)?;
    let out = execute(&program, &cfg.machine, MachineState::default())?;
    Ok(SimulateResponse {
        raster: out.raster.to_json_value(),
        svg: raster_to_svg(&out.raster, &cfg.machine, &cfg.geometry),
        elapsed_s: (out.elapsed_s * 1000.0).round() / 1000.0,
        strike_count: out.raster.strikes.len() as u64,
        warnings: sim_warnings(&out.warnings),
    })
}

pub fn roundtrip(text: &str, mirror: bool, cfg: &JobConfig) -> RoundtripResponse {
    let mut warnings = Vec::new();
    let fail = |stage: &str, message: String, warnings: Vec<String>| RoundtripResponse {
        pass: false,
        decoded: None,
        stage: Some(stage.to_string()),
        message: Some(message),
        warnings,
    };

    let table = TranslationTable::grade1();
    let encoded = match encode_text(text, &table, cfg.braille.unknown_chars) {
        Ok(e) => e,
        Err(e) => return fail("encode", e.to_string(), warnings),
    };
    warnings.extend(encode_warnings(&encoded.warnings));

    let map = match layout_dots(&encoded.tokens, &cfg.page, &cfg.geometry) {
        Ok(m) => m,
        Err(e) => return fail("layout", e.to_string(), warnings),
    };
    let map = if mirror {
        match mirror_dotmap(&map) {
            Ok((m, w)) => {
                warnings.extend(layout_warnings(&w));
                m
            }
            Err(e) => return fail("mirror", e.to_string(), warnings),
        }
    } else {
        map
    };

    let program_text = match emit_program(&map, &cfg.machine, &cfg.emit) {
        Ok(p) => p,
        Err(e) => return fail("emit", e.to_string(), warnings),
    };
    let program = match parse_program(&program_text) {
        Ok(p) => p,
        Err(e) => return fail("parse", e.to_string(), warnings),
    };
    let out = match execute(&program, &cfg.machine, MachineState::default()) {
        Ok(o) => o,
        Err(e) => return fail("execute", e.to_string(), warnings),
    };
    warnings.extend(sim_warnings(&out.warnings));

    let side = if mirror { Side::Back } else { Side::Front };
    let raster = out
        .raster
        .with_side(side)
        .to_page_frame(cfg.machine.bed_depth);
    let raster = if mirror {
        unfold_back_side(&raster, cfg.page.width)
    } else {
        raster
    };
    let decoded_page = match raster_to_cells(&raster, &cfg.page, &cfg.geometry, &cfg.decode) {
        Ok(d) => d,
        Err(e) => return fail("decode", e.to_string(), warnings),
    };
    let decoded = match decode_cells(&tokens_from_lines(&decoded_page.lines), &table) {
        Ok(t) => t,
        Err(e) => return fail("decode", e.to_string(), warnings),
    };

    let pass = decoded == text;
    RoundtripResponse {
        pass,
        decoded: Some(decoded),
        stage: None,
        message: if pass {
            None
        } else {
            Some("decoded text differs from input".to_string())
        },
        warnings,
    }
}

pub fn send(
    program_text: &str,
    cfg: &JobConfig,
    record_transcript: bool,
) -> Result<SendResponse, ApiFailure> {
    // Validate the program before opening the wire; garbage never leaves
    // the client in the CLI flow either.
    parse_program(program_text)?;
    let loopback = LoopbackTransport::new(&cfg.machine)?;
    if record_transcript {
        let mut transport = RecordingTransport::new(loopback);
        let report = run_stream(program_text, &mut transport, cfg)?;
        let transcript = transport.transcript();
        Ok(SendResponse {
            report,
            transcript: Some(transcript),
        })
    } else {
        let mut transport = loopback;
        let report = run_stream(program_text, &mut transport, cfg)?;
        Ok(SendResponse {
            report,
            transcript: None,
        })
    }
}

fn run_stream(
    program_text: &str,
    transport: &mut dyn Transport,
    cfg: &JobConfig,
) -> Result<braillecam_api::TransferReport, TransportError> {
    stream(program_text, transport, &cfg.sender)
}
