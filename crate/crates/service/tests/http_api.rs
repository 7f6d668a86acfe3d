//! End-to-end HTTP tests: a real server on an ephemeral port, driven
//! through the client crate exactly the way the CLI drives it.

use braillecam_api::{
    CreateControllerRequest, GcodeRequest, JobConfig, LayoutRequest, RoundtripRequest, SendRequest,
    SimulateRequest, TranslateRequest,
};
use braillecam_client::{Client, ClientError};
use braillecam_service::spawn_server_thread;

fn start() -> Client {
    let (addr, _handle) = spawn_server_thread("127.0.0.1:0".parse().unwrap()).unwrap();
    Client::new(&format!("http://{addr}"))
}

fn kind_of(err: ClientError) -> String {
    match err {
        ClientError::Api { kind, .. } => kind,
        other => panic!("expected api error, got {other:?}"),
    }
}

#[test]
fn health_and_default_config() {
    let client = start();
    assert_eq!(client.health().unwrap().status, "ok");
    let cfg = client.default_config().unwrap();
    assert_eq!(cfg, JobConfig::default());
    assert_eq!(cfg.machine.planner_depth, 28);
    assert_eq!(cfg.machine.x.travel_max, 75.0);
    assert_eq!(cfg.geometry.dot_pitch, 2.5);
}

#[test]
fn translate_letter_and_strict_policy() {
    let client = start();
    let ok = client
        .translate(&TranslateRequest {
            text: "a".into(),
            config: None,
        })
        .unwrap();
    assert_eq!(ok.braille, "⠁");

    let err = client
        .translate(&TranslateRequest {
            text: "é".into(),
            config: None,
        })
        .unwrap_err();
    assert_eq!(kind_of(err), "unsupported_character");

    let mut config = JobConfig::default();
    config.braille.unknown_chars = braillecam_core::braille::UnknownCharPolicy::Replace;
    let replaced = client
        .translate(&TranslateRequest {
            text: "é".into(),
            config: Some(config),
        })
        .unwrap();
    assert_eq!(replaced.braille, "⠀"); // blank cell
    assert_eq!(replaced.warnings.len(), 1);
}

#[test]
fn translate_empty_file_is_empty() {
    let client = start();
    let out = client
        .translate(&TranslateRequest {
            text: String::new(),
            config: None,
        })
        .unwrap();
    assert_eq!(out.braille, "");
    assert!(out.warnings.is_empty());
}

#[test]
fn layout_document_schema() {
    let client = start();
    let mut config = JobConfig::default();
    config.page.width = 210.0;
    config.page.height = 297.0;
    config.page.margin_left = 15.0;
    config.page.margin_right = 15.0;
    config.page.margin_top = 15.0;
    config.page.margin_bottom = 15.0;
    let doc = client
        .layout(&LayoutRequest {
            text: "a".into(),
            mirror: false,
            config: Some(config),
        })
        .unwrap();
    assert_eq!(doc["page"]["width"], 210.0);
    assert_eq!(doc["page"]["side"], "front");
    assert_eq!(doc["dots"][0]["x"], 15.0);
    assert_eq!(doc["dots"][0]["y"], 15.0);
    assert_eq!(doc["dots"][0]["cell"], 0);
    assert_eq!(doc["dots"][0]["dot"], 1);
}

#[test]
fn gcode_is_deterministic_and_mirrors() {
    let client = start();
    let req = GcodeRequest {
        text: "mirror me".into(),
        mirror: false,
        config: None,
    };
    let a = client.gcode(&req).unwrap();
    let b = client.gcode(&req).unwrap();
    assert_eq!(a.program, b.program);
    assert!(a.program.starts_with("G21\nG90\nG28.2 X0 Y0\n"));
    assert!(a.program.ends_with("G0 X0.000 Y0.000\nM30\n"));

    let mirrored = client
        .gcode(&GcodeRequest {
            text: "a".into(),
            mirror: true,
            config: None,
        })
        .unwrap();
    // Front dot (5, 5) reflects to x = 75 - 5 = 70 on the default page.
    assert!(
        mirrored.program.contains("G0 X70.000 Y70.000"),
        "{}",
        mirrored.program
    );
}

#[test]
fn gcode_travel_exceeded_kind() {
    let client = start();
    let mut config = JobConfig::default();
    config.machine.x.travel_max = 20.0; // page wider than travel
    config.machine.bed_depth = 20.0;
    config.machine.y.travel_max = 20.0;
    let err = client
        .gcode(&GcodeRequest {
            text: "wide line here".into(),
            mirror: false,
            config: Some(config),
        })
        .unwrap_err();
    assert_eq!(kind_of(err), "travel_exceeded");
}

#[test]
fn simulate_counts_strikes_and_renders_svg() {
    let client = start();
    let program = client
        .gcode(&GcodeRequest {
            text: "sim".into(),
            mirror: false,
            config: None,
        })
        .unwrap()
        .program;
    let out = client
        .simulate(&SimulateRequest {
            program,
            config: None,
        })
        .unwrap();
    // s=dots 2,3,4 i=dots 2,4 m=dots 1,3,4: 8 strikes.
    assert_eq!(out.strike_count, 8);
    assert_eq!(out.raster["strikes"].as_array().unwrap().len(), 8);
    assert_eq!(out.svg.matches("<circle").count(), 8);
    assert!(out.elapsed_s > 0.0);
    assert!(out.warnings.is_empty());
}

#[test]
fn simulate_rejects_soft_limit_violation() {
    let client = start();
    let err = client
        .simulate(&SimulateRequest {
            program: "G21\nG90\nG0 X80\n".into(),
            config: None,
        })
        .unwrap_err();
    assert_eq!(kind_of(err), "soft_limit");

    let err = client
        .simulate(&SimulateRequest {
            program: "G0 X1 Y2 Z3\n".into(),
            config: None,
        })
        .unwrap_err();
    assert_eq!(kind_of(err), "unsupported_word");
}

#[test]
fn simulate_empty_program() {
    let client = start();
    let out = client
        .simulate(&SimulateRequest {
            program: String::new(),
            config: None,
        })
        .unwrap();
    assert_eq!(out.strike_count, 0);
    assert_eq!(out.elapsed_s, 0.0);
    assert_eq!(out.svg.matches("<circle").count(), 0);
}

#[test]
fn roundtrip_passes_front_and_mirrored() {
    let client = start();
    for mirror in [false, true] {
        let out = client
            .roundtrip(&RoundtripRequest {
                text: "hello 42".into(),
                mirror,
                config: None,
            })
            .unwrap();
        assert!(out.pass, "mirror={mirror}: {:?}", out);
        assert_eq!(out.decoded.as_deref(), Some("hello 42"));
        assert!(out.stage.is_none());
    }
}

#[test]
fn roundtrip_reports_failing_stage() {
    let client = start();
    // Tolerance 0.25 is not below dot_pitch/2 once dot_pitch is 0.1: the
    // decode stage must reject its options.
    let mut config = JobConfig::default();
    config.geometry.dot_pitch = 0.1;
    config.geometry.cell_pitch = 0.3;
    config.geometry.line_pitch = 0.5;
    let out = client
        .roundtrip(&RoundtripRequest {
            text: "x".into(),
            mirror: false,
            config: Some(config),
        })
        .unwrap();
    assert!(!out.pass);
    assert_eq!(out.stage.as_deref(), Some("decode"));
    assert!(out.message.unwrap().contains("snap_tolerance"));
}

#[test]
fn send_reports_and_transcripts() {
    let client = start();
    let program = client
        .gcode(&GcodeRequest {
            text: "send me".into(),
            mirror: false,
            config: None,
        })
        .unwrap()
        .program;
    let lines = program.lines().count() as u64;

    let plain = client
        .send(&SendRequest {
            program: program.clone(),
            config: None,
            record_transcript: false,
        })
        .unwrap();
    assert_eq!(plain.report.lines_sent, lines);
    assert_eq!(plain.report.lines_acked, lines);
    assert!(plain.report.errors.is_empty());
    assert!(plain.transcript.is_none());

    let recorded = client
        .send(&SendRequest {
            program,
            config: None,
            record_transcript: true,
        })
        .unwrap();
    let transcript = recorded.transcript.unwrap();
    assert!(transcript.contains("> G21\n"));
    assert!(transcript.contains("< {\"r\":{\"n\":1},\"qr\":27}\n"));
    assert!(!transcript.contains("buffer overflow"));
}

#[test]
fn send_rejects_malformed_program_upfront() {
    let client = start();
    let err = client
        .send(&SendRequest {
            program: "G21\nnonsense\n".into(),
            config: None,
            record_transcript: false,
        })
        .unwrap_err();
    assert_eq!(kind_of(err), "gcode_syntax");
}

#[test]
fn controller_session_protocol() {
    let client = start();
    let created = client
        .create_controller(&CreateControllerRequest { config: None })
        .unwrap();
    assert_eq!(created.planner_depth, 28);
    let id = created.id;

    // Exact protocol bytes per the documented grammar.
    assert_eq!(
        client.controller_feed(id, "G21").unwrap().response,
        "{\"r\":{\"n\":1},\"qr\":27}"
    );
    assert_eq!(
        client.controller_feed(id, "G99").unwrap().response,
        "{\"er\":{\"n\":2,\"msg\":\"unsupported word: G99\"}}"
    );

    for line in ["G90", "G28.2 X0 Y0", "G0 X15 Y60", "M8", "G4 P0.05", "M9"] {
        let resp = client.controller_feed(id, line).unwrap().response;
        assert!(resp.starts_with("{\"r\""), "{line} -> {resp}");
    }

    let drained = client.controller_drain(id).unwrap();
    assert_eq!(drained.strike_count, 1);
    assert!(drained.clock_s > 0.0);

    let status = client.controller_status(id).unwrap();
    assert_eq!(
        status.free_slots + status.occupied_slots,
        status.planner_depth
    );
    assert_eq!(status.overflow_count, 0);
    assert!(status.homed_x && status.homed_y);
    assert!(status.fault.is_none());

    let raster = client.controller_raster(id).unwrap();
    assert_eq!(raster["strikes"].as_array().unwrap().len(), 1);

    client.delete_controller(id).unwrap();
    let err = client.controller_status(id).unwrap_err();
    assert_eq!(kind_of(err), "not_found");
}

#[test]
fn sender_streams_over_http_to_a_remote_controller() {
    use braillecam_core::sender::{stream, SenderConfig};

    let client = start();
    let id = client
        .create_controller(&CreateControllerRequest { config: None })
        .unwrap()
        .id;
    let program = client
        .gcode(&GcodeRequest {
            text: "wire".into(),
            mirror: false,
            config: None,
        })
        .unwrap()
        .program;
    let lines = program.lines().count() as u64;

    let mut transport = braillecam_client::HttpControllerTransport::new(&client, id);
    let report = stream(&program, &mut transport, &SenderConfig::default()).unwrap();
    assert_eq!(report.lines_acked, lines);
    assert!(report.errors.is_empty(), "{:?}", report.errors);
    assert!(
        report.elapsed_s > 0.0,
        "simulated clock should come back over the wire"
    );

    // The remote controller really did emboss: w i r e = 4+2+4+2 dots.
    let raster = client.controller_raster(id).unwrap();
    assert_eq!(raster["strikes"].as_array().unwrap().len(), 12);
    let status = client.controller_status(id).unwrap();
    assert_eq!(status.overflow_count, 0);
    assert_eq!(status.occupied_slots, 0);
}

#[test]
fn controller_sessions_are_independent() {
    let client = start();
    let a = client
        .create_controller(&CreateControllerRequest { config: None })
        .unwrap()
        .id;
    let b = client
        .create_controller(&CreateControllerRequest { config: None })
        .unwrap()
        .id;
    assert_ne!(a, b);
    client.controller_feed(a, "G21").unwrap();
    assert_eq!(client.controller_status(a).unwrap().received, 1);
    assert_eq!(client.controller_status(b).unwrap().received, 0);
}

#[test]
fn invalid_config_rejected_with_kind() {
    let client = start();
    let mut config = JobConfig::default();
    config.machine.supply_voltage = 9.0;
    let err = client
        .translate(&TranslateRequest {
            text: "a".into(),
            config: Some(config),
        })
        .unwrap_err();
    assert_eq!(kind_of(err), "invalid_config");
}

#[test]
fn overflow_grammar_via_session() {
    let client = start();
    let mut config = JobConfig::default();
    config.machine.planner_depth = 3;
    config.machine.drain_per_cycle = 0;
    let id = client
        .create_controller(&CreateControllerRequest {
            config: Some(config),
        })
        .unwrap()
        .id;
    for i in 1..=3u64 {
        let resp = client.controller_feed(id, "G4 P0.001").unwrap().response;
        assert_eq!(resp, format!("{{\"r\":{{\"n\":{i}}},\"qr\":{}}}", 3 - i));
    }
    assert_eq!(
        client.controller_feed(id, "G4 P0.001").unwrap().response,
        "{\"er\":{\"msg\":\"buffer overflow\"}}"
    );
    let status = client.controller_status(id).unwrap();
    assert_eq!(status.overflow_count, 1);
}
