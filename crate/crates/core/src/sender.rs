//! Flow-controlled G-code streaming over a byte-stream transport.
//!
//! The sender gates on two conditions before releasing a line: fewer than
//! `window` lines unacknowledged, and the controller's reported free planner
//! slots (minus lines sent since that report) above `qr_floor`. With
//! `window + qr_floor <= planner_depth` the controller can never see a line
//! while its queue is full, so the overflow response never appears in a
//! transcript.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{Controller, MachineConfig, SimError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("transport closed")]
    Closed,
    #[error("transport I/O error: {0}")]
    Io(String),
    #[error("replay mismatch: transcript expected {expected:?}, sender wrote {got:?}")]
    ReplayMismatch { expected: String, got: String },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Ordered, reliable byte stream to a controller. No reordering, loss or
/// duplication; line framing is the sender's business.
pub trait Transport {
    /// Writes the whole buffer.
    fn write(&mut self, buf: &[u8]) -> Result<(), TransportError>;

    /// Reads available bytes into `buf`, returning the count. `Ok(0)` means
    /// no data is available now (the in-process transports never block; a
    /// real serial port would poll).
    fn read(&mut self, buf: &mut [u8]) -> Result<usize, TransportError>;

    /// Flushes and shuts down. The loopback transport drains its controller
    /// queue here, completing the simulated print.
    fn close(&mut self) -> Result<(), TransportError>;

    /// Simulated elapsed seconds, for deterministic reports. `None` for
    /// wall-clock transports.
    fn sim_elapsed_s(&self) -> Option<f64> {
        None
    }
}

/// In-process loopback to a virtual controller: every LF-terminated line
/// written is fed to [`Controller::feed_line`] and the response queued for
/// reading.
pub struct LoopbackTransport {
    controller: Controller,
    line_buf: Vec<u8>,
    inbox: Vec<u8>,
    inbox_pos: usize,
    closed: bool,
}

impl LoopbackTransport {
    pub fn new(cfg: &MachineConfig) -> Result<LoopbackTransport, TransportError> {
        Ok(LoopbackTransport {
            controller: Controller::new(cfg)?,
            line_buf: Vec::new(),
            inbox: Vec::new(),
            inbox_pos: 0,
            closed: false,
        })
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn into_controller(self) -> Controller {
        self.controller
    }
}

impl Transport for LoopbackTransport {
    fn write(&mut self, buf: &[u8]) -> Result<(), TransportError> {
        if self.closed {
            return Err(TransportError::Closed);
        }
        for &b in buf {
            if b == b'\n' {
                let line = String::from_utf8_lossy(&self.line_buf).into_owned();
                self.line_buf.clear();
                let response = self.controller.feed_line(&line);
                self.inbox.extend_from_slice(response.as_bytes());
                self.inbox.push(b'\n');
            } else {
                self.line_buf.push(b);
            }
        }
        Ok(())
    }

    fn read(&mut self, buf: &mut [u8]) -> Result<usize, TransportError> {
        let available = &self.inbox[self.inbox_pos..];
        let n = available.len().min(buf.len());
        buf[..n].copy_from_slice(&available[..n]);
        self.inbox_pos += n;
        if self.inbox_pos == self.inbox.len() {
            self.inbox.clear();
            self.inbox_pos = 0;
        }
        Ok(n)
    }

    fn close(&mut self) -> Result<(), TransportError> {
        self.closed = true;
        self.controller.run_to_idle();
        Ok(())
    }

    fn sim_elapsed_s(&self) -> Option<f64> {
        Some(self.controller.state().clock_s)
    }
}

/// One transcript event: a line sent to or received from the controller.
#[derive(Debug, Clone, PartialEq)]
pub enum TranscriptEvent {
    Sent(String),
    Received(String),
}

/// Records both directions of an inner transport as a replayable
/// transcript: `> line` for sent, `< line` for received.
pub struct RecordingTransport<T: Transport> {
    inner: T,
    events: Vec<TranscriptEvent>,
    out_buf: Vec<u8>,
    in_buf: Vec<u8>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T) -> RecordingTransport<T> {
        RecordingTransport {
            inner,
            events: Vec::new(),
            out_buf: Vec::new(),
            in_buf: Vec::new(),
        }
    }

    pub fn events(&self) -> &[TranscriptEvent] {
        &self.events
    }

    pub fn transcript(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            match event {
                TranscriptEvent::Sent(line) => {
                    out.push_str("> ");
                    out.push_str(line);
                }
                TranscriptEvent::Received(line) => {
                    out.push_str("< ");
                    out.push_str(line);
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }

    pub fn into_inner(self) -> T {
        self.inner
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn write(&mut self, buf: &[u8]) -> Result<(), TransportError> {
        for &b in buf {
            if b == b'\n' {
                let line = String::from_utf8_lossy(&self.out_buf).into_owned();
                self.out_buf.clear();
                self.events.push(TranscriptEvent::Sent(line));
            } else {
                self.out_buf.push(b);
            }
        }
        self.inner.write(buf)
    }

    fn read(&mut self, buf: &mut [u8]) -> Result<usize, TransportError> {
        let n = self.inner.read(buf)?;
        for &b in &buf[..n] {
            if b == b'\n' {
                let line = String::from_utf8_lossy(&self.in_buf).into_owned();
                self.in_buf.clear();
                self.events.push(TranscriptEvent::Received(line));
            } else {
                self.in_buf.push(b);
            }
        }
        Ok(n)
    }

    fn close(&mut self) -> Result<(), TransportError> {
        self.inner.close()
    }

    fn sim_elapsed_s(&self) -> Option<f64> {
        self.inner.sim_elapsed_s()
    }
}

/// Parses a transcript produced by [`RecordingTransport::transcript`].
pub fn parse_transcript(text: &str) -> Result<Vec<TranscriptEvent>, TransportError> {
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("> ") {
            events.push(TranscriptEvent::Sent(rest.to_string()));
        } else if let Some(rest) = line.strip_prefix("< ") {
            events.push(TranscriptEvent::Received(rest.to_string()));
        } else {
            return Err(TransportError::Io(format!(
                "transcript line {}: expected '> ' or '< ' prefix",
                i + 1
            )));
        }
    }
    Ok(events)
}

/// Replays a recorded session: written lines must match the transcript's
/// sent lines in order, reads return the recorded responses.
pub struct FileReplayTransport {
    events: Vec<TranscriptEvent>,
    cursor: usize,
    out_buf: Vec<u8>,
}

impl FileReplayTransport {
    pub fn new(events: Vec<TranscriptEvent>) -> FileReplayTransport {
        FileReplayTransport {
            events,
            cursor: 0,
            out_buf: Vec::new(),
        }
    }

    pub fn from_transcript(text: &str) -> Result<FileReplayTransport, TransportError> {
        Ok(FileReplayTransport::new(parse_transcript(text)?))
    }

    /// True when every recorded event has been consumed.
    pub fn exhausted(&self) -> bool {
        self.cursor == self.events.len()
    }
}

impl Transport for FileReplayTransport {
    fn write(&mut self, buf: &[u8]) -> Result<(), TransportError> {
        for &b in buf {
            if b != b'\n' {
                self.out_buf.push(b);
                continue;
            }
            let line = String::from_utf8_lossy(&self.out_buf).into_owned();
            self.out_buf.clear();
            match self.events.get(self.cursor) {
                Some(TranscriptEvent::Sent(expected)) if *expected == line => {
                    self.cursor += 1;
                }
                Some(TranscriptEvent::Sent(expected)) => {
                    return Err(TransportError::ReplayMismatch {
                        expected: expected.clone(),
                        got: line,
                    });
                }
                Some(TranscriptEvent::Received(_)) | None => {
                    return Err(TransportError::ReplayMismatch {
                        expected: "<end of sends>".into(),
                        got: line,
                    });
                }
            }
        }
        Ok(())
    }

    fn read(&mut self, buf: &mut [u8]) -> Result<usize, TransportError> {
        let Some(TranscriptEvent::Received(line)) = self.events.get(self.cursor) else {
            return Ok(0);
        };
        // Responses are short; a protocol line always fits the caller's
        // buffer.
        let bytes = format!("{line}\n");
        let n = bytes.len();
        if n > buf.len() {
            return Err(TransportError::Io(
                "read buffer too small for replay line".into(),
            ));
        }
        buf[..n].copy_from_slice(bytes.as_bytes());
        self.cursor += 1;
        Ok(n)
    }

    fn close(&mut self) -> Result<(), TransportError> {
        Ok(())
    }

    fn sim_elapsed_s(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// Flow-control policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SenderConfig {
    /// Maximum unacknowledged lines in flight.
    pub window: u32,
    /// Pause sending once the estimated free planner slots drop to this
    /// level.
    pub qr_floor: u32,
    /// How long to wait for a response before giving up on the transfer.
    pub response_timeout_s: f64,
}

impl Default for SenderConfig {
    fn default() -> Self {
        SenderConfig {
            window: 4,
            qr_floor: 2,
            response_timeout_s: 1.0,
        }
    }
}

impl SenderConfig {
    pub fn validate(&self) -> Result<(), TransportError> {
        if self.window < 1 {
            return Err(TransportError::Io(
                "sender window must be at least 1".into(),
            ));
        }
        if self.response_timeout_s < 0.0 {
            return Err(TransportError::Io(
                "response_timeout_s must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One failed line in a transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferError {
    pub line: Option<u64>,
    pub message: String,
}

/// Verifiable outcome of a stream call.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TransferReport {
    pub lines_sent: u64,
    pub lines_acked: u64,
    pub max_inflight: u64,
    pub errors: Vec<TransferError>,
    pub elapsed_s: f64,
}

impl TransferReport {
    pub fn ok(&self) -> bool {
        self.errors.is_empty()
    }
}

/// A parsed controller response.
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Ack { n: u64, qr: u32 },
    Error { n: Option<u64>, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResponseParseError {
    #[error("malformed controller response: {0:?}")]
    Malformed(String),
}

/// Exact inverse of the controller's response grammar.
pub fn parse_response(line: &str) -> Result<Response, ResponseParseError> {
    let malformed = || ResponseParseError::Malformed(line.to_string());
    let value: serde_json::Value =
        serde_json::from_str(line.trim_end()).map_err(|_| malformed())?;
    let obj = value.as_object().ok_or_else(malformed)?;
    if let Some(r) = obj.get("r") {
        let n = r.get("n").and_then(|v| v.as_u64()).ok_or_else(malformed)?;
        let qr = obj
            .get("qr")
            .and_then(|v| v.as_u64())
            .ok_or_else(malformed)?;
        return Ok(Response::Ack { n, qr: qr as u32 });
    }
    if let Some(er) = obj.get("er") {
        let message = er
            .get("msg")
            .and_then(|v| v.as_str())
            .ok_or_else(malformed)?
            .to_string();
        let n = er.get("n").and_then(|v| v.as_u64());
        return Ok(Response::Error { n, message });
    }
    Err(malformed())
}

struct LineReader {
    buf: Vec<u8>,
}

impl LineReader {
    fn new() -> LineReader {
        LineReader { buf: Vec::new() }
    }

    /// Pulls whatever the transport has and returns complete lines.
    fn poll(&mut self, transport: &mut dyn Transport) -> Result<Vec<String>, TransportError> {
        let mut chunk = [0u8; 512];
        let mut lines = Vec::new();
        loop {
            let n = transport.read(&mut chunk)?;
            if n == 0 {
                break;
            }
            for &b in &chunk[..n] {
                if b == b'\n' {
                    lines.push(String::from_utf8_lossy(&self.buf).into_owned());
                    self.buf.clear();
                } else {
                    self.buf.push(b);
                }
            }
        }
        Ok(lines)
    }
}

/// Streams a program line by line under the dual gate (window and qr
/// floor). Terminates when every line is acknowledged, on a controller
/// error response (drains pending acks first), or on a response timeout.
/// Protocol-level failures land in the report's error list; only transport
/// faults surface as `Err`.
pub fn stream(
    program_text: &str,
    transport: &mut dyn Transport,
    cfg: &SenderConfig,
) -> Result<TransferReport, TransportError> {
    cfg.validate()?;
    let lines: Vec<&str> = program_text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.is_empty())
        .collect();

    let started = Instant::now();
    let mut report = TransferReport::default();
    let mut reader = LineReader::new();

    let mut next = 0usize;
    let mut unacked: u64 = 0;
    let mut last_qr: Option<u32> = None;
    let mut sent_since_qr: u32 = 0;
    let mut last_ack_n: u64 = 0;
    let mut aborted = false;

    // Controller line numbers are 1-based over everything we send.
    let expected_n = |sent: u64| sent;

    'outer: loop {
        // Consume whatever responses are ready.
        for line in reader.poll(transport)? {
            match parse_response(&line) {
                Ok(Response::Ack { n, qr }) => {
                    if n <= last_ack_n {
                        report.errors.push(TransferError {
                            line: Some(n),
                            message: format!("out-of-order ack: {n} after {last_ack_n}"),
                        });
                        aborted = true;
                        continue;
                    }
                    last_ack_n = n;
                    report.lines_acked += 1;
                    unacked = unacked.saturating_sub(1);
                    last_qr = Some(qr);
                    sent_since_qr = 0;
                }
                Ok(Response::Error { n, message }) => {
                    let line_no = n.or_else(|| Some(expected_n(report.lines_sent)));
                    report.errors.push(TransferError {
                        line: line_no,
                        message,
                    });
                    aborted = true;
                    // An error response never acks the line, but it is no
                    // longer pending either.
                    unacked = unacked.saturating_sub(1);
                }
                Err(e) => {
                    report.errors.push(TransferError {
                        line: None,
                        message: e.to_string(),
                    });
                    aborted = true;
                }
            }
        }

        if aborted {
            // Stop sending; drain whatever acks remain in flight.
            let deadline = Instant::now() + timeout(cfg);
            while unacked > 0 {
                let drained = reader.poll(transport)?;
                if drained.is_empty() {
                    if Instant::now() >= deadline {
                        break;
                    }
                    std::thread::sleep(Duration::from_micros(200));
                    continue;
                }
                for line in drained {
                    if let Ok(Response::Ack { n, .. }) = parse_response(&line) {
                        last_ack_n = last_ack_n.max(n);
                        report.lines_acked += 1;
                    }
                    unacked = unacked.saturating_sub(1);
                }
            }
            break 'outer;
        }

        let window_open = unacked < cfg.window as u64;
        let qr_open = match last_qr {
            None => true,
            Some(qr) => qr.saturating_sub(sent_since_qr) > cfg.qr_floor,
        };

        if next < lines.len() && window_open && qr_open {
            let mut wire = lines[next].to_string();
            wire.push('\n');
            transport.write(wire.as_bytes())?;
            next += 1;
            report.lines_sent += 1;
            if last_qr.is_some() {
                sent_since_qr += 1;
            }
            unacked += 1;
            report.max_inflight = report.max_inflight.max(unacked);
            continue;
        }

        if next == lines.len() && unacked == 0 {
            break; // all sent and acknowledged
        }

        // Blocked: either the gate is closed or we are waiting for final
        // acks. A response must arrive to make progress.
        let deadline = Instant::now() + timeout(cfg);
        loop {
            let got = reader.poll(transport)?;
            if !got.is_empty() {
                // Push the lines back through the main loop by reprocessing:
                // simplest is to handle them here the same way.
                for line in got {
                    match parse_response(&line) {
                        Ok(Response::Ack { n, qr }) => {
                            if n <= last_ack_n {
                                report.errors.push(TransferError {
                                    line: Some(n),
                                    message: format!("out-of-order ack: {n} after {last_ack_n}"),
                                });
                                aborted = true;
                                continue;
                            }
                            last_ack_n = n;
                            report.lines_acked += 1;
                            unacked = unacked.saturating_sub(1);
                            last_qr = Some(qr);
                            sent_since_qr = 0;
                        }
                        Ok(Response::Error { n, message }) => {
                            report.errors.push(TransferError {
                                line: n.or(Some(expected_n(report.lines_sent))),
                                message,
                            });
                            aborted = true;
                            unacked = unacked.saturating_sub(1);
                        }
                        Err(e) => {
                            report.errors.push(TransferError {
                                line: None,
                                message: e.to_string(),
                            });
                            aborted = true;
                        }
                    }
                }
                break;
            }
            if Instant::now() >= deadline {
                let stalled_line = if unacked > 0 {
                    Some(last_ack_n + 1)
                } else {
                    Some(expected_n(report.lines_sent) + 1)
                };
                report.errors.push(TransferError {
                    line: stalled_line,
                    message: "response timeout".into(),
                });
                break 'outer;
            }
            std::thread::sleep(Duration::from_micros(200));
        }
        if aborted {
            continue; // run the abort drain above
        }
    }

    transport.close()?;
    report.elapsed_s = transport
        .sim_elapsed_s()
        .unwrap_or_else(|| started.elapsed().as_secs_f64());
    report.elapsed_s = crate::round3(report.elapsed_s);
    Ok(report)
}

fn timeout(cfg: &SenderConfig) -> Duration {
    Duration::from_secs_f64(cfg.response_timeout_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::MachineConfig;

    fn ten_line_program() -> String {
        let mut p = String::from("G21\nG90\nG28.2 X0 Y0\n");
        p.push_str("G0 X10 Y10\nM8\nG4 P0.05\nM9\n");
        p.push_str("G0 X0 Y0\nM30\n");
        p.push('\n'); // trailing blank line is skipped
        p
    }

    #[test]
    fn parse_response_grammar() {
        assert_eq!(
            parse_response("{\"r\":{\"n\":1},\"qr\":27}").unwrap(),
            Response::Ack { n: 1, qr: 27 }
        );
        assert_eq!(
            parse_response("{\"er\":{\"msg\":\"buffer overflow\"}}").unwrap(),
            Response::Error {
                n: None,
                message: "buffer overflow".into()
            }
        );
        assert_eq!(
            parse_response("{\"er\":{\"n\":3,\"msg\":\"syntax error: Z3\"}}").unwrap(),
            Response::Error {
                n: Some(3),
                message: "syntax error: Z3".into()
            }
        );
        assert!(parse_response("hello").is_err());
        assert!(parse_response("{\"x\":1}").is_err());
    }

    #[test]
    fn stream_ten_lines_loopback() {
        let cfg = MachineConfig::default();
        let mut transport = LoopbackTransport::new(&cfg).unwrap();
        let report = stream(
            &ten_line_program(),
            &mut transport,
            &SenderConfig::default(),
        )
        .unwrap();
        assert_eq!(report.lines_sent, 9);
        assert_eq!(report.lines_acked, 9);
        assert!(report.max_inflight <= 4);
        assert!(report.ok(), "errors: {:?}", report.errors);
        assert_eq!(transport.controller().overflow_count(), 0);
        assert_eq!(transport.controller().raster().strikes.len(), 1);
        assert!(report.elapsed_s > 0.0);
    }

    #[test]
    fn empty_program_all_zero_report() {
        let cfg = MachineConfig::default();
        let mut transport = LoopbackTransport::new(&cfg).unwrap();
        let report = stream("", &mut transport, &SenderConfig::default()).unwrap();
        assert_eq!(report.lines_sent, 0);
        assert_eq!(report.lines_acked, 0);
        assert_eq!(report.max_inflight, 0);
        assert!(report.ok());
    }

    /// Loopback with lazy responses: acks stay buffered until a number of
    /// read attempts have happened, so the sender actually accumulates
    /// in-flight lines and hits the window gate.
    struct ThrottledLoopback {
        inner: LoopbackTransport,
        held: Vec<u8>,
        reads_until_release: usize,
        reads: usize,
    }

    impl ThrottledLoopback {
        fn new(cfg: &MachineConfig, reads_until_release: usize) -> ThrottledLoopback {
            ThrottledLoopback {
                inner: LoopbackTransport::new(cfg).unwrap(),
                held: Vec::new(),
                reads_until_release,
                reads: 0,
            }
        }
    }

    impl Transport for ThrottledLoopback {
        fn write(&mut self, buf: &[u8]) -> Result<(), TransportError> {
            self.inner.write(buf)?;
            // Move whatever the controller answered into the holding pen.
            let mut chunk = [0u8; 256];
            loop {
                let n = self.inner.read(&mut chunk)?;
                if n == 0 {
                    break;
                }
                self.held.extend_from_slice(&chunk[..n]);
            }
            Ok(())
        }

        fn read(&mut self, buf: &mut [u8]) -> Result<usize, TransportError> {
            self.reads += 1;
            if self.reads < self.reads_until_release || self.held.is_empty() {
                return Ok(0);
            }
            self.reads = 0;
            let n = self.held.len().min(buf.len());
            buf[..n].copy_from_slice(&self.held[..n]);
            self.held.drain(..n);
            Ok(n)
        }

        fn close(&mut self) -> Result<(), TransportError> {
            self.inner.close()
        }

        fn sim_elapsed_s(&self) -> Option<f64> {
            self.inner.sim_elapsed_s()
        }
    }

    #[test]
    fn window_gate_limits_inflight_on_a_laggy_link() {
        let cfg = MachineConfig::default();
        let mut transport = ThrottledLoopback::new(&cfg, 4);
        let sender_cfg = SenderConfig {
            window: 3,
            ..SenderConfig::default()
        };
        let report = stream(&ten_line_program(), &mut transport, &sender_cfg).unwrap();
        assert!(report.ok(), "errors: {:?}", report.errors);
        assert_eq!(report.lines_sent, 9);
        assert_eq!(report.lines_acked, 9);
        // The lag forces the full window open, never past it.
        assert_eq!(report.max_inflight, 3);
        assert_eq!(transport.inner.controller().overflow_count(), 0);
    }

    #[test]
    fn frozen_queue_stalls_without_overflow() {
        let mut cfg = MachineConfig::default();
        cfg.drain_per_cycle = 0;
        let mut transport = LoopbackTransport::new(&cfg).unwrap();
        let sender_cfg = SenderConfig {
            response_timeout_s: 0.0,
            ..SenderConfig::default()
        };
        let program = "G4 P0.001\n".repeat(40);
        let report = stream(&program, &mut transport, &sender_cfg).unwrap();

        // Gate closes once qr reaches the floor: 26 of 40 lines go out.
        assert_eq!(report.lines_sent, 26);
        assert_eq!(report.lines_acked, 26);
        assert!(!report.ok());
        assert!(report.errors[0].message.contains("timeout"));
        assert_eq!(transport.controller().overflow_count(), 0);
    }

    #[test]
    fn controller_error_stops_the_stream() {
        let cfg = MachineConfig::default();
        let mut transport = LoopbackTransport::new(&cfg).unwrap();
        let program = "G21\nG99\nG90\nG90\nG90\n";
        let report = stream(program, &mut transport, &SenderConfig::default()).unwrap();
        assert!(!report.ok());
        let err = &report.errors[0];
        assert_eq!(err.line, Some(2));
        assert!(err.message.contains("unsupported word"));
        // Sending stopped shortly after the error.
        assert!(report.lines_sent < 5, "sent {}", report.lines_sent);
    }

    #[test]
    fn recorded_transcript_replays_identically() {
        let cfg = MachineConfig::default();
        let transport = LoopbackTransport::new(&cfg).unwrap();
        let mut recording = RecordingTransport::new(transport);
        let sender_cfg = SenderConfig::default();
        let report_live = stream(&ten_line_program(), &mut recording, &sender_cfg).unwrap();
        let transcript = recording.transcript();
        assert!(transcript.contains("> G21\n"));
        assert!(transcript.contains("< {\"r\":{\"n\":1},\"qr\":27}\n"));

        let mut replay = FileReplayTransport::from_transcript(&transcript).unwrap();
        let report_replayed = stream(&ten_line_program(), &mut replay, &sender_cfg).unwrap();
        assert!(replay.exhausted());
        assert_eq!(report_live.lines_sent, report_replayed.lines_sent);
        assert_eq!(report_live.lines_acked, report_replayed.lines_acked);
        assert_eq!(report_live.max_inflight, report_replayed.max_inflight);
        assert!(report_replayed.ok());
    }

    #[test]
    fn replay_detects_divergence() {
        let transcript = "> G21\n< {\"r\":{\"n\":1},\"qr\":27}\n";
        let mut replay = FileReplayTransport::from_transcript(transcript).unwrap();
        let err = stream("G90\n", &mut replay, &SenderConfig::default()).unwrap_err();
        assert!(matches!(err, TransportError::ReplayMismatch { .. }));
    }

    #[test]
    fn ack_numbers_strictly_increase() {
        let cfg = MachineConfig::default();
        let transport = LoopbackTransport::new(&cfg).unwrap();
        let mut recording = RecordingTransport::new(transport);
        let _ = stream(
            &ten_line_program(),
            &mut recording,
            &SenderConfig::default(),
        )
        .unwrap();
        let mut last = 0u64;
        for event in recording.events() {
            if let TranscriptEvent::Received(line) = event {
                if let Ok(Response::Ack { n, .. }) = parse_response(line) {
                    assert!(n > last, "ack {n} after {last}");
                    last = n;
                }
            }
        }
        assert!(last > 0);
    }

    #[test]
    fn transcript_parser_rejects_junk() {
        assert!(parse_transcript("? what\n").is_err());
        assert!(parse_transcript("> a\n< b\n").is_ok());
    }
}
