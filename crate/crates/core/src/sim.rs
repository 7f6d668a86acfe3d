//! Virtual embosser: executes programs in the dialect against the machine
//! parameters, simulates the homing cycle and soft limits, records pin
//! strikes on a simulated clock, and speaks a line-oriented controller
//! protocol with a bounded planner buffer.
//!
//! The motion model is constant-velocity: move time is Euclidean distance
//! over velocity. Junction deviation and jerk are carried in the config but
//! unused, so time estimates are lower bounds.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::gcode::{parse_line, GcodeCommand, GcodeProgram};
use crate::layout::Side;
use crate::round3;

pub const MM_PER_INCH: f64 = 25.4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => write!(f, "X"),
            Axis::Y => write!(f, "Y"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("line {line}: {axis} target {value:.3} mm violates soft limit 0..{max:.3} mm")]
    SoftLimit {
        axis: Axis,
        line: u32,
        value: f64,
        max: f64,
    },
    #[error("{0} has no homing switch configured")]
    NoSwitchConfigured(Axis),
    #[error("line {line}: motion on unhomed {axis} axis")]
    NotHomed { axis: Axis, line: u32 },
    #[error("invalid machine config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimWarning {
    /// Motion on an axis that was never homed in this program.
    NotHomed { axis: Axis, line: u32 },
}

/// Steps commanded per millimeter of travel:
/// `(360 / step_angle) * microsteps / travel_per_rev`.
pub fn derive_steps_per_mm(step_angle_deg: f64, microsteps: u32, travel_per_rev_mm: f64) -> f64 {
    (360.0 / step_angle_deg) * microsteps as f64 / travel_per_rev_mm
}

/// Per-axis travel and kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxisConfig {
    pub travel_min: f64,
    pub travel_max: f64,
    pub velocity_max: f64,
    pub steps_per_mm: f64,
    /// A limit switch sits at the travel-max end and is used for homing
    /// only.
    pub switch_max_homing: bool,
}

impl Default for AxisConfig {
    /// 1.8 deg/step motors at quarter stepping on a 36 mm/rev drive,
    /// 75 mm travel, 1000 mm/min.
    fn default() -> Self {
        AxisConfig {
            travel_min: 0.0,
            travel_max: 75.0,
            velocity_max: 1000.0,
            steps_per_mm: derive_steps_per_mm(1.8, 4, 36.0),
            switch_max_homing: true,
        }
    }
}

/// Homing cycle velocities and backoffs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomingConfig {
    pub search_velocity: f64,
    pub latch_velocity: f64,
    pub latch_backoff: f64,
    pub zero_backoff: f64,
}

impl Default for HomingConfig {
    fn default() -> Self {
        HomingConfig {
            search_velocity: 400.0,
            latch_velocity: 100.0,
            latch_backoff: 2.0,
            zero_backoff: 2.0,
        }
    }
}

/// What the executor does when a motion command arrives on an unhomed axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnhomedMotion {
    Ignore,
    #[default]
    Warn,
    Error,
}

/// The whole machine: axes, homing, planner, power, and frame conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MachineConfig {
    pub x: AxisConfig,
    pub y: AxisConfig,
    pub homing: HomingConfig,
    /// Planner queue depth in command slots.
    pub planner_depth: usize,
    /// Queued commands executed per accepted protocol line.
    pub drain_per_cycle: usize,
    pub supply_voltage: f64,
    pub solenoid_voltage: f64,
    /// Carried for config fidelity; unused by the constant-velocity model.
    pub junction_deviation: f64,
    /// Carried for config fidelity; unused by the constant-velocity model.
    pub max_jerk: f64,
    /// Machine-frame bed depth, used to convert layout y (down) to machine
    /// y (up): `y_machine = bed_depth - y_layout`.
    pub bed_depth: f64,
    pub unhomed_motion: UnhomedMotion,
}

impl Default for MachineConfig {
    fn default() -> Self {
        MachineConfig {
            x: AxisConfig::default(),
            y: AxisConfig::default(),
            homing: HomingConfig::default(),
            planner_depth: 28,
            drain_per_cycle: 1,
            supply_voltage: 24.0,
            solenoid_voltage: 12.0,
            junction_deviation: 0.05,
            max_jerk: 20.0,
            bed_depth: 75.0,
            unhomed_motion: UnhomedMotion::default(),
        }
    }
}

impl MachineConfig {
    pub fn axis(&self, axis: Axis) -> &AxisConfig {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let err = |msg: String| Err(SimError::InvalidConfig(msg));
        for (name, ax) in [("x", &self.x), ("y", &self.y)] {
            if !(ax.travel_max > ax.travel_min) {
                return err(format!("{name}: travel_max must exceed travel_min"));
            }
            if !(ax.velocity_max > 0.0) {
                return err(format!("{name}: velocity_max must be positive"));
            }
            if !(ax.steps_per_mm > 0.0) {
                return err(format!("{name}: steps_per_mm must be positive"));
            }
        }
        for (name, v) in [
            ("search_velocity", self.homing.search_velocity),
            ("latch_velocity", self.homing.latch_velocity),
        ] {
            if !(v > 0.0) {
                return err(format!("homing {name} must be positive"));
            }
        }
        for (name, v) in [
            ("latch_backoff", self.homing.latch_backoff),
            ("zero_backoff", self.homing.zero_backoff),
        ] {
            if !(v >= 0.0) {
                return err(format!("homing {name} must be non-negative"));
            }
        }
        if self.planner_depth < 1 {
            return err("planner_depth must be at least 1".into());
        }
        if !(12.0..=30.0).contains(&self.supply_voltage) {
            return err(format!(
                "supply_voltage {} V outside the supported 12..30 V range",
                self.supply_voltage
            ));
        }
        if self.solenoid_voltage < 12.0 {
            return err(format!(
                "solenoid_voltage {} V below the 12 V activation threshold",
                self.solenoid_voltage
            ));
        }
        if !(self.bed_depth > 0.0) {
            return err("bed_depth must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Units {
    #[default]
    Mm,
    Inch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MotionMode {
    #[default]
    Absolute,
    Relative,
}

/// Runtime state of the virtual machine.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MachineState {
    pub x: f64,
    pub y: f64,
    pub homed_x: bool,
    pub homed_y: bool,
    pub solenoid_on: bool,
    /// Simulated seconds since power-up.
    pub clock_s: f64,
    pub units: Units,
    pub mode: MotionMode,
}

impl MachineState {
    pub fn position(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
        }
    }

    pub fn homed(&self, axis: Axis) -> bool {
        match axis {
            Axis::X => self.homed_x,
            Axis::Y => self.homed_y,
        }
    }
}

/// One recorded pin strike on the simulated clock, machine frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strike {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

/// Where and when the pin struck the page: the virtual embossed sheet.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StrikeRaster {
    pub strikes: Vec<Strike>,
    #[serde(default)]
    pub side: Side,
}

impl StrikeRaster {
    pub fn with_side(mut self, side: Side) -> StrikeRaster {
        self.side = side;
        self
    }

    /// Converts machine-frame strikes (y up from the origin) to the page
    /// frame (y down from the top edge): `y_page = bed_depth - y_machine`.
    pub fn to_page_frame(&self, bed_depth: f64) -> StrikeRaster {
        StrikeRaster {
            strikes: self
                .strikes
                .iter()
                .map(|s| Strike {
                    x: s.x,
                    y: bed_depth - s.y,
                    t: s.t,
                })
                .collect(),
            side: self.side,
        }
    }

    /// Serializes with coordinates rounded to three fractional digits.
    pub fn to_json_value(&self) -> serde_json::Value {
        json!({
            "side": match self.side { Side::Front => "front", Side::Back => "back" },
            "strikes": self.strikes.iter().map(|s| json!({
                "x": round3(s.x),
                "y": round3(s.y),
                "t": round3(s.t),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn to_json_string(&self) -> String {
        self.to_json_value().to_string()
    }
}

/// Homing cycle phases, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomingPhase {
    /// Drive toward the max switch at search velocity until it trips.
    Search,
    /// Back off the switch by latch_backoff at search velocity.
    LatchBackoff,
    /// Re-approach at latch velocity until the switch trips again.
    Latch,
    /// Retreat by zero_backoff at latch velocity and set the axis zero.
    ZeroBackoff,
}

/// One executed homing phase, for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomingStep {
    pub phase: HomingPhase,
    pub from: f64,
    pub to: f64,
    pub velocity_mm_min: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomingOutcome {
    pub state: MachineState,
    pub steps: Vec<HomingStep>,
    pub duration_s: f64,
}

/// Runs the four-phase homing cycle on one axis. The virtual switch trips
/// exactly at travel_max; the cycle ends at `travel_max - zero_backoff`
/// with the axis marked homed.
pub fn home_axis(
    state: &MachineState,
    axis: Axis,
    cfg: &MachineConfig,
) -> Result<HomingOutcome, SimError> {
    let ax = cfg.axis(axis);
    if !ax.switch_max_homing {
        return Err(SimError::NoSwitchConfigured(axis));
    }
    let h = &cfg.homing;
    let start = state.position(axis).clamp(ax.travel_min, ax.travel_max);

    let mut steps = Vec::with_capacity(4);
    let mut push = |phase: HomingPhase, from: f64, to: f64, v: f64| {
        let duration_s = (from - to).abs() / v * 60.0;
        steps.push(HomingStep {
            phase,
            from,
            to,
            velocity_mm_min: v,
            duration_s,
        });
        to
    };

    let p = push(HomingPhase::Search, start, ax.travel_max, h.search_velocity);
    let p = push(
        HomingPhase::LatchBackoff,
        p,
        ax.travel_max - h.latch_backoff,
        h.search_velocity,
    );
    let p = push(HomingPhase::Latch, p, ax.travel_max, h.latch_velocity);
    let end = push(
        HomingPhase::ZeroBackoff,
        p,
        ax.travel_max - h.zero_backoff,
        h.latch_velocity,
    );

    let duration_s: f64 = steps.iter().map(|s| s.duration_s).sum();
    let mut out = *state;
    match axis {
        Axis::X => {
            out.x = end;
            out.homed_x = true;
        }
        Axis::Y => {
            out.y = end;
            out.homed_y = true;
        }
    }
    out.clock_s += duration_s;
    Ok(HomingOutcome {
        state: out,
        steps,
        duration_s,
    })
}

/// Result of executing a program.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub raster: StrikeRaster,
    pub final_state: MachineState,
    pub elapsed_s: f64,
    pub warnings: Vec<SimWarning>,
}

/// Stepwise interpreter shared by [`execute`] and the [`Controller`].
struct Executor {
    cfg: MachineConfig,
    state: MachineState,
    strikes: Vec<Strike>,
    warnings: Vec<SimWarning>,
    /// Position and clock captured at M8, consumed by M9.
    armed: Option<Strike>,
    warned_x: bool,
    warned_y: bool,
    ended: bool,
}

impl Executor {
    fn new(cfg: MachineConfig, state: MachineState) -> Executor {
        Executor {
            cfg,
            state,
            strikes: Vec::new(),
            warnings: Vec::new(),
            armed: None,
            warned_x: false,
            warned_y: false,
            ended: false,
        }
    }

    /// Quantizes a target onto the step grid (nearest multiple of
    /// 1/steps_per_mm). A rounded step that falls just past a travel bound
    /// snaps inward so soft limits still hold after quantization.
    fn quantize(ax: &AxisConfig, target: f64) -> f64 {
        let steps = target * ax.steps_per_mm;
        let mut q = steps.round() / ax.steps_per_mm;
        if q > ax.travel_max {
            q = steps.floor() / ax.steps_per_mm;
        } else if q < ax.travel_min {
            q = steps.ceil() / ax.steps_per_mm;
        }
        q
    }

    fn resolve_target(
        &mut self,
        axis: Axis,
        word: Option<f64>,
        line: u32,
    ) -> Result<Option<f64>, SimError> {
        let Some(value) = word else { return Ok(None) };
        let scale = match self.state.units {
            Units::Mm => 1.0,
            Units::Inch => MM_PER_INCH,
        };
        let current = self.state.position(axis);
        let target = match self.state.mode {
            MotionMode::Absolute => value * scale,
            MotionMode::Relative => current + value * scale,
        };
        let ax = self.cfg.axis(axis);
        if target < ax.travel_min - 1e-9 || target > ax.travel_max + 1e-9 {
            return Err(SimError::SoftLimit {
                axis,
                line,
                value: target,
                max: ax.travel_max,
            });
        }
        Ok(Some(Self::quantize(ax, target)))
    }

    fn check_homed(&mut self, axis: Axis, line: u32) -> Result<(), SimError> {
        if self.state.homed(axis) {
            return Ok(());
        }
        match self.cfg.unhomed_motion {
            UnhomedMotion::Ignore => Ok(()),
            UnhomedMotion::Error => Err(SimError::NotHomed { axis, line }),
            UnhomedMotion::Warn => {
                let warned = match axis {
                    Axis::X => &mut self.warned_x,
                    Axis::Y => &mut self.warned_y,
                };
                if !*warned {
                    *warned = true;
                    self.warnings.push(SimWarning::NotHomed { axis, line });
                }
                Ok(())
            }
        }
    }

    fn travel(&mut self, tx: Option<f64>, ty: Option<f64>, velocity_mm_min: f64) {
        let dx = tx.map_or(0.0, |t| t - self.state.x);
        let dy = ty.map_or(0.0, |t| t - self.state.y);
        let distance = (dx * dx + dy * dy).sqrt();
        if distance > 0.0 {
            self.state.clock_s += distance / velocity_mm_min * 60.0;
        }
        if let Some(t) = tx {
            self.state.x = t;
        }
        if let Some(t) = ty {
            self.state.y = t;
        }
    }

    fn motion_velocity(&self, tx: Option<f64>, ty: Option<f64>, feed: Option<f64>) -> f64 {
        let moving_x = tx.is_some_and(|t| t != self.state.x);
        let moving_y = ty.is_some_and(|t| t != self.state.y);
        let vmax = match (moving_x, moving_y) {
            (true, true) => self.cfg.x.velocity_max.min(self.cfg.y.velocity_max),
            (true, false) => self.cfg.x.velocity_max,
            (false, true) => self.cfg.y.velocity_max,
            (false, false) => self.cfg.x.velocity_max.min(self.cfg.y.velocity_max),
        };
        match feed {
            Some(f) => f.min(vmax),
            None => vmax,
        }
    }

    fn step(&mut self, command: &GcodeCommand, line: u32) -> Result<(), SimError> {
        if self.ended {
            return Ok(());
        }
        match command {
            GcodeCommand::UnitsMm => self.state.units = Units::Mm,
            GcodeCommand::UnitsInch => self.state.units = Units::Inch,
            GcodeCommand::Absolute => self.state.mode = MotionMode::Absolute,
            GcodeCommand::Relative => self.state.mode = MotionMode::Relative,
            GcodeCommand::Rapid { x, y } | GcodeCommand::Linear { x, y, .. } => {
                if x.is_some() {
                    self.check_homed(Axis::X, line)?;
                }
                if y.is_some() {
                    self.check_homed(Axis::Y, line)?;
                }
                let tx = self.resolve_target(Axis::X, *x, line)?;
                let ty = self.resolve_target(Axis::Y, *y, line)?;
                let feed = match command {
                    GcodeCommand::Linear { feed, .. } => *feed,
                    _ => None,
                };
                let v = self.motion_velocity(tx, ty, feed);
                self.travel(tx, ty, v);
            }
            GcodeCommand::Dwell { seconds } => self.state.clock_s += seconds,
            GcodeCommand::Home { x, y } => {
                if *x {
                    let outcome = home_axis(&self.state, Axis::X, &self.cfg)?;
                    self.state = outcome.state;
                }
                if *y {
                    let outcome = home_axis(&self.state, Axis::Y, &self.cfg)?;
                    self.state = outcome.state;
                }
            }
            GcodeCommand::SolenoidOn => {
                if !self.state.solenoid_on {
                    self.state.solenoid_on = true;
                    self.armed = Some(Strike {
                        x: self.state.x,
                        y: self.state.y,
                        t: self.state.clock_s,
                    });
                }
            }
            GcodeCommand::SolenoidOff => {
                if let Some(strike) = self.armed.take() {
                    self.strikes.push(strike);
                }
                self.state.solenoid_on = false;
            }
            GcodeCommand::ProgramEnd => self.ended = true,
        }
        Ok(())
    }
}

/// Executes a parsed program against a machine config and start state.
/// Pure: identical inputs give identical rasters, final states and times.
pub fn execute(
    program: &GcodeProgram,
    cfg: &MachineConfig,
    start: MachineState,
) -> Result<Execution, SimError> {
    cfg.validate()?;
    let mut exec = Executor::new(cfg.clone(), start);
    for line in &program.lines {
        exec.step(&line.command, line.number)?;
        if exec.ended {
            break;
        }
    }
    Ok(Execution {
        raster: StrikeRaster {
            strikes: exec.strikes,
            side: Side::Front,
        },
        final_state: exec.state,
        elapsed_s: exec.state.clock_s - start.clock_s,
        warnings: exec.warnings,
    })
}

/// Controller protocol responses. LF-delimited single-line JSON objects,
/// key order fixed, no whitespace padding:
///
/// - accepted line:  `{"r":{"n":<line>},"qr":<free_slots_after>}`
/// - malformed line: `{"er":{"n":<line>,"msg":"<reason>"}}` (no slot used)
/// - full buffer:    `{"er":{"msg":"buffer overflow"}}`
fn ack_response(n: u64, qr: usize) -> String {
    format!("{{\"r\":{{\"n\":{n}}},\"qr\":{qr}}}")
}

fn error_response(n: Option<u64>, msg: &str) -> String {
    let escaped = json_escape(msg);
    match n {
        Some(n) => format!("{{\"er\":{{\"n\":{n},\"msg\":\"{escaped}\"}}}}"),
        None => format!("{{\"er\":{{\"msg\":\"{escaped}\"}}}}"),
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                out.push_str(&format!("\\u{:04x}", c as u32));
            }
            c => out.push(c),
        }
    }
    out
}

/// A virtual controller instance: planner queue plus executor. Callers must
/// serialize [`Controller::feed_line`] calls; distinct instances are
/// independent.
pub struct Controller {
    exec: Executor,
    queue: VecDeque<(u64, GcodeCommand)>,
    planner_depth: usize,
    drain_per_cycle: usize,
    received: u64,
    overflow_count: u64,
    fault: Option<String>,
}

impl Controller {
    pub fn new(cfg: &MachineConfig) -> Result<Controller, SimError> {
        cfg.validate()?;
        Ok(Controller {
            exec: Executor::new(cfg.clone(), MachineState::default()),
            queue: VecDeque::new(),
            planner_depth: cfg.planner_depth,
            drain_per_cycle: cfg.drain_per_cycle,
            received: 0,
            overflow_count: 0,
            fault: None,
        })
    }

    pub fn free_slots(&self) -> usize {
        self.planner_depth - self.queue.len()
    }

    pub fn occupied_slots(&self) -> usize {
        self.queue.len()
    }

    pub fn planner_depth(&self) -> usize {
        self.planner_depth
    }

    pub fn received(&self) -> u64 {
        self.received
    }

    pub fn overflow_count(&self) -> u64 {
        self.overflow_count
    }

    pub fn state(&self) -> &MachineState {
        &self.exec.state
    }

    pub fn fault(&self) -> Option<&str> {
        self.fault.as_deref()
    }

    pub fn warnings(&self) -> &[SimWarning] {
        &self.exec.warnings
    }

    /// Snapshot of the strikes recorded so far.
    pub fn raster(&self) -> StrikeRaster {
        StrikeRaster {
            strikes: self.exec.strikes.clone(),
            side: Side::Front,
        }
    }

    /// Feeds one LF-stripped protocol line and returns the response line
    /// (without the trailing LF). A line arriving with zero free slots gets
    /// the overflow response and is dropped; malformed lines get an error
    /// response and consume no slot.
    pub fn feed_line(&mut self, line: &str) -> String {
        if self.queue.len() == self.planner_depth {
            self.overflow_count += 1;
            return error_response(None, "buffer overflow");
        }
        self.received += 1;
        let n = self.received;
        if let Some(msg) = &self.fault {
            return error_response(Some(n), &format!("fault: {msg}"));
        }
        match parse_line(line, n as u32) {
            Err(e) => error_response(Some(n), &short_reason(&e)),
            Ok(None) => {
                // Blank or comment-only: acknowledged, nothing queued.
                ack_response(n, self.free_slots())
            }
            Ok(Some(command)) => {
                self.queue.push_back((n, command));
                let response = ack_response(n, self.free_slots());
                self.drain(self.drain_per_cycle);
                response
            }
        }
    }

    /// Executes up to `count` queued commands.
    fn drain(&mut self, count: usize) {
        for _ in 0..count {
            let Some((n, command)) = self.queue.pop_front() else {
                return;
            };
            if let Err(e) = self.exec.step(&command, n as u32) {
                self.fault = Some(e.to_string());
                self.queue.clear();
                return;
            }
        }
    }

    /// Runs the queue to empty, as a real planner would once input stops.
    pub fn run_to_idle(&mut self) {
        while !self.queue.is_empty() && self.fault.is_none() {
            self.drain(1);
        }
    }
}

fn short_reason(e: &crate::gcode::GcodeError) -> String {
    use crate::gcode::GcodeError;
    match e {
        GcodeError::UnsupportedWord { word, .. } => format!("unsupported word: {word}"),
        GcodeError::Syntax { token, .. } => format!("syntax error: {token}"),
        other => other.to_string(),
    }
}
