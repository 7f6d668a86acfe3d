//! The embosser G-code dialect: emission from a dot map and parsing back.
//!
//! The dialect is deliberately small: G21/G20 units, G90/G91 positioning,
//! G0/G1 moves on X and Y, G4 dwell (P in seconds), G28.2 homing, M8/M9 for
//! the solenoid fire output (a relay on the coolant pin), M30 program end.
//! Files are UTF-8 with LF line endings, one command per line; comments sit
//! in parentheses or after a semicolon.

use std::fmt::Write as _;

use thiserror::Error;

use crate::layout::{Dot, DotMap};
use crate::sim::{Axis, MachineConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GcodeError {
    #[error("{axis} target {value:.3} mm outside travel 0..{max:.3} mm")]
    TravelExceeded { axis: Axis, value: f64, max: f64 },
    #[error("line {line}, column {column}: syntax error at {token:?}")]
    Syntax {
        line: u32,
        column: usize,
        token: String,
    },
    #[error("line {line}: unsupported word {word:?}")]
    UnsupportedWord { line: u32, word: String },
    #[error("invalid emit options: {0}")]
    InvalidOptions(String),
}

/// One command of the dialect.
#[derive(Debug, Clone, PartialEq)]
pub enum GcodeCommand {
    /// G21
    UnitsMm,
    /// G20
    UnitsInch,
    /// G90
    Absolute,
    /// G91
    Relative,
    /// G0
    Rapid { x: Option<f64>, y: Option<f64> },
    /// G1
    Linear {
        x: Option<f64>,
        y: Option<f64>,
        feed: Option<f64>,
    },
    /// G4, P in seconds
    Dwell { seconds: f64 },
    /// G28.2, homing cycle for the flagged axes
    Home { x: bool, y: bool },
    /// M8, solenoid on
    SolenoidOn,
    /// M9, solenoid off
    SolenoidOff,
    /// M30
    ProgramEnd,
}

/// A parsed command with its 1-based source line number.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramLine {
    pub number: u32,
    pub command: GcodeCommand,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GcodeProgram {
    pub lines: Vec<ProgramLine>,
}

impl GcodeProgram {
    pub fn commands(&self) -> impl Iterator<Item = &GcodeCommand> {
        self.lines.iter().map(|l| &l.command)
    }
}

/// Strike ordering strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Traversal {
    /// Horizontal bands in increasing y, alternate bands scanned in
    /// opposite x directions.
    #[default]
    Serpentine,
    /// Every band in increasing x.
    RowMajor,
}

/// Emission knobs.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitOptions {
    /// Solenoid fire time per dot, seconds.
    pub dwell_s: f64,
    /// Feed for G1 positioning moves, mm/min. The emitted template uses
    /// rapids, so this only matters for hand-written programs.
    pub feed_mm_min: f64,
    /// Prepend a G28.2 homing cycle.
    pub home_first: bool,
    pub traversal: Traversal,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions {
            dwell_s: 0.05,
            feed_mm_min: 1000.0,
            home_first: true,
            traversal: Traversal::Serpentine,
        }
    }
}

impl EmitOptions {
    pub fn validate(&self) -> Result<(), GcodeError> {
        if !(self.dwell_s > 0.0) {
            return Err(GcodeError::InvalidOptions(format!(
                "dwell_s must be positive, got {}",
                self.dwell_s
            )));
        }
        if !(self.feed_mm_min > 0.0) {
            return Err(GcodeError::InvalidOptions(format!(
                "feed_mm_min must be positive, got {}",
                self.feed_mm_min
            )));
        }
        Ok(())
    }
}

/// Orders the dots of a map for embossing. Bands are grouped by exact y;
/// ties within a band break on (y, x, cell_index, dot_number), so the order
/// is fully deterministic.
pub fn order_strikes(map: &DotMap, traversal: Traversal) -> Vec<Dot> {
    let mut dots = map.dots.clone();
    let key = |d: &Dot| (d.y, d.x, d.cell_index, d.dot_number);
    dots.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());

    if traversal == Traversal::Serpentine {
        let mut out = Vec::with_capacity(dots.len());
        let mut band = 0usize;
        let mut i = 0usize;
        while i < dots.len() {
            let y = dots[i].y;
            let mut j = i;
            while j < dots.len() && dots[j].y == y {
                j += 1;
            }
            if band % 2 == 0 {
                out.extend_from_slice(&dots[i..j]);
            } else {
                out.extend(dots[i..j].iter().rev().copied());
            }
            band += 1;
            i = j;
        }
        out
    } else {
        dots
    }
}

/// Formats a coordinate or dwell value: exactly three fractional digits,
/// `.` separator, no exponent.
fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

/// Emits the embossing program for a dot map. Output is byte-deterministic:
/// preamble `G21`/`G90` (plus `G28.2 X0 Y0` when homing first), one
/// `G0`/`M8`/`G4`/`M9` group per strike, postamble `G0 X0.000 Y0.000`/`M30`.
///
/// Layout y (down from the page top) converts to machine y (up from the
/// origin) as `y_machine = bed_depth - y_layout`; x passes through.
pub fn emit_program(
    map: &DotMap,
    cfg: &MachineConfig,
    opt: &EmitOptions,
) -> Result<String, GcodeError> {
    opt.validate()?;
    let ordered = order_strikes(map, opt.traversal);

    let mut out = String::new();
    out.push_str("G21\nG90\n");
    if opt.home_first {
        out.push_str("G28.2 X0 Y0\n");
    }
    for dot in &ordered {
        let mx = dot.x;
        let my = cfg.bed_depth - dot.y;
        check_travel(Axis::X, mx, cfg)?;
        check_travel(Axis::Y, my, cfg)?;
        let _ = write!(
            out,
            "G0 X{} Y{}\nM8\nG4 P{}\nM9\n",
            fmt3(mx),
            fmt3(my),
            fmt3(opt.dwell_s)
        );
    }
    out.push_str("G0 X0.000 Y0.000\nM30\n");
    Ok(out)
}

fn check_travel(axis: Axis, value: f64, cfg: &MachineConfig) -> Result<(), GcodeError> {
    let ax = cfg.axis(axis);
    if value < ax.travel_min - 1e-9 || value > ax.travel_max + 1e-9 {
        return Err(GcodeError::TravelExceeded {
            axis,
            value,
            max: ax.travel_max,
        });
    }
    Ok(())
}

/// A lexed word: a letter plus its numeric payload.
struct Word {
    letter: char,
    number: String,
    column: usize,
}

fn lex_line(raw: &str, line: u32) -> Result<Vec<Word>, GcodeError> {
    let mut words = Vec::new();
    let chars: Vec<char> = raw.chars().collect();
    let mut i = 0usize;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
            continue;
        }
        if ch == ';' {
            break; // comment to end of line
        }
        if ch == '(' {
            let start = i;
            while i < chars.len() && chars[i] != ')' {
                i += 1;
            }
            if i == chars.len() {
                return Err(GcodeError::Syntax {
                    line,
                    column: start + 1,
                    token: "(".into(),
                });
            }
            i += 1; // skip ')'
            continue;
        }
        if ch.is_ascii_alphabetic() {
            let column = i + 1;
            i += 1;
            let num_start = i;
            while i < chars.len()
                && (chars[i].is_ascii_digit() || matches!(chars[i], '.' | '+' | '-'))
            {
                // Sign characters only lead the number.
                if matches!(chars[i], '+' | '-') && i != num_start {
                    break;
                }
                i += 1;
            }
            let number: String = chars[num_start..i].iter().collect();
            if number.is_empty() || number.parse::<f64>().is_err() {
                // Not letter+number shaped: report the whole chunk.
                let mut token = String::from(ch);
                token.push_str(&number);
                while i < chars.len() && !chars[i].is_whitespace() {
                    token.push(chars[i]);
                    i += 1;
                }
                return Err(GcodeError::Syntax {
                    line,
                    column,
                    token,
                });
            }
            words.push(Word {
                letter: ch.to_ascii_uppercase(),
                number,
                column,
            });
            continue;
        }
        return Err(GcodeError::Syntax {
            line,
            column: i + 1,
            token: ch.to_string(),
        });
    }
    Ok(words)
}

/// Axis letters the two-motor machine does not have, plus common words from
/// richer dialects; all rejected as unsupported rather than as syntax noise.
fn is_known_foreign_letter(letter: char) -> bool {
    matches!(
        letter,
        'Z' | 'A'
            | 'B'
            | 'C'
            | 'E'
            | 'I'
            | 'J'
            | 'K'
            | 'N'
            | 'S'
            | 'T'
            | 'H'
            | 'R'
            | 'Q'
            | 'U'
            | 'V'
            | 'W'
            | 'D'
            | 'L'
            | 'O'
    )
}

struct ParamSet {
    x: Option<f64>,
    y: Option<f64>,
    feed: Option<f64>,
    dwell: Option<f64>,
}

fn collect_params(
    words: &[Word],
    line: u32,
    allow_feed: bool,
    allow_dwell: bool,
) -> Result<ParamSet, GcodeError> {
    let mut set = ParamSet {
        x: None,
        y: None,
        feed: None,
        dwell: None,
    };
    for w in words {
        let value: f64 = w.number.parse().map_err(|_| GcodeError::Syntax {
            line,
            column: w.column,
            token: format!("{}{}", w.letter, w.number),
        })?;
        if !value.is_finite() {
            return Err(GcodeError::Syntax {
                line,
                column: w.column,
                token: format!("{}{}", w.letter, w.number),
            });
        }
        let slot = match w.letter {
            'X' => &mut set.x,
            'Y' => &mut set.y,
            'F' if allow_feed => &mut set.feed,
            'P' if allow_dwell => &mut set.dwell,
            _ => {
                return Err(GcodeError::UnsupportedWord {
                    line,
                    word: format!("{}{}", w.letter, w.number),
                });
            }
        };
        if slot.is_some() {
            return Err(GcodeError::Syntax {
                line,
                column: w.column,
                token: format!("{}{}", w.letter, w.number),
            });
        }
        *slot = Some(value);
    }
    if let Some(f) = set.feed {
        if !(f > 0.0) {
            return Err(GcodeError::Syntax {
                line,
                column: 1,
                token: format!("F{f}"),
            });
        }
    }
    if let Some(p) = set.dwell {
        if p < 0.0 {
            return Err(GcodeError::Syntax {
                line,
                column: 1,
                token: format!("P{p}"),
            });
        }
    }
    Ok(set)
}

fn expect_no_params(words: &[Word], line: u32, cmd: &str) -> Result<(), GcodeError> {
    if let Some(w) = words.first() {
        return Err(GcodeError::Syntax {
            line,
            column: w.column,
            token: format!("{}{} after {cmd}", w.letter, w.number),
        });
    }
    Ok(())
}

/// Parses one source line. `Ok(None)` for blank and comment-only lines.
pub fn parse_line(raw: &str, line: u32) -> Result<Option<GcodeCommand>, GcodeError> {
    let words = lex_line(raw, line)?;
    let Some(head) = words.first() else {
        return Ok(None);
    };
    let rest = &words[1..];
    let word_str = format!("{}{}", head.letter, head.number);
    let cmd = match (head.letter, head.number.as_str()) {
        ('G', "21") => {
            expect_no_params(rest, line, "G21")?;
            GcodeCommand::UnitsMm
        }
        ('G', "20") => {
            expect_no_params(rest, line, "G20")?;
            GcodeCommand::UnitsInch
        }
        ('G', "90") => {
            expect_no_params(rest, line, "G90")?;
            GcodeCommand::Absolute
        }
        ('G', "91") => {
            expect_no_params(rest, line, "G91")?;
            GcodeCommand::Relative
        }
        ('G', "0" | "00") => {
            let p = collect_params(rest, line, false, false)?;
            GcodeCommand::Rapid { x: p.x, y: p.y }
        }
        ('G', "1" | "01") => {
            let p = collect_params(rest, line, true, false)?;
            GcodeCommand::Linear {
                x: p.x,
                y: p.y,
                feed: p.feed,
            }
        }
        ('G', "4" | "04") => {
            let p = collect_params(rest, line, false, true)?;
            let Some(seconds) = p.dwell else {
                return Err(GcodeError::Syntax {
                    line,
                    column: head.column,
                    token: "G4 without P".into(),
                });
            };
            if p.x.is_some() || p.y.is_some() {
                return Err(GcodeError::Syntax {
                    line,
                    column: head.column,
                    token: "G4 takes only P".into(),
                });
            }
            GcodeCommand::Dwell { seconds }
        }
        ('G', "28.2") => {
            let p = collect_params(rest, line, false, false)?;
            if p.x.is_none() && p.y.is_none() {
                return Err(GcodeError::Syntax {
                    line,
                    column: head.column,
                    token: "G28.2 without axis word".into(),
                });
            }
            GcodeCommand::Home {
                x: p.x.is_some(),
                y: p.y.is_some(),
            }
        }
        ('M', "8" | "08") => {
            expect_no_params(rest, line, "M8")?;
            GcodeCommand::SolenoidOn
        }
        ('M', "9" | "09") => {
            expect_no_params(rest, line, "M9")?;
            GcodeCommand::SolenoidOff
        }
        ('M', "30") => {
            expect_no_params(rest, line, "M30")?;
            GcodeCommand::ProgramEnd
        }
        ('G' | 'M', _) => {
            return Err(GcodeError::UnsupportedWord {
                line,
                word: word_str,
            });
        }
        (letter, _) if is_known_foreign_letter(letter) => {
            return Err(GcodeError::UnsupportedWord {
                line,
                word: word_str,
            });
        }
        _ => {
            return Err(GcodeError::Syntax {
                line,
                column: head.column,
                token: word_str,
            });
        }
    };
    Ok(Some(cmd))
}

/// Parses a whole program in the dialect. Unknown words are errors; blank
/// and comment-only lines keep their line numbers but yield no command.
pub fn parse_program(text: &str) -> Result<GcodeProgram, GcodeError> {
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let number = idx as u32 + 1;
        if let Some(command) = parse_line(raw, number)? {
            lines.push(ProgramLine { number, command });
        }
    }
    Ok(GcodeProgram { lines })
}
