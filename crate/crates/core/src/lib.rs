//! Braille embossing CAM toolchain.
//!
//! The pipeline runs text through Grade-1 Braille translation ([`braille`]),
//! physical dot layout on a page ([`layout`]), G-code emission and parsing in
//! the embosser dialect ([`gcode`]), execution on a virtual motion controller
//! ([`sim`]), and strike-raster decoding back to text ([`decoder`]) for
//! round-trip verification. [`sender`] streams programs to a controller with
//! planner-buffer flow control, and [`config`] ties the knobs together.

pub mod braille;
pub mod config;
pub mod decoder;
pub mod gcode;
pub mod layout;
pub mod sender;
pub mod sim;
pub mod svg;

/// Round to three fractional digits, the precision used by every serialized
/// coordinate and by the G-code dialect.
pub(crate) fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}
