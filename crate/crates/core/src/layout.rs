//! Physical dot layout: cell stream to millimeter coordinates on a page.
//!
//! The page frame has its origin at the top-left corner, x growing rightward
//! and y growing downward (toward subsequent lines). Conversion to the
//! machine frame happens at G-code emission.

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::braille::CellToken;
use crate::round3;

/// Tolerance for coordinate comparisons, well below any mechanical scale.
pub const COORD_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid page: {0}")]
    InvalidPage(String),
    #[error("page too narrow: usable width {usable:.3} mm does not fit one cell ({needed:.3} mm)")]
    PageTooNarrow { usable: f64, needed: f64 },
    #[error("page overflow: line {line} exceeds the vertical capacity of the page")]
    PageOverflow { line: usize },
    #[error("mirroring requires a front-side dot map")]
    MirrorRequiresFrontSide,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayoutWarning {
    /// Mirrored dots may leave the printable band when the horizontal
    /// margins differ.
    AsymmetricMargins { left: f64, right: f64 },
}

/// Which face of the paper a layout or raster is meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Front,
    Back,
}

/// Cell dimensions in millimeters. Defaults are the Marburg Medium sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellGeometry {
    /// Spacing between adjacent dots within a cell, both axes.
    pub dot_pitch: f64,
    /// Cell origin to the next cell origin within a line.
    pub cell_pitch: f64,
    /// Line origin to the next line origin.
    pub line_pitch: f64,
    /// Embossed dot diameter; used for rendering only.
    pub dot_diameter: f64,
}

impl Default for CellGeometry {
    fn default() -> Self {
        CellGeometry {
            dot_pitch: 2.5,
            cell_pitch: 6.0,
            line_pitch: 10.0,
            dot_diameter: 1.4,
        }
    }
}

impl CellGeometry {
    pub fn validate(&self) -> Result<(), LayoutError> {
        let err = |msg: String| Err(LayoutError::InvalidGeometry(msg));
        if !(self.dot_pitch > 0.0) {
            return err(format!(
                "dot_pitch must be positive, got {}",
                self.dot_pitch
            ));
        }
        if !(self.cell_pitch > self.dot_pitch) {
            return err(format!(
                "cell_pitch ({}) must exceed dot_pitch ({})",
                self.cell_pitch, self.dot_pitch
            ));
        }
        if !(self.line_pitch > 2.0 * self.dot_pitch) {
            return err(format!(
                "line_pitch ({}) must exceed the cell height (2 x dot_pitch = {})",
                self.line_pitch,
                2.0 * self.dot_pitch
            ));
        }
        if !(self.dot_diameter > 0.0) {
            return err(format!(
                "dot_diameter must be positive, got {}",
                self.dot_diameter
            ));
        }
        Ok(())
    }

    /// Cell width on paper: one dot pitch (two dot columns).
    pub fn cell_width(&self) -> f64 {
        self.dot_pitch
    }

    /// Cell height on paper: two dot pitches (three dot rows).
    pub fn cell_height(&self) -> f64 {
        2.0 * self.dot_pitch
    }
}

/// Paper size, printable margins and face.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PageSpec {
    pub width: f64,
    pub height: f64,
    pub margin_left: f64,
    pub margin_right: f64,
    pub margin_top: f64,
    pub margin_bottom: f64,
    pub side: Side,
}

impl Default for PageSpec {
    /// A 75 mm square sheet with 5 mm margins: the embossing area of the
    /// default machine (75 mm travel on both axes).
    fn default() -> Self {
        PageSpec {
            width: 75.0,
            height: 75.0,
            margin_left: 5.0,
            margin_right: 5.0,
            margin_top: 5.0,
            margin_bottom: 5.0,
            side: Side::Front,
        }
    }
}

impl PageSpec {
    pub fn usable_width(&self) -> f64 {
        self.width - self.margin_left - self.margin_right
    }

    pub fn usable_height(&self) -> f64 {
        self.height - self.margin_top - self.margin_bottom
    }

    pub fn validate(&self, geom: &CellGeometry) -> Result<(), LayoutError> {
        let err = |msg: String| Err(LayoutError::InvalidPage(msg));
        for (name, v) in [
            ("width", self.width),
            ("height", self.height),
            ("margin_left", self.margin_left),
            ("margin_right", self.margin_right),
            ("margin_top", self.margin_top),
            ("margin_bottom", self.margin_bottom),
        ] {
            if !v.is_finite() || v < 0.0 {
                return err(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.width <= 0.0 || self.height <= 0.0 {
            return err("page dimensions must be positive".into());
        }
        if self.usable_width() + COORD_EPS < geom.cell_width() {
            return err(format!(
                "usable width {:.3} mm does not fit one cell ({:.3} mm)",
                self.usable_width(),
                geom.cell_width()
            ));
        }
        if self.usable_height() + COORD_EPS < geom.cell_height() {
            return err(format!(
                "usable height {:.3} mm does not fit one cell ({:.3} mm)",
                self.usable_height(),
                geom.cell_height()
            ));
        }
        Ok(())
    }
}

/// One raised dot on the page.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dot {
    pub x: f64,
    pub y: f64,
    /// Sequential index of the owning cell in the laid-out stream.
    pub cell_index: usize,
    /// Dot number 1..=6 within the cell.
    pub dot_number: u8,
}

/// All raised dots of a laid-out document, plus the page they live on.
#[derive(Debug, Clone, PartialEq)]
pub struct DotMap {
    pub dots: Vec<Dot>,
    pub page: PageSpec,
}

impl DotMap {
    pub fn is_empty(&self) -> bool {
        self.dots.is_empty()
    }

    /// Serializes to the interchange schema:
    /// `{"page":{...},"dots":[{"x":..,"y":..,"cell":..,"dot":..}]}` with
    /// numbers rounded to at most three fractional digits.
    pub fn to_json_value(&self) -> serde_json::Value {
        json!({
            "page": {
                "width": round3(self.page.width),
                "height": round3(self.page.height),
                "margin_left": round3(self.page.margin_left),
                "margin_right": round3(self.page.margin_right),
                "margin_top": round3(self.page.margin_top),
                "margin_bottom": round3(self.page.margin_bottom),
                "side": match self.page.side { Side::Front => "front", Side::Back => "back" },
            },
            "dots": self.dots.iter().map(|d| json!({
                "x": round3(d.x),
                "y": round3(d.y),
                "cell": d.cell_index,
                "dot": d.dot_number,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn to_json_string(&self) -> String {
        self.to_json_value().to_string()
    }
}

/// Maximum number of cells per line: the largest n with
/// `(n-1) * cell_pitch + dot_pitch <= usable width`.
pub fn line_capacity(page: &PageSpec, geom: &CellGeometry) -> Result<usize, LayoutError> {
    geom.validate()?;
    let usable = page.usable_width();
    if usable + COORD_EPS < geom.cell_width() {
        return Err(LayoutError::PageTooNarrow {
            usable,
            needed: geom.cell_width(),
        });
    }
    page.validate(geom)?;
    let n = ((usable - geom.cell_width() + COORD_EPS) / geom.cell_pitch).floor() as usize + 1;
    Ok(n)
}

/// Maximum number of Braille lines on the page: the largest r with
/// `(r-1) * line_pitch + 2 * dot_pitch <= usable height`.
pub fn row_capacity(page: &PageSpec, geom: &CellGeometry) -> Result<usize, LayoutError> {
    geom.validate()?;
    page.validate(geom)?;
    let usable = page.usable_height();
    let r = ((usable - geom.cell_height() + COORD_EPS) / geom.line_pitch).floor() as usize + 1;
    Ok(r)
}

/// Places a cell stream on the page. Cell k of line r has its origin at
/// `(margin_left + k * cell_pitch, margin_top + r * line_pitch)`; dot columns
/// sit at x-offsets {0, dot_pitch} and dot rows at y-offsets
/// {0, dot_pitch, 2 * dot_pitch}. Lines wrap hard at [`line_capacity`]; only
/// raised dots emit entries.
pub fn layout_dots(
    tokens: &[CellToken],
    page: &PageSpec,
    geom: &CellGeometry,
) -> Result<DotMap, LayoutError> {
    let cols = line_capacity(page, geom)?;
    let rows = row_capacity(page, geom)?;

    let mut dots = Vec::new();
    let mut col = 0usize;
    let mut row = 0usize;
    let mut cell_index = 0usize;

    for token in tokens {
        match token {
            CellToken::LineBreak => {
                row += 1;
                col = 0;
            }
            CellToken::Cell(cell) => {
                if col == cols {
                    row += 1;
                    col = 0;
                }
                if row >= rows {
                    return Err(LayoutError::PageOverflow { line: row });
                }
                let origin_x = page.margin_left + col as f64 * geom.cell_pitch;
                let origin_y = page.margin_top + row as f64 * geom.line_pitch;
                for dot in 1u8..=6 {
                    if cell.has_dot(dot) {
                        let dcol = (dot - 1) / 3; // 0 = left column, 1 = right
                        let drow = (dot - 1) % 3;
                        dots.push(Dot {
                            x: origin_x + dcol as f64 * geom.dot_pitch,
                            y: origin_y + drow as f64 * geom.dot_pitch,
                            cell_index,
                            dot_number: dot,
                        });
                    }
                }
                col += 1;
                cell_index += 1;
            }
        }
    }

    Ok(DotMap { dots, page: *page })
}

/// Reflects a front-side map for reverse-side embossing: `x' = width - x`,
/// y unchanged, side flipped to back. Warns when the horizontal margins are
/// asymmetric, since reflected dots may then leave the printable band.
pub fn mirror_dotmap(map: &DotMap) -> Result<(DotMap, Vec<LayoutWarning>), LayoutError> {
    if map.page.side != Side::Front {
        return Err(LayoutError::MirrorRequiresFrontSide);
    }
    let mut warnings = Vec::new();
    if (map.page.margin_left - map.page.margin_right).abs() > COORD_EPS {
        warnings.push(LayoutWarning::AsymmetricMargins {
            left: map.page.margin_left,
            right: map.page.margin_right,
        });
    }
    let mut page = map.page;
    page.side = Side::Back;
    let dots = map
        .dots
        .iter()
        .map(|d| Dot {
            x: map.page.width - d.x,
            ..*d
        })
        .collect();
    Ok((DotMap { dots, page }, warnings))
}
