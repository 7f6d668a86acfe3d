//! Strike-raster decoding: reconstruct Braille cells (and from there text)
//! from the virtual embossed page. This is the verification back-end for
//! round-trip testing.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braille::BrailleCell;
use crate::layout::{line_capacity, row_capacity, CellGeometry, PageSpec, Side};
use crate::sim::{Strike, StrikeRaster};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("invalid decode options: {0}")]
    InvalidOptions(String),
    #[error(
        "strike at ({x:.3}, {y:.3}) is farther than the snap tolerance from every nominal dot"
    )]
    UnassignedStrike { x: f64, y: f64 },
    #[error("two strikes map to dot {dot} of cell ({line}, {column})")]
    DuplicateStrike { line: usize, column: usize, dot: u8 },
    #[error(transparent)]
    Layout(#[from] crate::layout::LayoutError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeWarning {
    /// A stray strike skipped because `require_all_assigned` is off.
    UnassignedStrike { x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeOptions {
    /// Maximum distance from a strike to its nominal grid dot, mm. Must be
    /// positive and below half the dot pitch so assignment stays
    /// unambiguous.
    pub snap_tolerance: f64,
    /// Fail on stray strikes instead of skipping them with a warning.
    pub require_all_assigned: bool,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions {
            snap_tolerance: 0.25,
            require_all_assigned: true,
        }
    }
}

impl DecodeOptions {
    /// Geometry-independent sanity, applied at config load.
    pub fn validate(&self) -> Result<(), DecodeError> {
        if !(self.snap_tolerance > 0.0) {
            return Err(DecodeError::InvalidOptions(format!(
                "snap_tolerance must be positive, got {}",
                self.snap_tolerance
            )));
        }
        Ok(())
    }

    /// Full check against the geometry in effect; ambiguous assignment is
    /// only detectable once the dot pitch is known.
    pub fn validate_for(&self, geom: &CellGeometry) -> Result<(), DecodeError> {
        self.validate()?;
        if self.snap_tolerance >= geom.dot_pitch / 2.0 {
            return Err(DecodeError::InvalidOptions(format!(
                "snap_tolerance {} must sit in (0, dot_pitch/2 = {})",
                self.snap_tolerance,
                geom.dot_pitch / 2.0
            )));
        }
        Ok(())
    }
}

/// Result of [`raster_to_cells`]: cell rows in reading order, trailing
/// blank cells trimmed per line.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPage {
    pub lines: Vec<Vec<BrailleCell>>,
    pub warnings: Vec<DecodeWarning>,
}

/// Unfolds a back-side raster into front-side page coordinates:
/// `x' = width - x`. The inverse of the layout mirror.
pub fn unfold_back_side(raster: &StrikeRaster, page_width: f64) -> StrikeRaster {
    StrikeRaster {
        strikes: raster
            .strikes
            .iter()
            .map(|s| Strike {
                x: page_width - s.x,
                y: s.y,
                t: s.t,
            })
            .collect(),
        side: Side::Front,
    }
}

/// Assigns each strike to its nearest nominal grid dot (cell column, line,
/// dot number) and assembles cells. Strikes must already be in the page
/// frame; unfold back-side rasters first.
pub fn raster_to_cells(
    raster: &StrikeRaster,
    page: &PageSpec,
    geom: &CellGeometry,
    opt: &DecodeOptions,
) -> Result<DecodedPage, DecodeError> {
    opt.validate_for(geom)?;
    let cols = line_capacity(page, geom)?;
    let rows = row_capacity(page, geom)?;

    let mut grid: BTreeMap<(usize, usize), u8> = BTreeMap::new();
    let mut warnings = Vec::new();

    for strike in &raster.strikes {
        match nearest_dot(strike, page, geom, cols, rows) {
            Some((line, column, dot, dist)) if dist <= opt.snap_tolerance => {
                let mask = grid.entry((line, column)).or_insert(0);
                let bit = 1u8 << (dot - 1);
                if *mask & bit != 0 {
                    return Err(DecodeError::DuplicateStrike { line, column, dot });
                }
                *mask |= bit;
            }
            _ => {
                if opt.require_all_assigned {
                    return Err(DecodeError::UnassignedStrike {
                        x: strike.x,
                        y: strike.y,
                    });
                }
                warnings.push(DecodeWarning::UnassignedStrike {
                    x: strike.x,
                    y: strike.y,
                });
            }
        }
    }

    let mut lines = Vec::new();
    if let Some(max_line) = grid.keys().map(|(line, _)| *line).max() {
        for line in 0..=max_line {
            let max_col = grid
                .range((line, 0)..=(line, usize::MAX))
                .map(|((_, col), _)| *col)
                .max();
            let mut row = Vec::new();
            if let Some(max_col) = max_col {
                for col in 0..=max_col {
                    let mask = grid.get(&(line, col)).copied().unwrap_or(0);
                    row.push(BrailleCell::from_mask(mask).expect("six-dot mask by construction"));
                }
            }
            lines.push(row);
        }
    }

    Ok(DecodedPage { lines, warnings })
}

/// Finds the nominal dot nearest to a strike: tries each of the six dot
/// positions' offsets, rounding to the closest cell column and line.
fn nearest_dot(
    strike: &Strike,
    page: &PageSpec,
    geom: &CellGeometry,
    cols: usize,
    rows: usize,
) -> Option<(usize, usize, u8, f64)> {
    let mut best: Option<(usize, usize, u8, f64)> = None;
    for dcol in 0..2u8 {
        for drow in 0..3u8 {
            let col = ((strike.x - page.margin_left - dcol as f64 * geom.dot_pitch)
                / geom.cell_pitch)
                .round();
            let line = ((strike.y - page.margin_top - drow as f64 * geom.dot_pitch)
                / geom.line_pitch)
                .round();
            if !col.is_finite() || !line.is_finite() {
                continue;
            }
            let col = col.clamp(0.0, cols as f64 - 1.0) as usize;
            let line = line.clamp(0.0, rows as f64 - 1.0) as usize;
            let nx = page.margin_left + col as f64 * geom.cell_pitch + dcol as f64 * geom.dot_pitch;
            let ny = page.margin_top + line as f64 * geom.line_pitch + drow as f64 * geom.dot_pitch;
            let dist = ((strike.x - nx).powi(2) + (strike.y - ny).powi(2)).sqrt();
            let dot = dcol * 3 + drow + 1;
            if best.is_none() || dist < best.unwrap().3 {
                best = Some((line, col, dot, dist));
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::braille::{
        decode_cells, encode_text, tokens_from_lines, TranslationTable, UnknownCharPolicy,
    };
    use crate::layout::{layout_dots, mirror_dotmap};

    fn defaults() -> (PageSpec, CellGeometry, DecodeOptions) {
        (
            PageSpec::default(),
            CellGeometry::default(),
            DecodeOptions::default(),
        )
    }

    fn a4() -> PageSpec {
        PageSpec {
            width: 210.0,
            height: 297.0,
            margin_left: 15.0,
            margin_right: 15.0,
            margin_top: 15.0,
            margin_bottom: 15.0,
            side: Side::Front,
        }
    }

    fn raster_of(points: &[(f64, f64)]) -> StrikeRaster {
        StrikeRaster {
            strikes: points
                .iter()
                .enumerate()
                .map(|(i, (x, y))| Strike {
                    x: *x,
                    y: *y,
                    t: i as f64,
                })
                .collect(),
            side: Side::Front,
        }
    }

    #[test]
    fn one_strike_decodes_to_a() {
        let (_, geom, opt) = defaults();
        let page = a4();
        let decoded = raster_to_cells(&raster_of(&[(15.0, 15.0)]), &page, &geom, &opt).unwrap();
        assert_eq!(
            decoded.lines,
            vec![vec![BrailleCell::from_mask(0x01).unwrap()]]
        );
    }

    #[test]
    fn empty_raster_decodes_empty() {
        let (page, geom, opt) = defaults();
        let decoded = raster_to_cells(&raster_of(&[]), &page, &geom, &opt).unwrap();
        assert!(decoded.lines.is_empty());
        assert!(decoded.warnings.is_empty());
    }

    #[test]
    fn jittered_strike_still_snaps() {
        let (_, geom, opt) = defaults();
        let page = a4();
        // Distance from (15.2, 14.9) to (15, 15): sqrt(0.04 + 0.01) ~ 0.224.
        let decoded = raster_to_cells(&raster_of(&[(15.2, 14.9)]), &page, &geom, &opt).unwrap();
        assert_eq!(
            decoded.lines,
            vec![vec![BrailleCell::from_mask(0x01).unwrap()]]
        );
    }

    #[test]
    fn stray_strike_errors_or_warns() {
        let (_, geom, mut opt) = defaults();
        let page = a4();
        // Halfway between the two dot columns of cell 0: 1.25 mm from both.
        let stray = (15.0 + 1.25, 15.0);
        let err = raster_to_cells(&raster_of(&[stray]), &page, &geom, &opt).unwrap_err();
        assert!(matches!(err, DecodeError::UnassignedStrike { .. }));

        opt.require_all_assigned = false;
        let decoded = raster_to_cells(&raster_of(&[stray]), &page, &geom, &opt).unwrap();
        assert!(decoded.lines.is_empty());
        assert_eq!(decoded.warnings.len(), 1);
    }

    #[test]
    fn duplicate_strikes_rejected() {
        let (_, geom, opt) = defaults();
        let page = a4();
        let err = raster_to_cells(
            &raster_of(&[(15.0, 15.0), (15.05, 15.0)]),
            &page,
            &geom,
            &opt,
        )
        .unwrap_err();
        assert_eq!(
            err,
            DecodeError::DuplicateStrike {
                line: 0,
                column: 0,
                dot: 1
            }
        );
    }

    #[test]
    fn tolerance_must_stay_below_half_pitch() {
        let (page, mut geom, opt) = defaults();
        geom.dot_pitch = 0.4; // tolerance 0.25 >= 0.2
        geom.cell_pitch = 1.0;
        geom.line_pitch = 1.0; // invalid too, but tolerance check comes first
        let err = raster_to_cells(&raster_of(&[]), &page, &geom, &opt).unwrap_err();
        assert!(matches!(err, DecodeError::InvalidOptions(_)));
    }

    #[test]
    fn interior_blank_cells_become_spaces_and_trailing_ones_vanish() {
        let table = TranslationTable::grade1();
        let toks = encode_text("a b", &table, UnknownCharPolicy::Strict)
            .unwrap()
            .tokens;
        let page = a4();
        let geom = CellGeometry::default();
        let map = layout_dots(&toks, &page, &geom).unwrap();
        let raster = raster_of(&map.dots.iter().map(|d| (d.x, d.y)).collect::<Vec<_>>());
        let decoded = raster_to_cells(&raster, &page, &geom, &DecodeOptions::default()).unwrap();
        let text = decode_cells(&tokens_from_lines(&decoded.lines), &table).unwrap();
        assert_eq!(text, "a b");
    }

    #[test]
    fn multi_line_with_blank_middle_line() {
        let table = TranslationTable::grade1();
        let input = "ab\n\ncd";
        let toks = encode_text(input, &table, UnknownCharPolicy::Strict)
            .unwrap()
            .tokens;
        let page = a4();
        let geom = CellGeometry::default();
        let map = layout_dots(&toks, &page, &geom).unwrap();
        let raster = raster_of(&map.dots.iter().map(|d| (d.x, d.y)).collect::<Vec<_>>());
        let decoded = raster_to_cells(&raster, &page, &geom, &DecodeOptions::default()).unwrap();
        assert_eq!(decoded.lines.len(), 3);
        assert!(decoded.lines[1].is_empty());
        let text = decode_cells(&tokens_from_lines(&decoded.lines), &table).unwrap();
        assert_eq!(text, input);
    }

    #[test]
    fn mirrored_page_unfolds_and_decodes() {
        let table = TranslationTable::grade1();
        let input = "mirror test 7";
        let toks = encode_text(input, &table, UnknownCharPolicy::Strict)
            .unwrap()
            .tokens;
        let page = a4();
        let geom = CellGeometry::default();
        let (back, _) = mirror_dotmap(&layout_dots(&toks, &page, &geom).unwrap()).unwrap();
        let back_raster = StrikeRaster {
            strikes: back
                .dots
                .iter()
                .map(|d| Strike {
                    x: d.x,
                    y: d.y,
                    t: 0.0,
                })
                .collect(),
            side: Side::Back,
        };
        let unfolded = unfold_back_side(&back_raster, page.width);
        assert_eq!(unfolded.side, Side::Front);
        let decoded = raster_to_cells(&unfolded, &page, &geom, &DecodeOptions::default()).unwrap();
        let text = decode_cells(&tokens_from_lines(&decoded.lines), &table).unwrap();
        assert_eq!(text, input);
    }

    #[test]
    fn uniform_jitter_below_tolerance_never_changes_the_text() {
        // Deterministic pseudo-jitter; avoids pulling in a rng here.
        let table = TranslationTable::grade1();
        let input = "jitter 123 test";
        let toks = encode_text(input, &table, UnknownCharPolicy::Strict)
            .unwrap()
            .tokens;
        let page = a4();
        let geom = CellGeometry::default();
        let opt = DecodeOptions::default();
        let map = layout_dots(&toks, &page, &geom).unwrap();
        let mut phase = 0.37f64;
        let jittered: Vec<(f64, f64)> = map
            .dots
            .iter()
            .map(|d| {
                phase = (phase * 997.13).fract();
                let angle = phase * std::f64::consts::TAU;
                let r = phase * (opt.snap_tolerance - 1e-6);
                (d.x + r * angle.cos(), d.y + r * angle.sin())
            })
            .collect();
        let decoded = raster_to_cells(&raster_of(&jittered), &page, &geom, &opt).unwrap();
        let text = decode_cells(&tokens_from_lines(&decoded.lines), &table).unwrap();
        assert_eq!(text, input);
    }
}
