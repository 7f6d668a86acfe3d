//! SVG rendering of strike rasters: one circle per strike, drawn on the
//! machine's embossing area. The machine frame (y up) is flipped to the
//! usual image frame (y down), so the plot reads like the finished page.

use crate::layout::CellGeometry;
use crate::sim::{MachineConfig, StrikeRaster};

fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

/// Renders a raster as a standalone SVG document. Output is
/// byte-deterministic for identical inputs.
pub fn raster_to_svg(raster: &StrikeRaster, cfg: &MachineConfig, geom: &CellGeometry) -> String {
    let width = cfg.x.travel_max;
    let height = cfg.bed_depth;
    let r = geom.dot_diameter / 2.0;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}mm\" height=\"{h}mm\" \
         viewBox=\"0 0 {w} {h}\">\n",
        w = fmt3(width),
        h = fmt3(height),
    ));
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        fmt3(width),
        fmt3(height),
    ));
    for strike in &raster.strikes {
        let cy = height - strike.y;
        out.push_str(&format!(
            "  <circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"black\"/>\n",
            fmt3(strike.x),
            fmt3(cy),
            fmt3(r),
        ));
    }
    out.push_str("</svg>\n");
    out
}
