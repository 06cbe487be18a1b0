//! Deterministic PNG figures: grouped per-class IOU bars and
//! image/mask overlay panels. Rendered directly into pixel buffers with an
//! embedded 5x7 font so output bytes depend only on the inputs.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::pipeline::MASK_PALETTE;
use crate::types::{FloatImage, LabelMask, CLASS_DISPLAY_NAMES, N_CLASSES};

/// 5x7 column-encoded glyphs (bit 0 = top row) for the charset the
/// reports use; anything else renders as a blank cell.
fn glyph(c: char) -> [u8; 5] {
    match c.to_ascii_uppercase() {
        ' ' => [0x00, 0x00, 0x00, 0x00, 0x00],
        '%' => [0x23, 0x13, 0x08, 0x64, 0x62],
        '+' => [0x08, 0x08, 0x3E, 0x08, 0x08],
        '-' => [0x08, 0x08, 0x08, 0x08, 0x08],
        '.' => [0x00, 0x60, 0x60, 0x00, 0x00],
        '/' => [0x20, 0x10, 0x08, 0x04, 0x02],
        '_' => [0x40, 0x40, 0x40, 0x40, 0x40],
        '0' => [0x3E, 0x51, 0x49, 0x45, 0x3E],
        '1' => [0x00, 0x42, 0x7F, 0x40, 0x00],
        '2' => [0x42, 0x61, 0x51, 0x49, 0x46],
        '3' => [0x21, 0x41, 0x45, 0x4B, 0x31],
        '4' => [0x18, 0x14, 0x12, 0x7F, 0x10],
        '5' => [0x27, 0x45, 0x45, 0x45, 0x39],
        '6' => [0x3C, 0x4A, 0x49, 0x49, 0x30],
        '7' => [0x01, 0x71, 0x09, 0x05, 0x03],
        '8' => [0x36, 0x49, 0x49, 0x49, 0x36],
        '9' => [0x06, 0x49, 0x49, 0x29, 0x1E],
        'A' => [0x7E, 0x11, 0x11, 0x11, 0x7E],
        'B' => [0x7F, 0x49, 0x49, 0x49, 0x36],
        'C' => [0x3E, 0x41, 0x41, 0x41, 0x22],
        'D' => [0x7F, 0x41, 0x41, 0x22, 0x1C],
        'E' => [0x7F, 0x49, 0x49, 0x49, 0x41],
        'F' => [0x7F, 0x09, 0x09, 0x09, 0x01],
        'G' => [0x3E, 0x41, 0x49, 0x49, 0x7A],
        'H' => [0x7F, 0x08, 0x08, 0x08, 0x7F],
        'I' => [0x00, 0x41, 0x7F, 0x41, 0x00],
        'J' => [0x20, 0x40, 0x41, 0x3F, 0x01],
        'K' => [0x7F, 0x08, 0x14, 0x22, 0x41],
        'L' => [0x7F, 0x40, 0x40, 0x40, 0x40],
        'M' => [0x7F, 0x02, 0x0C, 0x02, 0x7F],
        'N' => [0x7F, 0x04, 0x08, 0x10, 0x7F],
        'O' => [0x3E, 0x41, 0x41, 0x41, 0x3E],
        'P' => [0x7F, 0x09, 0x09, 0x09, 0x06],
        'Q' => [0x3E, 0x41, 0x51, 0x21, 0x5E],
        'R' => [0x7F, 0x09, 0x19, 0x29, 0x46],
        'S' => [0x46, 0x49, 0x49, 0x49, 0x31],
        'T' => [0x01, 0x01, 0x7F, 0x01, 0x01],
        'U' => [0x3F, 0x40, 0x40, 0x40, 0x3F],
        'V' => [0x1F, 0x20, 0x40, 0x20, 0x1F],
        'W' => [0x3F, 0x40, 0x38, 0x40, 0x3F],
        'X' => [0x63, 0x14, 0x08, 0x14, 0x63],
        'Y' => [0x07, 0x08, 0x70, 0x08, 0x07],
        'Z' => [0x61, 0x51, 0x49, 0x45, 0x43],
        _ => [0x00, 0x00, 0x00, 0x00, 0x00],
    }
}

struct Canvas {
    w: usize,
    h: usize,
    rgb: Vec<u8>,
}

impl Canvas {
    fn new(w: usize, h: usize) -> Self {
        Canvas { w, h, rgb: vec![255; w * h * 3] }
    }

    fn put(&mut self, x: usize, y: usize, color: [u8; 3]) {
        if x < self.w && y < self.h {
            let i = (y * self.w + x) * 3;
            self.rgb[i..i + 3].copy_from_slice(&color);
        }
    }

    fn fill_rect(&mut self, x0: usize, y0: usize, w: usize, h: usize, color: [u8; 3]) {
        for y in y0..y0 + h {
            for x in x0..x0 + w {
                self.put(x, y, color);
            }
        }
    }

    fn text(&mut self, x0: usize, y0: usize, text: &str, color: [u8; 3]) {
        let mut x = x0;
        for c in text.chars() {
            let cols = glyph(c);
            for (cx, bits) in cols.iter().enumerate() {
                for cy in 0..7 {
                    if bits >> cy & 1 == 1 {
                        self.put(x + cx, y0 + cy, color);
                    }
                }
            }
            x += 6;
        }
    }

    fn text_width(text: &str) -> usize {
        text.chars().count() * 6
    }

    fn save(&self, path: &Path) -> Result<()> {
        image::save_buffer(path, &self.rgb, self.w as u32, self.h as u32, image::ColorType::Rgb8)
            .map_err(|e| Error::Data(format!("chart write failed for {}: {e}", path.display())))
    }
}

const BLACK: [u8; 3] = [20, 20, 20];
const GRAY: [u8; 3] = [200, 200, 200];

/// Column colors for bar charts.
const SERIES_COLORS: [[u8; 3]; 6] = [
    [66, 133, 244],
    [219, 68, 55],
    [244, 180, 0],
    [15, 157, 88],
    [171, 71, 188],
    [0, 172, 193],
];

/// Grouped per-class IOU bar chart: one group per class, one bar per
/// report column, y axis 0..100%.
pub fn emit_bar_chart(report: &EvalReport, path: &Path) -> Result<()> {
    let n_cols = report.columns.len().max(1);
    let bar_w = 12;
    let group_gap = 16;
    let group_w = n_cols * (bar_w + 2) + group_gap;
    let plot_w = N_CLASSES * group_w;
    let (ml, mr, mt, mb) = (48, 16, 30 + 12 * report.columns.len(), 26);
    let (w, h) = (ml + plot_w + mr, 260 + mt + mb);
    let plot_h = h - mt - mb;
    let mut canvas = Canvas::new(w, h);

    // Axes and horizontal grid lines every 20%.
    for tick in 0..=5 {
        let frac = tick as f64 / 5.0;
        let y = mt + plot_h - (frac * plot_h as f64) as usize;
        canvas.fill_rect(ml, y, plot_w, 1, GRAY);
        canvas.text(8, y.saturating_sub(3), &format!("{:>3}", tick * 20), BLACK);
    }
    canvas.fill_rect(ml, mt, 1, plot_h, BLACK);
    canvas.fill_rect(ml, mt + plot_h, plot_w, 1, BLACK);

    // Legend.
    for (i, col) in report.columns.iter().enumerate() {
        let y = 8 + 12 * i;
        canvas.fill_rect(ml, y, 8, 8, SERIES_COLORS[i % SERIES_COLORS.len()]);
        canvas.text(ml + 12, y, &col.name, BLACK);
    }

    for c in 0..N_CLASSES {
        let gx = ml + c * group_w + group_gap / 2;
        for (i, col) in report.columns.iter().enumerate() {
            let v = col.iou_pct[c].clamp(0.0, 100.0);
            let bh = (v / 100.0 * plot_h as f64).round() as usize;
            canvas.fill_rect(
                gx + i * (bar_w + 2),
                mt + plot_h - bh,
                bar_w,
                bh,
                SERIES_COLORS[i % SERIES_COLORS.len()],
            );
        }
        let label = CLASS_DISPLAY_NAMES[c].replace(' ', "");
        let lx = gx + (group_w - group_gap) / 2;
        canvas.text(lx.saturating_sub(Canvas::text_width(&label) / 2), mt + plot_h + 8, &label, BLACK);
    }
    canvas.save(path)
}

fn blend(gray: u8, color: [u8; 3], alpha: f64) -> [u8; 3] {
    let mut out = [0u8; 3];
    for (o, c) in out.iter_mut().zip(color) {
        *o = ((1.0 - alpha) * gray as f64 + alpha * c as f64).round() as u8;
    }
    out
}

/// Image + mask overlay panel; with a prediction, ground truth and
/// prediction render side by side separated by a thin rule.
pub fn emit_overlay(
    image: &FloatImage,
    mask: &LabelMask,
    pred: Option<&LabelMask>,
    path: &Path,
) -> Result<()> {
    if (image.height, image.width) != (mask.height, mask.width) {
        return Err(Error::Shape("overlay image/mask shapes differ".into()));
    }
    let (h, w) = (image.height, image.width);
    let panels: Vec<&LabelMask> = std::iter::once(mask).chain(pred).collect();
    let total_w = panels.len() * w + panels.len() - 1;
    let mut canvas = Canvas::new(total_w, h);
    let gray = image.to_u8();
    for (p, m) in panels.iter().enumerate() {
        if (m.height, m.width) != (h, w) {
            return Err(Error::Shape("overlay prediction shape differs".into()));
        }
        let x0 = p * (w + 1);
        for y in 0..h {
            for x in 0..w {
                let g = gray[y * w + x];
                let class = m.get(y, x) as usize;
                let px = if class == 0 {
                    [g, g, g]
                } else {
                    blend(g, MASK_PALETTE[class], 0.45)
                };
                canvas.put(x0 + x, y, px);
            }
        }
        if p + 1 < panels.len() {
            canvas.fill_rect(x0 + w, 0, 1, h, BLACK);
        }
    }
    canvas.save(path)
}

/// Emit the standard figure set for a report: the grouped bar chart.
/// Returns the written paths.
pub fn emit_plots(report: &EvalReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let bar = out_dir.join("iou_bars.png");
    emit_bar_chart(report, &bar)?;
    Ok(vec![bar])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ReportColumn, ReportMeta};

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("gansl_plots_test");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn bar_chart_bytes_are_deterministic() {
        let report = EvalReport {
            columns: vec![ReportColumn {
                name: "MODEL".into(),
                iou_pct: [99.7, 80.4, 87.7, 71.7, 65.7, 87.4, 77.8, 62.8],
                vacuous: [false; N_CLASSES],
            }],
            metadata: ReportMeta::default(),
        };
        let p1 = tmp("bars1.png");
        let p2 = tmp("bars2.png");
        emit_bar_chart(&report, &p1).unwrap();
        emit_bar_chart(&report, &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn overlay_matches_input_resolution() {
        let image = FloatImage::new(8, 8, vec![0.0; 64]).unwrap();
        let mask = LabelMask::new(8, 8, (0..64).map(|i| (i % 8) as u8).collect()).unwrap();
        let path = tmp("overlay.png");
        emit_overlay(&image, &mask, None, &path).unwrap();
        let img = image::open(&path).unwrap();
        assert_eq!((img.width(), img.height()), (8, 8));
    }
}
