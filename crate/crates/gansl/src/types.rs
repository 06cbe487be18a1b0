//! Shared image / mask carriers.

use crate::error::{Error, Result};

/// Number of segmentation classes: background plus seven retinal layers.
pub const N_CLASSES: usize = 8;

/// Canonical class names, in fixed class-index order. Used in manifests
/// and CSV output.
pub const CLASS_NAMES: [&str; N_CLASSES] =
    ["BG", "ILM+RNFL", "GCL+IPL", "INL", "OPL", "ONL-EZ", "EZ-IZ", "RPE"];

/// Display names for rendered tables (spaced like the published layout).
pub const CLASS_DISPLAY_NAMES: [&str; N_CLASSES] =
    ["BG", "ILM + RNFL", "GCL + IPL", "INL", "OPL", "ONL - EZ", "EZ - IZ", "RPE"];

/// A single-channel float image with values in [-1, 1], row major.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f32>,
}

impl FloatImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f32>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::Shape(format!(
                "image buffer has {} values, expected {}x{}",
                pixels.len(),
                height,
                width
            )));
        }
        Ok(FloatImage { height, width, pixels })
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.pixels[row * self.width + col]
    }

    /// Quantize [-1, 1] to 8-bit, the export representation.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&v| {
                let v = ((v as f64 + 1.0) * 127.5).round();
                v.clamp(0.0, 255.0) as u8
            })
            .collect()
    }

    /// Inverse of [`to_u8`](Self::to_u8): 0 maps to -1.0, 255 to 1.0.
    pub fn from_u8(height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        let pixels = bytes.iter().map(|&b| b as f32 / 127.5 - 1.0).collect();
        FloatImage::new(height, width, pixels)
    }
}

/// Per-pixel class indices in 0..8, row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    pub height: usize,
    pub width: usize,
    pub classes: Vec<u8>,
}

impl LabelMask {
    pub fn new(height: usize, width: usize, classes: Vec<u8>) -> Result<Self> {
        if classes.len() != height * width {
            return Err(Error::Shape(format!(
                "mask buffer has {} values, expected {}x{}",
                classes.len(),
                height,
                width
            )));
        }
        if let Some(&bad) = classes.iter().find(|&&c| c as usize >= N_CLASSES) {
            return Err(Error::Data(format!(
                "mask contains class {bad}, valid range is 0..{N_CLASSES}"
            )));
        }
        Ok(LabelMask { height, width, classes })
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.classes[row * self.width + col]
    }

    /// Which classes occur at least once.
    pub fn present_classes(&self) -> [bool; N_CLASSES] {
        let mut present = [false; N_CLASSES];
        for &c in &self.classes {
            present[c as usize] = true;
        }
        present
    }
}
