//! PNG image and mask files.
//!
//! Images are 8-bit grayscale PNGs. Masks are 8-bit indexed PNGs whose
//! palette indices are the class ids, written and read through the `png`
//! crate directly so indices are never color-expanded or interpolated.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{FloatImage, LabelMask, N_CLASSES};

/// Display palette for mask files, one RGB triple per class.
pub const MASK_PALETTE: [[u8; 3]; N_CLASSES] = [
    [0, 0, 0],       // BG
    [230, 60, 50],   // ILM+RNFL
    [255, 160, 40],  // GCL+IPL
    [250, 230, 80],  // INL
    [90, 200, 90],   // OPL
    [70, 170, 230],  // ONL-EZ
    [120, 90, 220],  // EZ-IZ
    [240, 120, 200], // RPE
];

/// Width/height probe without decoding pixel data. Returns (height, width).
pub fn png_dimensions(path: &Path) -> Result<(usize, usize)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let decoder = png::Decoder::new(BufReader::new(file));
    let reader = decoder
        .read_info()
        .map_err(|e| Error::Data(format!("bad PNG header in {}: {e}", path.display())))?;
    let info = reader.info();
    Ok((info.height as usize, info.width as usize))
}

pub fn write_image_png(path: &Path, image: &FloatImage) -> Result<()> {
    let buf = image.to_u8();
    image::save_buffer(
        path,
        &buf,
        image.width as u32,
        image.height as u32,
        image::ColorType::L8,
    )
    .map_err(|e| Error::Data(format!("PNG write failed for {}: {e}", path.display())))
}

pub fn read_image_png(path: &Path) -> Result<FloatImage> {
    let img = image::open(path)
        .map_err(|e| Error::Data(format!("PNG read failed for {}: {e}", path.display())))?
        .into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    FloatImage::from_u8(h, w, img.as_raw())
}

pub fn write_mask_png(path: &Path, mask: &LabelMask) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), mask.width as u32, mask.height as u32);
    encoder.set_color(png::ColorType::Indexed);
    encoder.set_depth(png::BitDepth::Eight);
    let palette: Vec<u8> = MASK_PALETTE.iter().flatten().copied().collect();
    encoder.set_palette(palette);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::Data(format!("PNG mask header failed for {}: {e}", path.display())))?;
    writer
        .write_image_data(&mask.classes)
        .map_err(|e| Error::Data(format!("PNG mask write failed for {}: {e}", path.display())))
}

/// Read a class mask. Accepts our indexed layout as well as plain 8-bit
/// grayscale masks (class id stored as the gray value), which is how
/// third-party grader masks typically arrive.
pub fn read_mask_png(path: &Path) -> Result<LabelMask> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    // Keep palette indices as raw bytes instead of expanding to RGB.
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::Data(format!("bad PNG mask in {}: {e}", path.display())))?;
    let info = reader.info();
    let (h, w) = (info.height as usize, info.width as usize);
    match (info.color_type, info.bit_depth) {
        (png::ColorType::Indexed | png::ColorType::Grayscale, png::BitDepth::Eight) => {}
        other => {
            return Err(Error::Data(format!(
                "mask {} must be 8-bit indexed or grayscale PNG, got {:?}",
                path.display(),
                other
            )))
        }
    }
    let buf_size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::Data(format!("mask {} is too large to decode", path.display())))?;
    let mut buf = vec![0u8; buf_size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| Error::Data(format!("PNG mask decode failed for {}: {e}", path.display())))?;
    buf.truncate(frame.buffer_size());
    LabelMask::new(h, w, buf)
        .map_err(|_| Error::Data(format!("mask {} contains classes outside 0..8", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_roundtrip_is_exact_on_8bit_values() {
        let dir = std::env::temp_dir().join("gansl_io_test_img");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("x.png");
        // All 256 8-bit levels.
        let pixels: Vec<f32> = (0..256).map(|v| v as f32 / 127.5 - 1.0).collect();
        let img = FloatImage::new(16, 16, pixels).unwrap();
        write_image_png(&path, &img).unwrap();
        let back = read_image_png(&path).unwrap();
        assert_eq!(img, back);
        assert_eq!(back.pixels[0], -1.0);
        assert_eq!(back.pixels[255], 1.0);
    }

    #[test]
    fn mask_roundtrip_preserves_indices() {
        let dir = std::env::temp_dir().join("gansl_io_test_mask");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.png");
        let classes: Vec<u8> = (0..64).map(|i| (i % 8) as u8).collect();
        let mask = LabelMask::new(8, 8, classes).unwrap();
        write_mask_png(&path, &mask).unwrap();
        let back = read_mask_png(&path).unwrap();
        assert_eq!(mask, back);
    }
}
