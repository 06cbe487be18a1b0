//! Deterministic batch loading.
//!
//! One loader per (split, domain) selection. Each epoch is a seeded
//! permutation of the selection; batches take consecutive permutation
//! slots and a tail shorter than the batch size is discarded, so no entry
//! repeats within an epoch. Loader state is (epoch, cursor) and restores
//! exactly.

use tch::Tensor;

use super::{read_image_png, read_mask_png, DatasetManifest, Domain, Split};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{FloatImage, LabelMask};

/// One loaded batch: images (B, 1, H, W) in [-1, 1]; masks (B, H, W) as
/// i64 class ids, present only when every sampled entry carries a mask.
pub struct Batch {
    pub images: Tensor,
    pub masks: Option<Tensor>,
    /// Selection indices the batch was drawn from, for debugging.
    pub entry_indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LoaderState {
    pub epoch: u64,
    pub cursor: usize,
}

struct LoaderEntry {
    image_path: std::path::PathBuf,
    mask_path: Option<std::path::PathBuf>,
    tile: super::TileRect,
}

pub struct BatchLoader {
    entries: Vec<LoaderEntry>,
    batch_size: usize,
    seed: u64,
    epoch: u64,
    cursor: usize,
    order: Vec<usize>,
}

impl BatchLoader {
    pub fn new(
        manifest: &DatasetManifest,
        split: Split,
        domain: Domain,
        batch_size: usize,
        seed: u64,
    ) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        let entries: Vec<LoaderEntry> = manifest
            .selection(split, domain)
            .into_iter()
            .map(|e| LoaderEntry {
                image_path: manifest.root.join(&e.image_path),
                mask_path: e.mask_path.as_ref().map(|m| manifest.root.join(m)),
                tile: e.tile_rect,
            })
            .collect();
        if entries.is_empty() {
            return Err(Error::Data(format!(
                "empty selection: split {split}, domain {domain}"
            )));
        }
        if entries.len() < batch_size {
            return Err(Error::Data(format!(
                "selection of {} entries cannot fill batches of {batch_size}",
                entries.len()
            )));
        }
        let mut loader = BatchLoader {
            entries,
            batch_size,
            seed,
            epoch: 0,
            cursor: 0,
            order: Vec::new(),
        };
        loader.reshuffle();
        Ok(loader)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn reshuffle(&mut self) {
        self.order = (0..self.entries.len()).collect();
        RngStream::new(self.seed, "loader.epoch", self.epoch).shuffle(&mut self.order);
    }

    pub fn state(&self) -> LoaderState {
        LoaderState { epoch: self.epoch, cursor: self.cursor }
    }

    pub fn restore(&mut self, state: LoaderState) {
        self.epoch = state.epoch;
        self.cursor = state.cursor;
        self.reshuffle();
    }

    pub fn next_batch(&mut self) -> Result<Batch> {
        if self.cursor + self.batch_size > self.entries.len() {
            self.epoch += 1;
            self.cursor = 0;
            self.reshuffle();
        }
        let slots = &self.order[self.cursor..self.cursor + self.batch_size];
        self.cursor += self.batch_size;

        let mut pixel_data: Vec<f32> = Vec::new();
        let mut mask_data: Vec<i64> = Vec::new();
        let mut all_masked = true;
        let (mut th, mut tw) = (0usize, 0usize);
        for &i in slots {
            let entry = &self.entries[i];
            let image = read_image_png(&entry.image_path)?;
            let tile = crop_image(&image, entry.tile)?;
            th = tile.height;
            tw = tile.width;
            pixel_data.extend_from_slice(&tile.pixels);
            match &entry.mask_path {
                Some(mp) => {
                    let mask = read_mask_png(mp)?;
                    let tile = crop_mask(&mask, entry.tile)?;
                    mask_data.extend(tile.classes.iter().map(|&c| c as i64));
                }
                None => all_masked = false,
            }
        }
        let b = self.batch_size as i64;
        let images = Tensor::from_slice(&pixel_data).view([b, 1, th as i64, tw as i64]);
        let masks = (all_masked && !mask_data.is_empty())
            .then(|| Tensor::from_slice(&mask_data).view([b, th as i64, tw as i64]));
        Ok(Batch { images, masks, entry_indices: slots.to_vec() })
    }
}

pub fn crop_image(image: &FloatImage, rect: super::TileRect) -> Result<FloatImage> {
    if rect.row0 + rect.height > image.height || rect.col0 + rect.width > image.width {
        return Err(Error::Shape(format!(
            "tile {rect:?} exceeds image {}x{}",
            image.height, image.width
        )));
    }
    let mut pixels = Vec::with_capacity(rect.height * rect.width);
    for r in rect.row0..rect.row0 + rect.height {
        let start = r * image.width + rect.col0;
        pixels.extend_from_slice(&image.pixels[start..start + rect.width]);
    }
    FloatImage::new(rect.height, rect.width, pixels)
}

pub fn crop_mask(mask: &LabelMask, rect: super::TileRect) -> Result<LabelMask> {
    if rect.row0 + rect.height > mask.height || rect.col0 + rect.width > mask.width {
        return Err(Error::Shape(format!(
            "tile {rect:?} exceeds mask {}x{}",
            mask.height, mask.width
        )));
    }
    let mut classes = Vec::with_capacity(rect.height * rect.width);
    for r in rect.row0..rect.row0 + rect.height {
        let start = r * mask.width + rect.col0;
        classes.extend_from_slice(&mask.classes[start..start + rect.width]);
    }
    LabelMask::new(rect.height, rect.width, classes)
}

/// One-shot convenience: build a loader and return its first batch.
pub fn load_batch(
    manifest: &DatasetManifest,
    split: Split,
    domain: Domain,
    batch_size: usize,
    seed: u64,
) -> Result<Batch> {
    BatchLoader::new(manifest, split, domain, batch_size, seed)?.next_batch()
}
