//! Deterministic preprocessing: center-crop tiling, patient-level splits,
//! manifest management, image/mask I/O and batch loading.

mod export;
mod io;
mod loader;

pub use export::{export_phantom_dataset, ExportSummary, PhantomDatasetConfig};
pub use io::{
    png_dimensions, read_image_png, read_mask_png, write_image_png, write_mask_png, MASK_PALETTE,
};
pub use loader::{crop_image, crop_mask, load_batch, Batch, BatchLoader, LoaderState};

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_TILE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Domain {
    A,
    B,
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Domain::A => "A",
            Domain::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

/// A tile's pixel region inside its source scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TileRect {
    pub row0: usize,
    pub col0: usize,
    pub height: usize,
    pub width: usize,
}

impl TileRect {
    fn overlaps(&self, other: &TileRect) -> bool {
        self.row0 < other.row0 + other.height
            && other.row0 < self.row0 + self.height
            && self.col0 < other.col0 + other.width
            && other.col0 < self.col0 + self.width
    }
}

/// One tile of one source scan.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SampleEntry {
    /// Path relative to the manifest's directory, forward slashes.
    pub image_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_path: Option<String>,
    pub domain: Domain,
    pub patient_id: String,
    pub split: Split,
    pub source_scan_id: String,
    pub tile_rect: TileRect,
}

/// Declarative listing of every tile in a dataset.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub entries: Vec<SampleEntry>,
    /// Directory the entry paths are relative to. Set on load/build, not
    /// serialized.
    #[serde(skip)]
    pub root: PathBuf,
}

/// Center-crop tiling: `floor(scan_width / tile)` square tiles, vertically
/// centered, laid left-to-right as one horizontally centered strip.
pub fn center_crop_tiles(scan_height: usize, scan_width: usize, tile: usize) -> Result<Vec<TileRect>> {
    if tile == 0 {
        return Err(Error::Config("tile size must be positive".into()));
    }
    if scan_height < tile || scan_width < tile {
        return Err(Error::Data(format!(
            "geometry: scan {scan_height}x{scan_width} is smaller than tile {tile}"
        )));
    }
    let n = scan_width / tile;
    let row0 = (scan_height - tile) / 2;
    let col_start = (scan_width - n * tile) / 2;
    Ok((0..n)
        .map(|i| TileRect { row0, col0: col_start + i * tile, height: tile, width: tile })
        .collect())
}

/// Assign whole patients to train/val/test. Val and test get
/// `max(1, round(fraction * n))` patients each, the remainder trains.
pub fn split_by_patient(
    patients: &[String],
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<BTreeMap<String, Split>> {
    let n = patients.len();
    if n < 3 {
        return Err(Error::Config(format!(
            "patient-level split needs at least 3 patients, got {n}"
        )));
    }
    let (ft, fv, fs) = fractions;
    if ft < 0.0 || fv < 0.0 || fs < 0.0 || (ft + fv + fs - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split fractions ({ft}, {fv}, {fs}) must be nonnegative and sum to 1"
        )));
    }
    let unique: BTreeSet<&String> = patients.iter().collect();
    if unique.len() != n {
        return Err(Error::Config("duplicate patient ids in split input".into()));
    }

    let n_val = ((fv * n as f64).round() as usize).max(1);
    let n_test = ((fs * n as f64).round() as usize).max(1);
    if n_val + n_test >= n {
        return Err(Error::Config(format!(
            "split leaves no training patients ({n} total, {n_val} val, {n_test} test)"
        )));
    }

    let mut order: Vec<String> = unique.into_iter().cloned().collect();
    RngStream::new(seed, "split.patients", 0).shuffle(&mut order);

    let mut map = BTreeMap::new();
    for (i, p) in order.into_iter().enumerate() {
        let split = if i < n_val {
            Split::Val
        } else if i < n_val + n_test {
            Split::Test
        } else {
            Split::Train
        };
        map.insert(p, split);
    }
    Ok(map)
}

/// How `build_manifest` pairs masks with images.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskPolicy {
    /// No masks at all (fully unlabeled domain).
    None,
    /// Every image must have a mask with the same file stem.
    Required,
    /// Attach a mask when one exists; used for partially labeled domains
    /// (e.g. a target domain labeled only on eval splits).
    IfPresent,
}

fn rel_path(root: &Path, path: &Path) -> Result<String> {
    let rel = path.strip_prefix(root).map_err(|_| {
        Error::Data(format!(
            "path {} is not under dataset root {}",
            path.display(),
            root.display()
        ))
    })?;
    Ok(rel.to_string_lossy().replace('\\', "/"))
}

/// Patient id convention: file stem up to the first underscore (the whole
/// stem when there is none).
pub fn patient_id_of_stem(stem: &str) -> String {
    stem.split('_').next().unwrap_or(stem).to_string()
}

/// Scan a directory of PNG scans (plus optional masks) into a manifest.
/// Tiling is derived from each scan's geometry; splits come from
/// `split_map` when given, otherwise everything is `train`.
pub fn build_manifest(
    root: &Path,
    image_dir: &Path,
    mask_dir: Option<&Path>,
    mask_policy: MaskPolicy,
    domain: Domain,
    tile: usize,
    split_map: Option<&BTreeMap<String, Split>>,
) -> Result<DatasetManifest> {
    let mut stems: Vec<(String, PathBuf)> = std::fs::read_dir(image_dir)
        .map_err(|e| Error::io(image_dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .map(|p| (p.file_stem().unwrap_or_default().to_string_lossy().into_owned(), p))
        .collect();
    stems.sort();
    if stems.is_empty() {
        return Err(Error::Data(format!("no PNG images found in {}", image_dir.display())));
    }
    if mask_policy != MaskPolicy::None && mask_dir.is_none() {
        return Err(Error::Config("mask policy requires a mask directory".into()));
    }

    let mut entries = Vec::new();
    for (stem, image_path) in &stems {
        let (h, w) = png_dimensions(image_path)?;
        let mask_path = match (mask_policy, mask_dir) {
            (MaskPolicy::None, _) | (_, None) => None,
            (policy, Some(dir)) => {
                let candidate = dir.join(format!("{stem}.png"));
                if candidate.is_file() {
                    let (mh, mw) = png_dimensions(&candidate)?;
                    if (mh, mw) != (h, w) {
                        return Err(Error::Data(format!(
                            "image/mask shape mismatch for {}: image {h}x{w}, mask {mh}x{mw}",
                            image_path.display()
                        )));
                    }
                    Some(candidate)
                } else if policy == MaskPolicy::Required {
                    return Err(Error::Data(format!(
                        "missing mask for labeled image {}",
                        image_path.display()
                    )));
                } else {
                    None
                }
            }
        };

        let patient_id = patient_id_of_stem(stem);
        let split = split_map
            .and_then(|m| m.get(&patient_id).copied())
            .unwrap_or(Split::Train);

        for rect in center_crop_tiles(h, w, tile)? {
            entries.push(SampleEntry {
                image_path: rel_path(root, image_path)?,
                mask_path: mask_path.as_deref().map(|p| rel_path(root, p)).transpose()?,
                domain,
                patient_id: patient_id.clone(),
                split,
                source_scan_id: stem.clone(),
                tile_rect: rect,
            });
        }
    }

    let manifest = DatasetManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        entries,
        root: root.to_path_buf(),
    };
    manifest.validate()?;
    Ok(manifest)
}

impl DatasetManifest {
    pub fn selection(&self, split: Split, domain: Domain) -> Vec<&SampleEntry> {
        self.entries
            .iter()
            .filter(|e| e.split == split && e.domain == domain)
            .collect()
    }

    /// Check every manifest invariant: files exist and shapes agree,
    /// no patient sits in two splits, labeled-split masks are present,
    /// and tiles of one source scan never overlap.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Data(format!(
                "unsupported manifest schema version {}",
                self.schema_version
            )));
        }
        let mut patient_splits: BTreeMap<&str, Split> = BTreeMap::new();
        let mut scan_tiles: BTreeMap<&str, Vec<TileRect>> = BTreeMap::new();
        for e in &self.entries {
            let image = self.root.join(&e.image_path);
            let (h, w) = png_dimensions(&image)?;
            if e.tile_rect.row0 + e.tile_rect.height > h || e.tile_rect.col0 + e.tile_rect.width > w
            {
                return Err(Error::Data(format!(
                    "tile {:?} exceeds scan bounds {h}x{w} in {}",
                    e.tile_rect,
                    image.display()
                )));
            }
            if let Some(mask) = &e.mask_path {
                let mask = self.root.join(mask);
                let (mh, mw) = png_dimensions(&mask)?;
                if (mh, mw) != (h, w) {
                    return Err(Error::Data(format!(
                        "image/mask shape mismatch: {} is {h}x{w}, {} is {mh}x{mw}",
                        image.display(),
                        mask.display()
                    )));
                }
            } else if e.domain == Domain::A && e.split != Split::Train {
                return Err(Error::Data(format!(
                    "domain A {} entry {} lacks a mask",
                    e.split, e.image_path
                )));
            }
            match patient_splits.entry(&e.patient_id) {
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(e.split);
                }
                std::collections::btree_map::Entry::Occupied(o) => {
                    if *o.get() != e.split {
                        return Err(Error::Data(format!(
                            "patient {} appears in splits {} and {}",
                            e.patient_id,
                            o.get(),
                            e.split
                        )));
                    }
                }
            }
            scan_tiles.entry(&e.source_scan_id).or_default().push(e.tile_rect);
        }
        for (scan, tiles) in &scan_tiles {
            for i in 0..tiles.len() {
                for j in i + 1..tiles.len() {
                    if tiles[i].overlaps(&tiles[j]) {
                        return Err(Error::Data(format!(
                            "overlapping tiles {:?} and {:?} in scan {scan}",
                            tiles[i], tiles[j]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Data(format!("manifest serialization failed: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: DatasetManifest = toml::from_str(&text)
            .map_err(|e| Error::Data(format!("manifest parse error in {}: {e}", path.display())))?;
        manifest.root = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(manifest)
    }

    /// Per-split entry counts (train, val, test).
    pub fn split_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for e in &self.entries {
            match e.split {
                Split::Train => counts.0 += 1,
                Split::Val => counts.1 += 1,
                Split::Test => counts.2 += 1,
            }
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duke_like_geometry_yields_three_centered_tiles() {
        let rects = center_crop_tiles(496, 768, 256).unwrap();
        assert_eq!(rects.len(), 3);
        for (i, r) in rects.iter().enumerate() {
            assert_eq!(r.row0, 120);
            assert_eq!(r.col0, i * 256);
            assert_eq!((r.height, r.width), (256, 256));
        }
    }

    #[test]
    fn topcon_like_geometry_yields_two_centered_tiles() {
        let rects = center_crop_tiles(650, 512, 256).unwrap();
        assert_eq!(rects.len(), 2);
        assert_eq!(rects[0].row0, 197);
        assert_eq!(rects[0].col0, 0);
        assert_eq!(rects[1].col0, 256);
    }

    #[test]
    fn exact_tile_is_identity() {
        let rects = center_crop_tiles(256, 256, 256).unwrap();
        assert_eq!(rects, vec![TileRect { row0: 0, col0: 0, height: 256, width: 256 }]);
    }

    #[test]
    fn undersized_scan_is_a_geometry_error() {
        assert!(matches!(center_crop_tiles(200, 300, 256), Err(Error::Data(_))));
        assert!(matches!(center_crop_tiles(300, 200, 256), Err(Error::Data(_))));
    }

    fn patients(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i:03}")).collect()
    }

    #[test]
    fn ten_patients_split_8_1_1() {
        let map = split_by_patient(&patients(10), (0.8, 0.1, 0.1), 42).unwrap();
        let count = |s: Split| map.values().filter(|&&v| v == s).count();
        assert_eq!(count(Split::Train), 8);
        assert_eq!(count(Split::Val), 1);
        assert_eq!(count(Split::Test), 1);
    }

    #[test]
    fn three_patients_split_1_1_1() {
        let map = split_by_patient(&patients(3), (0.8, 0.1, 0.1), 0).unwrap();
        let count = |s: Split| map.values().filter(|&&v| v == s).count();
        assert_eq!((count(Split::Train), count(Split::Val), count(Split::Test)), (1, 1, 1));
    }

    #[test]
    fn split_is_deterministic() {
        let a = split_by_patient(&patients(10), (0.8, 0.1, 0.1), 7).unwrap();
        let b = split_by_patient(&patients(10), (0.8, 0.1, 0.1), 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_patients_is_a_config_error() {
        assert!(matches!(
            split_by_patient(&patients(2), (0.8, 0.1, 0.1), 0),
            Err(Error::Config(_))
        ));
    }
}
