//! Synthetic benchmark dataset export: renders two phantom domains to PNG
//! and writes one manifest per domain.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{build_manifest, split_by_patient, DatasetManifest, Domain, MaskPolicy, Split};
use crate::error::{Error, Result};
use crate::phantom::{render, DomainStyle, PhantomSpec};
use crate::types::FloatImage;

/// Layout of the generated two-domain benchmark.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomDatasetConfig {
    pub spec: PhantomSpec,
    pub style_a: DomainStyle,
    pub style_b: DomainStyle,
    pub patients_a: usize,
    pub scans_per_patient_a: usize,
    pub patients_b: usize,
    pub scans_per_patient_b: usize,
    pub split_fractions: (f64, f64, f64),
    pub split_seed: u64,
    pub tile: usize,
}

impl Default for PhantomDatasetConfig {
    fn default() -> Self {
        PhantomDatasetConfig {
            spec: PhantomSpec::default(),
            style_a: DomainStyle::domain_a_default(),
            style_b: DomainStyle::domain_b_default(),
            patients_a: 10,
            scans_per_patient_a: 6,
            patients_b: 10,
            scans_per_patient_b: 8,
            split_fractions: (0.8, 0.1, 0.1),
            split_seed: 1,
            tile: super::DEFAULT_TILE,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ExportSummary {
    pub domain_a_scans: usize,
    pub domain_b_scans: usize,
    pub domain_a_counts: (usize, usize, usize),
    pub domain_b_counts: (usize, usize, usize),
    pub manifest_a: PathBuf,
    pub manifest_b: PathBuf,
}

fn export_domain(
    cfg: &PhantomDatasetConfig,
    root: &Path,
    domain: Domain,
    style: &DomainStyle,
    patients: usize,
    scans_per_patient: usize,
    index_base: u64,
    split_map: &BTreeMap<String, Split>,
    label_policy: impl Fn(Split) -> bool,
) -> Result<DatasetManifest> {
    let dir = root.join(match domain {
        Domain::A => "domain_a",
        Domain::B => "domain_b",
    });
    let image_dir = dir.join("images");
    let mask_dir = dir.join("masks");
    std::fs::create_dir_all(&image_dir).map_err(|e| Error::io(&image_dir, e))?;
    std::fs::create_dir_all(&mask_dir).map_err(|e| Error::io(&mask_dir, e))?;

    let prefix = match domain {
        Domain::A => 'a',
        Domain::B => 'b',
    };
    for p in 0..patients {
        let patient_id = format!("{prefix}{p:03}");
        let split = split_map[&patient_id];
        for s in 0..scans_per_patient {
            let index = index_base + (p * scans_per_patient + s) as u64;
            let (styled, mask) = render(&cfg.spec, style, index);
            let pixels: Vec<f32> = styled.iter().map(|&v| (2.0 * v - 1.0) as f32).collect();
            let image = FloatImage::new(cfg.spec.height, cfg.spec.width, pixels)?;
            let stem = format!("{patient_id}_s{s:03}");
            super::write_image_png(&image_dir.join(format!("{stem}.png")), &image)?;
            if label_policy(split) {
                super::write_mask_png(&mask_dir.join(format!("{stem}.png")), &mask)?;
            }
        }
    }

    let manifest = build_manifest(
        &dir,
        &image_dir,
        Some(&mask_dir),
        MaskPolicy::IfPresent,
        domain,
        cfg.tile,
        Some(split_map),
    )?;
    manifest.save(&dir.join("manifest.toml"))?;
    Ok(manifest)
}

/// Write the two-domain benchmark under `root`: domain A fully labeled,
/// domain B labeled only on val/test (evaluation ground truth; training
/// entries stay unlabeled).
pub fn export_phantom_dataset(cfg: &PhantomDatasetConfig, root: &Path) -> Result<ExportSummary> {
    cfg.spec.validate()?;
    cfg.style_a.validate()?;
    cfg.style_b.validate()?;
    if cfg.style_a == cfg.style_b {
        return Err(Error::Config(
            "domain styles A and B are identical; there is no domain shift to adapt".into(),
        ));
    }

    let ids = |prefix: char, n: usize| -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i:03}")).collect()
    };
    let split_a = split_by_patient(&ids('a', cfg.patients_a), cfg.split_fractions, cfg.split_seed)?;
    let split_b = split_by_patient(&ids('b', cfg.patients_b), cfg.split_fractions, cfg.split_seed)?;

    let manifest_a = export_domain(
        cfg,
        root,
        Domain::A,
        &cfg.style_a,
        cfg.patients_a,
        cfg.scans_per_patient_a,
        0,
        &split_a,
        |_| true,
    )?;
    let manifest_b = export_domain(
        cfg,
        root,
        Domain::B,
        &cfg.style_b,
        cfg.patients_b,
        cfg.scans_per_patient_b,
        (cfg.patients_a * cfg.scans_per_patient_a) as u64,
        &split_b,
        |split| split != Split::Train,
    )?;

    Ok(ExportSummary {
        domain_a_scans: cfg.patients_a * cfg.scans_per_patient_a,
        domain_b_scans: cfg.patients_b * cfg.scans_per_patient_b,
        domain_a_counts: manifest_a.split_counts(),
        domain_b_counts: manifest_b.split_counts(),
        manifest_a: root.join("domain_a/manifest.toml"),
        manifest_b: root.join("domain_b/manifest.toml"),
    })
}
