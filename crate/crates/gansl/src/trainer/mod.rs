//! End-to-end optimization: alternating discriminator and
//! generator+segmenter updates on paired labeled-source / unlabeled-target
//! batches, with validation, checkpointing and the ablation presets.

pub mod checkpoint;
mod optim;

pub use checkpoint::{load_checkpoint, read_meta, save_checkpoint, CheckpointMeta};
pub use optim::AdamW;

use std::io::Write;
use std::path::{Path, PathBuf};

use tch::Tensor;

use crate::error::{Error, Result};
use crate::losses::{
    cam_discriminator, cam_generator, cycle_loss, identity_loss, lsgan_discriminator,
    lsgan_generator, supervised_loss, LossBreakdown, LossWeights, SupervisedVariant,
};
use crate::metrics::{aggregate_iou, iou_counts, Aggregate, IouVector};
use crate::nets::{init_bundle, ModelBundle, NetConfig};
use crate::pipeline::{Batch, BatchLoader, DatasetManifest, Domain, Split};
use crate::rng::RngStream;
use crate::types::{LabelMask, CLASS_NAMES, N_CLASSES};

/// The five model variants of the ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ModelPreset {
    #[serde(rename = "UNet_CE")]
    UNetCe,
    #[serde(rename = "UNet_NFL")]
    UNetNfl,
    #[serde(rename = "GANSL_CE")]
    GanslCe,
    #[serde(rename = "GANSL_NFL")]
    GanslNfl,
    #[serde(rename = "GANSL_NFL_A2B2A")]
    GanslNflA2b2a,
}

impl ModelPreset {
    /// Published column order.
    pub fn all() -> [ModelPreset; 5] {
        [
            ModelPreset::UNetCe,
            ModelPreset::UNetNfl,
            ModelPreset::GanslCe,
            ModelPreset::GanslNfl,
            ModelPreset::GanslNflA2b2a,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelPreset::UNetCe => "UNet_CE",
            ModelPreset::UNetNfl => "UNet_NFL",
            ModelPreset::GanslCe => "GANSL_CE",
            ModelPreset::GanslNfl => "GANSL_NFL",
            ModelPreset::GanslNflA2b2a => "GANSL_NFL_A2B2A",
        }
    }

    pub fn is_gan(&self) -> bool {
        matches!(self, ModelPreset::GanslCe | ModelPreset::GanslNfl | ModelPreset::GanslNflA2b2a)
    }

    pub fn variant(&self) -> SupervisedVariant {
        match self {
            ModelPreset::UNetCe | ModelPreset::GanslCe => SupervisedVariant::Ce,
            ModelPreset::UNetNfl | ModelPreset::GanslNfl => SupervisedVariant::Nfl,
            ModelPreset::GanslNflA2b2a => SupervisedVariant::NflA2b2a,
        }
    }
}

impl std::fmt::Display for ModelPreset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelPreset::all()
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown preset `{s}`; expected one of {}",
                    ModelPreset::all().map(|p| p.name()).join(", ")
                ))
            })
    }
}

/// All hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub preset: ModelPreset,
    pub weights: LossWeights,
    pub net: NetConfig,
    pub batch_size: usize,
    pub max_steps: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub val_interval: u64,
    pub checkpoint_interval: u64,
    pub seed: u64,
    /// Ablation switch: cut the supervised gradient path into the
    /// generators instead of training end-to-end.
    pub detach_translations: bool,
    /// Map target images back to the source style before segmenting.
    pub segment_via_b2a: bool,
    /// Intra-op thread count for the tensor backend; 0 leaves the default.
    pub threads: i64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            preset: ModelPreset::GanslNflA2b2a,
            weights: LossWeights::default(),
            net: NetConfig::default(),
            batch_size: 2,
            max_steps: 2000,
            learning_rate: 1e-4,
            beta1: 0.5,
            beta2: 0.999,
            weight_decay: 1e-4,
            val_interval: 250,
            checkpoint_interval: 500,
            seed: 17,
            detach_translations: false,
            segment_via_b2a: false,
            threads: 0,
        }
    }
}

impl TrainConfig {
    /// The supervised variant always follows the preset; any value in the
    /// file is overridden so the pairing invariant cannot be violated.
    pub fn resolved(&self) -> TrainConfig {
        let mut cfg = self.clone();
        cfg.weights.variant = cfg.preset.variant();
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.net.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Config("learning rate must be finite and >= 0".into()));
        }
        if self.weights.variant != self.preset.variant() {
            return Err(Error::Config(format!(
                "supervised variant {:?} contradicts preset {}",
                self.weights.variant,
                self.preset.name()
            )));
        }
        Ok(())
    }
}

/// Name-sorted generator+segmenter parameters (the `total_g` group).
pub(crate) fn gen_seg_param_list(bundle: &ModelBundle) -> Vec<(String, Tensor)> {
    let mut list: Vec<(String, Tensor)> = bundle
        .vs_gen
        .variables()
        .into_iter()
        .chain(bundle.vs_seg.variables())
        .collect();
    list.sort_by(|a, b| a.0.cmp(&b.0));
    list
}

/// Name-sorted discriminator parameters (the `total_d` group).
pub(crate) fn disc_param_list(bundle: &ModelBundle) -> Vec<(String, Tensor)> {
    let mut list: Vec<(String, Tensor)> = bundle.vs_disc.variables().into_iter().collect();
    list.sort_by(|a, b| a.0.cmp(&b.0));
    list
}

/// Mutable training state: networks, the two optimizers, the dropout
/// stream and the running best validation score.
pub struct TrainState {
    pub bundle: ModelBundle,
    pub opt_g: AdamW,
    pub opt_d: Option<AdamW>,
    pub dropout_stream: RngStream,
    pub best_val_miou: f64,
    pub config: TrainConfig,
}

impl TrainState {
    pub fn new(config: &TrainConfig) -> Result<Self> {
        let config = config.resolved();
        config.validate()?;
        if config.threads > 0 {
            tch::set_num_threads(config.threads as i32);
        }
        let bundle = init_bundle(&config.net, config.preset.is_gan(), config.seed)?;
        let opt_g = AdamW::new(
            gen_seg_param_list(&bundle),
            config.learning_rate,
            (config.beta1, config.beta2),
            config.weight_decay,
        );
        let opt_d = config.preset.is_gan().then(|| {
            AdamW::new(
                disc_param_list(&bundle),
                config.learning_rate,
                (config.beta1, config.beta2),
                config.weight_decay,
            )
        });
        Ok(TrainState {
            bundle,
            opt_g,
            opt_d,
            dropout_stream: RngStream::new(config.seed, "dropout", 0),
            best_val_miou: f64::NEG_INFINITY,
            config,
        })
    }
}

fn scalar(t: &Tensor) -> f64 {
    t.double_value(&[])
}

fn check_finite(step: u64, pairs: &[(&'static str, f64)]) -> Result<()> {
    for (component, value) in pairs {
        if !value.is_finite() {
            return Err(Error::Numerical { step, component: (*component).to_string() });
        }
    }
    Ok(())
}

/// One optimization step: a discriminator update on real/translated pairs
/// in both domains, then a generator+segmenter update on the full
/// objective. Supervised gradients flow back into the generators unless
/// `detach_translations` is set. Returns the per-component loss record.
pub fn train_step(
    state: &mut TrainState,
    batch_a: &Batch,
    batch_b: Option<&Batch>,
) -> Result<LossBreakdown> {
    let step = state.bundle.step + 1;
    let weights = state.config.weights;
    let mask = batch_a
        .masks
        .as_ref()
        .ok_or_else(|| Error::Data("domain A training batch is unlabeled".into()))?;
    let a = &batch_a.images;

    let breakdown = if state.config.preset.is_gan() {
        let b = &batch_b
            .ok_or_else(|| Error::Config("GAN presets need a domain B batch".into()))?
            .images;
        gan_step(state, a, mask, b, &weights, step)?
    } else {
        unet_step(state, a, mask, &weights, step)?
    };
    state.bundle.step = step;
    Ok(breakdown)
}

fn unet_step(
    state: &mut TrainState,
    a: &Tensor,
    mask: &Tensor,
    weights: &LossWeights,
    step: u64,
) -> Result<LossBreakdown> {
    let logits_a = state
        .bundle
        .segmenter
        .forward(a, Some(&mut state.dropout_stream))?
        .logits;
    let sup = supervised_loss(weights, &logits_a, None, None, mask)?;
    let sup_a = scalar(&sup.a);
    check_finite(step, &[("sup_a", sup_a)])?;
    let total = sup.sum * weights.lambda_sup;

    state.opt_g.zero_grad();
    total.backward();
    state.opt_g.step();

    Ok(LossBreakdown::from_components(
        weights, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, sup_a, 0.0, 0.0,
    ))
}

fn gan_step(
    state: &mut TrainState,
    a: &Tensor,
    mask: &Tensor,
    b: &Tensor,
    weights: &LossWeights,
    step: u64,
) -> Result<LossBreakdown> {
    let bundle = &mut state.bundle;

    // Discriminator phase: judge real images against frozen-generator
    // translations. Generator/segmenter stay frozen so their parameters
    // cannot accumulate gradients here.
    bundle.vs_gen.freeze();
    bundle.vs_seg.freeze();
    bundle.vs_disc.unfreeze();
    let (a2b_fake, b2a_fake) = {
        let _ng = tch::no_grad_guard();
        (
            bundle.gen_a2b()?.forward(a)?.image,
            bundle.gen_b2a()?.forward(b)?.image,
        )
    };
    let discs = bundle.discs()?;
    let (mut lsgan_d_t, mut cam_d_t) = (Tensor::zeros([], crate::nets::FLOAT_CPU), Tensor::zeros([], crate::nets::FLOAT_CPU));
    for (disc, real, fake) in [
        (&discs.global_a, a, &b2a_fake),
        (&discs.local_a, a, &b2a_fake),
        (&discs.global_b, b, &a2b_fake),
        (&discs.local_b, b, &a2b_fake),
    ] {
        let out_real = disc.forward(real)?;
        let out_fake = disc.forward(fake)?;
        lsgan_d_t = lsgan_d_t + lsgan_discriminator(&out_real.patch_logits, &out_fake.patch_logits)?;
        cam_d_t = cam_d_t + cam_discriminator(&out_real.cam_logit, &out_fake.cam_logit)?;
    }
    let lsgan_d = scalar(&lsgan_d_t);
    let cam_d = scalar(&cam_d_t);
    check_finite(step, &[("lsgan_d", lsgan_d), ("cam_d", cam_d)])?;
    let total_d_t = lsgan_d_t * weights.lambda_adv + cam_d_t * weights.lambda_cam;
    let opt_d = state.opt_d.as_mut().expect("GAN preset always has a discriminator optimizer");
    opt_d.zero_grad();
    total_d_t.backward();
    opt_d.step();

    // Generator + segmenter phase against the frozen, just-updated
    // discriminators.
    bundle.vs_disc.freeze();
    bundle.vs_gen.unfreeze();
    bundle.vs_seg.unfreeze();

    let gen_a2b = bundle.gen_a2b()?;
    let gen_b2a = bundle.gen_b2a()?;
    let a2b = gen_a2b.forward(a)?;
    let b2a = gen_b2a.forward(b)?;
    let a2b2a = gen_b2a.forward(&a2b.image)?;
    let b2a2b = gen_a2b.forward(&b2a.image)?;
    let idt_b = gen_a2b.forward(b)?;
    let idt_a = gen_b2a.forward(a)?;

    let discs = bundle.discs()?;
    let mut lsgan_g_t = Tensor::zeros([], crate::nets::FLOAT_CPU);
    for (disc, fake) in [
        (&discs.global_a, &b2a.image),
        (&discs.local_a, &b2a.image),
        (&discs.global_b, &a2b.image),
        (&discs.local_b, &a2b.image),
    ] {
        lsgan_g_t = lsgan_g_t + lsgan_generator(&disc.forward(fake)?.patch_logits)?;
    }
    let cam_g_t = cam_generator(&a2b.cam_logit, &idt_b.cam_logit)?
        + cam_generator(&b2a.cam_logit, &idt_a.cam_logit)?;
    let cycle_t = cycle_loss(a, &a2b2a.image)? + cycle_loss(b, &b2a2b.image)?;
    let identity_t = identity_loss(b, &idt_b.image)? + identity_loss(a, &idt_a.image)?;

    // The segmenter sees the source image, its translation and (for the
    // full variant) the reconstruction, all under the source labels.
    let seg_input = |t: &Tensor| {
        if state.config.detach_translations {
            t.detach()
        } else {
            t.shallow_clone()
        }
    };
    let seg = &bundle.segmenter;
    let logits_a = seg.forward(a, Some(&mut state.dropout_stream))?.logits;
    let logits_a2b = seg.forward(&seg_input(&a2b.image), Some(&mut state.dropout_stream))?.logits;
    let logits_a2b2a = if weights.variant.uses_a2b2a() {
        Some(seg.forward(&seg_input(&a2b2a.image), Some(&mut state.dropout_stream))?.logits)
    } else {
        None
    };
    let sup = supervised_loss(weights, &logits_a, Some(&logits_a2b), logits_a2b2a.as_ref(), mask)?;

    let components = LossBreakdown::from_components(
        weights,
        scalar(&lsgan_g_t),
        lsgan_d,
        scalar(&cycle_t),
        scalar(&identity_t),
        scalar(&cam_g_t),
        cam_d,
        scalar(&sup.a),
        scalar(&sup.a2b),
        scalar(&sup.a2b2a),
    );
    if let Some(component) = components.first_non_finite() {
        return Err(Error::Numerical { step, component: component.to_string() });
    }

    let total_g_t = lsgan_g_t * weights.lambda_adv
        + cycle_t * weights.lambda_cycle
        + identity_t * weights.lambda_identity
        + cam_g_t * weights.lambda_cam
        + sup.sum * weights.lambda_sup;
    state.opt_g.zero_grad();
    total_g_t.backward();
    state.opt_g.step();
    bundle.vs_disc.unfreeze();

    Ok(components)
}

/// How predictions are produced during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    /// The bundle's segmenter in inference mode.
    Model,
    /// Ground truth echoed back; pins the evaluation plumbing to 100%.
    Oracle,
}

/// Segment every labeled tile of (split, domain) and aggregate IOU
/// against ground truth. Returns `None` when the selection has no labeled
/// entries.
pub fn evaluate_manifest(
    bundle: &ModelBundle,
    manifest: &DatasetManifest,
    split: Split,
    domain: Domain,
    aggregate: Aggregate,
    predictor: Predictor,
    via_b2a: bool,
) -> Result<Option<(IouVector, usize)>> {
    let entries: Vec<_> = manifest
        .selection(split, domain)
        .into_iter()
        .filter(|e| e.mask_path.is_some())
        .cloned()
        .collect();
    if entries.is_empty() {
        return Ok(None);
    }
    let side = bundle.config.input_size;
    let mut counts = Vec::with_capacity(entries.len());
    for chunk in entries.chunks(4) {
        let mut pixels: Vec<f32> = Vec::new();
        let mut gt: Vec<LabelMask> = Vec::new();
        for e in chunk {
            let image = crate::pipeline::read_image_png(&manifest.root.join(&e.image_path))?;
            let tile = crate::pipeline::crop_image(&image, e.tile_rect)?;
            pixels.extend_from_slice(&tile.pixels);
            let mask =
                crate::pipeline::read_mask_png(&manifest.root.join(e.mask_path.as_ref().unwrap()))?;
            gt.push(crate::pipeline::crop_mask(&mask, e.tile_rect)?);
        }
        let images = Tensor::from_slice(&pixels).view([chunk.len() as i64, 1, side, side]);
        let preds = match predictor {
            Predictor::Model => {
                let input = if via_b2a {
                    let _ng = tch::no_grad_guard();
                    bundle.gen_b2a()?.forward(&images)?.image
                } else {
                    images
                };
                let _ng = tch::no_grad_guard();
                bundle.segment(&input)?
            }
            Predictor::Oracle => {
                let flat: Vec<i64> =
                    gt.iter().flat_map(|m| m.classes.iter().map(|&c| c as i64)).collect();
                Tensor::from_slice(&flat).view([chunk.len() as i64, side, side])
            }
        };
        for (i, truth) in gt.iter().enumerate() {
            let flat: Vec<i64> = Vec::try_from(preds.get(i as i64).flatten(0, -1))
                .map_err(|e| Error::Data(format!("prediction extraction failed: {e}")))?;
            let pred =
                LabelMask::new(truth.height, truth.width, flat.iter().map(|&v| v as u8).collect())?;
            counts.push(iou_counts(&pred, truth)?);
        }
    }
    let n = counts.len();
    Ok(Some((aggregate_iou(&counts, aggregate)?, n)))
}

/// One validation record: per-class IOU on the labeled domain A split and,
/// when target-domain ground truth exists, on domain B.
#[derive(Debug, Clone)]
pub struct ValidationRow {
    pub step: u64,
    pub a: IouVector,
    pub a_mean: f64,
    pub b: Option<IouVector>,
    pub b_mean: Option<f64>,
}

/// Validate on a split: dropout off, deterministic. Domain A must have
/// labeled entries; domain B rows appear when its manifest carries masks.
pub fn validate(
    state: &mut TrainState,
    manifest_a: &DatasetManifest,
    manifest_b: Option<&DatasetManifest>,
    split: Split,
    aggregate: Aggregate,
) -> Result<ValidationRow> {
    let (a, _) = evaluate_manifest(
        &state.bundle,
        manifest_a,
        split,
        Domain::A,
        aggregate,
        Predictor::Model,
        false,
    )?
    .ok_or_else(|| Error::Data(format!("domain A {split} split has no labeled entries")))?;
    let b = manifest_b
        .map(|m| {
            evaluate_manifest(
                &state.bundle,
                m,
                split,
                Domain::B,
                aggregate,
                Predictor::Model,
                state.config.segment_via_b2a,
            )
        })
        .transpose()?
        .flatten()
        .map(|(v, _)| v);
    let row = ValidationRow {
        step: state.bundle.step,
        a_mean: a.mean(),
        a,
        b_mean: b.as_ref().map(IouVector::mean),
        b,
    };
    if row.a_mean > state.best_val_miou {
        state.best_val_miou = row.a_mean;
    }
    Ok(row)
}

pub fn val_csv_header() -> String {
    format!("step,domain,mean_iou,{}", CLASS_NAMES.join(","))
}

pub fn val_csv_row(step: u64, domain: Domain, v: &IouVector) -> String {
    let mut row = format!("{step},{domain},{}", v.mean());
    for c in 0..N_CLASSES {
        row.push(',');
        row.push_str(&format!("{}", v.iou[c]));
    }
    row
}

/// Result of a full `fit` run.
#[derive(Debug)]
pub struct FitSummary {
    pub final_step: u64,
    pub best_val_miou: f64,
    pub final_validation: Option<ValidationRow>,
    pub last_checkpoint: PathBuf,
    pub train_metrics: PathBuf,
    pub val_metrics: PathBuf,
}

fn append_or_create(path: &Path, header: &str) -> Result<std::io::BufWriter<std::fs::File>> {
    let exists = path.is_file();
    let file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    if !exists {
        writeln!(writer, "{header}").map_err(|e| Error::io(path, e))?;
    }
    Ok(writer)
}

/// Run `max_steps` training steps with interleaved validation and
/// checkpointing. `resume` continues a previous run bit-exactly.
pub fn fit(
    config: &TrainConfig,
    manifest_a: &DatasetManifest,
    manifest_b: Option<&DatasetManifest>,
    out_dir: &Path,
    resume: Option<&Path>,
) -> Result<FitSummary> {
    let config = config.resolved();
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    if config.preset.is_gan() && manifest_b.is_none() {
        return Err(Error::Config(format!(
            "preset {} needs an unlabeled domain B manifest",
            config.preset.name()
        )));
    }

    let (mut state, restored) = match resume {
        Some(ckpt) => {
            let (state, meta) = load_checkpoint(ckpt)?;
            if state.config.preset != config.preset
                || state.config.net != config.net
                || state.config.seed != config.seed
            {
                return Err(Error::Config(
                    "resume checkpoint was trained under an incompatible config".into(),
                ));
            }
            (state, Some(meta))
        }
        None => (TrainState::new(&config)?, None),
    };
    // The continuation target (max_steps) follows the current config.
    state.config.max_steps = config.max_steps;

    let mut loader_a = BatchLoader::new(
        manifest_a,
        Split::Train,
        Domain::A,
        config.batch_size,
        config.seed,
    )?;
    let mut loader_b = match manifest_b {
        Some(m) if config.preset.is_gan() => Some(BatchLoader::new(
            m,
            Split::Train,
            Domain::B,
            config.batch_size,
            config.seed.wrapping_add(1),
        )?),
        _ => None,
    };
    if let Some(meta) = &restored {
        if let Some(s) = meta.loader_a {
            loader_a.restore(s);
        }
        if let (Some(loader), Some(s)) = (loader_b.as_mut(), meta.loader_b) {
            loader.restore(s);
        }
    }

    let train_csv = out_dir.join("train_metrics.csv");
    let val_csv = out_dir.join("val_metrics.csv");
    let mut train_log = append_or_create(&train_csv, &LossBreakdown::csv_header())?;
    let mut val_log = append_or_create(&val_csv, &val_csv_header())?;

    let run_validation = |state: &mut TrainState,
                              val_log: &mut std::io::BufWriter<std::fs::File>|
     -> Result<ValidationRow> {
        let row = validate(state, manifest_a, manifest_b, Split::Val, Aggregate::PoolPixels)?;
        writeln!(val_log, "{}", val_csv_row(row.step, Domain::A, &row.a))
            .map_err(|e| Error::io(&val_csv, e))?;
        if let Some(b) = &row.b {
            writeln!(val_log, "{}", val_csv_row(row.step, Domain::B, b))
                .map_err(|e| Error::io(&val_csv, e))?;
        }
        val_log.flush().map_err(|e| Error::io(&val_csv, e))?;
        Ok(row)
    };

    let mut final_validation = None;
    while state.bundle.step < config.max_steps {
        let batch_a = loader_a.next_batch()?;
        let batch_b = loader_b.as_mut().map(BatchLoader::next_batch).transpose()?;
        let breakdown = train_step(&mut state, &batch_a, batch_b.as_ref())?;
        let step = state.bundle.step;
        writeln!(train_log, "{}", breakdown.csv_row(step)).map_err(|e| Error::io(&train_csv, e))?;
        train_log.flush().map_err(|e| Error::io(&train_csv, e))?;

        let at_end = step == config.max_steps;
        if config.val_interval > 0 && (step % config.val_interval == 0 || at_end) {
            final_validation = Some(run_validation(&mut state, &mut val_log)?);
        }
        if config.checkpoint_interval > 0 && step % config.checkpoint_interval == 0 && !at_end {
            save_checkpoint(
                out_dir,
                &state,
                Some(loader_a.state()),
                loader_b.as_ref().map(BatchLoader::state),
            )?;
        }
    }
    if final_validation.as_ref().map(|r| r.step) != Some(state.bundle.step)
        && config.val_interval > 0
        && state.bundle.step > 0
    {
        final_validation = Some(run_validation(&mut state, &mut val_log)?);
    }
    let last_checkpoint = save_checkpoint(
        out_dir,
        &state,
        Some(loader_a.state()),
        loader_b.as_ref().map(BatchLoader::state),
    )?;

    Ok(FitSummary {
        final_step: state.bundle.step,
        best_val_miou: state.best_val_miou,
        final_validation,
        last_checkpoint,
        train_metrics: train_csv,
        val_metrics: val_csv,
    })
}

/// Translation direction for inference-time emission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranslationDirection {
    A2B,
    B2A,
}

/// Translate a batch of images with the requested generator. Plain
/// segmenter presets have no generators and report a configuration error.
pub fn translate(bundle: &ModelBundle, images: &Tensor, dir: TranslationDirection) -> Result<Tensor> {
    let _ng = tch::no_grad_guard();
    let gen = match dir {
        TranslationDirection::A2B => bundle.gen_a2b()?,
        TranslationDirection::B2A => bundle.gen_b2a()?,
    };
    Ok(gen.forward(images)?.image)
}

/// Segment a batch of images; optionally map them through the
/// target-to-source generator first.
pub fn segment_images(bundle: &ModelBundle, images: &Tensor, via_b2a: bool) -> Result<Tensor> {
    let _ng = tch::no_grad_guard();
    let input = if via_b2a {
        bundle.gen_b2a()?.forward(images)?.image
    } else {
        images.shallow_clone()
    };
    bundle.segment(&input)
}
