//! Checkpoint layout: one directory per step holding
//!
//! - `params.safetensors` — every named parameter and buffer, exact bytes
//! - `opt_g.safetensors` / `opt_d.safetensors` — Adam moment tensors
//! - `meta.json` — step, config, stream positions, loader states
//! - `catalog.txt` — name/shape listing for cross-checking

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use tch::Tensor;

use super::optim::AdamW;
use super::{disc_param_list, gen_seg_param_list, TrainConfig, TrainState};
use crate::error::{Error, Result};
use crate::nets::init_bundle;
use crate::pipeline::LoaderState;
use crate::rng::RngStream;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CheckpointMeta {
    pub step: u64,
    pub config: TrainConfig,
    pub best_val_miou: f64,
    /// ChaCha word position of the dropout stream, split (hi, lo).
    pub dropout_word_pos: (u64, u64),
    pub loader_a: Option<LoaderState>,
    pub loader_b: Option<LoaderState>,
    pub opt_g_steps: i64,
    pub opt_d_steps: i64,
}

pub fn checkpoint_dir_name(step: u64) -> String {
    format!("ckpt_step{step}")
}

pub fn save_checkpoint(
    dir: &Path,
    state: &TrainState,
    loader_a: Option<LoaderState>,
    loader_b: Option<LoaderState>,
) -> Result<PathBuf> {
    let ckpt = dir.join(checkpoint_dir_name(state.bundle.step));
    std::fs::create_dir_all(&ckpt).map_err(|e| Error::io(&ckpt, e))?;

    let mut tensors = state.bundle.named_parameters();
    tensors.extend(state.bundle.named_buffers());
    Tensor::write_safetensors(&tensors, ckpt.join("params.safetensors"))?;
    Tensor::write_safetensors(&state.opt_g.state_tensors(), ckpt.join("opt_g.safetensors"))?;
    if let Some(opt_d) = &state.opt_d {
        Tensor::write_safetensors(&opt_d.state_tensors(), ckpt.join("opt_d.safetensors"))?;
    }

    let pos = state.dropout_stream.word_pos();
    let meta = CheckpointMeta {
        step: state.bundle.step,
        config: state.config.clone(),
        best_val_miou: state.best_val_miou,
        dropout_word_pos: ((pos >> 64) as u64, pos as u64),
        loader_a,
        loader_b,
        opt_g_steps: state.opt_g.step_count(),
        opt_d_steps: state.opt_d.as_ref().map(AdamW::step_count).unwrap_or(0),
    };
    let meta_path = ckpt.join("meta.json");
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::Data(format!("checkpoint meta serialization failed: {e}")))?;
    std::fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;

    let catalog_path = ckpt.join("catalog.txt");
    std::fs::write(&catalog_path, state.bundle.catalog_text())
        .map_err(|e| Error::io(&catalog_path, e))?;
    Ok(ckpt)
}

pub fn read_meta(ckpt: &Path) -> Result<CheckpointMeta> {
    let meta_path = ckpt.join("meta.json");
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("bad checkpoint meta in {}: {e}", meta_path.display())))
}

fn tensor_map(path: &Path) -> Result<HashMap<String, Tensor>> {
    Ok(Tensor::read_safetensors(path)?.into_iter().collect())
}

/// Rebuild a full training state from a checkpoint directory.
pub fn load_checkpoint(ckpt: &Path) -> Result<(TrainState, CheckpointMeta)> {
    let meta = read_meta(ckpt)?;
    let config = meta.config.clone();
    let bundle = init_bundle(&config.net, config.preset.is_gan(), config.seed)?;

    let stored = tensor_map(&ckpt.join("params.safetensors"))?;
    {
        let _ng = tch::no_grad_guard();
        for (name, mut param) in bundle.named_parameters() {
            let value = stored
                .get(&name)
                .ok_or_else(|| Error::Data(format!("checkpoint is missing parameter `{name}`")))?;
            if value.size() != param.size() {
                return Err(Error::Data(format!(
                    "checkpoint parameter `{name}` has shape {:?}, expected {:?}",
                    value.size(),
                    param.size()
                )));
            }
            param.copy_(value);
        }
    }
    bundle.load_buffers(&stored)?;

    let mut opt_g = AdamW::new(
        gen_seg_param_list(&bundle),
        config.learning_rate,
        (config.beta1, config.beta2),
        config.weight_decay,
    );
    opt_g.load_state_tensors(&tensor_map(&ckpt.join("opt_g.safetensors"))?)?;
    opt_g.set_step_count(meta.opt_g_steps);

    let opt_d = if config.preset.is_gan() {
        let mut opt = AdamW::new(
            disc_param_list(&bundle),
            config.learning_rate,
            (config.beta1, config.beta2),
            config.weight_decay,
        );
        opt.load_state_tensors(&tensor_map(&ckpt.join("opt_d.safetensors"))?)?;
        opt.set_step_count(meta.opt_d_steps);
        Some(opt)
    } else {
        None
    };

    let mut dropout_stream = RngStream::new(config.seed, "dropout", 0);
    let (hi, lo) = meta.dropout_word_pos;
    dropout_stream.set_word_pos(((hi as u128) << 64) | lo as u128);

    let mut bundle = bundle;
    bundle.step = meta.step;
    let state = TrainState {
        bundle,
        opt_g,
        opt_d,
        dropout_stream,
        best_val_miou: meta.best_val_miou,
        config,
    };
    Ok((state, meta))
}
