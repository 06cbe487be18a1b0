//! The three trainable network families and their parameter bundle.

mod discriminator;
mod generator;
pub mod layers;
mod unet;

pub use discriminator::{Discriminator, DiscriminatorOutput, DiscriminatorSet};
pub use generator::{Generator, GeneratorOutput};
pub use unet::{SegmenterOutput, Unet};

use tch::nn;
use tch::{Device, Kind, Tensor};

use crate::error::{Error, Result};
use crate::rng::{name_index, RngStream};

/// Architecture knobs. The defaults define the reference models: width-32
/// networks on 256x256 single-channel input, four residual blocks in the
/// generator bottleneck, dropout 0.5 in the segmenter.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetConfig {
    pub input_size: i64,
    pub gen_base: i64,
    pub disc_base: i64,
    pub seg_base: i64,
    pub res_blocks: usize,
    pub dropout: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            input_size: 256,
            gen_base: 32,
            disc_base: 32,
            seg_base: 32,
            res_blocks: 4,
            dropout: 0.5,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_size < 16 || self.input_size % 32 != 0 {
            return Err(Error::Config(format!(
                "input size {} must be a positive multiple of 32",
                self.input_size
            )));
        }
        if self.gen_base < 1 || self.disc_base < 1 || self.seg_base < 1 || self.res_blocks == 0 {
            return Err(Error::Config("network widths and depth must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} must lie in [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

/// Every trainable network of one run: two generators and four
/// discriminators (absent for the plain-segmenter presets) plus the U-Net
/// segmenter, each family in its own variable store.
pub struct ModelBundle {
    pub config: NetConfig,
    pub with_gan: bool,
    pub vs_gen: nn::VarStore,
    pub vs_disc: nn::VarStore,
    pub vs_seg: nn::VarStore,
    pub gen_a2b: Option<Generator>,
    pub gen_b2a: Option<Generator>,
    pub discs: Option<DiscriminatorSet>,
    pub segmenter: Unet,
    pub step: u64,
}

/// Build a bundle with the documented deterministic initialization:
/// convolution and linear weights from N(0, 0.02), biases zero (except the
/// gamma-head biases of the adaptive norms, which start at one so the
/// norms begin at identity), and norm mixing weights at their constants.
pub fn init_bundle(config: &NetConfig, with_gan: bool, seed: u64) -> Result<ModelBundle> {
    config.validate()?;
    // Nothing in the forward/backward paths consumes the backend RNG, but
    // pin it anyway so any future slip is at least reproducible.
    tch::manual_seed(seed as i64);

    let vs_gen = nn::VarStore::new(Device::Cpu);
    let vs_disc = nn::VarStore::new(Device::Cpu);
    let vs_seg = nn::VarStore::new(Device::Cpu);

    let (gen_a2b, gen_b2a, discs) = if with_gan {
        (
            Some(Generator::new(vs_gen.root() / "gen_a2b", config)),
            Some(Generator::new(vs_gen.root() / "gen_b2a", config)),
            Some(DiscriminatorSet::new(&vs_disc.root(), config, seed)),
        )
    } else {
        (None, None, None)
    };
    let segmenter = Unet::new(vs_seg.root() / "seg", config);

    let bundle = ModelBundle {
        config: *config,
        with_gan,
        vs_gen,
        vs_disc,
        vs_seg,
        gen_a2b,
        gen_b2a,
        discs,
        segmenter,
        step: 0,
    };
    bundle.reset_parameters(seed)?;
    Ok(bundle)
}

fn init_tensor(name: &str, tensor: &mut Tensor, seed: u64) -> Result<()> {
    let _ng = tch::no_grad_guard();
    if name.ends_with(".rho") {
        let _ = tensor.fill_(0.9);
    } else if name.ends_with(".weight") {
        let mut stream = RngStream::new(seed, "init.weights", name_index(name));
        let values: Vec<f32> = (0..tensor.numel()).map(|_| (stream.normal() * 0.02) as f32).collect();
        tensor.copy_(&Tensor::from_slice(&values).view(tensor.size().as_slice()));
    } else if name.ends_with(".bias") {
        let head = name.rsplit('.').nth(1).unwrap_or("");
        let value = if head.starts_with("gamma") { 1.0 } else { 0.0 };
        let _ = tensor.fill_(value);
    } else {
        return Err(Error::Config(format!("no initialization rule for parameter `{name}`")));
    }
    Ok(())
}

impl ModelBundle {
    /// Re-apply the deterministic initialization to every parameter.
    pub fn reset_parameters(&self, seed: u64) -> Result<()> {
        for (name, mut tensor) in self.named_parameters() {
            init_tensor(&name, &mut tensor, seed)?;
        }
        Ok(())
    }

    /// All parameters as (name, tensor), name-sorted. Names are unique
    /// across the three stores because each network has its own prefix.
    pub fn named_parameters(&self) -> Vec<(String, Tensor)> {
        let mut all: Vec<(String, Tensor)> = [&self.vs_gen, &self.vs_disc, &self.vs_seg]
            .iter()
            .flat_map(|vs| vs.variables().into_iter())
            .collect();
        all.sort_by(|a, b| a.0.cmp(&b.0));
        all
    }

    /// Non-trainable state (spectral-norm power-iteration vectors).
    pub fn named_buffers(&self) -> Vec<(String, Tensor)> {
        let mut all: Vec<(String, Tensor)> = self
            .discs
            .iter()
            .flat_map(|d| d.spectral_buffers())
            .map(|sn| (sn.buffer_name.clone(), sn.buffer()))
            .collect();
        all.sort_by(|a, b| a.0.cmp(&b.0));
        all
    }

    pub fn load_buffers(&self, values: &std::collections::HashMap<String, Tensor>) -> Result<()> {
        for disc_set in self.discs.iter() {
            for sn in disc_set.spectral_buffers() {
                let value = values.get(&sn.buffer_name).ok_or_else(|| {
                    Error::Data(format!("checkpoint is missing buffer `{}`", sn.buffer_name))
                })?;
                sn.load_buffer(value);
            }
        }
        Ok(())
    }

    pub fn total_params(&self) -> i64 {
        self.named_parameters().iter().map(|(_, t)| t.numel() as i64).sum()
    }

    /// Text catalog of every parameter and buffer with its shape, for
    /// cross-checking checkpoints.
    pub fn catalog_text(&self) -> String {
        let mut out = String::new();
        for (name, t) in self.named_parameters() {
            out.push_str(&format!("{name} {:?} param\n", t.size()));
        }
        for (name, t) in self.named_buffers() {
            out.push_str(&format!("{name} {:?} buffer\n", t.size()));
        }
        out
    }

    fn gan_part<'a, T>(&self, part: &'a Option<T>) -> Result<&'a T> {
        part.as_ref().ok_or_else(|| {
            Error::Config("this preset has no translation networks".into())
        })
    }

    pub fn gen_a2b(&self) -> Result<&Generator> {
        self.gan_part(&self.gen_a2b)
    }

    pub fn gen_b2a(&self) -> Result<&Generator> {
        self.gan_part(&self.gen_b2a)
    }

    pub fn discs(&self) -> Result<&DiscriminatorSet> {
        self.gan_part(&self.discs)
    }

    /// Segment in inference mode: deterministic, dropout off.
    pub fn segment(&self, images: &Tensor) -> Result<Tensor> {
        let out = self.segmenter.forward(images, None)?;
        Ok(out.mask())
    }
}

/// Dtype/device pair for fresh tensors in this crate.
pub const FLOAT_CPU: (Kind, Device) = (Kind::Float, Device::Cpu);
