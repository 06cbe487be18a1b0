//! Patch discriminators with CAM auxiliary heads and spectral-norm
//! stabilized convolutions. Each domain gets a deep "global" head (coarse
//! 8x8 patches at 256 input) and a shallow "local" head (32x32 patches).

use tch::nn;
use tch::Tensor;

use super::layers::{leaky_relu_02, SnConv2d, SnLinear, SpectralNorm};
use super::NetConfig;
use crate::error::{Error, Result};

pub struct DiscriminatorOutput {
    /// Patch-level real/fake logits, (B, 1, h', w').
    pub patch_logits: Tensor,
    /// Auxiliary CAM logit per sample, (B,).
    pub cam_logit: Tensor,
}

pub struct Discriminator {
    strided: Vec<SnConv2d>,
    gap_fc: SnLinear,
    gmp_fc: SnLinear,
    cam_conv: SnConv2d,
    patch_head: SnConv2d,
    input_size: i64,
}

impl Discriminator {
    /// `n_strided` stride-2 layers halve the input that many times before
    /// the stride-1 patch head: 5 for the global head, 3 for the local one.
    pub fn new(path: nn::Path, name: &str, cfg: &NetConfig, n_strided: usize, seed: u64) -> Self {
        let mut strided = Vec::with_capacity(n_strided);
        let mut cin = 1i64;
        let mut cout = cfg.disc_base;
        for i in 0..n_strided {
            strided.push(SnConv2d::new(
                &path / "strided" / i.to_string(),
                cin,
                cout,
                4,
                2,
                1,
                true,
                format!("{name}.strided.{i}.u"),
                seed,
            ));
            cin = cout;
            cout = (cout * 2).min(512);
        }
        let c = cin;
        Discriminator {
            strided,
            gap_fc: SnLinear::new(&path / "gap_fc", c, 1, format!("{name}.gap_fc.u"), seed),
            gmp_fc: SnLinear::new(&path / "gmp_fc", c, 1, format!("{name}.gmp_fc.u"), seed),
            cam_conv: SnConv2d::new(
                &path / "cam_conv",
                2 * c,
                c,
                1,
                1,
                0,
                true,
                format!("{name}.cam_conv.u"),
                seed,
            ),
            patch_head: SnConv2d::new(
                &path / "patch_head",
                c,
                1,
                3,
                1,
                1,
                true,
                format!("{name}.patch_head.u"),
                seed,
            ),
            input_size: cfg.input_size,
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let s = x.size();
        if s.len() != 4 || s[1] != 1 || s[2] != self.input_size || s[3] != self.input_size {
            return Err(Error::Shape(format!(
                "discriminator expects (B, 1, {0}, {0}), got {s:?}",
                self.input_size
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor) -> Result<DiscriminatorOutput> {
        self.check_input(x)?;
        let mut h = x.shallow_clone();
        for conv in &self.strided {
            h = leaky_relu_02(&conv.forward(&h));
        }
        let gap = h.adaptive_avg_pool2d([1, 1]).flatten(1, -1);
        let gap_logit = self.gap_fc.forward(&gap);
        let w_gap = self.gap_fc.weight().view([1, -1, 1, 1]);
        let x_gap = &h * &w_gap;
        let (gmp, _) = h.adaptive_max_pool2d([1, 1]);
        let gmp_logit = self.gmp_fc.forward(&gmp.flatten(1, -1));
        let w_gmp = self.gmp_fc.weight().view([1, -1, 1, 1]);
        let x_gmp = &h * &w_gmp;
        let cam_logit = (gap_logit + gmp_logit).squeeze_dim(1);
        let h = leaky_relu_02(&self.cam_conv.forward(&Tensor::cat(&[x_gap, x_gmp], 1)));
        let patch_logits = self.patch_head.forward(&h);
        Ok(DiscriminatorOutput { patch_logits, cam_logit })
    }

    pub fn spectral_buffers(&self) -> Vec<&SpectralNorm> {
        let mut buffers: Vec<&SpectralNorm> =
            self.strided.iter().map(|c| c.spectral()).collect();
        buffers.push(self.gap_fc.spectral());
        buffers.push(self.gmp_fc.spectral());
        buffers.push(self.cam_conv.spectral());
        buffers.push(self.patch_head.spectral());
        buffers
    }
}

/// The four discriminators of the two-domain setup.
pub struct DiscriminatorSet {
    pub global_a: Discriminator,
    pub local_a: Discriminator,
    pub global_b: Discriminator,
    pub local_b: Discriminator,
}

impl DiscriminatorSet {
    pub fn new(root: &nn::Path, cfg: &NetConfig, seed: u64) -> Self {
        DiscriminatorSet {
            global_a: Discriminator::new(root / "disc_global_a", "disc_global_a", cfg, 5, seed),
            local_a: Discriminator::new(root / "disc_local_a", "disc_local_a", cfg, 3, seed),
            global_b: Discriminator::new(root / "disc_global_b", "disc_global_b", cfg, 5, seed),
            local_b: Discriminator::new(root / "disc_local_b", "disc_local_b", cfg, 3, seed),
        }
    }

    pub fn spectral_buffers(&self) -> Vec<&SpectralNorm> {
        let mut all = self.global_a.spectral_buffers();
        all.extend(self.local_a.spectral_buffers());
        all.extend(self.global_b.spectral_buffers());
        all.extend(self.local_b.spectral_buffers());
        all
    }
}
