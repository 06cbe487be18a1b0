//! Translation generator: downsampling encoder, residual bottleneck with
//! CAM attention, and an adaptively normalized upsampling decoder with a
//! tanh output.

use tch::nn::{self, Module};
use tch::Tensor;

use super::layers::{conv2d, instance_norm2d, AdaIln, ResBlock};
use super::NetConfig;
use crate::error::{Error, Result};

/// Generator forward products: the translated image in [-1, 1], the
/// auxiliary domain-classifier logit per sample, and the nonnegative
/// bottleneck attention map.
pub struct GeneratorOutput {
    pub image: Tensor,
    pub cam_logit: Tensor,
    pub attention: Tensor,
}

pub struct Generator {
    stem: nn::Conv2D,
    down1: nn::Conv2D,
    down2: nn::Conv2D,
    res: Vec<ResBlock>,
    gap_fc: nn::Linear,
    gmp_fc: nn::Linear,
    cam_conv: nn::Conv2D,
    mlp: nn::Linear,
    gamma1: nn::Linear,
    beta1: nn::Linear,
    norm1: AdaIln,
    up1: nn::Conv2D,
    gamma2: nn::Linear,
    beta2: nn::Linear,
    norm2: AdaIln,
    up2: nn::Conv2D,
    out: nn::Conv2D,
    input_size: i64,
}

impl Generator {
    pub fn new(path: nn::Path, cfg: &NetConfig) -> Self {
        let c = cfg.gen_base;
        let cb = 4 * c; // bottleneck width after two stride-2 stages
        let no_bias_fc = nn::LinearConfig { bias: false, ..Default::default() };
        Generator {
            stem: conv2d(&path / "stem", 1, c, 7, 1, 3, false),
            down1: conv2d(&path / "down1", c, 2 * c, 3, 2, 1, false),
            down2: conv2d(&path / "down2", 2 * c, cb, 3, 2, 1, false),
            res: (0..cfg.res_blocks)
                .map(|i| ResBlock::new(&path / "res" / i.to_string(), cb))
                .collect(),
            gap_fc: nn::linear(&path / "gap_fc", cb, 1, no_bias_fc),
            gmp_fc: nn::linear(&path / "gmp_fc", cb, 1, no_bias_fc),
            cam_conv: conv2d(&path / "cam_conv", 2 * cb, cb, 1, 1, 0, true),
            mlp: nn::linear(&path / "mlp", cb, cb, Default::default()),
            gamma1: nn::linear(&path / "gamma1", cb, 2 * c, Default::default()),
            beta1: nn::linear(&path / "beta1", cb, 2 * c, Default::default()),
            norm1: AdaIln::new(&path / "norm1", 2 * c),
            up1: conv2d(&path / "up1", cb, 2 * c, 3, 1, 1, false),
            gamma2: nn::linear(&path / "gamma2", cb, c, Default::default()),
            beta2: nn::linear(&path / "beta2", cb, c, Default::default()),
            norm2: AdaIln::new(&path / "norm2", c),
            up2: conv2d(&path / "up2", 2 * c, c, 3, 1, 1, false),
            out: conv2d(&path / "out", c, 1, 7, 1, 3, true),
            input_size: cfg.input_size,
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let s = x.size();
        if s.len() != 4 || s[1] != 1 || s[2] != self.input_size || s[3] != self.input_size {
            return Err(Error::Shape(format!(
                "generator expects (B, 1, {0}, {0}), got {s:?}",
                self.input_size
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor) -> Result<GeneratorOutput> {
        self.check_input(x)?;
        let h = instance_norm2d(&self.stem.forward(x)).relu();
        let h = instance_norm2d(&self.down1.forward(&h)).relu();
        let mut h = instance_norm2d(&self.down2.forward(&h)).relu();
        for block in &self.res {
            h = block.forward(&h);
        }

        // CAM attention: reweight bottleneck features by the class-score
        // weights of global-average and global-max heads.
        let gap = h.adaptive_avg_pool2d([1, 1]).flatten(1, -1);
        let gap_logit = self.gap_fc.forward(&gap);
        let w_gap = self.gap_fc.ws.view([1, -1, 1, 1]);
        let x_gap = &h * &w_gap;
        let (gmp, _) = h.adaptive_max_pool2d([1, 1]);
        let gmp_logit = self.gmp_fc.forward(&gmp.flatten(1, -1));
        let w_gmp = self.gmp_fc.ws.view([1, -1, 1, 1]);
        let x_gmp = &h * &w_gmp;
        let cam_logit = (gap_logit + gmp_logit).squeeze_dim(1);
        let att = self.cam_conv.forward(&Tensor::cat(&[x_gap, x_gmp], 1)).relu();
        let attention = att.mean_dim([1i64].as_slice(), true, None);

        // Style code for the adaptive norms.
        let style = self.mlp.forward(&att.adaptive_avg_pool2d([1, 1]).flatten(1, -1)).relu();

        let size = att.size();
        let (h2, w2) = (size[2] * 2, size[3] * 2);
        let d = att.upsample_nearest2d([h2, w2], None, None);
        let d = self.up1.forward(&d);
        let d = self
            .norm1
            .forward(&d, &self.gamma1.forward(&style), &self.beta1.forward(&style))
            .relu();
        let d = d.upsample_nearest2d([h2 * 2, w2 * 2], None, None);
        let d = self.up2.forward(&d);
        let d = self
            .norm2
            .forward(&d, &self.gamma2.forward(&style), &self.beta2.forward(&style))
            .relu();
        let image = self.out.forward(&d).tanh();

        Ok(GeneratorOutput { image, cam_logit, attention })
    }
}
