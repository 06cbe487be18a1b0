//! U-Net segmenter, depth 4, with dropout at the two deepest encoder
//! levels and the bottleneck.

use tch::nn::{self, Module};
use tch::Tensor;

use super::layers::{conv2d, dropout};
use super::NetConfig;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::N_CLASSES;

/// Segmenter forward product. Probabilities and the argmax mask derive
/// from the logits on demand.
pub struct SegmenterOutput {
    /// (B, 8, H, W)
    pub logits: Tensor,
}

impl SegmenterOutput {
    /// Per-pixel class probabilities, softmax over the class axis.
    pub fn probabilities(&self) -> Tensor {
        self.logits.softmax(1, None)
    }

    /// Per-pixel argmax class ids, (B, H, W) as i64.
    pub fn mask(&self) -> Tensor {
        self.logits.argmax(1, false)
    }
}

struct DoubleConv {
    conv1: nn::Conv2D,
    conv2: nn::Conv2D,
}

impl DoubleConv {
    fn new(path: nn::Path, cin: i64, cout: i64) -> Self {
        DoubleConv {
            conv1: conv2d(&path / "conv1", cin, cout, 3, 1, 1, true),
            conv2: conv2d(&path / "conv2", cout, cout, 3, 1, 1, true),
        }
    }

    fn forward(&self, x: &Tensor) -> Tensor {
        self.conv2.forward(&self.conv1.forward(x).relu()).relu()
    }
}

struct UpStage {
    upconv: nn::ConvTranspose2D,
    block: DoubleConv,
}

impl UpStage {
    fn new(path: nn::Path, cin: i64, cout: i64) -> Self {
        let upconv = nn::conv_transpose2d(
            &path / "upconv",
            cin,
            cout,
            2,
            nn::ConvTransposeConfig { stride: 2, ..Default::default() },
        );
        UpStage { upconv, block: DoubleConv::new(&path / "block", 2 * cout, cout) }
    }

    fn forward(&self, x: &Tensor, skip: &Tensor) -> Tensor {
        let up = self.upconv.forward(x);
        self.block.forward(&Tensor::cat(&[up, skip.shallow_clone()], 1))
    }
}

pub struct Unet {
    enc1: DoubleConv,
    enc2: DoubleConv,
    enc3: DoubleConv,
    enc4: DoubleConv,
    bottleneck: DoubleConv,
    up4: UpStage,
    up3: UpStage,
    up2: UpStage,
    up1: UpStage,
    head: nn::Conv2D,
    dropout_p: f64,
    input_size: i64,
}

impl Unet {
    pub fn new(path: nn::Path, cfg: &NetConfig) -> Self {
        let c = cfg.seg_base;
        Unet {
            enc1: DoubleConv::new(&path / "enc1", 1, c),
            enc2: DoubleConv::new(&path / "enc2", c, 2 * c),
            enc3: DoubleConv::new(&path / "enc3", 2 * c, 4 * c),
            enc4: DoubleConv::new(&path / "enc4", 4 * c, 8 * c),
            bottleneck: DoubleConv::new(&path / "bottleneck", 8 * c, 16 * c),
            up4: UpStage::new(&path / "up4", 16 * c, 8 * c),
            up3: UpStage::new(&path / "up3", 8 * c, 4 * c),
            up2: UpStage::new(&path / "up2", 4 * c, 2 * c),
            up1: UpStage::new(&path / "up1", 2 * c, c),
            head: conv2d(&path / "head", c, N_CLASSES as i64, 1, 1, 0, true),
            dropout_p: cfg.dropout,
            input_size: cfg.input_size,
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        let s = x.size();
        if s.len() != 4 || s[1] != 1 || s[2] != self.input_size || s[3] != self.input_size {
            return Err(Error::Shape(format!(
                "segmenter expects (B, 1, {0}, {0}), got {s:?}",
                self.input_size
            )));
        }
        Ok(())
    }

    /// Forward pass. `dropout_stream` enables training-mode dropout; pass
    /// `None` for deterministic inference.
    pub fn forward(
        &self,
        x: &Tensor,
        mut dropout_stream: Option<&mut RngStream>,
    ) -> Result<SegmenterOutput> {
        self.check_input(x)?;
        let drop = |t: &Tensor, stream: &mut Option<&mut RngStream>| match stream {
            Some(s) => dropout(t, self.dropout_p, s),
            None => t.shallow_clone(),
        };
        let s1 = self.enc1.forward(x);
        let s2 = self.enc2.forward(&s1.max_pool2d(2, 2, 0, 1, false));
        let s3 = drop(&self.enc3.forward(&s2.max_pool2d(2, 2, 0, 1, false)), &mut dropout_stream);
        let s4 = drop(&self.enc4.forward(&s3.max_pool2d(2, 2, 0, 1, false)), &mut dropout_stream);
        let mid = drop(
            &self.bottleneck.forward(&s4.max_pool2d(2, 2, 0, 1, false)),
            &mut dropout_stream,
        );
        let d4 = self.up4.forward(&mid, &s4);
        let d3 = self.up3.forward(&d4, &s3);
        let d2 = self.up2.forward(&d3, &s2);
        let d1 = self.up1.forward(&d2, &s1);
        Ok(SegmenterOutput { logits: self.head.forward(&d1) })
    }
}
