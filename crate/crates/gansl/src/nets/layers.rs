//! Layer primitives shared by the generators, discriminators and segmenter.

use std::cell::RefCell;

use tch::nn::{self, Module};
use tch::Tensor;

use crate::rng::RngStream;

pub fn leaky_relu_02(x: &Tensor) -> Tensor {
    // max(x, 0.2 x) with relu subgradients at 0.
    x.relu() - x.neg().relu() * 0.2
}

/// Instance normalization without affine parameters.
pub fn instance_norm2d(x: &Tensor) -> Tensor {
    x.instance_norm(
        Option::<Tensor>::None,
        Option::<Tensor>::None,
        Option::<Tensor>::None,
        Option::<Tensor>::None,
        true,
        0.0,
        1e-5,
        false,
    )
}

pub fn conv2d(path: nn::Path, cin: i64, cout: i64, k: i64, stride: i64, pad: i64, bias: bool) -> nn::Conv2D {
    nn::conv2d(path, cin, cout, k, nn::ConvConfig { stride, padding: pad, bias, ..Default::default() })
}

/// Inverted dropout with masks drawn from the crate's own stream so train
/// steps replay exactly across checkpoint resume.
pub fn dropout(x: &Tensor, p: f64, stream: &mut RngStream) -> Tensor {
    debug_assert!((0.0..1.0).contains(&p));
    let keep = 1.0 - p;
    let numel = x.numel();
    let mask: Vec<f32> = (0..numel)
        .map(|_| if stream.bernoulli(keep) { (1.0 / keep) as f32 } else { 0.0 })
        .collect();
    let mask = Tensor::from_slice(&mask).view(x.size().as_slice()).to_kind(x.kind());
    x * mask
}

fn l2_normalize(v: &Tensor) -> Tensor {
    v / (v.norm() + 1e-12)
}

/// Spectral normalization state for one weight matrix: a persistent left
/// singular vector estimate refined by one power iteration per forward.
pub struct SpectralNorm {
    u: RefCell<Tensor>,
    /// Catalog name of the buffer (`<layer>.u`).
    pub buffer_name: String,
}

impl SpectralNorm {
    pub fn new(rows: i64, buffer_name: String, seed: u64) -> Self {
        let mut stream = RngStream::new(seed, "init.sn_u", crate::rng::name_index(&buffer_name));
        let raw: Vec<f32> = (0..rows).map(|_| stream.normal() as f32).collect();
        let u = l2_normalize(&Tensor::from_slice(&raw)).set_requires_grad(false);
        SpectralNorm { u: RefCell::new(u), buffer_name }
    }

    /// `weight / sigma_max(weight)`, with sigma estimated against the
    /// stored u. The u update runs without grad; sigma keeps the graph so
    /// the division is differentiated through the weight.
    pub fn normalize(&self, weight: &Tensor) -> Tensor {
        let rows = weight.size()[0];
        let w_mat = weight.view([rows, -1]);
        let (u_new, v) = {
            let _ng = tch::no_grad_guard();
            let w_d = w_mat.detach();
            let u = self.u.borrow();
            let v = l2_normalize(&w_d.transpose(0, 1).matmul(&u.unsqueeze(1)).squeeze_dim(1));
            let u_new = l2_normalize(&w_d.matmul(&v.unsqueeze(1)).squeeze_dim(1));
            (u_new, v)
        };
        *self.u.borrow_mut() = u_new.copy();
        let sigma = u_new.unsqueeze(0).matmul(&w_mat).matmul(&v.unsqueeze(1));
        weight / sigma.view([])
    }

    pub fn buffer(&self) -> Tensor {
        self.u.borrow().shallow_clone()
    }

    pub fn load_buffer(&self, value: &Tensor) {
        let _ng = tch::no_grad_guard();
        self.u.borrow_mut().copy_(value);
    }
}

/// Convolution with spectral-norm-stabilized weights.
pub struct SnConv2d {
    ws: Tensor,
    bs: Option<Tensor>,
    sn: SpectralNorm,
    stride: i64,
    padding: i64,
}

impl SnConv2d {
    pub fn new(
        path: nn::Path,
        cin: i64,
        cout: i64,
        k: i64,
        stride: i64,
        padding: i64,
        bias: bool,
        buffer_name: String,
        seed: u64,
    ) -> Self {
        let ws = path.var("weight", &[cout, cin, k, k], nn::Init::Const(0.0));
        let bs = bias.then(|| path.var("bias", &[cout], nn::Init::Const(0.0)));
        SnConv2d { ws, bs, sn: SpectralNorm::new(cout, buffer_name, seed), stride, padding }
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        let w = self.sn.normalize(&self.ws);
        x.conv2d(&w, self.bs.as_ref(), [self.stride], [self.padding], [1], 1)
    }

    pub fn spectral(&self) -> &SpectralNorm {
        &self.sn
    }
}

/// Linear head with spectral-norm-stabilized weights.
pub struct SnLinear {
    ws: Tensor,
    sn: SpectralNorm,
}

impl SnLinear {
    pub fn new(path: nn::Path, cin: i64, cout: i64, buffer_name: String, seed: u64) -> Self {
        let ws = path.var("weight", &[cout, cin], nn::Init::Const(0.0));
        SnLinear { ws, sn: SpectralNorm::new(cout, buffer_name, seed) }
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        x.matmul(&self.sn.normalize(&self.ws).transpose(0, 1))
    }

    pub fn weight(&self) -> &Tensor {
        &self.ws
    }

    pub fn spectral(&self) -> &SpectralNorm {
        &self.sn
    }
}

/// Adaptive layer-instance normalization: a learnable per-channel mix of
/// instance and layer statistics, modulated by externally supplied gamma
/// and beta. The mixing weight is clamped to [0, 1] in the forward pass.
pub struct AdaIln {
    rho: Tensor,
    eps: f64,
}

impl AdaIln {
    pub fn new(path: nn::Path, channels: i64) -> Self {
        // Start near the instance-norm end, the usual choice for this block.
        let rho = path.var("rho", &[1, channels, 1, 1], nn::Init::Const(0.9));
        AdaIln { rho, eps: 1e-5 }
    }

    pub fn forward(&self, x: &Tensor, gamma: &Tensor, beta: &Tensor) -> Tensor {
        let in_mean = x.mean_dim([2i64, 3].as_slice(), true, None);
        let in_var = x.var_dim([2i64, 3].as_slice(), false, true);
        let x_in = (x - &in_mean) / (&in_var + self.eps).sqrt();
        let ln_mean = x.mean_dim([1i64, 2, 3].as_slice(), true, None);
        let ln_var = x.var_dim([1i64, 2, 3].as_slice(), false, true);
        let x_ln = (x - &ln_mean) / (&ln_var + self.eps).sqrt();
        let rho = self.rho.clamp(0.0, 1.0);
        let mixed = &rho * x_in + (1.0 - &rho) * x_ln;
        mixed * gamma.unsqueeze(-1).unsqueeze(-1) + beta.unsqueeze(-1).unsqueeze(-1)
    }
}

/// Residual block: two 3x3 convolutions with instance norm, identity skip.
pub struct ResBlock {
    conv1: nn::Conv2D,
    conv2: nn::Conv2D,
}

impl ResBlock {
    pub fn new(path: nn::Path, channels: i64) -> Self {
        ResBlock {
            conv1: conv2d(&path / "conv1", channels, channels, 3, 1, 1, false),
            conv2: conv2d(&path / "conv2", channels, channels, 3, 1, 1, false),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Tensor {
        let h = instance_norm2d(&self.conv1.forward(x)).relu();
        let h = instance_norm2d(&self.conv2.forward(&h));
        h + x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tch::{Device, Kind};

    #[test]
    fn leaky_relu_matches_definition() {
        let x = Tensor::from_slice(&[-2.0f32, -0.5, 0.0, 0.5, 2.0]);
        let y = leaky_relu_02(&x);
        let expected = [-0.4f32, -0.1, 0.0, 0.5, 2.0];
        let got: Vec<f32> = Vec::try_from(y).unwrap();
        for (g, e) in got.iter().zip(expected) {
            assert!((g - e).abs() < 1e-6);
        }
    }

    #[test]
    fn dropout_scales_kept_values_and_is_stream_deterministic() {
        let x = Tensor::ones([1, 4, 8, 8], (Kind::Float, Device::Cpu));
        let mut s1 = RngStream::new(5, "drop", 0);
        let mut s2 = RngStream::new(5, "drop", 0);
        let y1 = dropout(&x, 0.5, &mut s1);
        let y2 = dropout(&x, 0.5, &mut s2);
        assert_eq!(Vec::<f32>::try_from(y1.flatten(0, -1)).unwrap(), Vec::<f32>::try_from(y2.flatten(0, -1)).unwrap());
        let vals: Vec<f32> = Vec::try_from(y1.flatten(0, -1)).unwrap();
        assert!(vals.iter().all(|&v| v == 0.0 || (v - 2.0).abs() < 1e-6));
        assert!(vals.iter().any(|&v| v == 0.0));
        assert!(vals.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn spectral_norm_bounds_the_top_singular_value() {
        let vs = nn::VarStore::new(Device::Cpu);
        let mut conv = SnConv2d::new(vs.root() / "c", 4, 8, 3, 1, 1, true, "c.u".into(), 0);
        tch::no_grad(|| {
            conv.ws.copy_(&(Tensor::randn([8, 4, 3, 3], (Kind::Float, Device::Cpu)) * 3.0));
        });
        // A few iterations to settle the power iteration.
        let x = Tensor::randn([1, 4, 8, 8], (Kind::Float, Device::Cpu));
        for _ in 0..30 {
            let _ = conv.forward(&x);
        }
        let w = conv.sn.normalize(&conv.ws);
        let (_, sv, _) = w.view([8, -1]).svd(true, true);
        let top = sv.max().double_value(&[]);
        assert!((top - 1.0).abs() < 0.05, "top singular value {top}");
    }

    #[test]
    fn adailn_identity_modulation_normalizes() {
        let vs = nn::VarStore::new(Device::Cpu);
        let norm = AdaIln::new(vs.root() / "n", 4);
        let x = Tensor::randn([2, 4, 8, 8], (Kind::Float, Device::Cpu)) * 5.0 + 3.0;
        let gamma = Tensor::ones([2, 4], (Kind::Float, Device::Cpu));
        let beta = Tensor::zeros([2, 4], (Kind::Float, Device::Cpu));
        let y = norm.forward(&x, &gamma, &beta);
        let m = y.mean(None).double_value(&[]);
        assert!(m.abs() < 0.2, "mean {m}");
        let v = y.var(false).double_value(&[]);
        assert!((v - 1.0).abs() < 0.3, "var {v}");
    }
}
