//! Loss terms for the combined adversarial + supervised objective.
//!
//! All losses are pure functions of tensors and preserve the input dtype,
//! so the same code path serves f32 training and f64 oracle/gradient
//! tests. Scalars come back as 0-dim tensors to stay differentiable; the
//! [`LossBreakdown`] record carries the extracted f64 values for logging.

use tch::Tensor;

use crate::error::{Error, Result};

/// Selects which supervised terms are active and which pixel loss is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SupervisedVariant {
    /// Cross entropy on the source image and its translation.
    #[serde(rename = "CE")]
    Ce,
    /// Normalized focal loss on the source image and its translation.
    #[serde(rename = "NFL")]
    Nfl,
    /// Normalized focal loss with the additional cycle-reconstruction term.
    #[serde(rename = "NFL_A2B2A")]
    NflA2b2a,
}

impl SupervisedVariant {
    pub fn uses_a2b2a(&self) -> bool {
        matches!(self, SupervisedVariant::NflA2b2a)
    }
}

/// Loss weights: adversarial, cycle, identity, CAM, supervised, plus the
/// focal exponent and term selection.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    /// Adversarial (least-squares) weight.
    pub lambda_adv: f64,
    /// Cycle-reconstruction weight.
    pub lambda_cycle: f64,
    /// Identity-mapping weight. Kept an order of magnitude below the usual
    /// translation-framework default because the images are grayscale.
    pub lambda_identity: f64,
    /// CAM (auxiliary domain classifier) weight.
    pub lambda_cam: f64,
    /// Supervised segmentation weight.
    pub lambda_sup: f64,
    /// Focal exponent; ignored by the CE variant.
    pub gamma: f64,
    pub variant: SupervisedVariant,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_adv: 1.0,
            lambda_cycle: 10.0,
            lambda_identity: 1.0,
            lambda_cam: 1000.0,
            lambda_sup: 1.0,
            gamma: 2.0,
            variant: SupervisedVariant::NflA2b2a,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda_adv,
            self.lambda_cycle,
            self.lambda_identity,
            self.lambda_cam,
            self.lambda_sup,
            self.gamma,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("loss weights must be finite and >= 0".into()));
        }
        Ok(())
    }
}

fn check_same_shape(a: &Tensor, b: &Tensor, what: &str) -> Result<()> {
    if a.size() != b.size() {
        return Err(Error::Shape(format!(
            "{what}: shapes {:?} and {:?} differ",
            a.size(),
            b.size()
        )));
    }
    Ok(())
}

/// Least-squares adversarial loss, discriminator side:
/// mean((real - 1)^2) + mean(fake^2).
pub fn lsgan_discriminator(real: &Tensor, fake: &Tensor) -> Result<Tensor> {
    let real_term = (real - 1.0).square().mean(None);
    let fake_term = fake.square().mean(None);
    Ok(real_term + fake_term)
}

/// Least-squares adversarial loss, generator side: mean((fake - 1)^2).
pub fn lsgan_generator(fake: &Tensor) -> Result<Tensor> {
    Ok((fake - 1.0).square().mean(None))
}

/// Mean absolute difference between an image and its cycle reconstruction.
pub fn cycle_loss(a: &Tensor, a2b2a: &Tensor) -> Result<Tensor> {
    check_same_shape(a, a2b2a, "cycle loss")?;
    Ok((a2b2a - a).abs().mean(None))
}

/// Mean absolute difference between an image already in a generator's
/// output domain and the generator's rendering of it.
pub fn identity_loss(x: &Tensor, translated: &Tensor) -> Result<Tensor> {
    check_same_shape(x, translated, "identity loss")?;
    Ok((translated - x).abs().mean(None))
}

/// Numerically stable sigmoid BCE with logits against a constant target.
fn bce_with_logits_const(logits: &Tensor, target_is_one: bool) -> Tensor {
    // BCE(x, 1) = softplus(-x); BCE(x, 0) = softplus(x).
    if target_is_one {
        logits.neg().softplus().mean(None)
    } else {
        logits.softplus().mean(None)
    }
}

/// CAM loss, generator side: the generator's auxiliary classifier should
/// score translation-pass inputs as 1 and identity-pass inputs as 0,
/// sigmoid BCE on both, summed.
pub fn cam_generator(source_logits: &Tensor, target_logits: &Tensor) -> Result<Tensor> {
    Ok(bce_with_logits_const(source_logits, true) + bce_with_logits_const(target_logits, false))
}

/// CAM loss, discriminator side, least-squares form:
/// mean((real - 1)^2) + mean(fake^2).
pub fn cam_discriminator(real_logits: &Tensor, fake_logits: &Tensor) -> Result<Tensor> {
    let real_term = (real_logits - 1.0).square().mean(None);
    let fake_term = fake_logits.square().mean(None);
    Ok(real_term + fake_term)
}

fn check_segmentation_shapes(logits: &Tensor, mask: &Tensor) -> Result<()> {
    let ls = logits.size();
    let ms = mask.size();
    if ls.len() != 4 || ms.len() != 3 || ls[0] != ms[0] || ls[2] != ms[1] || ls[3] != ms[2] {
        return Err(Error::Shape(format!(
            "segmentation loss: logits {ls:?} do not align with mask {ms:?}"
        )));
    }
    let n_classes = ls[1];
    let lo = mask.min().int64_value(&[]);
    let hi = mask.max().int64_value(&[]);
    if lo < 0 || hi >= n_classes {
        return Err(Error::Data(format!(
            "mask classes span {lo}..={hi}, valid range is 0..{n_classes}"
        )));
    }
    Ok(())
}

/// Log-probability of the true class at each pixel: (B, H, W).
fn true_class_logp(logits: &Tensor, mask: &Tensor) -> Tensor {
    let logp = logits.log_softmax(1, None);
    logp.gather(1, &mask.unsqueeze(1), false).squeeze_dim(1)
}

/// Mean pixelwise cross entropy.
pub fn cross_entropy(logits: &Tensor, mask: &Tensor) -> Result<Tensor> {
    check_segmentation_shapes(logits, mask)?;
    Ok(true_class_logp(logits, mask).mean(None).neg())
}

/// Normalized focal loss: with p_i the true-class probability and
/// w_i = (1 - p_i)^gamma, returns sum(w_i * -ln p_i) / sum(w_i).
///
/// The weighted-average normalization keeps the loss on cross entropy's
/// scale: gamma = 0 reproduces cross entropy exactly, and the value always
/// lies between the smallest and largest per-pixel CE term. When every
/// pixel is predicted perfectly the weight sum vanishes and the loss is 0.
pub fn normalized_focal_loss(logits: &Tensor, mask: &Tensor, gamma: f64) -> Result<Tensor> {
    check_segmentation_shapes(logits, mask)?;
    if gamma < 0.0 {
        return Err(Error::Config(format!("focal gamma must be >= 0, got {gamma}")));
    }
    let logp = true_class_logp(logits, mask);
    let p = logp.exp();
    let w = (p.neg() + 1.0).pow_tensor_scalar(gamma);
    let w_sum = w.sum(None);
    if w_sum.double_value(&[]) == 0.0 {
        // Perfect-prediction limit.
        return Ok(logp.sum(None) * 0.0);
    }
    Ok((&w * logp.neg()).sum(None) / w_sum)
}

/// The three supervised terms and their unweighted sum.
pub struct SupervisedTerms {
    pub a: Tensor,
    pub a2b: Tensor,
    pub a2b2a: Tensor,
    pub sum: Tensor,
}

/// Supervised loss over segmenter outputs for the source image, its
/// translation, and (for the full variant) the cycle reconstruction, all
/// against the source labels. Terms are unweighted relative to each other.
///
/// Absent logits contribute a zero term: the plain-segmenter presets pass
/// only `logits_a`. The full variant requires the reconstruction logits.
pub fn supervised_loss(
    weights: &LossWeights,
    logits_a: &Tensor,
    logits_a2b: Option<&Tensor>,
    logits_a2b2a: Option<&Tensor>,
    mask: &Tensor,
) -> Result<SupervisedTerms> {
    let pixel_loss = |logits: &Tensor| -> Result<Tensor> {
        match weights.variant {
            SupervisedVariant::Ce => cross_entropy(logits, mask),
            SupervisedVariant::Nfl | SupervisedVariant::NflA2b2a => {
                normalized_focal_loss(logits, mask, weights.gamma)
            }
        }
    };
    let zero = || Tensor::zeros([], (logits_a.kind(), logits_a.device()));

    let a = pixel_loss(logits_a)?;
    let a2b = logits_a2b.map(pixel_loss).transpose()?.unwrap_or_else(zero);
    let a2b2a = if weights.variant.uses_a2b2a() {
        let logits = logits_a2b2a.ok_or_else(|| {
            Error::Config("supervised variant NFL_A2B2A requires reconstruction logits".into())
        })?;
        pixel_loss(logits)?
    } else {
        zero()
    };
    let sum = &a + &a2b + &a2b2a;
    Ok(SupervisedTerms { a, a2b, a2b2a, sum })
}

/// Per-step loss record. Component fields hold unweighted values; the
/// totals apply the documented weighting.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossBreakdown {
    pub lsgan_g: f64,
    pub lsgan_d: f64,
    pub cycle: f64,
    pub identity: f64,
    pub cam_g: f64,
    pub cam_d: f64,
    pub sup_a: f64,
    pub sup_a2b: f64,
    pub sup_a2b2a: f64,
    pub total_g: f64,
    pub total_d: f64,
}

impl LossBreakdown {
    /// Compose totals from components:
    /// total_g = l_adv*lsgan_g + l_cyc*cycle + l_idt*identity + l_cam*cam_g
    ///           + l_sup*(sup_a + sup_a2b + sup_a2b2a),
    /// total_d = l_adv*lsgan_d + l_cam*cam_d.
    #[allow(clippy::too_many_arguments)]
    pub fn from_components(
        weights: &LossWeights,
        lsgan_g: f64,
        lsgan_d: f64,
        cycle: f64,
        identity: f64,
        cam_g: f64,
        cam_d: f64,
        sup_a: f64,
        sup_a2b: f64,
        sup_a2b2a: f64,
    ) -> Self {
        let total_g = weights.lambda_adv * lsgan_g
            + weights.lambda_cycle * cycle
            + weights.lambda_identity * identity
            + weights.lambda_cam * cam_g
            + weights.lambda_sup * (sup_a + sup_a2b + sup_a2b2a);
        let total_d = weights.lambda_adv * lsgan_d + weights.lambda_cam * cam_d;
        LossBreakdown {
            lsgan_g,
            lsgan_d,
            cycle,
            identity,
            cam_g,
            cam_d,
            sup_a,
            sup_a2b,
            sup_a2b2a,
            total_g,
            total_d,
        }
    }

    /// Field names in CSV column order, also the order NaN aborts report.
    pub const FIELDS: [&'static str; 11] = [
        "lsgan_g",
        "lsgan_d",
        "cycle",
        "identity",
        "cam_g",
        "cam_d",
        "sup_a",
        "sup_a2b",
        "sup_a2b2a",
        "total_g",
        "total_d",
    ];

    pub fn values(&self) -> [f64; 11] {
        [
            self.lsgan_g,
            self.lsgan_d,
            self.cycle,
            self.identity,
            self.cam_g,
            self.cam_d,
            self.sup_a,
            self.sup_a2b,
            self.sup_a2b2a,
            self.total_g,
            self.total_d,
        ]
    }

    /// First non-finite component, if any.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        Self::FIELDS
            .iter()
            .zip(self.values())
            .find(|(_, v)| !v.is_finite())
            .map(|(name, _)| *name)
    }

    pub fn csv_header() -> String {
        format!("step,{}", Self::FIELDS.join(","))
    }

    pub fn csv_row(&self, step: u64) -> String {
        let mut row = step.to_string();
        for v in self.values() {
            row.push(',');
            row.push_str(&format!("{v}"));
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tch::{Device, Kind};

    fn scalar(t: &Tensor) -> f64 {
        t.double_value(&[])
    }

    fn full(shape: &[i64], v: f64) -> Tensor {
        Tensor::full(shape, v, (Kind::Double, Device::Cpu))
    }

    /// Logits whose softmax equals the given per-class probabilities.
    fn logits_for_probs(probs: &[f64]) -> Vec<f64> {
        probs.iter().map(|p| p.ln()).collect()
    }

    #[test]
    fn lsgan_perfect_discriminator_is_zero() {
        let real = full(&[1, 1, 4, 4], 1.0);
        let fake = full(&[1, 1, 4, 4], 0.0);
        assert_eq!(scalar(&lsgan_discriminator(&real, &fake).unwrap()), 0.0);
    }

    #[test]
    fn lsgan_half_logits_give_half() {
        let real = full(&[1, 1, 4, 4], 0.5);
        let fake = full(&[1, 1, 4, 4], 0.5);
        assert!((scalar(&lsgan_discriminator(&real, &fake).unwrap()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lsgan_fully_fooled_generator_is_zero() {
        let fake = full(&[2, 1, 3, 3], 1.0);
        assert_eq!(scalar(&lsgan_generator(&fake).unwrap()), 0.0);
    }

    #[test]
    fn cycle_identity_is_zero_and_extremes_give_two() {
        let x = Tensor::rand([1, 1, 4, 4], (Kind::Double, Device::Cpu));
        assert_eq!(scalar(&cycle_loss(&x, &x).unwrap()), 0.0);
        let lo = full(&[1, 1, 2, 2], -1.0);
        let hi = full(&[1, 1, 2, 2], 1.0);
        assert_eq!(scalar(&cycle_loss(&lo, &hi).unwrap()), 2.0);
    }

    #[test]
    fn cycle_hand_example() {
        let a = Tensor::from_slice(&[0.0, 0.0, 0.0, 0.0]).view([1, 1, 2, 2]);
        let b = Tensor::from_slice(&[1.0, 0.0, 0.0, -1.0]).view([1, 1, 2, 2]);
        assert!((scalar(&cycle_loss(&a, &b).unwrap()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cycle_shape_mismatch_is_an_error() {
        let a = full(&[1, 1, 2, 2], 0.0);
        let b = full(&[1, 1, 3, 3], 0.0);
        assert!(matches!(cycle_loss(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn identity_constant_offset() {
        let x = full(&[1, 1, 3, 3], 0.0);
        let g = full(&[1, 1, 3, 3], 0.5);
        assert!((scalar(&identity_loss(&x, &g).unwrap()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cam_perfect_discriminator_is_zero() {
        let real = full(&[4], 1.0);
        let fake = full(&[4], 0.0);
        assert_eq!(scalar(&cam_discriminator(&real, &fake).unwrap()), 0.0);
    }

    #[test]
    fn cam_generator_at_zero_logits_is_two_ln_two() {
        let src = full(&[1], 0.0);
        let tgt = full(&[1], 0.0);
        let expected = 2.0 * (2.0f64).ln();
        assert!((scalar(&cam_generator(&src, &tgt).unwrap()) - expected).abs() < 1e-12);
    }

    #[test]
    fn cam_discriminator_half_logits() {
        let real = full(&[2], 0.5);
        let fake = full(&[2], 0.5);
        assert!((scalar(&cam_discriminator(&real, &fake).unwrap()) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_uniform_logits_is_ln_8() {
        let logits = Tensor::zeros([1, 8, 4, 4], (Kind::Double, Device::Cpu));
        let mask = Tensor::zeros([1, 4, 4], (Kind::Int64, Device::Cpu));
        let ce = scalar(&cross_entropy(&logits, &mask).unwrap());
        assert!((ce - (8.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_half_probability_is_ln_2() {
        let mut probs = vec![0.5 / 7.0; 8];
        probs[3] = 0.5;
        let logits = Tensor::from_slice(&logits_for_probs(&probs)).view([1, 8, 1, 1]);
        let mask = Tensor::from_slice(&[3i64]).view([1, 1, 1]);
        let ce = scalar(&cross_entropy(&logits, &mask).unwrap());
        assert!((ce - (2.0f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_two_pixel_hand_sum() {
        // True-class probabilities 0.9 and 0.5.
        let mut cols = Vec::new();
        for p in [0.9, 0.5] {
            let mut probs = vec![(1.0 - p) / 7.0; 8];
            probs[0] = p;
            cols.push(logits_for_probs(&probs));
        }
        // Layout (1, 8, 1, 2): class-major, two pixels.
        let mut data = vec![0.0; 16];
        for c in 0..8 {
            data[2 * c] = cols[0][c];
            data[2 * c + 1] = cols[1][c];
        }
        let logits = Tensor::from_slice(&data).view([1, 8, 1, 2]);
        let mask = Tensor::zeros([1, 1, 2], (Kind::Int64, Device::Cpu));
        let expected = (-(0.9f64.ln()) - 0.5f64.ln()) / 2.0;
        let ce = scalar(&cross_entropy(&logits, &mask).unwrap());
        assert!((ce - expected).abs() < 1e-12, "ce {ce} vs {expected}");
    }

    #[test]
    fn out_of_range_mask_is_a_data_error() {
        let logits = Tensor::zeros([1, 8, 2, 2], (Kind::Double, Device::Cpu));
        let mask = Tensor::full([1, 2, 2], 9i64, (Kind::Int64, Device::Cpu));
        assert!(matches!(cross_entropy(&logits, &mask), Err(Error::Data(_))));
    }

    #[test]
    fn nfl_gamma_zero_equals_cross_entropy() {
        let logits = Tensor::rand([2, 8, 4, 4], (Kind::Double, Device::Cpu)) * 4.0 - 2.0;
        let mask = Tensor::randint(8, [2, 4, 4], (Kind::Int64, Device::Cpu));
        let nfl = scalar(&normalized_focal_loss(&logits, &mask, 0.0).unwrap());
        let ce = scalar(&cross_entropy(&logits, &mask).unwrap());
        assert!((nfl - ce).abs() < 1e-12);
    }

    #[test]
    fn nfl_two_pixel_hand_computation() {
        let mut cols = Vec::new();
        for p in [0.9, 0.5] {
            let mut probs = vec![(1.0 - p) / 7.0; 8];
            probs[0] = p;
            cols.push(logits_for_probs(&probs));
        }
        let mut data = vec![0.0; 16];
        for c in 0..8 {
            data[2 * c] = cols[0][c];
            data[2 * c + 1] = cols[1][c];
        }
        let logits = Tensor::from_slice(&data).view([1, 8, 1, 2]);
        let mask = Tensor::zeros([1, 1, 2], (Kind::Int64, Device::Cpu));
        let (w1, w2) = (0.01, 0.25);
        let expected =
            (w1 * -(0.9f64.ln()) + w2 * -(0.5f64.ln())) / (w1 + w2);
        let nfl = scalar(&normalized_focal_loss(&logits, &mask, 2.0).unwrap());
        assert!((nfl - expected).abs() < 1e-10, "nfl {nfl} vs {expected}");
        // Matches the quoted rounded value too.
        assert!((nfl - 0.67054).abs() < 5e-6);
    }

    #[test]
    fn nfl_perfect_prediction_is_zero() {
        // Saturated logits: true-class probability is exactly 1.0 in f64.
        let mut data = vec![-2000.0; 8];
        data[5] = 2000.0;
        let logits = Tensor::from_slice(&data).view([1, 8, 1, 1]);
        let mask = Tensor::from_slice(&[5i64]).view([1, 1, 1]);
        assert_eq!(scalar(&normalized_focal_loss(&logits, &mask, 2.0).unwrap()), 0.0);
    }

    #[test]
    fn supervised_nfl_variant_zeroes_the_reconstruction_term() {
        let weights = LossWeights { variant: SupervisedVariant::Nfl, ..Default::default() };
        let logits = Tensor::rand([1, 8, 4, 4], (Kind::Double, Device::Cpu));
        let mask = Tensor::randint(8, [1, 4, 4], (Kind::Int64, Device::Cpu));
        let terms =
            supervised_loss(&weights, &logits, Some(&logits), Some(&logits), &mask).unwrap();
        assert_eq!(scalar(&terms.a2b2a), 0.0);
        let sum = scalar(&terms.sum);
        let expected = scalar(&terms.a) + scalar(&terms.a2b);
        assert!((sum - expected).abs() < 1e-12);
    }

    #[test]
    fn supervised_full_variant_on_equal_inputs_is_three_times_one_term() {
        let weights = LossWeights { variant: SupervisedVariant::NflA2b2a, ..Default::default() };
        let logits = Tensor::rand([1, 8, 4, 4], (Kind::Double, Device::Cpu));
        let mask = Tensor::randint(8, [1, 4, 4], (Kind::Int64, Device::Cpu));
        let terms =
            supervised_loss(&weights, &logits, Some(&logits), Some(&logits), &mask).unwrap();
        let sum = scalar(&terms.sum);
        assert!((sum - 3.0 * scalar(&terms.a)).abs() < 1e-12);
    }

    #[test]
    fn supervised_ce_variant_equals_nfl_gamma_zero() {
        let ce_weights = LossWeights { variant: SupervisedVariant::Ce, ..Default::default() };
        let nfl_weights = LossWeights {
            variant: SupervisedVariant::Nfl,
            gamma: 0.0,
            ..Default::default()
        };
        let logits_a = Tensor::rand([2, 8, 4, 4], (Kind::Double, Device::Cpu));
        let logits_t = Tensor::rand([2, 8, 4, 4], (Kind::Double, Device::Cpu));
        let mask = Tensor::randint(8, [2, 4, 4], (Kind::Int64, Device::Cpu));
        let ce = supervised_loss(&ce_weights, &logits_a, Some(&logits_t), None, &mask).unwrap();
        let nfl = supervised_loss(&nfl_weights, &logits_a, Some(&logits_t), None, &mask).unwrap();
        assert!((scalar(&ce.sum) - scalar(&nfl.sum)).abs() < 1e-12);
    }

    #[test]
    fn breakdown_totals_follow_the_stated_formula() {
        let weights = LossWeights {
            lambda_adv: 1.0,
            lambda_cycle: 1.0,
            lambda_identity: 1.0,
            lambda_cam: 1.0,
            lambda_sup: 1.0,
            gamma: 2.0,
            variant: SupervisedVariant::NflA2b2a,
        };
        let b = LossBreakdown::from_components(
            &weights, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
        );
        assert_eq!(b.total_g, 7.0);
        assert_eq!(b.total_d, 2.0);
    }

    #[test]
    fn breakdown_all_zero_components_total_zero() {
        let b = LossBreakdown::from_components(
            &LossWeights::default(),
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        );
        assert_eq!(b.total_g, 0.0);
        assert_eq!(b.total_d, 0.0);
    }

    #[test]
    fn zero_sup_weight_makes_total_g_independent_of_sup_terms() {
        let weights = LossWeights { lambda_sup: 0.0, ..Default::default() };
        let b1 = LossBreakdown::from_components(
            &weights, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 9.0, 9.0, 9.0,
        );
        let b2 = LossBreakdown::from_components(
            &weights, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0,
        );
        assert_eq!(b1.total_g, b2.total_g);
    }

    #[test]
    fn non_finite_component_is_reported_by_name() {
        let mut b = LossBreakdown::default();
        b.cam_d = f64::NAN;
        assert_eq!(b.first_non_finite(), Some("cam_d"));
    }
}
