//! Synthetic two-domain layered phantoms.
//!
//! Each phantom is a stack of seven wavy horizontal bands over background,
//! rendered as piecewise-constant intensities and then passed through a
//! per-domain appearance model (gamma, brightness, inversion, blur,
//! multiplicative speckle). The class mask depends only on the geometry
//! stream, never on the style, so two domains generated from one seed share
//! ground truth exactly.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{FloatImage, LabelMask, N_CLASSES};

/// Number of layer boundaries: seven bands need eight edges.
const N_BOUNDARIES: usize = N_CLASSES;
/// Minimum per-column band height, px. Guarantees every class survives
/// the waviness in every column.
const MIN_BAND_PX: f64 = 2.0;

/// Geometry and intensity layout of a phantom family.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomSpec {
    pub height: usize,
    pub width: usize,
    /// Foreground band count; the renderer is built for exactly 7.
    pub n_layers: usize,
    /// Max summed sinusoid amplitude per boundary, px.
    pub waviness_amplitude: f64,
    /// Sinusoid frequency range, cycles across the image width.
    pub waviness_freq: (f64, f64),
    /// Mean intensity per class in [0, 1]; index 0 is background.
    pub layer_intensity_means: [f64; N_CLASSES],
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            height: 256,
            width: 256,
            n_layers: 7,
            waviness_amplitude: 6.0,
            waviness_freq: (0.5, 3.0),
            // Dark vitreous, bright nerve fiber band, alternating inner
            // layers, bright photoreceptor/RPE complex.
            layer_intensity_means: [0.05, 0.65, 0.40, 0.22, 0.45, 0.18, 0.60, 0.78],
            seed: 0,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_layers != 7 {
            return Err(Error::Config(format!(
                "phantom renderer supports exactly 7 foreground layers, got {}",
                self.n_layers
            )));
        }
        if self.height < 64 || self.width < 64 {
            return Err(Error::Config(format!(
                "phantom must be at least 64x64, got {}x{}",
                self.height, self.width
            )));
        }
        if self.waviness_amplitude < 0.0 {
            return Err(Error::Config("waviness amplitude must be >= 0".into()));
        }
        let (lo, hi) = self.waviness_freq;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::Config(format!(
                "waviness frequency range ({lo}, {hi}) is not a valid positive range"
            )));
        }
        if self.layer_intensity_means.iter().any(|&m| !(0.0..=1.0).contains(&m)) {
            return Err(Error::Config("layer intensity means must lie in [0, 1]".into()));
        }
        // The band between the margins must fit 7 layers of useful height;
        // otherwise some layer would render at zero height in some column.
        let usable = self.height as f64 - 2.0 * self.margin();
        if usable < 7.0 * (MIN_BAND_PX + 4.0) {
            return Err(Error::Config(format!(
                "height {} too small for 7 layers at waviness amplitude {}: \
                 a layer would collapse to zero height",
                self.height, self.waviness_amplitude
            )));
        }
        Ok(())
    }

    /// Vertical margin that keeps background visible above and below the
    /// stack for any admissible wave.
    fn margin(&self) -> f64 {
        self.waviness_amplitude + 4.0
    }
}

/// Per-domain appearance model. Applying a style never touches the mask.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainStyle {
    pub contrast_gamma: f64,
    pub brightness_offset: f64,
    pub speckle_sigma: f64,
    /// Gaussian blur sigma in px; 0 disables.
    pub blur_sigma: f64,
    pub intensity_inversion: bool,
}

impl DomainStyle {
    /// Clean source-domain appearance.
    pub fn domain_a_default() -> Self {
        DomainStyle {
            contrast_gamma: 1.0,
            brightness_offset: 0.0,
            speckle_sigma: 0.03,
            blur_sigma: 0.0,
            intensity_inversion: false,
        }
    }

    /// Shifted target-domain appearance: darker tone curve, offset, more
    /// speckle, visible blur.
    pub fn domain_b_default() -> Self {
        DomainStyle {
            contrast_gamma: 1.6,
            brightness_offset: -0.15,
            speckle_sigma: 0.08,
            blur_sigma: 1.2,
            intensity_inversion: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.contrast_gamma <= 0.0 {
            return Err(Error::Config("contrast gamma must be > 0".into()));
        }
        if self.speckle_sigma < 0.0 || self.blur_sigma < 0.0 {
            return Err(Error::Config("noise/blur sigmas must be >= 0".into()));
        }
        Ok(())
    }
}

/// Layer boundaries for image `index`: eight polylines, one f64 row
/// coordinate per column, strictly ordered top to bottom with at least
/// [`MIN_BAND_PX`] between neighbors in every column.
pub fn boundaries(spec: &PhantomSpec, index: u64) -> Vec<Vec<f64>> {
    let mut rng = RngStream::new(spec.seed, "phantom.boundaries", index);
    let w = spec.width;
    let margin = spec.margin();
    let usable = spec.height as f64 - 2.0 * margin;

    // Random band thicknesses, normalized to fill the usable strip.
    let weights: Vec<f64> = (0..spec.n_layers).map(|_| rng.uniform_in(0.6, 1.4)).collect();
    let total: f64 = weights.iter().sum();
    let mut base = vec![margin];
    for wgt in &weights {
        base.push(base.last().unwrap() + wgt / total * usable);
    }

    // Per-boundary wave: 2-4 sinusoids, summed amplitude <= the spec limit.
    let mut bounds = Vec::with_capacity(N_BOUNDARIES);
    for b in base.iter().take(N_BOUNDARIES) {
        let n_waves = 2 + rng.below(3); // 2..=4
        let raw: Vec<(f64, f64, f64)> = (0..n_waves)
            .map(|_| {
                (
                    rng.uniform_in(0.2, 1.0),
                    rng.uniform_in(spec.waviness_freq.0, spec.waviness_freq.1),
                    rng.uniform_in(0.0, std::f64::consts::TAU),
                )
            })
            .collect();
        let amp_sum: f64 = raw.iter().map(|(a, _, _)| a).sum();
        let scale = spec.waviness_amplitude * rng.uniform_in(0.5, 1.0) / amp_sum;

        let line: Vec<f64> = (0..w)
            .map(|x| {
                let t = x as f64 / w as f64;
                let wave: f64 = raw
                    .iter()
                    .map(|(a, f, p)| a * scale * (std::f64::consts::TAU * f * t + p).sin())
                    .sum();
                b + wave
            })
            .collect();
        bounds.push(line);
    }

    // Enforce ordering column-wise; the validated geometry leaves room so
    // this never pushes the last boundary out of frame.
    for x in 0..w {
        for k in 1..N_BOUNDARIES {
            let floor = bounds[k - 1][x] + MIN_BAND_PX;
            if bounds[k][x] < floor {
                bounds[k][x] = floor;
            }
        }
    }
    bounds
}

/// Rasterize boundaries into a class mask: class k+1 between boundaries k
/// and k+1, background above the first and below the last.
pub fn rasterize_mask(spec: &PhantomSpec, bounds: &[Vec<f64>]) -> LabelMask {
    let (h, w) = (spec.height, spec.width);
    let mut classes = vec![0u8; h * w];
    for x in 0..w {
        for (y, row) in classes.chunks_exact_mut(w).enumerate() {
            let yc = y as f64 + 0.5;
            let crossed = bounds.iter().take_while(|b| b[x] <= yc).count();
            row[x] = if crossed == 0 || crossed == N_BOUNDARIES { 0 } else { crossed as u8 };
        }
    }
    LabelMask { height: h, width: w, classes }
}

/// Piecewise-constant intensity lookup in [0, 1].
fn clean_intensity(spec: &PhantomSpec, mask: &LabelMask) -> Vec<f64> {
    mask.classes.iter().map(|&c| spec.layer_intensity_means[c as usize]).collect()
}

/// Separable Gaussian blur with edge replication.
fn gaussian_blur(data: &[f64], h: usize, w: usize, sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return data.to_vec();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i as f64) * (i as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let ksum: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= ksum);

    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, kv) in kernel.iter().enumerate() {
                let xi = (x as isize + ki as isize - radius).clamp(0, w as isize - 1) as usize;
                acc += kv * data[y * w + xi];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, kv) in kernel.iter().enumerate() {
                let yi = (y as isize + ki as isize - radius).clamp(0, h as isize - 1) as usize;
                acc += kv * tmp[yi * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Apply a style to a clean [0, 1] rendering. Order: gamma, brightness,
/// inversion, blur, multiplicative speckle, final clamp to [0, 1]. The
/// speckle draws come from a dedicated stream keyed by (seed, index) only,
/// so two styles on one phantom see the same noise field scaled by their
/// own sigma.
fn apply_style(
    spec: &PhantomSpec,
    style: &DomainStyle,
    index: u64,
    clean: &[f64],
) -> Vec<f64> {
    let mut img: Vec<f64> = clean
        .iter()
        .map(|&v| {
            let mut v = v.powf(style.contrast_gamma) + style.brightness_offset;
            if style.intensity_inversion {
                v = 1.0 - v;
            }
            v
        })
        .collect();
    img = gaussian_blur(&img, spec.height, spec.width, style.blur_sigma);
    if style.speckle_sigma > 0.0 {
        let mut noise = RngStream::new(spec.seed, "phantom.speckle", index);
        for v in img.iter_mut() {
            *v *= 1.0 + style.speckle_sigma * noise.normal();
        }
    }
    img.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    img
}

/// Render image `index` of the family under `style`, styled intensities in
/// [0, 1] plus the style-independent mask.
pub fn render(spec: &PhantomSpec, style: &DomainStyle, index: u64) -> (Vec<f64>, LabelMask) {
    let bounds = boundaries(spec, index);
    let mask = rasterize_mask(spec, &bounds);
    let clean = clean_intensity(spec, &mask);
    (apply_style(spec, style, index, &clean), mask)
}

/// Generate `count` image/mask pairs. Deterministic in (spec.seed, index);
/// masks are identical across styles for a fixed seed.
pub fn generate_phantom(
    spec: &PhantomSpec,
    style: &DomainStyle,
    count: usize,
) -> Result<Vec<(FloatImage, LabelMask)>> {
    spec.validate()?;
    style.validate()?;
    if count == 0 {
        return Err(Error::Config("phantom count must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(count);
    for index in 0..count as u64 {
        let (styled, mask) = render(spec, style, index);
        let present = mask.present_classes();
        if present.iter().any(|p| !p) {
            return Err(Error::Data(format!(
                "phantom {index} is missing a class; geometry spec too tight"
            )));
        }
        let pixels = styled.iter().map(|&v| (2.0 * v - 1.0) as f32).collect();
        out.push((FloatImage::new(spec.height, spec.width, pixels)?, mask));
    }
    Ok(out)
}

/// Mean absolute intensity difference between the two styled renderings of
/// phantom 0, computed in [0, 1] space. Zero exactly when the styles are
/// equal.
pub fn ground_truth_domain_gap(
    style_a: &DomainStyle,
    style_b: &DomainStyle,
    spec: &PhantomSpec,
) -> Result<f64> {
    style_a.validate()?;
    style_b.validate()?;
    let bounds = boundaries(spec, 0);
    let mask = rasterize_mask(spec, &bounds);
    let clean = clean_intensity(spec, &mask);
    let ia = apply_style(spec, style_a, 0, &clean);
    let ib = apply_style(spec, style_b, 0, &clean);
    let n = ia.len() as f64;
    Ok(ia.iter().zip(&ib).map(|(a, b)| (a - b).abs()).sum::<f64>() / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_height_geometry_is_rejected() {
        let spec = PhantomSpec { height: 64, waviness_amplitude: 12.0, ..Default::default() };
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn wrong_layer_count_is_rejected() {
        let spec = PhantomSpec { n_layers: 5, ..Default::default() };
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn too_small_image_is_rejected() {
        let spec = PhantomSpec { height: 32, width: 32, ..Default::default() };
        assert!(generate_phantom(&spec, &DomainStyle::domain_a_default(), 1).is_err());
    }

    #[test]
    fn boundaries_are_ordered_with_min_gap() {
        let spec = PhantomSpec::default();
        for index in 0..4 {
            let b = boundaries(&spec, index);
            for x in 0..spec.width {
                for k in 1..b.len() {
                    assert!(b[k][x] >= b[k - 1][x] + MIN_BAND_PX - 1e-9);
                }
            }
        }
    }

    #[test]
    fn column_runs_are_contiguous() {
        let spec = PhantomSpec::default();
        let pairs = generate_phantom(&spec, &DomainStyle::domain_a_default(), 2).unwrap();
        for (_, mask) in &pairs {
            for x in 0..mask.width {
                let col: Vec<u8> = (0..mask.height).map(|y| mask.get(y, x)).collect();
                // Walking down a column the class id never decreases except
                // for the final return to background.
                let mut seen_back_to_bg = false;
                for w in col.windows(2) {
                    if w[1] < w[0] {
                        assert_eq!(w[1], 0, "non-contiguous run in column {x}");
                        assert!(!seen_back_to_bg, "background re-entered twice");
                        seen_back_to_bg = true;
                    }
                }
            }
        }
    }
}
