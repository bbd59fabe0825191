//! Seeded scale jitter, random crop and mirroring.
//!
//! Training applies `scale_jitter → random_crop → horizontal mirror →
//! vertical mirror`. With augmentation disabled (evaluation), images are
//! only center-cropped.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{resize_bilinear, Sample};
use crate::image::Image;
use crate::rng::Stream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MirrorAxis {
    /// Reverses column order.
    Horizontal,
    /// Reverses row order.
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    /// Output `(height, width)`.
    pub crop_size: (usize, usize),
    /// Shorter side the scale multipliers apply to.
    pub target_short_side: usize,
    pub scale_range: (f64, f64),
    pub mirror_h_prob: f64,
    pub mirror_v_prob: f64,
    pub enabled: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            crop_size: (224, 224),
            target_short_side: 256,
            scale_range: (1.0, 1.25),
            mirror_h_prob: 0.5,
            mirror_v_prob: 0.5,
            enabled: true,
        }
    }
}

impl AugmentConfig {
    /// Crops of `size × size` from images whose shorter side is scaled to
    /// `size` times a factor in `[1, 1.25]`.
    pub fn square(size: usize) -> Self {
        AugmentConfig {
            crop_size: (size, size),
            target_short_side: size,
            ..AugmentConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.scale_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!("scale range ({lo}, {hi})")));
        }
        for p in [self.mirror_h_prob, self.mirror_v_prob] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("mirror probability {p}")));
            }
        }
        let (ch, cw) = self.crop_size;
        if ch == 0 || cw == 0 || self.target_short_side == 0 {
            return Err(Error::InvalidConfig("zero crop or target size".into()));
        }
        let min_short = scaled_side(lo, self.target_short_side);
        if self.enabled && (ch > min_short || cw > min_short) {
            return Err(Error::InvalidConfig(format!(
                "crop {:?} exceeds the smallest scaled side {min_short}",
                self.crop_size
            )));
        }
        Ok(())
    }
}

fn scaled_side(scale: f64, target: usize) -> usize {
    ((scale * target as f64).round() as usize).max(1)
}

pub fn mirror(image: &Image, axis: MirrorAxis) -> Image {
    let mut out = Image::zeros(image.channels, image.height, image.width);
    for c in 0..image.channels {
        for y in 0..image.height {
            for x in 0..image.width {
                let (sy, sx) = match axis {
                    MirrorAxis::Horizontal => (y, image.width - 1 - x),
                    MirrorAxis::Vertical => (image.height - 1 - y, x),
                };
                *out.at_mut(c, y, x) = image.at(c, sy, sx);
            }
        }
    }
    out
}

/// Draws `s ~ U[lo, hi]` and resizes so the shorter side becomes
/// `round(s * target_short_side)`, keeping the aspect ratio.
pub fn scale_jitter(image: &Image, rng: &mut Stream, range: (f64, f64), target_short_side: usize) -> Image {
    let u: f64 = rng.random();
    let s = range.0 + (range.1 - range.0) * u;
    let short = scaled_side(s, target_short_side);
    let (h, w) = (image.height, image.width);
    let out = if h <= w {
        (short, ((w as f64 * short as f64 / h as f64).round() as usize).max(1))
    } else {
        (((h as f64 * short as f64 / w as f64).round() as usize).max(1), short)
    };
    resize_bilinear(image, out)
}

/// Contiguous `h × w` window at row `top`, column `left`.
pub fn crop(image: &Image, top: usize, left: usize, out: (usize, usize)) -> Result<Image> {
    let (h, w) = out;
    if top + h > image.height || left + w > image.width {
        return Err(Error::CropTooLarge {
            crop: out,
            image: (image.height, image.width),
        });
    }
    let mut data = Vec::with_capacity(image.channels * h * w);
    for c in 0..image.channels {
        for y in top..top + h {
            let start = (c * image.height + y) * image.width + left;
            data.extend_from_slice(&image.data[start..start + w]);
        }
    }
    Image::new(image.channels, h, w, data)
}

pub fn random_crop(image: &Image, rng: &mut Stream, out: (usize, usize)) -> Result<Image> {
    let (h, w) = out;
    if h > image.height || w > image.width || h == 0 || w == 0 {
        return Err(Error::CropTooLarge {
            crop: out,
            image: (image.height, image.width),
        });
    }
    let top = rng.random_range(0..=image.height - h);
    let left = rng.random_range(0..=image.width - w);
    crop(image, top, left, out)
}

pub fn center_crop(image: &Image, out: (usize, usize)) -> Result<Image> {
    let (h, w) = out;
    if h > image.height || w > image.width {
        return Err(Error::CropTooLarge {
            crop: out,
            image: (image.height, image.width),
        });
    }
    crop(image, (image.height - h) / 2, (image.width - w) / 2, out)
}

pub fn augment_image(image: &Image, cfg: &AugmentConfig, rng: &mut Stream) -> Result<Image> {
    if !cfg.enabled {
        return center_crop(image, cfg.crop_size);
    }
    let scaled = scale_jitter(image, rng, cfg.scale_range, cfg.target_short_side);
    let mut out = random_crop(&scaled, rng, cfg.crop_size)?;
    let flip_h = rng.random::<f64>() < cfg.mirror_h_prob;
    let flip_v = rng.random::<f64>() < cfg.mirror_v_prob;
    if flip_h {
        out = mirror(&out, MirrorAxis::Horizontal);
    }
    if flip_v {
        out = mirror(&out, MirrorAxis::Vertical);
    }
    Ok(out)
}

/// Deterministic evaluation view: resize so the shorter side equals
/// `target_short_side`, then take the center crop.
pub fn eval_view(image: &Image, cfg: &AugmentConfig) -> Result<Image> {
    let short = image.height.min(image.width);
    let resized = if short == cfg.target_short_side {
        image.clone()
    } else {
        let t = cfg.target_short_side as f64;
        let (h, w) = (image.height as f64, image.width as f64);
        let out = if image.height <= image.width {
            (cfg.target_short_side, ((w * t / h).round() as usize).max(1))
        } else {
            (((h * t / w).round() as usize).max(1), cfg.target_short_side)
        };
        resize_bilinear(image, out)
    };
    center_crop(&resized, cfg.crop_size)
}

/// Augments the image of a sample; label and provenance are carried over.
pub fn augment_sample(s: &Sample, cfg: &AugmentConfig, rng: &mut Stream) -> Result<Sample> {
    cfg.validate()?;
    Ok(Sample {
        image: augment_image(&s.image, cfg, rng)?,
        label: s.label,
        source: s.source.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn labeled(c: usize, h: usize, w: usize) -> Image {
        Image::new(c, h, w, (0..c * h * w).map(|i| i as f32).collect()).unwrap()
    }

    #[test]
    fn mirror_examples() {
        let img = Image::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(
            mirror(&img, MirrorAxis::Horizontal).rows(),
            vec![vec![2.0, 1.0], vec![4.0, 3.0]]
        );
        assert_eq!(
            mirror(&img, MirrorAxis::Vertical).rows(),
            vec![vec![3.0, 4.0], vec![1.0, 2.0]]
        );
    }

    #[test]
    fn degenerate_scale_hits_target() {
        let img = labeled(1, 10, 20);
        let out = scale_jitter(&img, &mut stream(0, &[]), (1.0, 1.0), 16);
        assert_eq!((out.height, out.width), (16, 32));
    }

    #[test]
    fn scale_jitter_is_seeded() {
        let img = labeled(3, 12, 9);
        let a = scale_jitter(&img, &mut stream(11, &[]), (1.0, 1.25), 16);
        let b = scale_jitter(&img, &mut stream(11, &[]), (1.0, 1.25), 16);
        assert_eq!(a, b);
    }

    #[test]
    fn scale_jitter_bounds_over_draws() {
        let img = labeled(1, 8, 8);
        let mut rng = stream(3, &[]);
        let target = 64;
        let hi = (1.25f64 * target as f64).round() as usize;
        for _ in 0..100 {
            let out = scale_jitter(&img, &mut rng, (1.0, 1.25), target);
            let short = out.height.min(out.width);
            assert!((target..=hi).contains(&short), "{short}");
        }
    }

    #[test]
    fn full_crop_is_identity() {
        let img = labeled(2, 4, 5);
        assert_eq!(random_crop(&img, &mut stream(1, &[]), (4, 5)).unwrap(), img);
    }

    #[test]
    fn crop_offsets_enumerated() {
        let img = labeled(1, 4, 4);
        let seed = (0..1000u64)
            .find(|&s| {
                let mut r = stream(s, &[]);
                r.random_range(0..=2usize) == 1 && r.random_range(0..=2usize) == 1
            })
            .expect("some seed gives offset (1,1)");
        let out = random_crop(&img, &mut stream(seed, &[]), (2, 2)).unwrap();
        assert_eq!(out.rows(), vec![vec![5.0, 6.0], vec![9.0, 10.0]]);
        // every outcome is one of the 9 sub-blocks
        let blocks: Vec<Image> = (0..3)
            .flat_map(|t| (0..3).map(move |l| (t, l)))
            .map(|(t, l)| crop(&img, t, l, (2, 2)).unwrap())
            .collect();
        for s in 0..50 {
            let out = random_crop(&img, &mut stream(s, &[]), (2, 2)).unwrap();
            assert!(blocks.contains(&out));
        }
    }

    #[test]
    fn crop_too_large() {
        let img = labeled(1, 4, 4);
        assert!(matches!(
            random_crop(&img, &mut stream(0, &[]), (5, 4)),
            Err(Error::CropTooLarge { .. })
        ));
    }

    fn sample(img: Image) -> Sample {
        Sample {
            image: img,
            label: 3,
            source: None,
        }
    }

    #[test]
    fn disabled_is_center_crop() {
        let cfg = AugmentConfig {
            enabled: false,
            crop_size: (2, 2),
            ..AugmentConfig::square(2)
        };
        let s = sample(labeled(1, 4, 4));
        let a = augment_sample(&s, &cfg, &mut stream(1, &[])).unwrap();
        let b = augment_sample(&s, &cfg, &mut stream(2, &[])).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.image.rows(), vec![vec![5.0, 6.0], vec![9.0, 10.0]]);
    }

    #[test]
    fn degenerate_pipeline_is_identity() {
        let cfg = AugmentConfig {
            crop_size: (6, 6),
            target_short_side: 6,
            scale_range: (1.0, 1.0),
            mirror_h_prob: 0.0,
            mirror_v_prob: 0.0,
            enabled: true,
        };
        let s = sample(labeled(3, 6, 6));
        assert_eq!(augment_sample(&s, &cfg, &mut stream(4, &[])).unwrap(), s);
    }

    #[test]
    fn seeded_output_is_identical() {
        let cfg = AugmentConfig::square(8);
        let s = sample(labeled(3, 10, 12));
        let a = augment_sample(&s, &cfg, &mut stream(77, &[5])).unwrap();
        let b = augment_sample(&s, &cfg, &mut stream(77, &[5])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = AugmentConfig::square(8);
        cfg.mirror_h_prob = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = AugmentConfig::square(8);
        cfg.scale_range = (0.5, 1.0);
        assert!(cfg.validate().is_err());
        assert!(AugmentConfig::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn augment_invariants(h in 6usize..14, w in 6usize..14, seed in any::<u64>()) {
            let cfg = AugmentConfig::square(6);
            let img = Image::new(3, h, w, (0..3 * h * w).map(|i| ((i * 37) % 101) as f32 / 100.0).collect()).unwrap();
            let (lo, hi) = img.min_max();
            let s = sample(img);
            let out = augment_sample(&s, &cfg, &mut stream(seed, &[])).unwrap();
            prop_assert_eq!((out.image.channels, out.image.height, out.image.width), (3, 6, 6));
            prop_assert_eq!(out.label, 3);
            prop_assert!(out.image.data.iter().all(|&v| v >= lo && v <= hi));
        }

        #[test]
        fn mirror_is_involution(h in 1usize..6, w in 1usize..6) {
            let img = labeled(2, h, w);
            for axis in [MirrorAxis::Horizontal, MirrorAxis::Vertical] {
                prop_assert_eq!(mirror(&mirror(&img, axis), axis), img.clone());
            }
        }
    }
}
