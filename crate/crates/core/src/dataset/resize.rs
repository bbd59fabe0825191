use crate::image::Image;

/// Source coordinate axis for one output axis: `(i0, i1, frac)` per output
/// index, with half-pixel centers and clamping.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// Bilinear resize of every channel to `out = (height, width)`.
pub fn resize_bilinear(image: &Image, out: (usize, usize)) -> Image {
    let (oh, ow) = out;
    if (oh, ow) == (image.height, image.width) {
        return image.clone();
    }
    let rows = axis_taps(image.height, oh);
    let cols = axis_taps(image.width, ow);
    let mut result = Image::zeros(image.channels, oh, ow);
    for c in 0..image.channels {
        for (y, &(r0, r1, fy)) in rows.iter().enumerate() {
            for (x, &(c0, c1, fx)) in cols.iter().enumerate() {
                let a = image.at(c, r0, c0) as f64;
                let b = image.at(c, r0, c1) as f64;
                let p = image.at(c, r1, c0) as f64;
                let q = image.at(c, r1, c1) as f64;
                let top = a + (b - a) * fx;
                let bottom = p + (q - p) * fx;
                let v = top + (bottom - top) * fy;
                // lerp between bracketing values stays within them up to rounding
                let lo = a.min(b).min(p).min(q);
                let hi = a.max(b).max(p).max(q);
                *result.at_mut(c, y, x) = v.clamp(lo, hi) as f32;
            }
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_size_is_bitwise_equal() {
        let img = Image::new(2, 3, 4, (0..24).map(|i| (i as f32).sin()).collect()).unwrap();
        assert_eq!(resize_bilinear(&img, (3, 4)), img);
    }

    #[test]
    fn two_by_two_to_one() {
        let img = Image::from_rows(&[vec![1.0, 3.0], vec![5.0, 7.0]]).unwrap();
        assert_eq!(resize_bilinear(&img, (1, 1)).data, vec![4.0]);
    }

    #[test]
    fn single_pixel_upsamples_constant() {
        let img = Image::new(1, 1, 1, vec![0.3]).unwrap();
        let r = resize_bilinear(&img, (4, 4));
        assert!(r.data.iter().all(|&v| v == 0.3));
    }

    #[test]
    fn upsample_matches_hand_values() {
        // 1x2 -> 1x4: source coords -0.25, 0.25, 0.75, 1.25 clamp to 0, .25, .75, 1
        let img = Image::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert_eq!(resize_bilinear(&img, (1, 4)).data, vec![0.0, 0.25, 0.75, 1.0]);
    }

    proptest! {
        #[test]
        fn stays_within_input_range(
            h in 1usize..6, w in 1usize..6, oh in 1usize..9, ow in 1usize..9,
            seed in any::<u64>(),
        ) {
            use rand::Rng;
            let mut rng = crate::rng::stream(seed, &[]);
            let img = Image::new(1, h, w, (0..h * w).map(|_| rng.random_range(-3.0f32..3.0)).collect()).unwrap();
            let (lo, hi) = img.min_max();
            let r = resize_bilinear(&img, (oh, ow));
            prop_assert_eq!((r.height, r.width), (oh, ow));
            prop_assert!(r.data.iter().all(|&v| v >= lo && v <= hi));
        }
    }
}
