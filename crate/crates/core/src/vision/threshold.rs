use super::image::Image;

/// Foreground (dark) mask from Otsu thresholding of `(R + G + B) / 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct Binarization {
    pub width: usize,
    pub height: usize,
    /// `true` where gray `<= threshold`.
    pub mask: Vec<bool>,
    /// `None` when the image has a single gray level and no split exists.
    pub threshold: Option<u8>,
}

impl Binarization {
    pub fn is_degenerate(&self) -> bool {
        self.threshold.is_none()
    }

    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }
}

/// Otsu threshold of a gray histogram: the `t` maximizing between-class
/// variance of `{g <= t}` against `{g > t}`; the lowest `t` wins ties.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    let total_sum: f64 = hist.iter().enumerate().map(|(g, &c)| g as f64 * c as f64).sum();
    let mut below = 0u64;
    let mut below_sum = 0.0;
    let mut best: Option<(u8, f64)> = None;
    for t in 0..255usize {
        below += hist[t];
        below_sum += t as f64 * hist[t] as f64;
        let above = total - below;
        if below == 0 || above == 0 {
            continue;
        }
        let w0 = below as f64;
        let w1 = above as f64;
        let diff = below_sum / w0 - (total_sum - below_sum) / w1;
        let var = w0 * w1 * diff * diff;
        if best.map_or(true, |(_, b)| var > b * (1.0 + 1e-12)) {
            best = Some((t as u8, var));
        }
    }
    best.map(|(t, _)| t)
}

pub fn gray_histogram(gray: &[u8]) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &g in gray {
        hist[g as usize] += 1;
    }
    hist
}

/// Dark pixels become foreground. A constant image yields an all-background
/// mask with no threshold.
pub fn binarize(img: &Image) -> Binarization {
    let gray = img.gray();
    let threshold = otsu_threshold(&gray_histogram(&gray));
    let mask = match threshold {
        Some(t) => gray.iter().map(|&g| g <= t).collect(),
        None => vec![false; gray.len()],
    };
    Binarization {
        width: img.width(),
        height: img.height(),
        mask,
        threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn perfect_bimodal() {
        let mut img = Image::new(10, 4, [255; 3]).unwrap();
        img.fill_rect(0, 0, 5, 4, [0; 3]);
        let b = binarize(&img);
        assert_eq!(b.threshold, Some(0));
        for y in 0..4 {
            for x in 0..10 {
                assert_eq!(b.is_foreground(x, y), x < 5);
            }
        }
    }

    #[test]
    fn constant_is_degenerate() {
        let b = binarize(&Image::new(3, 3, [80, 80, 80]).unwrap());
        assert!(b.is_degenerate());
        assert!(b.mask.iter().all(|&m| !m));
    }

    /// Between-class variance straight from its definition, per candidate.
    fn brute_force(gray: &[u8]) -> Option<u8> {
        let n = gray.len() as f64;
        let mut best: Option<(u8, f64)> = None;
        for t in 0..=255u16 {
            let (lo, hi): (Vec<f64>, Vec<f64>) = (
                gray.iter().filter(|&&g| g as u16 <= t).map(|&g| g as f64).collect(),
                gray.iter().filter(|&&g| g as u16 > t).map(|&g| g as f64).collect(),
            );
            if lo.is_empty() || hi.is_empty() {
                continue;
            }
            let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
            let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
            let v = (lo.len() as f64 / n) * (hi.len() as f64 / n) * (m0 - m1).powi(2);
            if best.map_or(true, |(_, b)| v > b + 1e-9 * b.abs()) {
                best = Some((t as u8, v));
            }
        }
        best.map(|(t, _)| t)
    }

    #[test]
    fn matches_brute_force_on_random_mixtures() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let lo_mean: f64 = rng.random_range(20.0..100.0);
            let hi_mean: f64 = rng.random_range(150.0..235.0);
            let gray: Vec<u8> = (0..600)
                .map(|_| {
                    let m = if rng.random_bool(0.4) { lo_mean } else { hi_mean };
                    (m + rng.random_range(-20.0..20.0)).clamp(0.0, 255.0) as u8
                })
                .collect();
            assert_eq!(otsu_threshold(&gray_histogram(&gray)), brute_force(&gray));
        }
    }
}
