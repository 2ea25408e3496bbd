//! Blob detector: background difference, blur, threshold, morphology and a
//! connected-component count.

use super::morphology::{dilate, open};
use super::{CounterConfig, Frame};
use crate::error::Result;

/// Separable Gaussian blur of an 8-bit plane with a `2r + 1` tap kernel.
///
/// Sigma follows the usual derivation from the aperture size,
/// `0.3 * (r - 1) + 0.8`. Borders replicate the edge pixel.
pub fn gaussian_blur(plane: &[u8], w: usize, h: usize, radius: usize) -> Vec<u8> {
    let sigma = 0.3 * (radius as f64 - 1.0) + 0.8;
    let mut kernel: Vec<f32> = (0..=2 * radius)
        .map(|i| {
            let d = i as f64 - radius as f64;
            (-(d * d) / (2.0 * sigma * sigma)).exp() as f32
        })
        .collect();
    let sum: f32 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= sum);

    let r = radius as isize;
    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let xx = (x as isize + k as isize - r).clamp(0, w as isize - 1) as usize;
                acc += kv * f32::from(row[xx]);
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let yy = (y as isize + k as isize - r).clamp(0, h as isize - 1) as usize;
                acc += kv * tmp[yy * w + x];
            }
            out[y * w + x] = acc.round().clamp(0.0, 255.0) as u8;
        }
    }
    out
}

/// Foreground mask (0/1) after thresholding and morphology.
pub fn binarize_foreground(frame: &Frame, background: &Frame, config: &CounterConfig) -> Result<Vec<u8>> {
    frame.check_dims(background)?;
    let cfg = &config.bd;
    let (w, h) = (frame.width, frame.height);
    let diff: Vec<u8> = frame
        .pixels
        .iter()
        .zip(&background.pixels)
        .map(|(&a, &b)| a.abs_diff(b))
        .collect();
    let blurred = gaussian_blur(&diff, w, h, cfg.blur_radius);
    let mask: Vec<u8> = blurred.iter().map(|&v| u8::from(v > cfg.threshold)).collect();
    let dilated = dilate(&mask, w, h, cfg.structuring, cfg.morph_radius);
    Ok(open(&dilated, w, h, cfg.structuring, cfg.morph_radius))
}

/// An 8-connected foreground region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Component {
    pub area: usize,
    pub min_x: usize,
    pub min_y: usize,
    pub max_x: usize,
    pub max_y: usize,
}

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        let p = parent[i as usize];
        parent[i as usize] = parent[p as usize];
        i = p;
    }
    i
}

/// Two-pass union-find labelling, components in raster order of their first pixel.
pub fn connected_components(mask: &[u8], w: usize, h: usize) -> Vec<Component> {
    let mut labels = vec![0u32; w * h];
    // parent[0] is the background label.
    let mut parent: Vec<u32> = vec![0];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if mask[i] == 0 {
                continue;
            }
            let mut neigh = [0u32; 4];
            if x > 0 {
                neigh[0] = labels[i - 1];
            }
            if y > 0 {
                neigh[1] = labels[i - w];
                if x > 0 {
                    neigh[2] = labels[i - w - 1];
                }
                if x + 1 < w {
                    neigh[3] = labels[i - w + 1];
                }
            }
            let mut label = 0;
            for &n in neigh.iter().filter(|&&n| n != 0) {
                let root = find(&mut parent, n);
                if label == 0 {
                    label = root;
                } else if root != label {
                    let (lo, hi) = (label.min(root), label.max(root));
                    parent[hi as usize] = lo;
                    label = lo;
                }
            }
            if label == 0 {
                label = parent.len() as u32;
                parent.push(label);
            }
            labels[i] = label;
        }
    }

    let mut slot = vec![usize::MAX; parent.len()];
    let mut comps: Vec<Component> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let l = labels[y * w + x];
            if l == 0 {
                continue;
            }
            let root = find(&mut parent, l) as usize;
            if slot[root] == usize::MAX {
                slot[root] = comps.len();
                comps.push(Component {
                    area: 0,
                    min_x: x,
                    min_y: y,
                    max_x: x,
                    max_y: y,
                });
            }
            let c = &mut comps[slot[root]];
            c.area += 1;
            c.min_x = c.min_x.min(x);
            c.max_x = c.max_x.max(x);
            c.max_y = y;
        }
    }
    comps
}

pub fn count_groups_blob(frame: &Frame, background: &Frame, config: &CounterConfig) -> Result<usize> {
    let mask = binarize_foreground(frame, background, config)?;
    Ok(connected_components(&mask, frame.width, frame.height)
        .iter()
        .filter(|c| c.area >= config.bd.min_area)
        .count())
}
