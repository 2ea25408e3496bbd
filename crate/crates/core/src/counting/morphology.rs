//! Binary morphology on row-major 0/1 masks.
//!
//! Pixels outside the image are ignored, so erosion does not eat into the
//! frame border and dilation does not grow from it.

use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuringElement {
    /// L1 ball; radius 1 is the 3x3 cross.
    Cross,
    /// L-infinity ball; radius 1 is the 3x3 square.
    Square,
}

impl FromStr for StructuringElement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cross" => Ok(StructuringElement::Cross),
            "square" => Ok(StructuringElement::Square),
            other => Err(format!(
                "unknown structuring element `{other}` (expected cross or square)"
            )),
        }
    }
}

impl std::fmt::Display for StructuringElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StructuringElement::Cross => "cross",
            StructuringElement::Square => "square",
        })
    }
}

#[derive(Clone, Copy)]
enum Op {
    Max,
    Min,
}

impl Op {
    #[inline]
    fn apply(self, a: u8, b: u8) -> u8 {
        match self {
            Op::Max => a.max(b),
            Op::Min => a.min(b),
        }
    }
}

fn cross_step(mask: &[u8], w: usize, h: usize, op: Op) -> Vec<u8> {
    let mut out = mask.to_vec();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let mut v = mask[i];
            if x > 0 {
                v = op.apply(v, mask[i - 1]);
            }
            if x + 1 < w {
                v = op.apply(v, mask[i + 1]);
            }
            if y > 0 {
                v = op.apply(v, mask[i - w]);
            }
            if y + 1 < h {
                v = op.apply(v, mask[i + w]);
            }
            out[i] = v;
        }
    }
    out
}

fn square(mask: &[u8], w: usize, h: usize, r: usize, op: Op) -> Vec<u8> {
    let mut rows = mask.to_vec();
    for y in 0..h {
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            rows[y * w + x] = mask[y * w + lo..=y * w + hi]
                .iter()
                .copied()
                .reduce(|a, b| op.apply(a, b))
                .unwrap_or(0);
        }
    }
    let mut out = rows.clone();
    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for x in 0..w {
            out[y * w + x] = (lo..=hi)
                .map(|yy| rows[yy * w + x])
                .reduce(|a, b| op.apply(a, b))
                .unwrap_or(0);
        }
    }
    out
}

fn morph(mask: &[u8], w: usize, h: usize, se: StructuringElement, radius: usize, op: Op) -> Vec<u8> {
    match se {
        // The L1 ball of radius r is the r-fold Minkowski sum of the unit cross.
        StructuringElement::Cross => (0..radius).fold(mask.to_vec(), |m, _| cross_step(&m, w, h, op)),
        StructuringElement::Square => square(mask, w, h, radius, op),
    }
}

pub fn dilate(mask: &[u8], w: usize, h: usize, se: StructuringElement, radius: usize) -> Vec<u8> {
    morph(mask, w, h, se, radius, Op::Max)
}

pub fn erode(mask: &[u8], w: usize, h: usize, se: StructuringElement, radius: usize) -> Vec<u8> {
    morph(mask, w, h, se, radius, Op::Min)
}

/// Erosion followed by dilation: removes specks smaller than the element.
pub fn open(mask: &[u8], w: usize, h: usize, se: StructuringElement, radius: usize) -> Vec<u8> {
    dilate(&erode(mask, w, h, se, radius), w, h, se, radius)
}
