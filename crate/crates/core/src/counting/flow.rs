//! Horn-Schunck dense optical flow, coarse to fine.
//!
//! Each pyramid level re-linearizes brightness constancy around the current
//! estimate (warping `next` back onto `prev`) and runs Jacobi sweeps of the
//! Horn-Schunck update with the smoothness term on the total flow. The
//! pyramid is what lets the linearized model follow displacements of a few
//! pixels.

use std::f64::consts::TAU;

use super::{CounterConfig, Frame};
use crate::error::Result;

/// Per-pixel displacement from `prev` to `next`, in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub u: Vec<f32>,
    pub v: Vec<f32>,
    /// Spatial gradient magnitude of the smoothed input, the larger of the
    /// two frames, on intensities scaled to [0, 1]. Empty when unknown.
    pub gradient: Vec<f32>,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        FlowField {
            width,
            height,
            u: vec![0.0; width * height],
            v: vec![0.0; width * height],
            gradient: Vec::new(),
        }
    }

    #[inline]
    pub fn magnitude(&self, i: usize) -> f64 {
        f64::from(self.u[i]).hypot(f64::from(self.v[i]))
    }

    /// Direction in `[0, 2*pi)`, image axes (y down).
    #[inline]
    pub fn angle(&self, i: usize) -> f64 {
        let a = f64::from(self.v[i]).atan2(f64::from(self.u[i]));
        let a = if a < 0.0 { a + TAU } else { a };
        // atan2 of a tiny negative y can round up to exactly TAU.
        if a >= TAU {
            0.0
        } else {
            a
        }
    }

    /// Gradient at `i`; infinite when the field carries no gradient, so any
    /// floor passes.
    #[inline]
    pub fn gradient_at(&self, i: usize) -> f64 {
        self.gradient.get(i).map_or(f64::INFINITY, |&g| f64::from(g))
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.u.len()).map(|i| self.magnitude(i)).fold(0.0, f64::max)
    }
}

#[derive(Clone)]
struct Plane {
    w: usize,
    h: usize,
    data: Vec<f32>,
}

impl Plane {
    fn from_frame(frame: &Frame) -> Self {
        Plane {
            w: frame.width,
            h: frame.height,
            data: frame.pixels.iter().map(|&p| f32::from(p) / 255.0).collect(),
        }
    }

    #[inline]
    fn at(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.w as isize - 1) as usize;
        let y = y.clamp(0, self.h as isize - 1) as usize;
        self.data[y * self.w + x]
    }

    /// Central-difference gradient magnitude per pixel.
    fn gradient_magnitude(&self) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.data.len());
        for y in 0..self.h as isize {
            for x in 0..self.w as isize {
                let gx = 0.5 * (self.at(x + 1, y) - self.at(x - 1, y));
                let gy = 0.5 * (self.at(x, y + 1) - self.at(x, y - 1));
                out.push(gx.hypot(gy));
            }
        }
        out
    }

    fn bilinear(&self, x: f32, y: f32) -> f32 {
        let x = x.clamp(0.0, (self.w - 1) as f32);
        let y = y.clamp(0.0, (self.h - 1) as f32);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.w - 1);
        let y1 = (y0 + 1).min(self.h - 1);
        let fx = x - x0 as f32;
        let fy = y - y0 as f32;
        let top = self.data[y0 * self.w + x0] * (1.0 - fx) + self.data[y0 * self.w + x1] * fx;
        let bottom = self.data[y1 * self.w + x0] * (1.0 - fx) + self.data[y1 * self.w + x1] * fx;
        top * (1.0 - fy) + bottom * fy
    }

    /// Separable binomial [1 4 6 4 1] / 16 smoothing.
    fn smooth(&self) -> Plane {
        const K: [f32; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
        let mut tmp = vec![0.0f32; self.data.len()];
        for y in 0..self.h {
            for x in 0..self.w {
                let mut acc = 0.0;
                for (k, wgt) in K.iter().enumerate() {
                    acc += wgt * self.at(x as isize + k as isize - 2, y as isize);
                }
                tmp[y * self.w + x] = acc;
            }
        }
        let tmp = Plane {
            w: self.w,
            h: self.h,
            data: tmp,
        };
        let mut out = vec![0.0f32; self.data.len()];
        for y in 0..self.h {
            for x in 0..self.w {
                let mut acc = 0.0;
                for (k, wgt) in K.iter().enumerate() {
                    acc += wgt * tmp.at(x as isize, y as isize + k as isize - 2);
                }
                out[y * self.w + x] = acc;
            }
        }
        Plane {
            w: self.w,
            h: self.h,
            data: out,
        }
    }

    fn downsample(&self) -> Plane {
        let s = self.smooth();
        let w = self.w.div_ceil(2);
        let h = self.h.div_ceil(2);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                data.push(s.at(2 * x as isize, 2 * y as isize));
            }
        }
        Plane { w, h, data }
    }
}

/// Levels coarse enough that the smallest side stays at or above 16 pixels.
fn pyramid(plane: Plane, max_levels: usize) -> Vec<Plane> {
    let mut levels = vec![plane];
    while levels.len() < max_levels {
        let last = levels.last().expect("non-empty pyramid");
        if last.w.min(last.h) < 32 {
            break;
        }
        let next = last.downsample();
        levels.push(next);
    }
    levels
}

fn upsample_flow(u: &[f32], cw: usize, ch: usize, w: usize, h: usize) -> Vec<f32> {
    let coarse = Plane {
        w: cw,
        h: ch,
        data: u.to_vec(),
    };
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            out.push(2.0 * coarse.bilinear(x as f32 / 2.0, y as f32 / 2.0));
        }
    }
    out
}

/// Horn-Schunck neighbourhood average: 1/6 for edge neighbours, 1/12 for corners.
#[inline]
fn local_average(f: &[f32], w: usize, h: usize, x: usize, y: usize) -> f32 {
    let xm = x.saturating_sub(1);
    let xp = (x + 1).min(w - 1);
    let ym = y.saturating_sub(1);
    let yp = (y + 1).min(h - 1);
    let edges = f[y * w + xm] + f[y * w + xp] + f[ym * w + x] + f[yp * w + x];
    let corners = f[ym * w + xm] + f[ym * w + xp] + f[yp * w + xm] + f[yp * w + xp];
    edges / 6.0 + corners / 12.0
}

fn refine_level(
    prev: &Plane,
    next: &Plane,
    u: &mut Vec<f32>,
    v: &mut Vec<f32>,
    alpha2: f32,
    iterations: usize,
    warps: usize,
) {
    let (w, h) = (prev.w, prev.h);
    let n = w * h;
    let mut ix = vec![0.0f32; n];
    let mut iy = vec![0.0f32; n];
    let mut it = vec![0.0f32; n];
    let mut warped = vec![0.0f32; n];
    let mut un = vec![0.0f32; n];
    let mut vn = vec![0.0f32; n];

    for _ in 0..warps {
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                warped[i] = next.bilinear(x as f32 + u[i], y as f32 + v[i]);
            }
        }
        let warped_plane = Plane {
            w,
            h,
            data: std::mem::take(&mut warped),
        };
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                let (xi, yi) = (x as isize, y as isize);
                let dx1 = (prev.at(xi + 1, yi) - prev.at(xi - 1, yi)) * 0.5;
                let dx2 = (warped_plane.at(xi + 1, yi) - warped_plane.at(xi - 1, yi)) * 0.5;
                let dy1 = (prev.at(xi, yi + 1) - prev.at(xi, yi - 1)) * 0.5;
                let dy2 = (warped_plane.at(xi, yi + 1) - warped_plane.at(xi, yi - 1)) * 0.5;
                ix[i] = 0.5 * (dx1 + dx2);
                iy[i] = 0.5 * (dy1 + dy2);
                it[i] = warped_plane.data[i] - prev.data[i];
            }
        }
        warped = warped_plane.data;

        let u0 = u.clone();
        let v0 = v.clone();
        for _ in 0..iterations {
            for y in 0..h {
                for x in 0..w {
                    let i = y * w + x;
                    let ub = local_average(u, w, h, x, y);
                    let vb = local_average(v, w, h, x, y);
                    let residual = ix[i] * (ub - u0[i]) + iy[i] * (vb - v0[i]) + it[i];
                    let k = residual / (alpha2 + ix[i] * ix[i] + iy[i] * iy[i]);
                    un[i] = ub - ix[i] * k;
                    vn[i] = vb - iy[i] * k;
                }
            }
            std::mem::swap(u, &mut un);
            std::mem::swap(v, &mut vn);
        }
    }
}

pub fn dense_optical_flow(prev: &Frame, next: &Frame, config: &CounterConfig) -> Result<FlowField> {
    prev.check_dims(next)?;
    let cfg = &config.cof;
    let alpha2 = (cfg.smoothness * cfg.smoothness) as f32;
    let p = pyramid(Plane::from_frame(prev).smooth(), cfg.pyramid_levels);
    let q = pyramid(Plane::from_frame(next).smooth(), cfg.pyramid_levels);

    let coarsest = p.last().expect("non-empty pyramid");
    let mut u = vec![0.0f32; coarsest.w * coarsest.h];
    let mut v = vec![0.0f32; coarsest.w * coarsest.h];
    let mut dims = (coarsest.w, coarsest.h);
    for level in (0..p.len()).rev() {
        let (w, h) = (p[level].w, p[level].h);
        if dims != (w, h) {
            u = upsample_flow(&u, dims.0, dims.1, w, h);
            v = upsample_flow(&v, dims.0, dims.1, w, h);
            dims = (w, h);
        }
        refine_level(&p[level], &q[level], &mut u, &mut v, alpha2, cfg.iterations, cfg.warps);
    }
    let gradient = p[0]
        .gradient_magnitude()
        .into_iter()
        .zip(q[0].gradient_magnitude())
        .map(|(a, b)| a.max(b))
        .collect();
    Ok(FlowField {
        width: prev.width,
        height: prev.height,
        u,
        v,
        gradient,
    })
}
