use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_list, KeyValues};
use crate::counting::Frame;
use crate::error::{Error, Result};

/// A disc moving linearly from `(x0, y0)` at `start` with velocity `(vx, vy)`
/// pixels per frame, visible on frames `start..end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlobSpec {
    pub radius: f64,
    pub intensity: u8,
    pub x0: f64,
    pub y0: f64,
    pub vx: f64,
    pub vy: f64,
    pub start: u64,
    /// Exclusive; `None` keeps the blob to the end of the scene.
    pub end: Option<u64>,
}

/// Blob `child` appears at `parent`'s position on `frame`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitEvent {
    pub frame: u64,
    pub parent: usize,
    pub child: usize,
}

/// Blob `from` disappears on `frame` and its area is added to `into`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeEvent {
    pub frame: u64,
    pub into: usize,
    pub from: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlobSceneSpec {
    pub width: usize,
    pub height: usize,
    pub frames: u64,
    pub background: u8,
    /// Uniform integer pixel noise amplitude.
    pub pixel_noise: u8,
    pub seed: u64,
    pub blobs: Vec<BlobSpec>,
    pub splits: Vec<SplitEvent>,
    pub merges: Vec<MergeEvent>,
}

#[derive(Debug, Clone)]
struct Resolved {
    spec: BlobSpec,
    end: u64,
    /// `(frame, added squared radius)` applied from `frame` on.
    growth: Vec<(u64, f64)>,
}

impl Resolved {
    fn visible(&self, t: u64) -> bool {
        t >= self.spec.start && t < self.end
    }

    fn position(&self, t: u64) -> (f64, f64) {
        let dt = t as f64 - self.spec.start as f64;
        (self.spec.x0 + self.spec.vx * dt, self.spec.y0 + self.spec.vy * dt)
    }

    fn radius(&self, t: u64) -> f64 {
        let r2 = self.spec.radius * self.spec.radius
            + self.growth.iter().filter(|(f, _)| *f <= t).map(|(_, a)| a).sum::<f64>();
        r2.sqrt()
    }
}

impl BlobSceneSpec {
    fn resolve(&self) -> Result<Vec<Resolved>> {
        if self.width < crate::counting::MIN_FRAME_SIDE || self.height < crate::counting::MIN_FRAME_SIDE {
            return Err(Error::invalid("scene is smaller than the minimum frame size"));
        }
        if self.frames == 0 {
            return Err(Error::invalid("scene needs at least one frame"));
        }
        let n = self.blobs.len();
        let mut blobs: Vec<Resolved> = self
            .blobs
            .iter()
            .map(|b| Resolved {
                spec: *b,
                end: b.end.unwrap_or(self.frames).min(self.frames),
                growth: Vec::new(),
            })
            .collect();
        for (i, b) in self.blobs.iter().enumerate() {
            if !(b.radius > 0.0 && b.radius.is_finite()) {
                return Err(Error::invalid(format!("blob {i}: radius must be positive")));
            }
        }
        let mut splits = self.splits.clone();
        splits.sort_by_key(|s| s.frame);
        for s in &splits {
            if s.parent >= n || s.child >= n || s.parent == s.child {
                return Err(Error::invalid(format!("split at frame {}: bad blob ids", s.frame)));
            }
            let origin = blobs[s.parent].position(s.frame);
            let child = &mut blobs[s.child];
            child.spec.start = s.frame;
            child.spec.x0 = origin.0;
            child.spec.y0 = origin.1;
        }
        let mut merges = self.merges.clone();
        merges.sort_by_key(|m| m.frame);
        for m in &merges {
            if m.into >= n || m.from >= n || m.into == m.from {
                return Err(Error::invalid(format!("merge at frame {}: bad blob ids", m.frame)));
            }
            let r = blobs[m.from].radius(m.frame);
            blobs[m.from].end = blobs[m.from].end.min(m.frame);
            blobs[m.into].growth.push((m.frame, r * r));
        }
        for (i, b) in blobs.iter().enumerate() {
            for t in b.spec.start..b.end {
                let (x, y) = b.position(t);
                let r = b.radius(t);
                if x - r < 0.0 || y - r < 0.0 || x + r > (self.width - 1) as f64 || y + r > (self.height - 1) as f64 {
                    return Err(Error::invalid(format!(
                        "blob {i} leaves the {}x{} frame at frame {t} (centre {x:.1},{y:.1}, radius {r:.1})",
                        self.width, self.height
                    )));
                }
            }
        }
        Ok(blobs)
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        kv.check_known(&[
            "kind",
            "width",
            "height",
            "frames",
            "background",
            "pixel_noise",
            "seed",
            "blob",
            "split",
            "merge",
        ])?;
        let mut blobs = Vec::new();
        for entry in kv.get_all("blob") {
            let err = |m: String| Error::parse(kv.source(), entry.line, format!("key `blob`: {m}"));
            let v: Vec<f64> = parse_list(&entry.value).map_err(err)?;
            if !(6..=8).contains(&v.len()) {
                return Err(err("expected `radius,intensity,x0,y0,vx,vy[,start[,end]]`".into()));
            }
            if !(0.0..=255.0).contains(&v[1]) {
                return Err(err(format!("intensity {} outside 0..=255", v[1])));
            }
            blobs.push(BlobSpec {
                radius: v[0],
                intensity: v[1] as u8,
                x0: v[2],
                y0: v[3],
                vx: v[4],
                vy: v[5],
                start: v.get(6).map_or(0, |s| *s as u64),
                end: v.get(7).map(|e| *e as u64),
            });
        }
        let triples = |key: &'static str| -> Result<Vec<(u64, usize, usize)>> {
            kv.get_all(key)
                .map(|entry| {
                    let v: Vec<u64> = parse_list(&entry.value)
                        .map_err(|m| Error::parse(kv.source(), entry.line, format!("key `{key}`: {m}")))?;
                    match v.as_slice() {
                        [f, a, b] => Ok((*f, *a as usize, *b as usize)),
                        _ => Err(Error::parse(
                            kv.source(),
                            entry.line,
                            format!("key `{key}`: expected 3 fields"),
                        )),
                    }
                })
                .collect()
        };
        Ok(BlobSceneSpec {
            width: kv.require("width")?,
            height: kv.require("height")?,
            frames: kv.require("frames")?,
            background: kv.parse_value("background")?.unwrap_or(40),
            pixel_noise: kv.parse_value("pixel_noise")?.unwrap_or(0),
            seed: kv.parse_value("seed")?.unwrap_or(0),
            blobs,
            splits: triples("split")?
                .into_iter()
                .map(|(frame, parent, child)| SplitEvent { frame, parent, child })
                .collect(),
            merges: triples("merge")?
                .into_iter()
                .map(|(frame, into, from)| MergeEvent { frame, into, from })
                .collect(),
        })
    }
}

/// The empty scene: uniform background, no noise.
pub fn render_background(spec: &BlobSceneSpec) -> Result<Frame> {
    Frame::filled(spec.width, spec.height, spec.background, 0)
}

/// Renders the scene and returns the frames with the true blob count per frame.
pub fn generate_blob_frames(spec: &BlobSceneSpec) -> Result<(Vec<Frame>, Vec<u32>)> {
    let blobs = spec.resolve()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width, spec.height);
    let bg = f64::from(spec.background);
    let mut frames = Vec::with_capacity(spec.frames as usize);
    let mut counts = Vec::with_capacity(spec.frames as usize);
    let mut canvas = vec![0.0f64; w * h];
    for t in 0..spec.frames {
        canvas.iter_mut().for_each(|p| *p = bg);
        let mut visible = 0;
        for b in blobs.iter().filter(|b| b.visible(t)) {
            visible += 1;
            let (cx, cy) = b.position(t);
            let r = b.radius(t);
            let fg = f64::from(b.spec.intensity);
            let x_lo = (cx - r - 1.0).floor().max(0.0) as usize;
            let x_hi = ((cx + r + 1.0).ceil() as usize).min(w - 1);
            let y_lo = (cy - r - 1.0).floor().max(0.0) as usize;
            let y_hi = ((cy + r + 1.0).ceil() as usize).min(h - 1);
            for y in y_lo..=y_hi {
                for x in x_lo..=x_hi {
                    let d = (x as f64 - cx).hypot(y as f64 - cy);
                    // Coverage ramps over one pixel across the rim.
                    let alpha = (r + 0.5 - d).clamp(0.0, 1.0);
                    if alpha > 0.0 {
                        let p = &mut canvas[y * w + x];
                        *p += alpha * (fg - *p);
                    }
                }
            }
        }
        let noise = i32::from(spec.pixel_noise);
        let pixels = canvas
            .iter()
            .map(|&p| {
                let j = if noise > 0 { rng.gen_range(-noise..=noise) } else { 0 };
                (p.round() as i32 + j).clamp(0, 255) as u8
            })
            .collect();
        frames.push(Frame::new(w, h, pixels, t)?);
        counts.push(visible);
    }
    Ok((frames, counts))
}
