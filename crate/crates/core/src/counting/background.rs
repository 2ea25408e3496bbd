use super::Frame;
use crate::error::{Error, Result};

/// Per-pixel temporal median. For an even count the lower median is taken.
pub fn estimate_background(frames: &[Frame]) -> Result<Frame> {
    let first = frames
        .first()
        .ok_or_else(|| Error::invalid("background estimation needs at least one frame"))?;
    for f in &frames[1..] {
        first.check_dims(f)?;
    }
    let mid = (frames.len() - 1) / 2;
    let mut column = vec![0u8; frames.len()];
    let pixels = (0..first.pixels.len())
        .map(|i| {
            for (slot, f) in column.iter_mut().zip(frames) {
                *slot = f.pixels[i];
            }
            *column.select_nth_unstable(mid).1
        })
        .collect();
    Frame::new(first.width, first.height, pixels, first.index)
}

/// Exponential running-average background for streaming input.
#[derive(Debug, Clone)]
pub struct RunningBackground {
    width: usize,
    height: usize,
    rate: f32,
    model: Vec<f32>,
}

impl RunningBackground {
    pub fn new(first: &Frame, learning_rate: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate <= 1.0) {
            return Err(Error::invalid("learning rate must lie in (0, 1]"));
        }
        Ok(RunningBackground {
            width: first.width,
            height: first.height,
            rate: learning_rate as f32,
            model: first.pixels.iter().map(|&p| f32::from(p)).collect(),
        })
    }

    pub fn update(&mut self, frame: &Frame) -> Result<()> {
        if frame.width != self.width || frame.height != self.height {
            return Err(Error::invalid(format!(
                "frame {} is {}x{}, background is {}x{}",
                frame.index, frame.width, frame.height, self.width, self.height
            )));
        }
        let a = self.rate;
        for (m, &p) in self.model.iter_mut().zip(&frame.pixels) {
            *m += a * (f32::from(p) - *m);
        }
        Ok(())
    }

    pub fn current(&self) -> Frame {
        let pixels = self.model.iter().map(|&m| m.round().clamp(0.0, 255.0) as u8).collect();
        Frame {
            width: self.width,
            height: self.height,
            pixels,
            index: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_single_sequences() {
        let f = Frame::filled(10, 10, 77, 0).unwrap();
        assert_eq!(
            estimate_background(&[f.clone(), f.clone(), f.clone()]).unwrap().pixels,
            f.pixels
        );
        assert_eq!(estimate_background(std::slice::from_ref(&f)).unwrap().pixels, f.pixels);
        assert!(estimate_background(&[]).is_err());
    }

    #[test]
    fn median_removes_transient_blob() {
        let bg = Frame::filled(12, 12, 50, 0).unwrap();
        let mut frames = Vec::new();
        for i in 0..10u64 {
            let mut f = bg.clone();
            f.index = i;
            // The blob covers each pixel in at most 4 of 10 frames.
            if i < 4 {
                for y in 2..6 {
                    for x in 2..6 {
                        f.pixels[y * 12 + x + i as usize] = 220;
                    }
                }
            }
            frames.push(f);
        }
        // Pixelwise oracle: the most frequent value per pixel is the background.
        let est = estimate_background(&frames).unwrap();
        for i in 0..est.pixels.len() {
            let mut values: Vec<u8> = frames.iter().map(|f| f.pixels[i]).collect();
            values.sort_unstable();
            assert_eq!(est.pixels[i], values[(values.len() - 1) / 2]);
        }
        assert_eq!(est.pixels, bg.pixels);
    }

    #[test]
    fn running_average_converges() {
        let a = Frame::filled(8, 8, 0, 0).unwrap();
        let b = Frame::filled(8, 8, 200, 1).unwrap();
        let mut bg = RunningBackground::new(&a, 0.5).unwrap();
        for _ in 0..20 {
            bg.update(&b).unwrap();
        }
        assert!(bg.current().pixels.iter().all(|&p| p == 200));
        assert!(RunningBackground::new(&a, 0.0).is_err());
        assert!(bg.update(&Frame::filled(9, 8, 0, 2).unwrap()).is_err());
    }
}
