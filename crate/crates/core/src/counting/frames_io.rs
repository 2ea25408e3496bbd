//! Frame ingestion: binary PGM (P5) directories and raw concatenated planes.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use super::{Frame, FrameSource};
use crate::config::KeyValues;
use crate::error::{Error, Result};

fn read_token<R: BufRead>(r: &mut R, path: &Path) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if r.read(&mut byte).map_err(|e| Error::io(path, e))? == 0 {
            break;
        }
        match byte[0] {
            b'#' if token.is_empty() => {
                let mut skip = Vec::new();
                r.read_until(b'\n', &mut skip).map_err(|e| Error::io(path, e))?;
            }
            c if c.is_ascii_whitespace() => {
                if !token.is_empty() {
                    break;
                }
            }
            c => token.push(c),
        }
    }
    if token.is_empty() {
        return Err(Error::parse(path, 1, "truncated PGM header"));
    }
    Ok(String::from_utf8_lossy(&token).into_owned())
}

fn header_number<R: BufRead>(r: &mut R, path: &Path, what: &str) -> Result<usize> {
    let tok = read_token(r, path)?;
    tok.parse()
        .map_err(|_| Error::parse(path, 1, format!("bad PGM {what} `{tok}`")))
}

/// Returns `(width, height)` and leaves `r` at the start of the raster.
fn read_pgm_header<R: BufRead>(r: &mut R, path: &Path) -> Result<(usize, usize)> {
    let magic = read_token(r, path)?;
    if magic != "P5" {
        return Err(Error::parse(
            path,
            1,
            format!("expected binary PGM magic P5, found `{magic}`"),
        ));
    }
    let width = header_number(r, path, "width")?;
    let height = header_number(r, path, "height")?;
    let maxval = header_number(r, path, "maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(Error::parse(
            path,
            1,
            format!("only 8-bit PGM is supported, maxval is {maxval}"),
        ));
    }
    Ok((width, height))
}

pub fn read_pgm(path: &Path, index: u64) -> Result<Frame> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let (width, height) = read_pgm_header(&mut r, path)?;
    let mut pixels = vec![0u8; width * height];
    r.read_exact(&mut pixels).map_err(|e| Error::io(path, e))?;
    Frame::new(width, height, pixels, index).map_err(|e| Error::parse(path, 1, e.to_string()))
}

pub fn write_pgm(path: &Path, frame: &Frame) -> Result<()> {
    let mut out = Vec::with_capacity(frame.pixels.len() + 32);
    write!(out, "P5\n{} {}\n255\n", frame.width, frame.height).expect("write to Vec");
    out.extend_from_slice(&frame.pixels);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// `.pgm` files in `dir` whose stem is a frame index, sorted by index.
pub fn list_frame_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("pgm") {
            continue;
        }
        let Some(index) = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u64>().ok())
        else {
            continue;
        };
        files.push((index, path));
    }
    files.sort();
    Ok(files)
}

/// Lazily loaded PGM directory. Opening checks every header so dimension
/// drift is reported up front with the offending file name.
#[derive(Debug, Clone)]
pub struct FrameDir {
    files: Vec<(u64, PathBuf)>,
    width: usize,
    height: usize,
}

impl FrameDir {
    pub fn open(dir: &Path) -> Result<Self> {
        let files = list_frame_files(dir)?;
        let Some((_, first)) = files.first() else {
            return Err(Error::InsufficientData {
                what: "frames (no frames found)",
                needed: 1,
                got: 0,
            });
        };
        let dims = |p: &Path| -> Result<(usize, usize)> {
            let mut r = BufReader::new(fs::File::open(p).map_err(|e| Error::io(p, e))?);
            read_pgm_header(&mut r, p)
        };
        let (width, height) = dims(first)?;
        for (_, p) in &files[1..] {
            let d = dims(p)?;
            if d != (width, height) {
                return Err(Error::parse(
                    p,
                    1,
                    format!("frame is {}x{}, expected {width}x{height}", d.0, d.1),
                ));
            }
        }
        Ok(FrameDir { files, width, height })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn path(&self, i: usize) -> Option<&Path> {
        self.files.get(i).map(|(_, p)| p.as_path())
    }
}

impl FrameSource for FrameDir {
    fn len(&self) -> usize {
        self.files.len()
    }

    fn frame(&self, index: usize) -> Result<Frame> {
        let (frame_index, path) = self
            .files
            .get(index)
            .ok_or_else(|| Error::invalid(format!("frame {index} out of range")))?;
        read_pgm(path, *frame_index)
    }
}

/// Sidecar header of a raw plane file, stored next to it as `<file>.hdr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawHeader {
    pub width: usize,
    pub height: usize,
    pub count: usize,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}

pub fn read_raw_planes(path: &Path) -> Result<Vec<Frame>> {
    let hdr_path = sidecar(path);
    let kv = KeyValues::load(&hdr_path)?;
    kv.check_known(&["width", "height", "count"])?;
    let header = RawHeader {
        width: kv.require("width")?,
        height: kv.require("height")?,
        count: kv.require("count")?,
    };
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let plane = header.width * header.height;
    if data.len() != plane * header.count {
        return Err(Error::parse(
            path,
            0,
            format!(
                "expected {} bytes for {} planes of {}x{}, found {}",
                plane * header.count,
                header.count,
                header.width,
                header.height,
                data.len()
            ),
        ));
    }
    data.chunks_exact(plane.max(1))
        .take(header.count)
        .enumerate()
        .map(|(i, chunk)| Frame::new(header.width, header.height, chunk.to_vec(), i as u64))
        .collect()
}

pub fn write_raw_planes(path: &Path, frames: &[Frame]) -> Result<()> {
    let first = frames.first().ok_or_else(|| Error::invalid("no frames to write"))?;
    let mut data = Vec::with_capacity(first.pixels.len() * frames.len());
    for f in frames {
        first.check_dims(f)?;
        data.extend_from_slice(&f.pixels);
    }
    fs::write(path, data).map_err(|e| Error::io(path, e))?;
    let hdr = format!(
        "width = {}\nheight = {}\ncount = {}\n",
        first.width,
        first.height,
        frames.len()
    );
    let hdr_path = sidecar(path);
    fs::write(&hdr_path, hdr).map_err(|e| Error::io(&hdr_path, e))
}
