//! Raw planar YCbCr sequences.
//!
//! A frame is stored as the full Y plane followed by the Cb and Cr planes,
//! row-major, with no headers or padding. Samples of 8-bit sequences take one
//! byte; deeper sequences use 16-bit little-endian words with the sample in the
//! low bits.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::block::Channel;
use crate::error::{Error, Result};

pub const SUPPORTED_BIT_DEPTHS: [u8; 4] = [8, 10, 12, 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChromaFormat {
    #[serde(rename = "420")]
    C420,
    #[serde(rename = "422")]
    C422,
    #[serde(rename = "444")]
    C444,
}

impl ChromaFormat {
    /// Horizontal and vertical luma-to-chroma subsampling factors.
    pub fn subsampling(self) -> (usize, usize) {
        match self {
            ChromaFormat::C420 => (2, 2),
            ChromaFormat::C422 => (2, 1),
            ChromaFormat::C444 => (1, 1),
        }
    }
}

impl fmt::Display for ChromaFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChromaFormat::C420 => "420",
            ChromaFormat::C422 => "422",
            ChromaFormat::C444 => "444",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ChromaFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "420" | "4:2:0" => Ok(ChromaFormat::C420),
            "422" | "4:2:2" => Ok(ChromaFormat::C422),
            "444" | "4:4:4" => Ok(ChromaFormat::C444),
            other => Err(Error::Config(format!("unknown chroma format {other:?}"))),
        }
    }
}

/// Geometry and sample format of a raw sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoSpec {
    pub width: usize,
    pub height: usize,
    pub bit_depth: u8,
    pub chroma_format: ChromaFormat,
    pub frame_count: usize,
}

impl VideoSpec {
    pub fn new(
        width: usize,
        height: usize,
        bit_depth: u8,
        chroma_format: ChromaFormat,
        frame_count: usize,
    ) -> Result<Self> {
        let spec = VideoSpec {
            width,
            height,
            bit_depth,
            chroma_format,
            frame_count,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidSpec(format!(
                "dimensions must be positive, got {}x{}",
                self.width, self.height
            )));
        }
        if !SUPPORTED_BIT_DEPTHS.contains(&self.bit_depth) {
            return Err(Error::InvalidSpec(format!(
                "bit depth {} not in {:?}",
                self.bit_depth, SUPPORTED_BIT_DEPTHS
            )));
        }
        if self.frame_count == 0 {
            return Err(Error::InvalidSpec("frame count must be at least 1".into()));
        }
        let (sx, sy) = self.chroma_format.subsampling();
        if !self.width.is_multiple_of(sx) || !self.height.is_multiple_of(sy) {
            return Err(Error::InvalidSpec(format!(
                "{}x{} is not divisible by the {} subsampling factors",
                self.width, self.height, self.chroma_format
            )));
        }
        Ok(())
    }

    pub fn max_sample(&self) -> u32 {
        max_sample(self.bit_depth)
    }

    pub fn chroma_dims(&self) -> (usize, usize) {
        let (sx, sy) = self.chroma_format.subsampling();
        (self.width / sx, self.height / sy)
    }

    pub fn plane_dims(&self, channel: Channel) -> (usize, usize) {
        match channel {
            Channel::Y => (self.width, self.height),
            Channel::Cb | Channel::Cr => self.chroma_dims(),
        }
    }

    /// Bytes per stored sample: 1 for 8-bit data, 2 otherwise.
    pub fn container_bytes(&self) -> usize {
        if self.bit_depth > 8 {
            2
        } else {
            1
        }
    }

    pub fn frame_byte_size(&self) -> u64 {
        let (cw, ch) = self.chroma_dims();
        let samples = self.width * self.height + 2 * cw * ch;
        (samples * self.container_bytes()) as u64
    }

    /// Size in bytes of the whole raw sequence.
    pub fn sequence_byte_size(&self) -> u64 {
        self.frame_byte_size() * self.frame_count as u64
    }
}

pub fn max_sample(bit_depth: u8) -> u32 {
    ((1u64 << bit_depth) - 1) as u32
}

/// One channel of samples, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u16>,
}

impl Plane {
    pub fn new(width: usize, height: usize, samples: Vec<u16>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(Error::DimsMismatch(format!(
                "{} samples for a {}x{} plane",
                samples.len(),
                width,
                height
            )));
        }
        Ok(Plane {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Self {
        Plane {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u16) {
        self.samples[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[u16] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    fn check_range(&self, channel: Channel, bit_depth: u8) -> Result<()> {
        let max = max_sample(bit_depth);
        match self.samples.iter().position(|&s| u32::from(s) > max) {
            Some(pos) => Err(Error::SampleOutOfRange {
                plane: channel,
                x: pos % self.width,
                y: pos / self.width,
                value: u32::from(self.samples[pos]),
                bit_depth,
            }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub y: Plane,
    pub cb: Plane,
    pub cr: Plane,
}

impl Frame {
    /// A frame with every plane set to one value per channel.
    pub fn filled(spec: &VideoSpec, y: u16, cb: u16, cr: u16) -> Self {
        let (cw, ch) = spec.chroma_dims();
        Frame {
            y: Plane::filled(spec.width, spec.height, y),
            cb: Plane::filled(cw, ch, cb),
            cr: Plane::filled(cw, ch, cr),
        }
    }

    pub fn plane(&self, channel: Channel) -> &Plane {
        match channel {
            Channel::Y => &self.y,
            Channel::Cb => &self.cb,
            Channel::Cr => &self.cr,
        }
    }

    pub fn plane_mut(&mut self, channel: Channel) -> &mut Plane {
        match channel {
            Channel::Y => &mut self.y,
            Channel::Cb => &mut self.cb,
            Channel::Cr => &mut self.cr,
        }
    }

    /// Checks plane geometry and sample range against `spec`.
    pub fn validate(&self, spec: &VideoSpec) -> Result<()> {
        for channel in Channel::ALL {
            let plane = self.plane(channel);
            let (w, h) = spec.plane_dims(channel);
            if plane.width != w || plane.height != h || plane.samples.len() != w * h {
                return Err(Error::SpecMismatch(format!(
                    "{channel} plane is {}x{} ({} samples), expected {w}x{h}",
                    plane.width,
                    plane.height,
                    plane.samples.len()
                )));
            }
        }
        for channel in Channel::ALL {
            self.plane(channel).check_range(channel, spec.bit_depth)?;
        }
        Ok(())
    }
}

/// Random-access reader over a raw sequence.
pub struct FrameSource<R> {
    reader: R,
    spec: VideoSpec,
    buf: Vec<u8>,
}

/// Opens `path` and checks that its length is exactly `frame_count` frames.
pub fn open_sequence(path: &Path, spec: VideoSpec) -> Result<FrameSource<BufReader<File>>> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    FrameSource::new(BufReader::new(file), spec)
}

impl<R: Read + Seek> FrameSource<R> {
    pub fn new(mut reader: R, spec: VideoSpec) -> Result<Self> {
        spec.validate()?;
        let actual = reader.seek(SeekFrom::End(0))?;
        let expected = spec.sequence_byte_size();
        if actual != expected {
            return Err(Error::SizeMismatch { expected, actual });
        }
        reader.seek(SeekFrom::Start(0))?;
        Ok(FrameSource {
            reader,
            spec,
            buf: Vec::new(),
        })
    }

    pub fn spec(&self) -> &VideoSpec {
        &self.spec
    }

    pub fn frame_count(&self) -> usize {
        self.spec.frame_count
    }

    pub fn read_frame(&mut self, index: usize) -> Result<Frame> {
        if index >= self.spec.frame_count {
            return Err(Error::IndexOutOfRange {
                index,
                count: self.spec.frame_count,
            });
        }
        let size = self.spec.frame_byte_size();
        self.reader.seek(SeekFrom::Start(index as u64 * size))?;
        self.buf.resize(size as usize, 0);
        self.reader.read_exact(&mut self.buf)?;

        let spec = self.spec;
        let bytes = spec.container_bytes();
        let mut offset = 0;
        let mut next_plane = |channel: Channel| -> Result<Plane> {
            let (w, h) = spec.plane_dims(channel);
            let n = w * h;
            let raw = &self.buf[offset..offset + n * bytes];
            offset += n * bytes;
            let samples = if bytes == 1 {
                raw.iter().map(|&b| u16::from(b)).collect()
            } else {
                raw.chunks_exact(2)
                    .map(|c| u16::from_le_bytes([c[0], c[1]]))
                    .collect()
            };
            let plane = Plane {
                width: w,
                height: h,
                samples,
            };
            plane.check_range(channel, spec.bit_depth)?;
            Ok(plane)
        };
        let y = next_plane(Channel::Y)?;
        let cb = next_plane(Channel::Cb)?;
        let cr = next_plane(Channel::Cr)?;
        Ok(Frame { y, cb, cr })
    }
}

/// Sequential writer producing the layout `FrameSource` reads.
pub struct FrameSink<W: Write> {
    writer: W,
    spec: VideoSpec,
    written: usize,
}

pub fn create_sequence(path: &Path, spec: VideoSpec) -> Result<FrameSink<BufWriter<File>>> {
    spec.validate()?;
    let file = File::create(path)?;
    Ok(FrameSink::new(BufWriter::new(file), spec))
}

impl<W: Write> FrameSink<W> {
    pub fn new(writer: W, spec: VideoSpec) -> Self {
        FrameSink {
            writer,
            spec,
            written: 0,
        }
    }

    pub fn frames_written(&self) -> usize {
        self.written
    }

    pub fn write_frame(&mut self, frame: &Frame) -> Result<()> {
        frame.validate(&self.spec)?;
        let wide = self.spec.container_bytes() == 2;
        let mut out = Vec::with_capacity(self.spec.frame_byte_size() as usize);
        for channel in Channel::ALL {
            let samples = &frame.plane(channel).samples;
            if wide {
                for &s in samples {
                    out.extend_from_slice(&s.to_le_bytes());
                }
            } else {
                out.extend(samples.iter().map(|&s| s as u8));
            }
        }
        self.writer.write_all(&out)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.writer.flush()?;
        Ok(self.writer)
    }
}
