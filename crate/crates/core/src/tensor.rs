//! Feature maps, kernel sets, output geometry, and the binary tensor file
//! format.
//!
//! Layout is channel-major then row-major throughout, so one channel of a
//! feature map is a contiguous row-major plane that can be streamed directly
//! into the window buffer. Indexing is 0-based everywhere in this crate.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fixedpoint::Fixed16;

/// 3-D input/output tensor of shape `[channels, height, width]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<Fixed16>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<Fixed16>) -> Result<Self> {
        let len = checked_volume(&[channels, height, width])?;
        if data.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                actual: data.len(),
            });
        }
        Ok(FeatureMap {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        let len = checked_volume(&[channels, height, width])?;
        Ok(FeatureMap {
            channels,
            height,
            width,
            data: vec![Fixed16::ZERO; len],
        })
    }

    /// Builds a map by evaluating `f(channel, row, col)` for every cell.
    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> Fixed16,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(checked_volume(&[channels, height, width])?);
        for n in 0..channels {
            for i in 0..height {
                for j in 0..width {
                    data.push(f(n, i, j));
                }
            }
        }
        FeatureMap::new(channels, height, width, data)
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn data(&self) -> &[Fixed16] {
        &self.data
    }

    #[inline]
    pub fn get(&self, n: usize, i: usize, j: usize) -> Fixed16 {
        debug_assert!(n < self.channels && i < self.height && j < self.width);
        self.data[(n * self.height + i) * self.width + j]
    }

    /// One channel as a contiguous row-major `height * width` plane.
    #[inline]
    pub fn plane(&self, n: usize) -> &[Fixed16] {
        let size = self.height * self.width;
        &self.data[n * size..(n + 1) * size]
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut bytes = Vec::with_capacity(17 + self.data.len() * 2);
        bytes.extend_from_slice(MAGIC);
        bytes.push(3u8);
        for dim in [self.channels, self.height, self.width] {
            bytes.extend_from_slice(&dim_to_u32(dim)?.to_le_bytes());
        }
        for v in &self.data {
            bytes.extend_from_slice(&v.raw().to_le_bytes());
        }
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        match Tensor::load(path.as_ref())? {
            Tensor::FeatureMap(fm) => Ok(fm),
            Tensor::KernelSet(_) => Err(Error::ShapeMismatch {
                what: format!("{}: expected rank-3 tensor", path.as_ref().display()),
            }),
        }
    }
}

/// Weights of one convolutional layer: `kernels` filters of shape
/// `[channels, kernel_h, kernel_w]` plus one bias word per filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelSet {
    kernels: usize,
    channels: usize,
    kernel_h: usize,
    kernel_w: usize,
    weights: Vec<Fixed16>,
    bias: Vec<Fixed16>,
}

impl KernelSet {
    pub fn new(
        kernels: usize,
        channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        weights: Vec<Fixed16>,
        bias: Vec<Fixed16>,
    ) -> Result<Self> {
        let len = checked_volume(&[kernels, channels, kernel_h, kernel_w])?;
        if weights.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                actual: weights.len(),
            });
        }
        if bias.len() != kernels {
            return Err(Error::LengthMismatch {
                expected: kernels,
                actual: bias.len(),
            });
        }
        Ok(KernelSet {
            kernels,
            channels,
            kernel_h,
            kernel_w,
            weights,
            bias,
        })
    }

    /// Builds a set from `weight(m, n, i, j)` and `bias(m)` generators.
    pub fn from_fn(
        kernels: usize,
        channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        mut weight: impl FnMut(usize, usize, usize, usize) -> Fixed16,
        mut bias: impl FnMut(usize) -> Fixed16,
    ) -> Result<Self> {
        let mut weights =
            Vec::with_capacity(checked_volume(&[kernels, channels, kernel_h, kernel_w])?);
        for m in 0..kernels {
            for n in 0..channels {
                for i in 0..kernel_h {
                    for j in 0..kernel_w {
                        weights.push(weight(m, n, i, j));
                    }
                }
            }
        }
        let bias = (0..kernels).map(&mut bias).collect();
        KernelSet::new(kernels, channels, kernel_h, kernel_w, weights, bias)
    }

    #[inline]
    pub fn kernels(&self) -> usize {
        self.kernels
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn kernel_h(&self) -> usize {
        self.kernel_h
    }

    #[inline]
    pub fn kernel_w(&self) -> usize {
        self.kernel_w
    }

    #[inline]
    pub fn weight(&self, m: usize, n: usize, i: usize, j: usize) -> Fixed16 {
        debug_assert!(m < self.kernels && n < self.channels);
        debug_assert!(i < self.kernel_h && j < self.kernel_w);
        self.weights[((m * self.channels + n) * self.kernel_h + i) * self.kernel_w + j]
    }

    /// Channel `n` of kernel `m` as a contiguous `kernel_h * kernel_w` plane.
    #[inline]
    pub fn channel_plane(&self, m: usize, n: usize) -> &[Fixed16] {
        let size = self.kernel_h * self.kernel_w;
        let start = (m * self.channels + n) * size;
        &self.weights[start..start + size]
    }

    #[inline]
    pub fn bias(&self, m: usize) -> Fixed16 {
        self.bias[m]
    }

    #[inline]
    pub fn biases(&self) -> &[Fixed16] {
        &self.bias
    }

    /// Weight count plus bias count.
    pub fn parameter_count(&self) -> u64 {
        self.weights.len() as u64 + self.bias.len() as u64
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut bytes = Vec::with_capacity(21 + (self.weights.len() + self.bias.len()) * 2);
        bytes.extend_from_slice(MAGIC);
        bytes.push(4u8);
        for dim in [self.kernels, self.channels, self.kernel_h, self.kernel_w] {
            bytes.extend_from_slice(&dim_to_u32(dim)?.to_le_bytes());
        }
        bytes.extend_from_slice(&dim_to_u32(self.bias.len())?.to_le_bytes());
        for v in &self.weights {
            bytes.extend_from_slice(&v.raw().to_le_bytes());
        }
        for v in &self.bias {
            bytes.extend_from_slice(&v.raw().to_le_bytes());
        }
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        match Tensor::load(path.as_ref())? {
            Tensor::KernelSet(ks) => Ok(ks),
            Tensor::FeatureMap(_) => Err(Error::ShapeMismatch {
                what: format!("{}: expected rank-4 tensor", path.as_ref().display()),
            }),
        }
    }
}

/// Either tensor kind, as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tensor {
    FeatureMap(FeatureMap),
    KernelSet(KernelSet),
}

const MAGIC: &[u8; 4] = b"CT16";

impl Tensor {
    /// Loads a `.ct16` file, dispatching on the rank byte.
    pub fn load(path: impl AsRef<Path>) -> Result<Tensor> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)?;
        let mut cur = Cursor {
            bytes: &bytes,
            pos: 0,
            path,
        };
        let magic = cur.take(4)?;
        if magic != MAGIC {
            return Err(Error::BadMagic { path: path.into() });
        }
        let rank = cur.take(1)?[0];
        match rank {
            3 => {
                let channels = cur.read_dim("channels")?;
                let height = cur.read_dim("height")?;
                let width = cur.read_dim("width")?;
                let data = cur.read_payload(checked_volume(&[channels, height, width])?)?;
                cur.expect_end()?;
                Ok(Tensor::FeatureMap(FeatureMap::new(
                    channels, height, width, data,
                )?))
            }
            4 => {
                let kernels = cur.read_dim("kernels")?;
                let channels = cur.read_dim("channels")?;
                let kernel_h = cur.read_dim("kernel height")?;
                let kernel_w = cur.read_dim("kernel width")?;
                let bias_len = cur.read_dim("bias length")?;
                if bias_len != kernels {
                    return Err(Error::Dimension {
                        what: format!(
                            "bias length {} does not match kernel count {}",
                            bias_len, kernels
                        ),
                    });
                }
                let weights =
                    cur.read_payload(checked_volume(&[kernels, channels, kernel_h, kernel_w])?)?;
                let bias = cur.read_payload(kernels)?;
                cur.expect_end()?;
                Ok(Tensor::KernelSet(KernelSet::new(
                    kernels, channels, kernel_h, kernel_w, weights, bias,
                )?))
            }
            other => Err(Error::BadRank {
                path: path.into(),
                rank: other,
            }),
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                path: self.path.into(),
                needed: self.pos + n,
                got: self.bytes.len(),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn read_dim(&mut self, name: &str) -> Result<usize> {
        let raw = self.take(4)?;
        let v = u32::from_le_bytes(raw.try_into().unwrap()) as usize;
        if v == 0 {
            return Err(Error::Dimension {
                what: format!("{} must be at least 1", name),
            });
        }
        Ok(v)
    }

    fn read_payload(&mut self, count: usize) -> Result<Vec<Fixed16>> {
        let need = count.checked_mul(2).ok_or_else(|| Error::Dimension {
            what: "payload size overflows".into(),
        })?;
        let raw = self.take(need)?;
        Ok(raw
            .chunks_exact(2)
            .map(|c| Fixed16::from_raw(i16::from_le_bytes([c[0], c[1]])))
            .collect())
    }

    fn expect_end(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::TrailingData {
                path: self.path.into(),
                extra: self.bytes.len() - self.pos,
            });
        }
        Ok(())
    }
}

fn dim_to_u32(dim: usize) -> Result<u32> {
    u32::try_from(dim).map_err(|_| Error::Dimension {
        what: format!("dimension {} exceeds the file format limit", dim),
    })
}

fn checked_volume(dims: &[usize]) -> Result<usize> {
    let mut vol = 1usize;
    for &d in dims {
        if d == 0 {
            return Err(Error::Dimension {
                what: "dimensions must be at least 1".into(),
            });
        }
        vol = vol.checked_mul(d).ok_or_else(|| Error::Dimension {
            what: "tensor volume overflows".into(),
        })?;
    }
    Ok(vol)
}

/// Output geometry of one "valid" convolution (no padding):
/// `out = floor((in - kernel) / stride) + 1` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeometry {
    pub stride_h: usize,
    pub stride_w: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    pub fn new(
        h: usize,
        w: usize,
        kernel_h: usize,
        kernel_w: usize,
        stride_h: usize,
        stride_w: usize,
    ) -> Result<Self> {
        let (out_h, out_w) = output_dims(h, w, kernel_h, kernel_w, stride_h, stride_w)?;
        Ok(ConvGeometry {
            stride_h,
            stride_w,
            out_h,
            out_w,
        })
    }

    /// Number of convolution windows the layer evaluates.
    #[inline]
    pub fn window_count(&self) -> u64 {
        self.out_h as u64 * self.out_w as u64
    }
}

/// Output dimensions of a valid convolution.
pub fn output_dims(
    h: usize,
    w: usize,
    kernel_h: usize,
    kernel_w: usize,
    stride_h: usize,
    stride_w: usize,
) -> Result<(usize, usize)> {
    if stride_h == 0 || stride_w == 0 {
        return Err(Error::ZeroStride {
            hs: stride_h,
            ws: stride_w,
        });
    }
    if kernel_h == 0 || kernel_w == 0 {
        return Err(Error::Dimension {
            what: "kernel dimensions must be at least 1".into(),
        });
    }
    if kernel_h > h || kernel_w > w {
        return Err(Error::KernelTooLarge {
            h,
            w,
            kh: kernel_h,
            kw: kernel_w,
        });
    }
    Ok(((h - kernel_h) / stride_h + 1, (w - kernel_w) / stride_w + 1))
}
