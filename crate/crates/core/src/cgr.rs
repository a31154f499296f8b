//! Chaos game representation: point trajectories, binary rasters and the
//! per-sample cube of stacked gene rasters.
//!
//! Corners are A = (0,0), C = (0,1), G = (1,0), T = (1,1). The walk starts at
//! the centre (0.5, 0.5), which is not itself emitted. Pixel `(row, col)` of
//! an `R x R` raster covers `col = floor(x R)`, `row = floor((1 - y) R)`, both
//! clamped to `R - 1`, so row 0 is the top edge.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::seq::{GeneSequence, NetworkSample, Nucleotide};

pub const DEFAULT_RESOLUTION: usize = 700;
const CUBE_MAGIC: [u8; 4] = *b"CGRC";

#[derive(Debug, Error)]
pub enum CgrError {
    #[error("resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error("sample '{0}' has no genes")]
    NoGenes(String),
    #[error("gene slice {index} out of range for {count} genes")]
    SliceOutOfRange { index: usize, count: usize },
    #[error("bad cube file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Raster side length in pixels; at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Resolution(usize);

impl Resolution {
    pub fn new(pixels: usize) -> Result<Self, CgrError> {
        if pixels < 2 {
            return Err(CgrError::Resolution(pixels));
        }
        Ok(Resolution(pixels))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution(DEFAULT_RESOLUTION)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgrPoint {
    pub x: f64,
    pub y: f64,
}

impl CgrPoint {
    pub const CENTER: CgrPoint = CgrPoint { x: 0.5, y: 0.5 };
}

pub fn corner(base: Nucleotide) -> CgrPoint {
    match base {
        Nucleotide::A => CgrPoint { x: 0.0, y: 0.0 },
        Nucleotide::C => CgrPoint { x: 0.0, y: 1.0 },
        Nucleotide::G => CgrPoint { x: 1.0, y: 0.0 },
        Nucleotide::T => CgrPoint { x: 1.0, y: 1.0 },
    }
}

/// Lazy midpoint walk over a base slice.
pub fn trajectory_iter(bases: &[Nucleotide]) -> impl Iterator<Item = CgrPoint> + '_ {
    bases.iter().scan(CgrPoint::CENTER, |p, &b| {
        let c = corner(b);
        *p = CgrPoint {
            x: 0.5 * (p.x + c.x),
            y: 0.5 * (p.y + c.y),
        };
        Some(*p)
    })
}

/// One point per base; point `i` is halfway between point `i - 1` and the
/// corner of base `i`.
pub fn cgr_trajectory(seq: &GeneSequence) -> Vec<CgrPoint> {
    trajectory_iter(seq.bases()).collect()
}

/// Square binary raster backed by a bitset, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CgrImage {
    resolution: usize,
    words: Vec<u64>,
}

impl CgrImage {
    pub fn empty(resolution: Resolution) -> Self {
        let r = resolution.get();
        CgrImage {
            resolution: r,
            words: vec![0; (r * r).div_ceil(64)],
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    #[inline]
    pub fn pixel_of(&self, p: CgrPoint) -> (usize, usize) {
        let r = self.resolution as f64;
        let last = self.resolution - 1;
        let col = ((p.x * r).floor() as usize).min(last);
        let row = (((1.0 - p.y) * r).floor() as usize).min(last);
        (row, col)
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize) {
        let idx = row * self.resolution + col;
        self.words[idx / 64] |= 1 << (idx % 64);
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        let idx = row * self.resolution + col;
        self.words[idx / 64] >> (idx % 64) & 1 == 1
    }

    pub fn count_set(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Set pixels as `(row, col)` in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let r = self.resolution;
        self.words.iter().enumerate().flat_map(move |(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let idx = wi * 64 + b;
                Some((idx / r, idx % r))
            })
        })
    }

    /// Row-major bytes, 1 for set pixels and 0 otherwise.
    pub fn to_bytes(&self) -> Vec<u8> {
        let r = self.resolution;
        let mut out = vec![0u8; r * r];
        for (row, col) in self.iter_set() {
            out[row * r + col] = 1;
        }
        out
    }

    fn from_bytes(resolution: usize, bytes: &[u8]) -> Result<Self, CgrError> {
        let mut img = CgrImage::empty(Resolution::new(resolution)?);
        for (idx, &b) in bytes.iter().enumerate() {
            match b {
                0 => {}
                1 => img.set(idx / resolution, idx % resolution),
                other => {
                    return Err(CgrError::Format(format!(
                        "pixel byte {other} is not 0 or 1"
                    )))
                }
            }
        }
        Ok(img)
    }

    /// Binary portable graymap: set pixels black on white.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> io::Result<()> {
        let r = self.resolution;
        write!(w, "P5\n{r} {r}\n255\n")?;
        let bytes: Vec<u8> = self
            .to_bytes()
            .into_iter()
            .map(|b| if b == 1 { 0 } else { 255 })
            .collect();
        w.write_all(&bytes)
    }
}

/// Marks every pixel hit by a point. Occupancy is binary.
pub fn rasterize(points: &[CgrPoint], resolution: Resolution) -> CgrImage {
    rasterize_iter(points.iter().copied(), resolution)
}

pub fn rasterize_iter(
    points: impl IntoIterator<Item = CgrPoint>,
    resolution: Resolution,
) -> CgrImage {
    let mut img = CgrImage::empty(resolution);
    for p in points {
        let (row, col) = img.pixel_of(p);
        img.set(row, col);
    }
    img
}

/// Raster of a sequence without materializing its trajectory.
pub fn render(seq: &GeneSequence, resolution: Resolution) -> CgrImage {
    rasterize_iter(trajectory_iter(seq.bases()), resolution)
}

/// `R x R x n_genes` binary cube; slice `k` is gene `k`'s raster.
/// Axis 1 is the raster row, axis 2 the column, axis 3 the gene.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CgrCube {
    slices: Vec<CgrImage>,
}

impl CgrCube {
    /// Panics if `slices` is empty or resolutions differ.
    pub fn from_slices(slices: Vec<CgrImage>) -> Self {
        assert!(!slices.is_empty(), "cube needs at least one slice");
        let r = slices[0].resolution();
        assert!(
            slices.iter().all(|s| s.resolution() == r),
            "mixed slice resolutions"
        );
        CgrCube { slices }
    }

    /// `(n1, n2, n3)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        let r = self.slices[0].resolution();
        (r, r, self.slices.len())
    }

    pub fn slice(&self, k: usize) -> &CgrImage {
        &self.slices[k]
    }

    pub fn slices(&self) -> &[CgrImage] {
        &self.slices
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.slices[k].get(i, j)
    }

    pub fn count_set(&self) -> usize {
        self.slices.iter().map(CgrImage::count_set).sum()
    }

    pub fn to_dense(&self) -> ndarray::Array3<f64> {
        let (n1, n2, n3) = self.dims();
        let mut out = ndarray::Array3::zeros((n1, n2, n3));
        for (k, s) in self.slices.iter().enumerate() {
            for (i, j) in s.iter_set() {
                out[[i, j, k]] = 1.0;
            }
        }
        out
    }

    /// Little-endian header (magic `CGRC`, then n1, n2, n3 as u32) followed
    /// by one byte per voxel, slice-major then row-major.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        let (n1, n2, n3) = self.dims();
        w.write_all(&CUBE_MAGIC)?;
        for n in [n1, n2, n3] {
            w.write_all(&(n as u32).to_le_bytes())?;
        }
        for s in &self.slices {
            w.write_all(&s.to_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, CgrError> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if header[..4] != CUBE_MAGIC {
            return Err(CgrError::Format("bad magic".into()));
        }
        let dim = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap()) as usize;
        let (n1, n2, n3) = (dim(4), dim(8), dim(12));
        if n1 != n2 || n3 == 0 {
            return Err(CgrError::Format(format!(
                "unsupported dimensions {n1}x{n2}x{n3}"
            )));
        }
        let mut buf = vec![0u8; n1 * n2];
        let mut slices = Vec::with_capacity(n3);
        for _ in 0..n3 {
            r.read_exact(&mut buf)?;
            slices.push(CgrImage::from_bytes(n1, &buf)?);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(CgrError::Format("trailing bytes after cube data".into()));
        }
        Ok(CgrCube { slices })
    }
}

/// Stacks the rasters of a sample's genes in network order.
pub fn build_cube(sample: &NetworkSample, resolution: Resolution) -> Result<CgrCube, CgrError> {
    if sample.genes.is_empty() {
        return Err(CgrError::NoGenes(sample.sample_id.clone()));
    }
    Ok(CgrCube {
        slices: sample.genes.iter().map(|g| render(g, resolution)).collect(),
    })
}
