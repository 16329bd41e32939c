//! Padded cubemap storage and the SHM1 file format.
//!
//! Each face stores `(N + 2g)^2` texels, row-major with `v` selecting the
//! row. Stored index `i` has its texel center at `u = (i - g + 0.5) / N`, so
//! indices `g..g+N` are the interior samples and the outer `g` rings are the
//! gutter.
//!
//! SHM1 layout (little-endian):
//!
//! ```text
//! offset  size  field
//!      0     4  magic "SHM1"
//!      4     4  u32 version (= 1)
//!      8     4  u32 N
//!     12     4  u32 gutter
//!     16     4  u32 channels (1 or 4)
//!     20     4  f32 scale
//!     24     1  u8 signed_abs (0 or 1)
//!     25     3  padding (zero)
//!     28     -  faces +X, -X, +Y, -Y, +Z, -Z; each (N+2g)^2 texels,
//!               v rows of u texels, channels interleaved, f32 each
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Face, FacePoint};

pub const MAGIC: &[u8; 4] = b"SHM1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 28;

/// One 4-channel texel: value and pre-scaled chart derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HermiteTexel {
    pub r: f64,
    pub ru_h: f64,
    pub rv_h: f64,
    pub ruv_h2: f64,
}

impl HermiteTexel {
    pub fn to_array(self) -> [f64; 4] {
        [self.r, self.ru_h, self.rv_h, self.ruv_h2]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        HermiteTexel {
            r: s[0],
            ru_h: s[1],
            rv_h: s[2],
            ruv_h2: s[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HermiteCubemap {
    n: u32,
    gutter: u32,
    channels: u32,
    pub scale: f64,
    pub signed_abs: bool,
    faces: Vec<Vec<f64>>,
}

/// 2x2 cell addressed by a chart query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellQuery {
    pub face: Face,
    pub i0: usize,
    pub j0: usize,
    pub sloc: f64,
    pub tloc: f64,
}

/// Slack allowed on chart coordinates produced by direction round-trips.
const UV_SLACK: f64 = 1e-9;

impl HermiteCubemap {
    pub fn new(n: u32, gutter: u32, channels: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidResolution("N must be at least 1".into()));
        }
        if gutter == 0 {
            return Err(Error::InvalidGutter("gutter must be at least 1".into()));
        }
        if channels != 1 && channels != 4 {
            return Err(Error::InvalidInput(format!(
                "channel count must be 1 or 4, got {channels}"
            )));
        }
        let stride = (n + 2 * gutter) as usize;
        Ok(HermiteCubemap {
            n,
            gutter,
            channels,
            scale: 1.0,
            signed_abs: false,
            faces: vec![vec![0.0; stride * stride * channels as usize]; 6],
        })
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn gutter(&self) -> u32 {
        self.gutter
    }

    #[inline]
    pub fn channels(&self) -> u32 {
        self.channels
    }

    /// Texel spacing `1 / N`.
    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Stored texels per row (and rows per face): `N + 2g`.
    #[inline]
    pub fn stride(&self) -> usize {
        (self.n + 2 * self.gutter) as usize
    }

    /// Chart coordinate of the center of stored index `i`.
    #[inline]
    pub fn texel_center(&self, i: isize) -> f64 {
        (i as f64 - self.gutter as f64 + 0.5) / self.n as f64
    }

    /// Scalars stored per face.
    pub fn face_len(&self) -> usize {
        self.stride() * self.stride() * self.channels as usize
    }

    #[inline]
    pub fn texel(&self, face: Face, i: usize, j: usize) -> &[f64] {
        let c = self.channels as usize;
        let at = (j * self.stride() + i) * c;
        &self.faces[face.index()][at..at + c]
    }

    #[inline]
    pub fn texel_mut(&mut self, face: Face, i: usize, j: usize) -> &mut [f64] {
        let c = self.channels as usize;
        let at = (j * self.stride() + i) * c;
        &mut self.faces[face.index()][at..at + c]
    }

    /// Channel-0 value of a stored texel.
    #[inline]
    pub fn value(&self, face: Face, i: usize, j: usize) -> f64 {
        self.faces[face.index()][(j * self.stride() + i) * self.channels as usize]
    }

    pub fn hermite_texel(&self, face: Face, i: usize, j: usize) -> HermiteTexel {
        HermiteTexel::from_slice(self.texel(face, i, j))
    }

    pub fn face_data(&self, face: Face) -> &[f64] {
        &self.faces[face.index()]
    }

    pub fn face_data_mut(&mut self, face: Face) -> &mut [f64] {
        &mut self.faces[face.index()]
    }

    pub(crate) fn set_face_data(&mut self, face: Face, data: Vec<f64>) {
        assert_eq!(data.len(), self.face_len());
        self.faces[face.index()] = data;
    }

    /// Single-channel copy holding only the values.
    pub fn value_only(&self) -> HermiteCubemap {
        let mut out = HermiteCubemap::new(self.n, self.gutter, 1).expect("valid dimensions");
        out.scale = self.scale;
        out.signed_abs = self.signed_abs;
        let c = self.channels as usize;
        for face in Face::ALL {
            out.faces[face.index()] = self.faces[face.index()]
                .iter()
                .step_by(c)
                .copied()
                .collect();
        }
        out
    }

    /// Rounds every stored scalar to `f32`, as a save/load cycle would.
    pub fn quantize_f32(&mut self) {
        for f in &mut self.faces {
            for x in f.iter_mut() {
                *x = *x as f32 as f64;
            }
        }
        self.scale = self.scale as f32 as f64;
    }

    /// 2x2 cell containing the chart point. The gutter keeps all four
    /// corners inside the stored grid.
    pub fn locate_cell(&self, p: FacePoint) -> Result<CellQuery> {
        let in_range = |x: f64| (-UV_SLACK..=1.0 + UV_SLACK).contains(&x);
        if !in_range(p.u) || !in_range(p.v) {
            return Err(Error::OutOfRange { u: p.u, v: p.v });
        }
        let (i0, sloc) = self.axis_cell(p.u.clamp(0.0, 1.0));
        let (j0, tloc) = self.axis_cell(p.v.clamp(0.0, 1.0));
        Ok(CellQuery {
            face: p.face,
            i0,
            j0,
            sloc,
            tloc,
        })
    }

    /// Continuous stored-texel coordinate of a chart coordinate.
    #[inline]
    pub fn texel_coord(&self, u: f64) -> f64 {
        u * self.n as f64 + self.gutter as f64 - 0.5
    }

    #[inline]
    fn axis_cell(&self, u: f64) -> (usize, f64) {
        let x = self.texel_coord(u);
        let max_base = (self.stride() - 2) as f64;
        let base = x.floor().clamp(0.0, max_base);
        (base as usize, x - base)
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 6 * self.face_len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.gutter.to_le_bytes());
        out.extend_from_slice(&self.channels.to_le_bytes());
        out.extend_from_slice(&(self.scale as f32).to_le_bytes());
        out.push(self.signed_abs as u8);
        out.extend_from_slice(&[0, 0, 0]);
        for face in &self.faces {
            for &x in face {
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader { bytes, pos: 0 };
        if rd.take(4)? != MAGIC {
            return Err(Error::BadMagic);
        }
        let version = rd.u32()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let n = rd.u32()?;
        let gutter = rd.u32()?;
        let channels = rd.u32()?;
        let scale = rd.f32()? as f64;
        let signed_abs = match rd.take(1)?[0] {
            0 => false,
            1 => true,
            other => {
                return Err(Error::InvalidInput(format!(
                    "signed_abs flag must be 0 or 1, got {other}"
                )))
            }
        };
        rd.take(3)?;
        if n == 0 {
            return Err(Error::InvalidResolution("N must be at least 1".into()));
        }
        // Guard the size computation before allocating.
        if n > 1 << 15 || gutter > 1 << 10 {
            return Err(Error::SizeMismatch(format!(
                "implausible dimensions N={n}, gutter={gutter}"
            )));
        }
        let mut map = HermiteCubemap::new(n, gutter, channels)?;
        map.scale = scale;
        map.signed_abs = signed_abs;
        let face_len = map.face_len();
        let expected = HEADER_LEN + 6 * face_len * 4;
        if bytes.len() < expected {
            return Err(Error::UnexpectedEof);
        }
        if bytes.len() > expected {
            return Err(Error::SizeMismatch(format!(
                "{} trailing bytes after face data",
                bytes.len() - expected
            )));
        }
        for f in 0..6 {
            let face = &mut map.faces[f];
            for x in face.iter_mut() {
                *x = rd.f32()? as f64;
            }
        }
        Ok(map)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes =
            std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::deserialize(&bytes)
    }

    /// Minimum and maximum stored value over all texels.
    pub fn value_range(&self) -> (f64, f64) {
        let c = self.channels as usize;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for f in &self.faces {
            for x in f.iter().step_by(c) {
                lo = lo.min(*x);
                hi = hi.max(*x);
            }
        }
        (lo, hi)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::UnexpectedEof)?;
        let s = self.bytes.get(self.pos..end).ok_or(Error::UnexpectedEof)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn serialize(map: &HermiteCubemap) -> Vec<u8> {
    map.serialize()
}

pub fn deserialize(bytes: &[u8]) -> Result<HermiteCubemap> {
    HermiteCubemap::deserialize(bytes)
}
