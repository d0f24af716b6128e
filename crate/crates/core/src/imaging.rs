//! Synthetic polarimetric scenes and per-pixel / sliding-window maps.
//!
//! Pixels are independent: pixel `p = y·width + x` draws one Jones vector
//! from its region's coherency matrix on stream `p` of the scene seed.

use std::io::{self, Read, Write};

use rayon::prelude::*;

use crate::error::{DopError, Result};
use crate::estimators::{estimate_p2, osci_contrast, EstimatorKind};
use crate::polcore::CoherencyMatrix;
use crate::rng::SamplerConfig;
use crate::speckle::{cholesky_factor, IntensityRecord, JonesSampler};
use crate::Complex;

/// Row-major 2-D grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }
}

impl<T> Grid<T> {
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.width.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }
}

/// Regions are painted in order, so later regions win on overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub regions: Vec<(Rect, CoherencyMatrix)>,
    pub background: CoherencyMatrix,
    pub seed: u64,
}

impl SceneSpec {
    pub fn uniform(width: usize, height: usize, gamma: CoherencyMatrix, seed: u64) -> Self {
        Self { width, height, regions: Vec::new(), background: gamma, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(DopError::InvalidArgument("scene must be at least 1x1".into()));
        }
        for (i, (r, _)) in self.regions.iter().enumerate() {
            if r.width == 0 || r.height == 0 || r.x + r.width > self.width || r.y + r.height > self.height {
                return Err(DopError::InvalidArgument(format!(
                    "region {i} ({r:?}) is empty or exceeds the {}x{} scene",
                    self.width, self.height
                )));
            }
        }
        Ok(())
    }

    /// Index of the matrix covering each pixel: 0 is the background, `i + 1` region `i`.
    pub fn label_map(&self) -> Grid<usize> {
        let mut labels = Grid::filled(self.width, self.height, 0);
        for (i, (r, _)) in self.regions.iter().enumerate() {
            for y in r.y..r.y + r.height {
                for x in r.x..r.x + r.width {
                    labels.data[y * self.width + x] = i + 1;
                }
            }
        }
        labels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImagePair {
    pub width: usize,
    pub height: usize,
    pub i1: Grid<f64>,
    pub i2: Grid<f64>,
    pub cross: Option<Grid<Complex>>,
}

impl ImagePair {
    /// Builds a pair from caller-supplied intensity grids.
    pub fn from_intensities(width: usize, height: usize, i1: Vec<f64>, i2: Vec<f64>) -> Result<Self> {
        if i1.len() != width * height || i2.len() != width * height {
            return Err(DopError::InvalidArgument("image size mismatch".into()));
        }
        if i1.iter().chain(&i2).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(DopError::InvalidArgument("intensities must be finite and >= 0".into()));
        }
        Ok(Self {
            width,
            height,
            i1: Grid { width, height, data: i1 },
            i2: Grid { width, height, data: i2 },
            cross: None,
        })
    }

    pub fn record(&self, idx: usize) -> IntensityRecord {
        IntensityRecord {
            i1: self.i1.data[idx],
            i2: self.i2.data[idx],
            cross: self.cross.as_ref().map(|c| c.data[idx]),
        }
    }

    /// All pixels in row-major order.
    pub fn records(&self) -> Vec<IntensityRecord> {
        (0..self.width * self.height).map(|i| self.record(i)).collect()
    }

    /// Pixels inside `rect`, row-major.
    pub fn region_records(&self, rect: Rect) -> Vec<IntensityRecord> {
        let mut out = Vec::with_capacity(rect.width * rect.height);
        for y in rect.y..rect.y + rect.height {
            for x in rect.x..rect.x + rect.width {
                out.push(self.record(y * self.width + x));
            }
        }
        out
    }
}

/// Draws one speckle realization of the scene.
pub fn render_scene(scene: &SceneSpec, keep_cross: bool) -> Result<ImagePair> {
    scene.validate()?;
    let factors = std::iter::once(&scene.background)
        .chain(scene.regions.iter().map(|(_, g)| g))
        .map(cholesky_factor)
        .collect::<Result<Vec<_>>>()?;
    let labels = scene.label_map();
    let w = scene.width;
    let pixels: Vec<(f64, f64, Complex)> = labels
        .data
        .par_iter()
        .enumerate()
        .map(|(p, &label)| {
            let mut s = JonesSampler::with_factor(factors[label], SamplerConfig::new(scene.seed, p as u64));
            let j = s.next_jones();
            (j.ax.norm_sqr(), j.ay.norm_sqr(), j.ax * j.ay.conj())
        })
        .collect();
    let h = scene.height;
    let grid = |data| Grid { width: w, height: h, data };
    Ok(ImagePair {
        width: w,
        height: h,
        i1: grid(pixels.iter().map(|p| p.0).collect()),
        i2: grid(pixels.iter().map(|p| p.1).collect()),
        cross: keep_cross.then(|| Grid { width: w, height: h, data: pixels.iter().map(|p| p.2).collect() }),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsciMap {
    pub contrast: Grid<f64>,
    /// `true` where `I1 + I2 = 0`; contrast is 0 there.
    pub degenerate: Grid<bool>,
}

/// Per-pixel orthogonal state contrast.
pub fn osci_map(pair: &ImagePair) -> OsciMap {
    let (w, h) = (pair.width, pair.height);
    let mut contrast = Grid::filled(w, h, 0.0);
    let mut degenerate = Grid::filled(w, h, false);
    for i in 0..w * h {
        match osci_contrast(pair.i1.data[i], pair.i2.data[i]) {
            Some(c) => contrast.data[i] = c,
            None => degenerate.data[i] = true,
        }
    }
    OsciMap { contrast, degenerate }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateMap {
    /// NaN where the window estimate failed (e.g. an all-dark window).
    pub p2: Grid<f64>,
    /// Samples used per pixel; smaller than `window²` near borders.
    pub counts: Grid<usize>,
}

/// Sliding-window P² with windows clipped at the image border.
pub fn estimate_map(pair: &ImagePair, window: usize, kind: EstimatorKind) -> Result<EstimateMap> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(DopError::InvalidArgument(format!("window must be odd and >= 3, got {window}")));
    }
    if window > pair.width && window > pair.height {
        return Err(DopError::InvalidArgument(format!(
            "window {window} exceeds both image dimensions {}x{}",
            pair.width, pair.height
        )));
    }
    if kind.needs_cross() && pair.cross.is_none() {
        return Err(DopError::MissingCross(0));
    }
    let (w, h) = (pair.width, pair.height);
    let half = window / 2;
    let span = |c: usize, len: usize| (c.saturating_sub(half), (c + half + 1).min(len));
    let cells: Vec<(f64, usize)> = (0..w * h)
        .into_par_iter()
        .map(|p| {
            let (x, y) = (p % w, p / w);
            let (x0, x1) = span(x, w);
            let (y0, y1) = span(y, h);
            let recs = pair.region_records(Rect { x: x0, y: y0, width: x1 - x0, height: y1 - y0 });
            let v = estimate_p2(&recs, kind).map(|r| r.p2_hat).unwrap_or(f64::NAN);
            (v, recs.len())
        })
        .collect();
    Ok(EstimateMap {
        p2: Grid { width: w, height: h, data: cells.iter().map(|c| c.0).collect() },
        counts: Grid { width: w, height: h, data: cells.iter().map(|c| c.1).collect() },
    })
}

/// Writes `PFMAP <w> <h> <channels>\n` then row-major little-endian f32,
/// channels interleaved per pixel.
pub fn write_pfmap<W: Write>(out: &mut W, width: usize, height: usize, channels: &[&[f64]]) -> io::Result<()> {
    let n = width * height;
    if channels.is_empty() || channels.iter().any(|c| c.len() != n) {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "channel size mismatch"));
    }
    writeln!(out, "PFMAP {} {} {}", width, height, channels.len())?;
    let mut buf = Vec::with_capacity(n * channels.len() * 4);
    for i in 0..n {
        for c in channels {
            buf.extend_from_slice(&(c[i] as f32).to_le_bytes());
        }
    }
    out.write_all(&buf)
}

/// Reads a float map back as `(width, height, channels)`.
pub fn read_pfmap<R: Read>(input: &mut R) -> io::Result<(usize, usize, Vec<Vec<f32>>)> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let invalid = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| invalid("missing header"))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| invalid("header is not UTF-8"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "PFMAP" {
        return Err(invalid("bad PFMAP header"));
    }
    let dims: Vec<usize> = fields[1..]
        .iter()
        .map(|f| f.parse().map_err(|_| invalid("bad PFMAP dimension")))
        .collect::<io::Result<_>>()?;
    let (w, h, ch) = (dims[0], dims[1], dims[2]);
    let body = &bytes[nl + 1..];
    if ch == 0 || body.len() != w * h * ch * 4 {
        return Err(invalid("PFMAP body size does not match header"));
    }
    let mut out = vec![Vec::with_capacity(w * h); ch];
    for (k, word) in body.chunks_exact(4).enumerate() {
        out[k % ch].push(f32::from_le_bytes([word[0], word[1], word[2], word[3]]));
    }
    Ok((w, h, out))
}

/// `x,y,value` rows with a header line.
pub fn write_map_csv<W: Write>(out: &mut W, grid: &Grid<f64>) -> io::Result<()> {
    writeln!(out, "x,y,value")?;
    for y in 0..grid.height {
        for x in 0..grid.width {
            writeln!(out, "{},{},{}", x, y, grid.get(x, y))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polcore::paper_matrices;

    fn g(i: usize) -> CoherencyMatrix {
        paper_matrices()[i - 1].1
    }

    #[test]
    fn fully_polarized_pixel_has_dark_cross_channel() {
        let scene = SceneSpec::uniform(1, 1, CoherencyMatrix::diagonal(1.0, 0.0).unwrap(), 3);
        let pair = render_scene(&scene, false).unwrap();
        assert_eq!(pair.i2.data, vec![0.0]);
        assert!(pair.cross.is_none());
    }

    #[test]
    fn uniform_scene_grand_mean() {
        let pair = render_scene(&SceneSpec::uniform(64, 64, g(2), 8), false).unwrap();
        let m = pair.i1.data.iter().sum::<f64>() / 4096.0;
        assert!((m - 16.0).abs() < 5.0 * 16.0 / 64.0, "{m}");
    }

    #[test]
    fn painter_order_and_bounds() {
        let a = CoherencyMatrix::diagonal(1.0, 1.0).unwrap();
        let b = CoherencyMatrix::diagonal(2.0, 2.0).unwrap();
        let scene = SceneSpec {
            width: 4,
            height: 2,
            regions: vec![
                (Rect { x: 0, y: 0, width: 3, height: 2 }, a),
                (Rect { x: 2, y: 0, width: 2, height: 1 }, b),
            ],
            background: a,
            seed: 0,
        };
        let labels = scene.label_map();
        assert_eq!(labels.data, vec![1, 1, 2, 2, 1, 1, 1, 0]);
        let mut bad = scene.clone();
        bad.regions.push((Rect { x: 3, y: 0, width: 2, height: 1 }, a));
        assert!(render_scene(&bad, false).is_err());
    }

    #[test]
    fn render_is_deterministic() {
        let scene = SceneSpec::uniform(16, 8, g(5), 21);
        assert_eq!(render_scene(&scene, true).unwrap(), render_scene(&scene, true).unwrap());
    }

    #[test]
    fn osci_map_examples() {
        let pair = ImagePair::from_intensities(3, 1, vec![1.0, 2.0, 0.0], vec![0.0, 2.0, 0.0]).unwrap();
        let m = osci_map(&pair);
        assert_eq!(m.contrast.data, vec![1.0, 0.0, 0.0]);
        assert_eq!(m.degenerate.data, vec![false, false, true]);
    }

    #[test]
    fn estimate_map_argument_checks() {
        let pair = ImagePair::from_intensities(5, 4, vec![1.0; 20], vec![1.0; 20]).unwrap();
        assert!(estimate_map(&pair, 2, EstimatorKind::Osci).is_err());
        assert!(estimate_map(&pair, 1, EstimatorKind::Osci).is_err());
        assert!(estimate_map(&pair, 7, EstimatorKind::Osci).is_err());
        assert!(estimate_map(&pair, 5, EstimatorKind::Osci).is_ok());
        assert_eq!(estimate_map(&pair, 3, EstimatorKind::FourImage), Err(DopError::MissingCross(0)));
    }

    #[test]
    fn estimate_map_constant_pair_is_zero_with_clipped_counts() {
        let pair = ImagePair::from_intensities(6, 5, vec![2.5; 30], vec![2.5; 30]).unwrap();
        let m = estimate_map(&pair, 3, EstimatorKind::CorrelatedPair).unwrap();
        assert!(m.p2.data.iter().all(|&v| v == 0.0));
        assert_eq!(*m.counts.get(0, 0), 4);
        assert_eq!(*m.counts.get(1, 0), 6);
        assert_eq!(*m.counts.get(2, 2), 9);
        assert_eq!(*m.counts.get(5, 4), 4);
    }

    #[test]
    fn dark_window_is_nan() {
        let pair = ImagePair::from_intensities(3, 3, vec![0.0; 9], vec![0.0; 9]).unwrap();
        let m = estimate_map(&pair, 3, EstimatorKind::Osci).unwrap();
        assert!(m.p2.data.iter().all(|v| v.is_nan()));
    }

    #[test]
    fn pfmap_round_trip() {
        let a = [1.0, -2.5, 3.25, 0.0, 1e-3, 7.0];
        let b = [0.5; 6];
        let mut buf = Vec::new();
        write_pfmap(&mut buf, 3, 2, &[&a, &b]).unwrap();
        assert!(buf.starts_with(b"PFMAP 3 2 2\n"));
        assert_eq!(buf.len(), 12 + 6 * 2 * 4);
        let (w, h, ch) = read_pfmap(&mut buf.as_slice()).unwrap();
        assert_eq!((w, h, ch.len()), (3, 2, 2));
        assert_eq!(ch[0], a.iter().map(|&v| v as f32).collect::<Vec<_>>());
        assert_eq!(ch[1], vec![0.5f32; 6]);
        assert!(read_pfmap(&mut &buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn map_csv_layout() {
        let grid = Grid { width: 2, height: 1, data: vec![0.5, 1.0] };
        let mut buf = Vec::new();
        write_map_csv(&mut buf, &grid).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y,value\n0,0,0.5\n1,0,1\n");
    }
}
