//! Midpoint-insertion resampling of rooted paths.
//!
//! Original vertices never move. New samples are added one at a time at the
//! midpoint of the currently longest segment (earliest segment along the path
//! wins ties) until the requested count is reached. Because every inserted
//! point lies on an existing segment, the polyline itself is unchanged.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::RootedPath;
use crate::Vec3;

/// Parameters of the elastic comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticConfig {
    /// Minimum common sample count per compared path pair.
    pub rho: usize,
    /// Regularizer in the cost denominator.
    pub lambda: f64,
    /// Number of frames in a morph sequence.
    pub frames: usize,
}

impl Default for ElasticConfig {
    fn default() -> Self {
        Self {
            rho: 100,
            lambda: 1.0,
            frames: 10,
        }
    }
}

impl ElasticConfig {
    pub fn with_rho(mut self, rho: usize) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho < 2 {
            return Err(Error::Contract(format!(
                "rho must be at least 2, got {}",
                self.rho
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Contract(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.frames < 2 {
            return Err(Error::Contract(format!(
                "frames must be at least 2, got {}",
                self.frames
            )));
        }
        Ok(())
    }
}

/// Common sample count for a compared pair: `max(rho, n_i, n_j)`.
pub fn pair_target(n_i: usize, n_j: usize, rho: usize) -> usize {
    rho.max(n_i).max(n_j)
}

/// A path reparametrized to a fixed sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampledPath {
    pub positions: Vec<Vec3>,
    /// Interpolated concurrence.
    pub c_tilde: Vec<f64>,
    /// Interpolated hierarchy.
    pub h_tilde: Vec<f64>,
    pub is_original: Vec<bool>,
    /// Index of the source segment each sample starts (or lies on). The final
    /// sample reports the last segment.
    pub source_segment: Vec<usize>,
}

impl ResampledPath {
    pub fn m(&self) -> usize {
        self.positions.len()
    }

    pub fn arc_length(&self) -> f64 {
        self.positions
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .sum()
    }
}

/// A piece of source segment `seg` covering `[k, k+1] / 2^depth` of it.
#[derive(Debug, Clone, Copy)]
struct Piece {
    len: f64,
    seg: usize,
    depth: u32,
    k: u64,
}

impl Piece {
    fn cmp_position(&self, other: &Self) -> Ordering {
        self.seg.cmp(&other.seg).then_with(|| {
            // k / 2^depth compared exactly.
            let a = (self.k as u128) << other.depth;
            let b = (other.k as u128) << self.depth;
            a.cmp(&b)
        })
    }

    fn fraction(&self) -> f64 {
        self.k as f64 / (1u64 << self.depth) as f64
    }
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    // Max-heap order: longest first, then earliest along the path.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .total_cmp(&other.len)
            .then_with(|| other.cmp_position(self))
    }
}

/// Resamples `path` to exactly `m` samples.
pub fn resample(path: &RootedPath, m: usize) -> Result<ResampledPath> {
    let n = path.len();
    if n < 2 {
        return Err(Error::Contract(format!(
            "path {} has {} vertex; at least two are required",
            path.path_id, n
        )));
    }
    if m < n {
        return Err(Error::InsufficientTarget {
            target: m,
            vertices: n,
        });
    }

    let mut heap = BinaryHeap::with_capacity(m);
    for (seg, w) in path.positions.windows(2).enumerate() {
        let len = (w[1] - w[0]).norm();
        if len == 0.0 {
            return Err(Error::ZeroLength { index: seg + 1 });
        }
        heap.push(Piece {
            len,
            seg,
            depth: 0,
            k: 0,
        });
    }
    for _ in n..m {
        let top = heap.pop().expect("heap holds every segment");
        // Halving is exact in binary floating point, so sibling pieces tie exactly.
        let half = top.len * 0.5;
        for k in [2 * top.k, 2 * top.k + 1] {
            heap.push(Piece {
                len: half,
                seg: top.seg,
                depth: top.depth + 1,
                k,
            });
        }
    }

    let mut pieces = heap.into_vec();
    pieces.sort_by(Piece::cmp_position);

    let mut positions = Vec::with_capacity(m);
    let mut is_original = Vec::with_capacity(m);
    let mut source_segment = Vec::with_capacity(m);
    for p in &pieces {
        let a = path.positions[p.seg];
        if p.k == 0 {
            positions.push(a);
            is_original.push(true);
        } else {
            let b = path.positions[p.seg + 1];
            positions.push(a + (b - a) * p.fraction());
            is_original.push(false);
        }
        source_segment.push(p.seg);
    }
    positions.push(path.positions[n - 1]);
    is_original.push(true);
    source_segment.push(n - 2);

    let (c_tilde, h_tilde) = interpolate_features(path, &is_original, &source_segment);
    Ok(ResampledPath {
        positions,
        c_tilde,
        h_tilde,
        is_original,
        source_segment,
    })
}

/// Concurrence and hierarchy on the resampled grid.
///
/// Original vertices keep their own values; an inserted sample takes the value
/// of its segment, which is the value at the segment's child-side vertex.
pub fn interpolate_features(
    path: &RootedPath,
    is_original: &[bool],
    source_segment: &[usize],
) -> (Vec<f64>, Vec<f64>) {
    let last = is_original.len() - 1;
    is_original
        .iter()
        .zip(source_segment)
        .enumerate()
        .map(|(idx, (&orig, &seg))| {
            let v = match (orig, idx == last) {
                (_, true) => path.len() - 1,
                (true, false) => seg,
                (false, false) => seg + 1,
            };
            (path.concurrence[v] as f64, path.hierarchy[v] as f64)
        })
        .unzip()
}
