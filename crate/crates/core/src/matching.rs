//! One-to-one path assignment between two neurons.
//!
//! The smaller path set indexes the rows, the larger the columns. Zero-cost
//! dummy rows square the matrix up; columns that land on a dummy row are the
//! larger neuron's unmatched paths. The neuron distance is the summed cost of
//! the real matches.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::distance::{prepared_cost, PreparedPath};
use crate::error::{Error, Result};
use crate::par;
use crate::paths::PathSet;
use crate::resample::{pair_target, ElasticConfig};

/// Which argument supplies the rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    ARows,
    BRows,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub orientation: Orientation,
    /// `rows × cols` with `rows <= cols`.
    pub entries: DMatrix<f64>,
}

impl CostMatrix {
    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    /// Entry for path `a` of the first argument and path `b` of the second.
    pub fn get_ab(&self, a: usize, b: usize) -> f64 {
        match self.orientation {
            Orientation::ARows => self.entries[(a, b)],
            Orientation::BRows => self.entries[(b, a)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedPair {
    /// Path id in the first neuron.
    pub a: usize,
    /// Path id in the second neuron.
    pub b: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    pub orientation: Orientation,
    /// Matches in row order.
    pub pairs: Vec<MatchedPair>,
    /// Path ids of the larger neuron left without a real partner, ascending.
    pub unmatched: Vec<usize>,
    pub total: f64,
}

fn prepare_all(set: &PathSet, rho: usize) -> Result<Vec<PreparedPath>> {
    set.paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            PreparedPath::new(p, pair_target(p.len(), p.len(), rho))
                .map_err(|e| path_error(set, i, e))
        })
        .collect()
}

fn path_error(set: &PathSet, path: usize, e: Error) -> Error {
    Error::Path {
        neuron: set.neuron_id.clone(),
        path,
        source: Box::new(e),
    }
}

/// Path cost matrix between two neurons, cells filled in parallel.
pub fn cost_matrix(a: &PathSet, b: &PathSet, cfg: &ElasticConfig) -> Result<CostMatrix> {
    cfg.validate()?;
    let (rows, cols, orientation) = if a.n() <= b.n() {
        (a, b, Orientation::ARows)
    } else {
        (b, a, Orientation::BRows)
    };
    // Most pairs share the per-path default target max(rho, N); those reuse
    // the cached preparation.
    let row_cache = prepare_all(rows, cfg.rho)?;
    let col_cache = prepare_all(cols, cfg.rho)?;

    let nr = rows.n();
    let nc = cols.n();
    let cells = par::map_range(nr * nc, |idx| {
        let (i, j) = (idx / nc, idx % nc);
        let (ri, cj) = (&row_cache[i], &col_cache[j]);
        let m = ri.m.max(cj.m);
        let fresh_r;
        let fresh_c;
        let pr = if ri.m == m {
            ri
        } else {
            fresh_r = PreparedPath::new(&rows.paths[i], m).map_err(|e| path_error(rows, i, e))?;
            &fresh_r
        };
        let pc = if cj.m == m {
            cj
        } else {
            fresh_c = PreparedPath::new(&cols.paths[j], m).map_err(|e| path_error(cols, j, e))?;
            &fresh_c
        };
        prepared_cost(pr, pc, cfg.lambda)
            .map(|c| c.value)
            .map_err(|e| path_error(rows, i, e))
    });
    let values = cells.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(CostMatrix {
        orientation,
        entries: DMatrix::from_row_slice(nr, nc, &values),
    })
}

/// Appends `cols - rows` zero rows.
pub fn pad_dummy(c: &CostMatrix) -> DMatrix<f64> {
    let (r, n) = (c.rows(), c.cols());
    assert!(r <= n, "cost matrix has more rows than columns");
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((0, 0), (r, n)).copy_from(&c.entries);
    out
}

/// Minimum-cost permutation of a square matrix: `perm[row] = column`.
///
/// Among all optimal permutations the lexicographically smallest is returned.
pub fn hungarian(cost: &DMatrix<f64>) -> Result<Vec<usize>> {
    let n = cost.nrows();
    if cost.ncols() != n {
        return Err(Error::Contract(format!(
            "assignment matrix is {}x{}, not square",
            n,
            cost.ncols()
        )));
    }
    if cost.iter().any(|x| !x.is_finite()) {
        return Err(Error::Contract(
            "assignment matrix has a non-finite entry".into(),
        ));
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    // Shortest augmenting path with potentials; 1-based, index 0 is a sentinel.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assign = vec![0usize; n];
    let mut col_owner = vec![0usize; n];
    for j in 1..=n {
        assign[owner[j] - 1] = j - 1;
        col_owner[j - 1] = owner[j] - 1;
    }

    // Every optimal permutation is a perfect matching on the zero-reduced-cost
    // edges of the optimal duals. Walk rows in order and move each one to the
    // smallest such column that still completes to a perfect matching.
    let scale = cost.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let eps = 1e-10 * scale;
    let tight = |i: usize, j: usize| (cost[(i, j)] - u[i + 1] - v[j + 1]).abs() <= eps;

    for i in 0..n {
        let target = assign[i];
        for j in 0..target {
            let r = col_owner[j];
            if r < i || !tight(i, j) {
                continue;
            }
            let mut visited = vec![false; n];
            visited[j] = true;
            let mut trail = Vec::new();
            if augment(r, i, target, &tight, &col_owner, &mut visited, &mut trail) {
                for (row, col) in trail {
                    assign[row] = col;
                    col_owner[col] = row;
                }
                assign[i] = j;
                col_owner[j] = i;
                break;
            }
        }
    }
    Ok(assign)
}

/// Looks for an alternating path that re-seats `row` and ends on `target`,
/// using only rows after `fixed`. Records the new (row, column) seats.
fn augment(
    row: usize,
    fixed: usize,
    target: usize,
    tight: &impl Fn(usize, usize) -> bool,
    col_owner: &[usize],
    visited: &mut [bool],
    trail: &mut Vec<(usize, usize)>,
) -> bool {
    for c in 0..col_owner.len() {
        if visited[c] || !tight(row, c) {
            continue;
        }
        if c == target {
            trail.push((row, c));
            return true;
        }
        let next = col_owner[c];
        if next <= fixed {
            continue;
        }
        visited[c] = true;
        trail.push((row, c));
        if augment(next, fixed, target, tight, col_owner, visited, trail) {
            return true;
        }
        trail.pop();
    }
    false
}

/// Optimal assignment over an already computed cost matrix.
pub fn assign(c: &CostMatrix) -> Result<Assignment> {
    let perm = hungarian(&pad_dummy(c))?;
    let rows = c.rows();
    let flip = |row: usize, col: usize| match c.orientation {
        Orientation::ARows => (row, col),
        Orientation::BRows => (col, row),
    };
    let mut total = 0.0;
    let pairs = (0..rows)
        .map(|i| {
            let cost = c.entries[(i, perm[i])];
            total += cost;
            let (a, b) = flip(i, perm[i]);
            MatchedPair { a, b, cost }
        })
        .collect();
    let mut unmatched: Vec<usize> = perm[rows..].to_vec();
    unmatched.sort_unstable();
    Ok(Assignment {
        orientation: c.orientation,
        pairs,
        unmatched,
        total,
    })
}

/// Distance between two neurons and the matching that realizes it.
pub fn neuron_distance(a: &PathSet, b: &PathSet, cfg: &ElasticConfig) -> Result<(f64, Assignment)> {
    let c = cost_matrix(a, b, cfg)?;
    let assignment = assign(&c)?;
    Ok((assignment.total, assignment))
}
