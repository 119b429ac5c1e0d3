#![allow(dead_code)]

use arbormatch::nalgebra::{Matrix3, Matrix4};
use arbormatch::paths::RootedPath;
use arbormatch::swc::{NeuronTree, SwcRecord};
use arbormatch::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
        rng.random_range(-scale..scale),
    )
}

pub fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    // Uniform quaternion, normalized.
    loop {
        let q = arbormatch::nalgebra::Vector4::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = q.norm();
        if n > 0.1 && n <= 1.0 {
            let q = arbormatch::nalgebra::UnitQuaternion::from_quaternion(
                arbormatch::nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]) / n,
            );
            return *q.to_rotation_matrix().matrix();
        }
    }
}

/// Random tree with at most `max_leaves` terminals; each new vertex attaches
/// to a uniformly chosen earlier vertex.
pub fn random_tree(rng: &mut ChaCha8Rng, max_leaves: usize) -> NeuronTree {
    loop {
        let n = rng.random_range(2..=3 * max_leaves);
        let mut records = vec![SwcRecord {
            id: 1,
            structure_code: 1,
            x: 0.0,
            y: 0.0,
            z: 0.0,
            radius: 1.0,
            parent_id: -1,
        }];
        let mut pos = vec![Vec3::zeros()];
        for i in 1..n {
            let p = rng.random_range(0..i);
            let x = pos[p] + random_vec(rng, 3.0) + Vec3::new(0.5, 0.0, 0.0);
            pos.push(x);
            records.push(SwcRecord {
                id: i as i64 + 1,
                structure_code: 3,
                x: x.x,
                y: x.y,
                z: x.z,
                radius: 0.5,
                parent_id: p as i64 + 1,
            });
        }
        let t = NeuronTree::from_records(&records).unwrap();
        if t.leaves().len() <= max_leaves {
            return t;
        }
    }
}

pub fn random_path(rng: &mut ChaCha8Rng, n: usize) -> RootedPath {
    let mut p = Vec3::zeros();
    let positions: Vec<Vec3> = (0..n)
        .map(|k| {
            if k > 0 {
                p += random_vec(rng, 2.0) + Vec3::new(0.3, 0.2, 0.1);
            }
            p
        })
        .collect();
    // Non-increasing concurrence from some n_paths down to 1.
    let n_paths = rng.random_range(1..12u32);
    let mut c = n_paths;
    let concurrence: Vec<u32> = (0..n)
        .map(|k| {
            if k == n - 1 {
                c = 1;
            } else if k > 0 && c > 1 && rng.random_bool(0.3) {
                c = rng.random_range(1..=c);
            }
            c
        })
        .collect();
    RootedPath {
        path_id: 0,
        vertices: (0..n).collect(),
        vertex_ids: (1..=n as i64).collect(),
        positions,
        hierarchy: concurrence.iter().map(|&x| n_paths - x).collect(),
        concurrence,
    }
}

pub fn polyline_length(p: &[Vec3]) -> f64 {
    p.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Midpoint resampling by repeated linear scan over the current polyline.
/// Returns (positions, is_original, child-side vertex index per sample).
pub fn scan_resample(path: &[Vec3], m: usize) -> (Vec<Vec3>, Vec<bool>, Vec<usize>) {
    // Each entry: (point, is_original, source segment)
    let mut pts: Vec<(Vec3, bool, usize)> = path
        .iter()
        .enumerate()
        .map(|(i, p)| (*p, true, i.min(path.len() - 2)))
        .collect();
    while pts.len() < m {
        let mut best = 0;
        let mut best_len = -1.0;
        for k in 0..pts.len() - 1 {
            let l = (pts[k + 1].0 - pts[k].0).norm();
            // Rounding in the recomputed norms must not break exact halving ties.
            if l > best_len * (1.0 + 1e-12) {
                best_len = l;
                best = k;
            }
        }
        let seg = pts[best].2;
        let mid = (pts[best].0 + pts[best + 1].0) * 0.5;
        pts.insert(best + 1, (mid, false, seg));
    }
    let last = pts.len() - 1;
    let feature_vertex = pts
        .iter()
        .enumerate()
        .map(|(k, (_, orig, seg))| {
            if k == last {
                path.len() - 1
            } else if *orig {
                *seg
            } else {
                seg + 1
            }
        })
        .collect();
    (
        pts.iter().map(|p| p.0).collect(),
        pts.iter().map(|p| p.1).collect(),
        feature_vertex,
    )
}

/// Optimal rotation by Horn's quaternion method: the eigenvector of the
/// largest eigenvalue of the 4x4 profile matrix.
pub fn horn_rotation(moving: &[Vec3], fixed: &[Vec3]) -> Matrix3<f64> {
    let mut s = Matrix3::zeros();
    for (a, b) in moving.iter().zip(fixed) {
        s += a * b.transpose();
    }
    let (sxx, sxy, sxz) = (s[(0, 0)], s[(0, 1)], s[(0, 2)]);
    let (syx, syy, syz) = (s[(1, 0)], s[(1, 1)], s[(1, 2)]);
    let (szx, szy, szz) = (s[(2, 0)], s[(2, 1)], s[(2, 2)]);
    let n = Matrix4::new(
        sxx + syy + szz,
        syz - szy,
        szx - sxz,
        sxy - syx,
        syz - szy,
        sxx - syy - szz,
        sxy + syx,
        szx + sxz,
        szx - sxz,
        sxy + syx,
        -sxx + syy - szz,
        syz + szy,
        sxy - syx,
        szx + sxz,
        syz + szy,
        -sxx - syy + szz,
    );
    let eig = n.symmetric_eigen();
    let (imax, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let q = eig.eigenvectors.column(imax);
    let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
    Matrix3::new(
        w * w + x * x - y * y - z * z,
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        w * w - x * x + y * y - z * z,
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        w * w - x * x - y * y + z * z,
    )
}

/// Pair cost computed without the library's resampler, SRV, or Kabsch code.
pub fn oracle_pair_cost(a: &RootedPath, b: &RootedPath, rho: usize, lambda: f64) -> f64 {
    let m = rho.max(a.len()).max(b.len());
    let srv = |p: &RootedPath| {
        let (pts, _, fv) = scan_resample(&p.positions, m);
        let dt = 1.0 / (m - 1) as f64;
        let q: Vec<Vec3> = (0..m - 1)
            .map(|k| {
                let v = (pts[k + 1] - pts[k]) / dt;
                v / v.norm().sqrt()
            })
            .collect();
        let c: Vec<f64> = (1..m).map(|k| p.concurrence[fv[k]] as f64).collect();
        let h: Vec<f64> = (1..m).map(|k| p.hierarchy[fv[k]] as f64).collect();
        (q, c, h)
    };
    let (qa, ca, ha) = srv(a);
    let (qb, cb, hb) = srv(b);
    let r = horn_rotation(&qa, &qb);
    let dt = 1.0 / (m - 1) as f64;
    let mut total = 0.0;
    for k in 0..m - 1 {
        let d = r * qa[k] - qb[k];
        let dq = (d.x * d.x + d.y * d.y + d.z * d.z).sqrt();
        total += (ca[k] - cb[k]).abs() * dq / (lambda + (ha[k] * hb[k]).sqrt()) * dt;
    }
    total
}

/// Root-to-leaf vertex sets, found by walking parent links from each leaf.
pub fn brute_force_concurrence(tree: &NeuronTree) -> Vec<u32> {
    let paths: Vec<std::collections::HashSet<usize>> = tree
        .leaves()
        .iter()
        .map(|&leaf| {
            let mut set = std::collections::HashSet::new();
            let mut v = Some(leaf);
            while let Some(u) = v {
                set.insert(u);
                v = tree.parent(u);
            }
            set
        })
        .collect();
    (0..tree.len())
        .map(|v| paths.iter().filter(|p| p.contains(&v)).count() as u32)
        .collect()
}

pub fn brute_force_assignment(cost: &arbormatch::nalgebra::DMatrix<f64>) -> (f64, Vec<usize>) {
    let n = cost.nrows();
    let mut best = (f64::INFINITY, Vec::new());
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let total: f64 = (0..n).map(|i| cost[(i, perm[i])]).sum();
        if total < best.0 {
            best = (total, perm.clone());
        }
        let Some(k) = (0..n.saturating_sub(1))
            .rev()
            .find(|&k| perm[k] < perm[k + 1])
        else {
            break;
        };
        let l = (k + 1..n).rev().find(|&l| perm[k] < perm[l]).unwrap();
        perm.swap(k, l);
        perm[k + 1..].reverse();
    }
    best
}

/// Best injection of the rows of a rectangular matrix into its columns,
/// by enumerating ordered column choices.
pub fn brute_force_injection(cost: &arbormatch::nalgebra::DMatrix<f64>) -> f64 {
    fn go(
        cost: &arbormatch::nalgebra::DMatrix<f64>,
        row: usize,
        used: &mut Vec<bool>,
        acc: f64,
        best: &mut f64,
    ) {
        if row == cost.nrows() {
            *best = best.min(acc);
            return;
        }
        for c in 0..cost.ncols() {
            if !used[c] {
                used[c] = true;
                go(cost, row + 1, used, acc + cost[(row, c)], best);
                used[c] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(cost, 0, &mut vec![false; cost.ncols()], 0.0, &mut best);
    best
}

pub fn rigid(tree: &NeuronTree, r: &Matrix3<f64>, t: Vec3) -> NeuronTree {
    tree.map_positions(|p| r * p + t)
}
