//! Elastic path-to-path cost.
//!
//! For two paths resampled to `m` samples, with the SRV curve of `i` rotated
//! onto that of `j`, the cost is the left Riemann sum
//!
//! ```text
//! Σ_k |c_i,k − c_j,k| · |q̃_i,k − q_j,k| / (λ + sqrt(h_i,k · h_j,k)) · dt,   dt = 1/(m−1)
//! ```
//!
//! over the `m − 1` SRV samples, where the features of SRV sample `k` are those
//! of resampled vertex `k + 1` (the child-side end of segment `k`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::paths::RootedPath;
use crate::resample::{pair_target, resample, ElasticConfig};
use crate::srv::{kabsch, morph, srv_transform, SrvCurve};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathCost {
    pub value: f64,
    pub i: usize,
    pub j: usize,
    pub m: usize,
}

/// A path resampled to `m` samples and mapped to SRV space, with its features
/// restricted to the SRV grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedPath {
    pub path_id: usize,
    pub m: usize,
    pub srv: SrvCurve,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

impl PreparedPath {
    pub fn new(path: &RootedPath, m: usize) -> Result<Self> {
        let r = resample(path, m)?;
        let srv = srv_transform(&r.positions)?;
        Ok(Self {
            path_id: path.path_id,
            m,
            srv,
            c: r.c_tilde[1..].to_vec(),
            h: r.h_tilde[1..].to_vec(),
        })
    }
}

/// Cost between a registered SRV curve and its target, with grid features.
pub fn path_cost(
    q_i_reg: &SrvCurve,
    q_j: &SrvCurve,
    c_i: &[f64],
    c_j: &[f64],
    h_i: &[f64],
    h_j: &[f64],
    lambda: f64,
) -> Result<f64> {
    let n = q_i_reg.len();
    if [q_j.len(), c_i.len(), c_j.len(), h_i.len(), h_j.len()]
        .iter()
        .any(|&l| l != n)
    {
        return Err(Error::Contract("path cost inputs differ in length".into()));
    }
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Contract(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if c_i
        .iter()
        .chain(c_j)
        .chain(h_i)
        .chain(h_j)
        .any(|&x| x < 0.0)
    {
        return Err(Error::Contract("negative feature value".into()));
    }
    let mut sum = 0.0;
    for k in 0..n {
        let dc = (c_i[k] - c_j[k]).abs();
        if dc == 0.0 {
            continue;
        }
        let dq = (q_i_reg.samples[k] - q_j.samples[k]).norm();
        sum += dc * dq / (lambda + (h_i[k] * h_j[k]).sqrt());
    }
    Ok(sum * q_j.dt)
}

/// Registers `a` onto `b` and evaluates their cost. Both must share `m`.
pub fn prepared_cost(a: &PreparedPath, b: &PreparedPath, lambda: f64) -> Result<PathCost> {
    if a.m != b.m {
        return Err(Error::Contract(format!(
            "prepared paths have {} and {} samples",
            a.m, b.m
        )));
    }
    let fit = kabsch(&a.srv, &b.srv)?;
    let registered = a.srv.rotated(&fit.rotation);
    let value = path_cost(&registered, &b.srv, &a.c, &b.c, &a.h, &b.h, lambda)?;
    Ok(PathCost {
        value,
        i: a.path_id,
        j: b.path_id,
        m: a.m,
    })
}

/// Full per-pair pipeline: common target, resample, SRV, register `a` onto
/// `b`, cost.
pub fn pair_pipeline(a: &RootedPath, b: &RootedPath, cfg: &ElasticConfig) -> Result<PathCost> {
    let m = pair_target(a.len(), b.len(), cfg.rho);
    let pa = PreparedPath::new(a, m)?;
    let pb = PreparedPath::new(b, m)?;
    prepared_cost(&pa, &pb, cfg.lambda)
}

/// Morph sequence from `a` (registered onto `b`) to `b` over `cfg.frames`
/// frames, both resampled to their common target.
pub fn morph_paths(a: &RootedPath, b: &RootedPath, cfg: &ElasticConfig) -> Result<Vec<Vec<Vec3>>> {
    let m = pair_target(a.len(), b.len(), cfg.rho);
    let ra = resample(a, m)?;
    let rb = resample(b, m)?;
    let qa = srv_transform(&ra.positions)?;
    let qb = srv_transform(&rb.positions)?;
    let fit = kabsch(&qa, &qb)?;
    morph(
        &qa.rotated(&fit.rotation),
        &qb,
        cfg.frames,
        ra.positions[0],
        rb.positions[0],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(samples: Vec<Vec3>) -> SrvCurve {
        let dt = 1.0 / samples.len() as f64;
        SrvCurve {
            samples,
            dt,
            origin: Vec3::zeros(),
        }
    }

    #[test]
    fn identical_concurrence_annihilates() {
        let a = curve(vec![Vec3::x(), Vec3::y()]);
        let b = curve(vec![Vec3::z(), Vec3::x() * 3.0]);
        let c = [2.0, 1.0];
        let h = [0.0, 1.0];
        assert_eq!(path_cost(&a, &b, &c, &c, &h, &h, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_value() {
        let a = curve(vec![Vec3::x(), Vec3::y()]);
        let b = curve(vec![Vec3::zeros(), Vec3::zeros()]);
        // k=0: |3-1|·1/(1+sqrt(0·2)) = 2 ; k=1: |1-2|·1/(1+sqrt(2·1)) = 1/(1+√2)
        let v = path_cost(
            &a,
            &b,
            &[3.0, 1.0],
            &[1.0, 2.0],
            &[0.0, 2.0],
            &[2.0, 1.0],
            1.0,
        )
        .unwrap();
        let expected = (2.0 + 1.0 / (1.0 + 2f64.sqrt())) * 0.5;
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn contract_violations() {
        let a = curve(vec![Vec3::x(), Vec3::y()]);
        assert!(path_cost(&a, &a, &[1.0], &[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], 1.0).is_err());
        assert!(path_cost(
            &a,
            &a,
            &[1.0, -1.0],
            &[1.0, 1.0],
            &[0.0, 0.0],
            &[0.0, 0.0],
            1.0
        )
        .is_err());
        assert!(path_cost(
            &a,
            &a,
            &[1.0, 1.0],
            &[1.0, 1.0],
            &[0.0, 0.0],
            &[0.0, 0.0],
            0.0
        )
        .is_err());
    }

    #[test]
    fn morph_ends_on_both_paths() {
        let t = |seed| {
            let p = crate::synth::SynthParams::preset("forked").unwrap();
            crate::PathSet::from_tree("x", &crate::synth::generate(&p, seed))
        };
        let (a, b) = (t(3), t(4));
        let cfg = ElasticConfig::default().with_rho(60);
        let frames = morph_paths(&a.paths[0], &b.paths[1], &cfg).unwrap();
        assert_eq!(frames.len(), cfg.frames);
        let rb = resample(&b.paths[1], 60).unwrap();
        for (x, y) in frames.last().unwrap().iter().zip(&rb.positions) {
            assert!((x - y).norm() < 1e-9);
        }
        let ra = resample(&a.paths[0], 60).unwrap();
        let first = &frames[0];
        for k in 1..first.len() {
            let seg = (first[k] - first[k - 1]).norm();
            assert!((seg - (ra.positions[k] - ra.positions[k - 1]).norm()).abs() < 1e-9);
        }
    }
}
