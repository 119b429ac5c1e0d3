//! Deterministic synthetic neurons: randomly perturbed branching trees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::swc::{NeuronTree, SwcRecord};
use crate::Vec3;

/// Shape parameters of a synthetic arbor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    /// Primary branches leaving the root.
    pub stems: usize,
    /// Maximum number of bifurcation levels below a stem.
    pub depth: usize,
    /// Probability that a branch end bifurcates (below `depth`).
    pub branch_prob: f64,
    /// Samples per branch.
    pub steps: usize,
    /// Mean distance between consecutive samples, µm.
    pub step_length: f64,
    /// Direction noise added at every step.
    pub jitter: f64,
    /// Half-angle between the two daughters of a bifurcation, radians.
    pub spread: f64,
}

impl SynthParams {
    /// Five shape families that are far apart under the elastic distance.
    pub fn presets() -> Vec<(&'static str, SynthParams)> {
        let base = SynthParams {
            stems: 1,
            depth: 0,
            branch_prob: 1.0,
            steps: 5,
            step_length: 1.0,
            jitter: 0.15,
            spread: 0.5,
        };
        vec![
            (
                "unbranched",
                SynthParams {
                    depth: 0,
                    steps: 40,
                    step_length: 2.0,
                    ..base.clone()
                },
            ),
            (
                "forked",
                SynthParams {
                    depth: 1,
                    steps: 16,
                    step_length: 2.0,
                    ..base.clone()
                },
            ),
            (
                "two_level",
                SynthParams {
                    depth: 2,
                    steps: 10,
                    step_length: 1.5,
                    ..base.clone()
                },
            ),
            (
                "three_level",
                SynthParams {
                    depth: 3,
                    steps: 7,
                    step_length: 1.5,
                    spread: 0.6,
                    ..base.clone()
                },
            ),
            (
                "four_level",
                SynthParams {
                    depth: 4,
                    steps: 5,
                    step_length: 1.0,
                    spread: 0.7,
                    ..base.clone()
                },
            ),
        ]
    }

    pub fn preset(name: &str) -> Option<SynthParams> {
        Self::presets()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, p)| p)
    }
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn perpendicular(dir: Vec3, rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let p = unit_vector(rng).cross(&dir);
        if p.norm() > 1e-3 {
            return p.normalize();
        }
    }
}

/// SWC records of one synthetic neuron, root at the origin.
pub fn generate_records(params: &SynthParams, seed: u64) -> Vec<SwcRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = vec![SwcRecord {
        id: 1,
        structure_code: 1,
        x: 0.0,
        y: 0.0,
        z: 0.0,
        radius: 5.0,
        parent_id: -1,
    }];
    // (parent id, start position, direction, level)
    let mut pending: Vec<(i64, Vec3, Vec3, usize)> = (0..params.stems)
        .map(|_| (1, Vec3::zeros(), unit_vector(&mut rng), 0))
        .collect();
    pending.reverse();
    while let Some((mut parent, mut pos, mut dir, level)) = pending.pop() {
        for _ in 0..params.steps.max(1) {
            dir = (dir + unit_vector(&mut rng) * params.jitter).normalize();
            let len = params.step_length * rng.random_range(0.8..1.2);
            pos += dir * len;
            let id = records.len() as i64 + 1;
            records.push(SwcRecord {
                id,
                structure_code: 3,
                x: pos.x,
                y: pos.y,
                z: pos.z,
                radius: 0.5,
                parent_id: parent,
            });
            parent = id;
        }
        if level < params.depth && rng.random_bool(params.branch_prob.clamp(0.0, 1.0)) {
            let axis = perpendicular(dir, &mut rng);
            let left = crate::srv::Rotation3::from_axis_angle(axis, params.spread).apply(dir);
            let right = crate::srv::Rotation3::from_axis_angle(axis, -params.spread).apply(dir);
            // Pushed in reverse so the left daughter follows first in file order.
            pending.push((parent, pos, right, level + 1));
            pending.push((parent, pos, left, level + 1));
        }
    }
    records
}

pub fn generate(params: &SynthParams, seed: u64) -> NeuronTree {
    NeuronTree::from_records(&generate_records(params, seed)).expect("generated trees are valid")
}
