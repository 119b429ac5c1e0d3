//! Square-root velocity (SRV) representation, Kabsch registration, and
//! straight-line morphing between registered curves.
//!
//! Samples are treated as uniformly spaced in `t ∈ [0, 1]`, so an `m`-point
//! polyline has `m - 1` forward-difference velocities with `dt = 1 / (m - 1)`
//! and `q_k = v_k / sqrt(|v_k|)`. Curves are not rescaled to unit length,
//! which keeps the SRV space flat: `∫ |q|² dt` is the curve length and
//! geodesics are straight lines.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct SrvCurve {
    pub samples: Vec<Vec3>,
    pub dt: f64,
    /// First point of the source polyline.
    pub origin: Vec3,
}

impl SrvCurve {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `Σ |q_k|² dt`, equal to the source polyline length.
    pub fn squared_norm(&self) -> f64 {
        self.samples.iter().map(|q| q.norm_squared()).sum::<f64>() * self.dt
    }

    pub fn rotated(&self, r: &Rotation3) -> Self {
        Self {
            samples: self.samples.iter().map(|q| r.0 * q).collect(),
            dt: self.dt,
            origin: self.origin,
        }
    }

    /// Sum of squared sample differences (no `dt` factor).
    pub fn residual(&self, other: &Self) -> f64 {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm_squared())
            .sum()
    }
}

/// SRV transform of a polyline sampled uniformly in `t`.
pub fn srv_transform(points: &[Vec3]) -> Result<SrvCurve> {
    if points.len() < 2 {
        return Err(Error::Contract(
            "SRV transform needs at least two samples".into(),
        ));
    }
    let segments = (points.len() - 1) as f64;
    let dt = 1.0 / segments;
    let samples = points
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let v = (w[1] - w[0]) * segments;
            let speed = v.norm();
            if speed == 0.0 {
                Err(Error::ZeroVelocity { index: k })
            } else {
                Ok(v / speed.sqrt())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SrvCurve {
        samples,
        dt,
        origin: points[0],
    })
}

/// Integrates `v = q |q|` from `start`, giving `len + 1` points.
pub fn srv_inverse(q: &SrvCurve, start: Vec3) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(q.len() + 1);
    let mut p = start;
    out.push(p);
    for s in &q.samples {
        p += s * (s.norm() * q.dt);
        out.push(p);
    }
    out
}

/// A proper rotation of R³.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3(pub Matrix3<f64>);

impl Rotation3 {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Rotation by `angle` radians about the unit `axis`.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let axis = nalgebra::Unit::new_normalize(axis);
        Self(*nalgebra::Rotation3::from_axis_angle(&axis, angle).matrix())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }
}

/// Result of a Kabsch fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KabschFit {
    pub rotation: Rotation3,
    /// Set when the cross-covariance vanished and identity was returned.
    pub degenerate: bool,
}

/// Rotation `R` minimizing `Σ |R m_k - f_k|²` over proper rotations.
///
/// No centroids are removed: SRV samples are already translation free.
pub fn kabsch(moving: &SrvCurve, fixed: &SrvCurve) -> Result<KabschFit> {
    if moving.len() != fixed.len() {
        return Err(Error::Contract(format!(
            "kabsch on curves of {} and {} samples",
            moving.len(),
            fixed.len()
        )));
    }
    let mut h = Matrix3::zeros();
    for (m, f) in moving.samples.iter().zip(&fixed.samples) {
        h += m * f.transpose();
    }
    if h.iter().all(|x| *x == 0.0) {
        return Ok(KabschFit {
            rotation: Rotation3::identity(),
            degenerate: true,
        });
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^T").transpose();
    let d = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d));
    Ok(KabschFit {
        rotation: Rotation3(v * correction * u.transpose()),
        degenerate: false,
    })
}

/// Rotates `moving` onto `fixed`.
pub fn register(moving: &SrvCurve, fixed: &SrvCurve) -> Result<SrvCurve> {
    let fit = kabsch(moving, fixed)?;
    Ok(moving.rotated(&fit.rotation))
}

/// Straight-line interpolation in SRV space, inverted back to polylines.
///
/// Frame `f` uses `τ = f / (frames - 1)`; the start point is interpolated
/// linearly as well.
pub fn morph(
    from: &SrvCurve,
    to: &SrvCurve,
    frames: usize,
    start_from: Vec3,
    start_to: Vec3,
) -> Result<Vec<Vec<Vec3>>> {
    if from.len() != to.len() {
        return Err(Error::Contract(format!(
            "morph between curves of {} and {} samples",
            from.len(),
            to.len()
        )));
    }
    if frames < 2 {
        return Err(Error::Contract(format!(
            "morph needs at least 2 frames, got {frames}"
        )));
    }
    let last = (frames - 1) as f64;
    Ok((0..frames)
        .map(|f| {
            let tau = f as f64 / last;
            let q = SrvCurve {
                samples: from
                    .samples
                    .iter()
                    .zip(&to.samples)
                    .map(|(a, b)| a * (1.0 - tau) + b * tau)
                    .collect(),
                dt: from.dt,
                origin: from.origin,
            };
            srv_inverse(&q, start_from * (1.0 - tau) + start_to * tau)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(len: f64, m: usize) -> Vec<Vec3> {
        (0..m)
            .map(|k| Vec3::new(len * k as f64 / (m - 1) as f64, 0.0, 0.0))
            .collect()
    }

    fn wiggle(m: usize) -> Vec<Vec3> {
        (0..m)
            .map(|k| {
                let t = k as f64 * 0.37;
                Vec3::new(t, t.sin() * 2.0, (0.5 * t).cos() + 0.1 * t * t)
            })
            .collect()
    }

    #[test]
    fn straight_line_is_constant() {
        let q = srv_transform(&line(4.0, 9)).unwrap();
        for s in &q.samples {
            assert!((s - Vec3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
            assert!((s.norm_squared() - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn translation_invariant() {
        let p = wiggle(20);
        let shifted: Vec<Vec3> = p.iter().map(|v| v + Vec3::new(3.0, -7.0, 11.0)).collect();
        let a = srv_transform(&p).unwrap();
        let b = srv_transform(&shifted).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn single_segment_inverse() {
        let q = SrvCurve {
            samples: vec![Vec3::new(0.0, 3.0_f64.sqrt(), 0.0)],
            dt: 1.0,
            origin: Vec3::zeros(),
        };
        let p = srv_inverse(&q, Vec3::new(1.0, 1.0, 1.0));
        assert_eq!(p.len(), 2);
        assert!(((p[1] - p[0]).norm() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_velocity_rejected() {
        let p = vec![
            Vec3::zeros(),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
        ];
        assert!(matches!(
            srv_transform(&p),
            Err(Error::ZeroVelocity { index: 1 })
        ));
    }

    #[test]
    fn self_registration_is_identity() {
        let q = srv_transform(&wiggle(30)).unwrap();
        let fit = kabsch(&q, &q).unwrap();
        assert!((fit.rotation.0 - Matrix3::identity()).abs().max() < 1e-12);
        let r = register(&q, &q).unwrap();
        assert!(r.residual(&q) < 1e-20);
    }

    #[test]
    fn recovers_quarter_turn() {
        let fixed = srv_transform(&wiggle(25)).unwrap();
        let known = Rotation3::from_axis_angle(Vec3::z(), std::f64::consts::FRAC_PI_2);
        let moving = fixed.rotated(&known.transpose());
        let fit = kabsch(&moving, &fixed).unwrap();
        assert!(!fit.degenerate);
        assert!((fit.rotation.0 - known.0).abs().max() < 1e-9);
    }

    #[test]
    fn degenerate_covariance() {
        let z = SrvCurve {
            samples: vec![Vec3::zeros(); 3],
            dt: 0.5,
            origin: Vec3::zeros(),
        };
        let fit = kabsch(&z, &z).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.rotation, Rotation3::identity());
    }

    #[test]
    fn morph_endpoints_and_self() {
        let a = srv_transform(&wiggle(12)).unwrap();
        let frames = morph(&a, &a, 2, Vec3::zeros(), Vec3::zeros()).unwrap();
        assert_eq!(frames.len(), 2);
        let frames = morph(&a, &a, 5, a.origin, a.origin).unwrap();
        for f in &frames[1..] {
            for (x, y) in f.iter().zip(&frames[0]) {
                assert!((x - y).norm() < 1e-12);
            }
        }
        let original = wiggle(12);
        for (x, y) in frames[0].iter().zip(&original) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn morph_rejects_bad_input() {
        let a = srv_transform(&wiggle(12)).unwrap();
        let b = srv_transform(&wiggle(13)).unwrap();
        assert!(morph(&a, &b, 3, Vec3::zeros(), Vec3::zeros()).is_err());
        assert!(morph(&a, &a, 1, Vec3::zeros(), Vec3::zeros()).is_err());
    }
}
