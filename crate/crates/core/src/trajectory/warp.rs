use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Direction, JointTrajectory, VelocityTrajectory};
use crate::interp::UniformSpline;
use crate::stats::percentile;
use crate::{Error, Result};

/// Speed limits of one joint, °/s; `positive > 0 > negative`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionalCap {
    pub positive: f64,
    pub negative: f64,
}

impl DirectionalCap {
    pub fn symmetric(limit: f64) -> Self {
        DirectionalCap {
            positive: limit,
            negative: -limit,
        }
    }

    /// Magnitude of the cap that applies to velocity `v`.
    pub fn limit_for(&self, v: f64) -> f64 {
        match Direction::of(v) {
            Direction::Positive => self.positive,
            Direction::Negative => -self.negative,
        }
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.negative, self.positive)
    }
}

/// Per-joint, per-direction velocity caps keyed by joint name. Joints
/// without an entry are not limited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VelocityCaps {
    pub caps: BTreeMap<String, DirectionalCap>,
}

impl Default for VelocityCaps {
    /// 99th-percentile ADL speeds: SR 155/−164, EF 211/−222, PS 182/−186,
    /// WF ±300, WD ±102 °/s.
    fn default() -> Self {
        let caps = [
            ("SR", 155.0, -164.0),
            ("EF", 211.0, -222.0),
            ("PS", 182.0, -186.0),
            ("WF", 300.0, -300.0),
            ("WD", 102.0, -102.0),
        ]
        .into_iter()
        .map(|(j, p, n)| {
            (
                j.to_string(),
                DirectionalCap {
                    positive: p,
                    negative: n,
                },
            )
        })
        .collect();
        VelocityCaps { caps }
    }
}

impl VelocityCaps {
    pub fn validate(&self) -> Result<()> {
        for (joint, cap) in &self.caps {
            if !(cap.positive > 0.0 && cap.negative < 0.0) {
                return Err(Error::domain(format!(
                    "cap for {joint} must satisfy positive > 0 > negative, got {} / {}",
                    cap.positive, cap.negative
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, joint: &str) -> Option<&DirectionalCap> {
        self.caps.get(joint)
    }

    /// Caps at the `p`-th percentile of each direction's speeds, pooled over
    /// `trials`. Only samples moving in a direction count towards it; a
    /// direction with no motion gets an infinite cap.
    pub fn from_percentile(trials: &[VelocityTrajectory], joints: &[&str], p: f64) -> Result<Self> {
        let mut caps = BTreeMap::new();
        for &joint in joints {
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for t in trials {
                let values = t
                    .joint_values(joint)
                    .ok_or_else(|| Error::domain(format!("trial {} has no `{joint}` column", t.meta.trial_id())))?;
                for v in values {
                    if v > 0.0 {
                        pos.push(v);
                    } else if v < 0.0 {
                        neg.push(-v);
                    }
                }
            }
            let positive = if pos.is_empty() {
                f64::INFINITY
            } else {
                percentile(&pos, p)?
            };
            let negative = if neg.is_empty() {
                f64::NEG_INFINITY
            } else {
                -percentile(&neg, p)?
            };
            caps.insert(joint.to_string(), DirectionalCap { positive, negative });
        }
        Ok(VelocityCaps { caps })
    }
}

/// Result of [`slow_down_detailed`].
#[derive(Debug, Clone, PartialEq)]
pub struct SlowDown {
    pub trajectory: JointTrajectory,
    /// Source time of every output frame.
    pub source_time: Vec<f64>,
    /// Output duration over input duration; equals the time average of the
    /// warp rate.
    pub duration_ratio: f64,
}

/// Substeps per frame used to integrate the warp rate.
const SUBSTEPS: usize = 16;

/// See [`slow_down_detailed`].
pub fn slow_down(traj: &JointTrajectory, caps: &VelocityCaps) -> Result<JointTrajectory> {
    slow_down_detailed(traj, caps).map(|s| s.trajectory)
}

/// Slows a trajectory so no joint exceeds its cap, without changing the
/// spatial path.
///
/// The warp rate `γ(t) = max(1, maxⱼ |νⱼ(t)| / capⱼ)` is shared by all
/// joints. New time is `t′(t) = ∫γ dt`, integrated on a 16× refined grid from
/// cubic-spline velocities; the output is resampled with the same splines
/// on a uniform grid whose step is the input step adjusted so the grid ends
/// exactly at the warped duration.
pub fn slow_down_detailed(traj: &JointTrajectory, caps: &VelocityCaps) -> Result<SlowDown> {
    caps.validate()?;
    let n = traj.n_frames();
    if n < 3 {
        return Ok(SlowDown {
            trajectory: traj.clone(),
            source_time: traj.time().to_vec(),
            duration_ratio: 1.0,
        });
    }
    let dt = traj.dt();
    let t0 = traj.time()[0];
    let splines: Vec<UniformSpline> = (0..traj.joints().len())
        .map(|c| {
            let col: Vec<f64> = traj.angles().column(c).iter().copied().collect();
            UniformSpline::new(t0, dt, &col)
        })
        .collect();
    let capped: Vec<(usize, DirectionalCap)> = traj
        .joints()
        .iter()
        .enumerate()
        .filter_map(|(c, j)| caps.get(j).map(|cap| (c, *cap)))
        .collect();

    let h = dt / SUBSTEPS as f64;
    let m = (n - 1) * SUBSTEPS + 1;
    let source: Vec<f64> = (0..m).map(|i| t0 + i as f64 * h).collect();
    let gamma: Vec<f64> = source
        .iter()
        .map(|&s| {
            capped.iter().fold(1.0_f64, |g, (c, cap)| {
                let v = splines[*c].derivative(s);
                g.max(v.abs() / cap.limit_for(v))
            })
        })
        .collect();
    if gamma.iter().all(|&g| g == 1.0) {
        return Ok(SlowDown {
            trajectory: traj.clone(),
            source_time: traj.time().to_vec(),
            duration_ratio: 1.0,
        });
    }

    let mut warped = Vec::with_capacity(m);
    warped.push(0.0);
    for i in 1..m {
        warped.push(warped[i - 1] + 0.5 * h * (gamma[i - 1] + gamma[i]));
    }
    let total = warped[m - 1];
    let frames = (total / dt).round() as usize + 1;
    let step = total / (frames - 1) as f64;

    let mut source_time = Vec::with_capacity(frames);
    let mut i = 0usize;
    for k in 0..frames {
        let target = if k + 1 == frames { total } else { k as f64 * step };
        while i + 2 < m && warped[i + 1] < target {
            i += 1;
        }
        // γ is linear on a substep, so t′ is quadratic there
        let (g0, g1) = (gamma[i], gamma[i + 1]);
        let a = 0.5 * (g1 - g0) / h;
        let b = g0;
        let c = warped[i] - target;
        let disc = (b * b - 4.0 * a * c).max(0.0);
        let u = if c >= 0.0 { 0.0 } else { (-2.0 * c) / (b + disc.sqrt()) };
        source_time.push((source[i] + u).min(source[m - 1]));
    }

    let mut angles = DMatrix::zeros(frames, traj.joints().len());
    for (c, spline) in splines.iter().enumerate() {
        for (k, &s) in source_time.iter().enumerate() {
            angles[(k, c)] = spline.value(s);
        }
    }
    let time: Vec<f64> = (0..frames).map(|k| t0 + k as f64 * step).collect();
    Ok(SlowDown {
        trajectory: traj.with_angles(time, angles)?,
        source_time,
        duration_ratio: total / traj.duration(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{differentiate, synthesize_minjerk, TrialMeta};

    fn single(name: &str, angles: Vec<f64>, dt: f64) -> JointTrajectory {
        let n = angles.len();
        JointTrajectory::from_rate(
            0.0,
            dt,
            vec![name.into()],
            DMatrix::from_vec(n, 1, angles),
            TrialMeta::default(),
        )
        .unwrap()
    }

    fn peak(traj: &JointTrajectory, c: usize) -> (f64, f64) {
        let v = differentiate(traj).unwrap();
        v.values
            .column(c)
            .iter()
            .fold((0.0_f64, 0.0_f64), |(p, n), &x| (p.max(x), n.min(x)))
    }

    #[test]
    fn uniform_fast_motion_is_stretched_uniformly() {
        let dt = 0.01;
        let angles: Vec<f64> = (0..101).map(|k| 200.0 * k as f64 * dt).collect();
        let traj = single("WD", angles, dt);
        let out = slow_down_detailed(&traj, &VelocityCaps::default()).unwrap();
        assert!((out.duration_ratio - 200.0 / 102.0).abs() < 1e-9);
        assert!((out.trajectory.duration() - 200.0 / 102.0).abs() < 1e-9);
        let (p, _) = peak(&out.trajectory, 0);
        assert!(p <= 102.0 * 1.001, "{p}");
        assert!((p - 102.0).abs() < 1e-6);
    }

    #[test]
    fn slow_motion_is_untouched() {
        let joints = vec!["EF".to_string(), "WF".to_string()];
        let traj = synthesize_minjerk(
            &joints,
            &[vec![0.0, 0.0], vec![30.0, -20.0]],
            &[2.0],
            100.0,
            TrialMeta::default(),
        )
        .unwrap();
        let out = slow_down(&traj, &VelocityCaps::default()).unwrap();
        assert_eq!(out.n_frames(), traj.n_frames());
        assert!((out.angles() - traj.angles()).amax() < 1e-6);
    }

    #[test]
    fn negative_direction_uses_negative_cap() {
        let dt = 0.01;
        let angles: Vec<f64> = (0..101).map(|k| -300.0 * k as f64 * dt).collect();
        let traj = single("EF", angles, dt);
        let out = slow_down_detailed(&traj, &VelocityCaps::default()).unwrap();
        assert!((out.duration_ratio - 300.0 / 222.0).abs() < 1e-9);
        let (_, n) = peak(&out.trajectory, 0);
        assert!(n >= -222.0 * 1.001);
    }

    #[test]
    fn two_phase_motion_stretches_only_the_fast_phase() {
        let (a, t1, b, t2) = (60.0, 0.4, 10.0, 1.0);
        let traj = synthesize_minjerk(
            &["WD".to_string()],
            &[vec![0.0], vec![a], vec![a + b]],
            &[t1, t2],
            100.0,
            TrialMeta::default(),
        )
        .unwrap();
        let theta = |t: f64| {
            if t <= t1 {
                a * crate::trajectory::minjerk_profile(t / t1)
            } else {
                a + b * crate::trajectory::minjerk_profile((t - t1) / t2)
            }
        };
        let speed = |t: f64| {
            let (amp, dur, s) = if t <= t1 {
                (a, t1, t / t1)
            } else {
                (b, t2, (t - t1) / t2)
            };
            amp / dur * 30.0 * s * s * (1.0 - s) * (1.0 - s)
        };
        // fine trapezoid of the analytic warp rate
        let steps = 140_000;
        let h = (t1 + t2) / steps as f64;
        let gamma = |t: f64| (speed(t) / 102.0).max(1.0);
        let mut fast = 0.0;
        let mut total = 0.0;
        for k in 0..steps {
            let (s0, s1) = (k as f64 * h, (k + 1) as f64 * h);
            let inc = 0.5 * h * (gamma(s0) + gamma(s1));
            total += inc;
            if s1 <= t1 + 1e-12 {
                fast += inc;
            }
        }

        let out = slow_down_detailed(&traj, &VelocityCaps::default()).unwrap();
        assert!(
            (out.trajectory.duration() - total).abs() < 1e-3,
            "{} vs {total}",
            out.trajectory.duration()
        );
        assert!(fast > t1 * 1.2);
        assert!((total - fast - t2).abs() < 1e-9);
        for (k, &s) in out.source_time.iter().enumerate() {
            assert!((out.trajectory.angles()[(k, 0)] - theta(s)).abs() < 1e-3);
        }
        let (p, _) = peak(&out.trajectory, 0);
        assert!(p <= 102.0 * 1.001, "{p}");
    }

    #[test]
    fn duration_ratio_is_mean_warp_rate_and_never_shortens() {
        let joints = vec!["EF".to_string(), "PS".to_string()];
        let traj = synthesize_minjerk(
            &joints,
            &[vec![0.0, 0.0], vec![90.0, -70.0], vec![85.0, -60.0]],
            &[0.5, 0.8],
            100.0,
            TrialMeta::default(),
        )
        .unwrap();
        let out = slow_down_detailed(&traj, &VelocityCaps::default()).unwrap();
        assert!(out.duration_ratio >= 1.0);
        assert!((out.trajectory.duration() / traj.duration() - out.duration_ratio).abs() < 1e-6);
        assert!(out.source_time.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*out.source_time.last().unwrap(), traj.duration());
    }

    #[test]
    fn idempotent() {
        let joints = vec!["WD".to_string(), "WF".to_string()];
        let traj = synthesize_minjerk(
            &joints,
            &[vec![0.0, 0.0], vec![40.0, -60.0], vec![-10.0, 20.0]],
            &[0.3, 0.4],
            100.0,
            TrialMeta::default(),
        )
        .unwrap();
        let caps = VelocityCaps::default();
        let once = slow_down(&traj, &caps).unwrap();
        // re-splining the output overshoots slightly where γ switches on, so
        // a second pass stretches by a few parts in 10⁴ at most
        let again = slow_down_detailed(&once, &caps).unwrap();
        assert!(again.duration_ratio < 1.001, "{}", again.duration_ratio);
        assert!((once.angles() - again.trajectory.angles()).amax() < 0.05);
    }

    #[test]
    fn invalid_caps_error() {
        let mut caps = VelocityCaps::default();
        caps.caps.insert(
            "WF".into(),
            DirectionalCap {
                positive: 0.0,
                negative: -1.0,
            },
        );
        let traj = single("WF", vec![0.0, 1.0, 2.0, 3.0], 0.01);
        assert!(slow_down(&traj, &caps).is_err());
    }

    #[test]
    fn caps_from_percentile_use_directional_samples() {
        let v = VelocityTrajectory {
            time: vec![0.0, 0.1, 0.2, 0.3],
            joints: vec!["WF".into()],
            values: DMatrix::from_column_slice(4, 1, &[10.0, 20.0, -5.0, 0.0]),
            meta: TrialMeta::default(),
        };
        let caps = VelocityCaps::from_percentile(&[v], &["WF"], 100.0).unwrap();
        assert_eq!(caps.caps["WF"].positive, 20.0);
        assert_eq!(caps.caps["WF"].negative, -5.0);
    }
}
