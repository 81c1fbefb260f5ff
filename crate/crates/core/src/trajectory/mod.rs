//! Joint-angle trajectories: ingestion, filtering, differentiation,
//! outlier screening, time warping and kinematic summaries.

mod filter;
pub(crate) mod screen;
mod summary;
mod warp;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::JointId;
use crate::{Error, Result};

pub use filter::{lowpass_filter, ButterworthLowpass};
pub use screen::{screen_velocity_outliers, Direction, Exclusion, ExclusionRule, Partition};
pub use summary::{summarize_kinematics, JointSummary, KinematicSummary, DEFAULT_VELOCITY_PERCENTILES};
pub use warp::{slow_down, slow_down_detailed, DirectionalCap, SlowDown, VelocityCaps};

/// Uniform-time tolerance, s.
pub const TIME_TOLERANCE: f64 = 1e-9;

/// ADL task categories I–X.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
    IX,
    X,
}

impl Task {
    pub const ALL: [Task; 10] = [
        Task::I,
        Task::II,
        Task::III,
        Task::IV,
        Task::V,
        Task::VI,
        Task::VII,
        Task::VIII,
        Task::IX,
        Task::X,
    ];

    pub fn roman(self) -> &'static str {
        ["I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X"][self as usize]
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.roman())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.roman() == s.trim())
            .ok_or_else(|| Error::domain(format!("unknown task `{s}` (expected I..X)")))
    }
}

/// Trial metadata carried in `# key=value` lines of a trajectory file.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrialMeta {
    pub task: Option<Task>,
    pub subject: Option<String>,
    pub repetition: Option<u32>,
    /// Any other `key=value` pairs, e.g. `object=Mug`.
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

impl TrialMeta {
    pub fn new(task: Task, subject: impl Into<String>, repetition: u32) -> Self {
        TrialMeta {
            task: Some(task),
            subject: Some(subject.into()),
            repetition: Some(repetition),
            extra: BTreeMap::new(),
        }
    }

    /// `task/subject/repetition`, with `-` for missing parts.
    pub fn trial_id(&self) -> String {
        format!(
            "{}/{}/{}",
            self.task.map_or("-".to_string(), |t| t.to_string()),
            self.subject.as_deref().unwrap_or("-"),
            self.repetition.map_or("-".to_string(), |r| r.to_string()),
        )
    }
}

/// Uniformly sampled joint angles in degrees, frames × joints.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory {
    time: Vec<f64>,
    joints: Vec<String>,
    angles: DMatrix<f64>,
    pub meta: TrialMeta,
}

impl JointTrajectory {
    pub fn new(time: Vec<f64>, joints: Vec<String>, angles: DMatrix<f64>, meta: TrialMeta) -> Result<Self> {
        validate_grid(&time)?;
        if angles.nrows() != time.len() || angles.ncols() != joints.len() {
            return Err(Error::domain(format!(
                "angle matrix is {}x{}, expected {}x{}",
                angles.nrows(),
                angles.ncols(),
                time.len(),
                joints.len()
            )));
        }
        if let Some((row, _)) = angles
            .row_iter()
            .enumerate()
            .find(|(_, r)| r.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Parse {
                row: row + 1,
                msg: "non-finite angle".into(),
            });
        }
        Ok(JointTrajectory {
            time,
            joints,
            angles,
            meta,
        })
    }

    /// Trajectory sampled at `start + k·dt`.
    pub fn from_rate(start: f64, dt: f64, joints: Vec<String>, angles: DMatrix<f64>, meta: TrialMeta) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::domain(format!("timestep must be positive, got {dt}")));
        }
        let time = (0..angles.nrows()).map(|k| start + k as f64 * dt).collect();
        JointTrajectory::new(time, joints, angles, meta)
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    pub fn joints(&self) -> &[String] {
        &self.joints
    }

    pub fn angles(&self) -> &DMatrix<f64> {
        &self.angles
    }

    pub fn n_frames(&self) -> usize {
        self.time.len()
    }

    pub fn dt(&self) -> f64 {
        grid_step(&self.time)
    }

    pub fn duration(&self) -> f64 {
        self.time.last().unwrap_or(&0.0) - self.time.first().unwrap_or(&0.0)
    }

    pub fn column(&self, joint: &str) -> Option<usize> {
        self.joints.iter().position(|j| j == joint)
    }

    /// Angles of one joint, degrees.
    pub fn joint_angles(&self, joint: &str) -> Option<Vec<f64>> {
        self.column(joint)
            .map(|c| self.angles.column(c).iter().copied().collect())
    }

    /// Column indices of `chain_joints` in this trajectory.
    pub fn columns_for(&self, chain_joints: &[JointId]) -> Result<Vec<usize>> {
        chain_joints
            .iter()
            .map(|j| {
                self.column(j.name())
                    .ok_or_else(|| Error::domain(format!("trajectory has no `{}` column", j.name())))
            })
            .collect()
    }

    pub(crate) fn with_angles(&self, time: Vec<f64>, angles: DMatrix<f64>) -> Result<Self> {
        JointTrajectory::new(time, self.joints.clone(), angles, self.meta.clone())
    }

    /// CSV text in the format read by [`parse_trajectory`]; values use the
    /// shortest representation that round-trips exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        write_meta(&mut out, &self.meta);
        out.push_str("time");
        for j in &self.joints {
            out.push(',');
            out.push_str(j);
        }
        out.push('\n');
        for (k, t) in self.time.iter().enumerate() {
            out.push_str(&t.to_string());
            for c in 0..self.joints.len() {
                out.push(',');
                out.push_str(&self.angles[(k, c)].to_string());
            }
            out.push('\n');
        }
        out
    }
}

fn write_meta(out: &mut String, meta: &TrialMeta) {
    if let Some(t) = meta.task {
        out.push_str(&format!("# task={t}\n"));
    }
    if let Some(s) = &meta.subject {
        out.push_str(&format!("# subject={s}\n"));
    }
    if let Some(r) = meta.repetition {
        out.push_str(&format!("# repetition={r}\n"));
    }
    for (k, v) in &meta.extra {
        out.push_str(&format!("# {k}={v}\n"));
    }
}

pub(crate) fn validate_grid(time: &[f64]) -> Result<()> {
    if time.is_empty() {
        return Err(Error::domain("trajectory has no frames"));
    }
    if let Some(k) = time.iter().position(|t| !t.is_finite()) {
        return Err(Error::Parse {
            row: k + 1,
            msg: "non-finite time".into(),
        });
    }
    if time.len() < 2 {
        return Ok(());
    }
    let dt = grid_step(time);
    // loose enough for time columns written with 6 significant digits
    let tolerance = TIME_TOLERANCE.max(0.05 * dt);
    for k in 1..time.len() {
        let step = time[k] - time[k - 1];
        if step <= 0.0 {
            return Err(Error::Parse {
                row: k + 1,
                msg: format!("time is not strictly increasing ({} after {})", time[k], time[k - 1]),
            });
        }
        let expected = time[0] + k as f64 * dt;
        if (time[k] - expected).abs() > tolerance {
            return Err(Error::Parse {
                row: k + 1,
                msg: format!("non-uniform time: {} is off the {dt} s grid", time[k]),
            });
        }
    }
    Ok(())
}

fn grid_step(time: &[f64]) -> f64 {
    if time.len() < 2 {
        return 0.0;
    }
    (time[time.len() - 1] - time[0]) / (time.len() - 1) as f64
}

/// Reads a trajectory file; see [`parse_trajectory`].
pub fn load_trajectory(path: impl AsRef<Path>) -> Result<JointTrajectory> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        row: 0,
        msg: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_trajectory(&text)
}

/// Parses the trajectory CSV: `# key=value` metadata lines, a
/// `time,<joint>,...` header, then one frame per row (s, degrees). All seven
/// chain joints must be present. Error rows count data rows from 1.
pub fn parse_trajectory(text: &str) -> Result<JointTrajectory> {
    let mut meta = TrialMeta::default();
    let mut header: Option<Vec<String>> = None;
    let mut time = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut row = 0usize;

    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                let (k, v) = (k.trim(), v.trim());
                match k {
                    "task" => meta.task = Some(v.parse()?),
                    "subject" => meta.subject = Some(v.to_string()),
                    "repetition" => {
                        meta.repetition = Some(v.parse().map_err(|_| Error::Parse {
                            row: 0,
                            msg: format!("repetition `{v}` is not an integer"),
                        })?)
                    }
                    _ => {
                        meta.extra.insert(k.to_string(), v.to_string());
                    }
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let Some(cols) = &header else {
            if fields.first() != Some(&"time") {
                return Err(Error::Parse {
                    row: 0,
                    msg: "header must start with `time`".into(),
                });
            }
            let names: Vec<String> = fields[1..].iter().map(|s| s.to_string()).collect();
            for j in JointId::ALL {
                if !names.iter().any(|n| n == j.name()) {
                    return Err(Error::Parse {
                        row: 0,
                        msg: format!("missing required joint column `{}`", j.name()),
                    });
                }
            }
            header = Some(names);
            continue;
        };
        row += 1;
        if fields.len() != cols.len() + 1 {
            return Err(Error::Parse {
                row,
                msg: format!("expected {} fields, found {}", cols.len() + 1, fields.len()),
            });
        }
        let mut parsed = Vec::with_capacity(fields.len());
        for f in &fields {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                row,
                msg: format!("`{f}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    msg: format!("non-finite value `{f}`"),
                });
            }
            parsed.push(v);
        }
        time.push(parsed[0]);
        values.extend_from_slice(&parsed[1..]);
    }

    let joints = header.ok_or(Error::Parse {
        row: 0,
        msg: "missing header".into(),
    })?;
    if time.is_empty() {
        return Err(Error::Parse {
            row: 0,
            msg: "no data rows".into(),
        });
    }
    let angles = DMatrix::from_row_slice(time.len(), joints.len(), &values);
    JointTrajectory::new(time, joints, angles, meta)
}

/// Joint velocities in °/s, same shape as the source trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityTrajectory {
    pub time: Vec<f64>,
    pub joints: Vec<String>,
    pub values: DMatrix<f64>,
    pub meta: TrialMeta,
}

impl VelocityTrajectory {
    pub fn column(&self, joint: &str) -> Option<usize> {
        self.joints.iter().position(|j| j == joint)
    }

    pub fn joint_values(&self, joint: &str) -> Option<Vec<f64>> {
        self.column(joint)
            .map(|c| self.values.column(c).iter().copied().collect())
    }
}

/// Second-order finite differences: central in the interior, three-point
/// one-sided at both ends. Exact for polynomials up to degree two.
pub fn differentiate_series(x: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 3 {
        return Err(Error::domain(format!(
            "differentiation needs at least 3 frames, got {n}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::domain(format!("timestep must be positive, got {dt}")));
    }
    let mut d = vec![0.0; n];
    let inv = 1.0 / (2.0 * dt);
    d[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) * inv;
    for k in 1..n - 1 {
        d[k] = (x[k + 1] - x[k - 1]) * inv;
    }
    d[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) * inv;
    Ok(d)
}

pub(crate) fn differentiate_matrix(m: &DMatrix<f64>, dt: f64) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for c in 0..m.ncols() {
        let col: Vec<f64> = m.column(c).iter().copied().collect();
        let d = differentiate_series(&col, dt)?;
        out.column_mut(c).copy_from_slice(&d);
    }
    Ok(out)
}

/// Joint velocities of a trajectory.
pub fn differentiate(traj: &JointTrajectory) -> Result<VelocityTrajectory> {
    let values = differentiate_matrix(traj.angles(), traj.dt())?;
    Ok(VelocityTrajectory {
        time: traj.time.clone(),
        joints: traj.joints.clone(),
        values,
        meta: traj.meta.clone(),
    })
}

/// Minimum-jerk position profile `10s³ − 15s⁴ + 6s⁵` on `s ∈ [0, 1]`.
pub fn minjerk_profile(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

/// Minimum-jerk interpolation through `keyposes` (degrees) with segment
/// `durations` (s), sampled at `sample_rate` Hz. Velocity and acceleration
/// vanish at every keypose.
pub fn synthesize_minjerk(
    joints: &[String],
    keyposes: &[Vec<f64>],
    durations: &[f64],
    sample_rate: f64,
    meta: TrialMeta,
) -> Result<JointTrajectory> {
    if keyposes.len() < 2 {
        return Err(Error::domain("need at least two keyposes"));
    }
    if durations.len() != keyposes.len() - 1 {
        return Err(Error::domain(format!(
            "{} keyposes need {} durations, got {}",
            keyposes.len(),
            keyposes.len() - 1,
            durations.len()
        )));
    }
    if let Some(k) = keyposes.iter().position(|p| p.len() != joints.len()) {
        return Err(Error::domain(format!(
            "keypose {k} has {} angles for {} joints",
            keyposes[k].len(),
            joints.len()
        )));
    }
    if durations.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::domain("durations must be positive"));
    }
    if !(sample_rate > 0.0) {
        return Err(Error::domain("sample rate must be positive"));
    }
    let dt = 1.0 / sample_rate;
    let total: f64 = durations.iter().sum();
    let n = (total * sample_rate).round() as usize + 1;
    let mut starts = Vec::with_capacity(durations.len());
    let mut acc = 0.0;
    for d in durations {
        starts.push(acc);
        acc += d;
    }
    let mut angles = DMatrix::zeros(n, joints.len());
    for k in 0..n {
        let t = (k as f64 * dt).min(total);
        let seg = starts.iter().rposition(|&s| s <= t).unwrap_or(0);
        let s = (t - starts[seg]) / durations[seg];
        let w = minjerk_profile(s);
        let (a, b) = (&keyposes[seg], &keyposes[seg + 1]);
        for j in 0..joints.len() {
            angles[(k, j)] = a[j] + (b[j] - a[j]) * w;
        }
    }
    JointTrajectory::from_rate(0.0, dt, joints.to_vec(), angles, meta)
}

/// Names of the seven chain joints, in chain order.
pub fn chain_joint_names() -> Vec<String> {
    JointId::ALL.iter().map(|j| j.name().to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(rows: &[&str]) -> String {
        let mut s = String::from(
            "# task=III\n# subject=S01\n# repetition=2\ntime,shoulder_plane,shoulder_elev,SR,EF,PS,WF,WD\n",
        );
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    #[test]
    fn loads_three_frames() {
        let t = parse_trajectory(&csv(&[
            "0,0,0,0,10.5,0,0,0",
            "0.01,0,0,0,11.25,0,0,0",
            "0.02,0,0,0,12,0,0,0",
        ]))
        .unwrap();
        assert_eq!(t.angles().shape(), (3, 7));
        assert_eq!(t.meta.task, Some(Task::III));
        assert_eq!(t.meta.subject.as_deref(), Some("S01"));
        assert_eq!(t.meta.repetition, Some(2));
        assert_eq!(t.angles()[(1, 3)], 11.25);
        let again = parse_trajectory(&t.to_csv()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn nan_reports_row() {
        let rows: Vec<String> = (0..15)
            .map(|k| {
                let v = if k == 11 { "NaN".to_string() } else { "1".to_string() };
                format!("{},0,0,0,{v},0,0,0", k as f64 * 0.01)
            })
            .collect();
        let refs: Vec<&str> = rows.iter().map(String::as_str).collect();
        match parse_trajectory(&csv(&refs)) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_uniform_time_is_rejected() {
        let err = parse_trajectory(&csv(&[
            "0,0,0,0,0,0,0,0",
            "0.01,0,0,0,0,0,0,0",
            "0.02,0,0,0,0,0,0,0",
            "0.035,0,0,0,0,0,0,0",
            "0.04,0,0,0,0,0,0,0",
        ]))
        .unwrap_err();
        assert!(matches!(err, Error::Parse { row: 4, .. }), "{err}");
        assert!(err.to_string().contains("non-uniform"));
    }

    #[test]
    fn three_sample_gap_is_rejected() {
        let err = parse_trajectory(&csv(&["0,0,0,0,0,0,0,0", "0.01,0,0,0,0,0,0,0", "0.03,0,0,0,0,0,0,0"])).unwrap_err();
        assert!(err.to_string().contains("non-uniform"), "{err}");
    }

    #[test]
    fn missing_joint_is_rejected() {
        let text = "time,SR,EF,PS,WF,WD\n0,0,0,0,0,0\n";
        assert!(parse_trajectory(text)
            .unwrap_err()
            .to_string()
            .contains("shoulder_plane"));
    }

    #[test]
    fn differentiate_exact_for_low_order_polynomials() {
        let dt = 0.01;
        let ramp: Vec<f64> = (0..50).map(|k| 3.0 + 10.0 * k as f64 * dt).collect();
        for v in differentiate_series(&ramp, dt).unwrap() {
            assert!((v - 10.0).abs() < 1e-9);
        }
        let quad: Vec<f64> = (0..50).map(|k| (k as f64 * dt).powi(2)).collect();
        for (k, v) in differentiate_series(&quad, dt).unwrap().iter().enumerate() {
            assert!((v - 2.0 * k as f64 * dt).abs() < 1e-9);
        }
        for v in differentiate_series(&[4.0; 10], dt).unwrap() {
            assert_eq!(v, 0.0);
        }
        assert!(differentiate_series(&[1.0, 2.0], dt).is_err());
    }

    #[test]
    fn minjerk_midpoint_and_peak() {
        let joints = vec!["EF".to_string()];
        let (a, t) = (60.0, 2.0);
        let traj = synthesize_minjerk(&joints, &[vec![0.0], vec![a]], &[t], 100.0, TrialMeta::default()).unwrap();
        assert_eq!(traj.n_frames(), 201);
        assert!((traj.angles()[(100, 0)] - a / 2.0).abs() < 1e-12);
        assert!((traj.angles()[(200, 0)] - a).abs() < 1e-12);
        let v = differentiate(&traj).unwrap();
        let peak = v.values.column(0).iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        // central difference of a quintic: x' + h²/6·x''' + h⁴/120·x⁽⁵⁾
        let h: f64 = 0.01;
        let expected = 1.875 * a / t - h * h / 6.0 * 30.0 * a / t.powi(3) + h.powi(4) / 120.0 * 720.0 * a / t.powi(5);
        assert!((peak - expected).abs() < 1e-9, "{peak} vs {expected}");
    }

    #[test]
    fn minjerk_rests_at_keyposes() {
        let joints = vec!["a".to_string(), "b".to_string()];
        let kp = vec![vec![0.0, 10.0], vec![30.0, -20.0], vec![5.0, 5.0]];
        let traj = synthesize_minjerk(&joints, &kp, &[1.0, 0.5], 200.0, TrialMeta::default()).unwrap();
        // analytic derivative of the profile vanishes at s = 0 and s = 1
        let dp = |s: f64| 30.0 * s * s * (1.0 - s) * (1.0 - s);
        assert!(dp(0.0).abs() < 1e-9 && dp(1.0).abs() < 1e-9);
        assert!((traj.angles()[(200, 0)] - 30.0).abs() < 1e-12);
        assert!((traj.angles()[(300, 1)] - 5.0).abs() < 1e-12);
        let same = synthesize_minjerk(
            &joints,
            &[vec![1.0, 2.0], vec![1.0, 2.0]],
            &[1.0],
            50.0,
            TrialMeta::default(),
        )
        .unwrap();
        assert!(same.angles().row_iter().all(|r| r[0] == 1.0 && r[1] == 2.0));
        assert!(synthesize_minjerk(
            &joints,
            &[vec![1.0], vec![2.0, 3.0]],
            &[1.0],
            50.0,
            TrialMeta::default()
        )
        .is_err());
    }
}
