use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{differentiate, JointTrajectory, Task};
use crate::chain::ReportJoint;
use crate::stats::{percentile, percentiles};
use crate::{Error, Result};

pub const DEFAULT_VELOCITY_PERCENTILES: [f64; 4] = [50.0, 75.0, 99.0, 100.0];

/// Angle and velocity statistics of one joint over a group of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSummary {
    /// `None` for the group of all trials.
    pub task: Option<Task>,
    pub joint: String,
    pub min: f64,
    pub max: f64,
    pub rom: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Percentiles of positive velocities, °/s, one per requested level.
    pub velocity_positive: Vec<f64>,
    /// Percentiles of negative velocity magnitudes, reported negative.
    pub velocity_negative: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicSummary {
    pub percentiles: Vec<f64>,
    pub rows: Vec<JointSummary>,
}

impl KinematicSummary {
    pub fn get(&self, task: Option<Task>, joint: &str) -> Option<&JointSummary> {
        self.rows.iter().find(|r| r.task == task && r.joint == joint)
    }

    /// Header plus one row per summary; `fmt` renders numbers.
    pub fn to_csv_with(&self, fmt: impl Fn(f64) -> String) -> String {
        let mut out = String::from("task,joint,min,max,rom,q1,median,q3");
        for p in &self.percentiles {
            out.push_str(&format!(",vel_pos_p{p},vel_neg_p{p}"));
        }
        out.push('\n');
        for r in &self.rows {
            let task = r.task.map_or("all".to_string(), |t| t.to_string());
            out.push_str(&format!("{task},{}", r.joint));
            for v in [r.min, r.max, r.rom, r.q1, r.median, r.q3] {
                out.push(',');
                out.push_str(&fmt(v));
            }
            for (p, n) in r.velocity_positive.iter().zip(&r.velocity_negative) {
                out.push(',');
                out.push_str(&fmt(*p));
                out.push(',');
                out.push_str(&fmt(*n));
            }
            out.push('\n');
        }
        out
    }
}

/// Angle range, quartiles and directional velocity percentiles of every
/// reporting joint, pooled over all trials and over the trials of each task.
/// Samples of a group are concatenated across trials; a direction with no
/// motion reports zeros.
pub fn summarize_kinematics(trials: &[JointTrajectory], levels: &[f64]) -> Result<KinematicSummary> {
    if trials.is_empty() {
        return Err(Error::domain("no trials to summarize"));
    }
    if let Some(p) = levels.iter().find(|p| !(0.0..=100.0).contains(*p)) {
        return Err(Error::domain(format!("percentile {p} outside [0, 100]")));
    }
    let velocities = trials.iter().map(differentiate).collect::<Result<Vec<_>>>()?;

    let mut groups: BTreeMap<Option<Task>, Vec<usize>> = BTreeMap::new();
    groups.insert(None, (0..trials.len()).collect());
    for (i, t) in trials.iter().enumerate() {
        if let Some(task) = t.meta.task {
            groups.entry(Some(task)).or_default().push(i);
        }
    }

    let mut rows = Vec::new();
    for (task, members) in &groups {
        for joint in ReportJoint::ALL.map(ReportJoint::name) {
            let mut angles = Vec::new();
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for &i in members {
                let (Some(a), Some(v)) = (trials[i].joint_angles(joint), velocities[i].joint_values(joint)) else {
                    continue;
                };
                angles.extend(a);
                for x in v {
                    if x > 0.0 {
                        pos.push(x);
                    } else if x < 0.0 {
                        neg.push(-x);
                    }
                }
            }
            if angles.is_empty() {
                continue;
            }
            let q = percentiles(&angles, &[0.0, 25.0, 50.0, 75.0, 100.0])?;
            let directional = |s: &[f64], sign: f64| -> Result<Vec<f64>> {
                levels
                    .iter()
                    .map(|&p| {
                        if s.is_empty() {
                            Ok(0.0)
                        } else {
                            percentile(s, p).map(|v| sign * v)
                        }
                    })
                    .collect()
            };
            rows.push(JointSummary {
                task: *task,
                joint: joint.to_string(),
                min: q[0],
                max: q[4],
                rom: q[4] - q[0],
                q1: q[1],
                median: q[2],
                q3: q[3],
                velocity_positive: directional(&pos, 1.0)?,
                velocity_negative: directional(&neg, -1.0)?,
            });
        }
    }
    Ok(KinematicSummary {
        percentiles: levels.to_vec(),
        rows,
    })
}
