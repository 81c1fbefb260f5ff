use std::fmt;

use serde::{Deserialize, Serialize};

use super::VelocityTrajectory;
use crate::chain::ReportJoint;
use crate::stats::{median, quartiles};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn of(v: f64) -> Direction {
        if v >= 0.0 {
            Direction::Positive
        } else {
            Direction::Negative
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Positive => "+",
            Direction::Negative => "-",
        })
    }
}

/// The first rule a trial or record failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ExclusionRule {
    /// Peak speed above `Q3 + 1.5·IQR` of the peer peaks.
    VelocityFence {
        joint: String,
        direction: Direction,
        peak: f64,
        fence: f64,
    },
    /// Peak |torque| above three times the median peer peak.
    TorqueMedian {
        joint: ReportJoint,
        peak: f64,
        threshold: f64,
    },
}

impl fmt::Display for ExclusionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExclusionRule::VelocityFence {
                joint,
                direction,
                peak,
                fence,
            } => write!(f, "velocity fence: {joint}{direction} peak {peak:.4} > {fence:.4}"),
            ExclusionRule::TorqueMedian { joint, peak, threshold } => {
                write!(f, "torque median: {joint} peak {peak:.4} > {threshold:.4}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub index: usize,
    pub rule: ExclusionRule,
}

/// Split of input indices into kept and excluded; together they cover every
/// input exactly once.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub kept: Vec<usize>,
    pub excluded: Vec<Exclusion>,
}

impl Partition {
    pub fn is_excluded(&self, index: usize) -> bool {
        self.excluded.iter().any(|e| e.index == index)
    }

    pub(crate) fn from_flags(n: usize, mut rules: Vec<Option<ExclusionRule>>) -> Self {
        debug_assert_eq!(rules.len(), n);
        let mut p = Partition::default();
        for (index, rule) in rules.drain(..).enumerate() {
            match rule {
                Some(rule) => p.excluded.push(Exclusion { index, rule }),
                None => p.kept.push(index),
            }
        }
        p
    }
}

/// Tukey-fence screening of a group of trials: per joint and direction,
/// each trial's peak speed is compared with `Q3 + 1.5·IQR` of all peaks in
/// the group. A trial is excluded at its first joint-direction above the
/// fence.
pub fn screen_velocity_outliers(trials: &[VelocityTrajectory]) -> Result<Partition> {
    let first = trials.first().ok_or_else(|| Error::domain("empty trial group"))?;
    let joints = &first.joints;
    if let Some(t) = trials.iter().find(|t| &t.joints != joints) {
        return Err(Error::domain(format!(
            "trial {} has different joint columns",
            t.meta.trial_id()
        )));
    }
    let mut rules: Vec<Option<ExclusionRule>> = vec![None; trials.len()];
    for (c, joint) in joints.iter().enumerate() {
        for direction in [Direction::Positive, Direction::Negative] {
            let peaks: Vec<f64> = trials
                .iter()
                .map(|t| {
                    t.values.column(c).iter().fold(0.0_f64, |m, &v| match direction {
                        Direction::Positive => m.max(v),
                        Direction::Negative => m.max(-v),
                    })
                })
                .collect();
            let (q1, q3) = quartiles(&peaks)?;
            let fence = q3 + 1.5 * (q3 - q1);
            for (i, &peak) in peaks.iter().enumerate() {
                if rules[i].is_none() && peak > fence {
                    rules[i] = Some(ExclusionRule::VelocityFence {
                        joint: joint.clone(),
                        direction,
                        peak,
                        fence,
                    });
                }
            }
        }
    }
    Ok(Partition::from_flags(trials.len(), rules))
}

/// Indices whose peak exceeds `factor × median(peaks)`; shared by torque
/// screening.
pub(crate) fn median_outliers(peaks: &[f64], factor: f64) -> Result<(f64, Vec<usize>)> {
    let m = median(peaks)?;
    let threshold = factor * m;
    let out = peaks
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > threshold)
        .map(|(i, _)| i)
        .collect();
    Ok((threshold, out))
}
