//! Joint torques from limb models and object manipulation.
//!
//! Torques of the limb's own mass and of a manipulated object are computed
//! in separate runs and combined afterwards with [`superpose`]; inverse
//! dynamics is linear in inertial parameters and external loads, so the sum
//! equals a single run of the composite.

mod object;
mod rnea;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::chain::{JointId, KinematicChain, LimbModel, MassiveBody, ModelId, ReportJoint, Segment};
use crate::trajectory::screen::median_outliers;
use crate::trajectory::{differentiate_matrix, ExclusionRule, JointTrajectory, Partition, TrialMeta};
use crate::{Error, Result};

pub use object::{
    default_objects, euler_zyx_deg, object_pose_from_hand, object_wrench, static_task_wrench, task_wrench,
    ObjectDefinition, ObjectLoad, ObjectModel, ObjectPoseTrajectory, ObjectShape,
};
pub use rnea::{joint_torques, JointState};

/// Coordinates in which a wrench's force and moment are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WrenchFrame {
    World,
    Hand,
}

/// Force (N) and moment (N·m) about `point`, a point fixed in the hand and
/// given in hand-frame coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialWrench {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
    pub frame: WrenchFrame,
    pub point: Vector3<f64>,
}

impl SpatialWrench {
    pub fn zero() -> Self {
        SpatialWrench {
            force: Vector3::zeros(),
            moment: Vector3::zeros(),
            frame: WrenchFrame::World,
            point: Vector3::zeros(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SpatialWrench {
            force: self.force * factor,
            moment: self.moment * factor,
            ..*self
        }
    }
}

/// A wrench per trajectory frame.
#[derive(Debug, Clone, PartialEq)]
pub struct WrenchSeries {
    pub time: Vec<f64>,
    pub samples: Vec<SpatialWrench>,
}

impl WrenchSeries {
    pub fn zeros(time: &[f64]) -> Self {
        WrenchSeries {
            time: time.to_vec(),
            samples: vec![SpatialWrench::zero(); time.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn scale(&mut self, factor: f64) {
        self.samples.iter_mut().for_each(|w| *w = w.scaled(factor));
    }

    /// `time,fx,fy,fz,mx,my,mz` in the frame of each sample.
    pub fn to_csv_with(&self, fmt: impl Fn(f64) -> String) -> String {
        let mut out = String::from("time,fx,fy,fz,mx,my,mz\n");
        for (t, w) in self.time.iter().zip(&self.samples) {
            let fields: Vec<String> = std::iter::once(*t)
                .chain(w.force.iter().copied())
                .chain(w.moment.iter().copied())
                .map(&fmt)
                .collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// What produced a torque record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TorqueSource {
    Model(ModelId),
    Object { name: String, value: f64 },
    Composite(Vec<String>),
}

impl TorqueSource {
    /// Compact label: `ulna:m=2:f=0.875`, `hand:m=0.5`, `object:Mug:0.5`,
    /// composites joined with `+`.
    pub fn label(&self) -> String {
        match self {
            TorqueSource::Model(ModelId::Cylinder {
                segment,
                mass,
                fraction,
            }) => {
                format!("{}:m={mass}:f={fraction}", segment.to_string().to_lowercase())
            }
            TorqueSource::Model(ModelId::Hand { mass }) => format!("hand:m={mass}"),
            TorqueSource::Object { name, value } => format!("object:{name}:{value}"),
            TorqueSource::Composite(parts) => parts.join("+"),
        }
    }
}

impl fmt::Display for TorqueSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for TorqueSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.contains('+') {
            return Ok(TorqueSource::Composite(s.split('+').map(str::to_string).collect()));
        }
        let bad = || Error::domain(format!("malformed torque source `{s}`"));
        let num = |part: Option<&str>, key: &str| -> Result<f64> {
            part.and_then(|p| p.strip_prefix(key))
                .and_then(|v| v.parse().ok())
                .ok_or_else(bad)
        };
        let mut parts = s.split(':');
        match parts.next() {
            Some(seg @ ("humerus" | "ulna")) => {
                let segment = if seg == "humerus" {
                    Segment::Humerus
                } else {
                    Segment::Ulna
                };
                let mass = num(parts.next(), "m=")?;
                let fraction = num(parts.next(), "f=")?;
                Ok(TorqueSource::Model(ModelId::Cylinder {
                    segment,
                    mass,
                    fraction,
                }))
            }
            Some("hand") => Ok(TorqueSource::Model(ModelId::Hand {
                mass: num(parts.next(), "m=")?,
            })),
            Some("object") => {
                let name = parts.next().ok_or_else(bad)?.to_string();
                let value = num(parts.next(), "")?;
                Ok(TorqueSource::Object { name, value })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub trial: TrialMeta,
    pub source: TorqueSource,
}

/// Torques of the five reporting joints with the joint velocities of the
/// same frames.
#[derive(Debug, Clone, PartialEq)]
pub struct TorqueRecord {
    pub time: Vec<f64>,
    /// frames × 5, N·m, columns in [`ReportJoint::ALL`] order.
    pub torques: DMatrix<f64>,
    /// frames × 5, °/s.
    pub velocities: DMatrix<f64>,
    pub provenance: Provenance,
}

impl TorqueRecord {
    pub fn n_frames(&self) -> usize {
        self.time.len()
    }

    pub fn joint_torques(&self, joint: ReportJoint) -> Vec<f64> {
        self.torques.column(joint.column()).iter().copied().collect()
    }

    pub fn joint_velocities(&self, joint: ReportJoint) -> Vec<f64> {
        self.velocities.column(joint.column()).iter().copied().collect()
    }

    /// Peak |τ| per reporting joint.
    pub fn peaks(&self) -> [f64; 5] {
        let mut p = [0.0; 5];
        for (c, v) in p.iter_mut().enumerate() {
            *v = self.torques.column(c).iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        }
        p
    }

    pub fn to_csv_with(&self, fmt: impl Fn(f64) -> String) -> String {
        let mut out = String::new();
        let meta = &self.provenance.trial;
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
        out.push_str(&format!("# source={}\n", self.provenance.source.label()));
        out.push_str("time");
        for j in ReportJoint::ALL {
            out.push_str(&format!(",tau_{j}"));
        }
        for j in ReportJoint::ALL {
            out.push_str(&format!(",nu_{j}"));
        }
        out.push('\n');
        for k in 0..self.n_frames() {
            out.push_str(&fmt(self.time[k]));
            for m in [&self.torques, &self.velocities] {
                for c in 0..5 {
                    out.push(',');
                    out.push_str(&fmt(m[(k, c)]));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut meta = TrialMeta::default();
        let mut source = None;
        let mut header = false;
        let mut time = Vec::new();
        let mut values = Vec::new();
        let mut row = 0;
        for line in text.lines().map(str::trim) {
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if let Some((k, v)) = c.split_once('=') {
                    let (k, v) = (k.trim(), v.trim());
                    match k {
                        "task" => meta.task = Some(v.parse()?),
                        "subject" => meta.subject = Some(v.to_string()),
                        "repetition" => {
                            meta.repetition = Some(v.parse().map_err(|_| Error::Parse {
                                row: 0,
                                msg: format!("bad repetition `{v}`"),
                            })?)
                        }
                        "source" => source = Some(v.parse::<TorqueSource>()?),
                        _ => {
                            meta.extra.insert(k.to_string(), v.to_string());
                        }
                    }
                }
                continue;
            }
            if !header {
                if line.split(',').count() != 11 || !line.starts_with("time,") {
                    return Err(Error::Parse {
                        row: 0,
                        msg: "torque record header must have time plus 10 columns".into(),
                    });
                }
                header = true;
                continue;
            }
            row += 1;
            let v = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .filter(|v| v.len() == 11)
                .ok_or_else(|| Error::Parse {
                    row,
                    msg: "expected 11 finite numbers".into(),
                })?;
            time.push(v[0]);
            values.push(v);
        }
        let source = source.ok_or(Error::Parse {
            row: 0,
            msg: "missing `# source=` line".into(),
        })?;
        let n = time.len();
        Ok(TorqueRecord {
            time,
            torques: DMatrix::from_fn(n, 5, |k, c| values[k][1 + c]),
            velocities: DMatrix::from_fn(n, 5, |k, c| values[k][6 + c]),
            provenance: Provenance { trial: meta, source },
        })
    }
}

/// Kinematics of every frame of a trial, reusable across models.
#[derive(Debug, Clone)]
pub struct PreparedTrial {
    time: Vec<f64>,
    meta: TrialMeta,
    velocities: DMatrix<f64>,
    links: Vec<rnea::LinkKinematics>,
}

impl PreparedTrial {
    /// Angles, velocities (second-order differences of the angles) and
    /// accelerations (second-order differences of the velocities) of every
    /// chain joint, then the outward pass for every frame.
    pub fn new(chain: &KinematicChain, traj: &JointTrajectory) -> Result<Self> {
        let cols = traj.columns_for(&JointId::ALL)?;
        if chain.len() != cols.len() {
            return Err(Error::domain("trajectory joints do not match the chain"));
        }
        let dt = traj.dt();
        let angles = DMatrix::from_fn(traj.n_frames(), cols.len(), |k, j| traj.angles()[(k, cols[j])]);
        let vel = differentiate_matrix(&angles, dt)?;
        let acc = differentiate_matrix(&vel, dt)?;
        let rad = std::f64::consts::PI / 180.0;
        let mut links = Vec::with_capacity(traj.n_frames());
        let (mut q, mut qd, mut qdd) = (vec![0.0; 7], vec![0.0; 7], vec![0.0; 7]);
        for k in 0..traj.n_frames() {
            for j in 0..cols.len() {
                q[j] = angles[(k, j)] * rad;
                qd[j] = vel[(k, j)] * rad;
                qdd[j] = acc[(k, j)] * rad;
            }
            let state = JointState {
                q: &q,
                qd: &qd,
                qdd: &qdd,
            };
            links.push(rnea::forward_pass(chain, &state));
        }
        let velocities = DMatrix::from_fn(traj.n_frames(), 5, |k, c| vel[(k, ReportJoint::ALL[c].joint().index())]);
        Ok(PreparedTrial {
            time: traj.time().to_vec(),
            meta: traj.meta.clone(),
            velocities,
            links,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.time.len()
    }

    pub fn time(&self) -> &[f64] {
        &self.time
    }

    /// Torques of all seven chain joints, frames × 7.
    pub fn chain_torques(&self, bodies: &[MassiveBody], external: Option<&WrenchSeries>) -> Result<DMatrix<f64>> {
        if let Some(w) = external {
            if w.len() != self.n_frames() {
                return Err(Error::FrameMismatch {
                    expected: self.n_frames(),
                    actual: w.len(),
                });
            }
        }
        let mut out = DMatrix::zeros(self.n_frames(), 7);
        for (k, link) in self.links.iter().enumerate() {
            let tau = rnea::backward_pass(link, bodies, external.map(|w| &w.samples[k]));
            for (j, t) in tau.iter().enumerate() {
                out[(k, j)] = *t;
            }
        }
        Ok(out)
    }

    pub fn record(
        &self,
        bodies: &[MassiveBody],
        external: Option<&WrenchSeries>,
        source: TorqueSource,
    ) -> Result<TorqueRecord> {
        let all = self.chain_torques(bodies, external)?;
        let torques = DMatrix::from_fn(self.n_frames(), 5, |k, c| all[(k, ReportJoint::ALL[c].joint().index())]);
        Ok(TorqueRecord {
            time: self.time.clone(),
            torques,
            velocities: self.velocities.clone(),
            provenance: Provenance {
                trial: self.meta.clone(),
                source,
            },
        })
    }
}

/// Inverse dynamics of one limb model over a trajectory. `external` is the
/// load the environment applies to the hand, one wrench per frame.
pub fn inverse_dynamics(
    chain: &KinematicChain,
    model: &LimbModel,
    traj: &JointTrajectory,
    external: Option<&WrenchSeries>,
) -> Result<TorqueRecord> {
    PreparedTrial::new(chain, traj)?.record(&[model.body()], external, TorqueSource::Model(model.id()))
}

/// Inverse dynamics of an arbitrary set of bodies; torques of all seven
/// chain joints, frames × 7.
pub fn inverse_dynamics_bodies(
    chain: &KinematicChain,
    bodies: &[MassiveBody],
    traj: &JointTrajectory,
    external: Option<&WrenchSeries>,
) -> Result<DMatrix<f64>> {
    PreparedTrial::new(chain, traj)?.chain_torques(bodies, external)
}

/// Torques a massless limb needs to apply `hand_on_object`, the wrench the
/// hand exerts on an object.
pub fn object_torques(
    chain: &KinematicChain,
    traj: &JointTrajectory,
    hand_on_object: &WrenchSeries,
    source: TorqueSource,
) -> Result<TorqueRecord> {
    let mut load = hand_on_object.clone();
    load.scale(-1.0);
    PreparedTrial::new(chain, traj)?.record(&[], Some(&load), source)
}

/// Elementwise sum of records of the same trial.
pub fn superpose(records: &[TorqueRecord]) -> Result<TorqueRecord> {
    let first = records.first().ok_or_else(|| Error::domain("nothing to superpose"))?;
    let mut torques = DMatrix::zeros(first.n_frames(), 5);
    let mut labels = Vec::new();
    for r in records {
        if r.n_frames() != first.n_frames() {
            return Err(Error::FrameMismatch {
                expected: first.n_frames(),
                actual: r.n_frames(),
            });
        }
        if r.provenance.trial != first.provenance.trial || r.time != first.time {
            return Err(Error::ProvenanceMismatch(format!(
                "{} vs {}",
                r.provenance.trial.trial_id(),
                first.provenance.trial.trial_id()
            )));
        }
        torques += &r.torques;
        match &r.provenance.source {
            TorqueSource::Composite(parts) => labels.extend(parts.iter().cloned()),
            other => labels.push(other.label()),
        }
    }
    labels.sort();
    let source = if labels.len() == 1 {
        first.provenance.source.clone()
    } else {
        TorqueSource::Composite(labels)
    };
    Ok(TorqueRecord {
        time: first.time.clone(),
        torques,
        velocities: first.velocities.clone(),
        provenance: Provenance {
            trial: first.provenance.trial.clone(),
            source,
        },
    })
}

/// Excludes records whose peak |τ| at any reporting joint exceeds three
/// times the median peak of the group at that joint.
pub fn screen_torque_outliers(records: &[TorqueRecord]) -> Result<Partition> {
    if records.is_empty() {
        return Err(Error::domain("empty record group"));
    }
    let peaks: Vec<[f64; 5]> = records.iter().map(TorqueRecord::peaks).collect();
    let mut rules: Vec<Option<ExclusionRule>> = vec![None; records.len()];
    for joint in ReportJoint::ALL {
        let column: Vec<f64> = peaks.iter().map(|p| p[joint.column()]).collect();
        let (threshold, outliers) = median_outliers(&column, 3.0)?;
        for i in outliers {
            rules[i].get_or_insert(ExclusionRule::TorqueMedian {
                joint,
                peak: column[i],
                threshold,
            });
        }
    }
    Ok(Partition::from_flags(records.len(), rules))
}
