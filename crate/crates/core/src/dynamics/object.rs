use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::{SpatialWrench, WrenchFrame, WrenchSeries};
use crate::chain::KinematicChain;
use crate::trajectory::{JointTrajectory, Task};
use crate::{Error, Result, GRAVITY};

/// Object geometry in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum ObjectShape {
    /// Axis along the object Z axis. The handle only matters for grasping.
    Cylinder {
        radius: f64,
        height: f64,
        #[serde(default)]
        handle: Option<f64>,
    },
    Box {
        x: f64,
        y: f64,
        z: f64,
    },
}

impl ObjectShape {
    fn validate(&self) -> Result<()> {
        let dims: Vec<f64> = match *self {
            ObjectShape::Cylinder { radius, height, handle } => {
                let mut d = vec![radius, height];
                d.extend(handle);
                d
            }
            ObjectShape::Box { x, y, z } => vec![x, y, z],
        };
        if dims.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::domain(format!("object dimensions must be positive: {self:?}")));
        }
        Ok(())
    }

    /// Inertia about the CoM per kilogram, object frame, SI units.
    pub fn inertia_per_kg(&self) -> Matrix3<f64> {
        match *self {
            ObjectShape::Cylinder { radius, height, .. } => {
                let (r, h) = (radius / 1000.0, height / 1000.0);
                let t = (3.0 * r * r + h * h) / 12.0;
                Matrix3::from_diagonal(&Vector3::new(t, t, 0.5 * r * r))
            }
            ObjectShape::Box { x, y, z } => {
                let (x, y, z) = (x / 1000.0, y / 1000.0, z / 1000.0);
                Matrix3::from_diagonal(&Vector3::new(y * y + z * z, x * x + z * z, x * x + y * y)) / 12.0
            }
        }
    }
}

/// What the hand has to overcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "load", rename_all = "snake_case")]
pub enum ObjectLoad {
    /// Free rigid body of this mass, kg.
    Mass { mass: f64 },
    /// Constant moment, N·m, about a unit axis in the hand frame.
    StaticTorque { torque: f64, axis: [f64; 3] },
}

impl ObjectLoad {
    /// Mass or torque value, the regression variable.
    pub fn value(&self) -> f64 {
        match *self {
            ObjectLoad::Mass { mass } => mass,
            ObjectLoad::StaticTorque { torque, .. } => torque,
        }
    }
}

/// One concrete object: a shape with a single mass or static torque.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectModel {
    pub name: String,
    pub shape: Option<ObjectShape>,
    pub load: ObjectLoad,
    /// Object CoM relative to the hand frame origin, in the hand frame, m.
    pub grasp_offset: [f64; 3],
    /// Fraction of the object wrench carried by the modelled hand.
    pub hand_share: f64,
}

impl ObjectModel {
    pub fn validate(&self) -> Result<()> {
        if let Some(shape) = &self.shape {
            shape.validate()?;
        }
        match self.load {
            ObjectLoad::Mass { mass } => {
                if !(mass >= 0.0) || !mass.is_finite() {
                    return Err(Error::domain(format!("{}: mass must be >= 0, got {mass}", self.name)));
                }
                if self.shape.is_none() {
                    return Err(Error::domain(format!("{}: a mass object needs a shape", self.name)));
                }
            }
            ObjectLoad::StaticTorque { torque, axis } => {
                if !torque.is_finite() {
                    return Err(Error::domain(format!("{}: torque must be finite", self.name)));
                }
                unit_axis(axis)?;
            }
        }
        if !(0.0..=1.0).contains(&self.hand_share) {
            return Err(Error::domain(format!(
                "{}: hand share must lie in [0, 1], got {}",
                self.name, self.hand_share
            )));
        }
        Ok(())
    }
}

/// An object of the task catalogue with every mass or torque it is
/// simulated at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDefinition {
    pub name: String,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub shape: Option<ObjectShape>,
    #[serde(default)]
    pub masses: Vec<f64>,
    #[serde(default)]
    pub torques: Vec<f64>,
    /// Static-torque axis in the hand frame.
    #[serde(default = "default_torque_axis")]
    pub torque_axis: [f64; 3],
    #[serde(default = "default_grasp_offset")]
    pub grasp_offset: [f64; 3],
    #[serde(default = "default_true")]
    pub regressable: bool,
    #[serde(default = "default_share")]
    pub hand_share: f64,
}

fn default_torque_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_grasp_offset() -> [f64; 3] {
    [0.0, 0.05, -0.08]
}

fn default_true() -> bool {
    true
}

fn default_share() -> f64 {
    1.0
}

impl ObjectDefinition {
    pub fn validate(&self) -> Result<()> {
        if self.masses.is_empty() == self.torques.is_empty() {
            return Err(Error::domain(format!(
                "object {} must list either masses or static torques",
                self.name
            )));
        }
        self.instances().iter().try_for_each(ObjectModel::validate)
    }

    pub fn is_static(&self) -> bool {
        !self.torques.is_empty()
    }

    /// One model per mass or torque, in listed order.
    pub fn instances(&self) -> Vec<ObjectModel> {
        let loads: Vec<ObjectLoad> = if self.is_static() {
            self.torques
                .iter()
                .map(|&torque| ObjectLoad::StaticTorque {
                    torque,
                    axis: self.torque_axis,
                })
                .collect()
        } else {
            self.masses.iter().map(|&mass| ObjectLoad::Mass { mass }).collect()
        };
        loads
            .into_iter()
            .map(|load| ObjectModel {
                name: self.name.clone(),
                shape: self.shape,
                load,
                grasp_offset: self.grasp_offset,
                hand_share: self.hand_share,
            })
            .collect()
    }
}

/// The task objects with their catalogue dimensions, masses and torques.
/// Cup and Knob are simulated but not regressable; the box of the bimanual
/// task is shared equally between both hands.
pub fn default_objects() -> Vec<ObjectDefinition> {
    let cyl = |radius, height, handle| Some(ObjectShape::Cylinder { radius, height, handle });
    let boxed = |x, y, z| Some(ObjectShape::Box { x, y, z });
    let mass = |name: &str, tasks: Vec<Task>, shape, masses: &[f64]| ObjectDefinition {
        name: name.to_string(),
        tasks,
        shape,
        masses: masses.to_vec(),
        torques: vec![],
        torque_axis: default_torque_axis(),
        grasp_offset: default_grasp_offset(),
        regressable: true,
        hand_share: 1.0,
    };
    let torque = |name: &str, torques: &[f64], regressable| ObjectDefinition {
        name: name.to_string(),
        tasks: vec![Task::IX],
        shape: None,
        masses: vec![],
        torques: torques.to_vec(),
        torque_axis: default_torque_axis(),
        grasp_offset: [0.0; 3],
        regressable,
        hand_share: 1.0,
    };
    vec![
        ObjectDefinition {
            regressable: false,
            ..mass(
                "Cup",
                vec![Task::I, Task::II],
                cyl(43.0, 100.0, Some(40.0)),
                &[0.1, 0.5, 1.0],
            )
        },
        mass(
            "Mug",
            vec![Task::I, Task::II],
            cyl(38.5, 132.0, Some(30.0)),
            &[0.1, 0.5, 1.0],
        ),
        mass("Bottle", vec![Task::IV], cyl(32.0, 213.0, None), &[0.1, 0.5, 1.0, 1.5]),
        mass("TinCan", vec![Task::V], cyl(36.5, 110.0, None), &[0.1, 0.5, 1.0]),
        mass(
            "Briefcase",
            vec![Task::VI],
            boxed(450.0, 350.0, 110.0),
            &[1.0, 3.0, 5.0],
        ),
        ObjectDefinition {
            grasp_offset: [0.0, 0.445, -0.08],
            ..mass("Door", vec![Task::VIII], boxed(40.0, 2032.0, 890.0), &[9.0, 18.0, 33.0])
        },
        torque("Key", &[0.3, 1.3, 2.3], true),
        torque("Knob", &[0.3, 1.3, 2.3], false),
        ObjectDefinition {
            hand_share: 0.5,
            ..mass("Box", vec![Task::X], boxed(340.0, 200.0, 130.0), &[0.1, 1.0, 2.0, 5.0])
        },
    ]
}

/// Object pose samples: CoM position (m) and orientation on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectPoseTrajectory {
    pub time: Vec<f64>,
    pub position: Vec<Vector3<f64>>,
    pub rotation: Vec<Rotation3<f64>>,
}

impl ObjectPoseTrajectory {
    pub fn new(time: Vec<f64>, position: Vec<Vector3<f64>>, rotation: Vec<Rotation3<f64>>) -> Result<Self> {
        if position.len() != time.len() || rotation.len() != time.len() {
            return Err(Error::FrameMismatch {
                expected: time.len(),
                actual: position.len().min(rotation.len()),
            });
        }
        crate::trajectory::validate_grid(&time)?;
        Ok(ObjectPoseTrajectory {
            time,
            position,
            rotation,
        })
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Parses `time,x,y,z,rx,ry,rz` rows: metres and degrees, orientation
    /// `Rz(rz)·Ry(ry)·Rx(rx)`.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut time = Vec::new();
        let mut position = Vec::new();
        let mut rotation = Vec::new();
        let mut header = false;
        let mut row = 0;
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["time", "x", "y", "z", "rx", "ry", "rz"] {
                    return Err(Error::Parse {
                        row: 0,
                        msg: "pose header must be time,x,y,z,rx,ry,rz".into(),
                    });
                }
                header = true;
                continue;
            }
            row += 1;
            let v = line
                .split(',')
                .map(|f| f.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .filter(|v| v.len() == 7)
                .ok_or_else(|| Error::Parse {
                    row,
                    msg: "expected 7 finite numbers".into(),
                })?;
            time.push(v[0]);
            position.push(Vector3::new(v[1], v[2], v[3]));
            rotation.push(euler_zyx_deg(v[4], v[5], v[6]));
        }
        ObjectPoseTrajectory::new(time, position, rotation)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,x,y,z,rx,ry,rz\n");
        for k in 0..self.len() {
            let (rx, ry, rz) = euler_zyx_from(&self.rotation[k]);
            let p = self.position[k];
            let fields = [self.time[k], p.x, p.y, p.z, rx, ry, rz];
            let line: Vec<String> = fields.iter().map(f64::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// `Rz(rz)·Ry(ry)·Rx(rx)`, degrees.
pub fn euler_zyx_deg(rx: f64, ry: f64, rz: f64) -> Rotation3<f64> {
    Rotation3::from_euler_angles(rx.to_radians(), ry.to_radians(), rz.to_radians())
}

fn euler_zyx_from(r: &Rotation3<f64>) -> (f64, f64, f64) {
    let (rx, ry, rz) = r.euler_angles();
    (rx.to_degrees(), ry.to_degrees(), rz.to_degrees())
}

pub(crate) fn unit_axis(axis: [f64; 3]) -> Result<Vector3<f64>> {
    let v = Vector3::from(axis);
    let n = v.norm();
    if !(n > 1e-12) || !n.is_finite() {
        return Err(Error::domain(format!("axis {axis:?} has zero norm")));
    }
    Ok(v / n)
}

/// Pose of a rigidly grasped object whose frame is aligned with the hand
/// frame, from the chain's forward kinematics.
pub fn object_pose_from_hand(
    chain: &KinematicChain,
    traj: &JointTrajectory,
    grasp_offset: [f64; 3],
) -> Result<ObjectPoseTrajectory> {
    let cols = traj.columns_for(&crate::chain::JointId::ALL)?;
    let offset = Vector3::from(grasp_offset);
    let mut position = Vec::with_capacity(traj.n_frames());
    let mut rotation = Vec::with_capacity(traj.n_frames());
    let mut q = vec![0.0; cols.len()];
    for k in 0..traj.n_frames() {
        for (j, &c) in cols.iter().enumerate() {
            q[j] = traj.angles()[(k, c)].to_radians();
        }
        let hand = *chain.forward(&q).last().expect("chain has joints");
        position.push(hand.transform_point(&offset));
        rotation.push(hand.rotation);
    }
    ObjectPoseTrajectory::new(traj.time().to_vec(), position, rotation)
}

/// Second-order first and second derivative of `f` at sample `k`, from
/// central differences inside and four-point one-sided stencils at the ends.
fn derivatives<T>(n: usize, h: f64, k: usize, f: impl Fn(usize) -> T) -> (T, T)
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    if k == 0 {
        let (f0, f1, f2, f3) = (f(0), f(1), f(2), f(3));
        (
            (f1 * 4.0 - f0 * 3.0 - f2) * (0.5 / h),
            (f0 * 2.0 - f1 * 5.0 + f2 * 4.0 - f3) * (1.0 / (h * h)),
        )
    } else if k == n - 1 {
        let (f0, f1, f2, f3) = (f(k), f(k - 1), f(k - 2), f(k - 3));
        (
            (f0 * 3.0 - f1 * 4.0 + f2) * (0.5 / h),
            (f0 * 2.0 - f1 * 5.0 + f2 * 4.0 - f3) * (1.0 / (h * h)),
        )
    } else {
        let (a, b, c) = (f(k - 1), f(k), f(k + 1));
        ((c - a) * (0.5 / h), (c - b * 2.0 + a) * (1.0 / (h * h)))
    }
}

/// Wrench the hand exerts on a free rigid object moving along `pose`:
/// `F = m(a − g)`, `M = Iω̇ + ω × Iω` about the CoM, moved to the hand
/// frame origin through the grasp offset and scaled by the hand share.
/// Linear acceleration comes from position differences; angular velocity
/// and acceleration from differences of rotation logarithms taken
/// relative to each sample.
pub fn object_wrench(object: &ObjectModel, pose: &ObjectPoseTrajectory) -> Result<WrenchSeries> {
    object.validate()?;
    let ObjectLoad::Mass { mass } = object.load else {
        return Err(Error::WrongOperation(object.name.clone()));
    };
    let n = pose.len();
    if n < 4 {
        return Err(Error::domain(format!(
            "object wrench needs at least 4 pose samples, got {n}"
        )));
    }
    let h = (pose.time[n - 1] - pose.time[0]) / (n - 1) as f64;
    let inertia = object.shape.expect("validated").inertia_per_kg() * mass;
    let offset = Vector3::from(object.grasp_offset);
    let gravity = Vector3::new(0.0, 0.0, -GRAVITY);

    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let (_, acc) = derivatives(n, h, k, |j| pose.position[j]);
        let rk = pose.rotation[k];
        let (omega_b, alpha_b) = derivatives(n, h, k, |j| (rk.inverse() * pose.rotation[j]).scaled_axis());
        let force = (acc - gravity) * mass;
        let moment_body = inertia * alpha_b + omega_b.cross(&(inertia * omega_b));
        let moment_com = rk * moment_body;
        let lever = rk * offset;
        let moment = moment_com + lever.cross(&force);
        samples.push(SpatialWrench {
            force: force * object.hand_share,
            moment: moment * object.hand_share,
            frame: WrenchFrame::World,
            point: Vector3::zeros(),
        });
    }
    Ok(WrenchSeries {
        time: pose.time.clone(),
        samples,
    })
}

/// Constant pure moment `torque · axis` exerted by the hand, hand frame.
pub fn static_task_wrench(axis: [f64; 3], torque: f64, time: &[f64]) -> Result<WrenchSeries> {
    let axis = unit_axis(axis)?;
    if !torque.is_finite() {
        return Err(Error::domain("static torque must be finite"));
    }
    let w = SpatialWrench {
        force: Vector3::zeros(),
        moment: axis * torque,
        frame: WrenchFrame::Hand,
        point: Vector3::zeros(),
    };
    Ok(WrenchSeries {
        time: time.to_vec(),
        samples: vec![w; time.len()],
    })
}

/// Wrench series of any object instance over a trajectory: rigid-grasp
/// pose and [`object_wrench`] for mass objects, [`static_task_wrench`]
/// otherwise.
pub fn task_wrench(chain: &KinematicChain, traj: &JointTrajectory, object: &ObjectModel) -> Result<WrenchSeries> {
    match object.load {
        ObjectLoad::Mass { .. } => {
            let pose = object_pose_from_hand(chain, traj, object.grasp_offset)?;
            object_wrench(object, &pose)
        }
        ObjectLoad::StaticTorque { torque, axis } => {
            let mut w = static_task_wrench(axis, torque, traj.time())?;
            w.scale(object.hand_share);
            Ok(w)
        }
    }
}
