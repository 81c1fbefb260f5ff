//! Serial upper-limb chain and the stack of single-body dynamic models.
//!
//! Base frame: X anterior, Y to the subject's left, Z up. The modelled limb
//! is a right arm. In the zero pose the arm hangs at the side with the palm
//! facing medially (+Y) and the thumb pointing forward (+X); every segment
//! axis points along −Z.
//!
//! | joint            | axis (parent frame) | positive direction          |
//! |------------------|---------------------|-----------------------------|
//! | `shoulder_plane` | +Z                  | plane of elevation, medial  |
//! | `shoulder_elev`  | −Y                  | elevation (forward flexion) |
//! | `SR`             | +Z (humeral axis)   | internal rotation           |
//! | `EF`             | −Y                  | elbow flexion               |
//! | `PS`             | +Z (forearm axis)   | pronation                   |
//! | `WF`             | +X                  | wrist flexion (palmar)      |
//! | `WD`             | +Y                  | ulnar deviation             |

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Joints of the chain, proximal to distal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum JointId {
    #[serde(rename = "shoulder_plane")]
    ShoulderPlane,
    #[serde(rename = "shoulder_elev")]
    ShoulderElevation,
    SR,
    EF,
    PS,
    WF,
    WD,
}

impl JointId {
    pub const ALL: [JointId; 7] = [
        JointId::ShoulderPlane,
        JointId::ShoulderElevation,
        JointId::SR,
        JointId::EF,
        JointId::PS,
        JointId::WF,
        JointId::WD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            JointId::ShoulderPlane => "shoulder_plane",
            JointId::ShoulderElevation => "shoulder_elev",
            JointId::SR => "SR",
            JointId::EF => "EF",
            JointId::PS => "PS",
            JointId::WF => "WF",
            JointId::WD => "WD",
        }
    }

    /// Position in the default chain.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JointId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        JointId::ALL
            .into_iter()
            .find(|j| j.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown joint `{s}`")))
    }
}

/// The five joints whose torques are reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ReportJoint {
    SR,
    EF,
    PS,
    WF,
    WD,
}

impl ReportJoint {
    pub const ALL: [ReportJoint; 5] = [
        ReportJoint::SR,
        ReportJoint::EF,
        ReportJoint::PS,
        ReportJoint::WF,
        ReportJoint::WD,
    ];

    pub fn joint(self) -> JointId {
        match self {
            ReportJoint::SR => JointId::SR,
            ReportJoint::EF => JointId::EF,
            ReportJoint::PS => JointId::PS,
            ReportJoint::WF => JointId::WF,
            ReportJoint::WD => JointId::WD,
        }
    }

    pub fn name(self) -> &'static str {
        self.joint().name()
    }

    /// Column of this joint in a [`TorqueRecord`](crate::dynamics::TorqueRecord).
    pub fn column(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ReportJoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReportJoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ReportJoint::ALL
            .into_iter()
            .find(|j| j.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown reporting joint `{s}`")))
    }
}

/// Bodies of the chain that can carry mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BodyId {
    Humerus,
    Ulna,
    Radius,
    Hand,
}

impl BodyId {
    /// Index of the joint whose child frame is this body's frame.
    pub fn joint_index(self) -> usize {
        match self {
            BodyId::Humerus => JointId::SR.index(),
            BodyId::Ulna => JointId::EF.index(),
            BodyId::Radius => JointId::PS.index(),
            BodyId::Hand => JointId::WD.index(),
        }
    }
}

/// Segment the cylinders can be attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Segment {
    Humerus,
    Ulna,
}

impl Segment {
    pub fn body(self) -> BodyId {
        match self {
            Segment::Humerus => BodyId::Humerus,
            Segment::Ulna => BodyId::Ulna,
        }
    }

    pub fn length(self, geometry: &SegmentGeometry) -> f64 {
        match self {
            Segment::Humerus => geometry.humerus_length,
            Segment::Ulna => geometry.ulna_length,
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Segment::Humerus => "Humerus",
            Segment::Ulna => "Ulna",
        })
    }
}

/// Segment lengths of one subject, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentGeometry {
    pub humerus_length: f64,
    pub ulna_length: f64,
    pub hand_length: f64,
    /// Shoulder joint centre in the base frame.
    #[serde(default)]
    pub shoulder_offset: [f64; 3],
}

impl SegmentGeometry {
    pub fn new(humerus_length: f64, ulna_length: f64, hand_length: f64) -> Result<Self> {
        let g = SegmentGeometry {
            humerus_length,
            ulna_length,
            hand_length,
            shoulder_offset: [0.0; 3],
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("humerus_length", self.humerus_length),
            ("ulna_length", self.ulna_length),
            ("hand_length", self.hand_length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGeometry(format!("{name} must be positive, got {v}")));
            }
        }
        if self.shoulder_offset.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGeometry("shoulder_offset must be finite".into()));
        }
        Ok(())
    }

    /// Componentwise mean over subjects; used to place design points.
    pub fn mean(geometries: &[SegmentGeometry]) -> Result<Self> {
        if geometries.is_empty() {
            return Err(Error::domain("mean of an empty geometry list"));
        }
        let n = geometries.len() as f64;
        let mut m = SegmentGeometry {
            humerus_length: 0.0,
            ulna_length: 0.0,
            hand_length: 0.0,
            shoulder_offset: [0.0; 3],
        };
        for g in geometries {
            m.humerus_length += g.humerus_length / n;
            m.ulna_length += g.ulna_length / n;
            m.hand_length += g.hand_length / n;
            for k in 0..3 {
                m.shoulder_offset[k] += g.shoulder_offset[k] / n;
            }
        }
        Ok(m)
    }
}

impl Default for SegmentGeometry {
    fn default() -> Self {
        SegmentGeometry {
            humerus_length: 0.30,
            ulna_length: 0.25,
            hand_length: 0.18,
            shoulder_offset: [0.0; 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub id: JointId,
    /// Unit rotation axis in the parent frame.
    pub axis: Unit<Vector3<f64>>,
    /// Joint origin in the parent frame.
    pub offset: Vector3<f64>,
}

/// Pose of a frame in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub rotation: Rotation3<f64>,
    pub origin: Vector3<f64>,
}

impl Frame {
    pub fn identity() -> Self {
        Frame {
            rotation: Rotation3::identity(),
            origin: Vector3::zeros(),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.origin + self.rotation * p
    }
}

/// Serial chain of revolute joints, proximal to distal; joint `i`'s parent
/// is joint `i - 1` (the base for joint 0).
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    joints: Vec<Joint>,
    base: Vector3<f64>,
    /// Hand tip in the hand (WD) frame.
    tip: Vector3<f64>,
    geometry: SegmentGeometry,
}

/// Builds the seven-joint arm described in the module docs.
pub fn build_default_chain(geometry: &SegmentGeometry) -> Result<KinematicChain> {
    geometry.validate()?;
    let z = Vector3::z();
    let y = Vector3::y();
    let x = Vector3::x();
    let zero = Vector3::zeros();
    let layout = [
        (JointId::ShoulderPlane, z, zero),
        (JointId::ShoulderElevation, -y, zero),
        (JointId::SR, z, zero),
        (JointId::EF, -y, Vector3::new(0.0, 0.0, -geometry.humerus_length)),
        (JointId::PS, z, zero),
        (JointId::WF, x, Vector3::new(0.0, 0.0, -geometry.ulna_length)),
        (JointId::WD, y, zero),
    ];
    let joints = layout
        .into_iter()
        .map(|(id, axis, offset)| Joint {
            id,
            axis: Unit::new_normalize(axis),
            offset,
        })
        .collect();
    Ok(KinematicChain {
        joints,
        base: Vector3::from(geometry.shoulder_offset),
        tip: Vector3::new(0.0, 0.0, -geometry.hand_length),
        geometry: *geometry,
    })
}

impl KinematicChain {
    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn geometry(&self) -> &SegmentGeometry {
        &self.geometry
    }

    pub fn base_offset(&self) -> Vector3<f64> {
        self.base
    }

    /// Hand tip position in the hand frame.
    pub fn tip_offset(&self) -> Vector3<f64> {
        self.tip
    }

    pub fn joint_index(&self, id: JointId) -> Option<usize> {
        self.joints.iter().position(|j| j.id == id)
    }

    /// Child frame of every joint for joint angles `q` in radians.
    pub fn forward(&self, q: &[f64]) -> Vec<Frame> {
        assert_eq!(q.len(), self.joints.len(), "one angle per joint");
        let mut frames = Vec::with_capacity(self.joints.len());
        let mut parent = Frame {
            rotation: Rotation3::identity(),
            origin: self.base,
        };
        for (joint, &angle) in self.joints.iter().zip(q) {
            let origin = parent.origin + parent.rotation * joint.offset;
            let rotation = parent.rotation * Rotation3::from_axis_angle(&joint.axis, angle);
            parent = Frame { rotation, origin };
            frames.push(parent);
        }
        frames
    }

    /// Hand tip position in the base frame.
    pub fn tip_position(&self, q: &[f64]) -> Vector3<f64> {
        let frames = self.forward(q);
        frames.last().map_or(self.base, |f| f.transform_point(&self.tip))
    }
}

/// Principal moments of a solid cylinder about its CoM, as a tensor in a
/// frame whose Z axis is the cylinder axis.
pub fn cylinder_inertia(mass: f64, radius: f64, length: f64) -> Result<Matrix3<f64>> {
    if !(mass >= 0.0) || !mass.is_finite() {
        return Err(Error::domain(format!("cylinder mass must be >= 0, got {mass}")));
    }
    if !(radius > 0.0 && length > 0.0) {
        return Err(Error::domain(format!(
            "cylinder radius and length must be positive, got r={radius}, L={length}"
        )));
    }
    let axial = 0.5 * mass * radius * radius;
    let transverse = mass * (3.0 * radius * radius + length * length) / 12.0;
    Ok(Matrix3::from_diagonal(&Vector3::new(transverse, transverse, axial)))
}

/// Rigid mass attached to one body of the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassiveBody {
    pub body: BodyId,
    pub mass: f64,
    /// CoM in the body frame.
    pub com: Vector3<f64>,
    /// Inertia about the CoM in the body frame.
    pub inertia: Matrix3<f64>,
}

impl MassiveBody {
    pub fn scaled(&self, factor: f64) -> MassiveBody {
        MassiveBody {
            mass: self.mass * factor,
            inertia: self.inertia * factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderSegment {
    pub segment: Segment,
    pub mass: f64,
    pub diameter: f64,
    pub length: f64,
    /// CoM distance from the proximal joint as a fraction of segment length.
    pub com_fraction: f64,
    segment_length: f64,
}

impl CylinderSegment {
    pub const DEFAULT_DIAMETER: f64 = 0.10;

    /// Cylinder a quarter of the segment long, centred at
    /// `com_fraction × segment length` along the segment axis.
    pub fn new(
        geometry: &SegmentGeometry,
        segment: Segment,
        mass: f64,
        com_fraction: f64,
        diameter: f64,
    ) -> Result<Self> {
        geometry.validate()?;
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(Error::domain(format!("cylinder mass must be >= 0, got {mass}")));
        }
        if !(diameter > 0.0) {
            return Err(Error::domain(format!(
                "cylinder diameter must be positive, got {diameter}"
            )));
        }
        let segment_length = segment.length(geometry);
        let length = segment_length / 4.0;
        check_fraction(com_fraction, segment_length, length)?;
        Ok(CylinderSegment {
            segment,
            mass,
            diameter,
            length,
            com_fraction,
            segment_length,
        })
    }

    /// CoM distance from the proximal joint, m.
    pub fn com_distance(&self) -> f64 {
        self.com_fraction * self.segment_length
    }

    pub fn inertia(&self) -> Matrix3<f64> {
        cylinder_inertia(self.mass, self.diameter / 2.0, self.length).expect("validated at construction")
    }

    pub fn as_body(&self) -> MassiveBody {
        MassiveBody {
            body: self.segment.body(),
            mass: self.mass,
            com: Vector3::new(0.0, 0.0, -self.com_distance()),
            inertia: self.inertia(),
        }
    }
}

fn check_fraction(fraction: f64, segment_length: f64, cylinder_length: f64) -> Result<()> {
    const EPS: f64 = 1e-12;
    if !fraction.is_finite() {
        return Err(Error::InfeasibleFraction {
            fraction,
            reason: "not finite".into(),
        });
    }
    let d = fraction * segment_length;
    let half = cylinder_length / 2.0;
    if d < half - EPS {
        return Err(Error::InfeasibleFraction {
            fraction,
            reason: format!("CoM distance {d:.6} m is below half the cylinder length {half:.6} m"),
        });
    }
    if d > segment_length - half + EPS {
        return Err(Error::InfeasibleFraction {
            fraction,
            reason: format!("cylinder would extend past the segment end (d = {d:.6} m, segment {segment_length:.6} m)"),
        });
    }
    Ok(())
}

/// Hand whose inertia scales linearly with mass from a reference hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandModel {
    pub mass: f64,
    /// CoM in the hand frame.
    pub com: Vector3<f64>,
    inertia_per_kg: Matrix3<f64>,
}

impl HandModel {
    pub const COM_FRACTION: f64 = 0.4;
    pub const WIDTH: f64 = 0.085;
    pub const THICKNESS: f64 = 0.03;

    /// Reference hand: a box of [`WIDTH`](Self::WIDTH) × [`THICKNESS`](Self::THICKNESS)
    /// × hand length with its CoM on the hand axis at 40 % of the hand length.
    pub fn reference(geometry: &SegmentGeometry, mass: f64) -> Result<Self> {
        geometry.validate()?;
        let (w, t, l) = (Self::WIDTH, Self::THICKNESS, geometry.hand_length);
        let per_kg = Matrix3::from_diagonal(&Vector3::new(
            (t * t + l * l) / 12.0,
            (w * w + l * l) / 12.0,
            (w * w + t * t) / 12.0,
        ));
        HandModel::with_inertia(mass, Vector3::new(0.0, 0.0, -Self::COM_FRACTION * l), per_kg)
    }

    pub fn with_inertia(mass: f64, com: Vector3<f64>, inertia_per_kg: Matrix3<f64>) -> Result<Self> {
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(Error::domain(format!("hand mass must be >= 0, got {mass}")));
        }
        Ok(HandModel {
            mass,
            com,
            inertia_per_kg,
        })
    }

    pub fn inertia(&self) -> Matrix3<f64> {
        self.inertia_per_kg * self.mass
    }

    pub fn with_mass(&self, mass: f64) -> Result<Self> {
        HandModel::with_inertia(mass, self.com, self.inertia_per_kg)
    }

    pub fn as_body(&self) -> MassiveBody {
        MassiveBody {
            body: BodyId::Hand,
            mass: self.mass,
            com: self.com,
            inertia: self.inertia(),
        }
    }
}

/// Identifies a member of the model stack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelId {
    Cylinder { segment: Segment, mass: f64, fraction: f64 },
    Hand { mass: f64 },
}

/// A chain parameterization with exactly one massive body; all other bodies
/// are massless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimbModel {
    Cylinder(CylinderSegment),
    Hand(HandModel),
}

impl LimbModel {
    pub fn id(&self) -> ModelId {
        match self {
            LimbModel::Cylinder(c) => ModelId::Cylinder {
                segment: c.segment,
                mass: c.mass,
                fraction: c.com_fraction,
            },
            LimbModel::Hand(h) => ModelId::Hand { mass: h.mass },
        }
    }

    pub fn body(&self) -> MassiveBody {
        match self {
            LimbModel::Cylinder(c) => c.as_body(),
            LimbModel::Hand(h) => h.as_body(),
        }
    }
}

/// Options for [`generate_model_stack_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StackOptions {
    pub cylinder_diameter: f64,
    pub include_humerus: bool,
    pub include_ulna: bool,
    pub include_hand: bool,
}

impl Default for StackOptions {
    fn default() -> Self {
        StackOptions {
            cylinder_diameter: CylinderSegment::DEFAULT_DIAMETER,
            include_humerus: true,
            include_ulna: true,
            include_hand: true,
        }
    }
}

/// Masses used for cylinders and hands, kg.
pub const DEFAULT_MASSES: [f64; 5] = [0.1, 0.5, 0.75, 1.0, 2.0];
/// CoM positions as fractions of segment length.
pub const DEFAULT_FRACTIONS: [f64; 4] = [0.125, 0.375, 0.625, 0.875];

/// Humerus cylinders, then ulna cylinders (masses outer, fractions inner),
/// then one hand per mass: `2·|masses|·|fractions| + |masses|` models.
pub fn generate_model_stack(geometry: &SegmentGeometry, masses: &[f64], fractions: &[f64]) -> Result<Vec<LimbModel>> {
    generate_model_stack_with(geometry, masses, fractions, &StackOptions::default())
}

pub fn generate_model_stack_with(
    geometry: &SegmentGeometry,
    masses: &[f64],
    fractions: &[f64],
    options: &StackOptions,
) -> Result<Vec<LimbModel>> {
    geometry.validate()?;
    if masses.is_empty() {
        return Err(Error::domain("mass list is empty"));
    }
    if fractions.is_empty() && (options.include_humerus || options.include_ulna) {
        return Err(Error::domain("fraction list is empty"));
    }
    let mut segments = Vec::new();
    if options.include_humerus {
        segments.push(Segment::Humerus);
    }
    if options.include_ulna {
        segments.push(Segment::Ulna);
    }
    let mut models = Vec::new();
    for segment in segments {
        for &mass in masses {
            for &fraction in fractions {
                let c = CylinderSegment::new(geometry, segment, mass, fraction, options.cylinder_diameter)?;
                models.push(LimbModel::Cylinder(c));
            }
        }
    }
    if options.include_hand {
        for &mass in masses {
            models.push(LimbModel::Hand(HandModel::reference(geometry, mass)?));
        }
    }
    Ok(models)
}
