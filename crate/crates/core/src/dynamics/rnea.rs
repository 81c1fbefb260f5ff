//! World-frame recursive Newton–Euler.

use nalgebra::{Matrix3, Vector3};

use super::{SpatialWrench, WrenchFrame};
use crate::chain::{KinematicChain, MassiveBody};
use crate::GRAVITY;

/// Joint-space state of one frame, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState<'a> {
    pub q: &'a [f64],
    pub qd: &'a [f64],
    pub qdd: &'a [f64],
}

/// Per-link kinematics in the base frame for one state.
#[derive(Debug, Clone)]
pub(crate) struct LinkKinematics {
    pub rotation: Vec<Matrix3<f64>>,
    pub origin: Vec<Vector3<f64>>,
    pub axis: Vec<Vector3<f64>>,
    pub omega: Vec<Vector3<f64>>,
    pub alpha: Vec<Vector3<f64>>,
    /// Linear acceleration of each joint origin, including the fictitious
    /// upward acceleration that stands in for gravity.
    pub accel: Vec<Vector3<f64>>,
}

pub(crate) fn forward_pass(chain: &KinematicChain, state: &JointState<'_>) -> LinkKinematics {
    let n = chain.len();
    let frames = chain.forward(state.q);
    let mut k = LinkKinematics {
        rotation: Vec::with_capacity(n),
        origin: Vec::with_capacity(n),
        axis: Vec::with_capacity(n),
        omega: Vec::with_capacity(n),
        alpha: Vec::with_capacity(n),
        accel: Vec::with_capacity(n),
    };
    let mut omega = Vector3::zeros();
    let mut alpha = Vector3::zeros();
    let mut accel = Vector3::new(0.0, 0.0, GRAVITY);
    let mut prev_origin = chain.base_offset();
    for (i, (joint, frame)) in chain.joints().iter().zip(&frames).enumerate() {
        let r = frame.rotation.into_inner();
        let z = r * joint.axis.into_inner();
        let lever = frame.origin - prev_origin;
        accel += alpha.cross(&lever) + omega.cross(&omega.cross(&lever));
        let spin = z * state.qd[i];
        alpha += z * state.qdd[i] + omega.cross(&spin);
        omega += spin;
        k.rotation.push(r);
        k.origin.push(frame.origin);
        k.axis.push(z);
        k.omega.push(omega);
        k.alpha.push(alpha);
        k.accel.push(accel);
        prev_origin = frame.origin;
    }
    k
}

/// Inertial force and moment (about the body CoM) of one body, plus its CoM.
fn body_load(k: &LinkKinematics, body: &MassiveBody) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let i = body.body.joint_index();
    let r = k.rotation[i] * body.com;
    let com = k.origin[i] + r;
    let (w, a) = (k.omega[i], k.alpha[i]);
    let acc = k.accel[i] + a.cross(&r) + w.cross(&w.cross(&r));
    let inertia = k.rotation[i] * body.inertia * k.rotation[i].transpose();
    let force = acc * body.mass;
    let moment = inertia * a + w.cross(&(inertia * w));
    (force, moment, com)
}

/// External load on the hand as (force, moment about `point`, point), base
/// frame. Hand is the last link.
fn external_in_base(k: &LinkKinematics, w: &SpatialWrench) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let last = k.rotation.len() - 1;
    let r = k.rotation[last];
    let point = k.origin[last] + r * w.point;
    match w.frame {
        WrenchFrame::World => (w.force, w.moment, point),
        WrenchFrame::Hand => (r * w.force, r * w.moment, point),
    }
}

/// Generalized torques of every chain joint for one state. `external` is
/// the load the environment applies to the hand.
pub(crate) fn backward_pass(k: &LinkKinematics, bodies: &[MassiveBody], external: Option<&SpatialWrench>) -> Vec<f64> {
    let n = k.rotation.len();
    // net load each link must transmit, as force + moment about its origin
    let mut link_force = vec![Vector3::zeros(); n];
    let mut link_moment = vec![Vector3::zeros(); n];
    for body in bodies {
        let i = body.body.joint_index();
        let (f, m, c) = body_load(k, body);
        link_force[i] += f;
        link_moment[i] += m + (c - k.origin[i]).cross(&f);
    }
    if let Some(w) = external {
        let (f, m, p) = external_in_base(k, w);
        link_force[n - 1] -= f;
        link_moment[n - 1] -= m + (p - k.origin[n - 1]).cross(&f);
    }
    let mut tau = vec![0.0; n];
    let mut f = Vector3::zeros();
    let mut m = Vector3::zeros();
    for i in (0..n).rev() {
        if i + 1 < n {
            m += (k.origin[i + 1] - k.origin[i]).cross(&f);
        }
        f += link_force[i];
        m += link_moment[i];
        tau[i] = m.dot(&k.axis[i]);
    }
    tau
}

/// Recursive Newton–Euler torques of all chain joints (N·m) for a single
/// state in radians.
pub fn joint_torques(
    chain: &KinematicChain,
    bodies: &[MassiveBody],
    state: &JointState<'_>,
    external: Option<&SpatialWrench>,
) -> Vec<f64> {
    let k = forward_pass(chain, state);
    backward_pass(&k, bodies, external)
}
