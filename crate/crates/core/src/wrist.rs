//! Wrist actuation-axis optimization for serial and differential
//! drivetrains.
//!
//! Joint-space quantities are paired (WF, WD) vectors. A configuration maps
//! them to actuator space; the objective is the sum of the per-actuator
//! peak absolute power.

use std::fmt;
use std::str::FromStr;

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::TorqueRecord;
use crate::trajectory::{DirectionalCap, VelocityCaps};
use crate::{Error, Result};

/// Below this `|sin(θ_B − θ_A)|` the mixing matrix is treated as singular.
pub const COINCIDENCE_GUARD: f64 = 1e-3;

/// Paired (WF, WD) torques in N·m and velocities in °/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WristSampleSet {
    torque: Vec<[f64; 2]>,
    velocity: Vec<[f64; 2]>,
    caps: [DirectionalCap; 2],
}

impl WristSampleSet {
    /// Clamps velocities to the WF and WD caps. Missing caps do not limit.
    pub fn new(torque: Vec<[f64; 2]>, velocity: Vec<[f64; 2]>, caps: &VelocityCaps) -> Result<Self> {
        if torque.len() != velocity.len() {
            return Err(Error::FrameMismatch {
                expected: torque.len(),
                actual: velocity.len(),
            });
        }
        caps.validate()?;
        let unlimited = DirectionalCap {
            positive: f64::INFINITY,
            negative: f64::NEG_INFINITY,
        };
        let caps = ["WF", "WD"].map(|j| caps.get(j).copied().unwrap_or(unlimited));
        let velocity = velocity
            .into_iter()
            .map(|v| [caps[0].clamp(v[0]), caps[1].clamp(v[1])])
            .collect();
        Ok(WristSampleSet { torque, velocity, caps })
    }

    /// WF and WD columns of every record, concatenated.
    pub fn from_records(records: &[TorqueRecord], caps: &VelocityCaps) -> Result<Self> {
        let (wf, wd) = (
            crate::chain::ReportJoint::WF.column(),
            crate::chain::ReportJoint::WD.column(),
        );
        let mut torque = Vec::new();
        let mut velocity = Vec::new();
        for r in records {
            for k in 0..r.n_frames() {
                torque.push([r.torques[(k, wf)], r.torques[(k, wd)]]);
                velocity.push([r.velocities[(k, wf)], r.velocities[(k, wd)]]);
            }
        }
        Self::new(torque, velocity, caps)
    }

    pub fn torque(&self) -> &[[f64; 2]] {
        &self.torque
    }

    pub fn velocity(&self) -> &[[f64; 2]] {
        &self.velocity
    }

    /// WF and WD caps that were applied.
    pub fn caps(&self) -> &[DirectionalCap; 2] {
        &self.caps
    }

    pub fn len(&self) -> usize {
        self.torque.len()
    }

    pub fn is_empty(&self) -> bool {
        self.torque.is_empty()
    }

    /// Joint-space power `τ ⊙ ν` per sample, N·m·°/s.
    pub fn joint_power(&self) -> Vec<[f64; 2]> {
        self.torque
            .iter()
            .zip(&self.velocity)
            .map(|(t, v)| [t[0] * v[0], t[1] * v[1]])
            .collect()
    }
}

/// Wrist samples together with the joint angles (degrees) of each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WristSeries {
    pub angle: Vec<[f64; 2]>,
    pub samples: WristSampleSet,
}

impl WristSeries {
    pub fn new(angle: Vec<[f64; 2]>, samples: WristSampleSet) -> Result<Self> {
        if angle.len() != samples.len() {
            return Err(Error::FrameMismatch {
                expected: samples.len(),
                actual: angle.len(),
            });
        }
        Ok(WristSeries { angle, samples })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DriveKind {
    /// Serial, orthogonal axes.
    SO,
    /// Serial, non-orthogonal axes.
    SNO,
    /// Differential, orthogonal axes.
    DO,
    /// Differential, non-orthogonal axes.
    DNO,
}

impl DriveKind {
    pub const ALL: [DriveKind; 4] = [DriveKind::SO, DriveKind::SNO, DriveKind::DO, DriveKind::DNO];

    pub fn is_differential(self) -> bool {
        matches!(self, DriveKind::DO | DriveKind::DNO)
    }

    pub fn is_orthogonal(self) -> bool {
        matches!(self, DriveKind::SO | DriveKind::DO)
    }

    /// Orthogonal kind with the same transmission.
    pub fn orthogonal(self) -> DriveKind {
        if self.is_differential() {
            DriveKind::DO
        } else {
            DriveKind::SO
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DriveKind::SO => "SO",
            DriveKind::SNO => "SNO",
            DriveKind::DO => "DO",
            DriveKind::DNO => "DNO",
        }
    }
}

impl fmt::Display for DriveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DriveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DriveKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain(format!("unknown drive kind `{s}`")))
    }
}

/// Drivetrain kind and axis angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    pub kind: DriveKind,
    pub theta_a: f64,
    pub theta_b: f64,
}

impl DriveConfig {
    /// Serial drive along WF (θ_A = 0) and WD (θ_B = 90).
    pub const BASELINE: DriveConfig = DriveConfig {
        kind: DriveKind::SO,
        theta_a: 0.0,
        theta_b: 90.0,
    };

    /// Orthogonal configuration rotated by `theta`.
    pub fn orthogonal(kind: DriveKind, theta: f64) -> Self {
        DriveConfig {
            kind: kind.orthogonal(),
            theta_a: theta,
            theta_b: theta + 90.0,
        }
    }

    pub fn new(kind: DriveKind, theta_a: f64, theta_b: f64) -> Result<Self> {
        let c = DriveConfig { kind, theta_a, theta_b };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_a.is_finite() && self.theta_b.is_finite()) {
            return Err(Error::domain("axis angles must be finite"));
        }
        if self.kind.is_orthogonal() && (self.theta_b - self.theta_a - 90.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "{} requires theta_B = theta_A + 90, got {} and {}",
                self.kind, self.theta_a, self.theta_b
            )));
        }
        mixing_matrix(self.theta_a, self.theta_b).map(|_| ())
    }

    /// Same axes with `θ_A` in `[0, 180)`. Reversing both axes leaves every
    /// power model unchanged.
    pub fn normalized(&self) -> Self {
        let shift = 180.0 * (self.theta_a / 180.0).floor();
        DriveConfig {
            kind: self.kind,
            theta_a: self.theta_a - shift,
            theta_b: self.theta_b - shift,
        }
    }

    /// Linear maps from joint to actuator space.
    pub fn maps(&self) -> Result<ActuatorMaps> {
        let (m, _) = mixing_matrix(self.theta_a, self.theta_b)?;
        Ok(if self.kind.is_differential() {
            let inv_t = inverse_torque_coupling();
            let inv_v = inverse_velocity_coupling();
            let m_inv_t = m.try_inverse().expect("guarded above").transpose();
            ActuatorMaps {
                angle: inv_v * m,
                torque: inv_t * m_inv_t,
                velocity: inv_v * m,
                power: PowerModel::Differential,
                mixing: m,
            }
        } else {
            ActuatorMaps {
                angle: m,
                torque: m,
                velocity: m,
                power: PowerModel::Serial,
                mixing: m,
            }
        })
    }
}

impl fmt::Display for DriveConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}, {})", self.kind, self.theta_a, self.theta_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerModel {
    /// `P = M(τ ⊙ ν)`.
    Serial,
    /// `P = (Aτ·τ) ⊙ (Aν·ν)`.
    Differential,
}

/// Joint-to-actuator maps of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorMaps {
    pub angle: Matrix2<f64>,
    pub torque: Matrix2<f64>,
    pub velocity: Matrix2<f64>,
    pub power: PowerModel,
    pub mixing: Matrix2<f64>,
}

impl ActuatorMaps {
    pub fn power(&self, torque: [f64; 2], velocity: [f64; 2]) -> [f64; 2] {
        let (t, v) = (Vector2::from(torque), Vector2::from(velocity));
        match self.power {
            PowerModel::Serial => (self.mixing * t.component_mul(&v)).into(),
            PowerModel::Differential => (self.torque * t).component_mul(&(self.velocity * v)).into(),
        }
    }
}

/// `T_τ⁻¹` with `T_τ = [[1, 1], [1, −1]]`.
pub fn inverse_torque_coupling() -> Matrix2<f64> {
    Matrix2::new(0.5, 0.5, 0.5, -0.5)
}

/// `T_ν⁻¹` with `T_ν = [[0.5, 0.5], [0.5, −0.5]]`.
pub fn inverse_velocity_coupling() -> Matrix2<f64> {
    Matrix2::new(1.0, 1.0, 1.0, -1.0)
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90°.
pub fn sin_cos_deg(deg: f64) -> (f64, f64) {
    let r = deg.rem_euclid(360.0);
    if r % 90.0 == 0.0 {
        return match (r / 90.0) as u8 {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        };
    }
    r.to_radians().sin_cos()
}

/// `M = [[cos θ_A, cos θ_B], [sin θ_A, sin θ_B]]` and its determinant.
pub fn mixing_matrix(theta_a: f64, theta_b: f64) -> Result<(Matrix2<f64>, f64)> {
    let (sa, ca) = sin_cos_deg(theta_a);
    let (sb, cb) = sin_cos_deg(theta_b);
    let det = ca * sb - cb * sa;
    let guard = sin_cos_deg(theta_b - theta_a).0.abs();
    if guard < COINCIDENCE_GUARD {
        return Err(Error::CoincidentAxes(guard));
    }
    Ok((Matrix2::new(ca, cb, sa, sb), det))
}

/// 2-D rotation by `theta` degrees; equal to `M(θ, θ + 90)`.
pub fn rotation(theta: f64) -> Matrix2<f64> {
    mixing_matrix(theta, theta + 90.0).expect("orthogonal axes").0
}

/// N·m·°/s to W.
pub fn to_watts(power: f64) -> f64 {
    power.to_radians()
}

/// Per-sample actuator power, N·m·°/s.
pub fn actuator_power(config: &DriveConfig, samples: &WristSampleSet) -> Result<Vec<[f64; 2]>> {
    config.validate()?;
    let maps = config.maps()?;
    Ok(samples
        .torque
        .iter()
        .zip(&samples.velocity)
        .map(|(t, v)| maps.power(*t, *v))
        .collect())
}

/// `max|P_A| + max|P_B|`; zero for an empty matrix. Powers from
/// [`actuator_power`] are in N·m·°/s; [`to_watts`] converts.
pub fn objective(power: &[[f64; 2]]) -> f64 {
    let (a, b) = power
        .iter()
        .fold((0.0_f64, 0.0_f64), |(a, b), p| (a.max(p[0].abs()), b.max(p[1].abs())));
    a + b
}

fn config_objective(config: &DriveConfig, samples: &WristSampleSet) -> Option<f64> {
    let maps = config.maps().ok()?;
    let (mut a, mut b) = (0.0_f64, 0.0_f64);
    for (t, v) in samples.torque.iter().zip(&samples.velocity) {
        let p = maps.power(*t, *v);
        a = a.max(p[0].abs());
        b = b.max(p[1].abs());
    }
    Some(a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    /// Normalized so that `θ_A ∈ [0, 180)`.
    pub config: DriveConfig,
    pub objective: f64,
}

/// Grid search over the axis angles with optional Nelder–Mead refinement.
///
/// Orthogonal kinds search `θ ∈ [−90, 90)`. Non-orthogonal kinds search
/// `θ_A ∈ [−90, 90)` and `θ_B ∈ [θ_A − 180, θ_A + 180)`, skipping the
/// singular band, and also consider the orthogonal optimum, so the result is
/// never worse than the orthogonal kind. Orthogonal results are never worse
/// than the anatomical baseline.
pub fn optimize(kind: DriveKind, samples: &WristSampleSet, grid_step: f64, refine: bool) -> Result<Optimum> {
    if samples.is_empty() {
        return Err(Error::domain("wrist optimization needs at least one sample"));
    }
    if !(grid_step > 0.0 && grid_step <= 90.0) {
        return Err(Error::domain(format!("grid step must be in (0, 90], got {grid_step}")));
    }
    let steps = (180.0 / grid_step).ceil() as usize;
    let axis = |i: usize| -90.0 + i as f64 * grid_step;

    let mut candidates: Vec<DriveConfig> = if kind.is_orthogonal() {
        (0..steps).map(|i| DriveConfig::orthogonal(kind, axis(i))).collect()
    } else {
        (0..steps)
            .flat_map(|i| {
                let a = axis(i);
                (0..2 * steps).map(move |j| DriveConfig {
                    kind,
                    theta_a: a,
                    theta_b: a - 180.0 + j as f64 * grid_step,
                })
            })
            .collect()
    };
    if kind.is_orthogonal() {
        candidates.push(DriveConfig::orthogonal(kind, 0.0));
    }
    let scored: Vec<(DriveConfig, f64)> = candidates
        .par_iter()
        .filter_map(|c| config_objective(c, samples).map(|v| (*c, v)))
        .collect();
    let mut best = pick_best(&scored).ok_or_else(|| Error::domain("no admissible grid point"))?;

    if !kind.is_orthogonal() {
        let ortho = optimize(kind.orthogonal(), samples, grid_step, refine)?;
        let embedded = DriveConfig { kind, ..ortho.config };
        if let Some(v) = config_objective(&embedded, samples) {
            best = pick_best(&[best, (embedded, v)]).expect("nonempty");
        }
        if refine {
            best = refine_from(best, samples, grid_step);
        }
    } else if refine {
        best = refine_from(best, samples, grid_step);
    }
    Ok(Optimum {
        config: best.0.normalized(),
        objective: best.1,
    })
}

/// Lowest objective; near-ties go to the smallest `|θ_A|`, then `|θ_B|`.
fn pick_best(scored: &[(DriveConfig, f64)]) -> Option<(DriveConfig, f64)> {
    let min = scored.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    let tol = 1e-12 * min.abs().max(1.0);
    scored
        .iter()
        .filter(|s| s.1 <= min + tol)
        .min_by(|x, y| {
            (x.0.theta_a.abs(), x.0.theta_b.abs())
                .partial_cmp(&(y.0.theta_a.abs(), y.0.theta_b.abs()))
                .expect("finite angles")
        })
        .copied()
}

struct AngleCost<'a> {
    kind: DriveKind,
    samples: &'a WristSampleSet,
    penalty: f64,
}

impl AngleCost<'_> {
    fn config(&self, p: &[f64]) -> DriveConfig {
        if self.kind.is_orthogonal() {
            DriveConfig::orthogonal(self.kind, p[0])
        } else {
            DriveConfig {
                kind: self.kind,
                theta_a: p[0],
                theta_b: p[1],
            }
        }
    }
}

impl CostFunction for AngleCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(config_objective(&self.config(p), self.samples).unwrap_or(self.penalty))
    }
}

fn refine_from(start: (DriveConfig, f64), samples: &WristSampleSet, grid_step: f64) -> (DriveConfig, f64) {
    let kind = start.0.kind;
    let x0 = if kind.is_orthogonal() {
        vec![start.0.theta_a]
    } else {
        vec![start.0.theta_a, start.0.theta_b]
    };
    let mut simplex = vec![x0.clone()];
    for d in 0..x0.len() {
        let mut v = x0.clone();
        v[d] += 0.5 * grid_step;
        simplex.push(v);
    }
    let cost = AngleCost {
        kind,
        samples,
        penalty: 10.0 * start.1.max(1.0),
    };
    let refined = NelderMead::new(simplex)
        .with_sd_tolerance(1e-12)
        .and_then(|solver| Executor::new(cost, solver).configure(|s| s.max_iters(400)).run())
        .ok()
        .and_then(|res| {
            let state = res.state();
            let p = state.best_param.clone()?;
            let cost = AngleCost {
                kind,
                samples,
                penalty: f64::INFINITY,
            };
            let c = cost.config(&p);
            config_objective(&c, samples).map(|v| (c, v))
        });
    match refined {
        Some(r) if r.1 < start.1 => r,
        _ => start,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AxisId {
    A,
    B,
}

impl fmt::Display for AxisId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AxisId::A => "A",
            AxisId::B => "B",
        })
    }
}

/// Percent change of each requirement against the anatomical baseline axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentChange {
    pub rom: f64,
    pub torque: f64,
    pub velocity: f64,
    pub power: f64,
}

/// Requirements of one actuator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRequirement {
    pub axis: AxisId,
    /// Axis angle, degrees.
    pub theta: f64,
    /// Degrees.
    pub rom: f64,
    /// N·m.
    pub torque_max: f64,
    /// °/s.
    pub velocity_max: f64,
    /// W.
    pub power_max: f64,
    pub change: PercentChange,
}

fn raw_requirements(config: &DriveConfig, series: &WristSeries) -> Result<[[f64; 4]; 2]> {
    if series.samples.is_empty() {
        return Err(Error::domain("requirements need at least one sample"));
    }
    config.validate()?;
    let maps = config.maps()?;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut peak = [[0.0_f64; 3]; 2];
    let s = &series.samples;
    for ((q, t), v) in series.angle.iter().zip(&s.torque).zip(&s.velocity) {
        let q = maps.angle * Vector2::from(*q);
        let tq = maps.torque * Vector2::from(*t);
        let nu = maps.velocity * Vector2::from(*v);
        let p = maps.power(*t, *v);
        for i in 0..2 {
            lo[i] = lo[i].min(q[i]);
            hi[i] = hi[i].max(q[i]);
            peak[i][0] = peak[i][0].max(tq[i].abs());
            peak[i][1] = peak[i][1].max(nu[i].abs());
            peak[i][2] = peak[i][2].max(p[i].abs());
        }
    }
    Ok([0, 1].map(|i| [hi[i] - lo[i], peak[i][0], peak[i][1], peak[i][2]]))
}

fn percent(value: f64, baseline: f64) -> f64 {
    if baseline == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::NAN
        }
    } else {
        100.0 * (value - baseline) / baseline
    }
}

/// RoM and peak torque, velocity and power of both actuators, with percent
/// changes against the anatomical baseline.
pub fn axis_requirements(config: &DriveConfig, series: &WristSeries) -> Result<[AxisRequirement; 2]> {
    let own = raw_requirements(config, series)?;
    let base = raw_requirements(&DriveConfig::BASELINE, series)?;
    let theta = [config.theta_a, config.theta_b];
    Ok([AxisId::A, AxisId::B].map(|axis| {
        let i = axis as usize;
        let (o, b) = (own[i], base[i]);
        AxisRequirement {
            axis,
            theta: theta[i],
            rom: o[0],
            torque_max: o[1],
            velocity_max: o[2],
            power_max: to_watts(o[3]),
            change: PercentChange {
                rom: percent(o[0], b[0]),
                torque: percent(o[1], b[1]),
                velocity: percent(o[2], b[2]),
                power: percent(o[3], b[3]),
            },
        }
    }))
}

/// Optimized configuration with its requirements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WristOptimizationResult {
    pub optimum: Optimum,
    pub baseline_objective: f64,
    pub requirements: [AxisRequirement; 2],
}

impl WristOptimizationResult {
    /// Objective reduction against the baseline, percent.
    pub fn reduction_percent(&self) -> f64 {
        -percent(self.optimum.objective, self.baseline_objective)
    }
}

/// Optimizes one kind and evaluates its requirements on `series`.
pub fn optimize_series(
    kind: DriveKind,
    series: &WristSeries,
    grid_step: f64,
    refine: bool,
) -> Result<WristOptimizationResult> {
    let optimum = optimize(kind, &series.samples, grid_step, refine)?;
    let baseline_objective = objective(&actuator_power(&DriveConfig::BASELINE, &series.samples)?);
    let requirements = axis_requirements(&optimum.config, series)?;
    Ok(WristOptimizationResult {
        optimum,
        baseline_objective,
        requirements,
    })
}
