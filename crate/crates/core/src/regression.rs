//! Percentile torques, through-origin linear regressors and composite peak
//! torque prediction.
//!
//! For a combination of joint, task and body, the `p`-th percentile torque
//! is modelled as `τ = K·X`, where `X` is mass × CoM distance for cylinders
//! and mass (or static torque) for hands and objects.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ModelId, ReportJoint, Segment, SegmentGeometry};
use crate::dynamics::{ObjectDefinition, TorqueRecord, TorqueSource};
use crate::trajectory::Task;
use crate::{Error, Result};

pub use crate::stats::{pca2, pearson, percentile, percentiles, Pca2, Pearson};

/// Percentiles every combination is fitted at.
pub const PERCENTILES: [u8; 5] = [0, 25, 50, 75, 100];

/// Body of a regression combination; objects carry their name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BodyKind {
    Humerus,
    Ulna,
    Hand,
    Object(String),
}

impl fmt::Display for BodyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyKind::Humerus => f.write_str("Humerus"),
            BodyKind::Ulna => f.write_str("Ulna"),
            BodyKind::Hand => f.write_str("Hand"),
            BodyKind::Object(name) => write!(f, "object:{name}"),
        }
    }
}

impl FromStr for BodyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Humerus" => Ok(BodyKind::Humerus),
            "Ulna" => Ok(BodyKind::Ulna),
            "Hand" => Ok(BodyKind::Hand),
            other => other
                .strip_prefix("object:")
                .filter(|n| !n.is_empty())
                .map(|n| BodyKind::Object(n.to_string()))
                .ok_or_else(|| Error::domain(format!("unknown body `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComboKey {
    pub joint: ReportJoint,
    pub task: Task,
    pub body: BodyKind,
}

impl fmt::Display for ComboKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.joint, self.task, self.body)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorEntry {
    pub combo: ComboKey,
    pub percentile: u8,
    /// Slope: N·m/(kg·m) for cylinders, N·m/kg for hands and mass objects,
    /// dimensionless for static-torque objects.
    pub k: f64,
    /// Coefficient of determination of the through-origin fit.
    pub r: f64,
    pub n_points: usize,
}

/// Fitted slopes keyed by combination and percentile.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoefficientTable {
    entries: BTreeMap<(ComboKey, u8), RegressorEntry>,
    pub metadata: BTreeMap<String, String>,
}

impl CoefficientTable {
    /// Adds or replaces the entry for its key.
    pub fn insert(&mut self, entry: RegressorEntry) {
        self.entries.insert((entry.combo.clone(), entry.percentile), entry);
    }

    pub fn get(&self, combo: &ComboKey, percentile: u8) -> Option<&RegressorEntry> {
        self.entries.get(&(combo.clone(), percentile))
    }

    pub fn entries(&self) -> impl Iterator<Item = &RegressorEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct combinations in key order.
    pub fn combos(&self) -> Vec<ComboKey> {
        let mut out: Vec<ComboKey> = Vec::new();
        for (combo, _) in self.entries.keys() {
            if out.last() != Some(combo) {
                out.push(combo.clone());
            }
        }
        out
    }

    /// `joint,task,body,percentile,K,R,n`, preceded by `# key=value`
    /// metadata lines.
    pub fn to_csv_with(&self, fmt: impl Fn(f64) -> String) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str("joint,task,body,percentile,K,R,n\n");
        for e in self.entries() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.combo.joint,
                e.combo.task,
                e.combo.body,
                e.percentile,
                fmt(e.k),
                fmt(e.r),
                e.n_points
            ));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut table = CoefficientTable::default();
        let mut header = false;
        let mut row = 0;
        for line in text.lines().map(str::trim) {
            if line.is_empty() {
                continue;
            }
            if let Some(c) = line.strip_prefix('#') {
                if let Some((k, v)) = c.split_once('=') {
                    table.metadata.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if !header {
                if line != "joint,task,body,percentile,K,R,n" {
                    return Err(Error::Parse {
                        row: 0,
                        msg: "coefficient header must be joint,task,body,percentile,K,R,n".into(),
                    });
                }
                header = true;
                continue;
            }
            row += 1;
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse_err = |msg: &str| Error::Parse {
                row,
                msg: msg.to_string(),
            };
            if f.len() != 7 {
                return Err(parse_err("expected 7 fields"));
            }
            let combo = ComboKey {
                joint: f[0].parse().map_err(|_| parse_err("bad joint"))?,
                task: f[1].parse().map_err(|_| parse_err("bad task"))?,
                body: f[2].parse().map_err(|_| parse_err("bad body"))?,
            };
            table.insert(RegressorEntry {
                combo,
                percentile: f[3].parse().map_err(|_| parse_err("bad percentile"))?,
                k: f[4].parse().map_err(|_| parse_err("bad K"))?,
                r: f[5].parse().map_err(|_| parse_err("bad R"))?,
                n_points: f[6].parse().map_err(|_| parse_err("bad n"))?,
            });
        }
        Ok(table)
    }
}

/// Body and regression variable of a torque source. Cylinders use
/// `mass × fraction × mean segment length`; hands use mass; objects their
/// mass or static-torque magnitude.
pub fn design_value(
    source: &TorqueSource,
    mean_geometry: &SegmentGeometry,
    objects: &[ObjectDefinition],
) -> Result<(BodyKind, f64)> {
    match source {
        TorqueSource::Model(ModelId::Cylinder {
            segment,
            mass,
            fraction,
        }) => {
            let body = match segment {
                Segment::Humerus => BodyKind::Humerus,
                Segment::Ulna => BodyKind::Ulna,
            };
            Ok((body, mass * fraction * segment.length(mean_geometry)))
        }
        TorqueSource::Model(ModelId::Hand { mass }) => Ok((BodyKind::Hand, *mass)),
        TorqueSource::Object { name, value } => {
            let def = objects.iter().find(|o| &o.name == name);
            if def.is_some_and(|d| !d.regressable) {
                return Err(Error::NonRegressable(name.clone()));
            }
            Ok((BodyKind::Object(name.clone()), value.abs()))
        }
        TorqueSource::Composite(_) => Err(Error::domain("composite records have no single design value")),
    }
}

/// Regression variables of several sources; fails on the first
/// non-regressable one.
pub fn build_design(
    sources: &[TorqueSource],
    mean_geometry: &SegmentGeometry,
    objects: &[ObjectDefinition],
) -> Result<Vec<f64>> {
    sources
        .iter()
        .map(|s| design_value(s, mean_geometry, objects).map(|(_, x)| x))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub k: f64,
    pub r: f64,
}

/// Least squares through the origin: `K = Σxy / Σx²`,
/// `R = 1 − Σ(y − Kx)² / Σy²`. All-zero `y` gives `K = 0, R = 1`.
pub fn fit_lrm(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::domain(format!(
            "{} design points but {} responses",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::domain("at least two points are needed"));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if sxx == 0.0 {
        return Err(Error::domain("design vector is all zero"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let k = sxy / sxx;
    if syy == 0.0 {
        return Ok(LinearFit { k, r: 1.0 });
    }
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - k * a).powi(2)).sum();
    Ok(LinearFit {
        k,
        r: 1.0 - ss_res / syy,
    })
}

/// A combination that could not be fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCombo {
    pub task: Option<Task>,
    pub body: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub table: CoefficientTable,
    pub skipped: Vec<SkippedCombo>,
}

/// Design value bits → (design value, record indices).
type DesignPoints = BTreeMap<u64, (f64, Vec<usize>)>;

/// Fits every (joint, task, body) combination at [`PERCENTILES`]. Torque
/// samples of all records sharing task, body and design value are pooled
/// before the percentile is taken.
pub fn fit_all(
    records: &[TorqueRecord],
    mean_geometry: &SegmentGeometry,
    objects: &[ObjectDefinition],
) -> Result<FitReport> {
    let mut skipped: BTreeMap<(Option<Task>, String), String> = BTreeMap::new();
    // (task, body) → design value bits → record indices
    let mut groups: BTreeMap<(Task, BodyKind), DesignPoints> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let source = &r.provenance.source;
        let task = r.provenance.trial.task;
        let (body, x) = match design_value(source, mean_geometry, objects) {
            Ok(v) => v,
            Err(e) => {
                let body = match source {
                    TorqueSource::Object { name, .. } => format!("object:{name}"),
                    other => other.label(),
                };
                skipped.entry((task, body)).or_insert_with(|| e.to_string());
                continue;
            }
        };
        let Some(task) = task else {
            skipped
                .entry((None, body.to_string()))
                .or_insert_with(|| "record has no task".into());
            continue;
        };
        groups
            .entry((task, body))
            .or_default()
            .entry(x.to_bits())
            .or_insert_with(|| (x, Vec::new()))
            .1
            .push(i);
    }

    let fitted: Vec<Result<Vec<RegressorEntry>>> = groups
        .par_iter()
        .filter(|(_, points)| points.len() >= 2)
        .map(|((task, body), points)| fit_group(records, *task, body, points))
        .collect();
    let mut table = CoefficientTable::default();
    for entries in fitted {
        for e in entries? {
            table.insert(e);
        }
    }
    for ((task, body), points) in &groups {
        if points.len() < 2 {
            skipped.insert(
                (Some(*task), body.to_string()),
                format!("{} design point(s); at least 2 are needed", points.len()),
            );
        }
    }
    let skipped = skipped
        .into_iter()
        .map(|((task, body), reason)| SkippedCombo { task, body, reason })
        .collect();
    Ok(FitReport { table, skipped })
}

fn fit_group(
    records: &[TorqueRecord],
    task: Task,
    body: &BodyKind,
    points: &DesignPoints,
) -> Result<Vec<RegressorEntry>> {
    let mut x = Vec::with_capacity(points.len());
    // per joint, per design point: percentiles
    let mut y: Vec<Vec<Vec<f64>>> = vec![Vec::new(); 5];
    let mut ordered: Vec<&(f64, Vec<usize>)> = points.values().collect();
    ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
    let levels: Vec<f64> = PERCENTILES.iter().map(|&p| f64::from(p)).collect();
    for (xv, members) in ordered {
        x.push(*xv);
        for joint in ReportJoint::ALL {
            let pooled: Vec<f64> = members
                .iter()
                .flat_map(|&i| {
                    records[i]
                        .torques
                        .column(joint.column())
                        .iter()
                        .copied()
                        .collect::<Vec<_>>()
                })
                .collect();
            y[joint.column()].push(percentiles(&pooled, &levels)?);
        }
    }
    let mut out = Vec::new();
    for joint in ReportJoint::ALL {
        for (pi, &p) in PERCENTILES.iter().enumerate() {
            let yp: Vec<f64> = y[joint.column()].iter().map(|v| v[pi]).collect();
            let fit = fit_lrm(&x, &yp)?;
            out.push(RegressorEntry {
                combo: ComboKey {
                    joint,
                    task,
                    body: body.clone(),
                },
                percentile: p,
                k: fit.k,
                r: fit.r,
                n_points: x.len(),
            });
        }
    }
    Ok(out)
}

/// `Σ Kᵢ·sᵢ` at the 0th or 100th percentile. Quartiles of components do not
/// add up to quartiles of the composite and are refused.
pub fn predict_peak_torque(composition: &[(ComboKey, f64)], table: &CoefficientTable, percentile: u8) -> Result<f64> {
    if percentile != 0 && percentile != 100 {
        return Err(Error::NonAdditivePercentile(percentile));
    }
    composition.iter().try_fold(0.0, |acc, (combo, scalar)| {
        table
            .get(combo, percentile)
            .map(|e| acc + e.k * scalar)
            .ok_or_else(|| Error::MissingCoefficient(format!("{combo} at p{percentile}")))
    })
}
