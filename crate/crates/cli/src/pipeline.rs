//! Trial loading and preprocessing shared by `simulate` and `summarize`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use adlreq::dynamics::ObjectPoseTrajectory;
use adlreq::trajectory::{
    differentiate, lowpass_filter, parse_trajectory, screen_velocity_outliers, slow_down, JointTrajectory, Task,
};
use rayon::prelude::*;

use crate::manifest::{ExclusionEntry, FailureEntry, RunManifest};
use crate::{io, synthetic, CliError, Context};

/// Velocity screening needs quartiles of at least this many peer trials;
/// smaller task groups pass unscreened.
pub const MIN_SCREEN_GROUP: usize = 4;

/// Metadata key naming an object pose CSV, relative to the trajectory file.
pub const OBJECT_POSE_KEY: &str = "object_pose";

#[derive(Debug, Clone)]
pub struct Trial {
    pub trajectory: JointTrajectory,
    /// Recorded object pose, frame-aligned with the trajectory.
    pub object_pose: Option<ObjectPoseTrajectory>,
}

impl Trial {
    pub fn id(&self) -> String {
        self.trajectory.meta.trial_id()
    }
}

/// Reads configured and extra trajectory files, or synthesizes trials when
/// there are none. Trial ids must be unique.
pub fn load_trials(ctx: &Context, extra: &[PathBuf], manifest: &mut RunManifest) -> Result<Vec<Trial>, CliError> {
    let cfg = &ctx.config;
    let paths: Vec<PathBuf> = cfg.inputs.trajectories.iter().chain(extra).cloned().collect();
    let mut trials = Vec::new();
    for path in &paths {
        let text = io::read_to_string(path)?;
        manifest.input(io::display_path(path, &ctx.roots()), text.as_bytes());
        let trajectory =
            parse_trajectory(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let object_pose = match trajectory.meta.extra.get(OBJECT_POSE_KEY) {
            Some(rel) => {
                let pose_path = path.parent().unwrap_or(Path::new(".")).join(rel);
                let text = io::read_to_string(&pose_path)?;
                manifest.input(io::display_path(&pose_path, &ctx.roots()), text.as_bytes());
                let pose = ObjectPoseTrajectory::parse_csv(&text)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", pose_path.display())))?;
                if pose.len() != trajectory.n_frames() {
                    return Err(CliError::Validation(format!(
                        "{}: {} pose rows for {} trajectory frames",
                        pose_path.display(),
                        pose.len(),
                        trajectory.n_frames()
                    )));
                }
                if cfg.slow_down.enabled {
                    return Err(CliError::Validation(format!(
                        "{}: recorded object poses cannot be combined with slow-down",
                        path.display()
                    )));
                }
                Some(pose)
            }
            None => None,
        };
        trials.push(Trial {
            trajectory,
            object_pose,
        });
    }
    if cfg.inputs.synthetic.trials > 0 {
        for trajectory in synthetic::synthetic_trials(&cfg.inputs.synthetic, ctx.seed)? {
            trials.push(Trial {
                trajectory,
                object_pose: None,
            });
        }
    }
    if trials.is_empty() {
        return Err(CliError::Validation(
            "no trajectories: list files or set inputs.synthetic.trials".into(),
        ));
    }
    let mut seen = BTreeSet::new();
    for t in &trials {
        if !seen.insert(t.id()) {
            return Err(CliError::Validation(format!("duplicate trial id {}", t.id())));
        }
    }
    manifest.stage("load", trials.len(), trials.len());
    Ok(trials)
}

/// Drops failed trials into the manifest and keeps the rest in order.
fn keep_ok(stage: &str, results: Vec<(String, Result<Trial, String>)>, manifest: &mut RunManifest) -> Vec<Trial> {
    let n = results.len();
    let mut kept = Vec::with_capacity(n);
    for (trial, r) in results {
        match r {
            Ok(t) => kept.push(t),
            Err(error) => manifest.failures.push(FailureEntry {
                stage: stage.to_string(),
                trial,
                error,
            }),
        }
    }
    manifest.stage(stage, n, kept.len());
    kept
}

/// Low-pass filter, velocity screening per task and optional slow-down.
pub fn preprocess(
    ctx: &Context,
    trials: Vec<Trial>,
    apply_slow_down: bool,
    manifest: &mut RunManifest,
) -> Result<Vec<Trial>, CliError> {
    let cfg = &ctx.config;
    let mut trials = trials;
    if cfg.filter.enabled {
        let results = manifest.timed("filter", || {
            trials
                .into_par_iter()
                .map(|t| {
                    let id = t.id();
                    let r = lowpass_filter(&t.trajectory, cfg.filter.order, cfg.filter.cutoff_hz)
                        .map(|trajectory| Trial { trajectory, ..t })
                        .map_err(|e| e.to_string());
                    (id, r)
                })
                .collect()
        });
        trials = keep_ok("filter", results, manifest);
    }

    if cfg.screening.velocity {
        trials = screen_velocity(trials, manifest)?;
    }

    if apply_slow_down {
        let caps = &cfg.slow_down.caps;
        let results = manifest.timed("slow_down", || {
            trials
                .into_par_iter()
                .map(|t| {
                    let id = t.id();
                    let r = slow_down(&t.trajectory, caps)
                        .map(|trajectory| Trial { trajectory, ..t })
                        .map_err(|e| e.to_string());
                    (id, r)
                })
                .collect()
        });
        trials = keep_ok("slow_down", results, manifest);
    }
    if trials.is_empty() {
        return Err(CliError::Runtime("no trials left after preprocessing".into()));
    }
    Ok(trials)
}

fn screen_velocity(trials: Vec<Trial>, manifest: &mut RunManifest) -> Result<Vec<Trial>, CliError> {
    let n = trials.len();
    let mut groups: BTreeMap<Option<Task>, Vec<usize>> = BTreeMap::new();
    for (i, t) in trials.iter().enumerate() {
        groups.entry(t.trajectory.meta.task).or_default().push(i);
    }
    let mut excluded = vec![false; n];
    for members in groups.values() {
        if members.len() < MIN_SCREEN_GROUP {
            continue;
        }
        let velocities = members
            .iter()
            .map(|&i| differentiate(&trials[i].trajectory))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::runtime)?;
        let partition = screen_velocity_outliers(&velocities).map_err(CliError::runtime)?;
        for e in partition.excluded {
            let i = members[e.index];
            excluded[i] = true;
            manifest.exclusions.push(ExclusionEntry {
                stage: "velocity_screen".into(),
                trial: trials[i].id(),
                source: None,
                rule: e.rule,
            });
        }
    }
    let kept: Vec<Trial> = trials
        .into_iter()
        .zip(excluded)
        .filter_map(|(t, x)| (!x).then_some(t))
        .collect();
    manifest.stage("velocity_screen", n, kept.len());
    Ok(kept)
}

/// Trajectory CSV with every number at six significant digits.
pub fn trajectory_csv(traj: &JointTrajectory) -> String {
    reformat_numbers(&traj.to_csv())
}

/// Rewrites every data row of a `#`-commented CSV with [`fmt6`](crate::format::fmt6);
/// comment and header lines pass through.
pub fn reformat_numbers(csv: &str) -> String {
    let mut out = String::with_capacity(csv.len());
    let mut header = false;
    for line in csv.lines() {
        if line.starts_with('#') || !header {
            header |= !line.starts_with('#');
            out.push_str(line);
        } else {
            let fields: Vec<String> = line
                .split(',')
                .map(|f| f.parse::<f64>().map_or_else(|_| f.to_string(), crate::format::fmt6))
                .collect();
            out.push_str(&fields.join(","));
        }
        out.push('\n');
    }
    out
}

/// One CSV field, quoted when needed.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
