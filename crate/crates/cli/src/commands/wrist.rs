use std::collections::BTreeMap;
use std::path::Path;

use adlreq::chain::ReportJoint;
use adlreq::dynamics::TorqueSource;
use adlreq::regression::{pca2, pearson};
use adlreq::wrist::{
    axis_requirements, optimize_series, sin_cos_deg, to_watts, AxisRequirement, DriveConfig, DriveKind,
    WristOptimizationResult, WristSampleSet, WristSeries,
};
use rayon::prelude::*;

use super::store::{load_store, load_trajectory};
use crate::format::fmt6;
use crate::io::{display_path, read_to_string, OutputDir};
use crate::manifest::RunManifest;
use crate::svg::{Mark, Plot};
use crate::{CliError, Context};

pub const SAMPLE_COLUMNS: [&str; 6] = ["q_WF", "q_WD", "tau_WF", "tau_WD", "nu_WF", "nu_WD"];

/// WF/WD value pairs, one per sample.
type Pairs = Vec<[f64; 2]>;

/// Most scatter points drawn in the plot.
const PLOT_POINTS: usize = 2000;

/// Reads a sample CSV with (at least) the [`SAMPLE_COLUMNS`], in any order.
/// Returns angles, torques and velocities.
pub fn parse_samples(text: &str) -> Result<(Pairs, Pairs, Pairs), CliError> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::Validation("sample file is empty".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let cols = SAMPLE_COLUMNS
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CliError::Validation(format!("sample file lacks the `{name}` column")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (mut q, mut t, mut v) = (Vec::new(), Vec::new(), Vec::new());
    for (row, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let x = cols
            .iter()
            .map(|&c| f.get(c).and_then(|s| s.parse::<f64>().ok()).filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| CliError::Validation(format!("sample row {}: expected finite numbers", row + 1)))?;
        q.push([x[0], x[1]]);
        t.push([x[2], x[3]]);
        v.push([x[4], x[5]]);
    }
    if q.is_empty() {
        return Err(CliError::Validation("sample file has no rows".into()));
    }
    Ok((q, t, v))
}

/// Samples of every record with the configured source label, joined with
/// the angles of its stored trajectory.
fn samples_from_store(
    ctx: &Context,
    dir: &Path,
    manifest: &mut RunManifest,
) -> Result<(Pairs, Pairs, Pairs), CliError> {
    let label = ctx
        .config
        .wrist
        .source
        .parse::<TorqueSource>()
        .map_err(CliError::validation)?
        .label();
    let store = load_store(dir, |e| e.source == label)?;
    let mut trajectories = BTreeMap::new();
    for e in &store.entries {
        if !trajectories.contains_key(&e.trajectory) {
            let loaded = load_trajectory(dir, &e.trajectory)?;
            trajectories.insert(e.trajectory.clone(), loaded);
        }
    }
    for (rel, bytes) in store
        .files
        .iter()
        .map(|(k, b)| (k, b))
        .chain(trajectories.iter().map(|(k, (_, b))| (k, b)))
    {
        manifest.input(display_path(&dir.join(rel), &ctx.roots()), bytes);
    }
    let (wf, wd) = (ReportJoint::WF, ReportJoint::WD);
    let (mut q, mut t, mut v) = (Vec::new(), Vec::new(), Vec::new());
    for (e, r) in store.entries.iter().zip(&store.records) {
        let traj = &trajectories[&e.trajectory].0;
        let missing = || CliError::Validation(format!("{}: trajectory lacks WF or WD", e.trajectory));
        let a = traj.joint_angles(wf.name()).ok_or_else(missing)?;
        let b = traj.joint_angles(wd.name()).ok_or_else(missing)?;
        if a.len() != r.n_frames() {
            return Err(CliError::Runtime(format!(
                "{}: {} trajectory frames for {} record frames",
                e.file,
                a.len(),
                r.n_frames()
            )));
        }
        let (tf, td, vf, vd) = (
            r.joint_torques(wf),
            r.joint_torques(wd),
            r.joint_velocities(wf),
            r.joint_velocities(wd),
        );
        for k in 0..r.n_frames() {
            q.push([a[k], b[k]]);
            t.push([tf[k], td[k]]);
            v.push([vf[k], vd[k]]);
        }
    }
    Ok((q, t, v))
}

/// Optimizes the requested drive kinds; writes the requirement table,
/// torque and velocity statistics and a torque scatter plot.
pub fn optimize_wrist(
    ctx: &Context,
    records: Option<&Path>,
    samples: Option<&Path>,
    kinds: Option<&[String]>,
) -> Result<(), CliError> {
    let cfg = &ctx.config.wrist;
    let mut manifest = ctx.manifest("optimize-wrist");
    let kinds: Vec<DriveKind> = match kinds {
        Some(k) => k
            .iter()
            .map(|s| s.trim().parse().map_err(CliError::validation))
            .collect::<Result<_, _>>()?,
        None => cfg.kinds.clone(),
    };
    let (q, t, v) = match samples.map(Path::to_path_buf).or_else(|| cfg.samples.clone()) {
        Some(path) => {
            let text = read_to_string(&path)?;
            manifest.input(display_path(&path, &ctx.roots()), text.as_bytes());
            parse_samples(&text)?
        }
        None => {
            let dir = records
                .map(Path::to_path_buf)
                .or_else(|| ctx.config.inputs.records.clone())
                .unwrap_or_else(|| ctx.out.join("records"));
            samples_from_store(ctx, &dir, &mut manifest)?
        }
    };
    let n = q.len();
    let set = WristSampleSet::new(t, v, &ctx.config.slow_down.caps).map_err(CliError::validation)?;
    let series = WristSeries::new(q, set).map_err(CliError::validation)?;
    manifest.stage("samples", n, n);

    let results: Vec<WristOptimizationResult> = manifest
        .timed("optimize", || {
            kinds
                .par_iter()
                .map(|&k| optimize_series(k, &series, cfg.grid_step, cfg.refine))
                .collect::<Result<Vec<_>, _>>()
        })
        .map_err(CliError::runtime)?;
    let baseline = axis_requirements(&DriveConfig::BASELINE, &series).map_err(CliError::runtime)?;
    let baseline_objective = adlreq::wrist::objective(
        &adlreq::wrist::actuator_power(&DriveConfig::BASELINE, &series.samples).map_err(CliError::runtime)?,
    );

    let mut table = String::from(
        "config,axis,theta,rom,torque_max,velocity_max,power_max,rom_change,torque_change,velocity_change,power_change,objective,reduction\n",
    );
    push_rows(&mut table, "baseline", &baseline, baseline_objective, 0.0);
    for (k, r) in kinds.iter().zip(&results) {
        push_rows(
            &mut table,
            k.name(),
            &r.requirements,
            r.optimum.objective,
            r.reduction_percent(),
        );
    }

    let mut out = OutputDir::new(&ctx.out)?;
    out.write("wrist_requirements.csv", &table)?;
    out.write("wrist_statistics.csv", &statistics(&series)?)?;
    out.write("wrist_torque.svg", &plot(&series, &kinds, &results))?;
    super::finish(&mut out, manifest)
}

fn push_rows(out: &mut String, name: &str, req: &[AxisRequirement; 2], objective: f64, reduction: f64) {
    for r in req {
        let c = &r.change;
        let nums = [
            r.theta,
            r.rom,
            r.torque_max,
            r.velocity_max,
            r.power_max,
            c.rom,
            c.torque,
            c.velocity,
            c.power,
            to_watts(objective),
            reduction,
        ];
        let nums: Vec<String> = nums.iter().map(|x| fmt6(*x)).collect();
        out.push_str(&format!("{name},{},{}\n", r.axis, nums.join(",")));
    }
}

fn statistics(series: &WristSeries) -> Result<String, CliError> {
    let mut s = String::from("quantity,n,pearson_r,p_value,pc1_angle,pc1_explained\n");
    let s_ = &series.samples;
    for (name, data) in [("torque", s_.torque()), ("velocity", s_.velocity())] {
        let x: Vec<f64> = data.iter().map(|p| p[0]).collect();
        let y: Vec<f64> = data.iter().map(|p| p[1]).collect();
        // constant columns leave correlation undefined
        let (r, p) = pearson(&x, &y).map_or((f64::NAN, f64::NAN), |c| (c.r, c.p_value));
        let (angle, explained) = pca2(data).map_or((f64::NAN, f64::NAN), |c| (c.first_angle_deg(), c.explained[0]));
        s.push_str(&format!(
            "{name},{},{},{},{},{}\n",
            data.len(),
            fmt6(r),
            fmt6(p),
            fmt6(angle),
            fmt6(explained)
        ));
    }
    Ok(s)
}

fn plot(series: &WristSeries, kinds: &[DriveKind], results: &[WristOptimizationResult]) -> String {
    let torque = series.samples.torque();
    let stride = torque.len().div_ceil(PLOT_POINTS).max(1);
    let points: Vec<[f64; 2]> = torque.iter().step_by(stride).copied().collect();
    let extent = points.iter().fold(0.0_f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let extent = if extent > 0.0 { extent } else { 1.0 };
    let axis = |theta: f64| {
        let (s, c) = sin_cos_deg(theta);
        vec![[-c * extent, -s * extent], [c * extent, s * extent]]
    };
    const COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];
    let mut marks = vec![Mark::Points {
        xy: points,
        color: "#444",
    }];
    for (i, (k, r)) in kinds.iter().zip(results).enumerate() {
        let c = r.optimum.config;
        for (ax, theta) in [("A", c.theta_a), ("B", c.theta_b)] {
            marks.push(Mark::Line {
                xy: axis(theta),
                color: COLORS[i % COLORS.len()],
                label: format!("{k} axis {ax}: {} deg", fmt6(theta)),
            });
        }
    }
    Plot {
        title: "Wrist torque with actuation axes".into(),
        x_label: "tau_WF (N m)".into(),
        y_label: "tau_WD (N m)".into(),
        marks,
    }
    .render()
}
