use std::path::PathBuf;

use adlreq::trajectory::summarize_kinematics;

use crate::format::fmt6;
use crate::io::OutputDir;
use crate::pipeline::{load_trials, preprocess};
use crate::{CliError, Context};

/// Angle ranges and velocity percentiles per task and overall; writes
/// `kinematics.csv`.
pub fn summarize(ctx: &Context, extra: &[PathBuf]) -> Result<(), CliError> {
    let mut manifest = ctx.manifest("summarize");
    let trials = load_trials(ctx, extra, &mut manifest)?;
    let trials = preprocess(ctx, trials, ctx.config.summarize.slow_down, &mut manifest)?;
    let trajectories: Vec<_> = trials.into_iter().map(|t| t.trajectory).collect();
    let summary = manifest
        .timed("summarize", || {
            summarize_kinematics(&trajectories, &ctx.config.summarize.percentiles)
        })
        .map_err(CliError::runtime)?;
    let mut out = OutputDir::new(&ctx.out)?;
    out.write("kinematics.csv", &summary.to_csv_with(fmt6))?;
    super::finish(&mut out, manifest)
}
