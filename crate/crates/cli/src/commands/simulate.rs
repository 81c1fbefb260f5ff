use std::collections::BTreeMap;
use std::path::PathBuf;

use adlreq::chain::{build_default_chain, generate_model_stack_with};
use adlreq::dynamics::{
    object_wrench, screen_torque_outliers, task_wrench, ObjectLoad, PreparedTrial, TorqueRecord, TorqueSource,
};
use adlreq::trajectory::Task;
use rayon::prelude::*;

use super::store::{index_csv, StoreEntry};
use crate::format::fmt6;
use crate::io::OutputDir;
use crate::manifest::{ExclusionEntry, FailureEntry, RunManifest};
use crate::pipeline::{load_trials, preprocess, trajectory_csv, Trial};
use crate::{CliError, Context};

/// Metadata key restricting a trial to one catalogue object.
pub const OBJECT_KEY: &str = "object";

/// Filter, screen and slow down trials, then run inverse dynamics for every
/// stack model and every object instance of the trial's task. Records go to
/// `<out>/records`.
pub fn simulate(ctx: &Context, extra: &[PathBuf]) -> Result<(), CliError> {
    let mut manifest = ctx.manifest("simulate");
    let trials = load_trials(ctx, extra, &mut manifest)?;
    let trials = preprocess(ctx, trials, ctx.config.slow_down.enabled, &mut manifest)?;

    let results: Vec<(String, Result<Vec<TorqueRecord>, String>)> = manifest.timed("inverse_dynamics", || {
        trials
            .par_iter()
            .map(|t| (t.id(), simulate_trial(ctx, t).map_err(|e| e.to_string())))
            .collect()
    });
    let n_trials = results.len();
    let mut per_trial: Vec<(usize, Vec<TorqueRecord>)> = Vec::new();
    for (i, (trial, r)) in results.into_iter().enumerate() {
        match r {
            Ok(records) => per_trial.push((i, records)),
            Err(error) => manifest.failures.push(FailureEntry {
                stage: "inverse_dynamics".into(),
                trial,
                error,
            }),
        }
    }
    manifest.stage("inverse_dynamics", n_trials, per_trial.len());

    let records = screen_torques(ctx, per_trial, &mut manifest)?;
    write_store(ctx, &trials, records, manifest)
}

fn simulate_trial(ctx: &Context, trial: &Trial) -> Result<Vec<TorqueRecord>, CliError> {
    let cfg = &ctx.config;
    let traj = &trial.trajectory;
    let geometry = cfg.geometry.for_subject(traj.meta.subject.as_deref())?;
    let chain = build_default_chain(&geometry).map_err(CliError::runtime)?;
    let stack = generate_model_stack_with(&geometry, &cfg.stack.masses, &cfg.stack.fractions, &cfg.stack.options())
        .map_err(CliError::validation)?;
    let prepared = PreparedTrial::new(&chain, traj).map_err(CliError::runtime)?;
    let mut records = Vec::with_capacity(stack.len());
    for model in &stack {
        records.push(
            prepared
                .record(&[model.body()], None, TorqueSource::Model(model.id()))
                .map_err(CliError::runtime)?,
        );
    }
    if !cfg.objects.enabled {
        return Ok(records);
    }
    let Some(task) = traj.meta.task else {
        return Ok(records);
    };
    let wanted = traj.meta.extra.get(OBJECT_KEY);
    for def in &cfg.objects.definitions {
        if !def.tasks.contains(&task) || wanted.is_some_and(|w| w != &def.name) {
            continue;
        }
        for object in def.instances() {
            let wrench = match (&trial.object_pose, object.load) {
                (Some(pose), ObjectLoad::Mass { .. }) => object_wrench(&object, pose),
                _ => task_wrench(&chain, traj, &object),
            };
            let mut load = wrench.map_err(CliError::runtime)?;
            // the arm feels the reaction of what the hand exerts
            load.scale(-1.0);
            let source = TorqueSource::Object {
                name: object.name.clone(),
                value: object.load.value(),
            };
            records.push(prepared.record(&[], Some(&load), source).map_err(CliError::runtime)?);
        }
    }
    Ok(records)
}

type Located = ((usize, usize), TorqueRecord);

/// Torque screening within each (task, source) group. Returns kept records
/// ordered by trial, then by position within the trial.
fn screen_torques(
    ctx: &Context,
    per_trial: Vec<(usize, Vec<TorqueRecord>)>,
    manifest: &mut RunManifest,
) -> Result<Vec<Located>, CliError> {
    let mut groups: BTreeMap<(Option<Task>, String), Vec<Located>> = BTreeMap::new();
    let mut total = 0;
    for (trial, records) in per_trial {
        for (k, r) in records.into_iter().enumerate() {
            let key = (r.provenance.trial.task, r.provenance.source.label());
            groups.entry(key).or_default().push(((trial, k), r));
            total += 1;
        }
    }
    let mut kept = Vec::with_capacity(total);
    for ((_, source), members) in groups {
        if !ctx.config.screening.torque {
            kept.extend(members);
            continue;
        }
        let records: Vec<TorqueRecord> = members.iter().map(|(_, r)| r.clone()).collect();
        let partition = screen_torque_outliers(&records).map_err(CliError::runtime)?;
        for e in &partition.excluded {
            manifest.exclusions.push(ExclusionEntry {
                stage: "torque_screen".into(),
                trial: records[e.index].provenance.trial.trial_id(),
                source: Some(source.clone()),
                rule: e.rule.clone(),
            });
        }
        kept.extend(
            members
                .into_iter()
                .enumerate()
                .filter(|(i, _)| !partition.is_excluded(*i))
                .map(|(_, m)| m),
        );
    }
    manifest.stage("torque_screen", total, kept.len());
    kept.sort_by_key(|(pos, _)| *pos);
    Ok(kept)
}

fn write_store(ctx: &Context, trials: &[Trial], records: Vec<Located>, manifest: RunManifest) -> Result<(), CliError> {
    let mut out = OutputDir::new(&ctx.out)?;
    let mut entries = Vec::with_capacity(records.len());
    let mut written_trials = vec![false; trials.len()];
    let texts: Vec<String> = records.par_iter().map(|(_, r)| r.to_csv_with(fmt6)).collect();
    for (((trial, _), record), text) in records.iter().zip(texts) {
        let entry = StoreEntry::new(&trials[*trial].id(), &record.provenance.source.label());
        if !written_trials[*trial] {
            out.write(
                &format!("records/{}", entry.trajectory),
                &trajectory_csv(&trials[*trial].trajectory),
            )?;
            written_trials[*trial] = true;
        }
        out.write(&format!("records/{}", entry.file), &text)?;
        entries.push(entry);
    }
    out.write("records/index.csv", &index_csv(&entries))?;
    super::finish(&mut out, manifest)
}
