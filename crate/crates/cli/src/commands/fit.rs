use std::path::Path;

use adlreq::regression::fit_all;

use super::store::load_store;
use crate::format::fmt6;
use crate::io::{display_path, OutputDir};
use crate::pipeline::csv_field;
use crate::{CliError, Context};

/// Fits every combination of the record store; writes `coefficients.csv`
/// and `skipped.csv`.
pub fn fit(ctx: &Context, records: Option<&Path>) -> Result<(), CliError> {
    let mut manifest = ctx.manifest("fit");
    let dir = records
        .map(Path::to_path_buf)
        .or_else(|| ctx.config.inputs.records.clone())
        .unwrap_or_else(|| ctx.out.join("records"));
    let store = manifest.timed("load", || load_store(&dir, |_| true))?;
    for (rel, bytes) in &store.files {
        manifest.input(display_path(&dir.join(rel), &ctx.roots()), bytes);
    }
    let geometry = ctx.config.geometry.mean()?;
    let report = manifest
        .timed("fit", || {
            fit_all(&store.records, &geometry, &ctx.config.objects.definitions)
        })
        .map_err(CliError::runtime)?;
    manifest.stage("fit", store.records.len(), store.records.len());

    let mut table = report.table;
    table.metadata.insert("records".into(), store.records.len().to_string());
    table
        .metadata
        .insert("humerus_length".into(), fmt6(geometry.humerus_length));
    table.metadata.insert("ulna_length".into(), fmt6(geometry.ulna_length));
    table.metadata.insert("hand_length".into(), fmt6(geometry.hand_length));

    let mut skipped = String::from("task,body,reason\n");
    for s in &report.skipped {
        let task = s.task.map_or("-".to_string(), |t| t.to_string());
        skipped.push_str(&format!("{task},{},{}\n", csv_field(&s.body), csv_field(&s.reason)));
    }

    let mut out = OutputDir::new(&ctx.out)?;
    out.write("coefficients.csv", &table.to_csv_with(fmt6))?;
    out.write("skipped.csv", &skipped)?;
    super::finish(&mut out, manifest)
}
