use std::collections::BTreeMap;
use std::path::Path;

use adlreq::chain::ReportJoint;
use adlreq::regression::{predict_peak_torque, BodyKind, CoefficientTable, ComboKey};
use adlreq::Error;

use crate::format::fmt6;
use crate::io::{display_path, read_to_string, OutputDir};
use crate::pipeline::csv_field;
use crate::{CliError, Context};

/// Parses `joint/task/body=scalar`, e.g. `EF/I/object:Mug=0.5`.
pub fn parse_component(s: &str) -> Result<(ComboKey, f64), CliError> {
    let bad = || CliError::Validation(format!("component `{s}` must look like EF/I/Hand=0.5"));
    let (key, scalar) = s.split_once('=').ok_or_else(bad)?;
    let mut parts = key.splitn(3, '/');
    let (Some(joint), Some(task), Some(body)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(bad());
    };
    let combo = ComboKey {
        joint: joint.trim().parse().map_err(|_| bad())?,
        task: task.parse().map_err(CliError::validation)?,
        body: body.trim().parse::<BodyKind>().map_err(CliError::validation)?,
    };
    let scalar: f64 = scalar.trim().parse().map_err(|_| bad())?;
    if !scalar.is_finite() {
        return Err(bad());
    }
    Ok((combo, scalar))
}

/// `Σ K·scalar` per joint at each requested percentile; writes
/// `predict.csv`.
pub fn predict(ctx: &Context, table: Option<&Path>, percentiles: &[u8], components: &[String]) -> Result<(), CliError> {
    let cfg = &ctx.config.predict;
    let mut manifest = ctx.manifest("predict");
    let mut terms = cfg
        .components
        .iter()
        .map(|c| Ok((c.combo()?, c.scalar)))
        .collect::<Result<Vec<_>, CliError>>()?;
    for c in components {
        terms.push(parse_component(c)?);
    }
    if terms.is_empty() {
        return Err(CliError::Validation("no prediction components given".into()));
    }
    let percentiles = if percentiles.is_empty() {
        &cfg.percentiles[..]
    } else {
        percentiles
    };
    if let Some(p) = percentiles.iter().find(|p| **p != 0 && **p != 100) {
        return Err(CliError::validation(Error::NonAdditivePercentile(*p)));
    }

    let path = table
        .map(Path::to_path_buf)
        .or_else(|| cfg.table.clone())
        .unwrap_or_else(|| ctx.out.join("coefficients.csv"));
    let text = read_to_string(&path)?;
    manifest.input(display_path(&path, &ctx.roots()), text.as_bytes());
    let table =
        CoefficientTable::parse_csv(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;

    let mut by_joint: BTreeMap<ReportJoint, Vec<(ComboKey, f64)>> = BTreeMap::new();
    for t in terms {
        by_joint.entry(t.0.joint).or_default().push(t);
    }
    let mut csv = String::from("joint,percentile,torque,terms\n");
    for (joint, terms) in &by_joint {
        let desc: Vec<String> = terms.iter().map(|(c, s)| format!("{c}={}", fmt6(*s))).collect();
        for &p in percentiles {
            let torque = predict_peak_torque(terms, &table, p).map_err(CliError::runtime)?;
            csv.push_str(&format!(
                "{joint},{p},{},{}\n",
                fmt6(torque),
                csv_field(&desc.join(" + "))
            ));
        }
    }
    manifest.stage("predict", by_joint.len(), by_joint.len());
    let mut out = OutputDir::new(&ctx.out)?;
    out.write("predict.csv", &csv)?;
    super::finish(&mut out, manifest)
}
