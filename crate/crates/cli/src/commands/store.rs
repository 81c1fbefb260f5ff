//! On-disk record store: `index.csv` plus one directory per trial holding
//! the processed trajectory and one CSV per torque record.

use std::path::{Path, PathBuf};

use adlreq::dynamics::TorqueRecord;
use adlreq::trajectory::{parse_trajectory, JointTrajectory};
use rayon::prelude::*;

use crate::pipeline::csv_field;
use crate::{io, CliError};

pub const INDEX: &str = "index.csv";
pub const INDEX_HEADER: &str = "trial,source,file,trajectory";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoreEntry {
    pub trial: String,
    pub source: String,
    /// Relative to the store directory.
    pub file: String,
    pub trajectory: String,
}

impl StoreEntry {
    pub fn new(trial: &str, source: &str) -> Self {
        let dir = io::file_stem(trial);
        StoreEntry {
            trial: trial.to_string(),
            source: source.to_string(),
            file: format!("{dir}/{}.csv", io::file_stem(source)),
            trajectory: format!("{dir}/{TRAJECTORY_FILE}"),
        }
    }

    fn to_row(&self) -> String {
        [&self.trial, &self.source, &self.file, &self.trajectory]
            .map(|s| csv_field(s))
            .join(",")
    }
}

pub fn index_csv(entries: &[StoreEntry]) -> String {
    let mut s = format!("{INDEX_HEADER}\n");
    for e in entries {
        s.push_str(&e.to_row());
        s.push('\n');
    }
    s
}

pub fn parse_index(text: &str) -> Result<Vec<StoreEntry>, CliError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(INDEX_HEADER) {
        return Err(CliError::Validation(format!(
            "record index header must be `{INDEX_HEADER}`"
        )));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            match f.as_slice() {
                [trial, source, file, trajectory] => Ok(StoreEntry {
                    trial: trial.to_string(),
                    source: source.to_string(),
                    file: file.to_string(),
                    trajectory: trajectory.to_string(),
                }),
                _ => Err(CliError::Validation(format!(
                    "record index row {}: expected 4 fields",
                    i + 1
                ))),
            }
        })
        .collect()
}

/// A store read back from disk, with the raw bytes of every file for the
/// manifest.
#[derive(Debug)]
pub struct LoadedStore {
    pub dir: PathBuf,
    pub entries: Vec<StoreEntry>,
    pub records: Vec<TorqueRecord>,
    /// (path relative to the store, bytes) of the index and every record.
    pub files: Vec<(String, Vec<u8>)>,
}

/// Reads the entries accepted by `filter`. An empty selection is a
/// validation error.
pub fn load_store(dir: &Path, filter: impl Fn(&StoreEntry) -> bool) -> Result<LoadedStore, CliError> {
    let index_path = dir.join(INDEX);
    let index = std::fs::read_to_string(&index_path)
        .map_err(|e| CliError::Validation(format!("cannot read record store {}: {e}", index_path.display())))?;
    let entries: Vec<StoreEntry> = parse_index(&index)?.into_iter().filter(|e| filter(e)).collect();
    if entries.is_empty() {
        return Err(CliError::Validation(format!(
            "record store {} has no matching records",
            dir.display()
        )));
    }
    let loaded = entries
        .par_iter()
        .map(|e| {
            let path = dir.join(&e.file);
            let text = io::read_to_string(&path)?;
            let record = TorqueRecord::parse_csv(&text)
                .map_err(|err| CliError::Validation(format!("{}: {err}", path.display())))?;
            Ok((record, text.into_bytes()))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut files = vec![(INDEX.to_string(), index.into_bytes())];
    let mut records = Vec::with_capacity(loaded.len());
    for (e, (r, bytes)) in entries.iter().zip(loaded) {
        files.push((e.file.clone(), bytes));
        records.push(r);
    }
    Ok(LoadedStore {
        dir: dir.to_path_buf(),
        entries,
        records,
        files,
    })
}

pub fn load_trajectory(dir: &Path, rel: &str) -> Result<(JointTrajectory, Vec<u8>), CliError> {
    let path = dir.join(rel);
    let text = io::read_to_string(&path)?;
    let t = parse_trajectory(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok((t, text.into_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let e = vec![StoreEntry::new("III/synthetic/1", "hand:m=0.5")];
        assert_eq!(e[0].file, "III_synthetic_1/hand_m_0.5.csv");
        assert_eq!(parse_index(&index_csv(&e)).unwrap(), e);
    }
}
