//! Run manifest: what went in, what came out and what was excluded.

use std::time::Instant;

use adlreq::trajectory::ExclusionRule;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

/// Input and output counts of one screening or processing stage;
/// `input = kept + excluded`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageCount {
    pub stage: String,
    pub input: usize,
    pub kept: usize,
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExclusionEntry {
    pub stage: String,
    pub trial: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub rule: ExclusionRule,
}

/// A trial or record dropped because processing failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureEntry {
    pub stage: String,
    pub trial: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Versions {
    pub adlreq: &'static str,
    pub cli: &'static str,
    pub schema: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub versions: Versions,
    pub seed: u64,
    pub config_sha256: String,
    pub inputs: Vec<FileEntry>,
    pub outputs: Vec<FileEntry>,
    pub stages: Vec<StageCount>,
    pub exclusions: Vec<ExclusionEntry>,
    pub failures: Vec<FailureEntry>,
    /// Wall-clock times; only present when requested, since they differ
    /// between runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Vec<StageTiming>>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config_sha256: String, timing: bool) -> Self {
        RunManifest {
            command: command.to_string(),
            versions: Versions {
                adlreq: adlreq::VERSION,
                cli: env!("CARGO_PKG_VERSION"),
                schema: crate::config::SCHEMA_VERSION,
            },
            seed,
            config_sha256,
            inputs: Vec::new(),
            outputs: Vec::new(),
            stages: Vec::new(),
            exclusions: Vec::new(),
            failures: Vec::new(),
            timing: timing.then(Vec::new),
        }
    }

    pub fn input(&mut self, path: String, bytes: &[u8]) {
        self.inputs.push(FileEntry {
            path,
            sha256: crate::io::sha256_hex(bytes),
        });
    }

    pub fn stage(&mut self, stage: &str, input: usize, kept: usize) {
        self.stages.push(StageCount {
            stage: stage.to_string(),
            input,
            kept,
            excluded: input - kept,
        });
    }

    /// Runs `f` and records its duration when timing is enabled.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if let Some(t) = &mut self.timing {
            t.push(StageTiming {
                stage: stage.to_string(),
                millis: start.elapsed().as_secs_f64() * 1e3,
            });
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}
