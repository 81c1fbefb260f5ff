//! One function per subcommand.

mod fit;
mod predict;
mod simulate;
pub mod store;
mod summarize;
mod wrist;

pub use fit::fit;
pub use predict::{parse_component, predict};
pub use simulate::simulate;
pub use summarize::summarize;
pub use wrist::{optimize_wrist, parse_samples};

use crate::io::OutputDir;
use crate::manifest::{FileEntry, RunManifest};
use crate::CliError;

/// Records every written file in the manifest, then writes the manifest.
fn finish(out: &mut OutputDir, mut manifest: RunManifest) -> Result<(), CliError> {
    manifest.outputs = out
        .written()
        .iter()
        .map(|(path, sha256)| FileEntry {
            path: path.clone(),
            sha256: sha256.clone(),
        })
        .collect();
    out.write("manifest.json", &manifest.to_json())
}
