//! Random minimum-jerk trials for runs without recorded data.

use adlreq::trajectory::{chain_joint_names, synthesize_minjerk, JointTrajectory, TrialMeta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SyntheticConfig;
use crate::CliError;

/// Keypose ranges per chain joint, degrees.
const RANGES: [(f64, f64); 7] = [
    (-20.0, 60.0),
    (10.0, 90.0),
    (-40.0, 40.0),
    (20.0, 130.0),
    (-60.0, 60.0),
    (-40.0, 40.0),
    (-20.0, 20.0),
];

/// Segments take at least this long, s.
const MIN_SEGMENT: f64 = 0.5;

/// `cfg.trials` trials, tasks assigned round-robin. Each segment lasts long
/// enough that no joint exceeds `cfg.peak_speed`: the minimum-jerk peak
/// speed is `1.875·Δ/T`.
pub fn synthetic_trials(cfg: &SyntheticConfig, seed: u64) -> Result<Vec<JointTrajectory>, CliError> {
    let joints = chain_joint_names();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(cfg.trials);
    for i in 0..cfg.trials {
        let keyposes: Vec<Vec<f64>> = (0..cfg.keyposes)
            .map(|_| RANGES.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect())
            .collect();
        let durations: Vec<f64> = keyposes
            .windows(2)
            .map(|w| {
                let delta = w[0].iter().zip(&w[1]).fold(0.0_f64, |m, (a, b)| m.max((b - a).abs()));
                // whole frames keep the sampled peak below the bound
                let t = (1.875 * delta / cfg.peak_speed).max(MIN_SEGMENT);
                (t * cfg.sample_rate).ceil() / cfg.sample_rate
            })
            .collect();
        let task = cfg.tasks[i % cfg.tasks.len()];
        let meta = TrialMeta::new(task, "synthetic", (i + 1) as u32);
        out.push(synthesize_minjerk(&joints, &keyposes, &durations, cfg.sample_rate, meta).map_err(CliError::runtime)?);
    }
    Ok(out)
}
