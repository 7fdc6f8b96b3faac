pub mod data;
pub mod eval;
pub mod label;
pub mod synth;
pub mod train;

use cxr_core::net::{Profile, RunConfig};

use crate::args::{GlobalArgs, ProfileArg};
use crate::error::{CliError, Result};

/// Profile defaults, then the config file, then `--seed`.
pub(crate) fn run_config(global: &GlobalArgs) -> Result<RunConfig> {
    let profile = match global.profile {
        ProfileArg::Desk => Profile::Desk,
        ProfileArg::Full => Profile::Full,
    };
    let mut rc = RunConfig::for_profile(profile);
    if let Some(path) = &global.config {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        rc.apply_text(&text)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e)))?;
    }
    if let Some(seed) = global.seed {
        rc.set("seed", &seed.to_string())?;
    }
    rc.validate()?;
    Ok(rc)
}

/// Synthetic train and held-out sets come from these two seeds.
pub(crate) fn synthetic_seeds(seed: u64) -> (u64, u64) {
    (seed, seed.wrapping_add(1))
}
