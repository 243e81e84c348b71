use anyhow::Result;
use clap::Parser;

use spde_cli::{emit, resolve_config, Cli};
use spde_core::harness::run_experiment;

fn main() -> Result<()> {
    let cli = Cli::parse();
    let (config, settings) = resolve_config(&cli)?;
    let report = run_experiment(&config)?;
    emit(&report, &settings)?;
    Ok(())
}
