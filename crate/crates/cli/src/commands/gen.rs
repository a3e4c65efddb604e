use std::io::Write;

use clap::Args;
use qcrack::data::{generate_synthetic, write_dataset};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::{reject_config, write_json, Globals};

#[derive(Debug, Args)]
pub struct GenArgs {
    pub n_crack: usize,
    pub n_clean: usize,
}

pub fn run(args: &GenArgs, globals: &Globals, out: &mut dyn Write) -> CliResult<()> {
    reject_config(globals, "gen")?;
    let dir = globals
        .out
        .as_ref()
        .ok_or_else(|| CliError::usage("gen needs --out <dir>"))?;
    let seed = globals.seed.unwrap_or(0);
    let patches = generate_synthetic(args.n_crack, args.n_clean, seed);
    let manifest = write_dataset(dir, &patches)?;
    if globals.json {
        return write_json(
            out,
            &json!({
                "dir": dir,
                "manifest": manifest,
                "n_crack": args.n_crack,
                "n_clean": args.n_clean,
                "seed": seed,
            }),
        );
    }
    writeln!(
        out,
        "wrote {} patches ({} crack, {} clean) to {}",
        patches.len(),
        args.n_crack,
        args.n_clean,
        dir.display()
    )?;
    writeln!(out, "manifest: {}", manifest.display())?;
    Ok(())
}
