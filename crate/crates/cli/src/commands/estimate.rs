use std::io::Write;

use clap::Args;

use crate::error::{CliError, CliResult};
use crate::profile::{estimate, BackendProfile};
use crate::{reject_config, write_json, Globals};

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Built-in profile name (kolkata, ehningen, lima) or a profile JSON path.
    #[arg(long)]
    pub profile: String,
    /// Total circuit executions, e.g. from `qcrack ledger`.
    #[arg(long)]
    pub calls: u64,
    #[arg(long, default_value_t = 1000)]
    pub shots: u64,
    /// Circuit layers per execution.
    #[arg(long, default_value_t = 2)]
    pub layers: u64,
    /// Replace the profile's queue/transpile multiplier.
    #[arg(long)]
    pub overhead: Option<f64>,
}

pub fn run(args: &EstimateArgs, globals: &Globals, out: &mut dyn Write) -> CliResult<()> {
    reject_config(globals, "estimate")?;
    let mut profile = BackendProfile::resolve(&args.profile)?;
    if let Some(o) = args.overhead {
        profile.overhead_factor = o;
        profile.validate()?;
    }
    if args.shots == 0 || args.layers == 0 {
        return Err(CliError::usage("--shots and --layers must be >= 1"));
    }
    let e = estimate(&profile, args.calls, args.shots, args.layers);
    if globals.json {
        return write_json(out, &e);
    }
    writeln!(
        out,
        "{}: {} CLOPS, QV {}, overhead x{}",
        profile.name, profile.clops, profile.qv, profile.overhead_factor
    )?;
    writeln!(
        out,
        "device: {:.1} s  = {} calls * {} shots * {} layers / {} CLOPS",
        e.device_seconds, e.n_calls, e.shots, e.layers, profile.clops
    )?;
    writeln!(
        out,
        "wall:   {:.1} s  = device * {}",
        e.wall_seconds, profile.overhead_factor
    )?;
    writeln!(
        out,
        "(order-of-magnitude model; queueing is a single multiplier)"
    )?;
    Ok(())
}
