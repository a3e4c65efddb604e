use std::f64::consts::PI;
use std::io::Write;

use clap::Args;
use qcrack::rng::{self, derive_seed};
use qcrack::{jacobian, CallLedger, CircuitSpec, EvalMode, GradMethod, QNodeInput};
use rand::Rng;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::{reject_config, write_json, Globals};

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 4)]
    pub qubits: usize,
    #[arg(long, default_value_t = 1)]
    pub depth: usize,
    /// Check every depth from 1 up to --depth.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Central finite-difference step.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub fd_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub ps_tol: f64,
}

#[derive(Debug, Serialize)]
pub struct GradcheckRow {
    pub q_depth: usize,
    pub method: &'static str,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct GradcheckReport {
    pub qubits: usize,
    pub trials: usize,
    pub seed: u64,
    pub rows: Vec<GradcheckRow>,
    pub pass: bool,
}

/// Max deviation of parameter shift and central differences from the
/// adjoint gradient over `trials` random inputs at one depth.
pub fn check_depth(
    spec: &CircuitSpec,
    trials: usize,
    step: f64,
    seed: u64,
) -> qcrack::Result<(f64, f64)> {
    let mut rng = rng::stream(derive_seed(seed, &[spec.q_depth as u64]), 0);
    let ledger = CallLedger::default();
    let (mut ps, mut fd) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        let input = QNodeInput {
            features: (0..spec.num_qubits)
                .map(|_| rng.random_range(-2.0..2.0))
                .collect(),
            params: (0..spec.num_params())
                .map(|_| rng.random_range(-PI..PI))
                .collect(),
        };
        let run = |m| jacobian(spec, &input, m, EvalMode::Exact, &ledger);
        let exact = run(GradMethod::Backprop)?;
        ps = ps.max(run(GradMethod::param_shift())?.max_abs_diff(&exact));
        fd = fd.max(run(GradMethod::central_diff(step))?.max_abs_diff(&exact));
    }
    Ok((ps, fd))
}

pub fn run(args: &GradcheckArgs, globals: &Globals, out: &mut dyn Write) -> CliResult<()> {
    reject_config(globals, "gradcheck")?;
    if args.trials == 0 {
        return Err(CliError::usage("--trials must be >= 1"));
    }
    let central = GradMethod::central_diff(args.step);
    central
        .validate()
        .map_err(|e| CliError::usage(e.to_string()))?;
    let seed = globals.seed.unwrap_or(0);
    let depths = if args.sweep {
        1..=args.depth
    } else {
        args.depth..=args.depth
    };
    let mut rows = Vec::new();
    for depth in depths {
        let spec =
            CircuitSpec::new(args.qubits, depth).map_err(|e| CliError::usage(e.to_string()))?;
        let (ps, fd) = check_depth(&spec, args.trials, args.step, seed)?;
        rows.push(GradcheckRow {
            q_depth: depth,
            method: "param-shift",
            max_deviation: ps,
            tolerance: args.ps_tol,
            pass: ps <= args.ps_tol,
        });
        rows.push(GradcheckRow {
            q_depth: depth,
            method: "finite-diff",
            max_deviation: fd,
            tolerance: args.fd_tol,
            pass: fd <= args.fd_tol,
        });
    }
    let report = GradcheckReport {
        qubits: args.qubits,
        trials: args.trials,
        seed,
        pass: rows.iter().all(|r| r.pass),
        rows,
    };
    if globals.json {
        write_json(out, &report)?;
    } else {
        writeln!(
            out,
            "Q={} trials={} central step={} (deviation from backprop)",
            args.qubits, args.trials, args.step
        )?;
        writeln!(
            out,
            "{:>7} {:<12} {:>12} {:>10}  result",
            "q_depth", "method", "max |diff|", "tol"
        )?;
        for r in &report.rows {
            writeln!(
                out,
                "{:>7} {:<12} {:>12.3e} {:>10.1e}  {}",
                r.q_depth,
                r.method,
                r.max_deviation,
                r.tolerance,
                if r.pass { "PASS" } else { "FAIL" }
            )?;
        }
    }
    if report.pass {
        Ok(())
    } else {
        let worst = report.rows.iter().filter(|r| !r.pass).map(|r| {
            format!(
                "{} at q_depth {}: {:.3e} > {:.1e}",
                r.method, r.q_depth, r.max_deviation, r.tolerance
            )
        });
        Err(CliError::runtime(format!(
            "tolerance exceeded: {}",
            worst.collect::<Vec<_>>().join("; ")
        )))
    }
}
