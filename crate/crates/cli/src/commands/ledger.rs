use std::io::Write;

use clap::Args;
use qcrack::{ledger_predict, GradMethod};
use serde::Serialize;

use crate::error::CliResult;
use crate::{reject_config, write_json, Globals};

#[derive(Debug, Args)]
pub struct LedgerArgs {
    /// Training images per epoch.
    pub train: u64,
    /// Validation images per epoch.
    pub val: u64,
    /// Shiftable layers, q_depth + 1.
    pub layers: u64,
    pub qubits: u64,
}

#[derive(Debug, Serialize)]
pub struct LedgerTable {
    pub train: u64,
    pub val: u64,
    pub layers: u64,
    pub qubits: u64,
    pub methods: Vec<LedgerRow>,
}

#[derive(Debug, Serialize)]
pub struct LedgerRow {
    pub method: &'static str,
    pub formula: &'static str,
    pub n_forward: u64,
    pub n_backward: u64,
    pub n_calls: u64,
}

pub fn table(train: u64, val: u64, layers: u64, qubits: u64) -> LedgerTable {
    let rows = [
        (GradMethod::Backprop, "T + V"),
        (GradMethod::finite_diff(), "T + V + T*L*Q"),
        (GradMethod::param_shift(), "T + V + 2*T*L*Q"),
    ];
    LedgerTable {
        train,
        val,
        layers,
        qubits,
        methods: rows
            .iter()
            .map(|(m, formula)| {
                let p = ledger_predict(train, val, layers, qubits, m);
                LedgerRow {
                    method: m.name(),
                    formula,
                    n_forward: p.n_forward,
                    n_backward: p.n_backward,
                    n_calls: p.n_calls(),
                }
            })
            .collect(),
    }
}

pub fn run(args: &LedgerArgs, globals: &Globals, out: &mut dyn Write) -> CliResult<()> {
    reject_config(globals, "ledger")?;
    let t = table(args.train, args.val, args.layers, args.qubits);
    if globals.json {
        return write_json(out, &t);
    }
    writeln!(
        out,
        "T={} V={} L={} Q={}",
        t.train, t.val, t.layers, t.qubits
    )?;
    writeln!(
        out,
        "{:<12} {:>10} {:>10} {:>10}  formula",
        "method", "forward", "backward", "total"
    )?;
    for r in &t.methods {
        writeln!(
            out,
            "{:<12} {:>10} {:>10} {:>10}  {}",
            r.method, r.n_forward, r.n_backward, r.n_calls, r.formula
        )?;
    }
    Ok(())
}
