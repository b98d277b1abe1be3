//! JSON envelope and plain-text tables.

use std::fmt::Write as _;

use serde_json::{json, Value};

use crisk_core::simulate::McReport;

pub const SCHEMA_VERSION: u32 = 1;

/// Wraps a command result with the schema version and the run settings.
pub fn envelope(command: &str, argv: &[String], config: Value, result: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "argv": argv,
        "config": config,
        "result": result,
    })
}

/// Bias-squared / MSE table with one column per true tau, in the layout
/// of a simulation-study table.
pub fn mc_table(title: &str, n: usize, studies: &[(f64, McReport)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{title}");
    let Some((_, first)) = studies.first() else {
        return out;
    };
    let _ = write!(out, "n = {n:<8}{:>8}", "");
    for (tau, _) in studies {
        let _ = write!(out, "{:>12}", format!("tau = {tau}"));
    }
    out.push('\n');
    for p in &first.parameters {
        for (label, pick) in [("Bias^2", 0usize), ("MSE", 1)] {
            let _ = write!(
                out,
                "{:<8}{:<8}",
                if pick == 0 { p.name.as_str() } else { "" },
                label
            );
            for (_, rep) in studies {
                let v = rep.parameter(&p.name).map_or(f64::NAN, |s| {
                    if pick == 0 {
                        s.bias2
                    } else {
                        s.mse
                    }
                });
                if v.is_nan() {
                    let _ = write!(out, "{:>12}", "-");
                } else {
                    let _ = write!(out, "{v:>12.4}");
                }
            }
            out.push('\n');
        }
    }
    let _ = write!(out, "{:<16}", "failed");
    for (_, rep) in studies {
        let _ = write!(
            out,
            "{:>12}",
            format!("{}/{}", rep.failures, rep.replications)
        );
    }
    out.push('\n');
    out
}
