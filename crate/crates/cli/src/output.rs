//! CSV and manifest writers. All numbers are formatted with Rust's
//! shortest-round-trip float notation: locale-independent, byte-identical
//! across repeated runs on one platform.

use std::io;
use std::path::Path;

use passage_core::{Trajectory, TransferResult};

pub const TRANSFER_HEADER: &str = "L,T,epsilon,pi0,max_cav_pop,norm_loss,K_used,dt_used";
pub const COMPARE_HEADER: &str =
    "delta_g,T,epsilon_full,epsilon_eliminated,max_saturation,regime_violated";
pub const DARK_CHECK_HEADER: &str = "draw,residual";
pub const TRACE_HEADER: &str =
    "t,norm,pop_atom_a,n_cav_a,n_fibre_total,n_fibre_resonant,n_cav_b,pop_atom_b";

/// Undefined metrics become empty CSV fields, not NaN.
fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn transfer_row(length: f64, t_total: f64, result: &TransferResult) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        length,
        t_total,
        opt(result.epsilon),
        opt(result.pi0),
        result.max_cav_pop,
        result.norm_loss,
        result.k_used,
        result.dt_used
    )
}

pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> io::Result<()> {
    let mut text = String::with_capacity(header.len() + 1 + rows.iter().map(|r| r.len() + 1).sum::<usize>());
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    std::fs::write(path, text)
}

pub fn write_trace(path: &Path, trajectory: &Trajectory) -> io::Result<()> {
    let rows: Vec<String> = trajectory
        .samples
        .iter()
        .map(|s| {
            format!(
                "{},{},{},{},{},{},{},{}",
                s.t,
                s.norm,
                s.pop_atom_a,
                s.pop_cav_a,
                s.pop_fibre,
                s.n_fibre_resonant,
                s.pop_cav_b,
                s.pop_atom_b
            )
        })
        .collect();
    write_csv(path, TRACE_HEADER, &rows)
}
