//! The `constants` subcommand: c(μ) on a grid, c̃ and M per differentiability
//! order.

use std::fmt::Write as _;

use lightcone::dispersion::{default_mu_grid, smooth_velocity_constant, VelocityTable};
use lightcone::{Execution, VelocityOptions};
use serde::Serialize;

use crate::spec::{ConstantsSpec, Experiment};

const DEFAULT_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VelocityRow {
    pub mu: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothRow {
    pub m: usize,
    pub mu: f64,
    pub c_tilde: f64,
    #[serde(rename = "M")]
    pub m_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsTable {
    pub velocity: Vec<VelocityRow>,
    pub converged: bool,
    pub smooth: Vec<SmoothRow>,
    pub notes: Vec<String>,
}

pub fn compute_constants(exp: &Experiment, execution: Execution) -> lightcone::Result<ConstantsTable> {
    let spec = exp.spec.constants.clone().unwrap_or_default();
    let disp = &exp.dispersion;
    let grid = match &spec.mu {
        Some(mu) => mu.clone(),
        None => default_mu_grid(disp.strip(), DEFAULT_POINTS),
    };
    let opts = VelocityOptions { execution, ..VelocityOptions::default() };
    let table = VelocityTable::compute(disp, &grid, &opts)?;
    let velocity = table.mu.iter().zip(&table.c).map(|(&mu, &c)| VelocityRow { mu, c }).collect();
    let (smooth, notes) = smooth_rows(exp, &spec, &opts);
    Ok(ConstantsTable { velocity, converged: table.converged, smooth, notes })
}

fn smooth_rows(exp: &Experiment, spec: &ConstantsSpec, opts: &VelocityOptions) -> (Vec<SmoothRow>, Vec<String>) {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let disp = match exp.dispersion.as_hopping() {
        Ok(d) => d,
        Err(e) => {
            notes.push(format!("c̃ and M need a hopping table: {e}"));
            return (rows, notes);
        }
    };
    for &m in &spec.m {
        match smooth_velocity_constant(&disp, m, spec.smooth_mu, opts) {
            Ok(s) => rows.push(SmoothRow { m, mu: s.mu, c_tilde: s.c_tilde, m_bound: s.m_bound }),
            Err(e) => notes.push(format!("m = {m}: {e}")),
        }
    }
    (rows, notes)
}

fn num(v: f64) -> String {
    if v != 0.0 && v.is_finite() && !(1e-4..1e6).contains(&v.abs()) {
        format!("{v:.10e}")
    } else {
        format!("{v:.10}")
    }
}

pub fn constants_table(t: &ConstantsTable) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>12}  {:>18}", "mu", "c(mu)");
    for r in &t.velocity {
        let _ = writeln!(s, "{:>12.6}  {:>18}", r.mu, num(r.c));
    }
    if !t.converged {
        let _ = writeln!(s, "warning: local refinement hit its sweep limit");
    }
    if !t.smooth.is_empty() {
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>4}  {:>8}  {:>18}  {:>18}", "m", "mu", "c_tilde", "M");
        for r in &t.smooth {
            let _ = writeln!(s, "{:>4}  {:>8.4}  {:>18}  {:>18}", r.m, r.mu, num(r.c_tilde), num(r.m_bound));
        }
    }
    for n in &t.notes {
        let _ = writeln!(s, "note: {n}");
    }
    s
}

/// Long format: `quantity,m,mu,value`.
pub fn constants_csv(t: &ConstantsTable) -> String {
    let mut s = String::from("quantity,m,mu,value\n");
    for r in &t.velocity {
        let _ = writeln!(s, "c,,{},{}", r.mu, r.c);
    }
    for r in &t.smooth {
        let _ = writeln!(s, "c_tilde,{},{},{}", r.m, r.mu, r.c_tilde);
        let _ = writeln!(s, "M,{},,{}", r.m, r.m_bound);
    }
    s
}
