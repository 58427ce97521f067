//! CSV and JSON writers.
//!
//! Trajectory CSV columns, in order:
//! `round,x_h,x_m,F_h,F_m,outcome` for mean-field runs, with
//! `stake_h,stake_m,minted,slashed,expenses` appended for agent runs.
//! Floats carry 12 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::agent_sim::SimTrajectory;
use crate::dynamics::FitnessModel;
use crate::dynamics::Trajectory;
use crate::error::Result;
use crate::ess::EssVerdict;
use crate::game_core::{RewardScheme, Strategy};

pub const TRAJECTORY_HEADER: &str = "round,x_h,x_m,F_h,F_m,outcome";
pub const AGENT_HEADER: &str = "round,x_h,x_m,F_h,F_m,outcome,stake_h,stake_m,minted,slashed,expenses";

/// `printf("%.12g")`: 12 significant digits, trailing zeros dropped.
pub fn format_g12(v: f64) -> String {
    format_significant(v, 12)
}

pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn trajectory_csv(t: &Trajectory) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for (round, ((x, f), outcome)) in t.states.iter().zip(&t.fitness_trace).zip(&t.outcomes).enumerate() {
        let _ = writeln!(
            out,
            "{round},{},{},{},{},{outcome}",
            format_g12(x.honest()),
            format_g12(x.malicious()),
            format_g12(f.honest),
            format_g12(f.malicious),
        );
    }
    out
}

pub fn agent_csv(t: &SimTrajectory) -> String {
    let mut out = String::from(AGENT_HEADER);
    out.push('\n');
    for r in &t.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.round,
            format_g12(r.honest_fraction),
            format_g12(1.0 - r.honest_fraction),
            format_g12(r.fitness.honest),
            format_g12(r.fitness.malicious),
            r.outcome,
            format_g12(r.stake_honest),
            format_g12(r.stake_malicious),
            format_g12(r.minted),
            format_g12(r.slashed),
            format_g12(r.expenses),
        );
    }
    out
}

pub struct EssRow {
    pub scheme: RewardScheme,
    pub incumbent: Strategy,
    pub model: FitnessModel,
    pub verdict: EssVerdict,
}

pub fn ess_csv(rows: &[EssRow]) -> String {
    let mut out =
        String::from("scheme,incumbent,model,classification,incumbent_fitness,mutant_fitness,gap,critical_fraction\n");
    for r in rows {
        let v = &r.verdict;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.scheme,
            r.incumbent,
            r.model,
            v.classification,
            format_g12(v.incumbent_fitness),
            format_g12(v.mutant_fitness),
            format_g12(v.gap),
            format_g12(v.critical_fraction),
        );
    }
    out
}

/// Writes `name` under `dir`, creating the directory as needed.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}
