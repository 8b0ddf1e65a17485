//! Text, CSV and JSON renderings of trajectories, reports and summaries.

use std::fmt::Write;

use serde::Serialize;

use crate::designer::DesignReport;
use crate::propagator::Trajectory;
use crate::runner::{CompareRow, RunSummary, SweepParam, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(Format::Text),
            "structured" | "json" => Ok(Format::Structured),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

/// `t,m,omega,Pi_<label>...,norm_error`, one row per sample.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,m,omega");
    for l in &traj.labels {
        let _ = write!(out, ",Pi_{l}");
    }
    out.push_str(",norm_error\n");
    for k in 0..traj.times.len() {
        out.push_str(&sci(traj.times[k]));
        out.push(',');
        out.push_str(&sci(traj.envelope_samples[k]));
        out.push(',');
        out.push_str(&sci(traj.carrier_samples[k]));
        for p in &traj.populations[k] {
            out.push(',');
            out.push_str(&sci(*p));
        }
        out.push(',');
        out.push_str(&sci(traj.norm_error[k]));
        out.push('\n');
    }
    out
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn design_report(report: &DesignReport, format: Format) -> String {
    if format == Format::Structured {
        return json(report);
    }
    let list = |v: &[f64]| v.iter().map(|x| sci(*x)).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    let _ = writeln!(out, "mode = {}", report.mode.name());
    let _ = writeln!(out, "t_pi = {}", sci(report.t_pi));
    let _ = writeln!(out, "t_opt = {}", sci(report.t_opt));
    let _ = writeln!(out, "duration = {}", sci(report.duration));
    let _ = writeln!(out, "t_opt_over_t_pi = {}", sci(report.t_opt / report.t_pi));
    let _ = writeln!(out, "chirp_coefficient = {}", sci(report.chirp_coefficient));
    let _ = writeln!(out, "sigma_sq_per_perturber = {}", list(&report.sigma_sq_per_perturber));
    let _ = writeln!(out, "fixed_point_iterations = {}", report.fixed_point_iterations);
    let _ = writeln!(out, "residual = {}", sci(report.residual));
    let _ = writeln!(out, "second_order_advisory = {}", sci(report.second_order_advisory));
    let _ = writeln!(out, "extrapolated = {}", report.extrapolated);
    let _ = writeln!(out, "fixed_carrier_fallback = {}", report.fixed_carrier_fallback);
    let _ = writeln!(out, "history = {}", list(&report.history));
    out
}

pub fn run_summary(summary: &RunSummary, format: Format) -> String {
    if format == Format::Structured {
        return json(summary);
    }
    let mut out = String::new();
    let _ = writeln!(out, "mode = {}", summary.mode);
    let _ = writeln!(out, "target = {}", summary.target);
    let _ = writeln!(out, "final_transfer = {}", sci(summary.final_transfer));
    let _ = writeln!(out, "peak_transfer_last_cycle = {}", sci(summary.peak_transfer_last_cycle));
    let _ = writeln!(out, "peak_partner_last_cycle = {}", sci(summary.peak_partner_last_cycle));
    let _ = writeln!(out, "max_perturber_population = {}", sci(summary.max_perturber_population));
    let _ = writeln!(out, "t_pi = {}", sci(summary.t_pi));
    let _ = writeln!(out, "t_used = {}", sci(summary.t_used));
    let _ = writeln!(out, "norm_drift = {}", sci(summary.norm_drift));
    out
}

pub fn compare_table(rows: &[CompareRow], format: Format) -> String {
    if format == Format::Structured {
        return json(&rows);
    }
    let mut out = format!(
        "{:<15} {:>12} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}\n",
        "mode", "T", "final", "peak", "partner", "max_pert", "d_final", "d_peak"
    );
    for r in rows {
        let s = &r.summary;
        let _ = writeln!(
            out,
            "{:<15} {:>12.1} {:>10.6} {:>10.6} {:>10.6} {:>10.6} {:>+10.6} {:>+10.6}",
            s.mode,
            s.t_used,
            s.final_transfer,
            s.peak_transfer_last_cycle,
            s.peak_partner_last_cycle,
            s.max_perturber_population,
            r.delta_final,
            r.delta_peak
        );
    }
    out
}

/// Comma-separated sweep table, one row per grid point and mode.
pub fn sweep_table(param: SweepParam, rows: &[SweepRow], format: Format) -> String {
    if format == Format::Structured {
        return json(&rows);
    }
    let name = match param {
        SweepParam::F0 => "F0",
        SweepParam::NHalf => "n_half",
    };
    let mut out = format!(
        "{name},mode,t_pi,t_used,final_transfer,peak_transfer_last_cycle,peak_partner_last_cycle,max_perturber_population,norm_drift\n"
    );
    for r in rows {
        let s = &r.summary;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            sci(r.value),
            s.mode,
            sci(s.t_pi),
            sci(s.t_used),
            sci(s.final_transfer),
            sci(s.peak_transfer_last_cycle),
            sci(s.peak_partner_last_cycle),
            sci(s.max_perturber_population),
            sci(s.norm_drift)
        );
    }
    out
}
