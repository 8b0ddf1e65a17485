//! Scenario workflows: design, simulate, compare and sweep.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::designer::{design_pulse, DesignOptions, DesignReport, DriveMode};
use crate::error::{Error, Result};
use crate::propagator::{integrate, StateVector, Trajectory};
use crate::pulse::PulseSpec;
use crate::scenario::Scenario;

/// Headline numbers of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub mode: String,
    /// Label of the level that should hold the population at the end.
    pub target: String,
    /// Population of `target` at `t = T`.
    pub final_transfer: f64,
    /// Largest population of `target` during the final half-oscillation.
    pub peak_transfer_last_cycle: f64,
    /// Largest population of the partner level during the final full
    /// oscillation; for a single transfer this is the target itself.
    pub peak_partner_last_cycle: f64,
    /// Largest total population outside the target pair.
    pub max_perturber_population: f64,
    pub t_pi: f64,
    pub t_used: f64,
    pub norm_drift: f64,
}

impl RunSummary {
    pub fn from_trajectory(scenario: &Scenario, mode: DriveMode, pulse: &PulseSpec, report: &DesignReport, traj: &Trajectory) -> Self {
        let pair = scenario.pair;
        let target = scenario.final_target();
        let partner = if target == pair.alpha { pair.beta } else { pair.alpha };
        let clock = pulse.clock(scenario.system.moment(pair.alpha, pair.beta));
        let total = clock.total_tau();
        let window_peak = |level: usize, span: f64| {
            traj.times
                .iter()
                .zip(&traj.populations)
                .filter(|(&t, _)| clock.tau_unchecked(t) >= total - span)
                .map(|(_, p)| p[level])
                .fold(0.0, f64::max)
        };
        let peak_partner = if scenario.drive.n_half == 1 {
            window_peak(target, FRAC_PI_2)
        } else {
            window_peak(partner, 2.0 * FRAC_PI_2)
        };
        let max_perturber_population = traj
            .populations
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != pair.alpha && *i != pair.beta)
                    .map(|(_, v)| v)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        RunSummary {
            mode: mode.name().to_string(),
            target: scenario.system.label(target).to_string(),
            final_transfer: traj.final_populations()[target],
            peak_transfer_last_cycle: window_peak(target, FRAC_PI_2),
            peak_partner_last_cycle: peak_partner,
            max_perturber_population,
            t_pi: report.t_pi,
            t_used: pulse.duration(),
            norm_drift: traj.norm_drift,
        }
    }
}

pub fn design(scenario: &Scenario, mode: DriveMode) -> Result<(PulseSpec, DesignReport)> {
    design_pulse(
        &scenario.system,
        &scenario.pair,
        &scenario.perturbers,
        scenario.drive.amplitude,
        scenario.drive.envelope,
        scenario.drive.n_half,
        &DesignOptions {
            mode,
            iteration: scenario.numerics.iteration(),
        },
    )
}

/// A designed and simulated run.
#[derive(Debug, Clone)]
pub struct Run {
    pub pulse: PulseSpec,
    pub report: DesignReport,
    pub trajectory: Trajectory,
    pub summary: RunSummary,
}

pub fn simulate(scenario: &Scenario, mode: DriveMode) -> Result<Run> {
    let (pulse, report) = design(scenario, mode)?;
    let initial = StateVector::basis(scenario.system.len(), scenario.initial_level())?;
    let trajectory = integrate(
        &scenario.system,
        &pulse,
        &initial,
        &scenario.numerics.sampling(),
        &scenario.numerics.tolerances(),
    )?;
    let summary = RunSummary::from_trajectory(scenario, mode, &pulse, &report, &trajectory);
    Ok(Run {
        pulse,
        report,
        trajectory,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub summary: RunSummary,
    /// `final_transfer` minus the unoptimized `final_transfer`.
    pub delta_final: f64,
    pub delta_peak: f64,
}

/// Runs every applicable mode (concurrently) and reports them side by side.
pub fn compare(scenario: &Scenario) -> Result<Vec<CompareRow>> {
    let summaries = scenario
        .applicable_modes()
        .into_par_iter()
        .map(|mode| simulate(scenario, mode).map(|r| r.summary))
        .collect::<Result<Vec<_>>>()?;
    let base = summaries[0].clone();
    Ok(summaries
        .into_iter()
        .map(|s| CompareRow {
            delta_final: s.final_transfer - base.final_transfer,
            delta_peak: s.peak_transfer_last_cycle - base.peak_transfer_last_cycle,
            summary: s,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    F0,
    NHalf,
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "F0" | "f0" | "amplitude" => Ok(SweepParam::F0),
            "n_half" => Ok(SweepParam::NHalf),
            other => Err(format!("unknown sweep parameter {other:?} (expected F0 or n_half)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub summary: RunSummary,
}

/// Grid values: `steps` points from `from` to `to` inclusive; one step is just `from`.
pub fn sweep_grid(param: SweepParam, from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::InvalidSweep("steps must be at least 1".into()));
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(Error::InvalidSweep("range must be finite".into()));
    }
    let grid: Vec<f64> = (0..steps)
        .map(|k| {
            if steps == 1 {
                from
            } else {
                from + (to - from) * k as f64 / (steps - 1) as f64
            }
        })
        .collect();
    match param {
        SweepParam::F0 if grid.iter().any(|&v| v <= 0.0) => {
            Err(Error::InvalidSweep("F0 must stay positive".into()))
        }
        SweepParam::NHalf if grid.iter().any(|&v| v < 1.0 || v.fract() != 0.0) => {
            Err(Error::InvalidSweep("n_half values must be positive integers".into()))
        }
        _ => Ok(grid),
    }
}

/// One row per grid point and mode, in grid order; points run concurrently.
pub fn sweep(scenario: &Scenario, param: SweepParam, from: f64, to: f64, steps: usize, modes: &[DriveMode]) -> Result<Vec<SweepRow>> {
    let grid = sweep_grid(param, from, to, steps)?;
    let jobs: Vec<(f64, DriveMode)> = grid
        .iter()
        .flat_map(|&v| modes.iter().map(move |&m| (v, m)))
        .collect();
    jobs.into_par_iter()
        .map(|(value, mode)| {
            let mut s = scenario.clone();
            match param {
                SweepParam::F0 => s.drive.amplitude = value,
                SweepParam::NHalf => s.drive.n_half = value as u32,
            }
            simulate(&s, mode).map(|r| SweepRow {
                value,
                summary: r.summary,
            })
        })
        .collect()
}
