//! Analytic pulse design.
//!
//! A perturbing level `p` hanging off target level `beta` distorts the
//! `alpha <-> beta` Rabi dynamics by an amount governed by
//! `sigma = F0 mu_bp / (2 (omega_ab - omega_bp))`. The designer turns that
//! into a frequency chirp and a corrected pulse duration that solves
//! `∫_0^T dtau / sqrt((1 + eps_alpha)(1 + eps_beta)) = n_half pi / 2`.

use std::cell::Cell;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levels::{LevelSystem, PerturberSpec, Side, TargetPair};
use crate::pulse::{Carrier, ChirpProfile, Envelope, EnvelopeShape, PulseSpec, ScaledClock};
use crate::quadrature::adaptive_simpson;

/// Which detuning enters `eps = (sigma m / (1 - Delta))^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetuningMode {
    /// `Delta` follows the designed chirp.
    #[default]
    Chirp,
    /// `Delta = 0` (lowest order).
    Bare,
}

impl FromStr for DetuningMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "chirp" => Ok(DetuningMode::Chirp),
            "bare" => Ok(DetuningMode::Bare),
            other => Err(format!("unknown detuning mode {other:?}")),
        }
    }
}

impl fmt::Display for DetuningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetuningMode::Chirp => "chirp",
            DetuningMode::Bare => "bare",
        })
    }
}

/// How the drive is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "duration", rename_all = "snake_case")]
pub enum DriveMode {
    /// Resonant carrier, pi-pulse duration.
    Unoptimized,
    /// Chirped carrier, pi-pulse duration.
    FrequencyOnly,
    /// Chirped carrier, corrected duration.
    Optimized,
    /// Chirped carrier, user-supplied duration.
    Manual(f64),
}

impl DriveMode {
    pub fn name(&self) -> &'static str {
        match self {
            DriveMode::Unoptimized => "unoptimized",
            DriveMode::FrequencyOnly => "frequency_only",
            DriveMode::Optimized => "optimized",
            DriveMode::Manual(_) => "manual",
        }
    }
}

impl fmt::Display for DriveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn resonances(system: &LevelSystem, pair: &TargetPair, perturber: &PerturberSpec) -> Result<(f64, f64)> {
    let omega_ab = system.omega(pair.alpha, pair.beta);
    let omega_p = system.omega(perturber.anchor(pair), perturber.level);
    if omega_ab == omega_p {
        return Err(Error::ResonantDegeneracy(omega_p));
    }
    Ok((omega_ab, omega_p))
}

/// Signed perturbation strength `sigma`; `sigma^2` is the usual figure of merit.
pub fn sigma(system: &LevelSystem, pair: &TargetPair, perturber: &PerturberSpec, f0: f64) -> Result<f64> {
    let (omega_ab, omega_p) = resonances(system, pair, perturber)?;
    let mu = system.moment(perturber.anchor(pair), perturber.level);
    Ok(f0 * mu / (2.0 * (omega_ab - omega_p)))
}

/// `Delta = (omega(t) - omega_ab) / (omega_p - omega_ab)` for a given
/// instantaneous carrier frequency.
pub fn delta(system: &LevelSystem, pair: &TargetPair, perturber: &PerturberSpec, omega_t: f64) -> Result<f64> {
    let (omega_ab, omega_p) = resonances(system, pair, perturber)?;
    Ok((omega_t - omega_ab) / (omega_p - omega_ab))
}

/// Leak ratio `eps(t)` of one perturber under `pulse`, with chirp-consistent detuning.
pub fn epsilon(
    system: &LevelSystem,
    pair: &TargetPair,
    perturber: &PerturberSpec,
    pulse: &PulseSpec,
    t: f64,
) -> Result<f64> {
    pulse.envelope.value(t)?;
    PerturberAnalysis::new(system, pair, perturber, pulse, DetuningMode::Chirp)?.epsilon(t)
}

/// Perturbation diagnostics for one perturbing level under a given pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturberAnalysis {
    pub perturber: PerturberSpec,
    pub sigma: f64,
    omega_ab: f64,
    omega_p: f64,
    rate: f64,
    detuning: DetuningMode,
    pulse: PulseSpec,
}

impl PerturberAnalysis {
    pub fn new(
        system: &LevelSystem,
        pair: &TargetPair,
        perturber: &PerturberSpec,
        pulse: &PulseSpec,
        detuning: DetuningMode,
    ) -> Result<Self> {
        let (omega_ab, omega_p) = resonances(system, pair, perturber)?;
        Ok(Self {
            perturber: *perturber,
            sigma: sigma(system, pair, perturber, pulse.amplitude)?,
            omega_ab,
            omega_p,
            rate: ScaledClock::new(pulse, system.moment(pair.alpha, pair.beta)).rate(),
            detuning,
            pulse: *pulse,
        })
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma * self.sigma
    }

    pub fn delta(&self, t: f64) -> f64 {
        match self.detuning {
            DetuningMode::Chirp => (self.pulse.omega(t) - self.omega_ab) / (self.omega_p - self.omega_ab),
            DetuningMode::Bare => 0.0,
        }
    }

    fn delta_dot(&self, t: f64) -> f64 {
        match self.detuning {
            DetuningMode::Chirp => self.pulse.omega_dot(t) / (self.omega_p - self.omega_ab),
            DetuningMode::Bare => 0.0,
        }
    }

    fn denominator(&self, t: f64) -> Result<f64> {
        let d = 1.0 - self.delta(t);
        if d.abs() < 1e-12 {
            Err(Error::SingularDetuning(t))
        } else {
            Ok(d)
        }
    }

    pub fn epsilon(&self, t: f64) -> Result<f64> {
        let d = self.denominator(t)?;
        let r = self.sigma * self.pulse.envelope.m(t) / d;
        Ok(r * r)
    }

    /// `d eps / d tau`, finite at envelope zeros.
    pub fn epsilon_tau_derivative(&self, t: f64) -> Result<f64> {
        if self.rate == 0.0 {
            return Ok(0.0);
        }
        let d = self.denominator(t)?;
        let env = &self.pulse.envelope;
        let m = env.m(t);
        Ok(2.0 * self.sigma * self.sigma / (d * d * self.rate)
            * (env.m_dot(t) + m * self.delta_dot(t) / d))
    }
}

/// Result of the chirp construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpDesign {
    pub carrier: Carrier,
    /// No perturber hangs off `beta`, so the carrier stays at `omega_ab`.
    pub fixed_fallback: bool,
}

/// Builds the chirped carrier from the beta-attached perturbers; their
/// contributions add.
pub fn chirp_design(
    system: &LevelSystem,
    pair: &TargetPair,
    perturbers: &[PerturberSpec],
    f0: f64,
) -> Result<ChirpDesign> {
    let omega_ab = system.omega(pair.alpha, pair.beta);
    let mut coefficient = 0.0;
    let mut any = false;
    for p in perturbers.iter().filter(|p| p.attached_to == Side::Beta) {
        any = true;
        let s = sigma(system, pair, p, f0)?;
        let omega_bp = system.omega(pair.beta, p.level);
        let signs = system.sign(pair.beta, pair.alpha) * system.sign(pair.beta, p.level);
        coefficient +=
            signs * (omega_bp - omega_ab) * (2.0 * omega_bp / (omega_ab + omega_bp)) * s * s;
    }
    let carrier = if any {
        Carrier::Chirped(ChirpProfile {
            base: omega_ab,
            coefficient,
        })
    } else {
        Carrier::Fixed { omega: omega_ab }
    };
    Ok(ChirpDesign {
        carrier,
        fixed_fallback: !any,
    })
}

fn check_drive(f0: f64, n_half: u32) -> Result<()> {
    if !(f0 > 0.0 && f0.is_finite()) {
        return Err(Error::InvalidPulse(format!("amplitude must be positive, got {f0}")));
    }
    if n_half == 0 {
        return Err(Error::InvalidPulse("n_half must be at least 1".into()));
    }
    Ok(())
}

/// Standard pi-pulse duration: the scaled time accumulates `n_half pi / 2`.
pub fn pi_pulse_duration(
    system: &LevelSystem,
    pair: &TargetPair,
    f0: f64,
    shape: EnvelopeShape,
    n_half: u32,
) -> Result<f64> {
    check_drive(f0, n_half)?;
    let rate = 0.5 * f0 * system.moment(pair.alpha, pair.beta).abs();
    Ok(n_half as f64 * FRAC_PI_2 / (rate * shape.mean()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub detuning: DetuningMode,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            detuning: DetuningMode::Chirp,
        }
    }
}

/// Outcome of the corrected-duration fixed point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationSolution {
    pub t_pi: f64,
    pub t_opt: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Iterates `T_0 = T_pi, T_1, ...`.
    pub history: Vec<f64>,
}

/// `∫_0^T (dtau/dt) / sqrt(prod (1 + eps_i)) dt` for a pulse of duration `T`.
fn weighted_scaled_time(
    system: &LevelSystem,
    pair: &TargetPair,
    perturbers: &[PerturberSpec],
    pulse: &PulseSpec,
    detuning: DetuningMode,
    quad_tol: f64,
) -> Result<f64> {
    let clock = ScaledClock::new(pulse, system.moment(pair.alpha, pair.beta));
    let analyses = perturbers
        .iter()
        .map(|p| PerturberAnalysis::new(system, pair, p, pulse, detuning))
        .collect::<Result<Vec<_>>>()?;
    let singular = Cell::new(None);
    let integrand = |t: f64| {
        let mut weight = 1.0;
        for a in &analyses {
            match a.epsilon(t) {
                Ok(e) => weight *= 1.0 + e,
                Err(_) => {
                    singular.set(Some(t));
                    return 0.0;
                }
            }
        }
        clock.tau_dot(t) / weight.sqrt()
    };
    let value = adaptive_simpson(integrand, 0.0, pulse.duration(), quad_tol);
    match singular.get() {
        Some(t) => Err(Error::SingularDetuning(t)),
        None => Ok(value),
    }
}

/// Solves for the corrected duration by fixed-point iteration seeded at `T_pi`.
///
/// Each trial duration rescales the envelope (`Omega = pi / T`), which
/// changes `m(t)`, `tau` and `eps`; the update
/// `T <- T * (n_half pi/2) / J(T)` is iterated until the relative change
/// drops below `opts.tol`.
#[allow(clippy::too_many_arguments)]
pub fn optimized_duration(
    system: &LevelSystem,
    pair: &TargetPair,
    perturbers: &[PerturberSpec],
    f0: f64,
    shape: EnvelopeShape,
    n_half: u32,
    carrier: Carrier,
    opts: &IterationOptions,
) -> Result<DurationSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidPulse(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let t_pi = pi_pulse_duration(system, pair, f0, shape, n_half)?;
    let budget = n_half as f64 * FRAC_PI_2;
    let quad_tol = opts.tol.min(1e-10);
    let mut history = vec![t_pi];
    if perturbers.is_empty() {
        return Ok(DurationSolution {
            t_pi,
            t_opt: t_pi,
            iterations: 0,
            residual: 0.0,
            history,
        });
    }
    let mut t = t_pi;
    for k in 1..=opts.max_iter {
        let pulse = PulseSpec::new(f0, Envelope::new(shape, t)?, carrier)?;
        let j = weighted_scaled_time(system, pair, perturbers, &pulse, opts.detuning, quad_tol)?;
        let next = t * budget / j;
        let residual = (next - t).abs() / t;
        history.push(next);
        t = next;
        if residual <= opts.tol {
            return Ok(DurationSolution {
                t_pi,
                t_opt: t,
                iterations: k,
                residual,
                history,
            });
        }
    }
    Err(Error::NonConvergence { history })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignOptions {
    pub mode: DriveMode,
    pub iteration: IterationOptions,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            mode: DriveMode::Optimized,
            iteration: IterationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub mode: DriveMode,
    pub t_pi: f64,
    pub t_opt: f64,
    /// Duration of the pulse actually produced for `mode`.
    pub duration: f64,
    pub chirp_coefficient: f64,
    pub sigma_sq_per_perturber: Vec<f64>,
    pub fixed_point_iterations: usize,
    pub residual: f64,
    /// `max_t |eps d eps/dtau|`, informational only.
    pub second_order_advisory: f64,
    /// More than one perturber per target level (additive chirp,
    /// multiplicative `1 + eps`).
    pub extrapolated: bool,
    pub fixed_carrier_fallback: bool,
    pub history: Vec<f64>,
}

/// Largest `(1/2) |d eps^2 / dtau|` over the pulse, sampled on a uniform grid.
fn second_order_advisory(analyses: &[PerturberAnalysis], duration: f64) -> Result<f64> {
    const SAMPLES: usize = 2000;
    let mut worst: f64 = 0.0;
    for a in analyses {
        for k in 0..=SAMPLES {
            let t = duration * k as f64 / SAMPLES as f64;
            worst = worst.max((a.epsilon(t)? * a.epsilon_tau_derivative(t)?).abs());
        }
    }
    Ok(worst)
}

/// Designs the full pulse (carrier + duration) for the requested mode.
///
/// A zero amplitude is accepted only in manual mode, where the duration is
/// given; `T_pi` and `T_opt` are then infinite.
pub fn design_pulse(
    system: &LevelSystem,
    pair: &TargetPair,
    perturbers: &[PerturberSpec],
    f0: f64,
    shape: EnvelopeShape,
    n_half: u32,
    options: &DesignOptions,
) -> Result<(PulseSpec, DesignReport)> {
    let chirp = chirp_design(system, pair, perturbers, f0)?;
    let solution = match options.mode {
        DriveMode::Manual(_) if f0 == 0.0 => DurationSolution {
            t_pi: f64::INFINITY,
            t_opt: f64::INFINITY,
            iterations: 0,
            residual: 0.0,
            history: vec![],
        },
        _ => optimized_duration(
            system,
            pair,
            perturbers,
            f0,
            shape,
            n_half,
            chirp.carrier,
            &options.iteration,
        )?,
    };
    let omega_ab = system.omega(pair.alpha, pair.beta);
    let (duration, carrier) = match options.mode {
        DriveMode::Unoptimized => (solution.t_pi, Carrier::Fixed { omega: omega_ab }),
        DriveMode::FrequencyOnly => (solution.t_pi, chirp.carrier),
        DriveMode::Optimized => (solution.t_opt, chirp.carrier),
        DriveMode::Manual(t) => (t, chirp.carrier),
    };
    let pulse = PulseSpec::new(f0, Envelope::new(shape, duration)?, carrier)?;
    let analyses = perturbers
        .iter()
        .map(|p| PerturberAnalysis::new(system, pair, p, &pulse, options.iteration.detuning))
        .collect::<Result<Vec<_>>>()?;
    let per_side = |s: Side| perturbers.iter().filter(|p| p.attached_to == s).count();
    let report = DesignReport {
        mode: options.mode,
        t_pi: solution.t_pi,
        t_opt: solution.t_opt,
        duration,
        chirp_coefficient: carrier.coefficient(),
        sigma_sq_per_perturber: analyses.iter().map(PerturberAnalysis::sigma_sq).collect(),
        fixed_point_iterations: solution.iterations,
        residual: solution.residual,
        second_order_advisory: second_order_advisory(&analyses, duration)?,
        extrapolated: per_side(Side::Alpha) > 1 || per_side(Side::Beta) > 1,
        fixed_carrier_fallback: chirp.fixed_fallback,
        history: solution.history,
    };
    Ok((pulse, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::fixtures::hf;

    const F0_FIG2: f64 = 2.80534e-4;
    const F0_FIG3: f64 = 6.11409e-4;
    const F0_FIG4: f64 = 4.07606e-4;
    const F0_FIG5: f64 = 1.22282e-3;

    #[test]
    fn sigma_values() {
        let (sys, pair, p) = hf();
        let s3 = sigma(&sys, &pair, &p, F0_FIG3).unwrap();
        assert!((s3 * s3 - 0.2493).abs() < 5e-5, "{}", s3 * s3);
        let s5 = sigma(&sys, &pair, &p, F0_FIG5).unwrap();
        assert!((s5 * s5 - 0.9973).abs() < 5e-5, "{}", s5 * s5);
        assert_eq!(sigma(&sys, &pair, &p, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn resonant_perturber_is_rejected() {
        let sys = LevelSystem::build(
            &["a", "b", "p"],
            &[0.0, 1.0, 2.0],
            &[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]],
        )
        .unwrap();
        let pair = TargetPair::new(&sys, 0, 1).unwrap();
        let p = PerturberSpec::new(&sys, &pair, Side::Beta, 2).unwrap();
        assert!(matches!(sigma(&sys, &pair, &p, 1e-3), Err(Error::ResonantDegeneracy(_))));
        assert!(delta(&sys, &pair, &p, 1.0).is_err());
    }

    #[test]
    fn delta_endpoints() {
        let (sys, pair, p) = hf();
        assert_eq!(delta(&sys, &pair, &p, 0.017671).unwrap(), 0.0);
        assert!((delta(&sys, &pair, &p, 0.017611).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hf_chirp_coefficient() {
        let (sys, pair, p) = hf();
        let design = chirp_design(&sys, &pair, &[p], F0_FIG4).unwrap();
        assert!(!design.fixed_fallback);
        let s = sigma(&sys, &pair, &p, F0_FIG4).unwrap();
        // independent arithmetic: sign factor -1, (omega_bp - omega_ab) = -6.0e-5
        let prefactor = 2.0 * 0.017611 / (0.017671 + 0.017611);
        let expect = 6.0e-5 * prefactor * s * s;
        assert!((prefactor - 0.99830).abs() < 1e-5);
        assert!((design.carrier.coefficient() - expect).abs() < 1e-9 * expect);
        assert!(design.carrier.coefficient() > 0.0);
    }

    #[test]
    fn chirp_fallbacks() {
        let (sys, pair, p) = hf();
        let zero = chirp_design(&sys, &pair, &[p], 0.0).unwrap();
        assert_eq!(zero.carrier.coefficient(), 0.0);
        let none = chirp_design(&sys, &pair, &[], F0_FIG4).unwrap();
        assert!(none.fixed_fallback);
        assert_eq!(none.carrier, Carrier::Fixed { omega: 0.017671 });
    }

    #[test]
    fn pi_pulse_closed_forms() {
        let (sys, pair, _) = hf();
        let f0 = 1e-3;
        let c = pi_pulse_duration(&sys, &pair, f0, EnvelopeShape::Constant, 1).unwrap();
        assert!((c - std::f64::consts::PI / (f0 * 0.073)).abs() < 1e-9 * c);
        let s = pi_pulse_duration(&sys, &pair, f0, EnvelopeShape::Sin2, 3).unwrap();
        assert!((s - 6.0 * std::f64::consts::PI / (f0 * 0.073)).abs() < 1e-9 * s);
        assert!(pi_pulse_duration(&sys, &pair, f0, EnvelopeShape::Sin2, 0).is_err());
        assert!(pi_pulse_duration(&sys, &pair, 0.0, EnvelopeShape::Sin2, 1).is_err());
    }

    #[test]
    fn hf_pi_durations_close_to_quoted() {
        let (sys, pair, _) = hf();
        let t4 = pi_pulse_duration(&sys, &pair, F0_FIG4, EnvelopeShape::Sin2, 1).unwrap();
        assert!((t4 / 211831.0 - 1.0).abs() < 0.01);
        let t2 = pi_pulse_duration(&sys, &pair, F0_FIG2, EnvelopeShape::Sin2, 10).unwrap();
        assert!((t2 / 3077832.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn epsilon_examples() {
        let (sys, pair, p) = hf();
        let t = pi_pulse_duration(&sys, &pair, F0_FIG4, EnvelopeShape::Sin2, 1).unwrap();
        let fixed = PulseSpec::new(
            F0_FIG4,
            Envelope::new(EnvelopeShape::Sin2, t).unwrap(),
            Carrier::Fixed { omega: 0.017671 },
        )
        .unwrap();
        let s2 = sigma(&sys, &pair, &p, F0_FIG4).unwrap().powi(2);
        assert_eq!(epsilon(&sys, &pair, &p, &fixed, 0.0).unwrap(), 0.0);
        assert!((epsilon(&sys, &pair, &p, &fixed, t / 2.0).unwrap() - s2).abs() < 1e-14);
        assert!(epsilon(&sys, &pair, &p, &fixed, 2.0 * t).is_err());
    }

    #[test]
    fn singular_detuning() {
        let (sys, pair, p) = hf();
        // carrier pinned on the perturbing resonance
        let pulse = PulseSpec::new(
            F0_FIG4,
            Envelope::new(EnvelopeShape::Constant, 1000.0).unwrap(),
            Carrier::Fixed { omega: 0.017611 },
        )
        .unwrap();
        let a = PerturberAnalysis::new(&sys, &pair, &p, &pulse, DetuningMode::Chirp).unwrap();
        assert!(matches!(a.epsilon(10.0), Err(Error::SingularDetuning(_))));
    }

    #[test]
    fn epsilon_tau_derivative_matches_finite_difference() {
        let (sys, pair, p) = hf();
        let chirp = chirp_design(&sys, &pair, &[p], F0_FIG5).unwrap();
        let pulse = PulseSpec::new(
            F0_FIG5,
            Envelope::new(EnvelopeShape::Sin2, 80000.0).unwrap(),
            chirp.carrier,
        )
        .unwrap();
        let a = PerturberAnalysis::new(&sys, &pair, &p, &pulse, DetuningMode::Chirp).unwrap();
        let clock = pulse.clock(0.073);
        for &t in &[5000.0, 20000.0, 40000.0, 61000.0] {
            let h = 1.0;
            let fd = (a.epsilon(t + h).unwrap() - a.epsilon(t - h).unwrap())
                / (clock.tau(t + h).unwrap() - clock.tau(t - h).unwrap());
            let an = a.epsilon_tau_derivative(t).unwrap();
            assert!((fd - an).abs() < 1e-6 * an.abs().max(1e-3), "t={t} fd={fd} an={an}");
        }
    }

    #[test]
    fn no_perturbers_gives_pi_pulse() {
        let (sys, pair, _) = hf();
        let sol = optimized_duration(
            &sys,
            &pair,
            &[],
            F0_FIG4,
            EnvelopeShape::Sin2,
            1,
            Carrier::Fixed { omega: 0.017671 },
            &IterationOptions::default(),
        )
        .unwrap();
        assert_eq!(sol.t_opt, sol.t_pi);
    }

    #[test]
    fn zero_sigma_perturber_gives_pi_pulse() {
        // eps underflows to zero for a vanishing coupling
        let sys = LevelSystem::build(
            &["a", "b", "p"],
            &[0.0, 0.017671, 0.035282],
            &[vec![0.0, 0.073, 0.0], vec![0.073, 0.0, 1e-300], vec![0.0, 1e-300, 0.0]],
        )
        .unwrap();
        let pair = TargetPair::new(&sys, 0, 1).unwrap();
        let p = PerturberSpec::new(&sys, &pair, Side::Beta, 2).unwrap();
        let chirp = chirp_design(&sys, &pair, &[p], F0_FIG4).unwrap();
        let sol = optimized_duration(
            &sys,
            &pair,
            &[p],
            F0_FIG4,
            EnvelopeShape::Sin2,
            1,
            chirp.carrier,
            &IterationOptions::default(),
        )
        .unwrap();
        assert!((sol.t_opt - sol.t_pi).abs() <= 1e-10 * sol.t_pi);
    }

    #[test]
    fn optimized_exceeds_pi_and_converges_fast() {
        let (sys, pair, p) = hf();
        for (f0, n) in [(F0_FIG2, 10), (F0_FIG3, 6), (F0_FIG4, 1), (F0_FIG5, 1)] {
            let (_, report) = design_pulse(
                &sys,
                &pair,
                &[p],
                f0,
                EnvelopeShape::Sin2,
                n,
                &DesignOptions::default(),
            )
            .unwrap();
            assert!(report.t_opt > report.t_pi);
            assert!(report.fixed_point_iterations <= 50);
            assert!(report.residual <= 1e-10);
            assert!(report.second_order_advisory >= 0.0);
        }
    }

    #[test]
    fn non_convergence_reports_history() {
        let (sys, pair, p) = hf();
        let chirp = chirp_design(&sys, &pair, &[p], F0_FIG4).unwrap();
        let err = optimized_duration(
            &sys,
            &pair,
            &[p],
            F0_FIG4,
            EnvelopeShape::Sin2,
            1,
            chirp.carrier,
            &IterationOptions {
                tol: 1e-10,
                max_iter: 1,
                detuning: DetuningMode::Chirp,
            },
        )
        .unwrap_err();
        match err {
            Error::NonConvergence { history } => assert_eq!(history.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn first_order_scaling_in_sigma_sq() {
        // choose amplitudes giving sigma^2 = 0.01 and 0.005
        let (sys, pair, p) = hf();
        let f0_for = |s2: f64| s2.sqrt() * 2.0 * 6.0e-5 / 0.098;
        let excess = |s2: f64| {
            let f0 = f0_for(s2);
            let (_, r) = design_pulse(&sys, &pair, &[p], f0, EnvelopeShape::Sin2, 1, &DesignOptions::default())
                .unwrap();
            (r.t_opt - r.t_pi) / r.t_pi
        };
        let ratio = excess(0.01) / excess(0.005);
        assert!((ratio - 2.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn design_modes() {
        let (sys, pair, p) = hf();
        let run = |mode| {
            design_pulse(
                &sys,
                &pair,
                &[p],
                F0_FIG4,
                EnvelopeShape::Sin2,
                1,
                &DesignOptions {
                    mode,
                    ..Default::default()
                },
            )
            .unwrap()
        };
        let (un, r) = run(DriveMode::Unoptimized);
        assert_eq!(un.duration(), r.t_pi);
        assert_eq!(un.carrier, Carrier::Fixed { omega: 0.017671 });
        let (fo, r) = run(DriveMode::FrequencyOnly);
        assert_eq!(fo.duration(), r.t_pi);
        assert!(matches!(fo.carrier, Carrier::Chirped(_)));
        let (op, r) = run(DriveMode::Optimized);
        assert_eq!(op.duration(), r.t_opt);
        let (man, _) = run(DriveMode::Manual(12345.0));
        assert_eq!(man.duration(), 12345.0);
    }

    #[test]
    fn chirp_is_non_negative_for_hf() {
        let (sys, pair, p) = hf();
        let (pulse, _) =
            design_pulse(&sys, &pair, &[p], F0_FIG4, EnvelopeShape::Sin2, 1, &DesignOptions::default())
                .unwrap();
        assert_eq!(pulse.carrier_frequency(0.0).unwrap(), 0.017671);
        for k in 0..=1000 {
            let t = pulse.duration() * k as f64 / 1000.0;
            assert!(pulse.carrier_frequency(t).unwrap() >= 0.017671);
        }
    }
}
