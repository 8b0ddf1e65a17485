//! Time propagation of the interaction-picture Schrödinger equation
//! `da/dt = -i V(t) a`, keeping both rotating and counter-rotating terms,
//! plus the corrected two-level reduced model used as a cross-check.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::designer::{DetuningMode, PerturberAnalysis};
use crate::error::{Error, Result};
use crate::levels::{LevelSystem, PerturberSpec, Side, TargetPair};
use crate::ode::{self, StepControl, Stats};
use crate::pulse::PulseSpec;

/// Norm drift above which a trajectory is flagged.
pub const NORM_FLAG_THRESHOLD: f64 = 1e-6;

/// Complex amplitudes of the stationary levels.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Vec<Complex64>);

impl StateVector {
    /// Wraps amplitudes, requiring `sum |a_i|^2 = 1` to 1e-12.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let s = Self(amplitudes);
        let norm = s.norm_sq();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::UnnormalizedState(norm));
        }
        Ok(s)
    }

    /// All population in level `i`.
    pub fn basis(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::IndexOutOfRange(i));
        }
        let mut a = vec![Complex64::new(0.0, 0.0); n];
        a[i] = Complex64::new(1.0, 0.0);
        Ok(Self(a))
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(Complex64::norm_sqr).collect()
    }
}

/// Dense `N x N` complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    /// `max_ij |A_ij - conj(A_ji)|`
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }
}

/// One coupled pair `(i, j)`, `i < j`, with everything needed for `V_ij(t)`.
#[derive(Debug, Clone, Copy)]
struct Coupling {
    i: usize,
    j: usize,
    half_rabi: f64,
    sign: f64,
    omega: f64,
}

fn couplings(system: &LevelSystem, pulse: &PulseSpec) -> Vec<Coupling> {
    system
        .coupled_pairs()
        .map(|(i, j)| Coupling {
            i,
            j,
            half_rabi: 0.5 * pulse.amplitude * system.moment(i, j),
            sign: system.sign(i, j),
            omega: system.omega(i, j),
        })
        .collect()
}

/// `V_ij(t)` for `i < j`; `V_ji` is its conjugate.
#[inline]
fn coupling_element(c: &Coupling, m: f64, phase: f64, t: f64) -> Complex64 {
    let rot = Complex64::from_polar(1.0, c.sign * (phase - c.omega * t));
    let counter = Complex64::from_polar(1.0, -c.sign * (phase + c.omega * t));
    (rot + counter) * (c.half_rabi * m)
}

/// Interaction matrix `V(t)` (no rotating-wave approximation).
pub fn interaction_matrix(system: &LevelSystem, pulse: &PulseSpec, t: f64) -> Result<ComplexMatrix> {
    pulse.envelope.check(t)?;
    let m = pulse.envelope.m(t);
    let phase = pulse.omega(t) * t;
    let mut v = ComplexMatrix::zeros(system.len());
    for c in couplings(system, pulse) {
        let e = coupling_element(&c, m, phase, t);
        v.set(c.i, c.j, e);
        v.set(c.j, c.i, e.conj());
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative and absolute local error per step.
    pub tol: f64,
    /// Fraction of the shortest oscillation period allowed per step.
    pub steps_per_period: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            steps_per_period: 40.0,
        }
    }
}

/// Output sampling: `points` uniformly spaced times covering `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    pub points: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { points: 2000 }
    }
}

impl Sampling {
    pub fn grid(&self, duration: f64) -> Vec<f64> {
        let n = self.points.max(2);
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    duration
                } else {
                    duration * k as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub amplitudes: Vec<Vec<Complex64>>,
    /// `populations[k][i] = |a_i(t_k)|^2`
    pub populations: Vec<Vec<f64>>,
    /// `sum_i Pi_i(t_k) - 1`
    pub norm_error: Vec<f64>,
    pub norm_drift: f64,
    /// Set when `norm_drift` exceeds [`NORM_FLAG_THRESHOLD`].
    pub norm_flag: bool,
    pub carrier_samples: Vec<f64>,
    pub envelope_samples: Vec<f64>,
    #[serde(skip)]
    pub stats: Stats,
}

impl Trajectory {
    pub fn final_state(&self) -> StateVector {
        StateVector(self.amplitudes.last().cloned().unwrap_or_default())
    }

    pub fn final_populations(&self) -> &[f64] {
        self.populations.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Population series of level `i`.
    pub fn population_of(&self, i: usize) -> Vec<f64> {
        self.populations.iter().map(|p| p[i]).collect()
    }
}

/// Step cap: a fraction of the fastest phase rotation in `V(t)`.
fn max_step(system: &LevelSystem, pulse: &PulseSpec, tol: &Tolerances) -> f64 {
    let fastest = system
        .coupled_pairs()
        .map(|(i, j)| pulse.max_frequency() + system.omega(i, j))
        .fold(0.0, f64::max);
    if fastest > 0.0 && pulse.amplitude > 0.0 {
        2.0 * PI / fastest / tol.steps_per_period
    } else {
        pulse.duration()
    }
}

/// Integrates the full N-level dynamics across the pulse, sampling on `sampling`.
pub fn integrate(
    system: &LevelSystem,
    pulse: &PulseSpec,
    initial: &StateVector,
    sampling: &Sampling,
    tolerances: &Tolerances,
) -> Result<Trajectory> {
    let duration = pulse.duration();
    integrate_between(system, pulse, initial, 0.0, duration, &sampling.grid(duration), tolerances)
}

/// Integrates from `t0` to `t1` (either direction) inside the pulse support.
pub fn integrate_between(
    system: &LevelSystem,
    pulse: &PulseSpec,
    initial: &StateVector,
    t0: f64,
    t1: f64,
    samples: &[f64],
    tolerances: &Tolerances,
) -> Result<Trajectory> {
    if initial.len() != system.len() {
        return Err(Error::DimensionMismatch {
            what: "amplitudes",
            expected: system.len(),
            got: initial.len(),
        });
    }
    pulse.envelope.check(t0)?;
    pulse.envelope.check(t1)?;
    let cs = couplings(system, pulse);
    let n = system.len();
    let rhs = |t: f64, a: &[Complex64], da: &mut [Complex64]| {
        da.iter_mut().for_each(|d| *d = Complex64::new(0.0, 0.0));
        let m = pulse.envelope.m(t);
        if m == 0.0 {
            return;
        }
        let phase = pulse.omega(t) * t;
        let minus_i = Complex64::new(0.0, -1.0);
        for c in &cs {
            let v = coupling_element(c, m, phase, t);
            da[c.i] += minus_i * v * a[c.j];
            da[c.j] += minus_i * v.conj() * a[c.i];
        }
    };
    let ctl = StepControl::new(tolerances.tol, max_step(system, pulse, tolerances));

    let mut traj = Trajectory {
        labels: system.labels().to_vec(),
        times: Vec::with_capacity(samples.len()),
        amplitudes: Vec::with_capacity(samples.len()),
        populations: Vec::with_capacity(samples.len()),
        norm_error: Vec::with_capacity(samples.len()),
        norm_drift: 0.0,
        norm_flag: false,
        carrier_samples: Vec::with_capacity(samples.len()),
        envelope_samples: Vec::with_capacity(samples.len()),
        stats: Stats::default(),
    };
    let (last, stats) = ode::integrate(rhs, t0, t1, initial.amplitudes(), &ctl, samples, |t, a| {
        let pops: Vec<f64> = a.iter().map(Complex64::norm_sqr).collect();
        let err = pops.iter().sum::<f64>() - 1.0;
        traj.times.push(t);
        traj.amplitudes.push(a.to_vec());
        traj.populations.push(pops);
        traj.norm_error.push(err);
        traj.carrier_samples.push(pulse.omega(t));
        traj.envelope_samples.push(pulse.envelope.m(t));
    })?;
    debug_assert_eq!(last.len(), n);
    let final_err = (last.iter().map(Complex64::norm_sqr).sum::<f64>() - 1.0).abs();
    traj.norm_drift = traj
        .norm_error
        .iter()
        .map(|e| e.abs())
        .fold(final_err, f64::max);
    traj.norm_flag = traj.norm_drift > NORM_FLAG_THRESHOLD;
    traj.stats = stats;
    Ok(traj)
}

/// `Pi_p(t) ≈ eps(t) Pi_beta(t)` along a trajectory.
pub fn predicted_perturber_population<F>(
    trajectory: &Trajectory,
    beta: usize,
    epsilon_of_t: F,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    trajectory
        .times
        .iter()
        .zip(&trajectory.populations)
        .map(|(&t, p)| Ok(epsilon_of_t(t)? * p[beta]))
        .collect()
}

/// Coefficients of the corrected two-level equation at one instant.
///
/// `zeta = 1/(1 + eps)`, `xi = -d/dtau ln sqrt(1 + eps)` per target level, and
/// `kappa^2 = (1 + eps_alpha)(1 + eps_beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedModelCoeffs {
    pub eps_alpha_q: f64,
    pub eps_beta_p: f64,
    pub zeta_alpha: f64,
    pub zeta_beta: f64,
    pub xi_alpha: f64,
    pub xi_beta: f64,
    pub kappa: f64,
}

/// The corrected two-level model for a designed pulse.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    alpha: Vec<PerturberAnalysis>,
    beta: Vec<PerturberAnalysis>,
    pulse: PulseSpec,
    mu_ab: f64,
}

impl ReducedModel {
    pub fn new(
        system: &LevelSystem,
        pair: &TargetPair,
        perturbers: &[PerturberSpec],
        pulse: &PulseSpec,
        detuning: DetuningMode,
    ) -> Result<Self> {
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        for p in perturbers {
            let a = PerturberAnalysis::new(system, pair, p, pulse, detuning)?;
            match p.attached_to {
                Side::Alpha => alpha.push(a),
                Side::Beta => beta.push(a),
            }
        }
        Ok(Self {
            alpha,
            beta,
            pulse: *pulse,
            mu_ab: system.moment(pair.alpha, pair.beta),
        })
    }

    /// `(prod (1 + eps_i)) - 1` and `d/dtau ln sqrt(prod (1 + eps_i))`.
    fn side(list: &[PerturberAnalysis], t: f64) -> Result<(f64, f64)> {
        let mut prod = 1.0;
        let mut dlog = 0.0;
        for a in list {
            let e = a.epsilon(t)?;
            prod *= 1.0 + e;
            dlog += 0.5 * a.epsilon_tau_derivative(t)? / (1.0 + e);
        }
        Ok((prod - 1.0, dlog))
    }

    pub fn coeffs(&self, t: f64) -> Result<ReducedModelCoeffs> {
        self.pulse.envelope.check(t)?;
        let (ea, la) = Self::side(&self.alpha, t)?;
        let (eb, lb) = Self::side(&self.beta, t)?;
        Ok(ReducedModelCoeffs {
            eps_alpha_q: ea,
            eps_beta_p: eb,
            zeta_alpha: 1.0 / (1.0 + ea),
            zeta_beta: 1.0 / (1.0 + eb),
            xi_alpha: -la,
            xi_beta: -lb,
            kappa: ((1.0 + ea) * (1.0 + eb)).sqrt(),
        })
    }

    /// Integrates `b` in scaled time over the whole pulse.
    ///
    /// The generator is non-Hermitian, so no norm check is applied.
    pub fn integrate(&self, initial: Side, sampling: &Sampling, tol: f64) -> Result<ReducedTrajectory> {
        let clock = self.pulse.clock(self.mu_ab);
        let total = clock.total_tau();
        let tau_grid = sampling.grid(total);
        let failure = std::cell::Cell::new(None);
        let rhs = |tau: f64, b: &[Complex64], db: &mut [Complex64]| {
            let t = clock.invert(tau);
            match self.coeffs(t) {
                Ok(c) => {
                    let minus_i = Complex64::new(0.0, -1.0);
                    // db/dtau = -i M b with M = [[i xi_a, zeta_a], [zeta_b, i xi_b]]
                    db[0] = c.xi_alpha * b[0] + minus_i * c.zeta_alpha * b[1];
                    db[1] = minus_i * c.zeta_beta * b[0] + c.xi_beta * b[1];
                }
                Err(e) => {
                    failure.set(Some(e));
                    db[0] = Complex64::new(0.0, 0.0);
                    db[1] = Complex64::new(0.0, 0.0);
                }
            }
        };
        let mut b0 = [Complex64::new(0.0, 0.0); 2];
        b0[match initial {
            Side::Alpha => 0,
            Side::Beta => 1,
        }] = Complex64::new(1.0, 0.0);
        let ctl = StepControl::new(tol, (total / 50.0).max(f64::MIN_POSITIVE));
        let mut out = ReducedTrajectory::default();
        ode::integrate(rhs, 0.0, total, &b0, &ctl, &tau_grid, |tau, b| {
            out.tau.push(tau);
            out.times.push(clock.invert(tau));
            out.amplitudes.push([b[0], b[1]]);
            out.populations.push([b[0].norm_sqr(), b[1].norm_sqr()]);
        })?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(out)
    }
}

/// Trajectory of the reduced `(b_alpha, b_beta)` model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReducedTrajectory {
    pub tau: Vec<f64>,
    pub times: Vec<f64>,
    pub amplitudes: Vec<[Complex64; 2]>,
    /// `[|b_alpha|^2, |b_beta|^2]`
    pub populations: Vec<[f64; 2]>,
}

impl ReducedTrajectory {
    /// Population that has left the `(alpha, beta)` subsystem.
    pub fn leak(&self) -> Vec<f64> {
        self.populations.iter().map(|p| 1.0 - p[0] - p[1]).collect()
    }
}

/// Convenience wrapper: builds the reduced model and integrates it.
#[allow(clippy::too_many_arguments)]
pub fn integrate_reduced(
    system: &LevelSystem,
    pair: &TargetPair,
    perturbers: &[PerturberSpec],
    pulse: &PulseSpec,
    initial: Side,
    detuning: DetuningMode,
    sampling: &Sampling,
    tol: f64,
) -> Result<ReducedTrajectory> {
    ReducedModel::new(system, pair, perturbers, pulse, detuning)?.integrate(initial, sampling, tol)
}
