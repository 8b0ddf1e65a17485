//! Driving pulse `F(t) = F0 m(t) cos(omega(t) t)`: envelope, carrier chirp,
//! and the scaled-time clock `dtau = (F0 mu_ab / 2) m(t) dt`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levels::TransitionData;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeShape {
    /// `m(t) = sin^2(pi t / T)`
    Sin2,
    /// `m(t) = 1`
    Constant,
}

impl EnvelopeShape {
    /// Mean of `m` over its full support.
    pub fn mean(self) -> f64 {
        match self {
            EnvelopeShape::Sin2 => 0.5,
            EnvelopeShape::Constant => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EnvelopeShape::Sin2 => "sin2",
            EnvelopeShape::Constant => "constant",
        }
    }
}

impl fmt::Display for EnvelopeShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvelopeShape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sin2" => Ok(EnvelopeShape::Sin2),
            "constant" => Ok(EnvelopeShape::Constant),
            other => Err(format!("unknown envelope shape {other:?}")),
        }
    }
}

/// Pulse envelope `m(t)` on the support `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub shape: EnvelopeShape,
    pub duration: f64,
}

/// `∫_0^x sin^2` and `∫_0^x sin^4` in the variable `x = Omega t`.
///
/// The closed forms cancel catastrophically near zero, so small arguments
/// go through the Taylor series of `(1 - cos 2x)/2` and
/// `(3 - 4 cos 2x + cos 4x)/8`.
fn sin_power_integrals(x: f64) -> (f64, f64) {
    if x < 0.5 {
        let x2 = x * x;
        let mut s2 = 0.0;
        let mut s4 = 0.0;
        // x^(2k+1) / (2k)!
        let mut pw = x;
        let mut fact = 1.0;
        let (mut p2, mut p4) = (1.0f64, 1.0f64);
        for k in 1..=14 {
            pw *= x2;
            fact *= (2 * k - 1) as f64 * (2 * k) as f64;
            p2 *= 4.0;
            p4 *= 16.0;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let odd = (2 * k + 1) as f64;
            s2 += -sign * p2 / (2.0 * fact) * pw / odd;
            if k >= 2 {
                s4 += sign * (p4 - 4.0 * p2) / (8.0 * fact) * pw / odd;
            }
        }
        (s2, s4)
    } else {
        (
            x / 2.0 - (2.0 * x).sin() / 4.0,
            3.0 * x / 8.0 - (2.0 * x).sin() / 4.0 + (4.0 * x).sin() / 32.0,
        )
    }
}

impl Envelope {
    pub fn new(shape: EnvelopeShape, duration: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::InvalidPulse(format!(
                "duration must be positive, got {duration}"
            )));
        }
        Ok(Self { shape, duration })
    }

    /// `Omega = pi / T` of the sin^2 shape.
    pub fn angular_rate(&self) -> f64 {
        PI / self.duration
    }

    pub(crate) fn check(&self, t: f64) -> Result<()> {
        if (0.0..=self.duration).contains(&t) {
            Ok(())
        } else {
            Err(Error::OutsideSupport {
                t,
                duration: self.duration,
            })
        }
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.m(t))
    }

    /// `∫_0^t m(t') dt'`
    pub fn integral(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.int_m(t))
    }

    /// `∫_0^t m(t')^2 dt'`
    pub fn sq_integral(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.int_m2(t))
    }

    pub(crate) fn m(&self, t: f64) -> f64 {
        match self.shape {
            EnvelopeShape::Sin2 => {
                let s = (self.angular_rate() * t).sin();
                s * s
            }
            EnvelopeShape::Constant => 1.0,
        }
    }

    pub(crate) fn m_dot(&self, t: f64) -> f64 {
        match self.shape {
            EnvelopeShape::Sin2 => {
                let w = self.angular_rate();
                w * (2.0 * w * t).sin()
            }
            EnvelopeShape::Constant => 0.0,
        }
    }

    pub(crate) fn int_m(&self, t: f64) -> f64 {
        match self.shape {
            EnvelopeShape::Sin2 => {
                let w = self.angular_rate();
                sin_power_integrals(w * t).0 / w
            }
            EnvelopeShape::Constant => t,
        }
    }

    pub(crate) fn int_m2(&self, t: f64) -> f64 {
        match self.shape {
            EnvelopeShape::Sin2 => {
                let w = self.angular_rate();
                sin_power_integrals(w * t).1 / w
            }
            EnvelopeShape::Constant => t,
        }
    }

    /// Running mean `(1/t) ∫_0^t m^2`, continued to `m(0)^2` at `t = 0`.
    pub(crate) fn mean_sq(&self, t: f64) -> f64 {
        if t <= 0.0 {
            let m0 = self.m(0.0);
            m0 * m0
        } else {
            self.int_m2(t) / t
        }
    }

    /// Time derivative of `mean_sq`.
    pub(crate) fn mean_sq_dot(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            let m = self.m(t);
            (m * m - self.mean_sq(t)) / t
        }
    }
}

/// Chirped carrier `omega(t) = base + C (1/t) ∫_0^t m^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpProfile {
    pub base: f64,
    pub coefficient: f64,
}

impl ChirpProfile {
    pub fn frequency(&self, envelope: &Envelope, t: f64) -> f64 {
        self.base + self.coefficient * envelope.mean_sq(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Carrier {
    Fixed { omega: f64 },
    Chirped(ChirpProfile),
}

impl Carrier {
    pub fn base(&self) -> f64 {
        match *self {
            Carrier::Fixed { omega } => omega,
            Carrier::Chirped(c) => c.base,
        }
    }

    pub fn coefficient(&self) -> f64 {
        match *self {
            Carrier::Fixed { .. } => 0.0,
            Carrier::Chirped(c) => c.coefficient,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub amplitude: f64,
    pub envelope: Envelope,
    pub carrier: Carrier,
}

impl PulseSpec {
    /// A zero amplitude is accepted (no drive); negative or non-finite is not.
    pub fn new(amplitude: f64, envelope: Envelope, carrier: Carrier) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidPulse(format!(
                "amplitude must be non-negative, got {amplitude}"
            )));
        }
        Ok(Self {
            amplitude,
            envelope,
            carrier,
        })
    }

    pub fn duration(&self) -> f64 {
        self.envelope.duration
    }

    pub fn envelope_value(&self, t: f64) -> Result<f64> {
        self.envelope.value(t)
    }

    pub fn carrier_frequency(&self, t: f64) -> Result<f64> {
        self.envelope.check(t)?;
        Ok(self.omega(t))
    }

    /// `F0 m(t) cos(omega(t) t)`; the phase is the product `omega(t) t`.
    pub fn field_value(&self, t: f64) -> Result<f64> {
        self.envelope.check(t)?;
        Ok(self.amplitude * self.envelope.m(t) * (self.omega(t) * t).cos())
    }

    pub(crate) fn omega(&self, t: f64) -> f64 {
        match self.carrier {
            Carrier::Fixed { omega } => omega,
            Carrier::Chirped(c) => c.frequency(&self.envelope, t),
        }
    }

    /// `d omega / dt`
    pub(crate) fn omega_dot(&self, t: f64) -> f64 {
        self.carrier.coefficient() * self.envelope.mean_sq_dot(t)
    }

    /// Largest carrier frequency reached on the support.
    pub fn max_frequency(&self) -> f64 {
        self.carrier.base() + self.carrier.coefficient().abs()
    }

    pub fn clock(&self, mu_alpha_beta: f64) -> ScaledClock {
        ScaledClock::new(self, mu_alpha_beta)
    }
}

/// Map between physical time `t` and scaled time `tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledClock {
    /// `F0 |mu_ab| / 2`
    rate: f64,
    envelope: Envelope,
}

impl ScaledClock {
    pub fn new(pulse: &PulseSpec, mu_alpha_beta: f64) -> Self {
        Self {
            rate: 0.5 * pulse.amplitude * mu_alpha_beta.abs(),
            envelope: pulse.envelope,
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn tau(&self, t: f64) -> Result<f64> {
        self.envelope.check(t)?;
        Ok(self.tau_unchecked(t))
    }

    pub(crate) fn tau_unchecked(&self, t: f64) -> f64 {
        self.rate * self.envelope.int_m(t)
    }

    /// `d tau / dt`
    pub(crate) fn tau_dot(&self, t: f64) -> f64 {
        self.rate * self.envelope.m(t)
    }

    pub fn total_tau(&self) -> f64 {
        self.tau_unchecked(self.envelope.duration)
    }

    /// `x = (F0 mu_ab / 2) t`
    pub fn x(&self, t: f64) -> f64 {
        self.rate * t
    }

    /// Inverse of `tau` by bisection on the monotone support.
    pub fn t_of_tau(&self, tau: f64) -> Result<f64> {
        let total = self.total_tau();
        if !(0.0..=total).contains(&tau) {
            return Err(Error::TauOutOfRange {
                tau,
                tau_max: total,
            });
        }
        Ok(self.invert(tau))
    }

    pub(crate) fn invert(&self, tau: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.envelope.duration);
        if tau <= 0.0 {
            return 0.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.tau_unchecked(mid) < tau {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Dimensionless detunings `(f_ij, g_ij)` of one transition at time `t`.
///
/// Diagnostic only; propagation works in physical time.
pub fn scaled_detunings(
    pulse: &PulseSpec,
    mu_alpha_beta: f64,
    transition: &TransitionData,
    t: f64,
) -> Result<(f64, f64)> {
    let omega = pulse.carrier_frequency(t)?;
    let k = transition.sign * 2.0 / (pulse.amplitude * mu_alpha_beta);
    Ok((k * (omega - transition.omega), k * (omega + transition.omega)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn composite_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for k in 1..n {
            s += f(a + h * k as f64) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    fn sin2(t: f64) -> Envelope {
        Envelope::new(EnvelopeShape::Sin2, t).unwrap()
    }

    #[test]
    fn envelope_values() {
        let e = sin2(100.0);
        assert!((e.value(50.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(e.value(0.0).unwrap(), 0.0);
        assert!((e.value(25.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(e.value(-1.0).is_err());
        assert!(e.value(100.5).is_err());
    }

    #[test]
    fn sq_integral_special_points() {
        let e = sin2(100.0);
        assert!((e.sq_integral(100.0).unwrap() - 37.5).abs() < 1e-12);
        assert!((e.sq_integral(50.0).unwrap() - 18.75).abs() < 1e-12);
        let c = Envelope::new(EnvelopeShape::Constant, 10.0).unwrap();
        assert_eq!(c.sq_integral(3.0).unwrap(), 3.0);
    }

    #[test]
    fn series_matches_closed_form_at_switch() {
        let x = 0.5;
        let (a, b) = sin_power_integrals(x - 1e-15);
        let (c, d) = sin_power_integrals(x);
        assert!((a - c).abs() < 1e-14 && (b - d).abs() < 1e-14);
    }

    #[test]
    fn tau_examples() {
        let env = sin2(1000.0);
        let p = PulseSpec::new(2e-3, env, Carrier::Fixed { omega: 1.0 }).unwrap();
        let clock = p.clock(0.5);
        assert_eq!(clock.tau(0.0).unwrap(), 0.0);
        assert!((clock.total_tau() - 2e-3 * 0.5 * 1000.0 / 4.0).abs() < 1e-14);
        let half = clock.t_of_tau(clock.total_tau() / 2.0).unwrap();
        assert!((half - 500.0).abs() < 1e-9);
        assert_eq!(clock.t_of_tau(0.0).unwrap(), 0.0);
        assert!(clock.t_of_tau(clock.total_tau() * 1.01).is_err());

        let cst = PulseSpec::new(
            2e-3,
            Envelope::new(EnvelopeShape::Constant, 10.0).unwrap(),
            Carrier::Fixed { omega: 1.0 },
        )
        .unwrap();
        assert!((cst.clock(0.5).tau(4.0).unwrap() - 2e-3 * 0.5 * 4.0 / 2.0).abs() < 1e-18);
    }

    #[test]
    fn carrier_and_field() {
        let env = sin2(1000.0);
        let chirp = ChirpProfile {
            base: 0.5,
            coefficient: 0.01,
        };
        let p = PulseSpec::new(1.0, env, Carrier::Chirped(chirp)).unwrap();
        assert_eq!(p.carrier_frequency(0.0).unwrap(), 0.5);
        assert!((p.carrier_frequency(1000.0).unwrap() - (0.5 + 0.01 * 3.0 / 8.0)).abs() < 1e-15);
        assert_eq!(p.field_value(0.0).unwrap(), 0.0);

        let fixed = PulseSpec::new(
            1.0,
            Envelope::new(EnvelopeShape::Constant, 10.0).unwrap(),
            Carrier::Fixed { omega: 2.0 },
        )
        .unwrap();
        assert_eq!(fixed.carrier_frequency(7.0).unwrap(), 2.0);
        assert!(fixed.field_value(PI / 4.0).unwrap().abs() < 1e-15);

        let cst_chirp = PulseSpec::new(
            1.0,
            Envelope::new(EnvelopeShape::Constant, 10.0).unwrap(),
            Carrier::Chirped(chirp),
        )
        .unwrap();
        assert_eq!(cst_chirp.carrier_frequency(0.0).unwrap(), 0.51);
    }

    #[test]
    fn scaled_detuning_identity() {
        let p = PulseSpec::new(
            1e-3,
            sin2(5000.0),
            Carrier::Chirped(ChirpProfile {
                base: 0.02,
                coefficient: 1e-4,
            }),
        )
        .unwrap();
        let tr = TransitionData {
            omega: 0.017,
            sign: -1.0,
            moment: 0.1,
            ratio: 1.3,
        };
        for &t in &[0.0, 100.0, 2500.0, 5000.0] {
            let (f, g) = scaled_detunings(&p, 0.07, &tr, t).unwrap();
            let expect = tr.sign * 4.0 / (1e-3 * 0.07) * tr.omega;
            assert!(((g - f) - expect).abs() < 1e-9 * expect.abs());
        }
    }

    proptest! {
        #[test]
        fn closed_forms_match_quadrature(duration in 1.0f64..1e6, frac in 0.01f64..1.0) {
            let e = sin2(duration);
            let t = frac * duration;
            let m = |s: f64| e.m(s);
            let q1 = composite_simpson(m, 0.0, t, 4000);
            let q2 = composite_simpson(|s| m(s) * m(s), 0.0, t, 4000);
            prop_assert!((e.integral(t).unwrap() - q1).abs() <= 1e-10 * q1.abs());
            prop_assert!((e.sq_integral(t).unwrap() - q2).abs() <= 1e-10 * q2.abs());
        }

        #[test]
        fn tau_round_trip(duration in 10.0f64..1e6, frac in 0.0f64..1.0) {
            let p = PulseSpec::new(3e-4, sin2(duration), Carrier::Fixed { omega: 0.01 }).unwrap();
            let clock = p.clock(0.073);
            let t = frac * duration;
            let back = clock.t_of_tau(clock.tau(t).unwrap()).unwrap();
            prop_assert!((back - t).abs() <= 1e-10 * duration);
            let tau = frac * clock.total_tau();
            let fwd = clock.tau(clock.t_of_tau(tau).unwrap()).unwrap();
            prop_assert!((fwd - tau).abs() <= 1e-12 * clock.total_tau());
        }

        #[test]
        fn tau_is_monotone(duration in 10.0f64..1e6, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let p = PulseSpec::new(3e-4, sin2(duration), Carrier::Fixed { omega: 0.01 }).unwrap();
            let clock = p.clock(0.073);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(clock.tau(lo * duration).unwrap() <= clock.tau(hi * duration).unwrap());
        }

        #[test]
        fn chirp_and_field_bounds(frac in 0.0f64..=1.0, c in -1e-3f64..1e-3) {
            let p = PulseSpec::new(
                2.5,
                sin2(1234.0),
                Carrier::Chirped(ChirpProfile { base: 0.3, coefficient: c }),
            )
            .unwrap();
            let t = frac * 1234.0;
            prop_assert!((p.carrier_frequency(t).unwrap() - 0.3).abs() <= c.abs() * (1.0 + 1e-12));
            prop_assert!(p.field_value(t).unwrap().abs() <= 2.5);
            let m = p.envelope_value(t).unwrap();
            prop_assert!((0.0..=1.0).contains(&m));
        }
    }
}
