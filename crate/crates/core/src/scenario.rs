//! Scenario files: a line-oriented, sectioned `key = value` format.
//!
//! ```text
//! [levels]
//! alpha = 0
//! beta = 0.017671
//! p = 0.035282
//! [couplings]
//! alpha beta = 0.073
//! beta p = 0.098
//! [target]
//! alpha = alpha
//! beta = beta
//! initial = alpha
//! [perturbers]
//! p = beta
//! [drive]
//! amplitude = 4.07606e-4
//! envelope = sin2
//! n_half = 1
//! mode = optimized
//! [numerics]
//! tol = 1e-10
//! grid = 2000
//! ```
//!
//! `[levels]` may instead give pairwise data anchored at a reference level
//! with zero energy: `reference = alpha` followed by
//! `pair beta alpha = <omega> <sign> <mu>` lines, meaning
//! `E_beta - E_alpha = sign * omega` and `mu_beta_alpha = mu`.

use std::collections::HashMap;
use std::fmt::Write;

use crate::designer::{DetuningMode, DriveMode, IterationOptions};
use crate::error::{Error, Result};
use crate::levels::{LevelSystem, PerturberSpec, Side, TargetPair};
use crate::propagator::{Sampling, Tolerances};
use crate::pulse::EnvelopeShape;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub amplitude: f64,
    pub envelope: EnvelopeShape,
    pub n_half: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerics {
    pub tol: f64,
    pub grid: usize,
    pub max_iter: usize,
    pub detuning: DetuningMode,
    pub steps_per_period: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            grid: 2000,
            max_iter: 50,
            detuning: DetuningMode::Chirp,
            steps_per_period: 40.0,
        }
    }
}

impl Numerics {
    pub fn iteration(&self) -> IterationOptions {
        IterationOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            detuning: self.detuning,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            tol: self.tol,
            steps_per_period: self.steps_per_period,
        }
    }

    pub fn sampling(&self) -> Sampling {
        Sampling { points: self.grid }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: LevelSystem,
    pub pair: TargetPair,
    /// Target level holding all population at `t = 0`.
    pub initial: Side,
    pub perturbers: Vec<PerturberSpec>,
    pub drive: Drive,
    pub mode: DriveMode,
    /// Hand-picked duration; always present in manual mode, optional otherwise.
    pub manual_duration: Option<f64>,
    pub numerics: Numerics,
}

impl Scenario {
    pub fn initial_level(&self) -> usize {
        self.pair.level(self.initial)
    }

    /// Level expected to hold the population once `n_half` half-oscillations
    /// are complete.
    pub fn final_target(&self) -> usize {
        if self.drive.n_half % 2 == 1 {
            self.pair.level(self.initial.other())
        } else {
            self.initial_level()
        }
    }

    /// Every mode this scenario can be run in, in comparison order.
    pub fn applicable_modes(&self) -> Vec<DriveMode> {
        let mut modes = vec![
            DriveMode::Unoptimized,
            DriveMode::FrequencyOnly,
            DriveMode::Optimized,
        ];
        if let Some(t) = self.manual_duration {
            modes.push(DriveMode::Manual(t));
        }
        modes
    }

    pub fn parse(text: &str) -> Result<Self> {
        Parser::default().run(text)
    }

    /// Canonical text form (absolute energies). Parsing it yields an equal scenario.
    pub fn serialize(&self) -> String {
        let sys = &self.system;
        let mut out = String::new();
        out.push_str("[levels]\n");
        for (l, e) in sys.labels().iter().zip(sys.energies()) {
            let _ = writeln!(out, "{l} = {e:e}");
        }
        out.push_str("\n[couplings]\n");
        for (i, j) in sys.coupled_pairs() {
            let _ = writeln!(out, "{} {} = {:e}", sys.label(i), sys.label(j), sys.moment(i, j));
        }
        let _ = write!(
            out,
            "\n[target]\nalpha = {}\nbeta = {}\ninitial = {}\n",
            sys.label(self.pair.alpha),
            sys.label(self.pair.beta),
            sys.label(self.initial_level())
        );
        out.push_str("\n[perturbers]\n");
        for p in &self.perturbers {
            let _ = writeln!(out, "{} = {}", sys.label(p.level), sys.label(p.anchor(&self.pair)));
        }
        let d = &self.drive;
        let _ = write!(
            out,
            "\n[drive]\namplitude = {:e}\nenvelope = {}\nn_half = {}\nmode = {}\n",
            d.amplitude,
            d.envelope,
            d.n_half,
            self.mode.name()
        );
        if let Some(t) = self.manual_duration {
            let _ = writeln!(out, "duration = {t:e}");
        }
        let n = &self.numerics;
        let _ = write!(
            out,
            "\n[numerics]\ntol = {:e}\ngrid = {}\nmax_iter = {}\ndetuning = {}\nsteps_per_period = {:e}\n",
            n.tol, n.grid, n.max_iter, n.detuning, n.steps_per_period
        );
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    None,
    Levels,
    Couplings,
    Target,
    Perturbers,
    Drive,
    Numerics,
}

struct PairLine {
    line: usize,
    upper: String,
    lower: String,
    omega: f64,
    sign: f64,
    mu: f64,
}

#[derive(Default)]
struct Parser {
    absolute: Vec<(usize, String, f64)>,
    reference: Option<(usize, String)>,
    pairs: Vec<PairLine>,
    couplings: Vec<(usize, String, String, f64)>,
    target: HashMap<&'static str, (usize, String)>,
    perturbers: Vec<(usize, String, String)>,
    drive: HashMap<&'static str, (usize, String)>,
    numerics: HashMap<&'static str, (usize, String)>,
}

fn line_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Scenario {
        line,
        msg: msg.into(),
    }
}

fn field_err(field: &'static str, msg: impl ToString) -> Error {
    Error::ScenarioField {
        field,
        msg: msg.to_string(),
    }
}

fn number(line: usize, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| line_err(line, format!("expected a number, got {s:?}")))
}

fn valid_label(s: &str) -> bool {
    !s.is_empty() && !s.contains(char::is_whitespace) && !s.contains(['=', '[', ']', '#'])
}

impl Parser {
    fn run(mut self, text: &str) -> Result<Scenario> {
        let mut section = Section::None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| line_err(line, "unterminated section header"))?;
                section = match name.trim() {
                    "levels" => Section::Levels,
                    "couplings" => Section::Couplings,
                    "target" => Section::Target,
                    "perturbers" => Section::Perturbers,
                    "drive" => Section::Drive,
                    "numerics" => Section::Numerics,
                    other => return Err(line_err(line, format!("unknown section [{other}]"))),
                };
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| line_err(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match section {
                Section::None => return Err(line_err(line, "entry outside of any section")),
                Section::Levels => self.level_line(line, key, value)?,
                Section::Couplings => {
                    let names: Vec<&str> = key.split_whitespace().collect();
                    if names.len() != 2 {
                        return Err(line_err(line, "coupling key must be two level labels"));
                    }
                    self.couplings
                        .push((line, names[0].into(), names[1].into(), number(line, value)?));
                }
                Section::Target => {
                    let k = match key {
                        "alpha" => "alpha",
                        "beta" => "beta",
                        "initial" => "initial",
                        other => return Err(line_err(line, format!("unknown key {other:?} in [target]"))),
                    };
                    Self::insert(&mut self.target, line, k, value)?;
                }
                Section::Perturbers => {
                    if !valid_label(key) {
                        return Err(line_err(line, format!("invalid level label {key:?}")));
                    }
                    self.perturbers.push((line, key.into(), value.into()));
                }
                Section::Drive => {
                    let k = match key {
                        "amplitude" => "amplitude",
                        "envelope" => "envelope",
                        "n_half" => "n_half",
                        "mode" => "mode",
                        "duration" => "duration",
                        other => return Err(line_err(line, format!("unknown key {other:?} in [drive]"))),
                    };
                    Self::insert(&mut self.drive, line, k, value)?;
                }
                Section::Numerics => {
                    let k = match key {
                        "tol" => "tol",
                        "grid" => "grid",
                        "max_iter" => "max_iter",
                        "detuning" => "detuning",
                        "steps_per_period" => "steps_per_period",
                        other => {
                            return Err(line_err(line, format!("unknown key {other:?} in [numerics]")))
                        }
                    };
                    Self::insert(&mut self.numerics, line, k, value)?;
                }
            }
        }
        self.finish()
    }

    fn insert(
        map: &mut HashMap<&'static str, (usize, String)>,
        line: usize,
        key: &'static str,
        value: &str,
    ) -> Result<()> {
        if map.insert(key, (line, value.to_string())).is_some() {
            return Err(line_err(line, format!("duplicate key {key:?}")));
        }
        Ok(())
    }

    fn level_line(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        if key == "reference" {
            if !valid_label(value) {
                return Err(line_err(line, format!("invalid level label {value:?}")));
            }
            if self.reference.replace((line, value.into())).is_some() {
                return Err(line_err(line, "duplicate reference level"));
            }
        } else if let Some(rest) = key.strip_prefix("pair ") {
            let names: Vec<&str> = rest.split_whitespace().collect();
            let vals: Vec<&str> = value.split_whitespace().collect();
            if names.len() != 2 || vals.len() != 3 {
                return Err(line_err(line, "expected `pair <i> <j> = <omega> <sign> <mu>`"));
            }
            let omega = number(line, vals[0])?;
            let sign = number(line, vals[1])?;
            if omega <= 0.0 {
                return Err(line_err(line, "pair frequency must be positive"));
            }
            if sign != 1.0 && sign != -1.0 {
                return Err(line_err(line, "pair sign must be +1 or -1"));
            }
            self.pairs.push(PairLine {
                line,
                upper: names[0].into(),
                lower: names[1].into(),
                omega,
                sign,
                mu: number(line, vals[2])?,
            });
        } else {
            if !valid_label(key) {
                return Err(line_err(line, format!("invalid level label {key:?}")));
            }
            self.absolute.push((line, key.into(), number(line, value)?));
        }
        Ok(())
    }

    /// Labels and absolute energies, resolving pairwise input if present.
    fn energies(&self) -> Result<(Vec<String>, Vec<f64>)> {
        if self.pairs.is_empty() {
            if let Some((line, _)) = &self.reference {
                return Err(line_err(*line, "`reference` requires `pair` lines"));
            }
            return Ok(self.absolute.iter().map(|(_, l, e)| (l.clone(), *e)).unzip());
        }
        if let Some((line, _, _)) = self.absolute.first() {
            return Err(line_err(*line, "absolute energies cannot be mixed with `pair` lines"));
        }
        let (_, reference) = self
            .reference
            .clone()
            .ok_or_else(|| field_err("levels", "pairwise input needs a `reference` level"))?;
        let mut labels = vec![reference.clone()];
        for p in &self.pairs {
            for l in [&p.upper, &p.lower] {
                if !labels.contains(l) {
                    labels.push(l.clone());
                }
            }
        }
        let mut energy: HashMap<&str, f64> = HashMap::from([(reference.as_str(), 0.0)]);
        loop {
            let mut progressed = false;
            for p in &self.pairs {
                let (a, b) = (energy.get(p.upper.as_str()), energy.get(p.lower.as_str()));
                let diff = p.sign * p.omega;
                match (a, b) {
                    (Some(&ea), Some(&eb)) => {
                        if ((ea - eb) - diff).abs() > 1e-12 * diff.abs().max(ea.abs()) {
                            return Err(line_err(p.line, "pair data inconsistent with other pairs"));
                        }
                    }
                    (None, Some(&eb)) => {
                        energy.insert(&p.upper, eb + diff);
                        progressed = true;
                    }
                    (Some(&ea), None) => {
                        energy.insert(&p.lower, ea - diff);
                        progressed = true;
                    }
                    (None, None) => {}
                }
            }
            if !progressed {
                break;
            }
        }
        let energies = labels
            .iter()
            .map(|l| {
                energy
                    .get(l.as_str())
                    .copied()
                    .ok_or_else(|| field_err("levels", format!("level {l} is not connected to the reference")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((labels, energies))
    }

    fn finish(self) -> Result<Scenario> {
        let (labels, energies) = self.energies()?;
        if labels.len() < 2 {
            return Err(field_err("levels", "at least two levels are required"));
        }
        let n = labels.len();
        let index = |line: usize, l: &str| {
            labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| line_err(line, format!("unknown level {l:?}")))
        };
        let mut moments = vec![vec![0.0; n]; n];
        let mut set = vec![vec![false; n]; n];
        let pair_couplings = self
            .pairs
            .iter()
            .map(|p| (p.line, p.upper.clone(), p.lower.clone(), p.mu));
        for (line, a, b, mu) in pair_couplings.chain(self.couplings.iter().cloned()) {
            let (i, j) = (index(line, &a)?, index(line, &b)?);
            if i == j {
                return Err(line_err(line, "a level cannot couple to itself"));
            }
            if set[i][j] {
                return Err(line_err(line, format!("coupling {a} {b} given twice")));
            }
            set[i][j] = true;
            set[j][i] = true;
            moments[i][j] = mu;
            moments[j][i] = mu;
        }
        let system =
            LevelSystem::build(&labels, &energies, &moments).map_err(|e| field_err("levels", e))?;

        let target = |k: &'static str| {
            self.target
                .get(k)
                .ok_or_else(|| field_err("target", format!("missing `{k}`")))
        };
        let (la, alpha) = target("alpha")?;
        let (lb, beta) = target("beta")?;
        let pair = TargetPair::new(&system, index(*la, alpha)?, index(*lb, beta)?)
            .map_err(|e| field_err("target", e))?;
        let initial = match self.target.get("initial") {
            None => Side::Alpha,
            Some((line, l)) => pair
                .side_of(index(*line, l)?)
                .ok_or_else(|| line_err(*line, "initial level must be alpha or beta"))?,
        };

        let mut perturbers = Vec::new();
        for (line, level, anchor) in &self.perturbers {
            let side = pair
                .side_of(index(*line, anchor)?)
                .ok_or_else(|| line_err(*line, "perturbers attach to alpha or beta"))?;
            let spec = PerturberSpec::new(&system, &pair, side, index(*line, level)?)
                .map_err(|e| line_err(*line, e.to_string()))?;
            if perturbers.iter().any(|p: &PerturberSpec| p.level == spec.level) {
                return Err(line_err(*line, format!("perturber {level} listed twice")));
            }
            perturbers.push(spec);
        }

        let drive_get = |k: &'static str| self.drive.get(k);
        let (al, amp) = drive_get("amplitude").ok_or_else(|| field_err("drive", "missing `amplitude`"))?;
        let amplitude = number(*al, amp)?;
        if amplitude < 0.0 {
            return Err(field_err("amplitude", "must be non-negative"));
        }
        let envelope = match drive_get("envelope") {
            None => EnvelopeShape::Sin2,
            Some((line, v)) => v.parse().map_err(|e: String| line_err(*line, e))?,
        };
        let n_half = match drive_get("n_half") {
            None => 1,
            Some((line, v)) => v
                .parse::<u32>()
                .map_err(|_| line_err(*line, format!("n_half must be a positive integer, got {v:?}")))?,
        };
        if n_half == 0 {
            return Err(field_err("n_half", "must be at least 1"));
        }
        let manual_duration = match drive_get("duration") {
            None => None,
            Some((line, v)) => {
                let t = number(*line, v)?;
                if t <= 0.0 {
                    return Err(field_err("duration", "must be positive"));
                }
                Some(t)
            }
        };
        let mode = match drive_get("mode").map(|(l, v)| (*l, v.as_str())) {
            None | Some((_, "optimized")) => DriveMode::Optimized,
            Some((_, "unoptimized")) => DriveMode::Unoptimized,
            Some((_, "frequency_only")) => DriveMode::FrequencyOnly,
            Some((_, "manual")) => DriveMode::Manual(
                manual_duration.ok_or_else(|| field_err("duration", "mode = manual requires a duration"))?,
            ),
            Some((line, other)) => return Err(line_err(line, format!("unknown mode {other:?}"))),
        };

        let mut numerics = Numerics::default();
        for (key, (line, v)) in &self.numerics {
            match *key {
                "tol" => {
                    numerics.tol = number(*line, v)?;
                    if numerics.tol <= 0.0 {
                        return Err(field_err("tol", "must be positive"));
                    }
                }
                "grid" => {
                    numerics.grid = v
                        .parse()
                        .ok()
                        .filter(|g: &usize| *g >= 2)
                        .ok_or_else(|| field_err("grid", "must be an integer >= 2"))?;
                }
                "max_iter" => {
                    numerics.max_iter = v
                        .parse()
                        .ok()
                        .filter(|g: &usize| *g >= 1)
                        .ok_or_else(|| field_err("max_iter", "must be a positive integer"))?;
                }
                "detuning" => numerics.detuning = v.parse().map_err(|e: String| line_err(*line, e))?,
                "steps_per_period" => {
                    numerics.steps_per_period = number(*line, v)?;
                    if numerics.steps_per_period < 1.0 {
                        return Err(field_err("steps_per_period", "must be at least 1"));
                    }
                }
                _ => unreachable!(),
            }
        }

        Ok(Scenario {
            system,
            pair,
            initial,
            perturbers,
            drive: Drive {
                amplitude,
                envelope,
                n_half,
            },
            mode,
            manual_duration,
            numerics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HF_PAIRWISE: &str = "
# HF, pairwise form
[levels]
reference = alpha
pair beta alpha = 0.017671 1 0.073
pair beta p = 0.017611 -1 0.098
[target]
alpha = alpha
beta = beta
[perturbers]
p = beta
[drive]
amplitude = 4.07606e-4
n_half = 1
";

    #[test]
    fn pairwise_levels_become_absolute() {
        let s = Scenario::parse(HF_PAIRWISE).unwrap();
        assert_eq!(s.system.labels(), ["alpha", "beta", "p"]);
        let e = s.system.energies();
        assert_eq!(e[0], 0.0);
        assert!((e[1] - 0.017671).abs() < 1e-15);
        assert!((e[2] - 0.035282).abs() < 1e-15);
        assert_eq!(s.system.moment(1, 2), 0.098);
        assert_eq!(s.mode, DriveMode::Optimized);
        assert_eq!(s.initial, Side::Alpha);
        assert_eq!(s.final_target(), 1);
    }

    #[test]
    fn manual_mode_needs_duration() {
        let text = HF_PAIRWISE.to_string() + "mode = manual\n";
        let err = Scenario::parse(&text).unwrap_err();
        assert!(matches!(err, Error::ScenarioField { field: "duration", .. }), "{err}");
        let ok = Scenario::parse(&(text + "duration = 884300\n")).unwrap();
        assert_eq!(ok.mode, DriveMode::Manual(884300.0));
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = HF_PAIRWISE.to_string() + "colour = blue\n";
        match Scenario::parse(&text).unwrap_err() {
            Error::Scenario { line, .. } => assert_eq!(line, text.lines().count()),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Scenario::parse("[wat]\n"),
            Err(Error::Scenario { line: 1, .. })
        ));
    }

    #[test]
    fn invariant_violations_name_the_field() {
        let text = HF_PAIRWISE.replace("n_half = 1", "n_half = 0");
        assert!(matches!(
            Scenario::parse(&text),
            Err(Error::ScenarioField { field: "n_half", .. })
        ));
        let text = HF_PAIRWISE.replace("p = beta", "p = alpha");
        assert!(matches!(Scenario::parse(&text), Err(Error::Scenario { .. })));
    }

    #[test]
    fn serialize_round_trip() {
        let s = Scenario::parse(&(HF_PAIRWISE.to_string() + "duration = 1.5e5\n")).unwrap();
        let again = Scenario::parse(&s.serialize()).unwrap();
        assert_eq!(s, again);
        assert_eq!(again.serialize(), s.serialize());
    }
}
