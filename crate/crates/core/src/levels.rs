//! N-level system model: stationary energies, transition moments and the
//! pairwise transition data derived from them.
//!
//! Everything is in atomic units (hbar = 1, energies in Hartree).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stationary levels of a quantum system and their dipole couplings.
///
/// Immutable once built; `build` enforces every structural invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSystem {
    labels: Vec<String>,
    energies: Vec<f64>,
    /// Row-major N x N transition-moment matrix.
    moments: Vec<f64>,
}

impl LevelSystem {
    /// Validates and builds a system from labels, energies and a square
    /// moment matrix given as rows.
    pub fn build<S: AsRef<str>>(
        labels: &[S],
        energies: &[f64],
        moments: &[Vec<f64>],
    ) -> Result<Self> {
        let n = labels.len();
        if energies.len() != n {
            return Err(Error::DimensionMismatch {
                what: "energies",
                expected: n,
                got: energies.len(),
            });
        }
        if moments.len() != n {
            return Err(Error::DimensionMismatch {
                what: "moment rows",
                expected: n,
                got: moments.len(),
            });
        }
        for row in moments {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "moment columns",
                    expected: n,
                    got: row.len(),
                });
            }
        }
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        for (i, &e) in energies.iter().enumerate() {
            if !e.is_finite() {
                return Err(Error::InvalidTarget(format!(
                    "energy of level {} is not finite",
                    labels[i]
                )));
            }
        }
        for i in 0..n {
            if moments[i][i] != 0.0 {
                return Err(Error::NonZeroDiagonal(labels[i].clone()));
            }
            for j in (i + 1)..n {
                if moments[i][j] != moments[j][i] || !moments[i][j].is_finite() {
                    return Err(Error::AsymmetricMoments(
                        labels[i].clone(),
                        labels[j].clone(),
                    ));
                }
                if moments[i][j] != 0.0 && energies[i] == energies[j] {
                    return Err(Error::CoupledDegenerate(labels[i].clone(), labels[j].clone()));
                }
            }
        }
        Ok(Self {
            labels,
            energies: energies.to_vec(),
            moments: moments.iter().flatten().copied().collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn moment(&self, i: usize, j: usize) -> f64 {
        self.moments[i * self.len() + j]
    }

    /// Moment matrix as rows.
    pub fn moment_rows(&self) -> Vec<Vec<f64>> {
        self.moments.chunks(self.len()).map(<[f64]>::to_vec).collect()
    }

    /// Resonant frequency magnitude `|E_i - E_j|`.
    pub fn omega(&self, i: usize, j: usize) -> f64 {
        (self.energies[i] - self.energies[j]).abs()
    }

    /// `sign(E_i - E_j)`. Degenerate levels (necessarily uncoupled) get an
    /// index-ordered sign so that `sign(i, j) == -sign(j, i)` always holds.
    pub fn sign(&self, i: usize, j: usize) -> f64 {
        let d = self.energies[i] - self.energies[j];
        if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else if i > j {
            1.0
        } else {
            -1.0
        }
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange(i))
        }
    }

    /// Pairwise transition data for `(i, j)` relative to the target pair.
    pub fn transition(&self, i: usize, j: usize, pair: &TargetPair) -> Result<TransitionData> {
        self.check_index(i)?;
        self.check_index(j)?;
        if i == j {
            return Err(Error::SameLevel(i));
        }
        let moment = self.moment(i, j);
        Ok(TransitionData {
            omega: self.omega(i, j),
            sign: self.sign(i, j),
            moment,
            ratio: moment / self.moment(pair.alpha, pair.beta),
        })
    }

    /// Every coupled pair `(i, j)` with `i < j`.
    pub fn coupled_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n)
            .flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.moment(i, j) != 0.0)
    }
}

/// Resonant frequency, sign, moment and moment ratio of one transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionData {
    pub omega: f64,
    pub sign: f64,
    pub moment: f64,
    /// `mu_ij / mu_alpha_beta`.
    pub ratio: f64,
}

/// The two levels between which population is to be transferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetPair {
    pub alpha: usize,
    pub beta: usize,
}

impl TargetPair {
    pub fn new(system: &LevelSystem, alpha: usize, beta: usize) -> Result<Self> {
        system.check_index(alpha)?;
        system.check_index(beta)?;
        if alpha == beta {
            return Err(Error::InvalidTarget("alpha and beta must differ".into()));
        }
        if system.moment(alpha, beta) == 0.0 {
            return Err(Error::InvalidTarget(format!(
                "levels {} and {} are not directly coupled",
                system.label(alpha),
                system.label(beta)
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn level(&self, side: Side) -> usize {
        match side {
            Side::Alpha => self.alpha,
            Side::Beta => self.beta,
        }
    }

    pub fn side_of(&self, level: usize) -> Option<Side> {
        if level == self.alpha {
            Some(Side::Alpha)
        } else if level == self.beta {
            Some(Side::Beta)
        } else {
            None
        }
    }
}

/// Which level of the target pair a perturbing level hangs off.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Alpha,
    Beta,
}

impl Side {
    pub fn other(self) -> Self {
        match self {
            Side::Alpha => Side::Beta,
            Side::Beta => Side::Alpha,
        }
    }
}

/// A perturbing level coupled to exactly one level of the target pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturberSpec {
    pub attached_to: Side,
    pub level: usize,
}

impl PerturberSpec {
    pub fn new(
        system: &LevelSystem,
        pair: &TargetPair,
        attached_to: Side,
        level: usize,
    ) -> Result<Self> {
        system.check_index(level)?;
        if level == pair.alpha || level == pair.beta {
            return Err(Error::InvalidPerturber(format!(
                "{} belongs to the target pair",
                system.label(level)
            )));
        }
        let anchor = pair.level(attached_to);
        let other = pair.level(attached_to.other());
        if system.moment(anchor, level) == 0.0 {
            return Err(Error::InvalidPerturber(format!(
                "{} is not coupled to {}",
                system.label(level),
                system.label(anchor)
            )));
        }
        if system.moment(other, level) != 0.0 {
            return Err(Error::InvalidPerturber(format!(
                "{} must not couple to {}",
                system.label(level),
                system.label(other)
            )));
        }
        Ok(Self { attached_to, level })
    }

    /// Index of the target level this perturber is attached to.
    pub fn anchor(&self, pair: &TargetPair) -> usize {
        pair.level(self.attached_to)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// HF ro-vibrational levels (v=0,j=2), (v=1,j=1), (v=2,j=2).
    pub fn hf() -> (LevelSystem, TargetPair, PerturberSpec) {
        let sys = LevelSystem::build(
            &["alpha", "beta", "p"],
            &[0.0, 0.017671, 0.017671 + 0.017611],
            &[
                vec![0.0, 0.073, 0.0],
                vec![0.073, 0.0, 0.098],
                vec![0.0, 0.098, 0.0],
            ],
        )
        .unwrap();
        let pair = TargetPair::new(&sys, 0, 1).unwrap();
        let p = PerturberSpec::new(&sys, &pair, Side::Beta, 2).unwrap();
        (sys, pair, p)
    }
}
