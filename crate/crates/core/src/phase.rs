//! Phase optimisation for pure qubit signal states measured with two outcomes.
//!
//! Each state is `a_j|0⟩ + b_j e^{iφ_j}|1⟩`. The average state's determinant
//! `Δ` fixes its spectrum, so the entropy is a closed-form increasing function
//! of `Δ`, and the phases that minimise `Δ` are exactly the all-equal ones.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{entropy_bits, SUM_TOL};
use crate::error::{Error, Result};
use crate::qfactor::{PureEnsemble, PureState, NORM_TOL};

/// Resolution of the one-free-phase scan.
pub const DEFAULT_GRID_2: usize = 360;
/// Resolution per axis of the two-free-phase scan.
pub const DEFAULT_GRID_3: usize = 72;
/// Largest ensemble for which every `{0, π}` pattern is enumerated.
pub const MAX_SIGN_ENUMERATION: usize = 20;
/// Agreement required between the all-equal configuration and the scanned minimum.
pub const OPTIMALITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PhasedQubitEnsemble {
    weights: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    phases: Vec<f64>,
}

impl PhasedQubitEnsemble {
    pub fn new(weights: Vec<f64>, a: Vec<f64>, b: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        for len in [a.len(), b.len(), phases.len()] {
            if len != n {
                return Err(Error::DimensionMismatch(n, len));
            }
        }
        if n == 0 {
            return Err(Error::InvalidDistribution("empty ensemble".into()));
        }
        if weights.iter().any(|w| !(0.0..=1.0 + SUM_TOL).contains(w)) {
            return Err(Error::InvalidDistribution("weight outside [0, 1]".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        for (j, (&aj, &bj)) in a.iter().zip(&b).enumerate() {
            if aj < 0.0 || bj < 0.0 {
                return Err(Error::InvalidState(format!("state {j} has a negative magnitude")));
            }
            if (aj * aj + bj * bj - 1.0).abs() > NORM_TOL {
                return Err(Error::InvalidState(format!("state {j} is not normalized")));
            }
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidState("non-finite phase".into()));
        }
        Ok(Self { weights, a, b, phases })
    }

    /// Magnitudes `(a_j, b_j) = (cos θ_j, sin θ_j)` from angles in `[0, π/2]`.
    pub fn from_angles(weights: Vec<f64>, angles: &[f64], phases: Vec<f64>) -> Result<Self> {
        let a = angles.iter().map(|t| t.cos().max(0.0)).collect();
        let b = angles.iter().map(|t| t.sin().max(0.0)).collect();
        Self::new(weights, a, b, phases)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Same magnitudes and weights, new phases.
    pub fn with_phases(&self, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != self.len() {
            return Err(Error::DimensionMismatch(self.len(), phases.len()));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidState("non-finite phase".into()));
        }
        Ok(Self { phases, ..self.clone() })
    }

    pub fn to_ensemble(&self) -> PureEnsemble {
        let states = (0..self.len())
            .map(|j| {
                PureState::normalized(vec![
                    Complex64::new(self.a[j], 0.0),
                    Complex64::from_polar(self.b[j], self.phases[j]),
                ])
                .expect("normalized on construction")
            })
            .collect();
        PureEnsemble::new(self.weights.clone(), states).expect("validated on construction")
    }

    fn delta_at(&self, phases: &[f64]) -> f64 {
        let n = self.len();
        let mut d = 0.0;
        for j in 0..n {
            for k in j + 1..n {
                let pp = self.weights[j] * self.weights[k];
                let cross = self.a[j] * self.b[j] * self.a[k] * self.b[k];
                let sq = self.a[j] * self.a[j] * self.b[k] * self.b[k]
                    + self.a[k] * self.a[k] * self.b[j] * self.b[j];
                d += pp * (sq - 2.0 * cross * (phases[k] - phases[j]).cos());
            }
        }
        d.clamp(0.0, 0.25)
    }
}

/// Determinant of the average state, in the real cosine form.
pub fn delta(e: &PhasedQubitEnsemble) -> f64 {
    e.delta_at(&e.phases)
}

/// Binary entropy of the spectrum `(1 ± √(1 - 4Δ)) / 2`.
pub fn entropy_from_delta(delta: f64) -> f64 {
    let root = (1.0 - 4.0 * delta).max(0.0).sqrt();
    let small = 2.0 * delta.max(0.0) / (1.0 + root);
    entropy_bits(&[1.0 - small, small])
}

pub fn entropy_closed_form(e: &PhasedQubitEnsemble) -> f64 {
    entropy_from_delta(delta(e))
}

/// `∂Δ/∂φ_i = Σ_{j≠i} 2 π_i π_j a_i b_i a_j b_j sin(φ_i - φ_j)`.
pub fn phase_gradient(e: &PhasedQubitEnsemble) -> Vec<f64> {
    let n = e.len();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    2.0 * e.weights[i] * e.weights[j] * e.a[i] * e.b[i] * e.a[j] * e.b[j]
                        * (e.phases[i] - e.phases[j]).sin()
                })
                .sum()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimalPhases {
    pub phases: Vec<f64>,
    pub delta: f64,
    pub entropy: f64,
}

/// All-zero phases with their `Δ` and entropy; the input phases are ignored.
pub fn optimal_phases(e: &PhasedQubitEnsemble) -> Result<OptimalPhases> {
    if let Some(j) = (0..e.len()).find(|&j| e.a[j] == 0.0 || e.b[j] == 0.0) {
        return Err(Error::DegenerateMagnitudes(j));
    }
    let phases = vec![0.0; e.len()];
    let delta = e.delta_at(&phases);
    Ok(OptimalPhases {
        phases,
        delta,
        entropy: entropy_from_delta(delta),
    })
}

/// Minimum of `Δ` over the grid `φ_0 = 0`, `φ_j ∈ {2πk/res}` for `j ≥ 1`.
pub fn grid_min_delta(e: &PhasedQubitEnsemble, res: usize) -> Result<f64> {
    let free = e.len().saturating_sub(1) as u32;
    let total = res
        .checked_pow(free)
        .filter(|&t| t > 0 && t <= 50_000_000)
        .ok_or_else(|| Error::InvalidState(format!("grid of {res}^{free} points is too large")))?;
    let step = TAU / res as f64;
    let min = (0..total)
        .into_par_iter()
        .map_init(
            || vec![0.0; e.len()],
            |phases, mut idx| {
                for p in phases.iter_mut().skip(1) {
                    *p = (idx % res) as f64 * step;
                    idx /= res;
                }
                e.delta_at(phases)
            },
        )
        .reduce(|| f64::INFINITY, f64::min);
    Ok(min)
}

/// Every `{0, π}` assignment with `φ_0 = 0`; returns `(phases, Δ)` per pattern.
pub fn sign_patterns(e: &PhasedQubitEnsemble) -> Result<Vec<(Vec<f64>, f64)>> {
    if e.len() > MAX_SIGN_ENUMERATION {
        return Err(Error::InvalidState(format!(
            "sign enumeration supports at most {MAX_SIGN_ENUMERATION} states"
        )));
    }
    let n = e.len();
    let count = 1usize << n.saturating_sub(1);
    Ok((0..count)
        .map(|mask| {
            let phases: Vec<f64> = (0..n)
                .map(|j| if j > 0 && mask >> (j - 1) & 1 == 1 { PI } else { 0.0 })
                .collect();
            let d = e.delta_at(&phases);
            (phases, d)
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseReport {
    pub phases: Vec<f64>,
    pub delta: f64,
    pub entropy: f64,
    pub grid_min_entropy: f64,
    /// Points per free phase; 2 for the `{0, π}` enumeration.
    pub grid_resolution: usize,
    pub method: String,
    pub pass: bool,
}

/// Checks that the all-equal phases attain the scanned minimum entropy.
///
/// Up to three states the full phase grid is scanned (`resolution` points per
/// free phase, or the defaults); larger ensembles use the `{0, π}` extrema.
pub fn phase_scan(e: &PhasedQubitEnsemble, resolution: Option<usize>) -> Result<PhaseReport> {
    let best = optimal_phases(e)?;
    let (grid_min_delta, grid_resolution, method) = if e.len() <= 3 {
        let res = resolution.unwrap_or(if e.len() == 3 { DEFAULT_GRID_3 } else { DEFAULT_GRID_2 });
        if res == 0 {
            return Err(Error::InvalidState("grid resolution must be positive".into()));
        }
        (grid_min_delta(e, res)?, res, "grid")
    } else {
        let min = sign_patterns(e)?
            .into_iter()
            .map(|(_, d)| d)
            .fold(f64::INFINITY, f64::min);
        (min, 2, "sign-enumeration")
    };
    let grid_min_entropy = entropy_from_delta(grid_min_delta);
    Ok(PhaseReport {
        pass: best.entropy <= grid_min_entropy + OPTIMALITY_TOL,
        phases: best.phases,
        delta: best.delta,
        entropy: best.entropy,
        grid_min_entropy,
        grid_resolution,
        method: method.to_string(),
    })
}
