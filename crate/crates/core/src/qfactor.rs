//! Quantum factorizations of classical channels.
//!
//! A Q-factorization replaces the classical intermediate variable with a
//! signal state per causal class and a POVM whose outcome statistics
//! `tr(E_y ρ)` reproduce the channel. This module provides the state types,
//! the canonical square-root-amplitude construction (G0), verification,
//! entropy and fidelity functionals, ensemble merging, and the
//! pairwise-overlap (OPWO) structure used in the entropy-monotonicity results.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    causal_partition, classical_fidelity, entropy_bits, pushforward, shannon_entropy, Channel,
    Distribution, Label, Partition, DEFAULT_ROW_TOL, SUM_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{clamped_spectrum, eig_hermitian, psd_sqrt, ComplexMatrix, NEG_CLAMP};
use crate::sampling;

/// Norm tolerance for pure states.
pub const NORM_TOL: f64 = 1e-10;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-9;
/// Default overlap threshold for the OPWO graph.
pub const DEFAULT_OVERLAP_TOL: f64 = 1e-9;
/// Slack below which the fidelity bound counts as saturated.
pub const SATURATION_TOL: f64 = 1e-9;

const PURE_DETECT_TOL: f64 = 1e-12;
// Hilbert-space dimension cap for sampled alternative factorizations.
const MAX_SEARCH_DIM: usize = 16;

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Unit vector in `C^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: Vec<Complex64>,
}

impl PureState {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidState("zero-dimensional state".into()));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self { amps })
    }

    /// Scales `amps` to unit norm.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if amps.is_empty() || norm == 0.0 {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amps: amps.into_iter().map(|z| z / norm).collect(),
        })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Computational basis vector `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = vec![czero(); dim];
        amps[k] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amps)
    }
}

/// Hermitian, PSD, trace-one matrix, optionally carrying the pure state it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    pure: Option<PureState>,
}

impl DensityMatrix {
    /// Validates `matrix`. Rank-one inputs get a pure-state witness attached.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let defect = matrix.hermitian_defect();
        if defect > 1e-10 {
            return Err(Error::NotHermitian(defect));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let eig = eig_hermitian(&matrix)?;
        let lowest = *eig.values.last().unwrap();
        if lowest < -NEG_CLAMP {
            return Err(Error::NotPsd(lowest));
        }
        let pure = if (eig.values[0] - 1.0).abs() <= PURE_DETECT_TOL {
            PureState::normalized(eig.vectors.column(0)).ok()
        } else {
            None
        };
        Ok(Self { matrix, pure })
    }

    pub fn from_pure(state: &PureState) -> Self {
        Self {
            matrix: state.projector(),
            pure: Some(state.clone()),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
            pure: if dim == 1 { Some(PureState::basis(1, 0)) } else { None },
        }
    }

    /// Diagonal state with the given spectrum.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_diag(probs))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn pure_witness(&self) -> Option<&PureState> {
        self.pure.as_ref()
    }

    /// Descending eigenvalues with round-off clamped to zero.
    pub fn spectrum(&self) -> Vec<f64> {
        let eig = eig_hermitian(&self.matrix).expect("density matrices are Hermitian");
        clamped_spectrum(&eig).expect("density matrices are PSD")
    }
}

/// Probability-weighted collection of states of one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    weights: Vec<f64>,
    states: Vec<DensityMatrix>,
}

impl Ensemble {
    pub fn new(weights: Vec<f64>, states: Vec<DensityMatrix>) -> Result<Self> {
        if weights.len() != states.len() {
            return Err(Error::DimensionMismatch(weights.len(), states.len()));
        }
        if states.is_empty() {
            return Err(Error::InvalidDistribution("empty ensemble".into()));
        }
        let dim = states[0].dim();
        if let Some(s) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch(dim, s.dim()));
        }
        if weights.iter().any(|w| !(0.0..=1.0 + SUM_TOL).contains(w)) {
            return Err(Error::InvalidDistribution("weight outside [0, 1]".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(Self { weights, states })
    }

    pub fn from_pure(weights: Vec<f64>, states: &[PureState]) -> Result<Self> {
        Self::new(weights, states.iter().map(DensityMatrix::from_pure).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }
}

/// Ensemble of pure states, kept as amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct PureEnsemble {
    weights: Vec<f64>,
    states: Vec<PureState>,
}

impl PureEnsemble {
    pub fn new(weights: Vec<f64>, states: Vec<PureState>) -> Result<Self> {
        // Reuse the mixed-ensemble validation.
        Ensemble::from_pure(weights.clone(), &states)?;
        Ok(Self { weights, states })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn to_ensemble(&self) -> Ensemble {
        Ensemble::from_pure(self.weights.clone(), &self.states).expect("validated on construction")
    }
}

/// `ρ = Σ_i p_i ρ_i`.
pub fn average_state(e: &Ensemble) -> DensityMatrix {
    let mut support = e.weights.iter().enumerate().filter(|(_, &w)| w > 0.0);
    if let (Some((only, _)), None) = (support.next(), support.next()) {
        return e.states[only].clone();
    }
    let mut acc = ComplexMatrix::zeros(e.dim());
    for (w, s) in e.weights.iter().zip(&e.states) {
        acc = &acc + &s.matrix.scale(*w);
    }
    DensityMatrix { matrix: acc, pure: None }
}

/// `S(ρ) = -tr(ρ log₂ ρ)` in bits (qubits).
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    if rho.pure.is_some() {
        return 0.0;
    }
    let s = entropy_bits(&rho.spectrum());
    s.clamp(0.0, (rho.dim() as f64).log2())
}

/// Uhlmann fidelity `tr √(√σ1 σ2 √σ1)`.
///
/// When either argument is pure the value is `√⟨ψ|σ|ψ⟩`, evaluated directly.
pub fn quantum_fidelity(s1: &DensityMatrix, s2: &DensityMatrix) -> Result<f64> {
    if s1.dim() != s2.dim() {
        return Err(Error::DimensionMismatch(s1.dim(), s2.dim()));
    }
    let f = match (&s1.pure, &s2.pure) {
        (Some(a), Some(b)) => a.inner(b).norm(),
        (Some(a), None) => s2.matrix.expectation(a.amplitudes()).re.max(0.0).sqrt(),
        (None, Some(b)) => s1.matrix.expectation(b.amplitudes()).re.max(0.0).sqrt(),
        (None, None) => uhlmann_fidelity(&s1.matrix, &s2.matrix)?,
    };
    Ok(f.clamp(0.0, 1.0))
}

/// Nested-square-root form of the fidelity, with no pure-state shortcut.
pub fn uhlmann_fidelity(s1: &ComplexMatrix, s2: &ComplexMatrix) -> Result<f64> {
    if s1.dim() != s2.dim() {
        return Err(Error::DimensionMismatch(s1.dim(), s2.dim()));
    }
    let r = psd_sqrt(s1)?;
    let inner = &(&r * s2) * &r;
    let herm = (&inner + &inner.adjoint()).scale(0.5);
    let eig = eig_hermitian(&herm)?;
    Ok(clamped_spectrum(&eig)?.iter().fold(0.0, |acc, l| acc + l.sqrt()))
}

/// The two ensembles obtained by reassigning one state's weight to the other.
#[derive(Clone, Debug)]
pub struct Merged {
    /// State `j` removed, its weight added to `k`.
    pub j_into_k: Ensemble,
    /// State `k` removed, its weight added to `j`.
    pub k_into_j: Ensemble,
}

pub fn merge(e: &Ensemble, j: usize, k: usize) -> Result<Merged> {
    for idx in [j, k] {
        if idx >= e.len() {
            return Err(Error::IndexOutOfRange { index: idx, len: e.len() });
        }
    }
    if j == k {
        return Err(Error::IndexOutOfRange { index: k, len: e.len() });
    }
    let moved = |from: usize, to: usize| {
        let mut weights = Vec::with_capacity(e.len() - 1);
        let mut states = Vec::with_capacity(e.len() - 1);
        for i in (0..e.len()).filter(|&i| i != from) {
            let w = if i == to { e.weights[from] + e.weights[to] } else { e.weights[i] };
            weights.push(w);
            states.push(e.states[i].clone());
        }
        Ensemble { weights, states }
    };
    Ok(Merged {
        j_into_k: moved(j, k),
        k_into_j: moved(k, j),
    })
}

/// Positive operator valued measure, one element per output symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    /// Validated POVM (Hermitian PSD elements summing to identity within 1e-9).
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let povm = Self::unchecked(elements)?;
        if let Some(issue) = povm.issues(1e-9).into_iter().next() {
            return Err(Error::InvalidPovm(issue));
        }
        Ok(povm)
    }

    /// Only checks that the elements share a dimension; see [`Povm::issues`].
    pub fn unchecked(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidPovm("no elements".into()))?
            .dim();
        if let Some(m) = elements.iter().find(|m| m.dim() != first) {
            return Err(Error::DimensionMismatch(first, m.dim()));
        }
        Ok(Self { elements })
    }

    /// Rank-one projectors onto the computational basis.
    pub fn computational(dim: usize) -> Self {
        Self {
            elements: (0..dim).map(|k| PureState::basis(dim, k).projector()).collect(),
        }
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Problems found at tolerance `tol`; empty means valid.
    pub fn issues(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        let mut sum = ComplexMatrix::zeros(self.dim());
        for (y, e) in self.elements.iter().enumerate() {
            let defect = e.hermitian_defect();
            if defect > tol {
                out.push(format!("element {y} not Hermitian ({defect:e})"));
                continue;
            }
            match eig_hermitian(e) {
                Ok(eig) => {
                    let low = *eig.values.last().unwrap();
                    if low < -tol {
                        out.push(format!("element {y} has eigenvalue {low:e}"));
                    }
                }
                Err(err) => out.push(format!("element {y}: {err}")),
            }
            sum = &sum + e;
        }
        let gap = (&sum - &ComplexMatrix::identity(self.dim())).max_abs();
        if gap > tol {
            out.push(format!("elements sum to identity only within {gap:e}"));
        }
        out
    }

    /// Outcome distribution `tr(E_y ρ)`.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| match rho.pure_witness() {
                Some(psi) => e.expectation(psi.amplitudes()).re,
                None => (e * rho.matrix()).trace().re,
            })
            .collect()
    }
}

/// Signal state per class of `partition` (in class order) plus a POVM.
#[derive(Clone, Debug, PartialEq)]
pub struct QFactorization {
    pub partition: Partition,
    pub states: Vec<DensityMatrix>,
    pub povm: Povm,
}

impl QFactorization {
    pub fn cardinality(&self) -> usize {
        self.states.len()
    }

    /// Signal state assigned to input `x`.
    pub fn signal(&self, x: usize) -> &DensityMatrix {
        &self.states[self.partition.class_of(x)]
    }
}

/// Signal amplitudes `√P(y|z)` in the measurement basis.
pub fn g0_amplitudes(row: &[f64]) -> PureState {
    PureState::from_real(&row.iter().map(|p| p.sqrt()).collect::<Vec<_>>())
        .unwrap_or_else(|_| {
            PureState::normalized(row.iter().map(|p| Complex64::new(p.sqrt(), 0.0)).collect())
                .expect("stochastic row is nonzero")
        })
}

/// Canonical Q-factorization: causal partition, one pure state per class with
/// amplitudes `√P(y_j|z_i)` on basis vector `|y_j⟩`, computational-basis measurement.
pub fn g0_construct(c: &Channel) -> QFactorization {
    g0_construct_with_tol(c, DEFAULT_ROW_TOL)
}

/// [`g0_construct`] with an explicit row-equality tolerance.
pub fn g0_construct_with_tol(c: &Channel, tol: f64) -> QFactorization {
    g0_with_partition(c, causal_partition(c, tol)).expect("the causal partition refines itself")
}

/// Square-root-amplitude construction over a given partition, which must
/// refine the causal partition (every class shares one output row).
pub fn g0_for_partition(c: &Channel, partition: Partition) -> Result<QFactorization> {
    if partition.n_elements() != c.n_inputs() {
        return Err(Error::AlphabetMismatch(partition.n_elements(), c.n_inputs()));
    }
    if !partition.refines(&causal_partition(c, DEFAULT_ROW_TOL)) {
        return Err(Error::InvalidPartition(
            "a class mixes inputs with different output distributions".into(),
        ));
    }
    g0_with_partition(c, partition)
}

fn g0_with_partition(c: &Channel, partition: Partition) -> Result<QFactorization> {
    let states = (0..partition.len())
        .map(|k| DensityMatrix::from_pure(&g0_amplitudes(c.row(partition.representative(k)))))
        .collect();
    Ok(QFactorization {
        partition,
        states,
        povm: Povm::computational(c.n_outputs()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbabilityViolation {
    pub input: usize,
    pub output: usize,
    pub expected: f64,
    pub actual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QVerifyReport {
    pub valid: bool,
    pub issues: Vec<String>,
    pub violations: Vec<ProbabilityViolation>,
}

/// Checks POVM validity and `P(y|x) = tr(E_y g(x))` for all `(x, y)` within `tol`.
pub fn verify_qfactorization(c: &Channel, q: &QFactorization, tol: f64) -> QVerifyReport {
    let mut issues = Vec::new();
    if q.partition.n_elements() != c.n_inputs() {
        issues.push(format!(
            "partition covers {} inputs, channel has {}",
            q.partition.n_elements(),
            c.n_inputs()
        ));
    }
    if q.states.len() != q.partition.len() {
        issues.push(format!(
            "{} signal states for {} classes",
            q.states.len(),
            q.partition.len()
        ));
    }
    if q.povm.len() != c.n_outputs() {
        issues.push(format!(
            "{} POVM elements for {} outputs",
            q.povm.len(),
            c.n_outputs()
        ));
    }
    if let Some(s) = q.states.iter().find(|s| s.dim() != q.povm.dim()) {
        issues.push(format!(
            "signal state of dimension {} measured by POVM of dimension {}",
            s.dim(),
            q.povm.dim()
        ));
    }
    issues.extend(q.povm.issues(tol));

    let mut violations = Vec::new();
    if issues.is_empty() {
        let probs: Vec<Vec<f64>> = q.states.iter().map(|s| q.povm.probabilities(s)).collect();
        for x in 0..c.n_inputs() {
            let row = &probs[q.partition.class_of(x)];
            for (y, (&expected, &actual)) in c.row(x).iter().zip(row).enumerate() {
                if (expected - actual).abs() > tol {
                    violations.push(ProbabilityViolation {
                        input: x,
                        output: y,
                        expected,
                        actual,
                    });
                }
            }
        }
    }
    QVerifyReport {
        valid: issues.is_empty() && violations.is_empty(),
        issues,
        violations,
    }
}

/// Signal ensemble induced by an input distribution: class weights from the
/// pushforward, one state per class.
pub fn signal_ensemble(q: &QFactorization, d: &Distribution) -> Result<Ensemble> {
    let z = pushforward(d, &q.partition)?;
    Ensemble::new(z.probs().to_vec(), q.states.clone())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairFidelity {
    pub i: usize,
    pub j: usize,
    pub quantum: f64,
    pub classical: f64,
    /// `classical - quantum`; nonnegative up to round-off when the bound holds.
    pub slack: f64,
    pub saturated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityReport {
    pub pairs: Vec<PairFidelity>,
    pub bound_holds: bool,
    pub all_saturated: bool,
}

/// Compares signal-state fidelities with the Bhattacharyya coefficients of
/// the corresponding class rows, for every pair of classes.
pub fn fidelity_bound_check(c: &Channel, q: &QFactorization) -> Result<FidelityReport> {
    let n = q.states.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let quantum = quantum_fidelity(&q.states[i], &q.states[j])?;
            let classical = classical_fidelity(
                c.row(q.partition.representative(i)),
                c.row(q.partition.representative(j)),
            )?;
            let slack = classical - quantum;
            pairs.push(PairFidelity {
                i,
                j,
                quantum,
                classical,
                slack,
                saturated: slack.abs() < SATURATION_TOL,
            });
        }
    }
    Ok(FidelityReport {
        bound_holds: pairs.iter().all(|p| p.quantum <= p.classical + SATURATION_TOL),
        all_saturated: pairs.iter().all(|p| p.saturated),
        pairs,
    })
}

/// Input, class and signal entropies for one input distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Advantage {
    pub h_x: f64,
    pub h_z: f64,
    pub s_rho: f64,
    /// `H(Z) - S(ρ)`.
    pub advantage: f64,
}

pub fn advantage(q: &QFactorization, d: &Distribution) -> Result<Advantage> {
    let h_x = shannon_entropy(d);
    let h_z = shannon_entropy(&pushforward(d, &q.partition)?);
    let s_rho = von_neumann_entropy(&average_state(&signal_ensemble(q, d)?));
    Ok(Advantage {
        h_x,
        h_z,
        s_rho,
        advantage: h_z - s_rho,
    })
}

/// `H(Z) - S(ρ)` for the RBSC with `P(Z=0) = alpha`, where `Z` is input parity
/// and the signal states are the square-root-amplitude states of the two rows.
///
/// The parity grouping is kept at `p = 1/2` too, where it is finer than the
/// causal partition.
pub fn rbsc_advantage(p: f64, alpha: f64) -> f64 {
    let c = Channel::rbsc(p);
    let parity = Partition::from_classes(4, vec![vec![0, 2], vec![1, 3]]).expect("valid classes");
    let q = g0_for_partition(&c, parity).expect("parity classes share rows");
    let d = Distribution::new(vec![alpha / 2.0, (1.0 - alpha) / 2.0, alpha / 2.0, (1.0 - alpha) / 2.0])
        .expect("alpha in [0, 1]");
    advantage(&q, &d).expect("distribution matches channel").advantage
}

/// `G_ij = √(π_i π_j) ⟨ψ_i|ψ_j⟩`; shares its nonzero spectrum with the average state.
pub fn gram_matrix(e: &PureEnsemble) -> ComplexMatrix {
    let n = e.states.len();
    let mut g = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = e.states[i].inner(&e.states[j]) * (e.weights[i] * e.weights[j]).sqrt();
        }
    }
    g
}

/// Neighbours of each state in the overlap graph (edge when `|⟨ψ_i|ψ_j⟩| > tol`).
pub fn overlap_graph(e: &PureEnsemble, tol: f64) -> Vec<Vec<usize>> {
    let n = e.states.len();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && e.states[i].inner(&e.states[j]).norm() > tol)
                .collect()
        })
        .collect()
}

/// Only pairwise overlapping: every state overlaps at most one other.
pub fn is_opwo(e: &PureEnsemble, tol: f64) -> bool {
    overlap_graph(e, tol).iter().all(|nbrs| nbrs.len() <= 1)
}

/// Ordering that places each overlapping pair next to each other; for an
/// OPWO ensemble the permuted Gram matrix is block diagonal with blocks of
/// size one or two.
pub fn opwo_order(e: &PureEnsemble, tol: f64) -> Vec<usize> {
    let graph = overlap_graph(e, tol);
    let mut seen = vec![false; graph.len()];
    let mut order = Vec::with_capacity(graph.len());
    for i in 0..graph.len() {
        if seen[i] {
            continue;
        }
        seen[i] = true;
        order.push(i);
        for &j in &graph[i] {
            if !seen[j] {
                seen[j] = true;
                order.push(j);
            }
        }
    }
    order
}

/// Result of the randomized entropic-optimality probe for two-class channels.
///
/// This is numerical evidence: a finite sample of alternative factorizations
/// is compared with G0; it does not prove optimality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptimalitySearch {
    pub g0_entropy: f64,
    pub min_alternative_entropy: f64,
    pub samples: usize,
    /// Samples whose entropy fell below `g0_entropy - 1e-9`.
    pub below_g0: usize,
    /// Samples that failed to reproduce the channel (should be zero).
    pub invalid: usize,
    pub evidence_only: bool,
}

/// Samples pure-rebit Q-factorizations of a two-class channel and compares
/// their signal entropy with G0's.
///
/// Each output `y` gets a block of dimension 1 or 2; the POVM element for `y`
/// is the projector onto its block and each signal state's block-`y`
/// component is `√P(y|z)` times a random real unit vector. Every sample
/// therefore reproduces the channel while realising a different overlap.
pub fn two_class_search(
    c: &Channel,
    d: &Distribution,
    samples: usize,
    seed: u64,
) -> Result<OptimalitySearch> {
    let g0 = g0_construct(c);
    if g0.cardinality() != 2 {
        return Err(Error::InvalidPartition(format!(
            "two causal classes required, found {}",
            g0.cardinality()
        )));
    }
    if c.n_outputs() > MAX_SEARCH_DIM {
        return Err(Error::InvalidChannel(format!(
            "search supports at most {MAX_SEARCH_DIM} outputs"
        )));
    }
    let weights = pushforward(d, &g0.partition)?;
    let g0_entropy = von_neumann_entropy(&average_state(&signal_ensemble(&g0, d)?));
    let rows = [
        c.row(g0.partition.representative(0)).to_vec(),
        c.row(g0.partition.representative(1)).to_vec(),
    ];

    let results: Vec<Option<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = sampling::rng(seed, s as u64);
            let q = block_rebit_factorization(&mut rng, &g0.partition, &rows);
            if !verify_qfactorization(c, &q, 1e-9).valid {
                return None;
            }
            let e = Ensemble::new(weights.probs().to_vec(), q.states).ok()?;
            Some(von_neumann_entropy(&average_state(&e)))
        })
        .collect();

    let invalid = results.iter().filter(|r| r.is_none()).count();
    let entropies: Vec<f64> = results.into_iter().flatten().collect();
    Ok(OptimalitySearch {
        g0_entropy,
        min_alternative_entropy: entropies.iter().copied().fold(f64::INFINITY, f64::min),
        samples,
        below_g0: entropies.iter().filter(|&&s| s < g0_entropy - 1e-9).count(),
        invalid,
        evidence_only: true,
    })
}

fn block_rebit_factorization<R: rand::Rng + ?Sized>(
    rng: &mut R,
    partition: &Partition,
    rows: &[Vec<f64>],
) -> QFactorization {
    let n_out = rows[0].len();
    let mut sizes: Vec<usize> = (0..n_out).map(|_| rng.random_range(1..=2)).collect();
    while sizes.iter().sum::<usize>() > MAX_SEARCH_DIM {
        let k = sizes.iter().position(|&s| s > 1).expect("n_out is within the cap");
        sizes[k] = 1;
    }
    let dim: usize = sizes.iter().sum();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();

    let states = rows
        .iter()
        .map(|row| {
            let mut amps = vec![czero(); dim];
            for y in 0..n_out {
                let u = sampling::random_real_unit_vector(rng, sizes[y]);
                for (k, uk) in u.iter().enumerate() {
                    amps[offsets[y] + k] = Complex64::new(row[y].sqrt() * uk, 0.0);
                }
            }
            DensityMatrix::from_pure(&PureState::normalized(amps).expect("nonzero"))
        })
        .collect();
    let elements = (0..n_out)
        .map(|y| {
            let mut e = ComplexMatrix::zeros(dim);
            for k in 0..sizes[y] {
                e[(offsets[y] + k, offsets[y] + k)] = Complex64::new(1.0, 0.0);
            }
            e
        })
        .collect();
    QFactorization {
        partition: partition.clone(),
        states,
        povm: Povm { elements },
    }
}

/// Dense matrix in the JSON exchange format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        Self {
            dim: m.dim(),
            re: m.real_part(),
            im: m.imag_part(),
        }
    }
}

impl TryFrom<&MatrixJson> for ComplexMatrix {
    type Error = Error;
    fn try_from(j: &MatrixJson) -> Result<Self> {
        let m = ComplexMatrix::from_parts(&j.re, &j.im)?;
        if m.dim() != j.dim {
            return Err(Error::DimensionMismatch(j.dim, m.dim()));
        }
        Ok(m)
    }
}

/// Q-factorization in the JSON exchange format; partition classes are given
/// by input label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QFactorizationJson {
    pub partition: Vec<Vec<Label>>,
    pub states: Vec<MatrixJson>,
    pub povm: Vec<MatrixJson>,
}

impl QFactorizationJson {
    pub fn new(q: &QFactorization, c: &Channel) -> Self {
        Self {
            partition: q
                .partition
                .classes()
                .iter()
                .map(|class| class.iter().map(|&x| c.inputs()[x].clone()).collect())
                .collect(),
            states: q.states.iter().map(|s| MatrixJson::from(s.matrix())).collect(),
            povm: q.povm.elements().iter().map(MatrixJson::from).collect(),
        }
    }

    /// Rebuilds the factorization against `c`'s input labels.
    pub fn resolve(&self, c: &Channel) -> Result<QFactorization> {
        let classes = self
            .partition
            .iter()
            .map(|class| {
                class
                    .iter()
                    .map(|label| {
                        c.inputs().iter().position(|l| l == label).ok_or_else(|| {
                            Error::InvalidPartition(format!("unknown input label {label}"))
                        })
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        // States are listed in the order classes were given; keep that pairing
        // through canonicalisation.
        let states_by_min: Vec<(usize, DensityMatrix)> = classes
            .iter()
            .zip(&self.states)
            .map(|(class, m)| {
                let min = class.iter().copied().min().unwrap_or(usize::MAX);
                Ok((min, DensityMatrix::new(ComplexMatrix::try_from(m)?)?))
            })
            .collect::<Result<_>>()?;
        if self.states.len() != classes.len() {
            return Err(Error::InvalidPartition(format!(
                "{} states for {} classes",
                self.states.len(),
                classes.len()
            )));
        }
        let partition = Partition::from_classes(c.n_inputs(), classes)?;
        let mut states_by_min = states_by_min;
        states_by_min.sort_by_key(|(min, _)| *min);
        let povm = Povm::unchecked(
            self.povm
                .iter()
                .map(ComplexMatrix::try_from)
                .collect::<Result<Vec<_>>>()?,
        )?;
        Ok(QFactorization {
            partition,
            states: states_by_min.into_iter().map(|(_, s)| s).collect(),
            povm,
        })
    }
}
