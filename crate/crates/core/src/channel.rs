//! Classical channels, partitions of the input alphabet and classical
//! factorizations `X -> Z -> Y` with a deterministic first stage.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row sums and distribution totals must be within this of 1.
pub const SUM_TOL: f64 = 1e-9;
/// Default max-norm tolerance for deciding two rows are the same distribution.
pub const DEFAULT_ROW_TOL: f64 = 1e-9;

/// Alphabet symbol as it appears in JSON: a string or an integer.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Int(i64),
    Text(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Int(i) => write!(f, "{i}"),
            Label::Text(s) => f.write_str(s),
        }
    }
}

impl From<usize> for Label {
    fn from(i: usize) -> Self {
        Label::Int(i as i64)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::Text(s.to_owned())
    }
}

fn index_labels(n: usize) -> Vec<Label> {
    (0..n).map(Label::from).collect()
}

#[derive(Serialize, Deserialize)]
struct ChannelJson {
    inputs: Vec<Label>,
    outputs: Vec<Label>,
    rows: Vec<Vec<f64>>,
}

/// Row-stochastic conditional distribution `P(Y|X)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson", into = "ChannelJson")]
pub struct Channel {
    inputs: Vec<Label>,
    outputs: Vec<Label>,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<ChannelJson> for Channel {
    type Error = Error;
    fn try_from(j: ChannelJson) -> Result<Self> {
        Channel::new(j.inputs, j.outputs, j.rows)
    }
}

impl From<Channel> for ChannelJson {
    fn from(c: Channel) -> Self {
        ChannelJson {
            inputs: c.inputs,
            outputs: c.outputs,
            rows: c.rows,
        }
    }
}

impl Channel {
    pub fn new(inputs: Vec<Label>, outputs: Vec<Label>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.is_empty() || outputs.is_empty() {
            return Err(Error::InvalidChannel("alphabets must be nonempty".into()));
        }
        if rows.len() != inputs.len() {
            return Err(Error::InvalidChannel(format!(
                "{} rows for {} inputs",
                rows.len(),
                inputs.len()
            )));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.len() != outputs.len() {
                return Err(Error::InvalidChannel(format!(
                    "row {x} has {} entries for {} outputs",
                    row.len(),
                    outputs.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidChannel(format!(
                    "row {x} has entry {p} outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidChannel(format!("row {x} sums to {sum}")));
            }
        }
        Ok(Self {
            inputs,
            outputs,
            rows,
        })
    }

    /// Channel with inputs and outputs labelled `0, 1, ...`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_in = rows.len();
        let n_out = rows.first().map_or(0, Vec::len);
        Self::new(index_labels(n_in), index_labels(n_out), rows)
    }

    /// Redundant binary symmetric channel: four inputs, two outputs, with
    /// inputs 0 and 2 sharing the row `(1-p, p)` and inputs 1 and 3 sharing `(p, 1-p)`.
    pub fn rbsc(p: f64) -> Self {
        let a = vec![1.0 - p, p];
        let b = vec![p, 1.0 - p];
        Self::from_rows(vec![a.clone(), b.clone(), a, b]).expect("p must lie in [0, 1]")
    }

    pub fn inputs(&self) -> &[Label] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Label] {
        &self.outputs
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }
}

fn max_row_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

/// Disjoint cover of `{0, .., n-1}`.
///
/// Classes are kept in canonical form: members ascending, classes ordered by
/// their lowest member, which is also the class representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    classes: Vec<Vec<usize>>,
    class_of: Vec<usize>,
}

impl Partition {
    pub fn from_classes(n: usize, mut classes: Vec<Vec<usize>>) -> Result<Self> {
        let mut class_of = vec![usize::MAX; n];
        for class in classes.iter_mut() {
            if class.is_empty() {
                return Err(Error::InvalidPartition("empty class".into()));
            }
            class.sort_unstable();
        }
        classes.sort_by_key(|c| c[0]);
        for (k, class) in classes.iter().enumerate() {
            for &x in class {
                if x >= n {
                    return Err(Error::InvalidPartition(format!(
                        "element {x} outside alphabet of size {n}"
                    )));
                }
                if class_of[x] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("element {x} appears twice")));
                }
                class_of[x] = k;
            }
        }
        if let Some(x) = class_of.iter().position(|&k| k == usize::MAX) {
            return Err(Error::InvalidPartition(format!("element {x} not covered")));
        }
        Ok(Self { classes, class_of })
    }

    /// Partition induced by a labelling `f`: `x ~ x'` iff `f[x] == f[x']`.
    pub fn from_assignment<T: PartialEq>(f: &[T]) -> Self {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_of = Vec::with_capacity(f.len());
        for (x, fx) in f.iter().enumerate() {
            match classes.iter().position(|c| f[c[0]] == *fx) {
                Some(k) => {
                    classes[k].push(x);
                    class_of.push(k);
                }
                None => {
                    class_of.push(classes.len());
                    classes.push(vec![x]);
                }
            }
        }
        Self { classes, class_of }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            classes: (0..n).map(|x| vec![x]).collect(),
            class_of: (0..n).collect(),
        }
    }

    pub fn classes(&self) -> &[Vec<usize>] {
        &self.classes
    }

    pub fn class_of(&self, x: usize) -> usize {
        self.class_of[x]
    }

    pub fn representative(&self, k: usize) -> usize {
        self.classes[k][0]
    }

    /// Number of classes.
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Size of the underlying alphabet.
    pub fn n_elements(&self) -> usize {
        self.class_of.len()
    }

    /// True when every class of `self` lies inside a class of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.n_elements() == coarser.n_elements()
            && self.classes.iter().all(|class| {
                let k = coarser.class_of(class[0]);
                class.iter().all(|&x| coarser.class_of(x) == k)
            })
    }
}

/// Groups inputs whose output distributions agree within `tol` (max-norm).
///
/// Inputs are scanned in order and joined to the first existing class whose
/// representative row matches, so the result is deterministic even when
/// approximate equality fails to be transitive.
pub fn causal_partition(c: &Channel, tol: f64) -> Partition {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut class_of = Vec::with_capacity(c.n_inputs());
    for x in 0..c.n_inputs() {
        let hit = classes
            .iter()
            .position(|class| max_row_gap(c.row(class[0]), c.row(x)) <= tol);
        match hit {
            Some(k) => {
                classes[k].push(x);
                class_of.push(k);
            }
            None => {
                class_of.push(classes.len());
                classes.push(vec![x]);
            }
        }
    }
    Partition { classes, class_of }
}

/// Deterministic map `f: A_X -> A_Z` (as a partition) with its second stage `P(Y|Z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factorization {
    pub partition: Partition,
    pub reduced: Channel,
}

impl Factorization {
    /// Reads the second stage off the class representatives. Whether the result
    /// actually reproduces `c` is for [`verify_factorization`] to decide.
    pub fn from_partition(c: &Channel, partition: Partition) -> Result<Self> {
        if partition.n_elements() != c.n_inputs() {
            return Err(Error::InvalidPartition(format!(
                "partition of {} elements for a channel with {} inputs",
                partition.n_elements(),
                c.n_inputs()
            )));
        }
        let reps: Vec<usize> = (0..partition.len()).map(|k| partition.representative(k)).collect();
        let reduced = Channel {
            inputs: reps.iter().map(|&x| c.inputs[x].clone()).collect(),
            outputs: c.outputs.clone(),
            rows: reps.iter().map(|&x| c.rows[x].clone()).collect(),
        };
        Ok(Self { partition, reduced })
    }

    /// `|A_Z|`.
    pub fn cardinality(&self) -> usize {
        self.partition.len()
    }
}

pub fn causal_factorization(c: &Channel) -> Factorization {
    causal_factorization_with_tol(c, DEFAULT_ROW_TOL)
}

pub fn causal_factorization_with_tol(c: &Channel, tol: f64) -> Factorization {
    Factorization::from_partition(c, causal_partition(c, tol))
        .expect("causal partition always covers the inputs")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowViolation {
    pub input: usize,
    pub output: usize,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorizationReport {
    pub valid: bool,
    pub issues: Vec<String>,
    pub violations: Vec<RowViolation>,
}

/// Checks `P(Y|Z=f(x)) = P(Y|X=x)` for every input.
pub fn verify_factorization(c: &Channel, f: &Factorization, tol: f64) -> FactorizationReport {
    let mut issues = Vec::new();
    if f.partition.n_elements() != c.n_inputs() {
        issues.push(format!(
            "partition covers {} inputs, channel has {}",
            f.partition.n_elements(),
            c.n_inputs()
        ));
    }
    if f.reduced.n_inputs() != f.partition.len() {
        issues.push(format!(
            "reduced channel has {} rows for {} classes",
            f.reduced.n_inputs(),
            f.partition.len()
        ));
    }
    if f.reduced.n_outputs() != c.n_outputs() {
        issues.push("reduced channel output alphabet differs".into());
    }
    let mut violations = Vec::new();
    if issues.is_empty() {
        for x in 0..c.n_inputs() {
            let z = f.partition.class_of(x);
            for (y, (p, q)) in c.row(x).iter().zip(f.reduced.row(z)).enumerate() {
                let delta = (p - q).abs();
                if delta > tol {
                    violations.push(RowViolation {
                        input: x,
                        output: y,
                        delta,
                    });
                }
            }
        }
    }
    FactorizationReport {
        valid: issues.is_empty() && violations.is_empty(),
        issues,
        violations,
    }
}

/// Probability distribution over a finite alphabet.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidDistribution(format!("entry {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(Self(probs))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn has_full_support(&self) -> bool {
        self.0.iter().all(|&p| p > 0.0)
    }
}

/// `-Σ p log₂ p`, with `0 log 0 = 0`.
pub fn shannon_entropy(d: &Distribution) -> f64 {
    entropy_bits(d.probs())
}

pub(crate) fn entropy_bits(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .fold(0.0, |acc, &p| acc - p * p.log2())
}

/// Distribution of the class variable: class probability is the sum over members.
pub fn pushforward(d: &Distribution, p: &Partition) -> Result<Distribution> {
    if d.len() != p.n_elements() {
        return Err(Error::AlphabetMismatch(d.len(), p.n_elements()));
    }
    Ok(Distribution(
        p.classes()
            .iter()
            .map(|class| class.iter().map(|&x| d.0[x]).sum())
            .collect(),
    ))
}

/// Bhattacharyya coefficient `Σ_k √(q1(k) q2(k))`.
pub fn classical_fidelity(q1: &[f64], q2: &[f64]) -> Result<f64> {
    if q1.len() != q2.len() {
        return Err(Error::AlphabetMismatch(q1.len(), q2.len()));
    }
    Ok(q1.iter().zip(q2).fold(0.0, |acc, (a, b)| acc + (a * b).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use rand::Rng;
    use rand::seq::SliceRandom;

    fn classes(p: &Partition) -> Vec<Vec<usize>> {
        p.classes().to_vec()
    }

    #[test]
    fn rbsc_causal_partition() {
        let c = Channel::rbsc(0.3);
        assert_eq!(classes(&causal_partition(&c, 1e-9)), vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn identical_rows_collapse() {
        let row = vec![0.2, 0.5, 0.3];
        let c = Channel::from_rows(vec![row.clone(); 5]).unwrap();
        assert_eq!(causal_partition(&c, 1e-9).len(), 1);
    }

    #[test]
    fn permutation_channel_is_already_causal() {
        let c = Channel::from_rows(vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ])
        .unwrap();
        let f = causal_factorization(&c);
        assert_eq!(f.partition, Partition::singletons(3));
        assert_eq!(f.reduced, c);
    }

    #[test]
    fn rbsc_reduced_channel() {
        let f = causal_factorization(&Channel::rbsc(0.3));
        assert_eq!(f.reduced.rows(), &[vec![0.7, 0.3], vec![0.3, 0.7]]);
        assert_eq!(f.cardinality(), 2);
    }

    #[test]
    fn duplicated_rows_give_planted_class_count() {
        let mut rng = sampling::rng(42, 0);
        let base: Vec<Vec<f64>> = (0..3).map(|_| sampling::random_distribution(&mut rng, 4)).collect();
        let mut rows: Vec<Vec<f64>> = base.iter().chain(base.iter()).cloned().collect();
        rows.shuffle(&mut rng);
        let c = Channel::from_rows(rows).unwrap();
        // Oracle: count distinct rows by pairwise comparison.
        let mut distinct: Vec<&Vec<f64>> = Vec::new();
        for r in c.rows() {
            if !distinct.contains(&r) {
                distinct.push(r);
            }
        }
        assert_eq!(distinct.len(), 3);
        assert_eq!(causal_factorization(&c).cardinality(), 3);
    }

    #[test]
    fn degenerate_alphabets() {
        let one_input = Channel::from_rows(vec![vec![0.25, 0.75]]).unwrap();
        assert_eq!(causal_factorization(&one_input).cardinality(), 1);
        let one_output = Channel::from_rows(vec![vec![1.0]; 4]).unwrap();
        assert_eq!(causal_factorization(&one_output).cardinality(), 1);
    }

    #[test]
    fn invalid_channels_rejected() {
        assert!(Channel::from_rows(vec![vec![0.5, 0.4]]).is_err());
        assert!(Channel::from_rows(vec![vec![1.5, -0.5]]).is_err());
        assert!(Channel::from_rows(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(Channel::from_rows(vec![]).is_err());
    }

    #[test]
    fn entropy_examples() {
        let h = |v: Vec<f64>| shannon_entropy(&Distribution::new(v).unwrap());
        assert_eq!(h(vec![0.5, 0.5]), 1.0);
        assert_eq!(h(vec![1.0, 0.0]), 0.0);
        let expected = 1.459_147_917_027_244_8;
        assert!((h(vec![3.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0]) - expected).abs() < 1e-12);
        assert!((expected - 1.4591f64).abs() < 5e-5);
    }

    #[test]
    fn pushforward_examples() {
        let causal = causal_partition(&Channel::rbsc(0.3), 1e-9);
        let z = pushforward(&Distribution::uniform(4), &causal).unwrap();
        assert_eq!(z.probs(), &[0.5, 0.5]);
        let alpha = 0.4;
        let d = Distribution::new(vec![alpha / 2.0, (1.0 - alpha) / 2.0, alpha / 2.0, (1.0 - alpha) / 2.0]).unwrap();
        let z = pushforward(&d, &causal).unwrap();
        assert!((z.probs()[0] - alpha).abs() < 1e-15);
        assert!((z.probs()[1] - (1.0 - alpha)).abs() < 1e-15);
        let d = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(pushforward(&d, &Partition::singletons(4)).unwrap(), d);
    }

    #[test]
    fn fidelity_examples() {
        let q = [0.2, 0.3, 0.5];
        assert!((classical_fidelity(&q, &q).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(classical_fidelity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let f = classical_fidelity(&[0.7, 0.3], &[0.3, 0.7]).unwrap();
        assert!((f - 2.0 * 0.21f64.sqrt()).abs() < 1e-15);
        assert!((f - 0.9165).abs() < 5e-5);
        assert!(matches!(
            classical_fidelity(&[1.0], &[0.5, 0.5]),
            Err(Error::AlphabetMismatch(1, 2))
        ));
    }

    #[test]
    fn verify_examples() {
        let c = Channel::rbsc(0.3);
        assert!(verify_factorization(&c, &causal_factorization(&c), 1e-12).valid);

        let merged = Partition::from_classes(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let f = Factorization::from_partition(&c, merged).unwrap();
        let report = verify_factorization(&c, &f, 1e-9);
        assert!(!report.valid);
        let v = report.violations.iter().find(|v| v.input == 1 && v.output == 0).unwrap();
        assert!((v.delta - 0.4).abs() < 1e-12);

        let refined = Partition::from_classes(4, vec![vec![0], vec![2], vec![1, 3]]).unwrap();
        let f = Factorization::from_partition(&c, refined).unwrap();
        assert!(verify_factorization(&c, &f, 1e-12).valid);
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::from_classes(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::from_classes(3, vec![vec![0, 1]]).is_err());
        assert!(Partition::from_classes(2, vec![vec![0, 5], vec![1]]).is_err());
        let p = Partition::from_classes(4, vec![vec![3, 1], vec![2, 0]]).unwrap();
        assert_eq!(p.classes(), &[vec![0, 2], vec![1, 3]]);
        assert_eq!(Partition::from_assignment(&['a', 'b', 'a', 'b']), p);
    }

    #[test]
    fn causal_partition_is_an_equivalence() {
        let mut rng = sampling::rng(5, 0);
        for _ in 0..100 {
            let n_in = rng.random_range(1..=8);
            let n_out = rng.random_range(1..=6);
            let c = sampling::random_channel(&mut rng, n_in, n_out);
            let p = causal_partition(&c, 1e-9);
            let related = |a: usize, b: usize| p.class_of(a) == p.class_of(b);
            for a in 0..n_in {
                assert!(related(a, a));
                for b in 0..n_in {
                    assert_eq!(related(a, b), related(b, a));
                    // Planted duplicates are exact, so the relation is row equality.
                    assert_eq!(related(a, b), c.row(a) == c.row(b));
                    for d in 0..n_in {
                        if related(a, b) && related(b, d) {
                            assert!(related(a, d));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn coarse_entropy_is_lower() {
        let mut rng = sampling::rng(6, 0);
        for _ in 0..100 {
            let n_in = rng.random_range(1..=8);
            let c = sampling::random_channel(&mut rng, n_in, 3);
            let d = Distribution::new(sampling::random_distribution(&mut rng, c.n_inputs())).unwrap();
            let p = causal_partition(&c, 1e-9);
            let hz = shannon_entropy(&pushforward(&d, &p).unwrap());
            let hx = shannon_entropy(&d);
            if p.len() == c.n_inputs() {
                assert!((hz - hx).abs() < 1e-12);
            } else {
                assert!(hz < hx);
            }
        }
    }
}
