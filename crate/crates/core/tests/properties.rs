use chanfactor::channel::{causal_partition, pushforward, shannon_entropy, Distribution, Partition};
use chanfactor::qfactor::{
    average_state, g0_construct, is_opwo, merge, quantum_fidelity, signal_ensemble,
    two_class_search, verify_qfactorization, von_neumann_entropy, DensityMatrix, Ensemble,
    PureEnsemble, PureState, DEFAULT_OVERLAP_TOL,
};
use chanfactor::{sampling, Channel};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn planted_rows() -> impl Strategy<Value = (Vec<usize>, Vec<Vec<u32>>)> {
    (1usize..6, 2usize..5).prop_flat_map(|(k, n_out)| {
        let rows = proptest::collection::vec(proptest::collection::vec(1u32..100, n_out), k);
        let assignment = proptest::collection::vec(0..k, 1..10);
        (assignment, rows)
    })
}

fn normalise(row: &[u32]) -> Vec<f64> {
    let total: u32 = row.iter().sum();
    row.iter().map(|&v| v as f64 / total as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    // Inputs fall into the same class exactly when they share a row.
    #[test]
    fn causal_partition_recovers_planted_rows((assignment, raw) in planted_rows()) {
        let base: Vec<Vec<f64>> = raw.iter().map(|r| normalise(r)).collect();
        let rows: Vec<Vec<f64>> = assignment.iter().map(|&k| base[k].clone()).collect();
        let c = Channel::from_rows(rows.clone()).unwrap();
        let p = causal_partition(&c, 1e-9);
        for x in 0..rows.len() {
            for y in 0..rows.len() {
                prop_assert_eq!(p.class_of(x) == p.class_of(y), rows[x] == rows[y]);
            }
        }
        let q = g0_construct(&c);
        prop_assert!(verify_qfactorization(&c, &q, 1e-12).valid);
    }

    #[test]
    fn signal_entropy_never_exceeds_class_entropy(seed in 0u64..10_000) {
        let mut rng = sampling::rng(seed, 1);
        let n_in = rng.random_range(1..=6);
        let n_out = rng.random_range(1..=5);
        let c = sampling::random_channel(&mut rng, n_in, n_out);
        let d = Distribution::new(sampling::random_distribution(&mut rng, n_in)).unwrap();
        let q = g0_construct(&c);
        let s = von_neumann_entropy(&average_state(&signal_ensemble(&q, &d).unwrap()));
        let h_z = shannon_entropy(&pushforward(&d, &q.partition).unwrap());
        prop_assert!(s <= h_z + 1e-9);
        prop_assert!(h_z <= shannon_entropy(&d) + 1e-9);
    }
}

#[test]
fn two_state_entropy_falls_as_overlap_grows() {
    for p in [0.1, 0.3, 0.5, 0.8] {
        let mut last = f64::INFINITY;
        for k in 0..100 {
            let theta = std::f64::consts::FRAC_PI_2 * (1.0 - k as f64 / 99.0);
            let second = PureState::from_real(&[theta.cos(), theta.sin()]).unwrap();
            let e = Ensemble::from_pure(vec![p, 1.0 - p], &[PureState::basis(2, 0), second]).unwrap();
            let s = von_neumann_entropy(&average_state(&e));
            assert!(s < last, "p={p} step {k}: {s} >= {last}");
            last = s;
        }
        assert!(last.abs() < 1e-12);
    }
}

#[test]
fn merging_never_raises_both_directions() {
    let mut rng = sampling::rng(404, 0);
    for _ in 0..100 {
        let dim = rng.random_range(2..=4);
        let n = rng.random_range(2..=5);
        let states: Vec<DensityMatrix> = (0..n)
            .map(|_| {
                let mix = rng.random_range(0.0..1.0);
                let psi = sampling::random_pure_state(&mut rng, dim);
                let pure = DensityMatrix::from_pure(&psi);
                let mm = DensityMatrix::maximally_mixed(dim);
                DensityMatrix::new(&pure.matrix().scale(1.0 - mix) + &mm.matrix().scale(mix)).unwrap()
            })
            .collect();
        let weights = sampling::random_distribution(&mut rng, n);
        let e = Ensemble::new(weights, states).unwrap();
        let s = von_neumann_entropy(&average_state(&e));
        let j = rng.random_range(0..n);
        let k = (j + rng.random_range(1..n)) % n;
        let m = merge(&e, j, k).unwrap();
        let a = von_neumann_entropy(&average_state(&m.j_into_k));
        let b = von_neumann_entropy(&average_state(&m.k_into_j));
        assert!(a.min(b) <= s + 1e-9);
    }
}

#[test]
fn opwo_detection_follows_construction() {
    let mut rng = sampling::rng(505, 0);
    for _ in 0..20 {
        let pairs = rng.random_range(1..=3);
        let dim = 2 * pairs;
        let mut states = Vec::new();
        for p in 0..pairs {
            for _ in 0..2 {
                let mut amps = vec![Complex64::new(0.0, 0.0); dim];
                amps[2 * p] = Complex64::new(rng.random_range(0.2..1.0), 0.0);
                amps[2 * p + 1] = Complex64::from_polar(rng.random_range(0.2..1.0), rng.random_range(0.0..6.0));
                states.push(PureState::normalized(amps).unwrap());
            }
        }
        let n = states.len();
        let e = PureEnsemble::new(sampling::random_distribution(&mut rng, n), states.clone()).unwrap();
        assert!(is_opwo(&e, DEFAULT_OVERLAP_TOL));

        // A state spread over two planes overlaps four others.
        let mut amps = vec![Complex64::new(1.0, 0.0); dim];
        amps[dim - 1] = Complex64::new(0.5, 0.0);
        states.push(PureState::normalized(amps).unwrap());
        if pairs > 1 {
            let e = PureEnsemble::new(vec![1.0 / (n + 1) as f64; n + 1], states).unwrap();
            assert!(!is_opwo(&e, DEFAULT_OVERLAP_TOL));
        }
    }
}

#[test]
fn fidelity_is_symmetric_and_bounded() {
    let mut rng = sampling::rng(606, 0);
    for _ in 0..50 {
        let dim = rng.random_range(2..=5);
        let a = DensityMatrix::from_pure(&sampling::random_pure_state(&mut rng, dim));
        let w = rng.random_range(0.0..1.0);
        let b = DensityMatrix::new(
            &DensityMatrix::from_pure(&sampling::random_pure_state(&mut rng, dim)).matrix().scale(w)
                + &DensityMatrix::maximally_mixed(dim).matrix().scale(1.0 - w),
        )
        .unwrap();
        let ab = quantum_fidelity(&a, &b).unwrap();
        let ba = quantum_fidelity(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&ab));
    }
}

#[test]
fn search_is_reproducible_across_thread_counts() {
    let c = Channel::rbsc(0.15);
    let d = Distribution::new(vec![0.4, 0.1, 0.2, 0.3]).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| two_class_search(&c, &d, 300, 77).unwrap());
    let b = four.install(|| two_class_search(&c, &d, 300, 77).unwrap());
    assert_eq!(a, b);
    assert!(a.evidence_only);
}

#[test]
fn coarser_than_causal_is_rejected_by_reduction() {
    let c = Channel::rbsc(0.3);
    let coarse = Partition::from_classes(4, vec![vec![0, 1, 2, 3]]).unwrap();
    let f = chanfactor::channel::Factorization::from_partition(&c, coarse).unwrap();
    assert!(!chanfactor::verify_factorization(&c, &f, 1e-9).valid);
}

#[test]
fn two_class_channels_have_no_better_rebit_factorization() {
    for seed in 0..5u64 {
        let mut rng = sampling::rng(seed, 9);
        let n_in = rng.random_range(2..=6);
        let n_out = rng.random_range(2..=4);
        let c = sampling::random_channel_with_classes(&mut rng, n_in, n_out, 2);
        let d = Distribution::new(sampling::random_distribution(&mut rng, n_in)).unwrap();
        let r = two_class_search(&c, &d, 1000, seed).unwrap();
        assert_eq!(r.invalid, 0);
        assert_eq!(r.below_g0, 0, "seed {seed}: {r:?}");
        assert!(r.min_alternative_entropy >= r.g0_entropy - 1e-9);
    }
}
