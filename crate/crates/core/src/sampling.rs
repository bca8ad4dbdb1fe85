//! Seeded generators for channels, distributions and quantum states.
//!
//! Every random check in the crate draws from a ChaCha stream derived from a
//! `(seed, stream)` pair, so results do not depend on how work is split
//! across threads.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1, StandardNormal};

use crate::channel::Channel;
use crate::phase::PhasedQubitEnsemble;
use crate::qfactor::PureState;

pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Uniform (flat Dirichlet) point on the probability simplex, full support.
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).map(|x: f64| x.max(1e-12)).collect();
    let total: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / total).collect();
    fix_sum(&mut p);
    p
}

/// Distribution that may contain exact zeros (roughly one entry in four).
pub fn random_sparse_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let keep = rng.random_range(0..n);
    let w: Vec<f64> = (0..n)
        .map(|k| {
            if k != keep && rng.random_bool(0.25) {
                0.0
            } else {
                Exp1.sample(rng)
            }
        })
        .map(|x: f64| if x > 0.0 { x.max(1e-12) } else { 0.0 })
        .collect();
    let total: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / total).collect();
    fix_sum(&mut p);
    p
}

// Push the rounding residue into the largest entry so rows sum to 1 to the last bit or two.
fn fix_sum(p: &mut [f64]) {
    let sum: f64 = p.iter().sum();
    if let Some(k) = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])) {
        p[k] += 1.0 - sum;
    }
}

/// Random channel with planted duplicate rows: `n_in` inputs drawn from a
/// random number of distinct rows (each used at least once).
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R, n_in: usize, n_out: usize) -> Channel {
    let distinct = rng.random_range(1..=n_in);
    random_channel_with_classes(rng, n_in, n_out, distinct)
}

/// Like [`random_channel`] with exactly `distinct` different rows.
pub fn random_channel_with_classes<R: Rng + ?Sized>(
    rng: &mut R,
    n_in: usize,
    n_out: usize,
    distinct: usize,
) -> Channel {
    assert!(distinct >= 1 && distinct <= n_in);
    // A single outcome admits only one distribution.
    let distinct = if n_out == 1 { 1 } else { distinct };
    let base: Vec<Vec<f64>> = loop {
        let rows: Vec<Vec<f64>> = (0..distinct)
            .map(|_| {
                if rng.random_bool(0.3) {
                    random_sparse_distribution(rng, n_out)
                } else {
                    random_distribution(rng, n_out)
                }
            })
            .collect();
        let unique = rows
            .iter()
            .enumerate()
            .all(|(i, r)| rows[..i].iter().all(|s| max_gap(r, s) > 1e-6));
        if unique {
            break rows;
        }
    };
    let mut assignment: Vec<usize> = (0..distinct)
        .chain((distinct..n_in).map(|_| rng.random_range(0..distinct)))
        .collect();
    assignment.shuffle(rng);
    Channel::from_rows(assignment.iter().map(|&k| base[k].clone()).collect())
        .expect("generated rows are stochastic")
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Haar-random pure state.
pub fn random_pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> PureState {
    let amps: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    PureState::normalized(amps).expect("gaussian vector is nonzero")
}

/// Uniform point on the unit sphere of `R^k`.
pub fn random_real_unit_vector<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Qubit ensemble with random weights, magnitude angles in `[0.05, π/2 - 0.05]`
/// (so `a_j, b_j` stay nonzero) and the given phases.
pub fn random_phased_ensemble<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    random_phases: bool,
) -> PhasedQubitEnsemble {
    let weights = random_distribution(rng, n);
    let angles: Vec<f64> = (0..n)
        .map(|_| rng.random_range(0.05..std::f64::consts::FRAC_PI_2 - 0.05))
        .collect();
    let phases = (0..n)
        .map(|_| if random_phases { rng.random_range(0.0..std::f64::consts::TAU) } else { 0.0 })
        .collect();
    PhasedQubitEnsemble::from_angles(weights, &angles, phases).expect("angles give unit magnitudes")
}
